#pragma once

#include "moeplan/config.hpp"

namespace moeplan {

// AllToAll execution levels. O1 replaces the monolithic exchange with
// drop + inter-node AllToAll + intra-node AllGather; O2 pipelines AllToAll
// with AllGather across chunks; O3 additionally pipelines AllGather with the
// D2D reorder copies.
enum class StrategyLevel { Baseline, O1, O2, O3 };

inline const char* to_string(StrategyLevel level) {
  switch (level) {
    case StrategyLevel::Baseline: return "Baseline";
    case StrategyLevel::O1: return "O1";
    case StrategyLevel::O2: return "O2";
    case StrategyLevel::O3: return "O3";
  }
  return "?";
}

// Fixed per-call launch overheads, independent of message size. Zero by
// default so the closed forms match the analytic expressions; calibration may
// raise them to capture small-volume behavior.
struct OverheadModel {
  double alpha_comm = 0.0;  // seconds per communication call
  double alpha_copy = 0.0;  // seconds per D2D copy
};

// Per-chunk stage times for an n-way split of a `volume`-byte transfer.
struct ChunkTiming {
  double aa = 0.0;   // seconds, one chunk's inter-node AllToAll
  double ag = 0.0;   // seconds, one chunk's intra-node AllGather
  double d2d = 0.0;  // seconds, one chunk's device copy
  int n = 1;
  double volume = 0.0;  // total bytes before splitting
};

// Total bytes moved by one monolithic AllToAll: b * s * h * bpe.
inline double traffic_volume(const ModelSpec& m) {
  return double(m.b) * double(m.s) * double(m.h) * double(m.bpe);
}

// One chunk's inter-node AllToAll: volume/(n*t) bytes per rank, of which the
// (e-1)/e fraction crosses node boundaries. Efficiency is looked up at the
// per-call volume.
inline double chunk_alltoall_time(double volume, int n_chunks, int t, int e, double b1,
                                  const EfficiencyCurve& curve,
                                  const OverheadModel& ov = {}) {
  if (n_chunks < 1 || t < 1 || e < 1) {
    throw std::invalid_argument("chunk_alltoall_time: n, t, e must be >= 1");
  }
  if (volume < 0.0) throw std::invalid_argument("chunk_alltoall_time: negative volume");
  if (e == 1 || volume == 0.0) return ov.alpha_comm;
  const double per_call = volume / (double(n_chunks) * t);
  const double r1 = lookup_efficiency(curve, per_call);
  return ov.alpha_comm + per_call * (e - 1.0) / e / (b1 * r1);
}

// One chunk's intra-node AllGather over the t-rank tensor group: each rank
// receives (t-1)/t of the volume/n chunk.
inline double chunk_allgather_time(double volume, int n_chunks, int t, double b2,
                                   const EfficiencyCurve& curve,
                                   const OverheadModel& ov = {}) {
  if (n_chunks < 1 || t < 1) {
    throw std::invalid_argument("chunk_allgather_time: n and t must be >= 1");
  }
  if (volume < 0.0) throw std::invalid_argument("chunk_allgather_time: negative volume");
  if (t == 1 || volume == 0.0) return ov.alpha_comm;
  const double per_call = volume / n_chunks;
  const double r2 = lookup_efficiency(curve, per_call);
  return ov.alpha_comm + per_call * (t - 1.0) / t / (b2 * r2);
}

// One chunk's device-local reorder copy.
inline double chunk_d2d_time(double volume, int n_chunks, double b3,
                             const EfficiencyCurve& curve,
                             const OverheadModel& ov = {}) {
  if (n_chunks < 1) throw std::invalid_argument("chunk_d2d_time: n must be >= 1");
  if (volume < 0.0) throw std::invalid_argument("chunk_d2d_time: negative volume");
  if (volume == 0.0) return ov.alpha_copy;
  const double per_call = volume / n_chunks;
  const double r3 = lookup_efficiency(curve, per_call);
  return ov.alpha_copy + per_call / (b3 * r3);
}

// Monolithic AllToAll. Efficiency is looked up at the full volume, unlike the
// chunked forms which use post-drop, post-chunk volumes.
inline double baseline_time(double volume, int e, double b1,
                            const EfficiencyCurve& curve,
                            const OverheadModel& ov = {}) {
  if (e < 1) throw std::invalid_argument("baseline_time: e must be >= 1");
  if (volume < 0.0) throw std::invalid_argument("baseline_time: negative volume");
  if (e == 1 || volume == 0.0) return ov.alpha_comm;
  const double r1 = lookup_efficiency(curve, volume);
  return ov.alpha_comm + volume * (e - 1.0) / e / (b1 * r1);
}

// Drop + AllToAll + AllGather executed back to back (no pipelining). With
// t = 1 the drop and gather degenerate and no gather call is launched, so the
// cost equals the baseline.
inline double o1_time(double volume, int t, int e, double b1, double b2,
                      const CurveSet& curves, const OverheadModel& ov = {}) {
  if (t < 1 || e < 1) throw std::invalid_argument("o1_time: t and e must be >= 1");
  if (t == 1) return baseline_time(volume, e, b1, curves.alltoall, ov);
  return chunk_alltoall_time(volume, 1, t, e, b1, curves.alltoall, ov) +
         chunk_allgather_time(volume, 1, t, b2, curves.allgather, ov);
}

}  // namespace moeplan
