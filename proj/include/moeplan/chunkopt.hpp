#pragma once

#include "moeplan/commcost.hpp"

#include <cstdint>

namespace moeplan {

struct StrategyInapplicableError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Pipeline completion time of one n-way chunked phase under the O2 schedule
// (AllGather and the reorder copy share a stream). Whichever side of the
// pipeline is slower repeats n times; the other contributes once.
inline double o2_score(double aa, double ag, double d2d, int n) {
  return aa < ag + d2d ? aa + (ag + d2d) * n : aa * n + ag + d2d;
}

// Same under the O3 schedule: the copy runs on its own stream, so only the
// AllGather repeats against the AllToAll.
inline double o3_score(double aa, double ag, double d2d, int n) {
  return aa < ag ? aa + ag * n + d2d : aa * n + ag + d2d;
}

struct ChunkSearchResult {
  int n_opt = 1;
  double t_pred = 0.0;
  ChunkTiming per_chunk;
  bool feasible = true;  // whether any n passed the i_minimal gate
};

namespace detail {

template <class Score>
ChunkSearchResult chunk_search(const ModelSpec& model, const ParallelSpec& par,
                               const ClusterSpec& cluster, const CurveSet& curves,
                               const OverheadModel& ov, int n_cap, Score score) {
  if (par.t < 2 || par.e < 2) {
    throw StrategyInapplicableError(
        "chunked alltoall needs t >= 2 and e >= 2");
  }
  const double volume = traffic_volume(model);
  // A chunk holds at least one token, and the enumeration is hard-capped.
  const int n_max = int(std::max<std::int64_t>(
      1, std::min<std::int64_t>(model.s, n_cap)));
  ChunkSearchResult best;
  bool have = false;
  bool feasible = false;
  for (int n = 1; n <= n_max; ++n) {
    const double i_aa = volume / (double(n) * par.t);
    const double i_ag = volume / n;
    const bool passes = i_aa >= curves.alltoall.i_minimal &&
                        i_ag >= curves.allgather.i_minimal;
    if (!passes && n > 1) break;  // per-chunk volumes only shrink from here
    const double aa =
        chunk_alltoall_time(volume, n, par.t, par.e, cluster.b1, curves.alltoall, ov);
    const double ag =
        chunk_allgather_time(volume, n, par.t, cluster.b2, curves.allgather, ov);
    const double dd = chunk_d2d_time(volume, n, cluster.b3, curves.d2d, ov);
    const double total = score(aa, ag, dd, n);
    if (!have || total < best.t_pred) {
      best = ChunkSearchResult{n, total, ChunkTiming{aa, ag, dd, n, volume}, true};
      have = true;
    }
    feasible = feasible || passes;
    if (!passes) break;  // n == 1 is scored even when gated out
  }
  best.feasible = feasible;
  return best;
}

}  // namespace detail

inline ChunkSearchResult o2_search(const ModelSpec& model, const ParallelSpec& par,
                                   const ClusterSpec& cluster, const CurveSet& curves,
                                   const OverheadModel& ov = {}, int n_cap = 64) {
  return detail::chunk_search(model, par, cluster, curves, ov, n_cap,
                              [](double aa, double ag, double dd, int n) {
                                return o2_score(aa, ag, dd, n);
                              });
}

// O3 efficiencies can differ from O2 (the gather and the copy contend for
// memory bandwidth), so callers may pass a separately calibrated curve set.
inline ChunkSearchResult o3_search(const ModelSpec& model, const ParallelSpec& par,
                                   const ClusterSpec& cluster, const CurveSet& curves,
                                   const OverheadModel& ov = {}, int n_cap = 64) {
  return detail::chunk_search(model, par, cluster, curves, ov, n_cap,
                              [](double aa, double ag, double dd, int n) {
                                return o3_score(aa, ag, dd, n);
                              });
}

// Limit of T_O3 / T_baseline as the chunk count grows: the pipeline collapses
// to the AllGather stream while the baseline still pays the full inter-node
// exchange.
inline double asymptotic_speedup(int t, int e, double b1, double b2, double r1,
                                 double r2) {
  if (t < 2 || e < 2) {
    throw StrategyInapplicableError("asymptotic_speedup needs t >= 2 and e >= 2");
  }
  return (t - 1.0) / t * e / (e - 1.0) * (b1 * r1) / (b2 * r2);
}

}  // namespace moeplan
