#pragma once

#include "moeplan/config.hpp"

namespace moeplan {

enum class ZeroStage { Baseline, O1, O2, O3 };

enum class ActivationMode {
  NoParallel,
  PpTpEp,
  PpTpEpSp,
  SelectiveRecompute,
  FullRecompute,
};

struct WeightMemory {
  double psi1 = 0.0;  // non-MoE weight bytes per GPU
  double psi2 = 0.0;  // MoE weight bytes per GPU
};

struct MemoryBreakdown {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double act = 0.0;
  double total = 0.0;
};

// Adam-style byte multiplier per parameter: fp16 weights and gradients plus
// fp32 momentum, variance and master weights; the optimizer stages shard the
// indicated slices across the data-parallel group.
inline double zero_multiplier(ZeroStage stage, int d) {
  switch (stage) {
    case ZeroStage::Baseline: return 16.0;
    case ZeroStage::O1: return 4.0 + 12.0 / d;
    case ZeroStage::O2: return 2.0 + 14.0 / d;
    case ZeroStage::O3: return 16.0 / d;
  }
  throw std::invalid_argument("zero_multiplier: unknown stage");
}

// Fractional bytes are kept exact; rounding is a presentation concern.
inline WeightMemory weight_memory(const ModelSpec& m, const ParallelSpec& par,
                                  ZeroStage stage) {
  const double mult = zero_multiplier(stage, par.d);
  const double pt = double(par.p) * par.t;
  return {mult * double(m.p1) / pt, mult * double(m.p2) / (pt * par.e)};
}

inline double activation_memory(const ModelSpec& m, const ParallelSpec& par,
                                ActivationMode mode) {
  const double bshl = double(m.b) * double(m.s) * double(m.h) * double(m.l);
  const double attn = 5.0 * double(m.a) * double(m.s) / double(m.h);
  const double ke = double(m.k) / par.e;
  const double t = par.t;
  switch (mode) {
    case ActivationMode::NoParallel:
      return bshl * (13.0 + 21.0 * double(m.k) + attn);
    case ActivationMode::PpTpEp:
      return bshl * (5.0 + 5.0 * ke + (8.0 + 16.0 * ke) / t + attn);
    case ActivationMode::PpTpEpSp:
      return bshl * ((13.0 + 21.0 * ke) / t + attn);
    case ActivationMode::SelectiveRecompute:
      return bshl * (13.0 + 21.0 * ke) / t;
    case ActivationMode::FullRecompute:
      return 2.0 * bshl / t;
  }
  throw std::invalid_argument("activation_memory: unknown mode");
}

inline MemoryBreakdown total_memory(const ModelSpec& m, const ParallelSpec& par,
                                    ZeroStage stage, ActivationMode mode) {
  const WeightMemory w = weight_memory(m, par, stage);
  const double act = activation_memory(m, par, mode);
  return {w.psi1, w.psi2, act, w.psi1 + w.psi2 + act};
}

}  // namespace moeplan
