#pragma once

#include "moeplan/chunkopt.hpp"

namespace moeplan {

struct StrategyAlternative {
  StrategyLevel level = StrategyLevel::Baseline;
  double t_pred = 0.0;
  int n = 1;
};

struct StrategyDecision {
  StrategyLevel level = StrategyLevel::Baseline;
  int n = 1;
  double t_pred = 0.0;
  std::vector<StrategyAlternative> alternatives;  // every applicable level, once
};

// Scores every applicable level and returns the argmin. Without a tensor
// group (t = 1) the drop is undefined and only the baseline applies; with
// t >= 2 the candidates are O1 and, when e >= 2, the chunk searches. Ties
// break toward the level with fewer moving parts: O1 over O2 over O3.
inline StrategyDecision select_strategy(const ModelSpec& model, const ParallelSpec& par,
                                        const ClusterSpec& cluster, const CurveSet& curves,
                                        const OverheadModel& ov = {}, int n_cap = 64) {
  const double volume = traffic_volume(model);
  if (par.t == 1) {
    const double t_base = baseline_time(volume, par.e, cluster.b1, curves.alltoall, ov);
    return {StrategyLevel::Baseline, 1, t_base,
            {{StrategyLevel::Baseline, t_base, 1}}};
  }
  std::vector<StrategyAlternative> alts;
  alts.push_back({StrategyLevel::O1,
                  o1_time(volume, par.t, par.e, cluster.b1, cluster.b2, curves, ov), 1});
  if (par.e >= 2) {
    const auto o2 = o2_search(model, par, cluster, curves, ov, n_cap);
    alts.push_back({StrategyLevel::O2, o2.t_pred, o2.n_opt});
    const auto o3 = o3_search(model, par, cluster, curves, ov, n_cap);
    alts.push_back({StrategyLevel::O3, o3.t_pred, o3.n_opt});
  }
  const StrategyAlternative* best = &alts.front();
  for (const auto& alt : alts) {
    if (alt.t_pred < best->t_pred) best = &alt;
  }
  return {best->level, best->n, best->t_pred, alts};
}

struct PerfReport {
  double step_latency = 0.0;  // seconds
  double throughput = 0.0;    // tokens per second
  double mfu = 0.0;           // model FLOPs utilization, in [0, 1]
};

// Folds the chosen transfer time into a full training step: every MoE layer
// pays one dispatch and one combine. The caller supplies the non-communication
// step time (measured or modeled). Activated parameters count one expert per
// expert-parallel rank, so the MoE share is k/e of the MoE total.
inline PerfReport estimate_performance(const StrategyDecision& decision,
                                       const ModelSpec& model, const ParallelSpec& par,
                                       const ClusterSpec& cluster, int moe_layer_count,
                                       double non_comm_time) {
  if (non_comm_time < 0.0) {
    throw std::invalid_argument("estimate_performance: non_comm_time must be >= 0");
  }
  if (moe_layer_count < 0) {
    throw std::invalid_argument("estimate_performance: moe_layer_count must be >= 0");
  }
  const double step = non_comm_time + 2.0 * moe_layer_count * decision.t_pred;
  if (!(step > 0.0)) {
    throw std::invalid_argument("estimate_performance: step latency is zero");
  }
  const double tokens = double(model.b) * double(model.s) * par.d;
  const double active_params =
      double(model.p1) + double(model.k) * double(model.p2) / par.e;
  const double total_gpus = double(cluster.nodes) * cluster.gpus_per_node;
  const double mfu = std::clamp(
      6.0 * active_params * tokens / (step * cluster.peak_flops * total_gpus), 0.0, 1.0);
  return {step, tokens / step, mfu};
}

}  // namespace moeplan
