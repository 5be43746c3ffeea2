#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace moeplan {

// Transformer/MoE shape and training hyperparameters consumed by the cost
// and memory models. Parameter counts are totals across the whole model.
struct ModelSpec {
  std::int64_t b = 1;   // microbatch size
  std::int64_t s = 1;   // sequence length in tokens
  std::int64_t h = 1;   // hidden size
  std::int64_t a = 1;   // attention head count
  std::int64_t l = 1;   // transformer layer count
  std::int64_t k = 1;   // experts selected per token
  std::int64_t p1 = 0;  // non-MoE parameter count
  std::int64_t p2 = 0;  // MoE parameter count
  int bpe = 2;          // bytes per element on the wire
};

struct ParallelSpec {
  int d = 1;   // data parallelism
  int p = 1;   // pipeline parallelism
  int t = 1;   // tensor parallelism (intra-node)
  int e = 1;   // expert parallelism
  int cp = 1;  // context parallelism
};

struct ClusterSpec {
  int nodes = 1;
  int gpus_per_node = 1;
  double b1 = 1.0;  // inter-node unidirectional bandwidth, bytes/s
  double b2 = 1.0;  // intra-node unidirectional bandwidth, bytes/s
  double b3 = 1.0;  // device memory bandwidth, bytes/s
  double peak_flops = 1.0;           // per-GPU peak FLOP/s
  std::int64_t switch_capacity = 1;  // endpoints the inter-node switch fabric supports
};

// Measured mapping from message volume to achieved fraction of theoretical
// bandwidth. Volumes are strictly increasing. Lookups interpolate linearly in
// log(volume) and clamp outside the covered range. i_minimal is the volume
// below which per-call launch overhead dominates; chunk searches stop
// splitting once a chunk would fall under it.
struct CurvePoint {
  double volume = 0.0;      // bytes
  double efficiency = 1.0;  // fraction of theoretical bandwidth, in (0, 1]
};

struct EfficiencyCurve {
  std::vector<CurvePoint> points;
  double i_minimal = 0.0;

  static EfficiencyCurve constant(double efficiency, double i_minimal = 0.0) {
    return EfficiencyCurve{{{1.0, efficiency}}, i_minimal};
  }
};

// One curve per data-movement primitive.
struct CurveSet {
  EfficiencyCurve alltoall;
  EfficiencyCurve allgather;
  EfficiencyCurve d2d;
};

inline double lookup_efficiency(const EfficiencyCurve& curve, double volume) {
  if (!(volume > 0.0)) {
    throw std::invalid_argument("lookup_efficiency: volume must be positive");
  }
  if (curve.points.empty()) {
    throw std::invalid_argument("lookup_efficiency: curve has no points");
  }
  const auto& pts = curve.points;
  if (volume <= pts.front().volume) return pts.front().efficiency;
  if (volume >= pts.back().volume) return pts.back().efficiency;
  const auto hi = std::upper_bound(
      pts.begin(), pts.end(), volume,
      [](double v, const CurvePoint& p) { return v < p.volume; });
  const auto lo = hi - 1;
  const double f = (std::log(volume) - std::log(lo->volume)) /
                   (std::log(hi->volume) - std::log(lo->volume));
  return lo->efficiency + (hi->efficiency - lo->efficiency) * f;
}

inline std::vector<std::string> check(const ModelSpec& m) {
  std::vector<std::string> v;
  const auto positive = [&v](std::int64_t x, const char* name) {
    if (x <= 0) v.push_back(std::string("model: ") + name + " must be positive");
  };
  positive(m.b, "b");
  positive(m.s, "s");
  positive(m.h, "h");
  positive(m.a, "a");
  positive(m.l, "l");
  positive(m.k, "k");
  if (m.p1 < 0) v.push_back("model: p1 must be non-negative");
  if (m.p2 < 0) v.push_back("model: p2 must be non-negative");
  if (m.bpe != 1 && m.bpe != 2 && m.bpe != 4 && m.bpe != 8) {
    v.push_back("model: bpe must be one of 1, 2, 4, 8");
  }
  return v;
}

inline std::vector<std::string> check(const ParallelSpec& p) {
  std::vector<std::string> v;
  const auto degree = [&v](int x, const char* name) {
    if (x < 1) v.push_back(std::string("parallel: ") + name + " must be >= 1");
  };
  degree(p.d, "d");
  degree(p.p, "p");
  degree(p.t, "t");
  degree(p.e, "e");
  degree(p.cp, "cp");
  return v;
}

inline std::vector<std::string> check(const ClusterSpec& c) {
  std::vector<std::string> v;
  if (c.nodes < 1) v.push_back("cluster: nodes must be >= 1");
  if (c.gpus_per_node < 1) v.push_back("cluster: gpus_per_node must be >= 1");
  if (!(c.b1 > 0.0)) v.push_back("cluster: b1 must be positive");
  if (!(c.b2 > 0.0)) v.push_back("cluster: b2 must be positive");
  if (c.b2 < c.b1) v.push_back("cluster: b2 must be >= b1 (intra-node links are the fast ones)");
  if (!(c.b3 > 0.0)) v.push_back("cluster: b3 must be positive");
  if (!(c.peak_flops > 0.0)) v.push_back("cluster: peak_flops must be positive");
  if (c.switch_capacity < 1) v.push_back("cluster: switch_capacity must be >= 1");
  return v;
}

// Cross-spec placement rules. Violations are data, not failures; the report
// is empty exactly when t divides gpus_per_node, e fits the t-sized slots,
// and d*p*t*cp fits the cluster.
inline std::vector<std::string> validate(const ModelSpec&, const ParallelSpec& par,
                                         const ClusterSpec& cluster) {
  std::vector<std::string> v;
  if (par.t < 1 || cluster.gpus_per_node % par.t != 0) {
    v.push_back("t (" + std::to_string(par.t) + ") does not divide gpus_per_node (" +
                std::to_string(cluster.gpus_per_node) + ")");
  } else {
    const std::int64_t slots =
        std::int64_t(cluster.nodes) * (cluster.gpus_per_node / par.t);
    if (par.e > slots) {
      v.push_back("e (" + std::to_string(par.e) + ") exceeds the " + std::to_string(slots) +
                  " tensor-group slots of the cluster");
    }
  }
  const std::int64_t gpus = std::int64_t(cluster.nodes) * cluster.gpus_per_node;
  const std::int64_t product =
      std::int64_t(par.d) * par.p * par.t * par.cp;
  if (product > gpus) {
    v.push_back("d*p*t*cp (" + std::to_string(product) + ") exceeds the " +
                std::to_string(gpus) + " GPUs of the cluster");
  }
  return v;
}

}  // namespace moeplan
