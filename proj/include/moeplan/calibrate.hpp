#pragma once

#include "moeplan/commcost.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace moeplan {

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One benchmark measurement: `volume` is the per-call data size the
// efficiency curves are indexed by, `seconds` the wall time of the call.
struct BenchSample {
  std::string primitive;  // alltoall | allgather | d2d
  double volume = 0.0;    // bytes
  double seconds = 0.0;
};

struct CalibrationSet {
  CurveSet curves;
  OverheadModel overhead;
};

namespace detail {

// Least-squares intercept of time against volume over the smallest half of
// the samples; with a constant efficiency this recovers the fixed launch
// overhead exactly. Degenerate fits (a single distinct volume) yield zero.
inline double small_volume_intercept(std::vector<BenchSample> samples) {
  std::sort(samples.begin(), samples.end(),
            [](const BenchSample& a, const BenchSample& b) { return a.volume < b.volume; });
  const std::size_t take = std::max<std::size_t>(2, samples.size() / 2);
  samples.resize(std::min(take, samples.size()));
  double sv = 0.0, st = 0.0, svv = 0.0, svt = 0.0;
  for (const auto& s : samples) {
    sv += s.volume;
    st += s.seconds;
    svv += s.volume * s.volume;
    svt += s.volume * s.seconds;
  }
  const double count = double(samples.size());
  const double denom = count * svv - sv * sv;
  if (denom <= 0.0) return 0.0;
  const double slope = (count * svt - sv * st) / denom;
  return std::max(0.0, (st - slope * sv) / count);
}

inline EfficiencyCurve fit_curve(const std::vector<BenchSample>& samples,
                                 double wire_fraction, double bandwidth,
                                 const std::string& primitive) {
  std::map<double, std::pair<double, int>> by_volume;  // volume -> (sum eff, count)
  for (const auto& s : samples) {
    if (!(s.volume > 0.0) || !(s.seconds > 0.0)) {
      throw CalibrationError("calibrate: " + primitive +
                             " sample needs positive volume and time");
    }
    const double efficiency = wire_fraction * s.volume / (bandwidth * s.seconds);
    if (!(efficiency > 0.0)) {
      throw CalibrationError("calibrate: " + primitive + " sample implies zero efficiency");
    }
    auto& slot = by_volume[s.volume];
    slot.first += std::min(1.0, efficiency);
    slot.second += 1;
  }
  EfficiencyCurve curve;
  for (const auto& [volume, acc] : by_volume) {
    curve.points.push_back({volume, acc.first / acc.second});
  }
  return curve;
}

}  // namespace detail

// Inverts the cost model on measured collective times: each sample's achieved
// efficiency is its analytic bytes-on-wire over bandwidth * time, with the
// group geometry taken from the cluster (alltoall spans the nodes, allgather
// spans one node's cards). Fixed overheads come from the small-volume
// intercept fit.
inline CalibrationSet calibrate(const std::vector<BenchSample>& samples,
                                const ClusterSpec& cluster) {
  std::map<std::string, std::vector<BenchSample>> groups;
  for (const auto& s : samples) {
    if (s.primitive != "alltoall" && s.primitive != "allgather" && s.primitive != "d2d") {
      throw CalibrationError("calibrate: unknown primitive '" + s.primitive + "'");
    }
    groups[s.primitive].push_back(s);
  }
  for (const char* primitive : {"alltoall", "allgather", "d2d"}) {
    if (groups[primitive].size() < 2) {
      throw CalibrationError(std::string("calibrate: need at least 2 '") + primitive +
                             "' samples, got " + std::to_string(groups[primitive].size()));
    }
  }
  if (cluster.nodes < 2) {
    throw CalibrationError("calibrate: alltoall calibration needs >= 2 nodes");
  }
  if (cluster.gpus_per_node < 2) {
    throw CalibrationError("calibrate: allgather calibration needs >= 2 cards per node");
  }
  const double aa_fraction = (cluster.nodes - 1.0) / cluster.nodes;
  const double ag_fraction = (cluster.gpus_per_node - 1.0) / cluster.gpus_per_node;

  CalibrationSet out;
  out.curves.alltoall =
      detail::fit_curve(groups["alltoall"], aa_fraction, cluster.b1, "alltoall");
  out.curves.allgather =
      detail::fit_curve(groups["allgather"], ag_fraction, cluster.b2, "allgather");
  out.curves.d2d = detail::fit_curve(groups["d2d"], 1.0, cluster.b3, "d2d");
  out.overhead.alpha_comm = 0.5 * (detail::small_volume_intercept(groups["alltoall"]) +
                                   detail::small_volume_intercept(groups["allgather"]));
  out.overhead.alpha_copy = detail::small_volume_intercept(groups["d2d"]);
  return out;
}

}  // namespace moeplan
