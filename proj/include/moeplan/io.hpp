#pragma once

#include "moeplan/calibrate.hpp"
#include "moeplan/config.hpp"
#include "moeplan/conflict.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

// Plain-text formats: `key = value` config files, and CSV for efficiency
// curves, conflict timelines and calibration benchmarks. All of them are
// stable enough to keep golden copies in the repository.
namespace moeplan {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv(const std::string& line, std::size_t max_fields) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (fields.size() + 1 < max_fields) {
    const auto comma = line.find(',', pos);
    if (comma == std::string::npos) break;
    fields.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  fields.push_back(trim(line.substr(pos)));
  return fields;
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double value = std::stod(s, &used);
    if (used == s.size()) return value;
  } catch (...) {
  }
  throw ParseError(context + ": expected a number, got '" + s + "'");
}

inline std::int64_t parse_int(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(s, &used);
    if (used == s.size()) return value;
  } catch (...) {
  }
  // Accept integral scientific notation such as 24e9.
  try {
    std::size_t used = 0;
    const double value = std::stod(s, &used);
    if (used == s.size() && std::floor(value) == value &&
        std::abs(value) < 9.0e18) {
      return std::int64_t(value);
    }
  } catch (...) {
  }
  throw ParseError(context + ": expected an integer, got '" + s + "'");
}

}  // namespace detail

// `key = value` pairs, one per line; '#' starts a comment.
inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(trimmed.substr(0, eq));
    const std::string value = detail::trim(trimmed.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty key or value");
    }
    out[key] = value;
  }
  return out;
}

namespace detail {

inline std::string require(const std::map<std::string, std::string>& kv,
                           const std::string& key, const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(path + ": missing key '" + key + "'");
  return it->second;
}

}  // namespace detail

inline ModelSpec load_model_spec(const std::string& path) {
  const auto kv = read_kv_file(path);
  ModelSpec m;
  m.b = detail::parse_int(detail::require(kv, "b", path), path + ": b");
  m.s = detail::parse_int(detail::require(kv, "s", path), path + ": s");
  m.h = detail::parse_int(detail::require(kv, "h", path), path + ": h");
  m.a = detail::parse_int(detail::require(kv, "a", path), path + ": a");
  m.l = detail::parse_int(detail::require(kv, "l", path), path + ": l");
  m.k = detail::parse_int(detail::require(kv, "k", path), path + ": k");
  m.p1 = detail::parse_int(detail::require(kv, "p1", path), path + ": p1");
  m.p2 = detail::parse_int(detail::require(kv, "p2", path), path + ": p2");
  m.bpe = int(detail::parse_int(detail::require(kv, "bpe", path), path + ": bpe"));
  return m;
}

// Parallel degrees live in the same file as the model; cp defaults to 1.
inline ParallelSpec load_parallel_spec(const std::string& path) {
  const auto kv = read_kv_file(path);
  ParallelSpec p;
  p.d = int(detail::parse_int(detail::require(kv, "d", path), path + ": d"));
  p.p = int(detail::parse_int(detail::require(kv, "p", path), path + ": p"));
  p.t = int(detail::parse_int(detail::require(kv, "t", path), path + ": t"));
  p.e = int(detail::parse_int(detail::require(kv, "e", path), path + ": e"));
  if (const auto it = kv.find("cp"); it != kv.end()) {
    p.cp = int(detail::parse_int(it->second, path + ": cp"));
  }
  return p;
}

inline ClusterSpec load_cluster_spec(const std::string& path) {
  const auto kv = read_kv_file(path);
  ClusterSpec c;
  c.nodes = int(detail::parse_int(detail::require(kv, "nodes", path), path + ": nodes"));
  c.gpus_per_node = int(detail::parse_int(detail::require(kv, "gpus_per_node", path),
                                          path + ": gpus_per_node"));
  c.b1 = detail::parse_double(detail::require(kv, "b1", path), path + ": b1");
  c.b2 = detail::parse_double(detail::require(kv, "b2", path), path + ": b2");
  c.b3 = detail::parse_double(detail::require(kv, "b3", path), path + ": b3");
  c.peak_flops =
      detail::parse_double(detail::require(kv, "peak_flops", path), path + ": peak_flops");
  c.switch_capacity = detail::parse_int(detail::require(kv, "switch_capacity", path),
                                        path + ": switch_capacity");
  return c;
}

inline EfficiencyCurve read_curve_csv(const std::string& path, double i_minimal = 0.0) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "volume_bytes,efficiency") {
    throw ParseError(path + ": expected header 'volume_bytes,efficiency'");
  }
  EfficiencyCurve curve;
  curve.i_minimal = i_minimal;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line, 2);
    if (fields.size() != 2) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
    }
    const std::string context = path + ":" + std::to_string(lineno);
    const double volume = detail::parse_double(fields[0], context);
    const double efficiency = detail::parse_double(fields[1], context);
    if (!(volume > 0.0)) throw ParseError(context + ": volume must be positive");
    if (!(efficiency > 0.0) || efficiency > 1.0) {
      throw ParseError(context + ": efficiency must be in (0, 1]");
    }
    curve.points.push_back({volume, efficiency});
  }
  if (curve.points.empty()) throw ParseError(path + ": curve has no points");
  std::sort(curve.points.begin(), curve.points.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.volume < b.volume; });
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].volume == curve.points[i - 1].volume) {
      throw ParseError(path + ": duplicate volume " +
                       std::to_string(curve.points[i].volume));
    }
  }
  return curve;
}

inline void write_curve_csv(const std::string& path, const EfficiencyCurve& curve) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "volume_bytes,efficiency\n";
  out.precision(17);
  for (const auto& point : curve.points) {
    out << point.volume << "," << point.efficiency << "\n";
  }
}

// Expects alltoall.csv, allgather.csv and d2d.csv side by side.
inline CurveSet load_curve_set(const std::string& dir, double i_minimal = 0.0) {
  CurveSet curves;
  curves.alltoall = read_curve_csv(dir + "/alltoall.csv", i_minimal);
  curves.allgather = read_curve_csv(dir + "/allgather.csv", i_minimal);
  curves.d2d = read_curve_csv(dir + "/d2d.csv", i_minimal);
  return curves;
}

namespace detail {

inline CommGroup parse_group(const std::string& s, const std::string& context) {
  if (s == "TP_SP") return CommGroup::TP_SP;
  if (s == "EP") return CommGroup::EP;
  if (s == "PP") return CommGroup::PP;
  if (s == "CP") return CommGroup::CP;
  if (s == "DP") return CommGroup::DP;
  throw ParseError(context + ": unknown group '" + s + "'");
}

inline Resource parse_resource(const std::string& s, const std::string& context) {
  if (s == "intra-node") return Resource::IntraNode;
  if (s == "inter-node") return Resource::InterNode;
  throw ParseError(context + ": unknown resource '" + s + "'");
}

inline Phase parse_phase(const std::string& s, const std::string& context) {
  if (s == "forward") return Phase::Forward;
  if (s == "backward") return Phase::Backward;
  throw ParseError(context + ": unknown phase '" + s + "'");
}

}  // namespace detail

// Timeline rows: group,resource,phase,start_ms,end_ms,label. Times are
// converted to seconds; the label may contain commas.
inline std::vector<CommEvent> read_timeline_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim(line) != "group,resource,phase,start_ms,end_ms,label") {
    throw ParseError(path + ": expected header 'group,resource,phase,start_ms,end_ms,label'");
  }
  std::vector<CommEvent> events;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const std::string context = path + ":" + std::to_string(lineno);
    const auto fields = detail::split_csv(line, 6);
    if (fields.size() != 6) throw ParseError(context + ": expected 6 fields");
    CommEvent ev;
    ev.group = detail::parse_group(fields[0], context);
    ev.resource = detail::parse_resource(fields[1], context);
    ev.phase = detail::parse_phase(fields[2], context);
    ev.start = detail::parse_double(fields[3], context) * 1e-3;
    ev.end = detail::parse_double(fields[4], context) * 1e-3;
    ev.label = fields[5];
    if (!(ev.start < ev.end)) throw ParseError(context + ": start must precede end");
    if (ev.resource != default_resource(ev.group)) {
      throw ParseError(context + ": " + to_string(ev.group) + " traffic must be " +
                       to_string(default_resource(ev.group)));
    }
    events.push_back(std::move(ev));
  }
  return events;
}

// Benchmark rows: primitive,volume_bytes,measured_seconds.
inline std::vector<BenchSample> read_bench_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim(line) != "primitive,volume_bytes,measured_seconds") {
    throw ParseError(path + ": expected header 'primitive,volume_bytes,measured_seconds'");
  }
  std::vector<BenchSample> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const std::string context = path + ":" + std::to_string(lineno);
    const auto fields = detail::split_csv(line, 3);
    if (fields.size() != 3) throw ParseError(context + ": expected 3 fields");
    BenchSample sample;
    sample.primitive = fields[0];
    sample.volume = detail::parse_double(fields[1], context);
    sample.seconds = detail::parse_double(fields[2], context);
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace moeplan
