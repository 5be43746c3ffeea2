#pragma once

#include "moeplan/commcost.hpp"

#include <map>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace moeplan::pipesim {

// Execution streams of the chunked transfer. Streams run in parallel with
// each other; tasks within one stream run serially in submission order.
enum class Stream { AllToAll, AllGather, D2D, Compute };

inline const char* to_string(Stream s) {
  switch (s) {
    case Stream::AllToAll: return "alltoall";
    case Stream::AllGather: return "allgather";
    case Stream::D2D: return "d2d";
    case Stream::Compute: return "compute";
  }
  return "?";
}

struct SimTask {
  std::string id;
  Stream stream = Stream::Compute;
  double duration = 0.0;
  std::vector<std::string> deps;
};

using TaskGraph = std::vector<SimTask>;

struct InvalidGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TaskSpan {
  std::string id;
  Stream stream = Stream::Compute;
  double start = 0.0;
  double end = 0.0;
};

struct StreamTrace {
  std::vector<TaskSpan> spans;  // submission order
  double makespan = 0.0;
};

namespace detail {

// Emits one chunked transfer phase. Per chunk: AllToAll, then AllGather
// depending on it; under O2 the reorder copy is queued behind the gather on
// the same stream, under O3 it gets its own stream. Returns the per-chunk
// terminal task ids.
inline std::vector<std::string> append_phase(TaskGraph& graph, StrategyLevel level,
                                             int n, const ChunkTiming& timing,
                                             const std::string& prefix,
                                             const std::vector<std::string>& phase_deps) {
  std::vector<std::string> terminals;
  for (int j = 1; j <= n; ++j) {
    const std::string aa_id = prefix + "_aa_" + std::to_string(j);
    graph.push_back({aa_id, Stream::AllToAll, timing.aa, phase_deps});
    if (level == StrategyLevel::Baseline) {
      terminals.push_back(aa_id);
      continue;
    }
    const std::string ag_id = prefix + "_ag_" + std::to_string(j);
    graph.push_back({ag_id, Stream::AllGather, timing.ag, {aa_id}});
    if (level == StrategyLevel::O1) {
      terminals.push_back(ag_id);
      continue;
    }
    const std::string d2d_id = prefix + "_d2d_" + std::to_string(j);
    const Stream d2d_stream =
        level == StrategyLevel::O2 ? Stream::AllGather : Stream::D2D;
    graph.push_back({d2d_id, d2d_stream, timing.d2d, {ag_id}});
    terminals.push_back(d2d_id);
  }
  return terminals;
}

}  // namespace detail

// Builds the task graph of one MoE transfer: a chunked dispatch phase, the
// expert computation gated on every chunk's completion, and a mirrored
// combine phase. `phases = 1` stops after dispatch, which is the shape the
// chunk-search closed forms score.
inline TaskGraph build_pipeline(StrategyLevel level, int n, const ChunkTiming& timing,
                                double expert_time, int phases = 2) {
  if (n < 1) throw std::invalid_argument("build_pipeline: n must be >= 1");
  if (phases != 1 && phases != 2) {
    throw std::invalid_argument("build_pipeline: phases must be 1 or 2");
  }
  if (level == StrategyLevel::Baseline || level == StrategyLevel::O1) n = 1;
  TaskGraph graph;
  const auto dispatch_terminals =
      detail::append_phase(graph, level, n, timing, "dispatch", {});
  if (phases == 1) return graph;
  graph.push_back({"expert", Stream::Compute, expert_time, dispatch_terminals});
  detail::append_phase(graph, level, n, timing, "combine", {"expert"});
  return graph;
}

// Event-driven list scheduling: a task starts at the later of its stream's
// last completion and its dependencies' ends. Deterministic for a given
// submission order.
inline StreamTrace simulate(const TaskGraph& tasks) {
  const std::size_t count = tasks.size();
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (tasks[i].duration < 0.0) {
      throw std::invalid_argument("simulate: negative duration for task " + tasks[i].id);
    }
    if (!index.emplace(tasks[i].id, i).second) {
      throw std::invalid_argument("simulate: duplicate task id " + tasks[i].id);
    }
  }
  // Predecessors: explicit dependencies plus the previous task on the stream.
  std::vector<std::vector<std::size_t>> preds(count);
  std::map<Stream, std::size_t> last_on_stream;
  for (std::size_t i = 0; i < count; ++i) {
    for (const auto& dep : tasks[i].deps) {
      const auto it = index.find(dep);
      if (it == index.end()) {
        throw std::invalid_argument("simulate: unknown dependency " + dep);
      }
      preds[i].push_back(it->second);
    }
    const auto it = last_on_stream.find(tasks[i].stream);
    if (it != last_on_stream.end()) preds[i].push_back(it->second);
    last_on_stream[tasks[i].stream] = i;
  }
  std::vector<std::vector<std::size_t>> succs(count);
  std::vector<std::size_t> indegree(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (const std::size_t p : preds[i]) {
      succs[p].push_back(i);
      ++indegree[i];
    }
  }
  std::queue<std::size_t> ready;
  for (std::size_t i = 0; i < count; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<double> start(count, 0.0), end(count, 0.0);
  std::size_t processed = 0;
  while (!ready.empty()) {
    const std::size_t i = ready.front();
    ready.pop();
    ++processed;
    double at = 0.0;
    for (const std::size_t p : preds[i]) at = std::max(at, end[p]);
    start[i] = at;
    end[i] = at + tasks[i].duration;
    for (const std::size_t s : succs[i]) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  if (processed != count) {
    throw InvalidGraphError("simulate: dependency cycle detected");
  }
  StreamTrace trace;
  trace.spans.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    trace.spans.push_back({tasks[i].id, tasks[i].stream, start[i], end[i]});
    trace.makespan = std::max(trace.makespan, end[i]);
  }
  return trace;
}

}  // namespace moeplan::pipesim
