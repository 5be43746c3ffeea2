#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace moeplan {

// Communication groups of an MoE training timeline. TP/SP traffic stays on
// intra-node links; EP, PP, CP and DP all contend for the inter-node network,
// modeled as one shared resource class.
enum class CommGroup { TP_SP, EP, PP, CP, DP };
enum class Resource { IntraNode, InterNode };
enum class Phase { Forward, Backward };

inline const char* to_string(CommGroup g) {
  switch (g) {
    case CommGroup::TP_SP: return "TP_SP";
    case CommGroup::EP: return "EP";
    case CommGroup::PP: return "PP";
    case CommGroup::CP: return "CP";
    case CommGroup::DP: return "DP";
  }
  return "?";
}

inline const char* to_string(Resource r) {
  return r == Resource::IntraNode ? "intra-node" : "inter-node";
}

inline const char* to_string(Phase p) {
  return p == Phase::Forward ? "forward" : "backward";
}

inline Resource default_resource(CommGroup g) {
  return g == CommGroup::TP_SP ? Resource::IntraNode : Resource::InterNode;
}

// Resolution priority: EP > PP > CP > DP.
inline int comm_priority(CommGroup g) {
  switch (g) {
    case CommGroup::EP: return 3;
    case CommGroup::PP: return 2;
    case CommGroup::CP: return 1;
    case CommGroup::DP: return 0;
    case CommGroup::TP_SP: return -1;
  }
  return -1;
}

struct CommEvent {
  CommGroup group = CommGroup::EP;
  Resource resource = Resource::InterNode;
  Phase phase = Phase::Forward;
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds
  std::string label;
};

inline bool overlaps(const CommEvent& a, const CommEvent& b) {
  return a.start < b.end && b.start < a.end;
}

// One overlapping pair of inter-node events. Indices refer to the input
// timeline; the winner is the higher-priority event (earlier start breaks
// priority ties) and required_delay is how long the loser would have to wait
// for the winner to finish.
struct ConflictPair {
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t winner = 0;
  double required_delay = 0.0;
};

struct ConflictReport {
  std::vector<ConflictPair> pairs;
};

inline ConflictReport detect_conflicts(const std::vector<CommEvent>& timeline) {
  ConflictReport report;
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    if (timeline[i].resource != Resource::InterNode) continue;
    for (std::size_t j = i + 1; j < timeline.size(); ++j) {
      if (timeline[j].resource != Resource::InterNode) continue;
      if (!overlaps(timeline[i], timeline[j])) continue;
      const int pi = comm_priority(timeline[i].group);
      const int pj = comm_priority(timeline[j].group);
      std::size_t winner;
      if (pi != pj) {
        winner = pi > pj ? i : j;
      } else if (timeline[i].start != timeline[j].start) {
        winner = timeline[i].start < timeline[j].start ? i : j;
      } else {
        winner = i;
      }
      const std::size_t loser = winner == i ? j : i;
      report.pairs.push_back(
          {i, j, winner, timeline[winner].end - timeline[loser].start});
    }
  }
  return report;
}

// Greedy conflict resolution: events are placed in priority order (EP first),
// and each lower-priority inter-node event slides right until it overlaps
// none of the already-placed ones. Durations are preserved, starts never move
// earlier, and intra-node traffic is untouched.
inline std::vector<CommEvent> resolve_by_priority(const std::vector<CommEvent>& timeline) {
  std::vector<CommEvent> out = timeline;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].resource == Resource::InterNode) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int pa = comm_priority(out[a].group);
    const int pb = comm_priority(out[b].group);
    if (pa != pb) return pa > pb;
    return out[a].start < out[b].start;  // stable keeps input order on exact ties
  });
  std::vector<std::size_t> placed;
  for (const std::size_t idx : order) {
    CommEvent& ev = out[idx];
    const double duration = ev.end - ev.start;
    for (;;) {
      double blocker_end = std::numeric_limits<double>::infinity();
      bool blocked = false;
      for (const std::size_t p : placed) {
        if (overlaps(ev, out[p])) {
          blocked = true;
          blocker_end = std::min(blocker_end, out[p].end);
        }
      }
      if (!blocked) break;
      ev.start = blocker_end;
      ev.end = blocker_end + duration;
    }
    placed.push_back(idx);
  }
  return out;
}

}  // namespace moeplan
