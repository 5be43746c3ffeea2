#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace moeplan {

// Long-context cluster growth. Horizontal expansion lays context groups
// orthogonal to expert groups, so the switch fabric must reach every (ep, cp)
// pair; vertical expansion aligns both in one dimension and the fabric only
// needs max(e, cp) endpoints, with the expert group carrying one minibatch.
enum class ExpansionMode { Horizontal, Vertical };

inline const char* to_string(ExpansionMode m) {
  return m == ExpansionMode::Horizontal ? "horizontal" : "vertical";
}

struct ExpansionPlan {
  ExpansionMode mode = ExpansionMode::Vertical;
  std::int64_t network_scale = 1;          // switch endpoints required
  std::int64_t minibatch_per_ep_group = 1;
  std::string rationale;
};

inline ExpansionPlan plan_expansion(std::int64_t e, std::int64_t cp,
                                    std::int64_t switch_capacity) {
  if (e < 1 || cp < 1) {
    throw std::invalid_argument("plan_expansion: e and cp must be >= 1");
  }
  if (cp < e) {
    if (switch_capacity >= e * cp) {
      return {ExpansionMode::Horizontal, e * cp, cp,
              "cp < ep and the switch reaches every (ep, cp) pair; orthogonal "
              "cp groups keep each expert group fully utilized"};
    }
    return {ExpansionMode::Vertical, std::max(e, cp), 1,
            "cp < ep but the switch cannot reach " + std::to_string(e * cp) +
                " endpoints; falling back to aligning cp with ep"};
  }
  return {ExpansionMode::Vertical, std::max(e, cp), 1,
          "cp >= ep: context and expert groups align in one dimension"};
}

// Longest context a configuration covers before more context parallelism is
// needed; linear in cp.
inline std::int64_t context_capacity(std::int64_t cp, std::int64_t tokens_per_ep_group) {
  if (cp < 1 || tokens_per_ep_group < 1) {
    throw std::invalid_argument("context_capacity: inputs must be positive");
  }
  return cp * tokens_per_ep_group;
}

}  // namespace moeplan
