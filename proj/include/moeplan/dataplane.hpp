#pragma once

#include "moeplan/commcost.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

// Token-level functional emulator of the MoE dispatch/combine pipeline on
// virtual devices. It proves that the chunked data movement (drop, per-chunk
// inter-node AllToAll, intra-node AllGather, index-offset reorder copies) is
// byte-equivalent to the monolithic AllToAll. Payloads are small integer
// vectors so equality is bitwise.
namespace moeplan::dataplane {

struct CorruptRoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// e nodes of t cards each. Node i hosts expert i, sharded across its tensor
// group; the e cards sharing a tensor rank form an expert-parallel group that
// spans nodes.
struct VirtualTopology {
  int e = 1;
  int t = 1;
  int cards() const { return e * t; }
  int node_of(int card) const { return card / t; }
  int tp_rank_of(int card) const { return card % t; }
  int card_of(int node, int tp_rank) const { return node * t + tp_rank; }
  int canonical_card(int node) const { return node * t; }
};

struct TokenRecord {
  int token_id = 0;
  int source_card = 0;      // canonical card of the originating node
  int source_position = 0;  // index into the node's pre-permute batch
  std::vector<std::int64_t> payload;
  friend bool operator==(const TokenRecord&, const TokenRecord&) = default;
};

using Buffer = std::vector<TokenRecord>;
using CardBuffers = std::vector<Buffer>;  // indexed by card id

// Position-ordered batch for one node, tagged for source tracking. Token ids
// are unique per card.
inline Buffer make_batch(const VirtualTopology& topo, int node,
                         const std::vector<std::vector<std::int64_t>>& payloads) {
  Buffer out;
  out.reserve(payloads.size());
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    out.push_back({int(i) + node * 100000, topo.canonical_card(node), int(i),
                   payloads[i]});
  }
  return out;
}

struct TokenRouting {
  std::vector<int> experts;    // ascending expert indices, exactly k of them
  std::vector<double> probs;   // matching gate probabilities
};

struct RoutingDecision {
  int k = 1;
  std::vector<TokenRouting> per_token;
};

// Softmax over the gate scores, then the k largest scores win; on ties the
// lower expert index wins. Probabilities are the softmax values of the
// selected experts.
inline RoutingDecision route_topk(const std::vector<std::vector<double>>& gate_scores,
                                  int k) {
  if (k < 1) throw std::invalid_argument("route_topk: k must be >= 1");
  RoutingDecision out;
  out.k = k;
  out.per_token.reserve(gate_scores.size());
  for (const auto& scores : gate_scores) {
    if (scores.empty()) {
      throw std::invalid_argument("route_topk: empty gate score row");
    }
    const int experts = int(scores.size());
    if (k > experts) {
      throw std::invalid_argument("route_topk: k exceeds the expert count");
    }
    double peak = scores[0];
    for (const double s : scores) peak = std::max(peak, s);
    std::vector<double> soft(scores.size());
    double denom = 0.0;
    for (std::size_t x = 0; x < scores.size(); ++x) {
      soft[x] = std::exp(scores[x] - peak);
      denom += soft[x];
    }
    for (double& p : soft) p /= denom;
    std::vector<int> order(scores.size());
    for (std::size_t x = 0; x < order.size(); ++x) order[x] = int(x);
    std::stable_sort(order.begin(), order.end(),
                     [&](int lhs, int rhs) { return scores[lhs] > scores[rhs]; });
    TokenRouting routing;
    for (int slot = 0; slot < k; ++slot) routing.experts.push_back(order[slot]);
    std::sort(routing.experts.begin(), routing.experts.end());
    for (const int x : routing.experts) routing.probs.push_back(soft[x]);
    out.per_token.push_back(std::move(routing));
  }
  return out;
}

// Dispatch-encoded batch: records grouped by expert, position order within a
// group, one copy per selected expert. inverse_map[i] lists the record
// indices holding token i, in ascending expert order.
struct PermutedBatch {
  Buffer records;
  std::vector<int> expert_of;
  std::vector<std::vector<int>> inverse_map;
  int batch_tokens = 0;
};

inline PermutedBatch permute(const Buffer& tokens, const RoutingDecision& routing) {
  if (routing.per_token.size() != tokens.size()) {
    throw std::invalid_argument("permute: routing does not cover the batch");
  }
  int max_expert = -1;
  for (const auto& tr : routing.per_token) {
    for (const int x : tr.experts) max_expert = std::max(max_expert, x);
  }
  PermutedBatch out;
  out.batch_tokens = int(tokens.size());
  out.inverse_map.resize(tokens.size());
  for (int x = 0; x <= max_expert; ++x) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      for (const int selected : routing.per_token[i].experts) {
        if (selected != x) continue;
        out.inverse_map[i].push_back(int(out.records.size()));
        out.records.push_back(tokens[i]);
        out.expert_of.push_back(x);
      }
    }
  }
  return out;
}

// Reference AllToAll semantics, used as the oracle: a record destined for
// expert x lands on every card of node x, ordered by source node and then by
// the sender's permuted order. Source tags ride along untouched.
inline CardBuffers dispatch_monolithic(const std::vector<PermutedBatch>& per_node,
                                       const VirtualTopology& topo) {
  if (int(per_node.size()) != topo.e) {
    throw std::invalid_argument("dispatch_monolithic: need one batch per node");
  }
  CardBuffers out(topo.cards());
  for (int x = 0; x < topo.e; ++x) {
    Buffer dest;
    for (int src = 0; src < topo.e; ++src) {
      const auto& batch = per_node[src];
      for (std::size_t r = 0; r < batch.records.size(); ++r) {
        if (batch.expert_of[r] == x) dest.push_back(batch.records[r]);
      }
    }
    for (int rho = 0; rho < topo.t; ++rho) out[topo.card_of(x, rho)] = dest;
  }
  return out;
}

// The drop: tensor rank rho keeps the rho-th 1/t slice of each record's
// payload, so the group as a whole sends each byte exactly once.
inline std::vector<std::int64_t> hidden_shard(const std::vector<std::int64_t>& payload,
                                              int rho, int t) {
  if (t < 1 || rho < 0 || rho >= t) {
    throw std::invalid_argument("hidden_shard: rank out of range");
  }
  if (payload.size() % t != 0) {
    throw std::invalid_argument("hidden_shard: tensor group must evenly split the payload");
  }
  const std::size_t width = payload.size() / t;
  return {payload.begin() + rho * width, payload.begin() + (rho + 1) * width};
}

struct ChunkedDispatchTrace {
  CardBuffers pre_copy;  // gathered layout before the reorder copies
};

// Chunked dispatch: the sequence is cut into n contiguous chunks; per chunk,
// each tensor rank exchanges its dropped shard with its expert-parallel
// peers, the node reassembles full records with an intra-node gather, and the
// chunk-major result is finally copied into the per-source order of the
// monolithic exchange using segment index offsets.
inline CardBuffers dispatch_chunked(const std::vector<PermutedBatch>& per_node,
                                    const VirtualTopology& topo, StrategyLevel level,
                                    int n, ChunkedDispatchTrace* trace = nullptr) {
  if (level != StrategyLevel::O1 && level != StrategyLevel::O2 &&
      level != StrategyLevel::O3) {
    throw std::invalid_argument("dispatch_chunked: level must be O1, O2 or O3");
  }
  if (n < 1) throw std::invalid_argument("dispatch_chunked: n must be >= 1");
  if (level == StrategyLevel::O1 && n != 1) {
    throw std::invalid_argument("dispatch_chunked: O1 is unchunked (n = 1)");
  }
  if (int(per_node.size()) != topo.e) {
    throw std::invalid_argument("dispatch_chunked: need one batch per node");
  }
  int width = -1;
  for (const auto& batch : per_node) {
    if (batch.batch_tokens % n != 0) {
      throw std::invalid_argument("dispatch_chunked: n does not divide the sequence");
    }
    for (const auto& rec : batch.records) {
      if (width < 0) width = int(rec.payload.size());
      if (int(rec.payload.size()) != width) {
        throw std::invalid_argument("dispatch_chunked: ragged payloads");
      }
    }
  }
  if (width < 0) width = 0;
  if (width % topo.t != 0) {
    throw std::invalid_argument("dispatch_chunked: tensor group must evenly split the payload");
  }

  CardBuffers result(topo.cards());
  ChunkedDispatchTrace local;
  local.pre_copy.assign(topo.cards(), {});

  for (int x = 0; x < topo.e; ++x) {
    std::vector<Buffer> gathered(n);
    // Per-chunk, per-source record counts; receivers learn these from the
    // exchange and derive the copy offsets from them.
    std::vector<std::vector<int>> seg_len(n, std::vector<int>(topo.e, 0));
    for (int j = 0; j < n; ++j) {
      std::vector<Buffer> received(topo.t);
      for (int rho = 0; rho < topo.t; ++rho) {
        for (int src = 0; src < topo.e; ++src) {
          const auto& batch = per_node[src];
          const int chunk_tokens = batch.batch_tokens / n;
          for (std::size_t r = 0; r < batch.records.size(); ++r) {
            if (batch.expert_of[r] != x) continue;
            if (batch.records[r].source_position / chunk_tokens != j) continue;
            TokenRecord piece = batch.records[r];
            piece.payload = hidden_shard(batch.records[r].payload, rho, topo.t);
            received[rho].push_back(std::move(piece));
            if (rho == 0) ++seg_len[j][src];
          }
        }
      }
      // Intra-node gather: every rank holds the same record sequence, each
      // with a different hidden shard; reassemble full payloads.
      Buffer block;
      block.reserve(received[0].size());
      for (std::size_t r = 0; r < received[0].size(); ++r) {
        TokenRecord rec = received[0][r];
        rec.payload.clear();
        rec.payload.reserve(width);
        for (int rho = 0; rho < topo.t; ++rho) {
          const auto& piece = received[rho][r].payload;
          rec.payload.insert(rec.payload.end(), piece.begin(), piece.end());
        }
        block.push_back(std::move(rec));
      }
      gathered[j] = std::move(block);
    }

    Buffer pre;
    for (const auto& block : gathered) pre.insert(pre.end(), block.begin(), block.end());

    // Reorder copy: move each (chunk, source) segment from its chunk-major
    // slot to the source-major offset of the monolithic layout.
    Buffer fin;
    fin.reserve(pre.size());
    for (int src = 0; src < topo.e; ++src) {
      for (int j = 0; j < n; ++j) {
        int offset = 0;
        for (int prev = 0; prev < src; ++prev) offset += seg_len[j][prev];
        fin.insert(fin.end(), gathered[j].begin() + offset,
                   gathered[j].begin() + offset + seg_len[j][src]);
      }
    }

    for (int rho = 0; rho < topo.t; ++rho) {
      result[topo.card_of(x, rho)] = fin;
      local.pre_copy[topo.card_of(x, rho)] = pre;
    }
  }
  if (trace) *trace = std::move(local);
  return result;
}

struct CombinedToken {
  int token_id = 0;
  std::vector<double> payload;
};

// Second AllToAll plus unpermutation: every routed token's expert outputs are
// returned to its source node and scale-added with the gate probabilities,
// restoring the original batch order.
inline std::vector<std::vector<CombinedToken>> combine_unpermute(
    const CardBuffers& expert_outputs, const std::vector<RoutingDecision>& routing,
    const std::vector<PermutedBatch>& permuted, const VirtualTopology& topo) {
  if (int(expert_outputs.size()) != topo.cards()) {
    throw std::invalid_argument("combine_unpermute: need one buffer per card");
  }
  if (int(routing.size()) != topo.e || int(permuted.size()) != topo.e) {
    throw std::invalid_argument("combine_unpermute: need routing and batches per node");
  }
  // Locate each routed token's output on its expert node by source tags.
  std::vector<std::map<std::pair<int, int>, std::size_t>> where(topo.e);
  for (int x = 0; x < topo.e; ++x) {
    const Buffer& buf = expert_outputs[topo.canonical_card(x)];
    for (std::size_t r = 0; r < buf.size(); ++r) {
      where[x][{buf[r].source_card, buf[r].source_position}] = r;
    }
  }
  std::vector<std::vector<CombinedToken>> result(topo.e);
  for (int node = 0; node < topo.e; ++node) {
    const int tokens = permuted[node].batch_tokens;
    if (int(routing[node].per_token.size()) != tokens) {
      throw std::invalid_argument("combine_unpermute: routing does not cover the batch");
    }
    result[node].resize(tokens);
    for (int i = 0; i < tokens; ++i) {
      const auto& tr = routing[node].per_token[i];
      const auto& inv = permuted[node].inverse_map[i];
      if (inv.empty() || inv.size() != tr.experts.size()) {
        throw CorruptRoutingError("combine_unpermute: inverse map does not match routing");
      }
      CombinedToken combined;
      combined.token_id = permuted[node].records[inv.front()].token_id;
      for (std::size_t slot = 0; slot < tr.experts.size(); ++slot) {
        const int x = tr.experts[slot];
        const auto it = where[x].find({topo.canonical_card(node), i});
        if (it == where[x].end()) {
          throw CorruptRoutingError(
              "combine_unpermute: missing expert output for node " +
              std::to_string(node) + " position " + std::to_string(i) +
              " expert " + std::to_string(x));
        }
        const auto& rec = expert_outputs[topo.canonical_card(x)][it->second];
        if (combined.payload.empty()) combined.payload.assign(rec.payload.size(), 0.0);
        if (rec.payload.size() != combined.payload.size()) {
          throw CorruptRoutingError("combine_unpermute: payload width mismatch");
        }
        for (std::size_t q = 0; q < combined.payload.size(); ++q) {
          combined.payload[q] += tr.probs[slot] * double(rec.payload[q]);
        }
      }
      result[node][i] = std::move(combined);
    }
  }
  return result;
}

}  // namespace moeplan::dataplane
