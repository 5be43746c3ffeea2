#include "moeplan/dataplane.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <tuple>

using namespace moeplan;
using namespace moeplan::dataplane;
using Catch::Approx;

namespace {

std::vector<std::vector<std::int64_t>> random_payloads(std::mt19937& rng, int tokens,
                                                       int width) {
  std::vector<std::vector<std::int64_t>> out(tokens);
  for (auto& payload : out) {
    payload.resize(width);
    for (auto& v : payload) v = std::int64_t(rng() % 100);
  }
  return out;
}

RoutingDecision random_routing(std::mt19937& rng, int tokens, int experts, int k) {
  RoutingDecision routing;
  routing.k = k;
  for (int i = 0; i < tokens; ++i) {
    TokenRouting tr;
    std::vector<int> pool(experts);
    for (int x = 0; x < experts; ++x) pool[x] = x;
    for (int pick = 0; pick < k; ++pick) {
      const int at = int(rng() % pool.size());
      tr.experts.push_back(pool[at]);
      pool.erase(pool.begin() + at);
    }
    std::sort(tr.experts.begin(), tr.experts.end());
    // Dyadic probabilities keep the combine scale-add exact.
    if (k == 1) {
      tr.probs = {1.0};
    } else {
      const double p = double(1 + rng() % 15) / 16.0;
      tr.probs = {p, 1.0 - p};
    }
    routing.per_token.push_back(std::move(tr));
  }
  return routing;
}

// Independent reference for the dispatch semantics, built straight from the
// raw batches and routing without going through permute().
CardBuffers oracle_dispatch(const std::vector<Buffer>& batches,
                            const std::vector<RoutingDecision>& routing,
                            const VirtualTopology& topo) {
  CardBuffers out(topo.cards());
  for (int x = 0; x < topo.e; ++x) {
    Buffer dest;
    for (int src = 0; src < topo.e; ++src) {
      for (std::size_t i = 0; i < batches[src].size(); ++i) {
        for (const int selected : routing[src].per_token[i].experts) {
          if (selected == x) dest.push_back(batches[src][i]);
        }
      }
    }
    for (int rho = 0; rho < topo.t; ++rho) out[topo.card_of(x, rho)] = dest;
  }
  return out;
}

}  // namespace

TEST_CASE("route_topk keeps the dominant logit") {
  const auto routing = route_topk({{10.0, 0.0, 0.0, 0.0}}, 1);
  REQUIRE(routing.per_token[0].experts == std::vector<int>{0});
  REQUIRE(routing.per_token[0].probs[0] == Approx(1.0).margin(1e-3));
}

TEST_CASE("route_topk breaks exact ties toward lower expert indices") {
  const auto routing = route_topk({{1.0, 1.0, 1.0, 1.0}}, 2);
  REQUIRE(routing.per_token[0].experts == std::vector<int>{0, 1});
  REQUIRE(routing.per_token[0].probs[0] == Approx(0.25).epsilon(1e-12));
  REQUIRE(routing.per_token[0].probs[1] == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("route_topk matches an independently computed softmax") {
  const std::vector<double> scores{0.1, 0.9, 0.3, 0.5};
  const auto routing = route_topk({scores}, 2);
  REQUIRE(routing.per_token[0].experts == std::vector<int>{1, 3});
  double denom = 0.0;
  for (const double s : scores) denom += std::exp(s);
  REQUIRE(routing.per_token[0].probs[0] == Approx(std::exp(0.9) / denom).epsilon(1e-12));
  REQUIRE(routing.per_token[0].probs[1] == Approx(std::exp(0.5) / denom).epsilon(1e-12));
}

TEST_CASE("route_topk rejects oversized k") {
  REQUIRE_THROWS_AS(route_topk({{1.0, 2.0}}, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(route_topk({{1.0, 2.0}}, 0), std::invalid_argument);
}

TEST_CASE("permute leaves expert-sorted input alone") {
  const VirtualTopology topo{2, 1};
  const Buffer batch = make_batch(topo, 0, {{1}, {2}, {3}, {4}});
  RoutingDecision routing;
  routing.k = 1;
  for (const int x : {0, 0, 1, 1}) routing.per_token.push_back({{x}, {1.0}});
  const auto permuted = permute(batch, routing);
  REQUIRE(permuted.records == batch);
  REQUIRE(permuted.inverse_map ==
          std::vector<std::vector<int>>{{0}, {1}, {2}, {3}});
}

TEST_CASE("permute groups alternating experts") {
  const VirtualTopology topo{2, 1};
  const Buffer batch = make_batch(topo, 0, {{10}, {11}, {12}, {13}});
  RoutingDecision routing;
  routing.k = 1;
  for (const int x : {1, 0, 1, 0}) routing.per_token.push_back({{x}, {1.0}});
  const auto permuted = permute(batch, routing);
  std::vector<int> positions;
  for (const auto& rec : permuted.records) positions.push_back(rec.source_position);
  REQUIRE(positions == std::vector<int>{1, 3, 0, 2});
  REQUIRE(permuted.expert_of == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("permute round-trips through its inverse map") {
  std::mt19937 rng(73);
  const VirtualTopology topo{4, 1};
  for (int trial = 0; trial < 50; ++trial) {
    const int tokens = 1 + int(rng() % 24);
    const int k = 1 + int(rng() % 2);
    const Buffer batch = make_batch(topo, 0, random_payloads(rng, tokens, 3));
    const auto routing = random_routing(rng, tokens, topo.e, k);
    const auto permuted = permute(batch, routing);
    REQUIRE(permuted.records.size() == std::size_t(tokens) * k);
    for (int i = 0; i < tokens; ++i) {
      REQUIRE(permuted.inverse_map[i].size() == std::size_t(k));
      for (const int r : permuted.inverse_map[i]) {
        REQUIRE(permuted.records[r] == batch[i]);
      }
    }
  }
}

TEST_CASE("dispatch with one expert group is the identity") {
  const VirtualTopology topo{1, 2};
  const Buffer batch = make_batch(topo, 0, {{1, 2}, {3, 4}});
  RoutingDecision routing;
  routing.k = 1;
  routing.per_token = {{{0}, {1.0}}, {{0}, {1.0}}};
  const auto permuted = permute(batch, routing);
  const auto out = dispatch_monolithic({permuted}, topo);
  REQUIRE(out[0] == batch);
  REQUIRE(out[1] == batch);
}

TEST_CASE("two nodes fully crossing swap their buffers") {
  const VirtualTopology topo{2, 1};
  const Buffer batch0 = make_batch(topo, 0, {{1}, {2}});
  const Buffer batch1 = make_batch(topo, 1, {{7}, {8}});
  RoutingDecision to1, to0;
  to1.per_token = {{{1}, {1.0}}, {{1}, {1.0}}};
  to0.per_token = {{{0}, {1.0}}, {{0}, {1.0}}};
  const auto out =
      dispatch_monolithic({permute(batch0, to1), permute(batch1, to0)}, topo);
  REQUIRE(out[0] == batch1);
  REQUIRE(out[1] == batch0);
}

TEST_CASE("dispatch_monolithic matches the independent oracle") {
  std::mt19937 rng(79);
  for (int trial = 0; trial < 50; ++trial) {
    const VirtualTopology topo{2 + int(rng() % 3), 1 + int(rng() % 4)};
    const int tokens = 1 + int(rng() % 12);
    const int width = topo.t;
    std::vector<Buffer> batches;
    std::vector<RoutingDecision> routing;
    std::vector<PermutedBatch> permuted;
    for (int node = 0; node < topo.e; ++node) {
      batches.push_back(make_batch(topo, node, random_payloads(rng, tokens, width)));
      routing.push_back(random_routing(rng, tokens, topo.e, 1 + int(rng() % 2)));
      permuted.push_back(permute(batches.back(), routing.back()));
    }
    REQUIRE(dispatch_monolithic(permuted, topo) ==
            oracle_dispatch(batches, routing, topo));
  }
}

TEST_CASE("unchunked dispatch on one card equals the monolithic exchange") {
  const VirtualTopology topo{1, 1};
  const Buffer batch = make_batch(topo, 0, {{5}, {6}, {7}});
  RoutingDecision routing;
  routing.per_token = {{{0}, {1.0}}, {{0}, {1.0}}, {{0}, {1.0}}};
  const auto permuted = permute(batch, routing);
  REQUIRE(dispatch_chunked({permuted}, topo, StrategyLevel::O1, 1) ==
          dispatch_monolithic({permuted}, topo));
}

TEST_CASE("two chunks interleave at the destination until the reorder copy") {
  const VirtualTopology topo{2, 2};
  std::vector<PermutedBatch> permuted;
  for (int node = 0; node < 2; ++node) {
    std::vector<std::vector<std::int64_t>> payloads;
    for (int i = 0; i < 8; ++i) payloads.push_back({node * 100 + i, node * 100 + i + 50});
    RoutingDecision routing;
    routing.k = 1;
    for (int i = 0; i < 8; ++i) routing.per_token.push_back({{i % 2}, {1.0}});
    permuted.push_back(permute(make_batch(topo, node, payloads), routing));
  }
  ChunkedDispatchTrace trace;
  const auto chunked = dispatch_chunked(permuted, topo, StrategyLevel::O2, 2, &trace);
  const auto mono = dispatch_monolithic(permuted, topo);
  REQUIRE(chunked == mono);

  // Before the copy, expert 0's buffer runs chunk-major: both sources' first
  // chunks, then both sources' second chunks.
  const auto key = [](const TokenRecord& rec) {
    return std::pair<int, int>{rec.source_card, rec.source_position};
  };
  std::vector<std::pair<int, int>> pre;
  for (const auto& rec : trace.pre_copy[0]) pre.push_back(key(rec));
  const std::vector<std::pair<int, int>> expected_pre{
      {0, 0}, {0, 2}, {2, 0}, {2, 2}, {0, 4}, {0, 6}, {2, 4}, {2, 6}};
  REQUIRE(pre == expected_pre);

  std::vector<std::pair<int, int>> fin;
  for (const auto& rec : mono[0]) fin.push_back(key(rec));
  const std::vector<std::pair<int, int>> expected_fin{
      {0, 0}, {0, 2}, {0, 4}, {0, 6}, {2, 0}, {2, 2}, {2, 4}, {2, 6}};
  REQUIRE(fin == expected_fin);
  REQUIRE(pre != fin);
}

TEST_CASE("chunked dispatch equals the monolithic exchange across the envelope") {
  std::mt19937 rng(83);
  for (int trial = 0; trial < 200; ++trial) {
    const VirtualTopology topo{2 * (1 + int(rng() % 2)), 2 * (1 + int(rng() % 2))};
    const int n = 1 + int(rng() % 4);
    const int tokens = n * (1 + int(rng() % 3));
    const int width = topo.t * (1 + int(rng() % 2));
    const int k = 1 + int(rng() % 2);
    std::vector<PermutedBatch> permuted;
    for (int node = 0; node < topo.e; ++node) {
      permuted.push_back(permute(make_batch(topo, node, random_payloads(rng, tokens, width)),
                                 random_routing(rng, tokens, topo.e, k)));
    }
    const auto level = n == 1 ? StrategyLevel::O1
                              : ((rng() % 2) ? StrategyLevel::O2 : StrategyLevel::O3);
    REQUIRE(dispatch_chunked(permuted, topo, level, n) ==
            dispatch_monolithic(permuted, topo));
  }
}

TEST_CASE("every routed token lands exactly once per expert node") {
  std::mt19937 rng(89);
  const VirtualTopology topo{4, 2};
  const int tokens = 8;
  std::vector<RoutingDecision> routing;
  std::vector<PermutedBatch> permuted;
  for (int node = 0; node < topo.e; ++node) {
    routing.push_back(random_routing(rng, tokens, topo.e, 2));
    permuted.push_back(
        permute(make_batch(topo, node, random_payloads(rng, tokens, 4)), routing.back()));
  }
  const auto out = dispatch_chunked(permuted, topo, StrategyLevel::O2, 2);
  for (int x = 0; x < topo.e; ++x) {
    std::map<std::pair<int, int>, int> seen;
    for (const auto& rec : out[topo.canonical_card(x)]) {
      ++seen[{rec.source_card, rec.source_position}];
    }
    std::map<std::pair<int, int>, int> expected;
    for (int node = 0; node < topo.e; ++node) {
      for (int i = 0; i < tokens; ++i) {
        for (const int selected : routing[node].per_token[i].experts) {
          if (selected == x) ++expected[{topo.canonical_card(node), i}];
        }
      }
    }
    REQUIRE(seen == expected);
  }
}

TEST_CASE("dropped shards reassemble the original payload") {
  std::mt19937 rng(97);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = 1 + int(rng() % 8);
    std::vector<std::int64_t> payload(t * (1 + rng() % 4));
    for (auto& v : payload) v = std::int64_t(rng());
    std::vector<std::int64_t> reassembled;
    for (int rho = 0; rho < t; ++rho) {
      const auto shard = hidden_shard(payload, rho, t);
      reassembled.insert(reassembled.end(), shard.begin(), shard.end());
    }
    REQUIRE(reassembled == payload);
  }
}

TEST_CASE("chunked dispatch validates its arguments") {
  const VirtualTopology topo{2, 2};
  std::vector<PermutedBatch> permuted;
  for (int node = 0; node < 2; ++node) {
    RoutingDecision routing;
    for (int i = 0; i < 3; ++i) routing.per_token.push_back({{i % 2}, {1.0}});
    permuted.push_back(
        permute(make_batch(topo, node, {{1, 2}, {3, 4}, {5, 6}}), routing));
  }
  // 3 tokens do not divide into 2 chunks.
  REQUIRE_THROWS_AS(dispatch_chunked(permuted, topo, StrategyLevel::O2, 2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(dispatch_chunked(permuted, topo, StrategyLevel::O1, 3),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(dispatch_chunked(permuted, topo, StrategyLevel::Baseline, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(dispatch_chunked(permuted, topo, StrategyLevel::O2, 0),
                    std::invalid_argument);
}

TEST_CASE("identity experts with unit probability reproduce the input") {
  const VirtualTopology topo{2, 2};
  std::vector<RoutingDecision> routing;
  std::vector<PermutedBatch> permuted;
  std::vector<Buffer> batches;
  for (int node = 0; node < 2; ++node) {
    batches.push_back(make_batch(topo, node, {{1, 2}, {3, 4}, {5, 6}, {7, 8}}));
    RoutingDecision r;
    for (int i = 0; i < 4; ++i) r.per_token.push_back({{(i + node) % 2}, {1.0}});
    routing.push_back(r);
    permuted.push_back(permute(batches.back(), r));
  }
  const auto dispatched = dispatch_chunked(permuted, topo, StrategyLevel::O2, 2);
  const auto combined = combine_unpermute(dispatched, routing, permuted, topo);
  for (int node = 0; node < 2; ++node) {
    for (int i = 0; i < 4; ++i) {
      REQUIRE(combined[node][i].token_id == batches[node][i].token_id);
      for (std::size_t q = 0; q < batches[node][i].payload.size(); ++q) {
        REQUIRE(combined[node][i].payload[q] == double(batches[node][i].payload[q]));
      }
    }
  }
}

TEST_CASE("a doubling expert doubles the combined output") {
  const VirtualTopology topo{2, 1};
  const Buffer batch0 = make_batch(topo, 0, {{3}, {4}});
  const Buffer batch1 = make_batch(topo, 1, {{5}, {6}});
  RoutingDecision r0, r1;
  r0.per_token = {{{1}, {1.0}}, {{0}, {1.0}}};
  r1.per_token = {{{0}, {1.0}}, {{1}, {1.0}}};
  const std::vector<PermutedBatch> permuted{permute(batch0, r0), permute(batch1, r1)};
  auto outputs = dispatch_monolithic(permuted, topo);
  for (auto& buffer : outputs) {
    for (auto& rec : buffer) {
      for (auto& v : rec.payload) v *= 2;
    }
  }
  const auto combined = combine_unpermute(outputs, {r0, r1}, permuted, topo);
  REQUIRE(combined[0][0].payload[0] == 6.0);
  REQUIRE(combined[0][1].payload[0] == 8.0);
  REQUIRE(combined[1][0].payload[0] == 10.0);
  REQUIRE(combined[1][1].payload[0] == 12.0);
}

TEST_CASE("combine-of-dispatch with identity experts is the identity map") {
  std::mt19937 rng(101);
  for (int trial = 0; trial < 80; ++trial) {
    const VirtualTopology topo{2 + int(rng() % 3), 1 + int(rng() % 3)};
    const int n = 1 + int(rng() % 3);
    const int tokens = n * (1 + int(rng() % 3));
    const int width = topo.t * 2;
    const int k = 1 + int(rng() % 2);
    std::vector<Buffer> batches;
    std::vector<RoutingDecision> routing;
    std::vector<PermutedBatch> permuted;
    for (int node = 0; node < topo.e; ++node) {
      batches.push_back(make_batch(topo, node, random_payloads(rng, tokens, width)));
      routing.push_back(random_routing(rng, tokens, topo.e, k));
      permuted.push_back(permute(batches.back(), routing.back()));
    }
    const auto level = n == 1 ? StrategyLevel::O1 : StrategyLevel::O3;
    const auto dispatched = dispatch_chunked(permuted, topo, level, n);
    const auto combined = combine_unpermute(dispatched, routing, permuted, topo);
    for (int node = 0; node < topo.e; ++node) {
      for (int i = 0; i < tokens; ++i) {
        REQUIRE(combined[node][i].token_id == batches[node][i].token_id);
        for (int q = 0; q < width; ++q) {
          REQUIRE(combined[node][i].payload[q] == double(batches[node][i].payload[q]));
        }
      }
    }
  }
}

TEST_CASE("a missing expert output is reported as corrupt routing") {
  const VirtualTopology topo{2, 1};
  const Buffer batch0 = make_batch(topo, 0, {{1}, {2}});
  const Buffer batch1 = make_batch(topo, 1, {{3}, {4}});
  RoutingDecision r0, r1;
  r0.per_token = {{{0}, {1.0}}, {{1}, {1.0}}};
  r1.per_token = {{{0}, {1.0}}, {{1}, {1.0}}};
  const std::vector<PermutedBatch> permuted{permute(batch0, r0), permute(batch1, r1)};
  auto outputs = dispatch_monolithic(permuted, topo);
  outputs[0].pop_back();  // drop one routed token's output
  REQUIRE_THROWS_AS(combine_unpermute(outputs, {r0, r1}, permuted, topo),
                    CorruptRoutingError);
}
