// moeplan — network-traffic-aware planner and simulator for MoE training
// communication. Subcommands cover memory estimation, strategy planning,
// multi-stream schedule simulation, data-plane verification, conflict
// analysis, cluster expansion and efficiency-curve calibration. Every report
// is JSON with an embedded provenance manifest; outputs are deterministic for
// identical inputs (timestamp aside).

#include "CLI11.hpp"
#include "json.hpp"

#include "moeplan/calibrate.hpp"
#include "moeplan/chunkopt.hpp"
#include "moeplan/commcost.hpp"
#include "moeplan/config.hpp"
#include "moeplan/conflict.hpp"
#include "moeplan/dataplane.hpp"
#include "moeplan/expand.hpp"
#include "moeplan/io.hpp"
#include "moeplan/manifest.hpp"
#include "moeplan/memcost.hpp"
#include "moeplan/pipesim.hpp"
#include "moeplan/strategy.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace {

using json = nlohmann::ordered_json;
using namespace moeplan;

struct ValidationFailure : std::runtime_error {
  std::vector<std::string> violations;
  explicit ValidationFailure(std::vector<std::string> v)
      : std::runtime_error("configuration validation failed"),
        violations(std::move(v)) {}
};

json manifest_json(const RunManifest& manifest) {
  json inputs = json::array();
  for (const auto& input : manifest.inputs) {
    inputs.push_back(
        {{"name", input.name}, {"path", input.path}, {"fnv1a64", input.digest}});
  }
  return json{{"command", manifest.command},
              {"inputs", inputs},
              {"version", manifest.version},
              {"timestamp", manifest.timestamp}};
}

void emit(const json& report, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::ofstream out(output_path);
  if (!out) throw std::runtime_error("cannot write " + output_path);
  out << report.dump(2) << "\n";
}

void require_valid(const ModelSpec& model, const ParallelSpec& par,
                   const ClusterSpec& cluster) {
  std::vector<std::string> violations;
  const auto append = [&violations](std::vector<std::string> more) {
    violations.insert(violations.end(), more.begin(), more.end());
  };
  append(check(model));
  append(check(par));
  append(check(cluster));
  append(validate(model, par, cluster));
  if (!violations.empty()) throw ValidationFailure(std::move(violations));
}

const std::map<std::string, StrategyLevel> kLevelNames = {
    {"baseline", StrategyLevel::Baseline},
    {"o1", StrategyLevel::O1},
    {"o2", StrategyLevel::O2},
    {"o3", StrategyLevel::O3},
};

const std::map<std::string, ZeroStage> kStageNames = {
    {"baseline", ZeroStage::Baseline},
    {"o1", ZeroStage::O1},
    {"o2", ZeroStage::O2},
    {"o3", ZeroStage::O3},
};

const std::map<std::string, ActivationMode> kModeNames = {
    {"no-parallel", ActivationMode::NoParallel},
    {"pp-tp-ep", ActivationMode::PpTpEp},
    {"pp-tp-ep-sp", ActivationMode::PpTpEpSp},
    {"selective-recompute", ActivationMode::SelectiveRecompute},
    {"full-recompute", ActivationMode::FullRecompute},
};

// ---------------------------------------------------------------------------
// plan

struct PlanOptions {
  std::string model, cluster, curves, output;
  double i_minimal = 0.0;
  double alpha_comm_ms = 0.0;
  double alpha_copy_ms = 0.0;
  int n_cap = 64;
  int moe_layers = 0;  // 0: use the model's layer count
  double compute_ms = 0.0;
};

void run_plan(const PlanOptions& opt) {
  const ModelSpec model = load_model_spec(opt.model);
  const ParallelSpec par = load_parallel_spec(opt.model);
  const ClusterSpec cluster = load_cluster_spec(opt.cluster);
  require_valid(model, par, cluster);
  const CurveSet curves = load_curve_set(opt.curves, opt.i_minimal);
  const OverheadModel overhead{opt.alpha_comm_ms * 1e-3, opt.alpha_copy_ms * 1e-3};

  const StrategyDecision decision =
      select_strategy(model, par, cluster, curves, overhead, opt.n_cap);
  const int layers = opt.moe_layers > 0 ? opt.moe_layers : int(model.l);
  const PerfReport perf = estimate_performance(decision, model, par, cluster, layers,
                                               opt.compute_ms * 1e-3);

  json alternatives = json::array();
  for (const auto& alt : decision.alternatives) {
    alternatives.push_back({{"level", to_string(alt.level)},
                            {"t_pred_ms", alt.t_pred * 1e3},
                            {"n", alt.n}});
  }
  json report{{"level", to_string(decision.level)},
              {"n", decision.n},
              {"t_pred_ms", decision.t_pred * 1e3},
              {"alternatives", alternatives},
              {"perf",
               {{"step_latency_ms", perf.step_latency * 1e3},
                {"throughput_tps", perf.throughput},
                {"mfu", perf.mfu}}}};
  report["manifest"] = manifest_json(make_manifest(
      "plan", {{"model", opt.model},
               {"cluster", opt.cluster},
               {"alltoall_curve", opt.curves + "/alltoall.csv"},
               {"allgather_curve", opt.curves + "/allgather.csv"},
               {"d2d_curve", opt.curves + "/d2d.csv"}}));
  emit(report, opt.output);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  StrategyLevel level = StrategyLevel::O2;
  int n = 0;  // 0: derive (search for O2/O3, 1 otherwise)
  double aa_ms = -1.0, ag_ms = -1.0, d2d_ms = -1.0;
  double expert_ms = 0.0;
  int phases = 2;
  std::string model, cluster, curves, output, gantt;
  double i_minimal = 0.0;
  double alpha_comm_ms = 0.0;
  double alpha_copy_ms = 0.0;
  int n_cap = 64;
};

void run_simulate(const SimulateOptions& opt) {
  ChunkTiming timing;
  int n = opt.n;
  std::vector<std::pair<std::string, std::string>> inputs;

  if (opt.aa_ms >= 0.0) {
    // Explicit per-chunk durations.
    if (n == 0) n = 1;
    timing.aa = opt.aa_ms * 1e-3;
    timing.ag = std::max(0.0, opt.ag_ms) * 1e-3;
    timing.d2d = std::max(0.0, opt.d2d_ms) * 1e-3;
    timing.n = n;
  } else {
    if (opt.model.empty() || opt.cluster.empty() || opt.curves.empty()) {
      throw std::invalid_argument(
          "simulate: pass either --aa-ms/--ag-ms/--d2d-ms or --model/--cluster/--curves");
    }
    const ModelSpec model = load_model_spec(opt.model);
    const ParallelSpec par = load_parallel_spec(opt.model);
    const ClusterSpec cluster = load_cluster_spec(opt.cluster);
    require_valid(model, par, cluster);
    const CurveSet curves = load_curve_set(opt.curves, opt.i_minimal);
    const OverheadModel overhead{opt.alpha_comm_ms * 1e-3, opt.alpha_copy_ms * 1e-3};
    const double volume = traffic_volume(model);
    switch (opt.level) {
      case StrategyLevel::Baseline:
        n = 1;
        timing = {baseline_time(volume, par.e, cluster.b1, curves.alltoall, overhead),
                  0.0, 0.0, 1, volume};
        break;
      case StrategyLevel::O1:
        n = 1;
        timing = {chunk_alltoall_time(volume, 1, par.t, par.e, cluster.b1,
                                      curves.alltoall, overhead),
                  par.t > 1 ? chunk_allgather_time(volume, 1, par.t, cluster.b2,
                                                   curves.allgather, overhead)
                            : 0.0,
                  0.0, 1, volume};
        break;
      case StrategyLevel::O2:
      case StrategyLevel::O3: {
        if (n == 0) {
          const ChunkSearchResult found =
              opt.level == StrategyLevel::O2
                  ? o2_search(model, par, cluster, curves, overhead, opt.n_cap)
                  : o3_search(model, par, cluster, curves, overhead, opt.n_cap);
          n = found.n_opt;
          timing = found.per_chunk;
        } else {
          timing = {chunk_alltoall_time(volume, n, par.t, par.e, cluster.b1,
                                        curves.alltoall, overhead),
                    chunk_allgather_time(volume, n, par.t, cluster.b2,
                                         curves.allgather, overhead),
                    chunk_d2d_time(volume, n, cluster.b3, curves.d2d, overhead), n,
                    volume};
        }
        break;
      }
    }
    inputs = {{"model", opt.model},
              {"cluster", opt.cluster},
              {"alltoall_curve", opt.curves + "/alltoall.csv"},
              {"allgather_curve", opt.curves + "/allgather.csv"},
              {"d2d_curve", opt.curves + "/d2d.csv"}};
  }

  if (opt.level == StrategyLevel::Baseline || opt.level == StrategyLevel::O1) n = 1;
  const pipesim::TaskGraph graph =
      pipesim::build_pipeline(opt.level, n, timing, opt.expert_ms * 1e-3, opt.phases);
  const pipesim::StreamTrace trace = pipesim::simulate(graph);

  json spans = json::array();
  for (const auto& span : trace.spans) {
    spans.push_back({{"task", span.id},
                     {"stream", pipesim::to_string(span.stream)},
                     {"start_ms", span.start * 1e3},
                     {"end_ms", span.end * 1e3}});
  }
  json report{{"level", to_string(opt.level)},
              {"n", n},
              {"phases", opt.phases},
              {"makespan_ms", trace.makespan * 1e3},
              {"trace", spans}};
  report["manifest"] = manifest_json(make_manifest("simulate", inputs));
  emit(report, opt.output);

  if (!opt.gantt.empty()) {
    std::ofstream out(opt.gantt);
    if (!out) throw std::runtime_error("cannot write " + opt.gantt);
    out << "task,stream,start_ms,end_ms\n";
    out.precision(17);
    for (const auto& span : trace.spans) {
      out << span.id << "," << pipesim::to_string(span.stream) << ","
          << span.start * 1e3 << "," << span.end * 1e3 << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// memory

struct MemoryOptions {
  std::string model, output;
  ZeroStage stage = ZeroStage::Baseline;
  ActivationMode mode = ActivationMode::NoParallel;
};

void run_memory(const MemoryOptions& opt) {
  const ModelSpec model = load_model_spec(opt.model);
  const ParallelSpec par = load_parallel_spec(opt.model);
  const MemoryBreakdown mem = total_memory(model, par, opt.stage, opt.mode);
  json report{{"psi1", mem.psi1}, {"psi2", mem.psi2}, {"act", mem.act}, {"total", mem.total}};
  report["manifest"] = manifest_json(make_manifest("memory", {{"model", opt.model}}));
  emit(report, opt.output);
}

// ---------------------------------------------------------------------------
// conflicts

struct ConflictOptions {
  std::string timeline, output;
};

json event_json(const CommEvent& ev) {
  return json{{"group", to_string(ev.group)},
              {"resource", to_string(ev.resource)},
              {"phase", to_string(ev.phase)},
              {"start_ms", ev.start * 1e3},
              {"end_ms", ev.end * 1e3},
              {"label", ev.label}};
}

void run_conflicts(const ConflictOptions& opt) {
  const std::vector<CommEvent> timeline = read_timeline_csv(opt.timeline);
  const ConflictReport detected = detect_conflicts(timeline);
  const std::vector<CommEvent> resolved = resolve_by_priority(timeline);

  json pairs = json::array();
  for (const auto& pair : detected.pairs) {
    const std::size_t loser = pair.winner == pair.first ? pair.second : pair.first;
    pairs.push_back({{"first", event_json(timeline[pair.first])},
                     {"second", event_json(timeline[pair.second])},
                     {"winner", to_string(timeline[pair.winner].group)},
                     {"loser", to_string(timeline[loser].group)},
                     {"required_delay_ms", pair.required_delay * 1e3}});
  }
  json adjusted = json::array();
  for (const auto& ev : resolved) adjusted.push_back(event_json(ev));
  json report{{"conflict_count", detected.pairs.size()},
              {"conflicts", pairs},
              {"resolved", adjusted}};
  report["manifest"] =
      manifest_json(make_manifest("conflicts", {{"timeline", opt.timeline}}));
  emit(report, opt.output);
}

// ---------------------------------------------------------------------------
// expand

struct ExpandOptions {
  std::int64_t ep = 1, cp = 1, switch_capacity = 1;
  std::int64_t tokens_per_ep_group = 0;
  std::string output;
};

void run_expand(const ExpandOptions& opt) {
  const ExpansionPlan plan = plan_expansion(opt.ep, opt.cp, opt.switch_capacity);
  json report{{"mode", to_string(plan.mode)},
              {"network_scale", plan.network_scale},
              {"minibatch_per_ep_group", plan.minibatch_per_ep_group},
              {"rationale", plan.rationale}};
  if (opt.tokens_per_ep_group > 0) {
    report["context_capacity_tokens"] =
        context_capacity(opt.cp, opt.tokens_per_ep_group);
  }
  report["manifest"] = manifest_json(make_manifest("expand", {}));
  emit(report, opt.output);
}

// ---------------------------------------------------------------------------
// verify-dataplane

struct VerifyOptions {
  int t = 2, e = 2, n = 1;
  std::uint64_t seed = 0;
  int tokens = 0;  // per node; 0: derived from the seed
  int width = 0;   // payload elements; 0: derived from the seed
  StrategyLevel level = StrategyLevel::O2;
};

int run_verify(const VerifyOptions& opt) {
  using namespace dataplane;
  std::mt19937_64 rng(opt.seed);
  const VirtualTopology topo{opt.e, opt.t};
  const int tokens = opt.tokens > 0 ? opt.tokens : opt.n * (1 + int(rng() % 4));
  const int width = opt.width > 0 ? opt.width : opt.t * (1 + int(rng() % 3));
  if (tokens % opt.n != 0) {
    throw std::invalid_argument("verify-dataplane: --tokens must be divisible by -n");
  }
  if (width % opt.t != 0) {
    throw std::invalid_argument("verify-dataplane: --payload-width must be divisible by --tp");
  }
  const int k = 1 + int(rng() % std::min(2, opt.e));

  std::vector<PermutedBatch> permuted(topo.e);
  std::vector<RoutingDecision> routing(topo.e);
  for (int node = 0; node < topo.e; ++node) {
    std::vector<std::vector<std::int64_t>> payloads(tokens);
    std::vector<std::vector<double>> scores(tokens);
    for (int i = 0; i < tokens; ++i) {
      payloads[i].resize(width);
      for (auto& v : payloads[i]) v = std::int64_t(rng() % 100);
      scores[i].resize(topo.e);
      for (auto& s : scores[i]) s = double(rng() % 1000) / 100.0;
    }
    const Buffer batch = make_batch(topo, node, payloads);
    routing[node] = route_topk(scores, k);
    // Exact dyadic probabilities keep the combine scale-add bit-exact.
    for (auto& tr : routing[node].per_token) {
      for (auto& p : tr.probs) p = 1.0 / k;
    }
    permuted[node] = permute(batch, routing[node]);
  }

  const CardBuffers mono = dispatch_monolithic(permuted, topo);
  const CardBuffers chunked = dispatch_chunked(permuted, topo, opt.level, opt.n);
  for (int card = 0; card < topo.cards(); ++card) {
    if (mono[card].size() != chunked[card].size()) {
      std::cout << "FAIL dispatch-equivalence: card=" << card
                << " record count " << chunked[card].size() << " != "
                << mono[card].size() << "\n";
      return 1;
    }
    for (std::size_t r = 0; r < mono[card].size(); ++r) {
      if (!(mono[card][r] == chunked[card][r])) {
        std::cout << "FAIL dispatch-equivalence: card=" << card << " position=" << r
                  << " (expected token_id=" << mono[card][r].token_id
                  << ", got token_id=" << chunked[card][r].token_id << ")\n";
        return 1;
      }
    }
  }

  // Identity experts: the combined output must reproduce the batches.
  const auto combined = combine_unpermute(chunked, routing, permuted, topo);
  for (int node = 0; node < topo.e; ++node) {
    for (int i = 0; i < tokens; ++i) {
      const auto& got = combined[node][i].payload;
      const auto& expect = permuted[node].records[permuted[node].inverse_map[i][0]];
      for (int q = 0; q < width; ++q) {
        if (got[q] != double(expect.payload[q])) {
          std::cout << "FAIL round-trip: card=" << topo.canonical_card(node)
                    << " position=" << i << "\n";
          return 1;
        }
      }
    }
  }

  std::cout << "PASS dispatch-equivalence and round-trip (tp=" << opt.t
            << " ep=" << opt.e << " n=" << opt.n << " seed=" << opt.seed
            << " tokens=" << tokens << " width=" << width << " k=" << k
            << " level=" << to_string(opt.level) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
  std::string bench, cluster, out_curves, output;
};

void run_calibrate(const CalibrateOptions& opt) {
  const std::vector<BenchSample> samples = read_bench_csv(opt.bench);
  const ClusterSpec cluster = load_cluster_spec(opt.cluster);
  const CalibrationSet calibrated = calibrate(samples, cluster);

  std::filesystem::create_directories(opt.out_curves);
  const std::string aa_path = opt.out_curves + "/alltoall.csv";
  const std::string ag_path = opt.out_curves + "/allgather.csv";
  const std::string d2d_path = opt.out_curves + "/d2d.csv";
  write_curve_csv(aa_path, calibrated.curves.alltoall);
  write_curve_csv(ag_path, calibrated.curves.allgather);
  write_curve_csv(d2d_path, calibrated.curves.d2d);

  json report{{"alpha_comm_ms", calibrated.overhead.alpha_comm * 1e3},
              {"alpha_copy_ms", calibrated.overhead.alpha_copy * 1e3},
              {"curves",
               {{"alltoall", {{"path", aa_path}, {"points", calibrated.curves.alltoall.points.size()}}},
                {"allgather", {{"path", ag_path}, {"points", calibrated.curves.allgather.points.size()}}},
                {"d2d", {{"path", d2d_path}, {"points", calibrated.curves.d2d.points.size()}}}}}};
  report["manifest"] = manifest_json(
      make_manifest("calibrate", {{"bench", opt.bench}, {"cluster", opt.cluster}}));
  emit(report, opt.output);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"network-traffic-aware planner and simulator for MoE training communication"};
  app.require_subcommand(1);

  PlanOptions plan_opt;
  auto* plan = app.add_subcommand("plan", "select the AllToAll strategy and estimate performance");
  plan->add_option("--model", plan_opt.model, "model + parallel config file")->required();
  plan->add_option("--cluster", plan_opt.cluster, "cluster config file")->required();
  plan->add_option("--curves", plan_opt.curves, "directory with alltoall/allgather/d2d.csv")->required();
  plan->add_option("--i-minimal", plan_opt.i_minimal, "minimum per-chunk volume in bytes");
  plan->add_option("--alpha-comm-ms", plan_opt.alpha_comm_ms, "fixed overhead per communication call");
  plan->add_option("--alpha-copy-ms", plan_opt.alpha_copy_ms, "fixed overhead per D2D copy");
  plan->add_option("--n-cap", plan_opt.n_cap, "hard cap on the chunk count");
  plan->add_option("--moe-layers", plan_opt.moe_layers, "MoE layer count (default: model layers)");
  plan->add_option("--compute-ms", plan_opt.compute_ms, "non-communication step time");
  plan->add_option("--output,-o", plan_opt.output, "write the JSON report here");
  plan->callback([&plan_opt] { run_plan(plan_opt); });

  SimulateOptions sim_opt;
  auto* simulate = app.add_subcommand("simulate", "run the multi-stream schedule simulator");
  simulate->add_option("--level", sim_opt.level, "strategy level")
      ->required()
      ->transform(CLI::CheckedTransformer(kLevelNames, CLI::ignore_case));
  simulate->add_option("-n,--chunks", sim_opt.n, "chunk count (default: searched)");
  simulate->add_option("--aa-ms", sim_opt.aa_ms, "per-chunk AllToAll time");
  simulate->add_option("--ag-ms", sim_opt.ag_ms, "per-chunk AllGather time");
  simulate->add_option("--d2d-ms", sim_opt.d2d_ms, "per-chunk D2D time");
  simulate->add_option("--expert-ms", sim_opt.expert_ms, "expert compute time");
  simulate->add_option("--phases", sim_opt.phases, "1: dispatch only, 2: dispatch + combine")
      ->check(CLI::Range(1, 2));
  simulate->add_option("--model", sim_opt.model, "model + parallel config file");
  simulate->add_option("--cluster", sim_opt.cluster, "cluster config file");
  simulate->add_option("--curves", sim_opt.curves, "efficiency curve directory");
  simulate->add_option("--i-minimal", sim_opt.i_minimal, "minimum per-chunk volume in bytes");
  simulate->add_option("--alpha-comm-ms", sim_opt.alpha_comm_ms, "fixed overhead per communication call");
  simulate->add_option("--alpha-copy-ms", sim_opt.alpha_copy_ms, "fixed overhead per D2D copy");
  simulate->add_option("--n-cap", sim_opt.n_cap, "hard cap on the chunk count");
  simulate->add_option("--gantt", sim_opt.gantt, "write a task,stream,start_ms,end_ms CSV here");
  simulate->add_option("--output,-o", sim_opt.output, "write the JSON report here");
  simulate->callback([&sim_opt] { run_simulate(sim_opt); });

  MemoryOptions mem_opt;
  auto* memory = app.add_subcommand("memory", "per-GPU weight and activation memory");
  memory->add_option("--model", mem_opt.model, "model + parallel config file")->required();
  memory->add_option("--zero-stage", mem_opt.stage, "optimizer sharding stage")
      ->transform(CLI::CheckedTransformer(kStageNames, CLI::ignore_case));
  memory->add_option("--activation-mode", mem_opt.mode, "activation storage mode")
      ->transform(CLI::CheckedTransformer(kModeNames, CLI::ignore_case));
  memory->add_option("--output,-o", mem_opt.output, "write the JSON report here");
  memory->callback([&mem_opt] { run_memory(mem_opt); });

  ConflictOptions conflict_opt;
  auto* conflicts = app.add_subcommand("conflicts", "detect and resolve inter-node overlaps");
  conflicts->add_option("--timeline", conflict_opt.timeline, "timeline CSV")->required();
  conflicts->add_option("--output,-o", conflict_opt.output, "write the JSON report here");
  conflicts->callback([&conflict_opt] { run_conflicts(conflict_opt); });

  ExpandOptions expand_opt;
  auto* expand = app.add_subcommand("expand", "long-context cluster expansion plan");
  expand->add_option("--ep", expand_opt.ep, "expert-parallel world size")->required();
  expand->add_option("--cp", expand_opt.cp, "context-parallel world size")->required();
  expand->add_option("--switch-capacity", expand_opt.switch_capacity,
                     "endpoints the switch fabric supports")->required();
  expand->add_option("--tokens-per-ep-group", expand_opt.tokens_per_ep_group,
                     "context tokens one expert group handles");
  expand->add_option("--output,-o", expand_opt.output, "write the JSON report here");
  expand->callback([&expand_opt] { run_expand(expand_opt); });

  VerifyOptions verify_opt;
  int verify_rc = 0;
  auto* verify = app.add_subcommand(
      "verify-dataplane", "check chunked dispatch against the monolithic exchange");
  verify->add_option("-t,--tp", verify_opt.t, "tensor-parallel group size")->required();
  verify->add_option("-e,--ep", verify_opt.e, "expert-parallel group size")->required();
  verify->add_option("-n,--chunks", verify_opt.n, "chunk count")->required();
  verify->add_option("--seed", verify_opt.seed, "instance seed");
  verify->add_option("--tokens", verify_opt.tokens, "tokens per node");
  verify->add_option("--payload-width", verify_opt.width, "payload elements per token");
  verify->add_option("--level", verify_opt.level, "strategy level")
      ->transform(CLI::CheckedTransformer(kLevelNames, CLI::ignore_case));
  verify->callback([&verify_opt, &verify_rc] { verify_rc = run_verify(verify_opt); });

  CalibrateOptions cal_opt;
  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "fit efficiency curves and overheads from benchmark measurements");
  calibrate_cmd->add_option("--bench", cal_opt.bench, "benchmark CSV")->required();
  calibrate_cmd->add_option("--cluster", cal_opt.cluster, "cluster config file")->required();
  calibrate_cmd->add_option("--out-curves", cal_opt.out_curves, "directory for fitted curves")
      ->required();
  calibrate_cmd->add_option("--output,-o", cal_opt.output, "write the JSON report here");
  calibrate_cmd->callback([&cal_opt] { run_calibrate(cal_opt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const moeplan::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationFailure& e) {
    std::cerr << "validation failed:\n";
    for (const auto& violation : e.violations) {
      std::cerr << "  - " << violation << "\n";
    }
    return 3;
  } catch (const moeplan::CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return verify_rc;
}
