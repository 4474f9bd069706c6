#include "seed/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "seed/config.hpp"
#include "seed/error.hpp"
#include "seed/state_io.hpp"

namespace seed {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool is_config_error(const Error& e) {
  return e.kind() == ErrorKind::InvalidConfig || e.kind() == ErrorKind::TooManyTasks;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

json trace_json(int task, int label, const PredictionTrace& t) {
  json experts = json::array();
  for (std::size_t e = 0; e < t.experts.size(); ++e) {
    json ll = json::array();
    for (double v : t.log_likelihood[e]) ll.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    experts.push_back({{"expert", t.experts[e] + 1}, {"log_likelihood", ll}, {"softmax", t.softmax[e]}});
  }
  return {{"task", task + 1}, {"label", label},  {"candidates", t.candidates},
          {"experts", experts}, {"averaged", t.averaged}, {"predicted", t.predicted}};
}

json task_log_json(const TaskLog& log) {
  json trained = json::array();
  for (int k : log.trained) trained.push_back(k + 1);
  return {{"task", log.task + 1},
          {"classes", log.classes},
          {"selection", log.selection},
          {"chosen_experts", trained},
          {"overlap", log.overlap},
          {"final_loss", log.final_loss},
          {"final_ce", log.final_ce},
          {"final_kd", log.final_kd},
          {"wall_seconds", log.wall_seconds}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

RunConfig config_from_tree(const json& tree) { return parse_config(tree); }

}  // namespace

int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  json tree;
  try {
    std::ifstream in(cmd.config_path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + cmd.config_path);
    try {
      tree = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("malformed config: ") + e.what());
    }
    if (!tree.is_object()) throw Error(ErrorKind::InvalidConfig, "config root must be an object");
    for (const auto& [key, value] : cmd.sets) apply_override(tree, key, value);
    if (cmd.seed) tree["seed"] = *cmd.seed;
    if (cmd.strategy) tree["training"]["strategy"] = *cmd.strategy;
    if (cmd.experts) tree["model"]["experts"] = *cmd.experts;
    if (cmd.tau) tree["training"]["tau"] = *cmd.tau;
    if (cmd.alpha) tree["training"]["alpha"] = *cmd.alpha;
    if (cmd.representation) tree["training"]["representation"] = *cmd.representation;
    if (cmd.out_dir) tree["output"]["out_dir"] = *cmd.out_dir;
    if (cmd.trace) tree["output"]["trace"] = true;
    cfg = config_from_tree(tree);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    TaskStream stream = build_stream(cfg);
    const auto started = std::chrono::steady_clock::now();
    EnsembleState state = make_ensemble(cfg.model, cfg.experts, cfg.seed);

    std::vector<json> traces;
    RunOptions opts;
    opts.joint_reference = cfg.joint_reference;
    opts.joint_seed = Rng::substream(cfg.seed, "joint").next();
    if (cfg.output.trace)
      opts.trace = [&traces](int task, int label, const PredictionTrace& t) { traces.push_back(trace_json(task, label, t)); };
    const RunReport report = run_stream(state, stream, cfg.training, opts);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const fs::path dir = cfg.output.out_dir;
    fs::create_directories(dir);
    write_text(dir / "accuracy_matrix.csv", accuracy_csv(report.agnostic));
    write_text(dir / "task_aware_matrix.csv", accuracy_csv(report.aware));
    write_text(dir / "relative_accuracy.csv", relative_accuracy_csv(report.relative_accuracy));
    write_text(dir / "overlap.csv", overlap_csv(overlap_report(report.logs), cfg.experts));

    std::string log_lines;
    for (const auto& log : report.logs) log_lines += task_log_json(log).dump() + '\n';
    write_text(dir / "task_log.jsonl", log_lines);
    if (cfg.output.trace) {
      std::string lines;
      for (const auto& t : traces) lines += t.dump() + '\n';
      write_text(dir / "trace.jsonl", lines);
    }

    std::optional<double> intrans;
    if (report.joint) intrans = intransigence(report.agnostic, *report.joint);
    json chosen = json::array();
    for (const auto& log : report.logs) {
      json ks = json::array();
      for (int k : log.trained) ks.push_back(k + 1);
      chosen.push_back(ks);
    }
    const json summary = {
        {"metrics",
         {{"avg_inc_accuracy", report.avg_inc_agnostic()},
          {"avg_inc_accuracy_task_aware", report.avg_inc_aware()},
          {"final_accuracy", report.step_agnostic.back()},
          {"final_accuracy_task_aware", report.step_aware.back()},
          {"forgetting", optional_number(forgetting(report.agnostic))},
          {"intransigence", optional_number(intrans)}}},
        {"step_accuracy", report.step_agnostic},
        {"step_accuracy_task_aware", report.step_aware},
        {"joint_reference", report.joint ? json(*report.joint) : json(nullptr)},
        {"chosen_experts", chosen},
        {"params",
         {{"trunk", report.params.trunk},
          {"heads", report.params.heads},
          {"gaussians", report.params.gaussians},
          {"total", report.params.total()}}},
        {"config", to_json(cfg)},
        {"metadata", {{"timestamp", static_cast<std::int64_t>(std::time(nullptr))}, {"wall_seconds", wall}}}};
    write_text(dir / "report.json", summary.dump(2) + '\n');

    save_state(dir / "state.bin", RunStateFile{to_json(cfg).dump(), std::move(state)});
    out << "avg_inc_accuracy " << report.avg_inc_agnostic() << " (task-aware " << report.avg_inc_aware() << ")\n"
        << "wrote " << dir.string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

namespace {

struct Loaded {
  RunStateFile file;
  RunConfig cfg;
  TaskStream stream;
};

Loaded load_for_eval(const std::string& state_path, const std::optional<std::string>& config_path) {
  Loaded l;
  l.file = load_state(state_path);
  if (config_path) {
    l.cfg = load_config(*config_path);
  } else {
    try {
      l.cfg = parse_config(json::parse(l.file.config_json));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::CorruptState, std::string("stored config: ") + e.what());
    }
  }
  l.stream = build_stream(l.cfg);
  const EnsembleState& s = l.file.state;
  if (static_cast<std::size_t>(s.tasks_completed) > l.stream.test.size())
    throw Error(ErrorKind::MissingClass, "state has more tasks than the data");
  for (int t = 0; t < s.tasks_completed; ++t)
    if (l.stream.test[static_cast<std::size_t>(t)].classes != s.task_classes[static_cast<std::size_t>(t)])
      throw Error(ErrorKind::MissingClass, "task " + std::to_string(t + 1) + " classes differ from the state");
  if (l.stream.test.front().x.front().size() != s.net.input_dim)
    throw Error(ErrorKind::DimensionMismatch, "data input width differs from the state");
  return l;
}

}  // namespace

int cmd_eval(const EvalCommand& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.mode != "agnostic" && cmd.mode != "aware" && cmd.mode != "both") {
    err << "config error: mode must be agnostic, aware or both\n";
    return kExitConfig;
  }
  try {
    const Loaded l = load_for_eval(cmd.state_path, cmd.config_path);
    const EnsembleState& s = l.file.state;
    if (s.tasks_completed == 0) throw Error(ErrorKind::NoTrainedExperts, "state has no completed tasks");
    const double tau = cmd.tau.value_or(l.cfg.training.tau);
    const StepEvaluation eval =
        evaluate_step(s, std::span(l.stream.test).first(static_cast<std::size_t>(s.tasks_completed)), tau);
    json result = {{"tasks_completed", s.tasks_completed}, {"tau", tau}};
    if (cmd.mode != "aware") result["task_agnostic"] = {{"per_task", eval.agnostic}, {"all", eval.step_agnostic}};
    if (cmd.mode != "agnostic") result["task_aware"] = {{"per_task", eval.aware}, {"all", eval.step_aware}};
    out << result.dump(2) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_inspect(const InspectCommand& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.what != "overlap" && cmd.what != "diversity" && cmd.what != "params") {
    err << "config error: inspect target must be overlap, diversity or params\n";
    return kExitConfig;
  }
  try {
    if (cmd.what == "diversity") {
      const Loaded l = load_for_eval(cmd.state_path, std::nullopt);
      const EnsembleState& s = l.file.state;
      out << relative_accuracy_csv(expert_relative_accuracy(
          s, std::span(l.stream.test).first(static_cast<std::size_t>(s.tasks_completed))));
      return kExitOk;
    }
    const RunStateFile file = load_state(cmd.state_path);
    const EnsembleState& s = file.state;
    if (cmd.what == "overlap") {
      out << overlap_csv(overlap_report(s.logs), s.experts());
    } else {
      const ParamCounts counts = param_count(s.trunk, s.heads, s.banks);
      out << "component,count\n"
          << "trunk," << counts.trunk << '\n'
          << "heads," << counts.heads << '\n'
          << "gaussians," << counts.gaussians << '\n'
          << "total," << counts.total() << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace seed
