#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "seed/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Continual learning with a selectively trained ensemble of Gaussian-scored experts"};
  app.require_subcommand(1);

  seed::RunCommand run;
  std::vector<std::string> sets;
  auto* run_cmd = app.add_subcommand("run", "train a task stream and write reports");
  run_cmd->add_option("--config", run.config_path, "JSON config file")->required();
  run_cmd->add_option("--seed", run.seed, "global seed");
  run_cmd->add_option("--strategy", run.strategy, "kl-max | kl-min | random | round-robin | train-all");
  run_cmd->add_option("--experts", run.experts, "number of experts K");
  run_cmd->add_option("--tau", run.tau, "softmax temperature");
  run_cmd->add_option("--alpha", run.alpha, "distillation weight");
  run_cmd->add_option("--representation", run.representation, "full | diag | prototype");
  run_cmd->add_option("--out-dir", run.out_dir, "output directory");
  run_cmd->add_flag("--trace", run.trace, "dump per-sample prediction traces of the final evaluation");
  run_cmd->add_option("--set", sets, "override any config key, e.g. --set training.epochs=10");

  seed::EvalCommand eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved run state");
  eval_cmd->add_option("--state", eval.state_path, "run-state file")->required();
  eval_cmd->add_option("--config", eval.config_path, "config describing the evaluation data");
  eval_cmd->add_option("--mode", eval.mode, "agnostic | aware | both");
  eval_cmd->add_option("--tau", eval.tau, "softmax temperature (defaults to the stored one)");

  seed::InspectCommand inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "print overlap, diversity or parameter tables");
  inspect_cmd->add_option("--state", inspect.state_path, "run-state file")->required();
  inspect_cmd->add_option("what", inspect.what, "overlap | diversity | params")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : seed::kExitConfig;
  }

  if (*run_cmd) {
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << "config error: --set expects key=value, got '" << s << "'\n";
        return seed::kExitConfig;
      }
      run.sets.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return seed::cmd_run(run, std::cout, std::cerr);
  }
  if (*eval_cmd) return seed::cmd_eval(eval, std::cout, std::cerr);
  return seed::cmd_inspect(inspect, std::cout, std::cerr);
}
