#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>

#include "distillery/rundir.hpp"

namespace {

int finish_distill(const distillery::StageResult& result) {
  if (!result.warning.empty()) std::cerr << "warning: " << result.warning << "\n";
  return result.saturated ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterative response distillation: train a pool of dialogue models on a "
               "shrinking corpus, judge them adversarially, and pick per question"};
  app.require_subcommand(1);

  std::string config_path, run_dir, input_path, output_path, strategy_name;
  bool force = false;
  bool logprobs = false;
  std::size_t top_k = 0;
  std::uint64_t seed = 0;

  auto add_run_dir = [&run_dir](CLI::App* cmd) {
    cmd->add_option("--run-dir", run_dir, "run directory holding all artifacts")->required();
  };
  auto add_force = [&force](CLI::App* cmd) {
    cmd->add_flag("--force", force, "redo the stage even if its marker exists");
  };

  CLI::App* distill = app.add_subcommand(
      "distill", "build the corpus and train the iterative model pool");
  distill->add_option("--config", config_path, "flat key = value run configuration")->required();
  add_run_dir(distill);
  add_force(distill);

  CLI::App* train_eval = app.add_subcommand(
      "train-evaluator", "train both adversarial judges on the finished pool");
  add_run_dir(train_eval);
  add_force(train_eval);

  CLI::App* train_policy = app.add_subcommand(
      "train-policy", "train the per-question model selector against the judge");
  add_run_dir(train_policy);
  add_force(train_policy);

  CLI::App* respond = app.add_subcommand(
      "respond", "answer one question per input line as 'index TAB response'");
  add_run_dir(respond);
  respond->add_option("--input", input_path, "question file (default: stdin)");
  respond->add_option("--output", output_path, "answer file (default: stdout)");
  CLI::Option* strategy_opt =
      respond->add_option("--strategy", strategy_name, "greedy, stochastic-greedy, or sample");
  CLI::Option* k_opt = respond->add_option("--k", top_k, "candidate count for stochastic-greedy");
  CLI::Option* seed_opt = respond->add_option("--seed", seed, "decoding seed override");
  respond->add_flag("--logprobs", logprobs, "append the response log-probability column");

  CLI::App* report = app.add_subcommand(
      "report", "regenerate every report table from the run directory");
  add_run_dir(report);
  add_force(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(distill)) {
      const distillery::RunConfig config = distillery::load_run_config(config_path);
      return finish_distill(distillery::stage_distill(config, run_dir, force, &std::cout));
    }
    if (app.got_subcommand(train_eval)) {
      distillery::stage_train_evaluator(run_dir, force, &std::cout);
      return 0;
    }
    if (app.got_subcommand(train_policy)) {
      distillery::stage_train_policy(run_dir, force, &std::cout);
      return 0;
    }
    if (app.got_subcommand(report)) {
      distillery::stage_report(run_dir, force, &std::cout);
      return 0;
    }
    distillery::RespondOptions options;
    options.logprobs = logprobs;
    if (strategy_opt->count())
      options.strategy = distillery::decode_strategy_from_string(strategy_name);
    if (k_opt->count()) options.k = top_k;
    if (seed_opt->count()) options.seed = seed;
    std::ifstream file_in;
    if (!input_path.empty()) {
      file_in.open(input_path);
      if (!file_in) throw distillery::IoError("cannot open input file " + input_path);
    }
    std::ofstream file_out;
    if (!output_path.empty()) {
      file_out.open(output_path, std::ios::trunc);
      if (!file_out) throw distillery::IoError("cannot write output file " + output_path);
    }
    distillery::respond_lines(run_dir, input_path.empty() ? std::cin : file_in,
                              output_path.empty() ? std::cout : file_out, options, &std::cerr);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
