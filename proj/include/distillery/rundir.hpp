#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "distillery/corpus.hpp"
#include "distillery/decode.hpp"
#include "distillery/distill.hpp"
#include "distillery/errors.hpp"
#include "distillery/evaluator.hpp"
#include "distillery/metrics.hpp"
#include "distillery/policy.hpp"
#include "distillery/random.hpp"
#include "distillery/runconfig.hpp"
#include "distillery/synthetic.hpp"
#include "distillery/vocab.hpp"

namespace distillery {

// Fixed layout of a run directory; every stage reads and writes through this.
struct RunPaths {
  std::filesystem::path root;

  explicit RunPaths(std::filesystem::path r) : root(std::move(r)) {}

  std::filesystem::path config() const { return root / "config.ini"; }
  std::filesystem::path vocab() const { return root / "vocab.txt"; }
  std::filesystem::path train_corpus() const { return root / "train_corpus.txt"; }
  std::filesystem::path holdout_corpus() const { return root / "holdout_corpus.txt"; }
  std::filesystem::path status() const { return root / "distill_status.json"; }

  std::filesystem::path iter_dir(std::size_t i) const {
    return root / ("iter" + std::to_string(i));
  }
  std::filesystem::path model_ckpt(std::size_t i) const { return iter_dir(i) / "model.ckpt"; }
  std::filesystem::path frequent_tsv(std::size_t i) const { return iter_dir(i) / "frequent.tsv"; }
  std::filesystem::path removed_ids(std::size_t i) const {
    return iter_dir(i) / "removed_ids.txt";
  }
  std::filesystem::path round_json(std::size_t i) const { return iter_dir(i) / "round.json"; }

  std::filesystem::path evaluator_ckpt() const { return root / "evaluator.ckpt"; }
  std::filesystem::path evaluator2_ckpt() const { return root / "evaluator2.ckpt"; }
  std::filesystem::path eval_metrics() const { return root / "eval_metrics.json"; }

  std::filesystem::path policy_ckpt() const { return root / "policy.ckpt"; }
  std::filesystem::path baseline_ckpt() const { return root / "baseline.ckpt"; }
  std::filesystem::path policy_metrics() const { return root / "policy_metrics.json"; }

  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path iterations_json() const { return report_dir() / "iterations.json"; }
  std::filesystem::path iterations_tsv() const { return report_dir() / "iterations.tsv"; }
  std::filesystem::path adversarial_json() const { return report_dir() / "adversarial.json"; }
  std::filesystem::path adversarial_tsv() const { return report_dir() / "adversarial.tsv"; }
  std::filesystem::path histogram_json() const { return report_dir() / "histogram.json"; }

  std::filesystem::path marker(const std::string& stage) const {
    return root / ("stage." + stage + ".done");
  }
};

struct StageResult {
  bool skipped = false;
  bool saturated = false;
  std::string warning;
};

namespace detail {

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad json in " + path.string() + ": " + e.what());
  }
  return j;
}

inline void touch_marker(const RunPaths& paths, const std::string& stage) {
  std::ofstream out(paths.marker(stage), std::ios::trunc);
  if (!out) throw IoError("cannot write stage marker for " + stage);
  out << "done\n";
}

inline bool stage_done(const RunPaths& paths, const std::string& stage) {
  return std::filesystem::exists(paths.marker(stage));
}

inline void log_line(std::ostream* log, const std::string& text) {
  if (log) *log << text << "\n";
}

}  // namespace detail

// The constant-question world: one source token, answers drawn from a fixed
// label distribution. Majority labels dominate early decodes, so successive
// removal rounds rotate the argmax down the ranking.
inline std::vector<std::pair<std::string, double>> standard_fruit_labels() {
  return {{"apple", 0.30},
          {"orange", 0.25},
          {"blueberry", 0.15},
          {"blackberry", 0.15},
          {"raspberry", 0.15}};
}

inline ParallelCorpus synthesize_corpus(const RunConfig& config) {
  if (config.synthetic == "fruit")
    return gen_fruit_world(standard_fruit_labels(), config.synthetic_size, config.seed);
  if (config.synthetic == "dialogues")
    return gen_synthetic_dialogues(DialogueTemplates::standard(), config.generic_fraction,
                                   config.synthetic_size, config.seed);
  throw ConfigError("config: unknown synthetic corpus '" + config.synthetic + "'");
}

struct CorpusSplit {
  ParallelCorpus train;
  ParallelCorpus holdout;
};

inline CorpusSplit split_holdout(const ParallelCorpus& full, double fraction,
                                 std::uint64_t seed) {
  if (full.size() < 2) throw UsageError("split_holdout: need at least two examples");
  if (fraction <= 0.0 || fraction >= 1.0)
    throw UsageError("split_holdout: fraction outside (0, 1)");
  std::size_t hold = static_cast<std::size_t>(fraction * static_cast<double>(full.size()));
  hold = std::clamp<std::size_t>(hold, 1, full.size() - 1);
  Rng rng(derive_seed(seed, "corpus-split"));
  const auto order = shuffled_iota(rng, full.size());
  std::vector<std::size_t> hold_idx(order.begin(), order.begin() + hold);
  std::vector<std::size_t> train_idx(order.begin() + hold, order.end());
  std::sort(hold_idx.begin(), hold_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {full.take(train_idx), full.take(hold_idx)};
}

inline std::shared_ptr<const Vocabulary> load_run_vocab(const RunPaths& paths) {
  return std::make_shared<const Vocabulary>(Vocabulary::load(paths.vocab()));
}

// Rebuild the model pool from per-iteration checkpoints; round statistics come
// back from the round files so reports can be regenerated from disk alone.
inline ModelPool load_run_pool(const RunPaths& paths,
                               const std::shared_ptr<const Vocabulary>& vocab) {
  ModelPool pool;
  for (std::size_t i = 1;; ++i) {
    if (!std::filesystem::exists(paths.model_ckpt(i))) break;
    pool.models.push_back(Seq2SeqModel::load(paths.model_ckpt(i), vocab));
    DistillationRound round;
    round.iteration = i;
    if (std::filesystem::exists(paths.round_json(i))) {
      const auto j = detail::read_json_file(paths.round_json(i));
      round.input_size = j.value("input_size", std::size_t{0});
      round.decoded = j.value("decoded", std::size_t{0});
      round.threshold = j.value("threshold", 0.0);
      round.fraction = j.value("removal_fraction", 0.0);
      round.saturated = j.value("saturated", false);
    }
    pool.rounds.push_back(std::move(round));
  }
  if (pool.models.empty())
    throw UsageError("no trained models under " + paths.root.string() + "; run distill first");
  if (std::filesystem::exists(paths.status())) {
    const auto j = detail::read_json_file(paths.status());
    pool.saturated_early = j.value("saturated_early", false);
    pool.warning = j.value("warning", std::string{});
  }
  return pool;
}

namespace detail {

inline void write_frequent_tsv(const FrequentList& frequent, const Vocabulary& vocab,
                               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "response\tcount\n";
  for (const auto& e : frequent.entries) out << vocab.render(e.response) << "\t" << e.count << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_removed_ids(const std::vector<std::size_t>& ids,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (auto id : ids) out << id << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_iteration_tables(const std::vector<IterationReport>& rows,
                                   const RunPaths& paths) {
  std::filesystem::create_directories(paths.report_dir());
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"iteration", r.iteration},
                   {"train_size", r.train_size},
                   {"dev_perplexity", r.dev_perplexity},
                   {"oracle_perplexity", r.oracle_perplexity},
                   {"distinct_1", r.div1},
                   {"distinct_2", r.div2}});
  }
  write_json_file(arr, paths.iterations_json());
  std::ofstream out(paths.iterations_tsv(), std::ios::trunc);
  if (!out) throw IoError("cannot write " + paths.iterations_tsv().string());
  out << "iteration\ttrain_size\tdev_perplexity\toracle_perplexity\tdistinct_1\tdistinct_2\n";
  for (const auto& r : rows) {
    out << r.iteration << "\t" << r.train_size << "\t" << r.dev_perplexity << "\t"
        << r.oracle_perplexity << "\t" << r.div1 << "\t" << r.div2 << "\n";
  }
  if (!out) throw IoError("write failed for " + paths.iterations_tsv().string());
}

}  // namespace detail

// Stage 1: build (or load) the corpus, split off the report holdout, run the
// iterative distillation loop, and leave one subdirectory per iteration.
inline StageResult stage_distill(const RunConfig& config, const std::filesystem::path& root,
                                 bool force = false, std::ostream* log = nullptr) {
  config.validate();
  RunPaths paths(root);
  std::filesystem::create_directories(root);
  if (!force && detail::stage_done(paths, "distill")) {
    StageResult out;
    out.skipped = true;
    if (std::filesystem::exists(paths.status())) {
      const auto j = detail::read_json_file(paths.status());
      out.saturated = j.value("saturated_early", false);
      out.warning = j.value("warning", std::string{});
    }
    detail::log_line(log, "distill: already done, skipping (use force to redo)");
    return out;
  }

  save_run_config(config, paths.config());
  ParallelCorpus full = config.corpus_file.empty()
                            ? synthesize_corpus(config)
                            : load_corpus(config.corpus_file,
                                          CorpusOptions{.max_len = config.model.max_len});
  detail::log_line(log, "corpus: " + std::to_string(full.size()) + " pairs, vocabulary " +
                            std::to_string(full.vocab().size()));
  CorpusSplit split = split_holdout(full, config.holdout_fraction, config.seed);
  full.vocab().save(paths.vocab());
  write_corpus(split.train, paths.train_corpus());
  write_corpus(split.holdout, paths.holdout_corpus());

  const auto& vocab = full.vocab();
  RoundCallback on_round = [&](const DistillationRound& round, Seq2SeqModel& model) {
    std::filesystem::create_directories(paths.iter_dir(round.iteration));
    model.save(paths.model_ckpt(round.iteration));
    detail::write_frequent_tsv(round.frequent, vocab, paths.frequent_tsv(round.iteration));
    detail::write_removed_ids(round.removed_ids, paths.removed_ids(round.iteration));
    detail::write_json_file({{"iteration", round.iteration},
                             {"input_size", round.input_size},
                             {"decoded", round.decoded},
                             {"threshold", round.threshold},
                             {"removal_fraction", round.fraction},
                             {"frequent_responses", round.frequent.entries.size()},
                             {"removed", round.removed_ids.size()},
                             {"kept", round.kept.size()},
                             {"saturated", round.saturated}},
                            paths.round_json(round.iteration));
    detail::log_line(log, "iteration " + std::to_string(round.iteration) + ": trained on " +
                              std::to_string(round.input_size) + ", removed " +
                              std::to_string(round.removed_ids.size()) + ", kept " +
                              std::to_string(round.kept.size()));
  };

  ModelPool pool =
      run_distillation(split.train, config.to_distill_config(), config.seed, nullptr, on_round);
  detail::write_json_file({{"iterations_completed", pool.size()},
                           {"saturated_early", pool.saturated_early},
                           {"warning", pool.warning}},
                          paths.status());
  detail::write_iteration_tables(build_iteration_report(pool, split.holdout), paths);
  detail::touch_marker(paths, "distill");
  StageResult out;
  out.saturated = pool.saturated_early;
  out.warning = pool.warning;
  return out;
}

// Stage 2: train the adversarial judge on corpus-vs-pool pairs, then a second
// judge on pool-vs-randomly-paired responses, and record both accuracies.
inline StageResult stage_train_evaluator(const std::filesystem::path& root, bool force = false,
                                         std::ostream* log = nullptr) {
  RunPaths paths(root);
  if (!detail::stage_done(paths, "distill"))
    throw UsageError("train-evaluator: run distill first in " + root.string());
  if (!force && detail::stage_done(paths, "evaluator")) {
    detail::log_line(log, "train-evaluator: already done, skipping (use force to redo)");
    return {.skipped = true};
  }
  const RunConfig config = load_run_config(paths.config());
  auto vocab = load_run_vocab(paths);
  const ParallelCorpus train = load_corpus(paths.train_corpus(), vocab, config.model.max_len);
  ModelPool pool = load_run_pool(paths, vocab);

  const std::size_t n = std::min(config.eval_pairs, train.size());
  const auto dataset = build_eval_dataset(train, pool, n, config.seed);
  std::vector<DialoguePair> machine_pairs;
  for (const auto& p : dataset)
    if (p.label == PairLabel::machine) machine_pairs.push_back(p);

  EvalTrainReport report1;
  Evaluator ev1 = train_evaluator(dataset, vocab, config.evaluator,
                                  derive_seed(config.seed, "evaluator-1"), &report1);
  const double advers = adversuc(ev1, machine_pairs);
  detail::log_line(log, "evaluator: holdout accuracy " + std::to_string(report1.holdout_accuracy) +
                            ", adversarial success " + std::to_string(advers));

  const auto random_pairs = build_random_pairs(train, n, config.seed);
  std::vector<DialoguePair> dataset2 = machine_pairs;
  dataset2.insert(dataset2.end(), random_pairs.begin(), random_pairs.end());
  EvalTrainReport report2;
  Evaluator ev2 = train_evaluator(dataset2, vocab, config.evaluator,
                                  derive_seed(config.seed, "evaluator-2"), &report2);
  const double mvr = machine_vs_random(ev2, machine_pairs, random_pairs);
  detail::log_line(log, "evaluator2: machine-vs-random accuracy " + std::to_string(mvr));

  ev1.save(paths.evaluator_ckpt());
  ev2.save(paths.evaluator2_ckpt());
  auto report_json = [](const EvalTrainReport& r) {
    return nlohmann::json{{"epochs", r.epochs},
                          {"initial_train_loss", r.initial_train_loss},
                          {"final_train_loss", r.final_train_loss},
                          {"best_holdout_loss", r.best_holdout_loss},
                          {"holdout_accuracy", r.holdout_accuracy}};
  };
  detail::write_json_file({{"pairs", n},
                           {"adversuc", advers},
                           {"machine_vs_random", mvr},
                           {"evaluator", report_json(report1)},
                           {"evaluator2", report_json(report2)}},
                          paths.eval_metrics());
  detail::touch_marker(paths, "evaluator");
  return {};
}

// Stage 3: train the model selector against the judge's score as reward,
// using held-out questions the pool never trained on.
inline StageResult stage_train_policy(const std::filesystem::path& root, bool force = false,
                                      std::ostream* log = nullptr) {
  RunPaths paths(root);
  if (!detail::stage_done(paths, "evaluator"))
    throw UsageError("train-policy: run train-evaluator first in " + root.string());
  if (!force && detail::stage_done(paths, "policy")) {
    detail::log_line(log, "train-policy: already done, skipping (use force to redo)");
    return {.skipped = true};
  }
  const RunConfig config = load_run_config(paths.config());
  auto vocab = load_run_vocab(paths);
  ModelPool pool = load_run_pool(paths, vocab);
  Evaluator evaluator = Evaluator::load(paths.evaluator_ckpt(), vocab);
  const ParallelCorpus holdout = load_corpus(paths.holdout_corpus(), vocab, config.model.max_len);
  if (holdout.empty()) throw UsageError("train-policy: empty holdout corpus");
  std::vector<std::vector<int>> sources;
  sources.reserve(holdout.size());
  for (const auto& e : holdout.examples()) sources.push_back(e.source);

  PolicySelector policy(vocab, pool.size(), config.policy, config.seed);
  BaselineEstimator baseline(config.policy.hidden, config.policy.baseline_hidden, config.seed,
                             config.policy.init_range);
  const PolicyTrainReport report = train_policy(policy, baseline, pool, evaluator, sources,
                                                config.policy_episodes, config.policy, config.seed);
  const auto histogram = selection_histogram(policy, sources);
  detail::log_line(log, "policy: mean reward " + std::to_string(report.mean_reward) +
                            ", late mean reward " + std::to_string(report.late_mean_reward));

  policy.save(paths.policy_ckpt());
  baseline.save(paths.baseline_ckpt());
  detail::write_json_file({{"episodes", report.episodes},
                           {"mean_reward", report.mean_reward},
                           {"late_mean_reward", report.late_mean_reward},
                           {"choice_counts", report.choice_counts},
                           {"selection_histogram", histogram}},
                          paths.policy_metrics());
  detail::touch_marker(paths, "policy");
  return {};
}

namespace detail {

// Machine pairs decoded with an arbitrary strategy; source and model picks are
// shared across strategies so the table rows compare like with like.
inline std::vector<DialoguePair> decode_machine_pairs(const ParallelCorpus& corpus,
                                                      ModelPool& pool, std::size_t n,
                                                      DecodeStrategy strategy, std::size_t k,
                                                      std::uint64_t seed, std::uint64_t row) {
  Rng pick_rng(derive_seed(seed, "table-pairs"));
  Rng model_rng(derive_seed(seed, "table-models"));
  Rng decode_rng(derive_seed(seed, "table-decode", row));
  const auto picks = sample_without_replacement(pick_rng, corpus.size(), n);
  std::vector<DialoguePair> out;
  out.reserve(n);
  for (auto idx : picks) {
    const Example& e = corpus.at(idx);
    const std::size_t m = uniform_index(model_rng, pool.models.size());
    DialoguePair p;
    p.source = e.source;
    p.response = strip_eos(decode_with(pool.models[m], e.source, strategy, k, decode_rng).tokens);
    if (p.response.empty()) p.response = {Vocabulary::eos_id};
    p.label = PairLabel::machine;
    p.provenance = PairProvenance::pool_model;
    p.pool_index = pool.models[m].iteration();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

struct AdversarialRow {
  std::string strategy;
  double adversuc = 0.0;
  double machine_vs_random = 0.0;
};

// Stage 4: regenerate every report table from the artifacts on disk.
inline StageResult stage_report(const std::filesystem::path& root, bool force = false,
                                std::ostream* log = nullptr) {
  RunPaths paths(root);
  if (!detail::stage_done(paths, "distill"))
    throw UsageError("report: run distill first in " + root.string());
  if (!force && detail::stage_done(paths, "report")) {
    detail::log_line(log, "report: already done, skipping (use force to redo)");
    return {.skipped = true};
  }
  const RunConfig config = load_run_config(paths.config());
  auto vocab = load_run_vocab(paths);
  ModelPool pool = load_run_pool(paths, vocab);
  const ParallelCorpus train = load_corpus(paths.train_corpus(), vocab, config.model.max_len);
  const ParallelCorpus holdout = load_corpus(paths.holdout_corpus(), vocab, config.model.max_len);

  detail::write_iteration_tables(build_iteration_report(pool, holdout), paths);
  detail::log_line(log, "report: iteration table over " + std::to_string(pool.size()) +
                            " models and " + std::to_string(holdout.size()) + " holdout pairs");

  if (std::filesystem::exists(paths.evaluator_ckpt()) &&
      std::filesystem::exists(paths.evaluator2_ckpt())) {
    Evaluator ev1 = Evaluator::load(paths.evaluator_ckpt(), vocab);
    Evaluator ev2 = Evaluator::load(paths.evaluator2_ckpt(), vocab);
    const std::size_t n = std::min(config.eval_pairs, train.size());
    const auto random_pairs = build_random_pairs(train, n, config.seed);
    const std::vector<std::pair<std::string, DecodeStrategy>> strategies = {
        {"greedy", DecodeStrategy::greedy},
        {"stochastic-greedy", DecodeStrategy::stochastic_greedy},
        {"sample", DecodeStrategy::sample}};
    std::vector<AdversarialRow> rows;
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      auto machine = detail::decode_machine_pairs(train, pool, n, strategies[s].second,
                                                  config.strategy_k, config.seed, s);
      AdversarialRow row;
      row.strategy = strategies[s].first;
      row.adversuc = adversuc(ev1, machine);
      row.machine_vs_random = machine_vs_random(ev2, machine, random_pairs);
      rows.push_back(std::move(row));
      detail::log_line(log, "report: " + rows.back().strategy + " adversarial success " +
                                std::to_string(rows.back().adversuc));
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
      arr.push_back({{"strategy", r.strategy},
                     {"adversuc", r.adversuc},
                     {"machine_vs_random", r.machine_vs_random}});
    detail::write_json_file(arr, paths.adversarial_json());
    std::ofstream out(paths.adversarial_tsv(), std::ios::trunc);
    if (!out) throw IoError("cannot write " + paths.adversarial_tsv().string());
    out << "strategy\tadversuc\tmachine_vs_random\n";
    for (const auto& r : rows)
      out << r.strategy << "\t" << r.adversuc << "\t" << r.machine_vs_random << "\n";
    if (!out) throw IoError("write failed for " + paths.adversarial_tsv().string());
  } else {
    detail::log_line(log, "report: evaluator artifacts missing, skipping adversarial table");
  }

  if (std::filesystem::exists(paths.policy_ckpt())) {
    PolicySelector policy = PolicySelector::load(paths.policy_ckpt(), vocab);
    std::vector<std::vector<int>> sources;
    sources.reserve(holdout.size());
    for (const auto& e : holdout.examples()) sources.push_back(e.source);
    const auto histogram = selection_histogram(policy, sources);
    detail::write_json_file({{"sources", sources.size()}, {"selection_histogram", histogram}},
                            paths.histogram_json());
  } else {
    detail::log_line(log, "report: policy artifacts missing, skipping selection histogram");
  }

  detail::touch_marker(paths, "report");
  return {};
}

struct RespondOptions {
  std::optional<DecodeStrategy> strategy;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  bool logprobs = false;
};

// Streaming inference: one question per input line, one "index TAB response"
// line out. The selector picks the pool model; without a trained selector
// every line falls back to the first iteration.
inline void respond_lines(const std::filesystem::path& root, std::istream& in, std::ostream& out,
                          const RespondOptions& options = {}, std::ostream* warn = nullptr) {
  RunPaths paths(root);
  if (!detail::stage_done(paths, "distill"))
    throw UsageError("respond: run distill first in " + root.string());
  const RunConfig config = load_run_config(paths.config());
  auto vocab = load_run_vocab(paths);
  ModelPool pool = load_run_pool(paths, vocab);

  std::optional<PolicySelector> policy;
  if (std::filesystem::exists(paths.policy_ckpt()))
    policy.emplace(PolicySelector::load(paths.policy_ckpt(), vocab));
  else if (warn)
    *warn << "respond: no trained selector, answering with iteration 1\n";

  const DecodeStrategy strategy = options.strategy.value_or(config.strategy);
  const std::size_t k = options.k.value_or(config.strategy_k);
  const std::uint64_t seed = options.seed.value_or(config.seed);

  std::string line;
  std::uint64_t line_index = 0;
  while (std::getline(in, line)) {
    ++line_index;
    std::vector<int> ids = vocab->encode(tokenize(line));
    if (ids.empty()) {
      out << "\n";
      continue;
    }
    if (ids.size() > config.model.max_len) ids.resize(config.model.max_len);
    const std::size_t choice = policy ? policy->select(ids) : 1;
    Rng rng(derive_seed(seed, "respond", line_index));
    const DecodeResult res = decode_with(pool.models[choice - 1], ids, strategy, k, rng);
    out << choice << "\t" << vocab->render(strip_eos(res.tokens));
    if (options.logprobs) out << "\t" << res.total_logprob();
    out << "\n";
  }
}

}  // namespace distillery
