#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "distillery/decode.hpp"
#include "distillery/distill.hpp"
#include "distillery/errors.hpp"
#include "distillery/evaluator.hpp"
#include "distillery/policy.hpp"
#include "distillery/seq2seq.hpp"

namespace distillery {

// Everything a full run needs, readable from a flat `key = value` file.
struct RunConfig {
  std::string corpus_file;
  std::string synthetic;  // "fruit" or "dialogues"; exclusive with corpus_file
  std::size_t synthetic_size = 20000;
  double generic_fraction = 0.5;

  std::uint64_t seed = 1;
  std::size_t iterations = 8;
  double removal_fraction = 0.09;
  double threshold_per_million = 100.0;
  std::size_t decode_subset = 50000;
  double holdout_fraction = 0.1;

  std::size_t eval_pairs = 500;
  std::size_t policy_episodes = 2000;
  DecodeStrategy strategy = DecodeStrategy::greedy;
  std::size_t strategy_k = 5;

  Seq2SeqHyper model;
  EvalHyper evaluator;
  PolicyHyper policy;

  DistillConfig to_distill_config() const {
    DistillConfig out;
    out.iterations = iterations;
    out.removal_fraction = removal_fraction;
    out.threshold_per_million = threshold_per_million;
    out.decode_subset = decode_subset;
    out.hyper = model;
    return out;
  }

  void validate() const {
    if (corpus_file.empty() == synthetic.empty())
      throw ConfigError("config: set exactly one of corpus and synthetic");
    if (!synthetic.empty() && synthetic != "fruit" && synthetic != "dialogues")
      throw ConfigError("config: synthetic must be fruit or dialogues, got '" + synthetic + "'");
    if (synthetic_size < 1) throw ConfigError("config: synthetic_size must be positive");
    if (generic_fraction < 0.0 || generic_fraction > 1.0)
      throw ConfigError("config: generic_fraction outside [0, 1]");
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
      throw ConfigError("config: holdout_fraction outside (0, 1)");
    if (eval_pairs < 1) throw ConfigError("config: eval_pairs must be positive");
    if (policy_episodes < 1) throw ConfigError("config: policy_episodes must be positive");
    if (strategy_k < 1) throw ConfigError("config: strategy_k must be positive");
    to_distill_config().validate();
    evaluator.validate();
    policy.validate();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("config: key '" + key + "' needs a non-negative integer, got '" + text + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  double out = 0.0;
  std::size_t used = 0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(out))
    throw ConfigError("config: key '" + key + "' needs a finite number, got '" + text + "'");
  return out;
}

inline std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw ConfigError("config: unrepresentable number");
  return std::string(buf, ptr);
}

using ConfigSetter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, ConfigSetter>& config_setters() {
  auto count = [](auto field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*field = static_cast<std::size_t>(parse_count(k, v));
    };
  };
  auto real = [](auto field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*field = parse_real(k, v);
    };
  };
  auto sub_count = [](auto outer, auto field) {
    return [outer, field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*outer.*field = static_cast<std::size_t>(parse_count(k, v));
    };
  };
  auto sub_real = [](auto outer, auto field) {
    return [outer, field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*outer.*field = parse_real(k, v);
    };
  };
  static const std::map<std::string, ConfigSetter> table = {
      {"corpus", [](RunConfig& c, const std::string&, const std::string& v) { c.corpus_file = v; }},
      {"synthetic",
       [](RunConfig& c, const std::string&, const std::string& v) { c.synthetic = v; }},
      {"synthetic_size", count(&RunConfig::synthetic_size)},
      {"generic_fraction", real(&RunConfig::generic_fraction)},
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_count(k, v);
       }},
      {"iterations", count(&RunConfig::iterations)},
      {"removal_fraction", real(&RunConfig::removal_fraction)},
      {"threshold_per_million", real(&RunConfig::threshold_per_million)},
      {"decode_subset", count(&RunConfig::decode_subset)},
      {"holdout_fraction", real(&RunConfig::holdout_fraction)},
      {"eval_pairs", count(&RunConfig::eval_pairs)},
      {"policy_episodes", count(&RunConfig::policy_episodes)},
      {"strategy",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.strategy = decode_strategy_from_string(v);
       }},
      {"strategy_k", count(&RunConfig::strategy_k)},
      {"model_hidden", sub_count(&RunConfig::model, &Seq2SeqHyper::hidden)},
      {"model_embed", sub_count(&RunConfig::model, &Seq2SeqHyper::embed)},
      {"model_lr", sub_real(&RunConfig::model, &Seq2SeqHyper::learning_rate)},
      {"model_clip", sub_real(&RunConfig::model, &Seq2SeqHyper::clip_norm)},
      {"model_batch", sub_count(&RunConfig::model, &Seq2SeqHyper::batch_size)},
      {"model_max_epochs", sub_count(&RunConfig::model, &Seq2SeqHyper::max_epochs)},
      {"model_patience", sub_count(&RunConfig::model, &Seq2SeqHyper::patience)},
      {"model_max_len", sub_count(&RunConfig::model, &Seq2SeqHyper::max_len)},
      {"model_init_range", sub_real(&RunConfig::model, &Seq2SeqHyper::init_range)},
      {"model_dev_fraction", sub_real(&RunConfig::model, &Seq2SeqHyper::dev_fraction)},
      {"eval_hidden", sub_count(&RunConfig::evaluator, &EvalHyper::hidden)},
      {"eval_embed", sub_count(&RunConfig::evaluator, &EvalHyper::embed)},
      {"eval_lr", sub_real(&RunConfig::evaluator, &EvalHyper::learning_rate)},
      {"eval_clip", sub_real(&RunConfig::evaluator, &EvalHyper::clip_norm)},
      {"eval_batch", sub_count(&RunConfig::evaluator, &EvalHyper::batch_size)},
      {"eval_max_epochs", sub_count(&RunConfig::evaluator, &EvalHyper::max_epochs)},
      {"eval_patience", sub_count(&RunConfig::evaluator, &EvalHyper::patience)},
      {"eval_init_range", sub_real(&RunConfig::evaluator, &EvalHyper::init_range)},
      {"eval_holdout_fraction", sub_real(&RunConfig::evaluator, &EvalHyper::holdout_fraction)},
      {"policy_hidden", sub_count(&RunConfig::policy, &PolicyHyper::hidden)},
      {"policy_embed", sub_count(&RunConfig::policy, &PolicyHyper::embed)},
      {"policy_baseline_hidden", sub_count(&RunConfig::policy, &PolicyHyper::baseline_hidden)},
      {"policy_lr", sub_real(&RunConfig::policy, &PolicyHyper::learning_rate)},
      {"policy_baseline_lr", sub_real(&RunConfig::policy, &PolicyHyper::baseline_learning_rate)},
      {"policy_clip", sub_real(&RunConfig::policy, &PolicyHyper::clip_norm)},
      {"policy_init_range", sub_real(&RunConfig::policy, &PolicyHyper::init_range)},
  };
  return table;
}

}  // namespace detail

// Flat `key = value` text, one pair per line; blank lines and lines starting
// with '#' are skipped. Later occurrences of a key overwrite earlier ones.
inline RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    const auto& table = detail::config_setters();
    const auto it = table.find(key);
    if (it == table.end())
      throw ConfigError("config: unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
    it->second(config, key, value);
  }
  return config;
}

inline std::string serialize_run_config(const RunConfig& c) {
  using detail::format_real;
  std::ostringstream out;
  out << "# data\n";
  if (!c.corpus_file.empty()) out << "corpus = " << c.corpus_file << "\n";
  if (!c.synthetic.empty()) out << "synthetic = " << c.synthetic << "\n";
  out << "synthetic_size = " << c.synthetic_size << "\n"
      << "generic_fraction = " << format_real(c.generic_fraction) << "\n\n"
      << "# run\n"
      << "seed = " << c.seed << "\n"
      << "iterations = " << c.iterations << "\n"
      << "removal_fraction = " << format_real(c.removal_fraction) << "\n"
      << "threshold_per_million = " << format_real(c.threshold_per_million) << "\n"
      << "decode_subset = " << c.decode_subset << "\n"
      << "holdout_fraction = " << format_real(c.holdout_fraction) << "\n"
      << "eval_pairs = " << c.eval_pairs << "\n"
      << "policy_episodes = " << c.policy_episodes << "\n"
      << "strategy = " << to_string(c.strategy) << "\n"
      << "strategy_k = " << c.strategy_k << "\n\n"
      << "# response model\n"
      << "model_hidden = " << c.model.hidden << "\n"
      << "model_embed = " << c.model.embed << "\n"
      << "model_lr = " << format_real(c.model.learning_rate) << "\n"
      << "model_clip = " << format_real(c.model.clip_norm) << "\n"
      << "model_batch = " << c.model.batch_size << "\n"
      << "model_max_epochs = " << c.model.max_epochs << "\n"
      << "model_patience = " << c.model.patience << "\n"
      << "model_max_len = " << c.model.max_len << "\n"
      << "model_init_range = " << format_real(c.model.init_range) << "\n"
      << "model_dev_fraction = " << format_real(c.model.dev_fraction) << "\n\n"
      << "# evaluator\n"
      << "eval_hidden = " << c.evaluator.hidden << "\n"
      << "eval_embed = " << c.evaluator.embed << "\n"
      << "eval_lr = " << format_real(c.evaluator.learning_rate) << "\n"
      << "eval_clip = " << format_real(c.evaluator.clip_norm) << "\n"
      << "eval_batch = " << c.evaluator.batch_size << "\n"
      << "eval_max_epochs = " << c.evaluator.max_epochs << "\n"
      << "eval_patience = " << c.evaluator.patience << "\n"
      << "eval_init_range = " << format_real(c.evaluator.init_range) << "\n"
      << "eval_holdout_fraction = " << format_real(c.evaluator.holdout_fraction) << "\n\n"
      << "# model selector\n"
      << "policy_hidden = " << c.policy.hidden << "\n"
      << "policy_embed = " << c.policy.embed << "\n"
      << "policy_baseline_hidden = " << c.policy.baseline_hidden << "\n"
      << "policy_lr = " << format_real(c.policy.learning_rate) << "\n"
      << "policy_baseline_lr = " << format_real(c.policy.baseline_learning_rate) << "\n"
      << "policy_clip = " << format_real(c.policy.clip_norm) << "\n"
      << "policy_init_range = " << format_real(c.policy.init_range) << "\n";
  return out.str();
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

inline void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file " + path.string());
  out << serialize_run_config(config);
  if (!out) throw IoError("failed writing config file " + path.string());
}

}  // namespace distillery
