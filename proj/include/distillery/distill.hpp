#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "distillery/corpus.hpp"
#include "distillery/decode.hpp"
#include "distillery/errors.hpp"
#include "distillery/metrics.hpp"
#include "distillery/random.hpp"
#include "distillery/seq2seq.hpp"

namespace distillery {

struct FrequentEntry {
  std::vector<int> response;
  std::size_t count = 0;
  std::vector<double> embedding;
};

struct FrequentList {
  std::vector<FrequentEntry> entries;
  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// Greedy-decodes every source, keeps responses whose exact-match count exceeds
// the threshold, each paired with its encoder embedding. Responses that are
// empty once the terminator is stripped carry no embeddable content and are
// dropped.
inline FrequentList collect_frequent(Seq2SeqModel& model,
                                     const std::vector<std::vector<int>>& sources,
                                     double threshold) {
  if (threshold <= 0.0) throw UsageError("collect_frequent: threshold must be positive");
  std::vector<std::vector<int>> decoded;
  decoded.reserve(sources.size());
  for (const auto& src : sources) decoded.push_back(strip_eos(decode_greedy(model, src).tokens));
  FrequentList out;
  for (auto& [response, count] : response_frequency_table(decoded)) {
    if (static_cast<double>(count) <= threshold) continue;
    if (response.empty()) continue;
    FrequentEntry e;
    e.response = response;
    e.count = count;
    e.embedding = model.encode_sentence(e.response);
    out.entries.push_back(std::move(e));
  }
  return out;
}

// Max cosine similarity of v against the frequent-entry embeddings;
// -inf on an empty list, meaning "never remove".
inline double max_cosine(const std::vector<double>& v, const FrequentList& frequent) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : frequent.entries)
    best = std::max(best, nn::cosine_similarity(v, e.embedding));
  return best;
}

inline double relevance(const Example& example, const FrequentList& frequent,
                        Seq2SeqModel& model) {
  if (frequent.empty()) return -std::numeric_limits<double>::infinity();
  return max_cosine(model.encode_sentence(example.target), frequent);
}

// Picks the n_remove ids with the highest scores; equal scores break toward
// the higher id. Returned ids are sorted ascending.
inline std::vector<std::size_t> select_removals(
    const std::vector<std::pair<std::size_t, double>>& scores, std::size_t n_remove) {
  if (n_remove > scores.size()) throw UsageError("select_removals: more removals than examples");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].second != scores[b].second) return scores[a].second > scores[b].second;
    return scores[a].first > scores[b].first;
  });
  std::vector<std::size_t> removed;
  removed.reserve(n_remove);
  for (std::size_t i = 0; i < n_remove; ++i) removed.push_back(scores[order[i]].first);
  std::sort(removed.begin(), removed.end());
  return removed;
}

struct DistillationRound {
  std::size_t iteration = 0;
  std::size_t input_size = 0;
  std::size_t decoded = 0;
  double threshold = 0.0;
  double fraction = 0.0;
  FrequentList frequent;
  std::vector<std::pair<std::size_t, double>> relevance_by_id;
  std::vector<std::size_t> removed_ids;
  ParallelCorpus kept;
  bool saturated = false;
};

struct DistillConfig {
  std::size_t iterations = 8;
  double removal_fraction = 0.09;
  double threshold_per_million = 100.0;
  std::size_t decode_subset = 50000;
  Seq2SeqHyper hyper;

  void validate() const {
    if (iterations < 1) throw ConfigError("distill: iterations must be at least 1");
    if (!(removal_fraction >= 0.0) || removal_fraction >= 1.0)
      throw ConfigError("distill: removal fraction must lie in [0, 1)");
    if (!(threshold_per_million > 0.0))
      throw ConfigError("distill: frequency threshold must be positive");
    if (decode_subset < 1) throw ConfigError("distill: decode subset must be at least 1");
    hyper.validate();
  }
};

// One decode / collect / score / remove pass against an already-trained model.
// The subset of sources to decode is a seeded uniform sample without
// replacement; the frequency threshold scales with the decoded count
// (threshold_per_million per 1e6 decodes).
inline DistillationRound distill_round(const ParallelCorpus& corpus, Seq2SeqModel& model,
                                       double fraction, double threshold_per_million,
                                       std::size_t decode_subset, std::uint64_t subset_seed) {
  if (corpus.empty()) throw UsageError("distill_round: empty corpus");
  if (!(fraction >= 0.0) || fraction >= 1.0)
    throw UsageError("distill_round: fraction must lie in [0, 1)");
  DistillationRound round;
  round.input_size = corpus.size();
  round.fraction = fraction;

  const std::size_t subset = std::min(corpus.size(), decode_subset);
  Rng rng(subset_seed);
  std::vector<std::size_t> picks = sample_without_replacement(rng, corpus.size(), subset);
  std::vector<std::vector<int>> sources;
  sources.reserve(subset);
  for (std::size_t i : picks) sources.push_back(corpus.at(i).source);
  round.decoded = subset;
  round.threshold = threshold_per_million * static_cast<double>(subset) / 1e6;

  round.frequent = collect_frequent(model, sources, round.threshold);
  if (round.frequent.empty()) {
    round.saturated = true;
    round.kept = corpus;
    return round;
  }

  std::map<std::vector<int>, double> cache;
  round.relevance_by_id.reserve(corpus.size());
  for (const auto& e : corpus.examples()) {
    auto it = cache.find(e.target);
    if (it == cache.end())
      it = cache.emplace(e.target, relevance(e, round.frequent, model)).first;
    round.relevance_by_id.emplace_back(e.id, it->second);
  }

  const std::size_t n_remove =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(corpus.size())));
  round.removed_ids = select_removals(round.relevance_by_id, n_remove);
  round.kept = corpus.without(
      std::unordered_set<std::size_t>(round.removed_ids.begin(), round.removed_ids.end()));
  return round;
}

struct ModelPool {
  std::vector<Seq2SeqModel> models;
  std::vector<DistillationRound> rounds;
  bool saturated_early = false;
  std::string warning;

  std::size_t size() const { return models.size(); }
};

using RoundCallback = std::function<void(const DistillationRound&, Seq2SeqModel&)>;

// The full iterative loop: train from scratch on the current corpus, decode a
// subset, collect frequent responses, score relevance, remove the top slice,
// repeat. Stops early with a warning when a round saturates (no response
// clears the threshold) or the corpus runs dry.
inline ModelPool run_distillation(const ParallelCorpus& corpus, const DistillConfig& config,
                                  std::uint64_t master_seed,
                                  const ParallelCorpus* dev = nullptr,
                                  const RoundCallback& on_round = {}) {
  config.validate();
  if (corpus.empty()) throw UsageError("run_distillation: empty corpus");

  ModelPool pool;
  ParallelCorpus current = corpus;
  for (std::size_t i = 1; i <= config.iterations; ++i) {
    if (current.empty()) {
      pool.saturated_early = true;
      pool.warning = "corpus exhausted before iteration " + std::to_string(i);
      break;
    }
    Seq2SeqModel model =
        train_seq2seq(current, config.hyper, derive_seed(master_seed, "train", i), dev);
    model.set_iteration(i);

    DistillationRound round =
        distill_round(current, model, config.removal_fraction, config.threshold_per_million,
                      config.decode_subset, derive_seed(master_seed, "decode", i));
    round.iteration = i;

    pool.models.push_back(std::move(model));
    if (on_round) on_round(round, pool.models.back());
    const bool saturated = round.saturated;
    current = round.kept;
    pool.rounds.push_back(std::move(round));
    if (saturated) {
      if (i < config.iterations) {
        pool.saturated_early = true;
        pool.warning = "no response cleared the frequency threshold at iteration " +
                       std::to_string(i) + "; stopping early";
      }
      break;
    }
  }
  return pool;
}

// One report row per completed iteration, measured on the dev corpus.
inline std::vector<IterationReport> build_iteration_report(ModelPool& pool,
                                                           const ParallelCorpus& dev) {
  if (pool.models.empty()) throw UsageError("build_iteration_report: empty pool");
  if (dev.empty()) throw UsageError("build_iteration_report: empty dev corpus");
  std::vector<IterationReport> rows;
  rows.reserve(pool.models.size());
  for (std::size_t i = 0; i < pool.models.size(); ++i) {
    IterationReport row;
    row.iteration = i + 1;
    row.train_size = pool.rounds[i].input_size;
    row.dev_perplexity = perplexity(pool.models[i], dev);
    row.oracle_perplexity = oracle_perplexity(pool.models, dev, i + 1);
    std::vector<std::vector<int>> decoded;
    decoded.reserve(dev.size());
    for (const auto& e : dev.examples())
      decoded.push_back(strip_eos(decode_greedy(pool.models[i], e.source).tokens));
    row.div1 = distinct_n(decoded, 1);
    row.div2 = distinct_n(decoded, 2);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace distillery
