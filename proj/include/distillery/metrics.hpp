#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "distillery/corpus.hpp"
#include "distillery/errors.hpp"
#include "distillery/seq2seq.hpp"

namespace distillery {

// Fraction of n-gram instances across all responses that are distinct types.
inline double distinct_n(const std::vector<std::vector<int>>& responses, int n) {
  if (responses.empty()) throw UsageError("distinct_n: empty response collection");
  if (n < 1) throw UsageError("distinct_n: order must be at least 1");
  std::set<std::vector<int>> types;
  std::size_t instances = 0;
  for (const auto& r : responses) {
    if (r.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + n <= r.size(); ++i) {
      ++instances;
      types.insert(std::vector<int>(r.begin() + i, r.begin() + i + n));
    }
  }
  if (instances == 0) return 0.0;
  return static_cast<double>(types.size()) / static_cast<double>(instances);
}

// Exact-match counts, descending; ties keep first-occurrence order.
inline std::vector<std::pair<std::vector<int>, std::size_t>> response_frequency_table(
    const std::vector<std::vector<int>>& responses) {
  std::map<std::vector<int>, std::pair<std::size_t, std::size_t>> counts;  // seq -> (count, first)
  for (std::size_t i = 0; i < responses.size(); ++i) {
    auto [it, inserted] = counts.emplace(responses[i], std::make_pair(std::size_t{0}, i));
    it->second.first += 1;
    (void)inserted;
  }
  std::vector<std::pair<std::vector<int>, std::size_t>> table;
  table.reserve(counts.size());
  std::vector<std::size_t> first_seen;
  first_seen.reserve(counts.size());
  for (const auto& [seq, cf] : counts) {
    table.emplace_back(seq, cf.first);
    first_seen.push_back(cf.second);
  }
  std::vector<std::size_t> order(table.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table[a].second != table[b].second) return table[a].second > table[b].second;
    return first_seen[a] < first_seen[b];
  });
  std::vector<std::pair<std::vector<int>, std::size_t>> out;
  out.reserve(table.size());
  for (std::size_t i : order) out.push_back(std::move(table[i]));
  return out;
}

// Per example, the best target log-probability over the first k models; the
// aggregate is normalized per token like perplexity so the two are comparable.
inline double oracle_perplexity(std::vector<Seq2SeqModel>& models, const ParallelCorpus& corpus,
                                std::size_t k = 0) {
  if (models.empty()) throw UsageError("oracle_perplexity: empty model pool");
  if (k == 0) k = models.size();
  if (k > models.size()) throw UsageError("oracle_perplexity: prefix exceeds pool size");
  if (corpus.empty()) throw UsageError("oracle_perplexity: empty corpus");
  for (auto& m : models)
    if (corpus.vocab_ptr() != m.vocab_ptr() && !detail::same_vocab(corpus.vocab(), m.vocab()))
      throw UsageError("oracle_perplexity: corpus and model vocabularies differ");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& e : corpus.examples()) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
      best = std::max(best, models[i].target_logprob(e.source, e.target));
    if (!std::isfinite(best)) throw TrainingError("oracle_perplexity: non-finite log-probability");
    total += best;
    tokens += e.target.size() + 1;
  }
  return std::exp(-total / static_cast<double>(tokens));
}

struct IterationReport {
  std::size_t iteration = 0;
  std::size_t train_size = 0;
  double dev_perplexity = 0.0;
  double oracle_perplexity = 0.0;
  double div1 = 0.0;
  double div2 = 0.0;
};

}  // namespace distillery
