#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "distillery/seq2seq.hpp"

namespace distillery {

// Decoded response. `tokens` includes the closing sequence-end token unless
// the length cap was hit; `step_logprobs[i]` is the model's own log
// probability of tokens[i] (for the stochastic strategies too, not the
// renormalized one).
struct DecodeResult {
  std::vector<int> tokens;
  std::vector<double> step_logprobs;
  bool ended_with_eos = false;

  double total_logprob() const {
    return std::accumulate(step_logprobs.begin(), step_logprobs.end(), 0.0);
  }
};

inline std::vector<int> strip_eos(const std::vector<int>& tokens) {
  if (!tokens.empty() && tokens.back() == Vocabulary::eos_id)
    return std::vector<int>(tokens.begin(), tokens.end() - 1);
  return tokens;
}

// Top-k filtered distribution over the full id range: the k highest
// probabilities (ties toward lower ids) renormalized, zero elsewhere.
inline std::vector<double> topk_distribution(const std::vector<double>& probs, std::size_t k) {
  if (k < 1 || k > probs.size()) throw UsageError("topk_distribution: k outside [1, vocab size]");
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&probs](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  double mass = 0.0;
  for (std::size_t i = 0; i < k; ++i) mass += probs[idx[i]];
  if (mass <= 0.0) throw UsageError("topk_distribution: no probability mass in top k");
  std::vector<double> out(probs.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) out[idx[i]] = probs[idx[i]] / mass;
  return out;
}

namespace detail {

// Runs the decoder loop; `choose` maps the per-step probability vector to the
// emitted token id.
template <class Chooser>
DecodeResult decode_loop(Seq2SeqModel& model, const std::vector<int>& src, Chooser&& choose) {
  Seq2SeqModel::DTape tape;
  auto enc = model.encode(tape, src);
  Seq2SeqModel::DecoderState state{enc.h, enc.c};
  DecodeResult result;
  int prev = Vocabulary::bos_id;
  const std::size_t cap = model.hyper().max_len;
  for (std::size_t step = 0; step < cap; ++step) {
    auto [next, comb] = model.advance(tape, enc, state, prev);
    state = next;
    const std::vector<double>& logits = tape.value(model.logits_node(tape, comb));
    const double lse = nn::log_sum_exp(logits);
    std::vector<double> probs(logits.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logits[i] - lse);
    const int tok = static_cast<int>(choose(probs));
    result.tokens.push_back(tok);
    result.step_logprobs.push_back(logits[static_cast<std::size_t>(tok)] - lse);
    if (tok == Vocabulary::eos_id) {
      result.ended_with_eos = true;
      break;
    }
    prev = tok;
  }
  return result;
}

inline std::size_t argmax_lowest_id(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

}  // namespace detail

inline DecodeResult decode_greedy(Seq2SeqModel& model, const std::vector<int>& src) {
  return detail::decode_loop(model, src, detail::argmax_lowest_id);
}

// Sample from the renormalized top-k distribution at every step. k = 1 is
// exactly greedy; k = vocab size is pure sampling.
inline DecodeResult decode_stochastic_greedy(Seq2SeqModel& model, const std::vector<int>& src,
                                             std::size_t k, Rng& rng) {
  if (k < 1 || k > model.vocab().size())
    throw UsageError("decode_stochastic_greedy: k outside [1, vocab size]");
  return detail::decode_loop(model, src, [k, &rng](const std::vector<double>& probs) {
    return sample_discrete(rng, topk_distribution(probs, k));
  });
}

inline DecodeResult decode_sample(Seq2SeqModel& model, const std::vector<int>& src, Rng& rng) {
  return detail::decode_loop(model, src, [&rng](const std::vector<double>& probs) {
    return sample_discrete(rng, probs);
  });
}

enum class DecodeStrategy { greedy, stochastic_greedy, sample };

inline const char* to_string(DecodeStrategy s) {
  switch (s) {
    case DecodeStrategy::greedy: return "greedy";
    case DecodeStrategy::stochastic_greedy: return "stochastic-greedy";
    case DecodeStrategy::sample: return "sample";
  }
  return "?";
}

inline DecodeStrategy decode_strategy_from_string(std::string_view s) {
  if (s == "greedy") return DecodeStrategy::greedy;
  if (s == "stochastic-greedy") return DecodeStrategy::stochastic_greedy;
  if (s == "sample") return DecodeStrategy::sample;
  throw ConfigError("unknown decode strategy: " + std::string(s));
}

inline DecodeResult decode_with(Seq2SeqModel& model, const std::vector<int>& src,
                                DecodeStrategy strategy, std::size_t k, Rng& rng) {
  switch (strategy) {
    case DecodeStrategy::greedy: return decode_greedy(model, src);
    case DecodeStrategy::stochastic_greedy: return decode_stochastic_greedy(model, src, k, rng);
    case DecodeStrategy::sample: return decode_sample(model, src, rng);
  }
  throw ConfigError("decode_with: bad strategy");
}

}  // namespace distillery
