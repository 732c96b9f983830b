#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "distillery/decode.hpp"
#include "distillery/distill.hpp"
#include "distillery/errors.hpp"
#include "distillery/evaluator.hpp"
#include "distillery/nn/checkpoint.hpp"
#include "distillery/nn/optimizer.hpp"
#include "distillery/nn/tape.hpp"
#include "distillery/random.hpp"
#include "distillery/vocab.hpp"

namespace distillery {

struct PolicyHyper {
  std::size_t hidden = 64;
  std::size_t embed = 32;
  std::size_t baseline_hidden = 16;
  double learning_rate = 0.1;
  double baseline_learning_rate = 0.1;
  double clip_norm = 5.0;
  double init_range = 0.1;

  void validate() const {
    if (hidden < 1 || embed < 1 || baseline_hidden < 1)
      throw ConfigError("policy: zero-width layer");
    if (!(learning_rate > 0.0) || !(baseline_learning_rate > 0.0))
      throw ConfigError("policy: learning rates must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("policy: clip norm must be positive");
    if (!(init_range > 0.0)) throw ConfigError("policy: init range must be positive");
  }
};

// Maps a source message to a distribution over the model pool: an LSTM encodes
// the source into h_X and the logit for model i is the dot product of h_X with
// that model's trainable output vector. Model indices are 1-based throughout,
// matching the pool's iteration numbering.
class PolicySelector {
 public:
  using DTape = nn::Tape<double>;
  using DTensor = nn::Tensor<double>;

  PolicySelector(std::shared_ptr<const Vocabulary> vocab, std::size_t pool_size,
                 const PolicyHyper& hyper, std::uint64_t seed)
      : vocab_(std::move(vocab)),
        hyper_(hyper),
        pool_(pool_size),
        embed_("selector-embed",
               {nn::LayerKind::embedding, vocab_checked().size(), hyper.embed},
               {vocab_checked().size(), hyper.embed}),
        enc_ih_("selector-cell.ih", lstm_spec(hyper.embed, hyper.hidden),
                {4 * hyper.hidden, hyper.embed}),
        enc_hh_("selector-cell.hh", lstm_spec(hyper.hidden, hyper.hidden),
                {4 * hyper.hidden, hyper.hidden}),
        enc_b_("selector-cell.b", lstm_spec(hyper.hidden, hyper.hidden), {4 * hyper.hidden}),
        model_vecs_("model-vectors", {nn::LayerKind::linear, hyper.hidden, pool_size},
                    {pool_size, hyper.hidden}) {
    hyper.validate();
    if (pool_ < 1) throw ConfigError("policy: empty model pool");
    Rng rng(derive_seed(seed, "policy-init"));
    for (auto* t : tensors()) t->init_uniform(rng, hyper.init_range);
  }

  std::vector<DTensor*> tensors() {
    return {&embed_, &enc_ih_, &enc_hh_, &enc_b_, &model_vecs_};
  }

  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }
  const PolicyHyper& hyper() const { return hyper_; }
  std::size_t pool_size() const { return pool_; }

  int hx_node(DTape& tape, const std::vector<int>& source) {
    if (source.empty()) throw UsageError("policy: empty source");
    int h = tape.input(std::vector<double>(hyper_.hidden, 0.0));
    int c = tape.input(std::vector<double>(hyper_.hidden, 0.0));
    for (int tok : source) {
      auto [nh, nc] =
          tape.lstm_step(enc_ih_, enc_hh_, enc_b_, tape.lookup(embed_, tok), h, c);
      h = nh;
      c = nc;
    }
    return h;
  }

  int logits_from_hx(DTape& tape, int hx) { return tape.matvec(model_vecs_, hx); }

  int logits_node(DTape& tape, const std::vector<int>& source) {
    return logits_from_hx(tape, hx_node(tape, source));
  }

  std::vector<double> distribution(const std::vector<int>& source) {
    DTape tape;
    const auto& logits = tape.value(logits_node(tape, source));
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double z = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
      probs[j] = std::exp(logits[j] - top);
      z += probs[j];
    }
    for (double& p : probs) {
      p /= z;
      if (!std::isfinite(p)) throw TrainingError("policy: non-finite distribution");
    }
    return probs;
  }

  // Test-time choice: argmax, lowest index on ties.
  std::size_t select(const std::vector<int>& source) {
    const auto probs = distribution(source);
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j)
      if (probs[j] > probs[best]) best = j;
    return best + 1;
  }

  std::size_t sample(const std::vector<int>& source, Rng& rng) {
    return sample_discrete(rng, distribution(source)) + 1;
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json meta{{"hidden", hyper_.hidden},
                        {"embed", hyper_.embed},
                        {"pool_size", pool_},
                        {"vocab_size", vocab_->size()}};
    std::vector<const DTensor*> refs;
    for (auto* t : const_cast<PolicySelector*>(this)->tensors()) refs.push_back(t);
    nn::save_checkpoint(path, "policy", meta, refs);
  }

  static PolicySelector load(const std::filesystem::path& path,
                             std::shared_ptr<const Vocabulary> vocab) {
    nn::Checkpoint ckp = nn::load_checkpoint(path);
    if (ckp.kind != "policy") throw IoError("policy: checkpoint kind is '" + ckp.kind + "'");
    if (!vocab) throw UsageError("policy: null vocabulary");
    if (ckp.meta.at("vocab_size").get<std::size_t>() != vocab->size())
      throw IoError("policy: checkpoint vocabulary size mismatch");
    PolicyHyper hyper;
    hyper.hidden = ckp.meta.at("hidden").get<std::size_t>();
    hyper.embed = ckp.meta.at("embed").get<std::size_t>();
    PolicySelector p(std::move(vocab), ckp.meta.at("pool_size").get<std::size_t>(), hyper, 0);
    for (auto* t : p.tensors()) ckp.load_into(*t);
    return p;
  }

 private:
  const Vocabulary& vocab_checked() const {
    if (!vocab_) throw UsageError("policy: null vocabulary");
    return *vocab_;
  }

  static nn::LayerSpec lstm_spec(std::size_t in, std::size_t out) {
    return {nn::LayerKind::lstm_cell, in, out};
  }

  std::shared_ptr<const Vocabulary> vocab_;
  PolicyHyper hyper_;
  std::size_t pool_;
  DTensor embed_, enc_ih_, enc_hh_, enc_b_, model_vecs_;
};

// One-hidden-layer regressor from the detached h_X vector to a scalar reward
// estimate. It never feeds gradients back into the selector.
class BaselineEstimator {
 public:
  using DTape = nn::Tape<double>;
  using DTensor = nn::Tensor<double>;

  BaselineEstimator(std::size_t input_dim, std::size_t hidden, std::uint64_t seed,
                    double init_range = 0.1)
      : input_dim_(input_dim),
        hidden_(hidden),
        w1_("baseline.w1", {nn::LayerKind::linear, input_dim, hidden}, {hidden, input_dim}),
        b1_("baseline.b1", {nn::LayerKind::linear, input_dim, hidden}, {hidden}),
        w2_("baseline.w2", {nn::LayerKind::linear, hidden, 1}, {1, hidden}),
        b2_("baseline.b2", {nn::LayerKind::linear, hidden, 1}, {1}) {
    if (input_dim < 1 || hidden < 1) throw ConfigError("baseline: zero-width layer");
    if (!(init_range > 0.0)) throw ConfigError("baseline: init range must be positive");
    Rng rng(derive_seed(seed, "baseline-init"));
    for (auto* t : tensors()) t->init_uniform(rng, init_range);
  }

  std::vector<DTensor*> tensors() { return {&w1_, &b1_, &w2_, &b2_}; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }

  int output_node(DTape& tape, const std::vector<double>& hx) {
    if (hx.size() != input_dim_) throw UsageError("baseline: input width mismatch");
    const int x = tape.input(hx);
    return tape.affine(w2_, b2_, tape.tanh_of(tape.affine(w1_, b1_, x)));
  }

  double predict(const std::vector<double>& hx) {
    DTape tape;
    const double b = tape.value(output_node(tape, hx))[0];
    if (!std::isfinite(b)) throw TrainingError("baseline: non-finite estimate");
    return b;
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json meta{{"input_dim", input_dim_}, {"hidden", hidden_}};
    std::vector<const DTensor*> refs;
    for (auto* t : const_cast<BaselineEstimator*>(this)->tensors()) refs.push_back(t);
    nn::save_checkpoint(path, "baseline", meta, refs);
  }

  static BaselineEstimator load(const std::filesystem::path& path) {
    nn::Checkpoint ckp = nn::load_checkpoint(path);
    if (ckp.kind != "baseline")
      throw IoError("baseline: checkpoint kind is '" + ckp.kind + "'");
    BaselineEstimator b(ckp.meta.at("input_dim").get<std::size_t>(),
                        ckp.meta.at("hidden").get<std::size_t>(), 0);
    for (auto* t : b.tensors()) ckp.load_into(*t);
    return b;
  }

 private:
  std::size_t input_dim_, hidden_;
  DTensor w1_, b1_, w2_, b2_;
};

struct ReinforceStepInfo {
  double reward = 0.0;
  double baseline = 0.0;
  double advantage = 0.0;
  double logprob = 0.0;
};

// One policy-gradient update. The baseline is read before any parameter moves,
// the selector ascends advantage * grad log pi(choice), and the baseline then
// regresses toward the observed reward. A zero advantage leaves the selector
// bit-for-bit untouched.
inline ReinforceStepInfo reinforce_step(PolicySelector& policy, BaselineEstimator& baseline,
                                        const std::vector<int>& source, std::size_t choice,
                                        double reward, nn::SgdOptimizer<double>& policy_opt,
                                        nn::SgdOptimizer<double>& baseline_opt) {
  if (choice < 1 || choice > policy.pool_size())
    throw UsageError("reinforce_step: model index out of range");
  if (!std::isfinite(reward)) throw UsageError("reinforce_step: non-finite reward");

  PolicySelector::DTape tape;
  const int hx = policy.hx_node(tape, source);
  const int logits = policy.logits_from_hx(tape, hx);
  const int logpick = tape.log_softmax_pick(logits, choice - 1);
  const std::vector<double> hx_value = tape.value(hx);

  ReinforceStepInfo info;
  info.reward = reward;
  info.baseline = baseline.predict(hx_value);
  info.advantage = reward - info.baseline;
  info.logprob = tape.value(logpick)[0];

  if (info.advantage != 0.0) {
    tape.backward(logpick, -info.advantage);
    policy_opt.step(policy.tensors());
  }

  BaselineEstimator::DTape btape;
  const int b_node = baseline.output_node(btape, hx_value);
  const int b_loss = btape.squared_error(b_node, reward);
  btape.backward(b_loss);
  baseline_opt.step(baseline.tensors());
  return info;
}

using RewardFn =
    std::function<double(std::size_t model_index, std::size_t source_index,
                         const std::vector<int>& source)>;

struct PolicyTrainReport {
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double late_mean_reward = 0.0;
  std::vector<std::size_t> choice_counts;
};

inline PolicyTrainReport train_policy(PolicySelector& policy, BaselineEstimator& baseline,
                                      const std::vector<std::vector<int>>& sources,
                                      std::size_t episodes, const PolicyHyper& hyper,
                                      std::uint64_t seed, const RewardFn& reward) {
  hyper.validate();
  if (sources.empty()) throw UsageError("train_policy: no held-out sources");
  for (const auto& s : sources)
    if (s.empty()) throw UsageError("train_policy: empty source");
  if (episodes < 1) throw UsageError("train_policy: episode count must be positive");
  if (baseline.input_dim() != policy.hyper().hidden)
    throw UsageError("train_policy: baseline width does not match the selector");

  nn::SgdOptimizer<double> policy_opt(hyper.learning_rate, hyper.clip_norm);
  nn::SgdOptimizer<double> baseline_opt(hyper.baseline_learning_rate, hyper.clip_norm);
  Rng rng(derive_seed(seed, "policy-episodes"));

  PolicyTrainReport report;
  report.choice_counts.assign(policy.pool_size(), 0);
  const std::size_t late_start = episodes - std::max<std::size_t>(1, episodes / 4);
  double total = 0.0, late_total = 0.0;
  std::size_t late_n = 0;

  for (std::size_t e = 0; e < episodes; ++e) {
    const std::size_t si = uniform_index(rng, sources.size());
    const std::vector<int>& src = sources[si];
    const std::size_t choice = policy.sample(src, rng);
    const double r = reward(choice, si, src);
    if (!std::isfinite(r)) throw TrainingError("train_policy: non-finite reward");
    reinforce_step(policy, baseline, src, choice, r, policy_opt, baseline_opt);
    report.choice_counts[choice - 1] += 1;
    total += r;
    if (e >= late_start) {
      late_total += r;
      ++late_n;
    }
  }
  report.episodes = episodes;
  report.mean_reward = total / static_cast<double>(episodes);
  report.late_mean_reward = late_total / static_cast<double>(late_n);
  return report;
}

// Reward comes from the adversarial evaluator's score of the chosen model's
// greedy decode. Greedy decoding makes the reward a pure function of (model,
// source), so each pair is decoded and scored once and then memoized.
inline PolicyTrainReport train_policy(PolicySelector& policy, BaselineEstimator& baseline,
                                      ModelPool& pool, Evaluator& evaluator,
                                      const std::vector<std::vector<int>>& sources,
                                      std::size_t episodes, const PolicyHyper& hyper,
                                      std::uint64_t seed) {
  if (pool.models.empty()) throw UsageError("train_policy: empty model pool");
  if (policy.pool_size() != pool.models.size())
    throw UsageError("train_policy: selector width does not match the pool");
  std::map<std::pair<std::size_t, std::size_t>, double> memo;
  RewardFn reward = [&](std::size_t model_index, std::size_t source_index,
                        const std::vector<int>& src) {
    const auto key = std::make_pair(model_index, source_index);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<int> response =
        strip_eos(decode_greedy(pool.models[model_index - 1], src).tokens);
    if (response.empty()) response = {Vocabulary::eos_id};
    const double r = evaluator.score(src, response);
    memo.emplace(key, r);
    return r;
  };
  return train_policy(policy, baseline, sources, episodes, hyper, seed, reward);
}

// Fraction of sources routed to each pool index by the argmax rule.
inline std::vector<double> selection_histogram(PolicySelector& policy,
                                               const std::vector<std::vector<int>>& sources) {
  if (sources.empty()) throw UsageError("selection_histogram: no sources");
  std::vector<double> hist(policy.pool_size(), 0.0);
  for (const auto& s : sources) hist[policy.select(s) - 1] += 1.0;
  for (double& h : hist) h /= static_cast<double>(sources.size());
  return hist;
}

}  // namespace distillery
