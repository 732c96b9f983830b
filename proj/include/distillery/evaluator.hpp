#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "distillery/corpus.hpp"
#include "distillery/decode.hpp"
#include "distillery/distill.hpp"
#include "distillery/errors.hpp"
#include "distillery/nn/checkpoint.hpp"
#include "distillery/nn/optimizer.hpp"
#include "distillery/nn/tape.hpp"
#include "distillery/random.hpp"
#include "distillery/vocab.hpp"

namespace distillery {

enum class PairLabel { human, machine };
enum class PairProvenance { corpus, pool_model, random_human };

struct DialoguePair {
  std::vector<int> source;
  std::vector<int> response;
  PairLabel label = PairLabel::human;
  PairProvenance provenance = PairProvenance::corpus;
  std::size_t pool_index = 0;  // iteration tag of the decoding model, when provenance is pool_model
};

struct EvalHyper {
  std::size_t hidden = 128;
  std::size_t embed = 64;
  double learning_rate = 1.0;
  double clip_norm = 5.0;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 2;
  double init_range = 0.1;
  double holdout_fraction = 0.2;

  void validate() const {
    if (hidden < 1 || embed < 1) throw ConfigError("evaluator: zero-width layer");
    if (!(learning_rate > 0.0)) throw ConfigError("evaluator: learning rate must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("evaluator: clip norm must be positive");
    if (batch_size < 1) throw ConfigError("evaluator: batch size must be at least 1");
    if (max_epochs < 1) throw ConfigError("evaluator: epoch budget must be at least 1");
    if (!(init_range > 0.0)) throw ConfigError("evaluator: init range must be positive");
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
      throw ConfigError("evaluator: holdout fraction outside [0, 1)");
  }
};

// Utterance-level LSTM feeding a dialogue-level LSTM feeding a sigmoid
// classifier; the score reads as P(human-authored response).
class Evaluator {
 public:
  using DTape = nn::Tape<double>;
  using DTensor = nn::Tensor<double>;

  Evaluator(std::shared_ptr<const Vocabulary> vocab, const EvalHyper& hyper, std::uint64_t seed)
      : vocab_(std::move(vocab)),
        hyper_(hyper),
        embed_("utterance-embed",
               {nn::LayerKind::embedding, vocab_checked().size(), hyper.embed},
               {vocab_checked().size(), hyper.embed}),
        utt_ih_("utterance-cell.ih", lstm_spec(hyper.embed, hyper.hidden),
                {4 * hyper.hidden, hyper.embed}),
        utt_hh_("utterance-cell.hh", lstm_spec(hyper.hidden, hyper.hidden),
                {4 * hyper.hidden, hyper.hidden}),
        utt_b_("utterance-cell.b", lstm_spec(hyper.hidden, hyper.hidden), {4 * hyper.hidden}),
        dlg_ih_("dialogue-cell.ih", lstm_spec(hyper.hidden, hyper.hidden),
                {4 * hyper.hidden, hyper.hidden}),
        dlg_hh_("dialogue-cell.hh", lstm_spec(hyper.hidden, hyper.hidden),
                {4 * hyper.hidden, hyper.hidden}),
        dlg_b_("dialogue-cell.b", lstm_spec(hyper.hidden, hyper.hidden), {4 * hyper.hidden}),
        out_w_("classifier.w", {nn::LayerKind::linear, hyper.hidden, 1},
               {1, hyper.hidden}),
        out_b_("classifier.b", {nn::LayerKind::linear, 1, 1}, {1}) {
    hyper.validate();
    Rng rng(derive_seed(seed, "evaluator-init"));
    for (auto* t : tensors()) t->init_uniform(rng, hyper.init_range);
  }

  std::vector<DTensor*> tensors() {
    return {&embed_, &utt_ih_, &utt_hh_, &utt_b_, &dlg_ih_, &dlg_hh_, &dlg_b_, &out_w_, &out_b_};
  }

  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }
  const EvalHyper& hyper() const { return hyper_; }

  // Logit node for P(human); callers wrap it in bce_logit or a sigmoid.
  int logit_node(DTape& tape, const std::vector<int>& source, const std::vector<int>& response) {
    const int src_vec = encode_utterance(tape, source, "source");
    const int rsp_vec = encode_utterance(tape, response, "response");
    int h = tape.input(std::vector<double>(hyper_.hidden, 0.0));
    int c = tape.input(std::vector<double>(hyper_.hidden, 0.0));
    for (int v : {src_vec, rsp_vec}) {
      auto [nh, nc] = tape.lstm_step(dlg_ih_, dlg_hh_, dlg_b_, v, h, c);
      h = nh;
      c = nc;
    }
    return tape.affine(out_w_, out_b_, h);
  }

  double score(const std::vector<int>& source, const std::vector<int>& response) {
    DTape tape;
    const double z = tape.value(logit_node(tape, source, response))[0];
    if (!std::isfinite(z)) throw TrainingError("evaluator: non-finite score");
    return 1.0 / (1.0 + std::exp(-z));
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json meta{{"hidden", hyper_.hidden},
                        {"embed", hyper_.embed},
                        {"vocab_size", vocab_->size()}};
    std::vector<const DTensor*> refs;
    for (auto* t : const_cast<Evaluator*>(this)->tensors()) refs.push_back(t);
    nn::save_checkpoint(path, "evaluator", meta, refs);
  }

  static Evaluator load(const std::filesystem::path& path,
                        std::shared_ptr<const Vocabulary> vocab) {
    nn::Checkpoint ckp = nn::load_checkpoint(path);
    if (ckp.kind != "evaluator")
      throw IoError("evaluator: checkpoint kind is '" + ckp.kind + "'");
    if (!vocab) throw UsageError("evaluator: null vocabulary");
    if (ckp.meta.at("vocab_size").get<std::size_t>() != vocab->size())
      throw IoError("evaluator: checkpoint vocabulary size mismatch");
    EvalHyper hyper;
    hyper.hidden = ckp.meta.at("hidden").get<std::size_t>();
    hyper.embed = ckp.meta.at("embed").get<std::size_t>();
    Evaluator ev(std::move(vocab), hyper, 0);
    for (auto* t : ev.tensors()) ckp.load_into(*t);
    return ev;
  }

 private:
  const Vocabulary& vocab_checked() const {
    if (!vocab_) throw UsageError("evaluator: null vocabulary");
    return *vocab_;
  }

  static nn::LayerSpec lstm_spec(std::size_t in, std::size_t out) {
    return {nn::LayerKind::lstm_cell, in, out};
  }

  int encode_utterance(DTape& tape, const std::vector<int>& tokens, const char* role) {
    if (tokens.empty())
      throw UsageError(std::string("evaluator: empty ") + role + " utterance");
    int h = tape.input(std::vector<double>(hyper_.hidden, 0.0));
    int c = tape.input(std::vector<double>(hyper_.hidden, 0.0));
    for (int tok : tokens) {
      auto [nh, nc] =
          tape.lstm_step(utt_ih_, utt_hh_, utt_b_, tape.lookup(embed_, tok), h, c);
      h = nh;
      c = nc;
    }
    return h;
  }

  std::shared_ptr<const Vocabulary> vocab_;
  EvalHyper hyper_;
  DTensor embed_, utt_ih_, utt_hh_, utt_b_, dlg_ih_, dlg_hh_, dlg_b_, out_w_, out_b_;
};

// Balanced labeled pairs: for each sampled corpus example, its true response
// (human) and a greedy decode of the same source by a uniformly drawn pool
// model (machine). A decode that is empty once stripped is represented by the
// bare terminator token.
inline std::vector<DialoguePair> build_eval_dataset(const ParallelCorpus& corpus, ModelPool& pool,
                                                    std::size_t n, std::uint64_t seed) {
  if (corpus.empty()) throw UsageError("build_eval_dataset: empty corpus");
  if (pool.models.empty()) throw UsageError("build_eval_dataset: empty model pool");
  if (n < 1 || n > corpus.size())
    throw UsageError("build_eval_dataset: pair count outside [1, corpus size]");
  Rng pick_rng(derive_seed(seed, "eval-pairs"));
  Rng model_rng(derive_seed(seed, "eval-models"));
  std::vector<std::size_t> picks = sample_without_replacement(pick_rng, corpus.size(), n);

  std::vector<DialoguePair> pairs;
  pairs.reserve(2 * n);
  for (std::size_t i : picks) {
    const Example& e = corpus.at(i);
    DialoguePair human;
    human.source = e.source;
    human.response = e.target;
    human.label = PairLabel::human;
    human.provenance = PairProvenance::corpus;
    pairs.push_back(std::move(human));
  }
  for (std::size_t i : picks) {
    const Example& e = corpus.at(i);
    const std::size_t m = uniform_index(model_rng, pool.models.size());
    DialoguePair machine;
    machine.source = e.source;
    machine.response = strip_eos(decode_greedy(pool.models[m], e.source).tokens);
    if (machine.response.empty()) machine.response = {Vocabulary::eos_id};
    machine.label = PairLabel::machine;
    machine.provenance = PairProvenance::pool_model;
    machine.pool_index = pool.models[m].iteration();
    pairs.push_back(std::move(machine));
  }
  return pairs;
}

// Each source paired with the target of a different, uniformly drawn example.
inline std::vector<DialoguePair> build_random_pairs(const ParallelCorpus& corpus, std::size_t n,
                                                    std::uint64_t seed) {
  if (corpus.size() < 2) throw UsageError("build_random_pairs: need at least two examples");
  if (n < 1 || n > corpus.size())
    throw UsageError("build_random_pairs: pair count outside [1, corpus size]");
  Rng rng(derive_seed(seed, "random-pairs"));
  std::vector<std::size_t> picks = sample_without_replacement(rng, corpus.size(), n);
  std::vector<DialoguePair> pairs;
  pairs.reserve(n);
  for (std::size_t i : picks) {
    std::size_t j = uniform_index(rng, corpus.size() - 1);
    if (j >= i) ++j;
    DialoguePair p;
    p.source = corpus.at(i).source;
    p.response = corpus.at(j).target;
    p.label = PairLabel::human;
    p.provenance = PairProvenance::random_human;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

struct EvalTrainReport {
  std::size_t epochs = 0;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  double best_holdout_loss = 0.0;
  double holdout_accuracy = 0.0;
};

namespace detail {

inline double pair_accuracy(Evaluator& ev, const std::vector<const DialoguePair*>& pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const DialoguePair* p : pairs) {
    const bool said_human = ev.score(p->source, p->response) >= 0.5;
    if (said_human == (p->label == PairLabel::human)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace detail

inline Evaluator train_evaluator(const std::vector<DialoguePair>& dataset,
                                 std::shared_ptr<const Vocabulary> vocab, const EvalHyper& hyper,
                                 std::uint64_t seed, EvalTrainReport* report = nullptr) {
  hyper.validate();
  if (dataset.empty()) throw UsageError("train_evaluator: empty dataset");
  bool any_human = false, any_machine = false;
  for (const auto& p : dataset) {
    (p.label == PairLabel::human ? any_human : any_machine) = true;
    if (p.source.empty() || p.response.empty())
      throw UsageError("train_evaluator: empty utterance in dataset");
  }
  if (!any_human || !any_machine)
    throw UsageError("train_evaluator: both labels must be present");

  Evaluator ev(std::move(vocab), hyper, seed);

  Rng split_rng(derive_seed(seed, "holdout-split"));
  auto order = shuffled_iota(split_rng, dataset.size());
  std::size_t holdout_n =
      static_cast<std::size_t>(std::floor(hyper.holdout_fraction * dataset.size()));
  if (holdout_n == dataset.size()) holdout_n = 0;
  std::vector<const DialoguePair*> holdout, train;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < holdout_n ? holdout : train).push_back(&dataset[order[i]]);
  const std::vector<const DialoguePair*>& monitor = holdout.empty() ? train : holdout;

  nn::SgdOptimizer<double> opt(hyper.learning_rate, hyper.clip_norm);
  auto params = ev.tensors();

  auto monitored_loss = [&]() {
    double total = 0.0;
    for (const DialoguePair* p : monitor) {
      Evaluator::DTape tape;
      const int z = ev.logit_node(tape, p->source, p->response);
      const int loss = tape.bce_logit(z, p->label == PairLabel::human ? 1 : 0);
      total += tape.value(loss)[0];
    }
    return total / static_cast<double>(monitor.size());
  };

  std::vector<std::vector<double>> best_values;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t flat_epochs = 0;
  EvalTrainReport local;

  for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    Rng order_rng(derive_seed(seed, "eval-epoch", epoch));
    auto epoch_order = shuffled_iota(order_rng, train.size());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < epoch_order.size(); start += hyper.batch_size) {
      const std::size_t stop = std::min(epoch_order.size(), start + hyper.batch_size);
      Evaluator::DTape tape;
      for (std::size_t i = start; i < stop; ++i) {
        const DialoguePair* p = train[epoch_order[i]];
        tape.reset();
        const int z = ev.logit_node(tape, p->source, p->response);
        const int loss = tape.bce_logit(z, p->label == PairLabel::human ? 1 : 0);
        const double l = tape.value(loss)[0];
        if (!std::isfinite(l)) throw TrainingError("train_evaluator: non-finite loss");
        epoch_loss += l;
        tape.backward(loss, 1.0 / static_cast<double>(stop - start));
      }
      opt.step(params);
    }
    const double train_loss = epoch_loss / static_cast<double>(train.size());
    if (epoch == 0) local.initial_train_loss = train_loss;
    local.final_train_loss = train_loss;
    local.epochs = epoch + 1;

    const double mloss = monitored_loss();
    if (mloss < best_loss - 1e-9) {
      best_loss = mloss;
      flat_epochs = 0;
      best_values.clear();
      for (auto* t : params) best_values.push_back(t->v);
    } else if (++flat_epochs >= hyper.patience) {
      opt.halve_learning_rate();
      flat_epochs = 0;
    }
    if (opt.learning_rate() < 1e-3 * hyper.learning_rate) break;
  }

  if (!best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->v = best_values[i];

  local.best_holdout_loss = best_loss;
  local.holdout_accuracy = detail::pair_accuracy(ev, monitor);
  if (report) *report = local;
  return ev;
}

// Fraction of machine pairs the evaluator scores as human (score >= 0.5).
inline double adversuc(Evaluator& ev, const std::vector<DialoguePair>& machine_pairs) {
  if (machine_pairs.empty()) throw UsageError("adversuc: no machine pairs");
  std::size_t fooled = 0;
  for (const auto& p : machine_pairs) {
    if (p.label != PairLabel::machine)
      throw UsageError("adversuc: dataset contains non-machine pairs");
    if (ev.score(p.source, p.response) >= 0.5) ++fooled;
  }
  return static_cast<double>(fooled) / static_cast<double>(machine_pairs.size());
}

// Accuracy of a second evaluator at separating machine pairs from randomly
// re-paired human responses. The evaluator is trained with the machine side
// labeled machine, so a correct machine call is score < 0.5.
inline double machine_vs_random(Evaluator& ev, const std::vector<DialoguePair>& machine_pairs,
                                const std::vector<DialoguePair>& random_pairs) {
  if (machine_pairs.empty() || random_pairs.empty())
    throw UsageError("machine_vs_random: both pair sets must be non-empty");
  std::size_t correct = 0;
  for (const auto& p : machine_pairs)
    if (ev.score(p.source, p.response) < 0.5) ++correct;
  for (const auto& p : random_pairs)
    if (ev.score(p.source, p.response) >= 0.5) ++correct;
  return static_cast<double>(correct) /
         static_cast<double>(machine_pairs.size() + random_pairs.size());
}

}  // namespace distillery
