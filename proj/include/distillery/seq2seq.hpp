#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "distillery/corpus.hpp"
#include "distillery/nn/checkpoint.hpp"
#include "distillery/nn/optimizer.hpp"
#include "distillery/nn/tape.hpp"
#include "distillery/random.hpp"

namespace distillery {

struct Seq2SeqHyper {
  std::size_t hidden = 128;
  std::size_t embed = 64;
  double learning_rate = 1.0;
  double clip_norm = 5.0;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  std::size_t max_len = 50;
  double init_range = 0.1;
  double dev_fraction = 0.1;

  void validate() const {
    if (hidden == 0 || embed == 0) throw ConfigError("seq2seq: hidden and embed must be positive");
    if (learning_rate <= 0.0) throw ConfigError("seq2seq: learning rate must be positive");
    if (clip_norm <= 0.0) throw ConfigError("seq2seq: clip norm must be positive");
    if (batch_size == 0 || max_epochs == 0) throw ConfigError("seq2seq: batch size and epochs must be positive");
    if (max_len == 0) throw ConfigError("seq2seq: max_len must be positive");
    if (dev_fraction < 0.0 || dev_fraction >= 1.0)
      throw ConfigError("seq2seq: dev fraction outside [0, 1)");
  }
};

// Encoder-decoder with a dot-attention readout. The attention scores are
// parameter-free, so encoder and decoder widths must match; the combine layer
// mixes [context; decoder hidden] into the attentional hidden that feeds the
// output projection.
class Seq2SeqModel {
 public:
  using DTape = nn::Tape<double>;

  Seq2SeqModel(std::shared_ptr<const Vocabulary> vocab, Seq2SeqHyper hyper, std::uint64_t seed)
      : vocab_(std::move(vocab)), hyper_(hyper) {
    if (!vocab_) throw UsageError("seq2seq: vocabulary must not be null");
    hyper_.validate();
    const std::size_t V = vocab_->size();
    const std::size_t E = hyper_.embed;
    const std::size_t H = hyper_.hidden;
    using nn::LayerKind;
    using nn::LayerSpec;
    src_embed = nn::Tensor<double>("src_embed", LayerSpec{LayerKind::embedding, V, E}, {V, E});
    tgt_embed = nn::Tensor<double>("tgt_embed", LayerSpec{LayerKind::embedding, V, E}, {V, E});
    enc_ih = nn::Tensor<double>("enc_ih", LayerSpec{LayerKind::lstm_cell, E, H}, {4 * H, E});
    enc_hh = nn::Tensor<double>("enc_hh", LayerSpec{LayerKind::lstm_cell, H, H}, {4 * H, H});
    enc_b = nn::Tensor<double>("enc_b", LayerSpec{LayerKind::lstm_cell, H, H}, {4 * H});
    dec_ih = nn::Tensor<double>("dec_ih", LayerSpec{LayerKind::lstm_cell, E, H}, {4 * H, E});
    dec_hh = nn::Tensor<double>("dec_hh", LayerSpec{LayerKind::lstm_cell, H, H}, {4 * H, H});
    dec_b = nn::Tensor<double>("dec_b", LayerSpec{LayerKind::lstm_cell, H, H}, {4 * H});
    attn_W = nn::Tensor<double>("attn_W", LayerSpec{LayerKind::linear, 2 * H, H}, {H, 2 * H});
    attn_b = nn::Tensor<double>("attn_b", LayerSpec{LayerKind::linear, H, H}, {H});
    out_W = nn::Tensor<double>("out_W", LayerSpec{LayerKind::softmax_projection, H, V}, {V, H});
    out_b = nn::Tensor<double>("out_b", LayerSpec{LayerKind::softmax_projection, H, V}, {V});
    Rng rng(derive_seed(seed, "seq2seq-init"));
    for (auto* t : tensors()) t->init_uniform(rng, hyper_.init_range);
  }

  std::vector<nn::Tensor<double>*> tensors() {
    return {&src_embed, &tgt_embed, &enc_ih, &enc_hh, &enc_b, &dec_ih,
            &dec_hh,    &dec_b,     &attn_W, &attn_b, &out_W, &out_b};
  }

  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }
  const Seq2SeqHyper& hyper() const { return hyper_; }
  std::size_t iteration() const { return iteration_; }
  void set_iteration(std::size_t it) { iteration_ = it; }

  struct Encoding {
    std::vector<int> states;
    int h = -1;
    int c = -1;
  };

  struct DecoderState {
    int h = -1;
    int c = -1;
  };

  Encoding encode(DTape& tape, const std::vector<int>& src) {
    if (src.empty()) throw UsageError("seq2seq: cannot encode an empty sequence");
    const std::size_t H = hyper_.hidden;
    Encoding enc;
    enc.h = tape.input(std::vector<double>(H, 0.0));
    enc.c = tape.input(std::vector<double>(H, 0.0));
    for (int tok : src) {
      check_token(tok);
      int x = tape.lookup(src_embed, static_cast<std::size_t>(tok));
      auto [h, c] = tape.lstm_step(enc_ih, enc_hh, enc_b, x, enc.h, enc.c);
      enc.h = h;
      enc.c = c;
      enc.states.push_back(h);
    }
    return enc;
  }

  // One decoder step: LSTM advance, attention over the encoder states, then
  // the combined attentional hidden. Returns the new state and the node id of
  // the attentional hidden.
  std::pair<DecoderState, int> advance(DTape& tape, const Encoding& enc, DecoderState state,
                                       int token) {
    check_token(token);
    int x = tape.lookup(tgt_embed, static_cast<std::size_t>(token));
    auto [h, c] = tape.lstm_step(dec_ih, dec_hh, dec_b, x, state.h, state.c);
    int ctx = tape.attention(h, enc.states);
    int comb = tape.tanh_of(tape.affine(attn_W, attn_b, tape.concat(ctx, h)));
    return {DecoderState{h, c}, comb};
  }

  int logits_node(DTape& tape, int comb) { return tape.affine(out_W, out_b, comb); }

  // Summed cross-entropy of the target plus its closing sequence-end token.
  // Token count is |target| + 1.
  std::pair<int, std::size_t> teacher_loss(DTape& tape, const std::vector<int>& src,
                                           const std::vector<int>& tgt) {
    if (tgt.empty()) throw UsageError("seq2seq: cannot score an empty target");
    Encoding enc = encode(tape, src);
    DecoderState state{enc.h, enc.c};
    std::vector<int> losses;
    int prev = Vocabulary::bos_id;
    for (std::size_t t = 0; t <= tgt.size(); ++t) {
      auto [next, comb] = advance(tape, enc, state, prev);
      state = next;
      const int gold = t < tgt.size() ? tgt[t] : Vocabulary::eos_id;
      check_token(gold);
      losses.push_back(tape.softmax_xent(out_W, out_b, comb, static_cast<std::size_t>(gold)));
      prev = gold;
    }
    return {tape.sum(losses), tgt.size() + 1};
  }

  double sequence_nll(const std::vector<int>& src, const std::vector<int>& tgt) {
    DTape tape;
    auto [loss, tokens] = teacher_loss(tape, src, tgt);
    (void)tokens;
    return tape.value(loss)[0];
  }

  // log P(target, eos | source): the exact negative of sequence_nll.
  double target_logprob(const std::vector<int>& src, const std::vector<int>& tgt) {
    return -sequence_nll(src, tgt);
  }

  // Final encoder hidden state, used both as the relevance embedding and as
  // the policy input representation.
  std::vector<double> encode_sentence(const std::vector<int>& tokens) {
    DTape tape;
    Encoding enc = encode(tape, tokens);
    return tape.value(enc.h);
  }

  void save(const std::filesystem::path& path) {
    nlohmann::json meta{{"hidden", hyper_.hidden},
                        {"embed", hyper_.embed},
                        {"max_len", hyper_.max_len},
                        {"vocab_size", vocab_->size()},
                        {"iteration", iteration_}};
    std::vector<const nn::Tensor<double>*> refs;
    for (auto* t : tensors()) refs.push_back(t);
    nn::save_checkpoint(path, "seq2seq", meta, refs);
  }

  static Seq2SeqModel load(const std::filesystem::path& path,
                           std::shared_ptr<const Vocabulary> vocab) {
    nn::Checkpoint ckpt = nn::load_checkpoint(path);
    if (ckpt.kind != "seq2seq")
      throw IoError("seq2seq: checkpoint kind mismatch in " + path.string());
    if (ckpt.meta.at("vocab_size").get<std::size_t>() != vocab->size())
      throw IoError("seq2seq: vocabulary size mismatch in " + path.string());
    Seq2SeqHyper hyper;
    hyper.hidden = ckpt.meta.at("hidden").get<std::size_t>();
    hyper.embed = ckpt.meta.at("embed").get<std::size_t>();
    hyper.max_len = ckpt.meta.at("max_len").get<std::size_t>();
    Seq2SeqModel model(std::move(vocab), hyper, 0);
    for (auto* t : model.tensors()) ckpt.load_into(*t);
    model.iteration_ = ckpt.meta.value("iteration", std::size_t{0});
    return model;
  }

  nn::Tensor<double> src_embed, tgt_embed;
  nn::Tensor<double> enc_ih, enc_hh, enc_b;
  nn::Tensor<double> dec_ih, dec_hh, dec_b;
  nn::Tensor<double> attn_W, attn_b;
  nn::Tensor<double> out_W, out_b;

 private:
  void check_token(int tok) const {
    if (tok < 0 || tok >= static_cast<int>(vocab_->size()))
      throw UsageError("seq2seq: token id " + std::to_string(tok) + " out of range");
  }

  std::shared_ptr<const Vocabulary> vocab_;
  Seq2SeqHyper hyper_;
  std::size_t iteration_ = 0;
};

// exp(mean per-token NLL) with the sequence-end token counted for every target.
namespace detail {

inline bool same_vocab(const Vocabulary& a, const Vocabulary& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < static_cast<int>(a.size()); ++i)
    if (a.token_of(i) != b.token_of(i)) return false;
  return true;
}

}  // namespace detail

inline double perplexity(Seq2SeqModel& model, const ParallelCorpus& corpus) {
  if (corpus.empty()) throw UsageError("perplexity: empty corpus");
  if (corpus.vocab_ptr() != model.vocab_ptr() &&
      !detail::same_vocab(corpus.vocab(), model.vocab()))
    throw UsageError("perplexity: corpus and model vocabularies differ");
  double total_nll = 0.0;
  std::size_t total_tokens = 0;
  for (const auto& e : corpus.examples()) {
    const double nll = model.sequence_nll(e.source, e.target);
    if (!std::isfinite(nll)) throw TrainingError("perplexity: non-finite sequence loss");
    total_nll += nll;
    total_tokens += e.target.size() + 1;
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

struct TrainReport {
  std::size_t epochs = 0;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  std::vector<double> dev_perplexities;
  double best_dev_perplexity = std::numeric_limits<double>::infinity();
  double final_learning_rate = 0.0;
};

// SGD with teacher forcing. Convergence is monitored on `dev` when given
// (otherwise on a seeded held-out slice of `corpus`); every epoch without a
// dev-perplexity improvement halves the learning rate, and `patience`
// consecutive flat epochs stop training. The best-dev parameters are restored
// before returning.
inline Seq2SeqModel train_seq2seq(const ParallelCorpus& corpus, const Seq2SeqHyper& hyper,
                                  std::uint64_t seed, const ParallelCorpus* dev = nullptr,
                                  TrainReport* report = nullptr) {
  if (corpus.empty()) throw UsageError("train_seq2seq: empty corpus");
  hyper.validate();
  if (dev && !dev->empty() && dev->vocab().size() != corpus.vocab().size())
    throw UsageError("train_seq2seq: dev vocabulary differs from training vocabulary");

  Seq2SeqModel model(corpus.vocab_ptr(), hyper, seed);

  ParallelCorpus internal_train = corpus;
  ParallelCorpus internal_dev;
  const ParallelCorpus* dev_set = dev && !dev->empty() ? dev : nullptr;
  if (!dev_set) {
    const std::size_t n = corpus.size();
    std::size_t dev_n = static_cast<std::size_t>(std::floor(hyper.dev_fraction * static_cast<double>(n)));
    if (dev_n == 0 || n < 10) {
      internal_dev = corpus;  // tiny corpora: monitor on the training data itself
    } else {
      Rng rng(derive_seed(seed, "dev-split"));
      auto idx = shuffled_iota(rng, n);
      std::vector<std::size_t> dev_idx(idx.begin(), idx.begin() + dev_n);
      std::vector<std::size_t> train_idx(idx.begin() + dev_n, idx.end());
      std::sort(dev_idx.begin(), dev_idx.end());
      std::sort(train_idx.begin(), train_idx.end());
      internal_dev = corpus.take(dev_idx);
      internal_train = corpus.take(train_idx);
    }
    dev_set = &internal_dev;
  }

  nn::SgdOptimizer<double> opt(hyper.learning_rate, hyper.clip_norm);
  auto params = model.tensors();

  std::vector<std::vector<double>> best_values;
  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t flat_epochs = 0;
  TrainReport local;

  const auto& train_examples = internal_train.examples();
  for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    Rng order_rng(derive_seed(seed, "epoch-order", epoch));
    auto order = shuffled_iota(order_rng, train_examples.size());

    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < stop; ++i)
        batch_tokens += train_examples[order[i]].target.size() + 1;
      Seq2SeqModel::DTape tape;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& e = train_examples[order[i]];
        tape.reset();
        auto [loss, tokens] = model.teacher_loss(tape, e.source, e.target);
        const double nll = tape.value(loss)[0];
        if (!std::isfinite(nll))
          throw TrainingError("train_seq2seq: non-finite loss at example " + std::to_string(e.id));
        epoch_nll += nll;
        epoch_tokens += tokens;
        tape.backward(loss, 1.0 / static_cast<double>(batch_tokens));
      }
      opt.step(params);
    }

    const double train_loss = epoch_nll / static_cast<double>(epoch_tokens);
    if (epoch == 0) local.initial_train_loss = train_loss;
    local.final_train_loss = train_loss;

    const double dev_ppl = perplexity(model, *dev_set);
    local.dev_perplexities.push_back(dev_ppl);
    if (dev_ppl < best_dev - 1e-9) {
      best_dev = dev_ppl;
      flat_epochs = 0;
      best_values.clear();
      for (auto* t : params) best_values.push_back(t->v);
    } else if (++flat_epochs >= hyper.patience) {
      opt.halve_learning_rate();
      flat_epochs = 0;
    }
    local.epochs = epoch + 1;
    if (opt.learning_rate() < 1e-3 * hyper.learning_rate) break;
  }

  if (!best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->v = best_values[i];

  local.best_dev_perplexity = best_dev;
  local.final_learning_rate = opt.learning_rate();
  if (report) *report = local;
  return model;
}

}  // namespace distillery
