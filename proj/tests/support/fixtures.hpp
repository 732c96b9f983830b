#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "distillery/seq2seq.hpp"

namespace testutil {

// Model whose per-step output distribution is the same at every step: all
// weights zero, so the attentional hidden is zero and the logits reduce to
// the output bias, which is set to log(p) for the listed tokens and a large
// negative constant elsewhere.
inline distillery::Seq2SeqModel make_constant_model(
    const std::vector<std::pair<std::string, double>>& dist,
    const std::vector<std::string>& extra_tokens = {"q"}, std::size_t max_len = 50) {
  auto vocab = std::make_shared<distillery::Vocabulary>();
  for (const auto& t : extra_tokens) vocab->add(t);
  for (const auto& [tok, p] : dist) vocab->add(tok);
  distillery::Seq2SeqHyper hyper;
  hyper.hidden = 4;
  hyper.embed = 3;
  hyper.max_len = max_len;
  distillery::Seq2SeqModel model(vocab, hyper, 0);
  for (auto* t : model.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
  std::fill(model.out_b.v.begin(), model.out_b.v.end(), -40.0);
  for (const auto& [tok, p] : dist)
    model.out_b.v[static_cast<std::size_t>(vocab->id_of(tok))] = std::log(p);
  return model;
}

}  // namespace testutil
