#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "distillery/errors.hpp"
#include "distillery/vocab.hpp"

namespace distillery {

// One source/target pair. Ids are assigned at load/generation time and stay
// stable across distillation rounds, so removed-id sets always refer to the
// original numbering.
struct Example {
  std::uint64_t id = 0;
  std::vector<int> source;
  std::vector<int> target;
};

class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  ParallelCorpus(std::vector<Example> examples, std::shared_ptr<const Vocabulary> vocab)
      : examples_(std::move(examples)), vocab_(std::move(vocab)) {
    if (!vocab_) throw UsageError("corpus: vocabulary must not be null");
    const int vsize = static_cast<int>(vocab_->size());
    for (const auto& e : examples_) {
      if (e.source.empty() || e.target.empty())
        throw UsageError("corpus: empty sequence in example " + std::to_string(e.id));
      for (int t : e.source)
        if (t < 0 || t >= vsize) throw UsageError("corpus: source token id out of range");
      for (int t : e.target)
        if (t < 0 || t >= vsize) throw UsageError("corpus: target token id out of range");
    }
  }

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const std::vector<Example>& examples() const { return examples_; }
  const Example& at(std::size_t i) const { return examples_.at(i); }
  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }

  ParallelCorpus without(const std::unordered_set<std::uint64_t>& removed) const {
    std::vector<Example> kept;
    kept.reserve(examples_.size());
    for (const auto& e : examples_)
      if (!removed.count(e.id)) kept.push_back(e);
    return ParallelCorpus(std::move(kept), vocab_);
  }

  ParallelCorpus take(const std::vector<std::size_t>& indices) const {
    std::vector<Example> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(examples_.at(i));
    return ParallelCorpus(std::move(out), vocab_);
  }

 private:
  std::vector<Example> examples_;
  std::shared_ptr<const Vocabulary> vocab_;
};

struct CorpusOptions {
  std::size_t vocab_max_size = 50000;
  std::size_t vocab_min_count = 1;
  std::size_t max_len = 50;
};

namespace detail {

// Blocks of consecutive non-blank lines; a blank line closes the block.
inline std::vector<std::vector<std::string>> read_conversations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("corpus: cannot open " + path.string());
  std::vector<std::vector<std::string>> convs;
  std::vector<std::string> current;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize(line).empty()) {
      if (!current.empty()) convs.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(line);
    }
  }
  if (!current.empty()) convs.push_back(std::move(current));
  return convs;
}

inline std::vector<int> encode_clipped(const Vocabulary& vocab, const std::string& line,
                                       std::size_t max_len) {
  std::vector<int> ids = vocab.encode(tokenize(line));
  if (ids.size() > max_len) ids.resize(max_len);
  return ids;
}

}  // namespace detail

// Each conversation of k utterances yields k-1 adjacent pairs, so a file with
// U non-blank lines in C conversations yields exactly U - C examples.
inline ParallelCorpus load_corpus(const std::filesystem::path& path,
                                  std::shared_ptr<const Vocabulary> vocab,
                                  std::size_t max_len = 50) {
  if (max_len == 0) throw UsageError("load_corpus: max_len must be positive");
  auto convs = detail::read_conversations(path);
  std::vector<Example> examples;
  std::uint64_t next_id = 0;
  for (const auto& conv : convs) {
    for (std::size_t i = 0; i + 1 < conv.size(); ++i) {
      Example e;
      e.id = next_id++;
      e.source = detail::encode_clipped(*vocab, conv[i], max_len);
      e.target = detail::encode_clipped(*vocab, conv[i + 1], max_len);
      examples.push_back(std::move(e));
    }
  }
  return ParallelCorpus(std::move(examples), std::move(vocab));
}

inline ParallelCorpus load_corpus(const std::filesystem::path& path,
                                  const CorpusOptions& opt = {}) {
  auto convs = detail::read_conversations(path);
  std::vector<std::string> lines;
  for (const auto& conv : convs)
    for (const auto& l : conv) lines.push_back(l);
  auto vocab = std::make_shared<Vocabulary>(
      build_vocab(lines, opt.vocab_max_size, opt.vocab_min_count));
  return load_corpus(path, std::move(vocab), opt.max_len);
}

// One conversation (source line, target line) per example; blank line between
// conversations. Reloading with the same vocabulary reproduces the pairs.
inline void write_corpus(const ParallelCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("corpus: cannot write " + path.string());
  for (const auto& e : corpus.examples()) {
    out << corpus.vocab().render(e.source) << "\n"
        << corpus.vocab().render(e.target) << "\n\n";
  }
  if (!out) throw IoError("corpus: write failed for " + path.string());
}

}  // namespace distillery
