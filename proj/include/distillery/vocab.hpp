#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "distillery/errors.hpp"

namespace distillery {

inline std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Token table with four reserved ids at the bottom of the range. Unknown
// surface forms map to unk_id; decoding a reserved id yields its surface form.
class Vocabulary {
 public:
  static constexpr int pad_id = 0;
  static constexpr int bos_id = 1;
  static constexpr int eos_id = 2;
  static constexpr int unk_id = 3;

  Vocabulary() {
    for (const char* t : {"<pad>", "<s>", "</s>", "<unk>"}) add(t);
  }

  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
  }

  int id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? unk_id : it->second;
  }

  const std::string& token_of(int id) const {
    if (id < 0 || id >= static_cast<int>(tokens_.size()))
      throw UsageError("vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  std::size_t size() const { return tokens_.size(); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id_of(t));
    return ids;
  }

  std::vector<std::string> decode(const std::vector<int>& ids) const {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (int id : ids) tokens.push_back(token_of(id));
    return tokens;
  }

  std::string render(const std::vector<int>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ' ';
      out += token_of(ids[i]);
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("vocabulary: cannot write " + path.string());
    out << "#distillery-vocab v1 pad=0 bos=1 eos=2 unk=3\n";
    for (const auto& t : tokens_) out << t << "\n";
    if (!out) throw IoError("vocabulary: write failed for " + path.string());
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("vocabulary: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "#distillery-vocab v1 pad=0 bos=1 eos=2 unk=3")
      throw IoError("vocabulary: bad header in " + path.string());
    Vocabulary v;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (row < 4) {
        if (line != v.tokens_[row])
          throw IoError("vocabulary: reserved token mismatch in " + path.string());
      } else {
        if (line.empty()) throw IoError("vocabulary: empty token line in " + path.string());
        v.add(line);
      }
      ++row;
    }
    if (row < 4) throw IoError("vocabulary: truncated file " + path.string());
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Frequency-ranked vocabulary over whitespace tokens. max_size caps the number
// of retained surface tokens (the four reserved ids sit on top of that);
// ranking is by count descending, then first occurrence.
inline Vocabulary build_vocab(const std::vector<std::string>& lines, std::size_t max_size,
                              std::size_t min_count = 1) {
  if (max_size < 4) throw UsageError("build_vocab: max_size must be at least 4");
  if (min_count < 1) throw UsageError("build_vocab: min_count must be at least 1");
  struct Entry {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<const std::string*> order;
  std::size_t pos = 0;
  std::vector<std::string> toks;
  for (const auto& line : lines) {
    toks = tokenize(line);
    for (auto& t : toks) {
      auto [it, inserted] = counts.try_emplace(std::move(t), Entry{0, pos});
      it->second.count += 1;
      if (inserted) order.push_back(&it->first);
      ++pos;
    }
  }
  std::stable_sort(order.begin(), order.end(), [&counts](const std::string* a, const std::string* b) {
    const Entry& ea = counts.at(*a);
    const Entry& eb = counts.at(*b);
    if (ea.count != eb.count) return ea.count > eb.count;
    return ea.first < eb.first;
  });
  Vocabulary v;
  for (const std::string* t : order) {
    if (v.size() - 4 >= max_size) break;
    if (counts.at(*t).count < min_count) continue;
    v.add(*t);
  }
  return v;
}

}  // namespace distillery
