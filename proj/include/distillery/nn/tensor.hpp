#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "distillery/errors.hpp"
#include "distillery/random.hpp"

namespace distillery::nn {

enum class LayerKind { embedding, linear, lstm_cell, attention, softmax_projection };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::embedding: return "embedding";
    case LayerKind::linear: return "linear";
    case LayerKind::lstm_cell: return "lstm-cell";
    case LayerKind::attention: return "attention";
    case LayerKind::softmax_projection: return "softmax-projection";
  }
  return "?";
}

inline LayerKind layer_kind_from_string(std::string_view s) {
  if (s == "embedding") return LayerKind::embedding;
  if (s == "linear") return LayerKind::linear;
  if (s == "lstm-cell") return LayerKind::lstm_cell;
  if (s == "attention") return LayerKind::attention;
  if (s == "softmax-projection") return LayerKind::softmax_projection;
  throw ConfigError("unknown layer kind: " + std::string(s));
}

struct LayerSpec {
  LayerKind kind = LayerKind::linear;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;

  void validate() const {
    if (input_dim == 0 || output_dim == 0)
      throw ConfigError(std::string("layer spec (") + to_string(kind) +
                        "): dimensions must be positive");
    if (kind == LayerKind::attention && input_dim != output_dim)
      throw ConfigError("layer spec (attention): state dimensions must match");
  }
};

// Named parameter block. Shape is [rows] for vectors and [rows, cols] for
// matrices (row-major). Gradient storage always mirrors the value storage.
template <class S>
struct Tensor {
  std::string name;
  LayerSpec spec;
  std::vector<std::size_t> shape;
  std::vector<S> v;
  std::vector<S> g;

  Tensor() = default;
  Tensor(std::string n, LayerSpec sp, std::vector<std::size_t> sh) : name(std::move(n)), spec(sp), shape(std::move(sh)) {
    spec.validate();
    std::size_t total = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw ConfigError("tensor " + name + ": zero dimension");
      total *= d;
    }
    if (shape.empty() || shape.size() > 2) throw ConfigError("tensor " + name + ": rank must be 1 or 2");
    v.assign(total, S(0));
    g.assign(total, S(0));
  }

  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }
  std::size_t size() const { return v.size(); }

  void zero_grad() { std::fill(g.begin(), g.end(), S(0)); }

  void init_uniform(Rng& rng, double range = 0.1) {
    for (auto& x : v) x = static_cast<S>(uniform_real(rng, -range, range));
  }
};

template <class S>
inline bool all_finite(const std::vector<S>& xs) {
  for (S x : xs)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw UsageError("cosine: size mismatch");
  double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> softmax(const std::vector<double>& xs) {
  std::vector<double> p(xs.size());
  double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    p[i] = std::exp(xs[i] - m);
    s += p[i];
  }
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace distillery::nn
