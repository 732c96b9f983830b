#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "distillery/nn/tensor.hpp"

namespace distillery::nn {

// Central-difference oracle for the tape's backward closures.
//
// `f(bool with_grad)` must return the scalar loss for the current parameter
// values; when with_grad is true it must also accumulate reverse-mode
// gradients into each tensor's `g`. Returns the worst relative error
// |ad - fd| / max(|ad|, |fd|, 1e-6) over the checked coordinates. When a
// tensor has more than `max_coords_per_tensor` entries a seeded random subset
// of that size is checked instead of every coordinate.
template <class S, class F>
double grad_check(F&& f, const std::vector<Tensor<S>*>& params, double eps = 1e-5,
                  std::size_t max_coords_per_tensor = std::numeric_limits<std::size_t>::max(),
                  std::uint64_t seed = 0) {
  if (eps < 1e-6 || eps > 1e-3) throw UsageError("grad_check: eps outside [1e-6, 1e-3]");
  for (Tensor<S>* p : params) p->zero_grad();
  (void)f(true);

  Rng rng(derive_seed(seed, "grad-check"));
  double worst = 0.0;
  for (Tensor<S>* p : params) {
    std::vector<std::size_t> coords;
    if (p->size() <= max_coords_per_tensor) {
      coords.resize(p->size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      coords = sample_without_replacement(rng, p->size(), max_coords_per_tensor);
    }
    for (std::size_t c : coords) {
      const S saved = p->v[c];
      p->v[c] = saved + static_cast<S>(eps);
      const double up = f(false);
      p->v[c] = saved - static_cast<S>(eps);
      const double dn = f(false);
      p->v[c] = saved;
      const double fd = (up - dn) / (2.0 * eps);
      const double ad = static_cast<double>(p->g[c]);
      const double rel = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace distillery::nn
