#pragma once

#include <cmath>
#include <vector>

#include "distillery/nn/tensor.hpp"

namespace distillery::nn {

// Plain SGD with global-norm gradient clipping. step() consumes and clears
// the accumulated gradients.
template <class S>
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double clip_norm)
      : lr_(learning_rate), clip_(clip_norm) {
    if (learning_rate <= 0.0) throw ConfigError("sgd: learning rate must be positive");
    if (clip_norm <= 0.0) throw ConfigError("sgd: clip norm must be positive");
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  void halve_learning_rate() { lr_ *= 0.5; }

  // Returns the pre-clip global gradient norm.
  double step(const std::vector<Tensor<S>*>& params) {
    double sq = 0.0;
    for (const Tensor<S>* p : params) {
      for (S g : p->g) {
        const double gd = static_cast<double>(g);
        if (!std::isfinite(gd))
          throw TrainingError("non-finite gradient in layer " + p->name);
        sq += gd * gd;
      }
    }
    const double norm = std::sqrt(sq);
    const double mult = norm > clip_ ? clip_ / norm : 1.0;
    const double eta = lr_ * mult;
    for (Tensor<S>* p : params) {
      for (std::size_t i = 0; i < p->size(); ++i)
        p->v[i] -= static_cast<S>(eta * static_cast<double>(p->g[i]));
      p->zero_grad();
    }
    return norm;
  }

 private:
  double lr_;
  double clip_;
};

}  // namespace distillery::nn
