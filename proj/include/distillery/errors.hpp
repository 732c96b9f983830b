#pragma once

#include <stdexcept>
#include <string>

namespace distillery {

// Malformed caller input: empty corpus, bad probability vector, wrong label set, ...
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent layer dimensions or an invalid run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimization breakdown: non-finite loss or gradient.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace distillery
