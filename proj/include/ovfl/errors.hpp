#pragma once

#include <stdexcept>
#include <string>

namespace ovfl {

/// Dimension mismatch between tensors or between a tensor and a model.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid configuration value or unusable config file.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A training loss became non-finite; carries the global round that failed.
struct DivergenceError : std::runtime_error {
  DivergenceError(int round_index, const std::string& what)
      : std::runtime_error(what), round(round_index) {}
  int round;
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ovfl
