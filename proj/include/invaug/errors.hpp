#pragma once

#include <stdexcept>
#include <string>

namespace invaug {

// Invalid or inconsistent run configuration; message names the offending
// field ("trainer.epsilon: ...").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value encountered during a numeric computation. When raised
// inside a training run, carries the epoch/batch coordinates of the abort.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, int epoch = -1, int batch = -1)
      : std::runtime_error(what), epoch(epoch), batch(batch) {}

  int epoch;
  int batch;
};

}  // namespace invaug
