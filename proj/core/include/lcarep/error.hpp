#pragma once

#include <stdexcept>
#include <string>

namespace lcarep {

// Error taxonomy mirrors the CLI exit codes: configuration problems (1),
// dataset/file-format problems (2), training failures (3). Operation
// preconditions throw std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace lcarep
