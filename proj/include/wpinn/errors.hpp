#pragma once

#include <stdexcept>
#include <string>

namespace wpinn {

// Bad hyperparameters, arities or sizes supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite or out-of-domain input data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse: wrong node kinds, shapes or call order.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Evaluation too close to a chart pole.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Training or time stepping produced something unusable.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wpinn
