#ifndef UAVLOC_ERROR_HPP
#define UAVLOC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace uavloc {

// Malformed input data: bad header line, truncated body, unparseable CSV row.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is well-formed but uses a feature this toolkit does not implement
// (e.g. binary_compressed PCD).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration value (non-positive step, indivisible grid, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch_, const std::string& what_)
      : std::runtime_error(what_), epoch(epoch_) {}
  int epoch;
};

}  // namespace uavloc

#endif
