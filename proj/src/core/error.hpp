#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lnm {

// Base of every error raised by the engine. The C API maps each subclass to
// a distinct status code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Invalid network spec, train config, or run config.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Malformed or out-of-range input data (IDX files, labels, checkpoints).
class DataError : public Error {
public:
  using Error::Error;
};

// Non-finite values or an unsolvable linear system. Layer and timestep are
// -1 when not applicable.
class NumericalError : public Error {
public:
  NumericalError(const std::string &what, int layer = -1, int timestep = -1)
      : Error(what), layer_(layer), timestep_(timestep) {}

  int layer() const noexcept { return layer_; }
  int timestep() const noexcept { return timestep_; }

private:
  int layer_;
  int timestep_;
};

// A broken internal invariant, e.g. a tape that does not cover every step.
class InternalError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace lnm
