#pragma once

#include <stdexcept>
#include <string>

namespace modsel {

// Base class for all library failures.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical rank of a design (or a deleted-row refit) fell below p.
struct RankDeficientError : Error {
  using Error::Error;
};

// Shape or index bounds violated.
struct DimensionMismatchError : Error {
  using Error::Error;
};

// A leverage value reached 1; the leave-one-out residual is not identifiable.
struct LeverageOneError : Error {
  using Error::Error;
};

// h-block window leaves fewer usable rows than parameters.
struct BlockTooLargeError : Error {
  using Error::Error;
};

struct BadKError : Error {
  using Error::Error;
};

struct WindowTooSmallError : Error {
  using Error::Error;
};

struct BadBandwidthError : Error {
  using Error::Error;
};

struct NonFiniteError : Error {
  using Error::Error;
};

// Zero mean squared error: log-based criteria are undefined.
struct PerfectFitError : Error {
  using Error::Error;
};

struct BadArgsError : Error {
  using Error::Error;
};

struct EmptyError : Error {
  using Error::Error;
};

struct MixedCriteriaError : Error {
  using Error::Error;
};

// Oracle quantities requested on a dataset without true means.
struct MissingTruthError : Error {
  using Error::Error;
};

struct BadSpecError : Error {
  using Error::Error;
};

struct BadGridError : Error {
  using Error::Error;
};

struct DegenerateGridError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

}  // namespace modsel
