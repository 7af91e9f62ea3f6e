#pragma once

#include <stdexcept>
#include <string>

namespace kgr {

// Base class for everything thrown by this library. The CLI maps the three
// broad categories onto process exit codes (config=1, data=2, numeric=3).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

// API contract violations (caller bugs rather than bad input files).
struct LogicError : Error {
  using Error::Error;
};

// --- kg-core ---
struct MissingTypeMapping : DataError {
  using DataError::DataError;
};
struct MalformedRow : DataError {
  using DataError::DataError;
};
struct EmptyInput : DataError {
  using DataError::DataError;
};
struct AlreadyAugmented : LogicError {
  using LogicError::LogicError;
};
struct UnknownEntity : DataError {
  using DataError::DataError;
};
struct InfeasibleConfig : ConfigError {
  using ConfigError::ConfigError;
};

// --- rules ---
struct MalformedRule : DataError {
  using DataError::DataError;
};
struct ScoreOutOfRange : DataError {
  using DataError::DataError;
};
struct InvalidPath : DataError {
  using DataError::DataError;
};
struct UnrealizableBody : DataError {
  using DataError::DataError;
};

// --- policy ---
struct InvalidDimension : ConfigError {
  using ConfigError::ConfigError;
};
struct DimensionMismatch : LogicError {
  using LogicError::LogicError;
};
struct EmptyActionSet : LogicError {
  using LogicError::LogicError;
};

// --- training ---
struct StaleTrajectory : LogicError {
  using LogicError::LogicError;
};
struct EmptyQuerySet : DataError {
  using DataError::DataError;
};

// --- inference/eval ---
struct QueryNotInTruth : DataError {
  using DataError::DataError;
};

// --- checkpoint / io ---
struct CheckpointError : DataError {
  using DataError::DataError;
};
struct VocabularyMismatch : DataError {
  using DataError::DataError;
};

}  // namespace kgr
