#pragma once

#include <stdexcept>
#include <string>

namespace chicane {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- map loading ---
struct MapLoadError : Error {
  using Error::Error;
};
struct MalformedHeader : MapLoadError {
  using MapLoadError::MapLoadError;
};
struct DimensionMismatch : MapLoadError {
  using MapLoadError::MapLoadError;
};
struct BadThreshold : MapLoadError {
  using MapLoadError::MapLoadError;
};

// --- generic parsing / persistence ---
struct ParseError : Error {
  using Error::Error;
};
struct VersionMismatch : Error {
  using Error::Error;
};

// --- simulation ---
struct NonPositiveDt : Error {
  using Error::Error;
};
struct UnknownVehicleId : Error {
  using Error::Error;
};

// --- localization ---
struct NoFreeSpace : Error {
  using Error::Error;
};

// --- planning ---
struct EmptyGapList : Error {
  using Error::Error;
};
struct EmptyPath : Error {
  using Error::Error;
};
struct DegenerateGoal : Error {
  using Error::Error;
};
struct OutOfDomain : Error {
  using Error::Error;
};

// --- function approximation ---
struct InsufficientData : Error {
  using Error::Error;
};
struct SingularKernel : Error {
  using Error::Error;
};
struct Untrained : Error {
  using Error::Error;
};

// --- vehicle-to-vehicle networking ---
// Shared parent so callers can treat any comm failure as "peer unknown".
struct CommError : Error {
  using Error::Error;
};
struct ConnectionRefused : CommError {
  using CommError::CommError;
};
struct Timeout : CommError {
  using CommError::CommError;
};

// --- scenario / CLI ---
struct ConfigError : Error {
  using Error::Error;
};
struct MissingLog : Error {
  using Error::Error;
};

}  // namespace chicane
