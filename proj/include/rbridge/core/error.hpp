#pragma once

#include <stdexcept>
#include <string>

namespace rbridge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid distribution, kernel, grid or run parameters.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed request (empty batch, dimension mismatch, unknown metric, ...).
class UsageError : public Error {
  public:
    using Error::Error;
};

/// A time or state argument outside the domain of the operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Evaluation too close to the bridge horizon, where the drift blows up.
class SingularityError : public Error {
  public:
    using Error::Error;
};

/// A bridge endpoint or state outside the support of the driving process.
class UnsupportedEndpointError : public Error {
  public:
    using Error::Error;
};

/// Every posterior weight vanished.
class FilteringCollapseError : public Error {
  public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
  public:
    using Error::Error;
};

} // namespace rbridge
