#pragma once

#include <stdexcept>
#include <string>

namespace lcurtain {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid DeviceConfig, scene file, or argument outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The device limits admit no feasible curtain on the discretized grid.
class InfeasibleGraph : public Error {
 public:
  using Error::Error;
};

/// A bounded computation (path enumeration, request size) exceeded its cap.
class ResourceCap : public Error {
 public:
  using Error::Error;
};

/// Graph, model, profile, or curtain built for a different device.
class Mismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace lcurtain
