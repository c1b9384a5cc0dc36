#pragma once

#include <stdexcept>
#include <string>

namespace enrolcast {

/// Base class for every domain failure raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request or window would expose information dated after the origin.
class LeakageError : public Error {
 public:
  using Error::Error;
};

/// Numerical estimation did not produce a usable model.
class FitError : public Error {
 public:
  using Error::Error;
};

/// The adapter did not answer before its deadline, or its process died.
class AdapterTimeout : public Error {
 public:
  using Error::Error;
};

/// A reply from an external adapter could not be decoded or validated.
/// The raw payload is retained for the failure log.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw_payload)
      : Error(what), raw_payload_(std::move(raw_payload)) {}

  const std::string& raw_payload() const noexcept { return raw_payload_; }

 private:
  std::string raw_payload_;
};

/// Quantiles cross by more than the repair tolerance allows.
class InvalidQuantiles : public Error {
 public:
  using Error::Error;
};

}  // namespace enrolcast
