#pragma once

#include <string>
#include <string_view>

#include "enrolcast/forecast.hpp"

namespace enrolcast {

inline constexpr std::string_view kProtocolVersion = "enrolcast-adapter/1";

struct Handshake {
  std::string protocol;
  std::string name;
  bool supports_covariates = false;
};

// Every message is one JSON object on one line. Unknown fields are
// ignored on decode.
std::string encode_handshake(const Handshake& h);
/// Throws ProtocolError on a malformed line or a protocol mismatch.
Handshake decode_handshake(std::string_view line);

std::string encode_request(const ForecastRequest& req);
ForecastRequest decode_request(std::string_view line);

std::string encode_reply(const std::string& request_id, const QuantileForecast& fc);
std::string encode_error_reply(const std::string& request_id, const std::string& message);

/// Decodes a forecast reply and checks that it answers `expected_id`.
/// Quantile keys are matched to the requested levels. An error reply is
/// rethrown as Error("adapter error: ..."). Malformed replies raise
/// ProtocolError carrying the raw line.
QuantileForecast decode_reply(std::string_view line, const std::string& expected_id);

/// Request id embedded in a line, or empty if it cannot be read.
std::string peek_request_id(std::string_view line);

}  // namespace enrolcast
