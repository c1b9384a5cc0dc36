#include "enrolcast/protocol.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "enrolcast/error.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast {

using nlohmann::json;

namespace {

json parse_line(std::string_view line) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw ProtocolError("protocol error: expected an object", std::string(line));
    return j;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("protocol error: ") + e.what(), std::string(line));
  }
}

json encode_points(const std::vector<YearValue>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({{"year", p.year}, {"value", p.value}});
  return arr;
}

std::vector<YearValue> decode_points(const json& arr) {
  std::vector<YearValue> out;
  for (const auto& p : arr.get_ref<const json::array_t&>())
    out.push_back({p.at("year").get<int>(), p.at("value").get<double>()});
  return out;
}

double number(const json& j, std::string_view line) {
  if (!j.is_number()) throw ProtocolError("protocol error: expected a number", std::string(line));
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ProtocolError("protocol error: non-finite number", std::string(line));
  return v;
}

}  // namespace

std::string encode_handshake(const Handshake& h) {
  return json{{"protocol", h.protocol},
              {"name", h.name},
              {"supports_covariates", h.supports_covariates}}
      .dump();
}

Handshake decode_handshake(std::string_view line) {
  const json j = parse_line(line);
  Handshake h;
  try {
    h.protocol = j.at("protocol").get<std::string>();
    h.name = j.value("name", std::string());
    h.supports_covariates = j.value("supports_covariates", false);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("protocol error: ") + e.what(), std::string(line));
  }
  if (h.protocol != kProtocolVersion)
    throw ProtocolError("protocol error: unsupported protocol '" + h.protocol + "'",
                        std::string(line));
  return h;
}

std::string encode_request(const ForecastRequest& req) {
  json cov = json::object();
  for (const auto& [name, pts] : req.covariate_history) cov[name] = encode_points(pts);
  return json{{"request_id", req.request_id},
              {"series_id", req.series_id},
              {"target_history", encode_points(req.target_history)},
              {"covariate_history", cov},
              {"horizon", req.horizon},
              {"quantile_levels", req.quantile_levels}}
      .dump();
}

ForecastRequest decode_request(std::string_view line) {
  const json j = parse_line(line);
  ForecastRequest req;
  try {
    req.request_id = j.at("request_id").get<std::string>();
    req.series_id = j.value("series_id", std::string());
    req.target_history = decode_points(j.at("target_history"));
    if (j.contains("covariate_history"))
      for (const auto& [name, pts] : j.at("covariate_history").items())
        req.covariate_history[name] = decode_points(pts);
    req.horizon = j.at("horizon").get<int>();
    if (j.contains("quantile_levels"))
      req.quantile_levels = j.at("quantile_levels").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("protocol error: ") + e.what(), std::string(line));
  }
  return req;
}

std::string encode_reply(const std::string& request_id, const QuantileForecast& fc) {
  json steps = json::array();
  for (const auto& s : fc.steps) {
    json q = json::object();
    for (const auto& [level, value] : s.quantiles) q[format_double(level)] = value;
    steps.push_back({{"point", s.point}, {"quantiles", q}});
  }
  json out{{"request_id", request_id}, {"steps", steps}};
  if (!fc.flags.empty()) out["flags"] = fc.flags;
  return out.dump();
}

std::string encode_error_reply(const std::string& request_id, const std::string& message) {
  return json{{"request_id", request_id}, {"error", message}}.dump();
}

std::string peek_request_id(std::string_view line) {
  try {
    const auto j = json::parse(line);
    if (j.is_object() && j.contains("request_id") && j["request_id"].is_string())
      return j["request_id"].get<std::string>();
  } catch (const json::exception&) {
  }
  return {};
}

QuantileForecast decode_reply(std::string_view line, const std::string& expected_id) {
  const json j = parse_line(line);
  const std::string raw(line);
  if (!j.contains("request_id") || !j["request_id"].is_string())
    throw ProtocolError("protocol error: missing request_id", raw);
  if (j["request_id"].get<std::string>() != expected_id)
    throw ProtocolError("protocol error: reply answers request '" +
                            j["request_id"].get<std::string>() + "', expected '" +
                            expected_id + "'",
                        raw);
  if (j.contains("error")) {
    const auto& e = j["error"];
    throw Error("adapter error: " + (e.is_string() ? e.get<std::string>() : e.dump()));
  }
  if (!j.contains("steps") || !j["steps"].is_array())
    throw ProtocolError("protocol error: missing steps", raw);

  QuantileForecast fc;
  for (const auto& s : j["steps"]) {
    if (!s.is_object() || !s.contains("point"))
      throw ProtocolError("protocol error: malformed step", raw);
    ForecastStep step;
    step.point = number(s["point"], line);
    if (s.contains("quantiles")) {
      if (!s["quantiles"].is_object())
        throw ProtocolError("protocol error: quantiles must be an object", raw);
      for (const auto& [key, value] : s["quantiles"].items()) {
        double level = 0.0;
        try {
          level = parse_double(key);
        } catch (const Error&) {
          throw ProtocolError("protocol error: bad quantile level '" + key + "'", raw);
        }
        step.quantiles[level] = number(value, line);
      }
    }
    fc.steps.push_back(std::move(step));
  }
  if (j.contains("flags") && j["flags"].is_array())
    for (const auto& f : j["flags"])
      if (f.is_string()) fc.flags.push_back(f.get<std::string>());
  return fc;
}

}  // namespace enrolcast
