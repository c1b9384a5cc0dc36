// Deterministic stand-in adapter for protocol and fault-injection tests.
#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <nlohmann/json.hpp>
#include <thread>

#include "enrolcast/baselines.hpp"
#include "enrolcast/error.hpp"
#include "enrolcast/ioci_io.hpp"
#include "enrolcast/protocol.hpp"
#include "enrolcast/text_util.hpp"

using namespace enrolcast;

namespace {

void send(const std::string& line) {
  std::cout << line << '\n' << std::flush;
}

QuantileForecast persistence_reply(const ForecastRequest& req) {
  std::vector<double> history;
  for (const auto& yv : req.target_history) history.push_back(yv.value);
  return persistence_forecast(history, req.horizon, req.quantile_levels);
}

std::string assessor_reply(const std::string& line, const BaselineSet& baselines) {
  const auto req = nlohmann::json::parse(line);
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (const auto& [year, in] : baselines) {
    nlohmann::ordered_json dims = nlohmann::ordered_json::object();
    for (int i = 0; i < kDimensions; ++i) dims[std::string(kDimensionKeys[i])] = in.dims[i];
    series.push_back({{"year", year}, {"dimension_scores", dims}, {"sanity_adjustment", in.sanity}});
  }
  return nlohmann::ordered_json{{"request_id", req.at("request_id").get<std::string>()}, {"series", series}}.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stub forecasting adapter"};
  std::string mode = "persistence", name = "stub", baselines_path;
  int after = 0;
  double delay = 0.0;
  bool covariates = false;
  app.add_option("--mode", mode)
      ->check(CLI::IsMember({"persistence", "echo", "hang", "crash", "garbage", "crossing",
                             "slow", "assessor"}));
  app.add_option("--name", name);
  app.add_option("--after", after, "Requests answered normally before the fault");
  app.add_option("--delay", delay, "Seconds to wait before each reply in slow mode");
  app.add_option("--baselines", baselines_path, "Dimension baselines for assessor mode");
  app.add_flag("--covariates", covariates, "Announce covariate support");
  CLI11_PARSE(app, argc, argv);

  BaselineSet baselines;
  if (mode == "assessor") baselines = parse_baselines(read_text_file(baselines_path));

  send(encode_handshake({std::string(kProtocolVersion), name, covariates || mode == "echo"}));

  std::string line;
  int served = 0;
  while (std::getline(std::cin, line)) {
    const bool faulty = served >= after;
    if (mode == "hang" && faulty) {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (mode == "crash" && faulty) std::_Exit(3);
    if (mode == "garbage" && faulty) {
      send("{\"this is\": not json");
      ++served;
      continue;
    }
    if (mode == "slow") std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    if (mode == "assessor") {
      send(assessor_reply(line, baselines));
      ++served;
      continue;
    }
    ForecastRequest req;
    try {
      req = decode_request(line);
    } catch (const Error& e) {
      send(encode_error_reply(peek_request_id(line), e.what()));
      continue;
    }
    auto fc = persistence_reply(req);
    if (mode == "echo") {
      std::string names;
      for (const auto& [cname, pts] : req.covariate_history)
        names += (names.empty() ? "" : ";") + cname + ":" + std::to_string(pts.size());
      fc.flags.push_back("covariates=" + names);
    }
    if (mode == "crossing" && faulty) {
      for (auto& step : fc.steps) {
        double v = step.point + 1000.0;
        for (auto& [level, q] : step.quantiles) q = (v -= 100.0);
      }
    }
    send(encode_reply(req.request_id, fc));
    ++served;
  }
  return 0;
}
