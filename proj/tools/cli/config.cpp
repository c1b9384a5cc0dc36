#include "config.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "enrolcast/error.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

AdapterDescriptor descriptor_from(const json& j) {
  AdapterDescriptor d;
  d.name = j.at("name").get<std::string>();
  const auto transport = j.value("transport", std::string("in_process"));
  if (transport == "in_process") {
    d.transport = Transport::in_process;
  } else if (transport == "child_process") {
    d.transport = Transport::child_process;
  } else {
    throw Error("unknown transport '" + transport + "'");
  }
  if (j.contains("command")) d.command = j["command"].get<std::string>();
  d.timeout_seconds = j.value("timeout_seconds", 30);
  d.supports_covariates = j.value("supports_covariates", false);
  d.residual_covariates = j.value("residual_covariates", false);
  d.model = j.value("model", std::string());
  d.require_valid();
  return d;
}

template <class T>
std::vector<T> list_or_single(const json& j, const char* many, const char* one) {
  if (j.contains(many)) return j[many].get<std::vector<T>>();
  if (j.contains(one)) return {j[one].get<T>()};
  return {};
}

}  // namespace

std::string read_input_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot read '" + path + "'");
  return read_text_file(path);
}

AdapterDescriptor parse_adapter_descriptor(std::string_view json_text) {
  try {
    return descriptor_from(json::parse(json_text));
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed adapter descriptor: ") + e.what());
  }
}

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    if (j.contains("dataset")) {
      fs::path p = j["dataset"].get<std::string>();
      if (p.is_relative()) p = fs::path(base_dir) / p;
      c.dataset = p.lexically_normal().string();
    }
    c.cohorts = list_or_single<std::string>(j, "cohorts", "cohort");
    c.regimes = j.value("regimes", std::vector<std::string>{});
    c.origins = j.value("origins", std::vector<Year>{});
    c.min_train_years = j.value("min_train_years", c.min_train_years);
    c.horizon = j.value("horizon", c.horizon);
    c.quantile_levels = j.value("quantile_levels", c.quantile_levels);
    for (const auto& a : j.value("adapters", json::array())) c.adapters.push_back(descriptor_from(a));
    c.reference_model = j.value("reference_model", c.reference_model);
    c.out = j.value("out", c.out);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  const auto text = read_input_file(path);
  return parse_run_config(text, fs::path(path).parent_path().string());
}

std::string config_json(const RunConfig& c) {
  ordered_json adapters = ordered_json::array();
  for (const auto& a : c.adapters) {
    ordered_json d{{"name", a.name},
                   {"transport", a.transport == Transport::in_process ? "in_process"
                                                                      : "child_process"},
                   {"command", a.command ? ordered_json(*a.command) : ordered_json()},
                   {"timeout_seconds", a.timeout_seconds},
                   {"supports_covariates", a.supports_covariates},
                   {"residual_covariates", a.residual_covariates},
                   {"model", a.model}};
    adapters.push_back(d);
  }
  ordered_json j{{"dataset", c.dataset},
                 {"cohorts", c.cohorts},
                 {"regimes", c.regimes},
                 {"origins", c.origins},
                 {"min_train_years", c.min_train_years},
                 {"horizon", c.horizon},
                 {"quantile_levels", c.quantile_levels},
                 {"adapters", adapters},
                 {"reference_model", c.reference_model},
                 {"seed", c.seed}};
  return j.dump();
}

}  // namespace enrolcast::cli
