#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "csv.hpp"
#include "enrolcast/backtest.hpp"
#include "enrolcast/error.hpp"
#include "enrolcast/features.hpp"
#include "enrolcast/hash.hpp"
#include "enrolcast/ioci_io.hpp"
#include "enrolcast/series_io.hpp"
#include "enrolcast/text_util.hpp"
#include "report.hpp"

namespace enrolcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

void write_file(const fs::path& path, std::string_view content) {
  try {
    write_text_file(path.string(), content);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

Dataset load_dataset_checked(const std::string& manifest) {
  if (!fs::is_regular_file(manifest)) throw UsageError("cannot read '" + manifest + "'");
  try {
    return load_dataset(manifest);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string dataset_fingerprint(const Dataset& ds) {
  std::string text;
  for (const auto& [cohort, s] : ds.targets) {
    text += "target " + cohort + "\n";
    text += format_series_csv(std::span(&s, 1));
  }
  for (const auto& set : ds.covariate_regimes) {
    text += "regime " + set.regime_name + "\n";
    for (const auto& [name, spec] : set.series) {
      text += name + " lag=" + std::to_string(spec.lag_years) +
              " standardize=" + (spec.standardize ? "1" : "0") + "\n";
      text += format_series_csv(std::span(&spec.series, 1));
    }
  }
  return text;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path fresh_run_dir(const fs::path& root, const std::string& stem) {
  fs::path dir = root / stem;
  for (int i = 2; fs::exists(dir); ++i) dir = root / (stem + "-" + std::to_string(i));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

std::map<std::string, int> failure_counts(const std::vector<BacktestReport>& reports) {
  std::map<std::string, int> counts;
  for (const auto& r : reports)
    for (const auto& f : r.failures) ++counts[f.kind];
  return counts;
}

void write_files(const fs::path& dir, const ReportFiles& files, std::ostream& out) {
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    out << (dir / name).string() << "\n";
  }
}

fs::path require_dir(const std::string& path) {
  if (!fs::is_directory(path)) throw UsageError("not a directory: '" + path + "'");
  return fs::path(path);
}

IociWeights parse_weights(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != kDimensions) throw UsageError("--weights needs five comma-separated values");
  std::array<double, kDimensions> w{};
  for (int i = 0; i < kDimensions; ++i) w[i] = parse_double(trim(parts[i]));
  return IociWeights::from_decimal(w);
}

BaselineSet ask_assessor(const IociScoreOptions& o, const EvidencePack& evidence) {
  AdapterDescriptor desc;
  if (o.assessor_descriptor) {
    desc = parse_adapter_descriptor(read_input_file(*o.assessor_descriptor));
  } else {
    desc.name = "assessor";
    desc.transport = Transport::child_process;
    desc.command = *o.assessor_command;
    desc.timeout_seconds = o.assessor_timeout_seconds;
  }
  const std::string prompt =
      read_input_file(o.system_prompt ? *o.system_prompt : default_system_prompt_path());
  const std::string evidence_json = evidence_to_json(evidence);
  const std::string request_id = "ioci-" + hash_hex(evidence_json).substr(0, 12);

  ChildProcessSession session(desc);
  session.handshake();
  ordered_json req{{"request_id", request_id},
                   {"kind", "ioci_assessment"},
                   {"system_prompt", prompt},
                   {"evidence", json::parse(evidence_json)}};
  const std::string reply = session.exchange(req.dump());
  try {
    return parse_assessor_reply(reply, request_id);
  } catch (const ProtocolError&) {
    write_file(o.raw_reply, reply);
    throw;
  }
}

std::map<Year, int> series_from_document(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  std::map<Year, int> out;
  if (j.is_object() && j.contains("series") && j["series"].is_array()) {
    for (const auto& y : parse_schema(text).series) out[y.year] = y.final_ioci;
    return out;
  }
  auto ref = parse_reference(text);
  if (!ref) throw Error("series has no year mapping");
  return *ref;
}

}  // namespace

std::string default_system_prompt_path() {
  const fs::path source = fs::path(ENROLCAST_SOURCE_DATA_DIR) / "ioci_system_prompt.txt";
  if (fs::exists(source)) return source.string();
  return (fs::path(ENROLCAST_INSTALL_DATA_DIR) / "ioci_system_prompt.txt").string();
}

int cmd_validate(const std::string& manifest, double tolerance, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const Dataset ds = load_dataset_checked(manifest);
    ValidationOptions opts;
    opts.tolerance = tolerance;
    const auto findings = validate_dataset(ds, opts);
    for (const auto& f : findings) out << format_finding(f) << "\n";
    return has_errors(findings) ? kExitDomain : kExitOk;
  });
}

int cmd_build_trends(const std::string& monthly_csv, const std::string& out_dir,
                     const std::string& series_id, int min_months, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const auto all = parse_monthly_csv(read_input_file(monthly_csv));
    const MonthlySeries* raw = nullptr;
    for (const auto& m : all)
      if (series_id.empty() || m.id == series_id) {
        if (raw) throw UsageError("several monthly series present; pick one with --series");
        raw = &m;
      }
    if (!raw) throw UsageError("no monthly series '" + series_id + "' in '" + monthly_csv + "'");

    const auto features = build_trends_features(*raw, min_months);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw UsageError("cannot create '" + out_dir + "'");

    ordered_json series = ordered_json::array();
    for (const auto& [name, spec] : features.regime.series) {
      const std::string file = file_safe(name) + ".csv";
      write_file(fs::path(out_dir) / file, format_series_csv(std::span(&spec.series, 1)));
      series.push_back({{"name", name},
                        {"file", file},
                        {"series_id", spec.series.id()},
                        {"unit", spec.series.unit()},
                        {"lag_years", spec.lag_years},
                        {"standardize", spec.standardize}});
    }
    const ordered_json fragment{{"name", features.regime.regime_name}, {"series", series}};
    const fs::path fragment_path = fs::path(out_dir) / "regime.json";
    write_file(fragment_path, fragment.dump(2) + "\n");
    for (const auto& f : features.findings) err << format_finding(f) << "\n";
    out << fragment_path.string() << "\n";
    return kExitOk;
  });
}

int cmd_backtest(const RunConfig& input, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = input;
    if (config.dataset.empty()) throw UsageError("config names no dataset");
    const Dataset ds = load_dataset_checked(config.dataset);
    if (config.cohorts.empty())
      for (const auto& [cohort, s] : ds.targets) config.cohorts.push_back(cohort);
    if (config.regimes.empty()) {
      config.regimes.push_back("none");
      for (const auto& r : ds.covariate_regimes)
        if (r.regime_name != "none") config.regimes.push_back(r.regime_name);
    }
    if (config.adapters.empty()) {
      AdapterDescriptor d;
      d.name = "persistence";
      config.adapters.push_back(d);
    }

    std::vector<BacktestPlan> plans;
    ordered_json origins_json = ordered_json::object();
    for (const auto& cohort : config.cohorts) {
      BacktestPlan plan;
      plan.cohort = cohort;
      plan.horizon = config.horizon;
      plan.min_train_years = config.min_train_years;
      plan.regimes = config.regimes;
      plan.adapters = config.adapters;
      plan.quantile_levels = config.quantile_levels;
      plan.origins = config.origins.empty()
                         ? plan_origins(ds.target(cohort), config.min_train_years, config.horizon)
                         : config.origins;
      plan.require_valid();
      origins_json[cohort] = plan.origins;
      plans.push_back(std::move(plan));
    }

    ordered_json manifest{{"tool", "enrolcast"},
                          {"version", ENROLCAST_VERSION},
                          {"compiler", __VERSION__},
                          {"seed", config.seed},
                          {"config", json::parse(config_json(config))},
                          {"origins", origins_json},
                          {"dataset_hash", hash_hex(dataset_fingerprint(ds))}};
    const std::string hash = hash_hex(manifest.dump());

    RunOptions options;
    options.adapter_env["ENROLCAST_SEED"] = std::to_string(config.seed);
    std::vector<BacktestReport> reports;
    for (const auto& plan : plans) reports.push_back(run_backtest(plan, ds, options));

    manifest["run_manifest_hash"] = hash;
    manifest["created_utc"] = utc_timestamp();
    const fs::path dir =
        fresh_run_dir(config.out, "run-" + hash.substr(0, 12) + "-" + manifest["created_utc"].get<std::string>());
    write_file(dir / "run_manifest.json", manifest.dump(2) + "\n");
    write_file(dir / "records.csv", records_csv(reports, hash));
    write_file(dir / "failures.csv", failures_csv(reports, hash));

    std::vector<CohortRecord> records;
    for (const auto& r : reports)
      for (const auto& rec : r.records) records.push_back({r.cohort, rec});
    std::ostringstream sink;
    write_files(dir, build_metric_reports(records, config.reference_model, hash,
                                          failure_counts(reports)),
                sink);
    std::vector<CsvTable> tables;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().filename().string().rfind("metrics_", 0) == 0)
        tables.push_back(parse_csv_document(read_text_file(entry.path().string())));
    write_files(dir, build_rank_reports(tables, hash).files, sink);

    std::size_t n_failures = 0;
    for (const auto& r : reports) {
      for (const auto& f : r.failures)
        err << "warning: " << r.cohort << " " << f.model << " " << f.regime << " " << f.origin
            << " " << f.kind << ": " << f.message << "\n";
      n_failures += r.failures.size();
    }
    if (n_failures) err << "warning: " << n_failures << " cell(s) failed; see failures.csv\n";
    out << dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_report_metrics(const std::string& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const fs::path dir = require_dir(run_dir);
    if (!fs::exists(dir / "records.csv")) throw Error("missing records.csv in '" + run_dir + "'");
    const auto table = parse_csv_document(read_text_file((dir / "records.csv").string()));
    std::string reference = "persistence";
    if (fs::exists(dir / "run_manifest.json")) {
      const json m = json::parse(read_text_file((dir / "run_manifest.json").string()));
      reference = m.at("config").value("reference_model", reference);
    }
    std::map<std::string, int> counts;
    if (fs::exists(dir / "failures.csv")) {
      const auto f = parse_csv_document(read_text_file((dir / "failures.csv").string()));
      const auto kind = f.column("kind");
      for (const auto& row : f.rows) ++counts[row[kind]];
    }
    write_files(dir, build_metric_reports(parse_records(table), reference, table.manifest_hash,
                                          counts),
                out);
    return kExitOk;
  });
}

int cmd_report_rank(const std::string& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const fs::path dir = require_dir(run_dir);
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("metrics_", 0) == 0 && entry.path().extension() == ".csv")
        paths.push_back(entry.path());
    }
    if (paths.empty()) throw Error("missing metrics in '" + run_dir + "'");
    std::sort(paths.begin(), paths.end());
    std::vector<CsvTable> tables;
    for (const auto& p : paths) tables.push_back(parse_csv_document(read_text_file(p.string())));
    const auto report = build_rank_reports(tables, tables.front().manifest_hash);
    std::ostringstream sink;
    write_files(dir, report.files, sink);
    out << report.text;
    return kExitOk;
  });
}

int cmd_ioci_score(const IociScoreOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!o.baselines && !o.assessor_command && !o.assessor_descriptor)
      throw UsageError("no dimension source: pass --baselines or an assessor");
    const EvidencePack evidence = parse_evidence(read_input_file(o.evidence));
    std::optional<ReferenceSeries> reference;
    if (o.reference) reference = parse_reference(read_input_file(*o.reference));
    const IociWeights weights = o.weights ? parse_weights(*o.weights) : IociWeights{};

    const BaselineSet inputs = o.baselines ? parse_baselines(read_input_file(*o.baselines))
                                           : ask_assessor(o, evidence);
    const auto doc = emit_schema(score_series(evidence, reference, inputs, weights));
    if (o.out) {
      write_file(*o.out, doc);
    } else {
      out << doc;
    }
    return kExitOk;
  });
}

int cmd_ioci_diagnose(const std::string& reference, const std::string& series,
                      std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ref = parse_reference(read_input_file(reference));
    if (!ref) throw Error("reference has no year mapping");
    IociAssessment a;
    a.diagnostics = compute_diagnostics(*ref, series_from_document(read_input_file(series)));
    const ordered_json doc = ordered_json::parse(emit_schema(a));
    out << doc.at("diagnostics").dump(2) << "\n";
    return kExitOk;
  });
}

}  // namespace enrolcast::cli
