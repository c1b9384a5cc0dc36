#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace enrolcast::cli {

// Exit codes: 0 success, 1 domain failure, 2 usage or I/O failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

int cmd_validate(const std::string& manifest, double tolerance, std::ostream& out,
                 std::ostream& err);

int cmd_build_trends(const std::string& monthly_csv, const std::string& out_dir,
                     const std::string& series_id, int min_months, std::ostream& out,
                     std::ostream& err);

/// Runs every cohort and writes out/run-<hash12>-<utc timestamp>/. The
/// run directory path is printed on `out`.
int cmd_backtest(const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_report_metrics(const std::string& run_dir, std::ostream& out, std::ostream& err);
int cmd_report_rank(const std::string& run_dir, std::ostream& out, std::ostream& err);

struct IociScoreOptions {
  std::string evidence;
  std::optional<std::string> reference;
  std::optional<std::string> baselines;
  /// Assessor adapter: a shell command, or a JSON descriptor file.
  std::optional<std::string> assessor_command;
  std::optional<std::string> assessor_descriptor;
  int assessor_timeout_seconds = 120;
  std::optional<std::string> system_prompt;  // defaults to the shipped file
  std::optional<std::string> weights;        // "0.30,0.25,0.20,0.15,0.10"
  std::optional<std::string> out;            // stdout when absent
  std::string raw_reply = "assessor_reply.raw";
};

int cmd_ioci_score(const IociScoreOptions& options, std::ostream& out, std::ostream& err);

/// Diagnostics between a reference series and either an emitted IOCI
/// document or another year-keyed series.
int cmd_ioci_diagnose(const std::string& reference, const std::string& series,
                      std::ostream& out, std::ostream& err);

/// Path of the shipped assessor system prompt.
std::string default_system_prompt_path();

}  // namespace enrolcast::cli
