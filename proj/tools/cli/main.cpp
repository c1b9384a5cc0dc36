#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

using namespace enrolcast::cli;

int main(int argc, char** argv) {
  CLI::App app{"Enrolment forecasting benchmark and operating-conditions index"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--out", out_dir, "Output root for run directories");
  app.add_option("--seed", seed, "Seed recorded in the run manifest and passed to adapters");

  int code = kExitOk;

  auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
  std::string manifest;
  double tolerance = 0.0;
  validate->add_option("manifest", manifest, "Dataset manifest")->required();
  validate->add_option("--tolerance", tolerance, "Slack on range checks");
  validate->callback([&] { code = cmd_validate(manifest, tolerance, std::cout, std::cerr); });

  auto* features = app.add_subcommand("features", "Feature engineering");
  features->require_subcommand(1);
  auto* trends = features->add_subcommand("build-trends", "Annual trends regime from monthly RSV");
  std::string monthly, trends_out = "trends", series_id;
  int min_months = 10;
  trends->add_option("monthly", monthly, "Monthly CSV (series_id,year,month,value)")->required();
  trends->add_option("--dir", trends_out, "Directory for series files and regime fragment");
  trends->add_option("--series", series_id, "Series id when the file holds several");
  trends->add_option("--min-months", min_months, "Months required per year");
  trends->callback([&] {
    code = cmd_build_trends(monthly, trends_out, series_id, min_months, std::cout, std::cerr);
  });

  auto* backtest = app.add_subcommand("backtest", "Expanding-window backtests");
  backtest->require_subcommand(1);
  auto* run = backtest->add_subcommand("run", "Run the configured backtest grid");
  std::string dataset;
  std::optional<int> min_train, horizon;
  run->add_option("--dataset", dataset, "Dataset manifest (overrides the config)");
  run->add_option("--min-train-years", min_train);
  run->add_option("--horizon", horizon);
  run->callback([&] {
    RunConfig c;
    try {
      if (!config_path.empty()) c = load_run_config(config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      code = kExitUsage;
      return;
    }
    if (!dataset.empty()) c.dataset = dataset;
    if (!out_dir.empty()) c.out = out_dir;
    if (app.count("--seed")) c.seed = seed;
    if (min_train) c.min_train_years = *min_train;
    if (horizon) c.horizon = *horizon;
    code = cmd_backtest(c, std::cout, std::cerr);
  });

  auto* report = app.add_subcommand("report", "Tables from a run directory");
  report->require_subcommand(1);
  std::string run_dir;
  auto* metrics = report->add_subcommand("metrics", "Metric, effect-size and PIT tables");
  metrics->add_option("run_dir", run_dir)->required();
  metrics->callback([&] { code = cmd_report_metrics(run_dir, std::cout, std::cerr); });
  auto* rank = report->add_subcommand("rank", "Rank tables per regime");
  rank->add_option("run_dir", run_dir)->required();
  rank->callback([&] { code = cmd_report_rank(run_dir, std::cout, std::cerr); });

  auto* ioci = app.add_subcommand("ioci", "Operating-conditions index");
  ioci->require_subcommand(1);
  auto* score = ioci->add_subcommand("score", "Score an evidence pack");
  IociScoreOptions so;
  std::string assessor_cmd, assessor_desc, reference, baselines, prompt, weights, ioci_out;
  score->add_option("--evidence", so.evidence, "Evidence pack (prose or JSON)")->required();
  score->add_option("--reference", reference, "Reference series (calibration mode)");
  score->add_option("--baselines", baselines, "Dimension baselines (JSON)");
  score->add_option("--assessor", assessor_cmd, "Assessor adapter command");
  score->add_option("--assessor-descriptor", assessor_desc, "Assessor adapter descriptor (JSON)");
  score->add_option("--assessor-timeout", so.assessor_timeout_seconds, "Seconds");
  score->add_option("--system-prompt", prompt, "Prompt file sent to the assessor");
  score->add_option("--weights", weights, "Five comma-separated weights");
  score->add_option("--output", ioci_out, "Write the document here instead of stdout");
  score->add_option("--raw-reply", so.raw_reply, "Where a rejected assessor reply is saved");
  score->callback([&] {
    auto opt = [](const std::string& s) {
      return s.empty() ? std::nullopt : std::optional<std::string>(s);
    };
    so.reference = opt(reference);
    so.baselines = opt(baselines);
    so.assessor_command = opt(assessor_cmd);
    so.assessor_descriptor = opt(assessor_desc);
    so.system_prompt = opt(prompt);
    so.weights = opt(weights);
    so.out = opt(ioci_out);
    code = cmd_ioci_score(so, std::cout, std::cerr);
  });

  auto* diagnose = ioci->add_subcommand("diagnose", "Compare a series with a reference");
  std::string diag_ref, diag_series;
  diagnose->add_option("--reference", diag_ref)->required();
  diagnose->add_option("--series", diag_series, "IOCI document or year-keyed series")
      ->required();
  diagnose->callback([&] { code = cmd_ioci_diagnose(diag_ref, diag_series, std::cout, std::cerr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  return code;
}
