#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "enrolcast/series_io.hpp"
#include "enrolcast/text_util.hpp"
#include "fixtures.hpp"

using namespace enrolcast;
using namespace enrolcast::cli;
using enrolcast::testing::data_path;
using enrolcast::testing::scratch_dir;
using enrolcast::testing::stub_adapter_path;
namespace fs = std::filesystem;

namespace {

const std::vector<int> kCalibrated{15, 15, 15, 21, 7, 6, 7, 49, 51, 54,
                                   39, 51, 58, 86, 95, 94, 75, 59, 39};

int run_cli(const std::string& args, std::string* stdout_text = nullptr) {
  const std::string dir = scratch_dir("cli-out");
  const std::string capture = dir + "/stdout.txt";
  const std::string cmd = std::string(ENROLCAST_CLI) + " " + args + " >" + capture + " 2>" +
                          dir + "/stderr.txt";
  const int status = std::system(cmd.c_str());
  if (stdout_text) *stdout_text = read_text_file(capture);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string write_config(const std::string& dir, const std::string& manifest,
                         const std::string& adapters = R"([{"name": "persistence"}])",
                         const std::string& extra = "") {
  const std::string path = dir + "/config.json";
  write_text_file(path, R"({"dataset": ")" + manifest + R"(", "adapters": )" + adapters +
                            extra + R"(, "seed": 7})");
  return path;
}

}  // namespace

TEST(CliValidate, ExitCodes) {
  const auto dir = scratch_dir("validate");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir);
  EXPECT_EQ(run_cli("validate " + manifest), 0);
  EXPECT_EQ(run_cli("validate " + dir + "/nope.json"), 2);

  auto ds = enrolcast::testing::synthetic_dataset();
  auto& spec = ds.covariate_regimes[1].series.at("ioci");
  auto pts = spec.series.points();
  pts[5].vintage = pts[5].year + 2;
  spec.series = spec.series.with_points(pts);
  const auto leaky = save_dataset(ds, scratch_dir("leaky"));
  std::ostringstream out, err;
  EXPECT_EQ(cmd_validate(leaky, 0.0, out, err), 1);
  EXPECT_NE(out.str().find("leakage-prone vintage"), std::string::npos);
}

TEST(CliUsage, BadArgumentsExitTwo) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("report rank"), 2);
}

TEST(CliIoci, NoDimensionSource) {
  std::string out;
  EXPECT_EQ(run_cli("ioci score --evidence " + data_path("evidence_pack.txt"), &out), 2);
  std::ostringstream o, e;
  IociScoreOptions so;
  so.evidence = data_path("evidence_pack.txt");
  EXPECT_EQ(cmd_ioci_score(so, o, e), 2);
  EXPECT_NE(e.str().find("no dimension source"), std::string::npos);
}

TEST(CliIoci, BaselineFileReproducesCalibratedColumn) {
  std::string out;
  ASSERT_EQ(run_cli("ioci score --evidence " + data_path("evidence_pack.txt") + " --reference " +
                        data_path("reference_calibrated.json") + " --baselines " +
                        data_path("baselines_uniform.json"),
                    &out),
            0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_EQ(j["sequence"].get<std::vector<int>>(), kCalibrated);
}

TEST(CliIoci, StubAssessorReproducesCalibratedColumn) {
  const auto dir = scratch_dir("assessor");
  IociScoreOptions so;
  so.evidence = data_path("evidence_pack.txt");
  so.reference = data_path("reference_calibrated.json");
  so.assessor_command =
      stub_adapter_path() + " --mode assessor --baselines " + data_path("baselines_uniform.json");
  so.out = dir + "/ioci.json";
  std::ostringstream o, e;
  ASSERT_EQ(cmd_ioci_score(so, o, e), 0) << e.str();
  const auto j = nlohmann::json::parse(read_text_file(*so.out));
  EXPECT_EQ(j["sequence"].get<std::vector<int>>(), kCalibrated);
  EXPECT_EQ(j["diagnostics"]["mae"], 0.0);
}

TEST(CliIoci, GarbageAssessorSavesRawReply) {
  const auto dir = scratch_dir("garbage-assessor");
  IociScoreOptions so;
  so.evidence = data_path("evidence_pack.txt");
  so.assessor_command = stub_adapter_path() + " --mode garbage";
  so.raw_reply = dir + "/reply.raw";
  std::ostringstream o, e;
  EXPECT_EQ(cmd_ioci_score(so, o, e), 1);
  ASSERT_TRUE(fs::exists(so.raw_reply));
  EXPECT_EQ(read_text_file(so.raw_reply), "{\"this is\": not json");
}

TEST(CliIoci, StrictModeIsDeterministic) {
  IociScoreOptions so;
  so.evidence = data_path("evidence_pack.txt");
  so.baselines = data_path("baselines_uniform.json");
  std::ostringstream a, b, e;
  ASSERT_EQ(cmd_ioci_score(so, a, e), 0);
  ASSERT_EQ(cmd_ioci_score(so, b, e), 0);
  EXPECT_EQ(a.str(), b.str());
  const auto j = nlohmann::json::parse(a.str());
  EXPECT_EQ(j["diagnostics"]["enabled"], false);
}

TEST(CliIoci, DiagnoseAssessorColumn) {
  std::string out;
  ASSERT_EQ(run_cli("ioci diagnose --reference " + data_path("reference_calibrated.json") +
                        " --series " + data_path("series_assessor.json"),
                    &out),
            0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_NEAR(j["mae"].get<double>(), 0.5263, 1e-4);
}

TEST(CliBacktest, PersistenceOnlyGivesOneMetricsRow) {
  const auto dir = scratch_dir("bt-one");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir + "/data");
  const auto config =
      write_config(dir, manifest, R"([{"name": "persistence"}])",
                   R"(, "cohorts": ["domestic"], "regimes": ["none"])");
  std::string out;
  ASSERT_EQ(run_cli("--config " + config + " --out " + dir + "/runs backtest run", &out), 0);
  const std::string run_dir = first_line(out);
  ASSERT_TRUE(fs::is_directory(run_dir));
  const auto metrics = parse_csv_document(read_text_file(run_dir + "/metrics_domestic_none.csv"));
  EXPECT_EQ(metrics.rows.size(), 1u);
  EXPECT_EQ(metrics.rows[0][metrics.column("n")], "11");
  EXPECT_FALSE(metrics.manifest_hash.empty());
  const auto manifest_json = nlohmann::json::parse(read_text_file(run_dir + "/run_manifest.json"));
  EXPECT_EQ(manifest_json["seed"], 7);
  EXPECT_EQ(manifest_json["run_manifest_hash"], metrics.manifest_hash);
  for (const auto& entry : fs::directory_iterator(run_dir))
    if (entry.path().extension() == ".csv")
      EXPECT_EQ(read_text_file(entry.path().string()).rfind("# run_manifest_hash=" + metrics.manifest_hash, 0), 0u)
          << entry.path();
}

TEST(CliBacktest, PersistenceRowsMatchAcrossRegimes) {
  const auto dir = scratch_dir("bt-regimes");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir + "/data");
  RunConfig c = parse_run_config(read_text_file(write_config(dir, manifest)), dir);
  c.out = dir + "/runs";
  c.cohorts = {"domestic"};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_backtest(c, out, err), 0) << err.str();
  const std::string run_dir = first_line(out.str());
  const auto none = parse_csv_document(read_text_file(run_dir + "/metrics_domestic_none.csv"));
  for (const char* regime : {"google_trends", "ioci"}) {
    const auto other = parse_csv_document(
        read_text_file(run_dir + "/metrics_domestic_" + std::string(regime) + ".csv"));
    ASSERT_EQ(other.rows.size(), none.rows.size());
    const auto rc = none.column("regime");
    for (std::size_t i = 0; i < none.rows.size(); ++i) {
      auto a = none.rows[i], b = other.rows[i];
      a[rc] = b[rc] = "";
      EXPECT_EQ(a, b);
    }
  }
}

TEST(CliBacktest, InterruptedAdapterGivesPartialResults) {
  const auto dir = scratch_dir("bt-partial");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir + "/data");
  const std::string adapters = R"([{"name": "persistence"}, {"name": "flaky", "transport": "child_process", "command": ")" +
                               stub_adapter_path() + R"( --mode crash --after 5", "timeout_seconds": 5}])";
  RunConfig c = parse_run_config(
      read_text_file(write_config(dir, manifest, adapters,
                                  R"(, "cohorts": ["domestic"], "regimes": ["none"])")),
      dir);
  c.out = dir + "/runs";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_backtest(c, out, err), 0);
  EXPECT_NE(err.str().find("warning"), std::string::npos);
  const std::string run_dir = first_line(out.str());
  const auto failures = parse_csv_document(read_text_file(run_dir + "/failures.csv"));
  EXPECT_FALSE(failures.rows.empty());
  const auto records = parse_csv_document(read_text_file(run_dir + "/records.csv"));
  EXPECT_EQ(records.rows.size() + failures.rows.size(), 22u);
}

TEST(CliBacktest, AllCellsFailingExitsOne) {
  const auto dir = scratch_dir("bt-empty");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir + "/data");
  const std::string adapters = R"([{"name": "dead", "transport": "child_process", "command": ")" +
                               stub_adapter_path() + R"( --mode crash"}])";
  RunConfig c = parse_run_config(read_text_file(write_config(dir, manifest, adapters)), dir);
  c.out = dir + "/runs";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_backtest(c, out, err), 1);
  EXPECT_NE(err.str().find("empty report"), std::string::npos);
}

TEST(CliBacktest, TablesAreByteIdenticalAcrossRuns) {
  const auto dir = scratch_dir("bt-repeat");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir + "/data");
  RunConfig c = parse_run_config(
      read_text_file(write_config(dir, manifest,
                                  R"([{"name": "persistence"}, {"name": "arima"}])")),
      dir);
  c.out = dir + "/runs";
  std::ostringstream o1, o2, err;
  ASSERT_EQ(cmd_backtest(c, o1, err), 0);
  ASSERT_EQ(cmd_backtest(c, o2, err), 0);
  const std::string a = first_line(o1.str()), b = first_line(o2.str());
  ASSERT_NE(a, b);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".csv") continue;
    EXPECT_EQ(read_text_file(entry.path().string()), read_text_file(b + "/" + name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 8);
}

TEST(CliReport, RegeneratesMetricsAndRanks) {
  const auto dir = scratch_dir("report");
  const auto manifest = enrolcast::testing::write_synthetic_dataset(dir + "/data");
  RunConfig c = parse_run_config(
      read_text_file(write_config(dir, manifest,
                                  R"([{"name": "persistence"}, {"name": "arima"}])",
                                  R"(, "regimes": ["none"])")),
      dir);
  c.out = dir + "/runs";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_backtest(c, out, err), 0);
  const std::string run_dir = first_line(out.str());
  const std::string before = read_text_file(run_dir + "/metrics_domestic_none.csv");
  fs::remove(run_dir + "/metrics_domestic_none.csv");
  std::ostringstream mo, me;
  ASSERT_EQ(cmd_report_metrics(run_dir, mo, me), 0) << me.str();
  EXPECT_EQ(read_text_file(run_dir + "/metrics_domestic_none.csv"), before);
  std::string rank_out;
  EXPECT_EQ(run_cli("report rank " + run_dir, &rank_out), 0);
  EXPECT_NE(rank_out.find("persistence"), std::string::npos);
  const auto rank = parse_csv_document(read_text_file(run_dir + "/rank_domestic_none.csv"));
  EXPECT_EQ(rank.rows.size(), 2u);
}

TEST(CliReport, EmptyDirectory) {
  const auto dir = scratch_dir("report-empty");
  EXPECT_EQ(run_cli("report rank " + dir), 1);
  EXPECT_EQ(run_cli("report rank " + dir + "/missing"), 2);
}

TEST(CliFeatures, BuildTrends) {
  const auto dir = scratch_dir("trends");
  std::string csv = "series_id,year,month,value\n";
  for (int y = 2010; y <= 2012; ++y)
    for (int m = 1; m <= 12; ++m)
      csv += "rsv," + std::to_string(y) + "," + std::to_string(m) + ",50\n";
  write_text_file(dir + "/monthly.csv", csv);
  EXPECT_EQ(run_cli("features build-trends " + dir + "/monthly.csv --dir " + dir + "/out"), 0);
  EXPECT_TRUE(fs::exists(dir + "/out/regime.json"));
  EXPECT_TRUE(fs::exists(dir + "/out/rsv_ewma2.csv"));
  EXPECT_EQ(run_cli("features build-trends " + dir + "/absent.csv"), 2);
}

TEST(CliConfig, ParsesDescriptorsAndRejectsUnknownTransport) {
  const auto c = parse_run_config(R"({"dataset": "m.json", "adapters": [
      {"name": "bolt", "transport": "child_process", "command": "x", "timeout_seconds": 9,
       "residual_covariates": true}]})",
                                  "/base");
  EXPECT_EQ(c.dataset, "/base/m.json");
  ASSERT_EQ(c.adapters.size(), 1u);
  EXPECT_EQ(c.adapters[0].transport, Transport::child_process);
  EXPECT_EQ(c.adapters[0].timeout_seconds, 9);
  EXPECT_TRUE(c.adapters[0].residual_covariates);
  EXPECT_ANY_THROW(parse_adapter_descriptor(R"({"name": "x", "transport": "carrier-pigeon"})"));
}

TEST(CliCsv, QuotingRoundTrip) {
  const std::vector<std::string> header{"a", "b"};
  const std::vector<std::vector<std::string>> rows{{"plain", "with,comma"},
                                                   {"quote\"d", "multi\nline"}};
  const auto doc = csv_document("abc", header, rows);
  const auto t = parse_csv_document(doc);
  EXPECT_EQ(t.manifest_hash, "abc");
  EXPECT_EQ(t.header, header);
  EXPECT_EQ(t.rows, rows);
}
