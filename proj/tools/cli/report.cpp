#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <span>
#include <tuple>

#include "enrolcast/error.hpp"
#include "enrolcast/metrics.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast::cli {

using nlohmann::ordered_json;

namespace {

std::string num(double x) { return format_double(x); }

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<double> levels_of(const std::vector<BacktestReport>& reports) {
  std::set<double> levels;
  for (const auto& rep : reports)
    for (const auto& r : rep.records)
      for (const auto& [l, v] : r.quantiles) levels.insert(l);
  return {levels.begin(), levels.end()};
}

using GroupKey = std::pair<std::string, std::string>;  // cohort, regime

std::map<GroupKey, std::map<std::string, std::vector<ForecastRecord>>> group(
    const std::vector<CohortRecord>& records) {
  std::map<GroupKey, std::map<std::string, std::vector<ForecastRecord>>> g;
  for (const auto& cr : records)
    if (cr.record.actual) g[{cr.cohort, cr.record.regime}][cr.record.model].push_back(cr.record);
  return g;
}

std::vector<ForecastRecord> restrict_to(const std::vector<ForecastRecord>& rs,
                                        const std::set<std::pair<Year, int>>& keys) {
  std::vector<ForecastRecord> out;
  for (const auto& r : rs)
    if (keys.count({r.origin, r.step})) out.push_back(r);
  return out;
}

std::set<std::pair<Year, int>> keys_of(const std::vector<ForecastRecord>& rs) {
  std::set<std::pair<Year, int>> k;
  for (const auto& r : rs) k.insert({r.origin, r.step});
  return k;
}

ordered_json finite_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace

std::string file_safe(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

std::string records_csv(const std::vector<BacktestReport>& reports, const std::string& hash) {
  const auto levels = levels_of(reports);
  CsvRow header{"cohort", "model", "regime", "origin", "step", "target_year", "point", "actual"};
  for (double l : levels) header.push_back("q" + num(l));
  header.push_back("flags");
  std::vector<CsvRow> rows;
  for (const auto& rep : reports) {
    for (const auto& r : rep.records) {
      CsvRow row{rep.cohort,
                 r.model,
                 r.regime,
                 std::to_string(r.origin),
                 std::to_string(r.step),
                 std::to_string(r.target_year),
                 num(r.point),
                 r.actual ? num(*r.actual) : "NA"};
      for (double l : levels) {
        auto it = r.quantiles.find(l);
        row.push_back(it == r.quantiles.end() ? "" : num(it->second));
      }
      row.push_back(join(r.flags, '|'));
      rows.push_back(std::move(row));
    }
  }
  return csv_document(hash, header, rows);
}

std::vector<CohortRecord> parse_records(const CsvTable& t) {
  const auto c_cohort = t.column("cohort"), c_model = t.column("model"),
             c_regime = t.column("regime"), c_origin = t.column("origin"),
             c_step = t.column("step"), c_target = t.column("target_year"),
             c_point = t.column("point"), c_actual = t.column("actual"),
             c_flags = t.column("flags");
  std::vector<std::pair<std::size_t, double>> qcols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].size() > 1 && t.header[i][0] == 'q')
      qcols.push_back({i, parse_double(std::string_view(t.header[i]).substr(1))});

  std::vector<CohortRecord> out;
  for (const auto& row : t.rows) {
    CohortRecord cr;
    cr.cohort = row[c_cohort];
    auto& r = cr.record;
    r.model = row[c_model];
    r.regime = row[c_regime];
    r.origin = parse_int(row[c_origin]);
    r.step = parse_int(row[c_step]);
    r.target_year = parse_int(row[c_target]);
    r.point = parse_double(row[c_point]);
    if (row[c_actual] != "NA") r.actual = parse_double(row[c_actual]);
    for (const auto& [col, level] : qcols)
      if (!row[col].empty()) r.quantiles[level] = parse_double(row[col]);
    if (!row[c_flags].empty()) r.flags = split(row[c_flags], '|');
    out.push_back(std::move(cr));
  }
  return out;
}

std::string failures_csv(const std::vector<BacktestReport>& reports, const std::string& hash) {
  std::vector<CsvRow> rows;
  for (const auto& rep : reports)
    for (const auto& f : rep.failures)
      rows.push_back({rep.cohort, f.model, f.regime, std::to_string(f.origin), f.kind, f.message,
                      f.raw_payload});
  return csv_document(hash, {"cohort", "model", "regime", "origin", "kind", "message", "raw_payload"},
                      rows);
}

ReportFiles build_metric_reports(const std::vector<CohortRecord>& records,
                                 const std::string& reference_model, const std::string& hash,
                                 const std::map<std::string, int>& failure_counts) {
  ReportFiles files;
  std::vector<CsvRow> effect_rows, pit_rows;
  ordered_json groups_json = ordered_json::array();

  for (const auto& [key, by_model] : group(records)) {
    const auto& [cohort, regime] = key;
    std::vector<ErrorSummary> summaries;
    for (const auto& [model, rs] : by_model) {
      std::map<int, std::vector<ForecastRecord>> by_step;
      for (const auto& r : rs) by_step[r.step].push_back(r);
      for (const auto& [step, srs] : by_step) {
        auto s = point_errors(srs);
        s.step = step;
        summaries.push_back(s);
      }
    }
    std::map<std::string, int> final_rank;
    for (const auto& row : rank_models(summaries)) final_rank[row.model] = row.final_rank;

    std::vector<CsvRow> metric_rows;
    for (const auto& s : summaries)
      metric_rows.push_back({cohort, regime, s.model, std::to_string(s.step), std::to_string(s.n),
                             num(s.mae), num(s.rmse), num(s.smape), num(s.mape),
                             std::to_string(final_rank.at(s.model)),
                             std::to_string(s.mape_excluded)});
    files["metrics_" + file_safe(cohort) + "_" + file_safe(regime) + ".csv"] = csv_document(
        hash,
        {"cohort", "regime", "model", "step", "n", "mae", "rmse", "smape", "mape", "rank",
         "mape_excluded"},
        metric_rows);

    const auto ref_it = by_model.find(reference_model);
    ordered_json models_json = ordered_json::array();
    for (const auto& [model, rs] : by_model) {
      CsvRow row{cohort, regime, model, reference_model};
      if (ref_it != by_model.end()) {
        auto common = keys_of(rs);
        const auto ref_keys = keys_of(ref_it->second);
        std::erase_if(common, [&](const auto& k) { return !ref_keys.count(k); });
        const auto m = restrict_to(rs, common);
        const auto ref = restrict_to(ref_it->second, common);
        if (m.empty()) {
          row.insert(row.end(), {"0", "NA"});
        } else {
          row.insert(row.end(),
                     {std::to_string(m.size()), num(delta_mae(std::span(m), std::span(ref)).delta)});
        }
      } else {
        row.insert(row.end(), {"0", "NA"});
      }

      const auto overall = point_errors(rs);
      ordered_json mj{{"model", model},
                      {"n", overall.n},
                      {"mae", overall.mae},
                      {"rmse", overall.rmse},
                      {"smape", overall.smape},
                      {"mape", overall.mape}};
      try {
        const auto prob = prob_scores(rs);
        row.insert(row.end(), {num(prob.crps80), num(prob.crps95), num(prob.interval_score_80),
                               num(prob.interval_score_95)});
        const auto ecdf = pit_ecdf(prob.pit_values);
        const double band = kolmogorov_band_5pct(prob.pit_values.size());
        mj["crps80"] = finite_or_null(prob.crps80);
        mj["crps95"] = finite_or_null(prob.crps95);
        mj["pit_max_deviation"] = ecdf.max_deviation;
        mj["ks_band_5pct"] = band;
        mj["pit_within_band"] = ecdf.max_deviation <= band;
        mj["pit_clamped"] = prob.pit_clamped;
      } catch (const Error&) {
        row.insert(row.end(), {"NA", "NA", "NA", "NA"});
        mj["crps80"] = nullptr;
        mj["crps95"] = nullptr;
      }
      effect_rows.push_back(std::move(row));
      models_json.push_back(mj);

      for (const auto& r : rs) {
        if (r.quantiles.empty()) continue;
        const auto p = pit(r.quantiles, *r.actual);
        pit_rows.push_back({cohort, regime, model, std::to_string(r.origin),
                            std::to_string(r.step), num(p.value), p.clamped ? "1" : "0"});
      }
    }
    groups_json.push_back({{"cohort", cohort}, {"regime", regime}, {"models", models_json}});
  }
  if (groups_json.empty()) throw Error("no scored records");

  files["effect_sizes.csv"] = csv_document(
      hash,
      {"cohort", "regime", "model", "reference", "n_paired", "delta_mae", "crps80", "crps95",
       "interval_score_80", "interval_score_95"},
      effect_rows);
  files["pit.csv"] = csv_document(
      hash, {"cohort", "regime", "model", "origin", "step", "pit", "clamped"}, pit_rows);

  ordered_json failures = ordered_json::object();
  for (const auto& [k, v] : failure_counts) failures[k] = v;
  ordered_json summary{{"run_manifest_hash", hash},
                       {"reference_model", reference_model},
                       {"records", records.size()},
                       {"failures", failures},
                       {"groups", groups_json}};
  files["summary.json"] = summary.dump(2) + "\n";
  return files;
}

RankReport build_rank_reports(const std::vector<CsvTable>& tables, const std::string& hash) {
  std::map<std::string, std::vector<ErrorSummary>> by_cohort;
  for (const auto& t : tables) {
    const auto c_cohort = t.column("cohort"), c_regime = t.column("regime"),
               c_model = t.column("model"), c_step = t.column("step"), c_n = t.column("n"),
               c_mae = t.column("mae"), c_rmse = t.column("rmse"), c_smape = t.column("smape"),
               c_mape = t.column("mape");
    for (const auto& row : t.rows) {
      ErrorSummary s;
      s.regime = row[c_regime];
      s.model = row[c_model];
      s.step = parse_int(row[c_step]);
      s.n = parse_int(row[c_n]);
      s.mae = parse_double(row[c_mae]);
      s.rmse = parse_double(row[c_rmse]);
      s.mse = s.rmse * s.rmse;
      s.smape = parse_double(row[c_smape]);
      s.mape = parse_double(row[c_mape]);
      by_cohort[row[c_cohort]].push_back(s);
    }
  }
  if (by_cohort.empty()) throw Error("missing metrics: no metric rows found");

  RankReport out;
  for (const auto& [cohort, summaries] : by_cohort) {
    std::map<std::string, std::vector<CsvRow>> rows_by_regime;
    for (const auto& r : rank_models(summaries)) {
      rows_by_regime[r.regime].push_back(
          {cohort, r.regime, r.model, num(r.metric_ranks.at("MAE")),
           num(r.metric_ranks.at("RMSE")), num(r.metric_ranks.at("SMAPE")),
           num(r.metric_ranks.at("MAPE")), num(r.average_rank), std::to_string(r.final_rank)});
    }
    for (const auto& [regime, rows] : rows_by_regime) {
      out.files["rank_" + file_safe(cohort) + "_" + file_safe(regime) + ".csv"] = csv_document(
          hash,
          {"cohort", "regime", "model", "mae_rank", "rmse_rank", "smape_rank", "mape_rank",
           "average_rank", "final_rank"},
          rows);
      out.text += cohort + " / " + regime + "\n";
      for (const auto& row : rows)
        out.text += "  " + row[8] + ". " + row[2] + "  (average rank " + row[7] + ")\n";
    }
  }
  return out;
}

}  // namespace enrolcast::cli
