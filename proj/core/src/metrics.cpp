#include "enrolcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "enrolcast/error.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast {

namespace {

constexpr double kLevelTol = 1e-9;

const double* find_level(const std::map<double, double>& q, double level) {
  auto it = q.lower_bound(level - kLevelTol);
  if (it == q.end() || std::abs(it->first - level) > kLevelTol) return nullptr;
  return &it->second;
}

}  // namespace

ErrorSummary point_errors(std::span<const ForecastRecord> records) {
  if (records.empty()) throw Error("no records to score");
  ErrorSummary s;
  s.model = records.front().model;
  s.regime = records.front().regime;
  double abs_sum = 0.0, sq_sum = 0.0, smape_sum = 0.0, mape_sum = 0.0;
  int mape_n = 0;
  for (const auto& r : records) {
    if (!r.actual) throw Error("record without an actual cannot be scored");
    const double y = *r.actual;
    const double e = y - r.point;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    const double denom = std::abs(y) + std::abs(r.point);
    if (denom > 0.0) smape_sum += 2.0 * std::abs(e) / denom;
    if (y != 0.0) {
      mape_sum += std::abs(e) / std::abs(y);
      ++mape_n;
    } else {
      ++s.mape_excluded;
    }
  }
  const double n = static_cast<double>(records.size());
  s.n = static_cast<int>(records.size());
  s.mae = abs_sum / n;
  s.mse = sq_sum / n;
  s.rmse = std::sqrt(s.mse);
  s.smape = 100.0 * smape_sum / n;
  s.mape = mape_n > 0 ? 100.0 * mape_sum / mape_n : 0.0;
  return s;
}

double pinball(double tau, double q, double y) {
  return y >= q ? tau * (y - q) : (1.0 - tau) * (q - y);
}

double crps_from_quantiles(const std::map<double, double>& quantiles, double y,
                           double central_level) {
  if (quantiles.size() == 1 && std::abs(quantiles.begin()->first - 0.5) <= kLevelTol)
    return std::abs(y - quantiles.begin()->second);
  const double levels[] = {(1.0 - central_level) / 2.0, 0.5, (1.0 + central_level) / 2.0};
  std::string missing;
  double total = 0.0;
  for (double level : levels) {
    const double* v = find_level(quantiles, level);
    if (!v) {
      missing += (missing.empty() ? "" : ", ") + format_double(level);
      continue;
    }
    total += pinball(level, *v, y);
  }
  if (!missing.empty()) throw Error("missing quantile levels: " + missing);
  return 2.0 * total / 3.0;
}

double interval_score(double lower, double upper, double y, double central_level) {
  if (lower > upper) throw Error("interval lower bound exceeds upper bound");
  const double alpha = 1.0 - central_level;
  double s = upper - lower;
  if (y < lower) s += 2.0 / alpha * (lower - y);
  if (y > upper) s += 2.0 / alpha * (y - upper);
  return s;
}

PitValue pit(const std::map<double, double>& quantiles, double y) {
  if (quantiles.size() < 2) throw Error("PIT needs at least two quantile levels");
  std::vector<std::pair<double, double>> knots(quantiles.begin(), quantiles.end());
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (knots[i].second < knots[i - 1].second)
      throw Error("PIT needs non-decreasing quantiles");

  if (y < knots.front().second) return {knots.front().first, true};
  if (y > knots.back().second) return {knots.back().first, true};

  std::size_t first_eq = knots.size(), last_eq = 0;
  for (std::size_t i = 0; i < knots.size(); ++i)
    if (knots[i].second == y) {
      first_eq = std::min(first_eq, i);
      last_eq = i;
    }
  if (first_eq < knots.size())
    return {(knots[first_eq].first + knots[last_eq].first) / 2.0, false};

  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (y < knots[i].second) {
      const auto& [l0, q0] = knots[i - 1];
      const auto& [l1, q1] = knots[i];
      return {l0 + (l1 - l0) * (y - q0) / (q1 - q0), false};
    }
  }
  return {knots.back().first, false};
}

PitEcdf pit_ecdf(std::span<const double> pit_values) {
  if (pit_values.empty()) throw Error("no PIT values");
  std::vector<double> u(pit_values.begin(), pit_values.end());
  std::sort(u.begin(), u.end());
  PitEcdf out;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double hi = static_cast<double>(i + 1) / n;
    const double lo = static_cast<double>(i) / n;
    out.max_deviation = std::max({out.max_deviation, hi - u[i], u[i] - lo});
    if (i + 1 == u.size() || u[i + 1] != u[i]) out.steps.emplace_back(u[i], hi);
  }
  return out;
}

double kolmogorov_band_5pct(std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return 1.358 / (rn + 0.12 + 0.11 / rn);
}

ProbSummary prob_scores(std::span<const ForecastRecord> records) {
  if (records.empty()) throw Error("no records to score");
  ProbSummary s;
  for (const auto& r : records) {
    if (!r.actual) throw Error("record without an actual cannot be scored");
    const double y = *r.actual;
    s.crps80 += crps_from_quantiles(r.quantiles, y, 0.8);
    s.crps95 += crps_from_quantiles(r.quantiles, y, 0.95);
    s.interval_score_80 +=
        interval_score(*find_level(r.quantiles, 0.1), *find_level(r.quantiles, 0.9), y, 0.8);
    s.interval_score_95 += interval_score(*find_level(r.quantiles, 0.025),
                                          *find_level(r.quantiles, 0.975), y, 0.95);
    const auto p = pit(r.quantiles, y);
    s.pit_values.push_back(p.value);
    if (p.clamped) ++s.pit_clamped;
  }
  const double n = static_cast<double>(records.size());
  s.crps80 /= n;
  s.crps95 /= n;
  s.interval_score_80 /= n;
  s.interval_score_95 /= n;
  return s;
}

double delta_mae(double model_mae, double reference_mae) { return reference_mae - model_mae; }

double delta_mae(const ErrorSummary& model, const ErrorSummary& reference) {
  if (model.n != reference.n || model.step != reference.step)
    throw Error("mismatched keys: summaries cover different record sets");
  return delta_mae(model.mae, reference.mae);
}

PairedDelta delta_mae(std::span<const ForecastRecord> model,
                      std::span<const ForecastRecord> reference) {
  using Key = std::pair<Year, int>;
  auto index = [](std::span<const ForecastRecord> rs) {
    std::map<Key, double> m;
    for (const auto& r : rs) {
      if (!r.actual) throw Error("record without an actual cannot be scored");
      if (!m.emplace(Key{r.origin, r.step}, std::abs(*r.actual - r.point)).second)
        throw Error("duplicate record key");
    }
    return m;
  };
  const auto a = index(model);
  const auto b = index(reference);
  if (a.size() != b.size() ||
      !std::equal(a.begin(), a.end(), b.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; }))
    throw Error("mismatched keys between model and reference records");
  if (a.empty()) throw Error("no records to compare");
  PairedDelta out;
  double sum = 0.0;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    const double diff = ib->second - ia->second;
    out.per_key.push_back({ia->first.first, ia->first.second, diff});
    sum += diff;
  }
  out.delta = sum / static_cast<double>(a.size());
  return out;
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<RankRow> rank_models(std::span<const ErrorSummary> summaries) {
  static const char* const kMetrics[] = {"MAE", "RMSE", "SMAPE", "MAPE"};
  auto metric = [](const ErrorSummary& s, int m) {
    switch (m) {
      case 0: return s.mae;
      case 1: return s.rmse;
      case 2: return s.smape;
      default: return s.mape;
    }
  };

  // regime -> step -> summaries
  std::map<std::string, std::map<int, std::vector<const ErrorSummary*>>> groups;
  for (const auto& s : summaries) groups[s.regime][s.step].push_back(&s);

  std::vector<RankRow> out;
  for (const auto& [regime, by_step] : groups) {
    std::map<std::string, RankRow> rows;
    std::map<std::string, int> steps_seen;
    for (const auto& [step, group] : by_step) {
      for (int m = 0; m < 4; ++m) {
        std::vector<double> vals;
        for (const auto* s : group) vals.push_back(metric(*s, m));
        const auto ranks = fractional_ranks(vals);
        for (std::size_t i = 0; i < group.size(); ++i) {
          auto& row = rows[group[i]->model];
          row.regime = regime;
          row.model = group[i]->model;
          row.metric_ranks[kMetrics[m]] += ranks[i];
        }
      }
      for (const auto* s : group) ++steps_seen[s->model];
    }
    std::vector<RankRow> regime_rows;
    for (auto& [model, row] : rows) {
      const double steps = steps_seen[model];
      double total = 0.0;
      for (auto& [name, r] : row.metric_ranks) {
        r /= steps;
        total += r;
      }
      row.average_rank = total / static_cast<double>(row.metric_ranks.size());
      regime_rows.push_back(row);
    }
    std::sort(regime_rows.begin(), regime_rows.end(), [](const RankRow& a, const RankRow& b) {
      return std::tuple(a.average_rank, a.metric_ranks.at("MAE"), a.model) <
             std::tuple(b.average_rank, b.metric_ranks.at("MAE"), b.model);
    });
    for (std::size_t i = 0; i < regime_rows.size(); ++i)
      regime_rows[i].final_rank = static_cast<int>(i) + 1;
    out.insert(out.end(), regime_rows.begin(), regime_rows.end());
  }
  return out;
}

}  // namespace enrolcast
