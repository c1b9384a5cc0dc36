#include "enrolcast/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iterator>
#include <thread>
#include <tuple>

#include "enrolcast/error.hpp"
#include "enrolcast/features.hpp"

namespace enrolcast {

namespace {

const CovariateSet* find_regime(const Dataset& ds, const std::string& regime) {
  if (ds.has_regime(regime)) return &ds.regime(regime);
  if (regime == "none") return nullptr;
  throw Error("unknown regime '" + regime + "'");
}

std::string leak_message(const std::string& series, Year year, Year vintage, Year origin) {
  return "leakage detected: series '" + series + "' year " + std::to_string(year) +
         " (vintage " + std::to_string(vintage) + ") at origin " + std::to_string(origin);
}

AnnualSeries lagged(const CovariateSpec& spec) {
  return spec.lag_years > 0 ? lag(spec.series, spec.lag_years) : spec.series;
}

ForecastRequest assemble(const Dataset& ds, const BacktestPlan& plan, Year origin,
                         const std::string& regime, bool with_covariates,
                         std::vector<std::string>* flags) {
  const auto& target = ds.target(plan.cohort);
  const AnnualSeries window = slice_training_window(target, origin);

  ForecastRequest req;
  req.request_id = plan.cohort + "/" + regime + "/" + std::to_string(origin);
  req.series_id = target.id();
  req.horizon = plan.horizon;
  req.quantile_levels = plan.quantile_levels;
  for (const auto& p : window.points())
    if (p.value) req.target_history.push_back({p.year, *p.value});
  const Year last = req.last_target_year();

  const CovariateSet* set = find_regime(ds, regime);
  if (!set || !with_covariates) return req;

  for (const auto& [name, spec] : set->series) {
    const AnnualSeries s = lagged(spec);
    for (const auto& p : s.points())
      if (p.value && p.year <= origin && p.vintage > origin)
        throw LeakageError(leak_message(name, p.year, p.vintage, origin));

    AnnualSeries cut = slice_training_window(s, origin);
    if (spec.standardize) {
      const auto params = fit_standardizer(s, origin);
      auto z = apply_standardizer(cut, params);
      if (z.degenerate && flags) flags->push_back("degenerate covariate " + name);
      cut = std::move(z.series);
    }
    auto& out = req.covariate_history[name];
    for (const auto& p : cut.points())
      if (p.value && p.year <= last) out.push_back({p.year, *p.value});
  }
  return req;
}

std::string failure_kind(const std::exception_ptr& e, std::string& raw) {
  try {
    std::rethrow_exception(e);
  } catch (const AdapterTimeout&) {
    return "timeout";
  } catch (const ProtocolError& p) {
    raw = p.raw_payload();
    return "protocol";
  } catch (const InvalidQuantiles&) {
    return "quantiles";
  } catch (const FitError&) {
    return "fit";
  } catch (...) {
    return "error";
  }
}

}  // namespace

void BacktestPlan::require_valid() const {
  if (cohort.empty()) throw Error("plan needs a cohort");
  if (horizon < 1) throw Error("horizon must be >= 1");
  if (min_train_years < 1) throw Error("min_train_years must be >= 1");
  if (origins.empty()) throw Error("plan has no origins");
  for (std::size_t i = 1; i < origins.size(); ++i)
    if (origins[i] <= origins[i - 1]) throw Error("origins must be strictly increasing");
  if (regimes.empty()) throw Error("plan has no regimes");
  if (adapters.empty()) throw Error("plan has no adapters");
  for (const auto& a : adapters) a.require_valid();
  for (std::size_t i = 0; i < adapters.size(); ++i)
    for (std::size_t j = i + 1; j < adapters.size(); ++j)
      if (adapters[i].name == adapters[j].name)
        throw Error("duplicate adapter name '" + adapters[i].name + "'");
  for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
    if (!(quantile_levels[i] > 0.0 && quantile_levels[i] < 1.0))
      throw Error("quantile levels must lie in (0, 1)");
    if (i > 0 && !(quantile_levels[i] > quantile_levels[i - 1]))
      throw Error("quantile levels must be strictly increasing");
  }
}

std::vector<Year> plan_origins(const AnnualSeries& series, int min_train_years,
                               int horizon) {
  if (min_train_years < 1) throw Error("min_train_years must be >= 1");
  if (horizon < 1) throw Error("horizon must be >= 1");
  const auto years = series.observed_years();
  if (static_cast<int>(years.size()) < min_train_years + horizon)
    throw Error("series too short for min_train_years + horizon");
  std::vector<Year> origins;
  for (Year t = series.first_year(); t <= series.last_year(); ++t) {
    const auto count = std::upper_bound(years.begin(), years.end(), t) - years.begin();
    if (count >= min_train_years && series.value_at(t + horizon)) origins.push_back(t);
  }
  if (origins.empty()) throw Error("no forecast origin satisfies the plan");
  return origins;
}

ForecastRequest assemble_request(const Dataset& ds, const BacktestPlan& plan, Year origin,
                                 const std::string& regime, bool with_covariates) {
  return assemble(ds, plan, origin, regime, with_covariates, nullptr);
}

void verify_request(const Dataset& ds, const BacktestPlan& plan, Year origin,
                    const std::string& regime, const ForecastRequest& req) {
  const auto& target = ds.target(plan.cohort);
  for (const auto& yv : req.target_history) {
    const Observation* src = target.find(yv.year);
    if (yv.year > origin || !src || src->vintage > origin)
      throw LeakageError(leak_message(target.id(), yv.year, src ? src->vintage : yv.year,
                                      origin));
  }
  const CovariateSet* set = find_regime(ds, regime);
  for (const auto& [name, pts] : req.covariate_history) {
    if (!set || !set->series.count(name))
      throw LeakageError("leakage detected: unknown covariate '" + name + "' in request");
    const auto& spec = set->series.at(name);
    for (const auto& yv : pts) {
      const Observation* src = spec.series.find(yv.year - spec.lag_years);
      if (yv.year > origin || !src || !src->value || src->vintage > origin)
        throw LeakageError(leak_message(name, yv.year, src ? src->vintage : yv.year, origin));
    }
  }
}

BacktestReport run_backtest(const BacktestPlan& plan, const Dataset& ds,
                            const RunOptions& options) {
  plan.require_valid();
  const auto& target = ds.target(plan.cohort);
  for (const auto& r : plan.regimes) find_regime(ds, r);
  for (Year origin : plan.origins) {
    int eligible = 0;
    for (const auto& p : target.points())
      if (p.value && p.year <= origin && p.vintage <= origin) ++eligible;
    if (eligible < plan.min_train_years)
      throw Error("origin " + std::to_string(origin) + " has fewer than min_train_years points");
  }

  const std::size_t n_adapters = plan.adapters.size();
  std::vector<std::vector<ForecastRecord>> records(n_adapters);
  std::vector<std::vector<CellFailure>> failures(n_adapters);
  std::vector<std::exception_ptr> fatal(n_adapters);
  std::atomic<bool> abort{false};

  auto worker = [&](std::size_t a) {
    const auto& desc = plan.adapters[a];
    try {
      auto adapter = make_forecaster(desc, options.adapter_env);
      const bool conditioned = adapter->supports_covariates();
      for (const auto& regime : plan.regimes) {
        for (Year origin : plan.origins) {
          if (abort) return;
          std::vector<std::string> flags;
          ForecastRequest req;
          try {
            req = assemble(ds, plan, origin, regime, conditioned, &flags);
          } catch (const LeakageError&) {
            throw;
          } catch (const Error& e) {
            failures[a].push_back({desc.name, regime, origin, "error", e.what(), {}});
            continue;
          }
          req.request_id = desc.name + "/" + req.request_id;
          verify_request(ds, plan, origin, regime, req);
          if (!conditioned) flags.push_back("unconditioned");

          QuantileForecast fc;
          try {
            fc = forecast(*adapter, req);
          } catch (const std::exception& e) {
            std::string raw;
            const auto kind = failure_kind(std::current_exception(), raw);
            failures[a].push_back({desc.name, regime, origin, kind, e.what(), raw});
            continue;
          }
          for (std::size_t s = 0; s < fc.steps.size(); ++s) {
            ForecastRecord rec;
            rec.model = desc.name;
            rec.regime = regime;
            rec.origin = origin;
            rec.step = static_cast<int>(s) + 1;
            rec.target_year = origin + rec.step;
            rec.point = fc.steps[s].point;
            rec.quantiles = fc.steps[s].quantiles;
            rec.actual = target.value_at(rec.target_year);
            rec.flags = flags;
            rec.flags.insert(rec.flags.end(), fc.flags.begin(), fc.flags.end());
            records[a].push_back(std::move(rec));
          }
        }
      }
    } catch (...) {
      fatal[a] = std::current_exception();
      abort = true;
    }
  };

  std::vector<std::thread> threads;
  for (std::size_t a = 0; a < n_adapters; ++a) threads.emplace_back(worker, a);
  for (auto& t : threads) t.join();
  for (const auto& e : fatal)
    if (e) std::rethrow_exception(e);

  BacktestReport report;
  report.cohort = plan.cohort;
  for (auto& r : records) std::move(r.begin(), r.end(), std::back_inserter(report.records));
  for (auto& f : failures) std::move(f.begin(), f.end(), std::back_inserter(report.failures));
  std::sort(report.records.begin(), report.records.end(),
            [](const ForecastRecord& x, const ForecastRecord& y) {
              return std::tie(x.model, x.regime, x.origin, x.step) <
                     std::tie(y.model, y.regime, y.origin, y.step);
            });
  std::sort(report.failures.begin(), report.failures.end(),
            [](const CellFailure& x, const CellFailure& y) {
              return std::tie(x.model, x.regime, x.origin) <
                     std::tie(y.model, y.regime, y.origin);
            });
  if (report.records.empty()) throw Error("empty report");
  return report;
}

}  // namespace enrolcast
