#include "enrolcast/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "enrolcast/baselines.hpp"
#include "enrolcast/error.hpp"
#include "enrolcast/text_util.hpp"
#include "subprocess.hpp"

namespace enrolcast {

Year ForecastRequest::last_target_year() const {
  if (target_history.empty()) throw Error("request has an empty target history");
  return target_history.back().year;
}

void ForecastRequest::require_valid() const {
  if (request_id.empty()) throw Error("request_id must not be empty");
  if (horizon < 1) throw Error("horizon must be >= 1");
  if (target_history.empty()) throw Error("request has an empty target history");
  for (std::size_t i = 0; i < target_history.size(); ++i) {
    if (!std::isfinite(target_history[i].value))
      throw Error("non-finite target value in request");
    if (i > 0 && target_history[i].year <= target_history[i - 1].year)
      throw Error("target history years must be strictly increasing");
  }
  for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
    const double l = quantile_levels[i];
    if (!(l > 0.0 && l < 1.0)) throw Error("quantile levels must lie in (0, 1)");
    if (i > 0 && !(l > quantile_levels[i - 1]))
      throw Error("quantile levels must be strictly increasing");
  }
  const Year last = last_target_year();
  for (const auto& [name, pts] : covariate_history) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].year > last)
        throw Error("covariate '" + name + "' extends past the last target year");
      if (!std::isfinite(pts[i].value))
        throw Error("non-finite value in covariate '" + name + "'");
      if (i > 0 && pts[i].year <= pts[i - 1].year)
        throw Error("covariate '" + name + "' years must be strictly increasing");
    }
  }
}

void AdapterDescriptor::require_valid() const {
  if (name.empty()) throw Error("adapter name must not be empty");
  if (timeout_seconds <= 0) throw Error("adapter '" + name + "': timeout must be > 0");
  if (transport == Transport::child_process && (!command || command->empty()))
    throw Error("adapter '" + name + "': child-process adapters need a command");
}

double effective_timeout_seconds(const AdapterDescriptor& d) {
  if (const char* env = std::getenv("ENROLCAST_ADAPTER_TIMEOUT")) {
    try {
      const double v = parse_double(env);
      if (v > 0.0) return v;
    } catch (const Error&) {
    }
  }
  return d.timeout_seconds;
}

std::map<double, double> repair_quantiles(const std::map<double, double>& q,
                                          double tolerance) {
  if (q.size() < 2) return q;
  std::vector<double> v;
  for (const auto& [level, value] : q) v.push_back(value);

  double worst = 0.0;
  double running = v.front();
  for (double x : v) {
    worst = std::max(worst, running - x);
    running = std::max(running, x);
  }
  if (worst == 0.0) return q;

  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double scale = *hi - *lo;
  if (!(scale > 0.0)) scale = std::max(std::abs(v[v.size() / 2]), 1.0);
  if (worst > tolerance * scale)
    throw InvalidQuantiles("invalid quantiles: crossing of " + format_double(worst) +
                           " exceeds repair tolerance");

  // Pool adjacent violators with equal weights.
  std::vector<double> sums;
  std::vector<int> counts;
  for (double x : v) {
    sums.push_back(x);
    counts.push_back(1);
    while (sums.size() > 1) {
      const std::size_t b = sums.size() - 1;
      if (sums[b - 1] / counts[b - 1] <= sums[b] / counts[b]) break;
      sums[b - 1] += sums[b];
      counts[b - 1] += counts[b];
      sums.pop_back();
      counts.pop_back();
    }
  }
  std::map<double, double> out;
  auto it = q.begin();
  for (std::size_t b = 0; b < sums.size(); ++b)
    for (int i = 0; i < counts[b]; ++i, ++it) out[it->first] = sums[b] / counts[b];
  return out;
}

void conform_forecast(QuantileForecast& fc, const ForecastRequest& req,
                      double repair_tolerance) {
  if (static_cast<int>(fc.steps.size()) != req.horizon)
    throw ProtocolError("protocol error: expected " + std::to_string(req.horizon) +
                            " steps, got " + std::to_string(fc.steps.size()),
                        {});
  for (auto& step : fc.steps) {
    if (!std::isfinite(step.point))
      throw ProtocolError("protocol error: non-finite point forecast", {});
    std::map<double, double> matched;
    for (double level : req.quantile_levels) {
      auto it = step.quantiles.lower_bound(level - 1e-9);
      if (it == step.quantiles.end() || std::abs(it->first - level) > 1e-9)
        throw ProtocolError("protocol error: missing quantile level " + format_double(level),
                            {});
      if (!std::isfinite(it->second))
        throw ProtocolError("protocol error: non-finite quantile", {});
      matched[level] = it->second;
    }
    step.quantiles = repair_quantiles(matched, repair_tolerance);
  }
}

QuantileForecast forecast(Forecaster& adapter, const ForecastRequest& req,
                          double repair_tolerance) {
  req.require_valid();
  auto fc = adapter.predict(req);
  conform_forecast(fc, req, repair_tolerance);
  return fc;
}

PersistenceForecaster::PersistenceForecaster(std::string name) : name_(std::move(name)) {}

QuantileForecast PersistenceForecaster::predict(const ForecastRequest& req) {
  std::vector<double> values;
  for (const auto& p : req.target_history) values.push_back(p.value);
  return persistence_forecast(values, req.horizon, req.quantile_levels);
}

ArimaForecaster::ArimaForecaster(std::string name, ArimaAdapterOptions options)
    : name_(std::move(name)), options_(std::move(options)) {}

QuantileForecast ArimaForecaster::predict(const ForecastRequest& req) {
  const auto& hist = req.target_history;
  if (hist.empty()) throw Error("request has an empty target history");
  // Trailing run of consecutive years.
  std::size_t start = hist.size() - 1;
  while (start > 0 && hist[start - 1].year + 1 == hist[start].year) --start;

  std::vector<std::map<Year, double>> covs;
  if (options_.use_covariates) {
    for (const auto& [name, pts] : req.covariate_history) {
      std::map<Year, double> m;
      for (const auto& p : pts) m[p.year] = p.value;
      covs.push_back(std::move(m));
    }
    auto complete = [&](Year y) {
      return std::all_of(covs.begin(), covs.end(),
                         [y](const auto& m) { return m.count(y) > 0; });
    };
    std::size_t s = hist.size();
    while (s > start && complete(hist[s - 1].year)) --s;
    start = s;
    if (start == hist.size()) throw FitError("no year with every covariate observed");
  }

  std::vector<double> y;
  for (std::size_t i = start; i < hist.size(); ++i) y.push_back(hist[i].value);
  Eigen::MatrixXd exog(static_cast<Eigen::Index>(y.size()),
                       static_cast<Eigen::Index>(covs.size()));
  for (std::size_t j = 0; j < covs.size(); ++j)
    for (std::size_t i = start; i < hist.size(); ++i)
      exog(static_cast<Eigen::Index>(i - start), static_cast<Eigen::Index>(j)) =
          covs[j].at(hist[i].year);

  const auto sel = arima_select(y, exog, options_.grid, options_.fit);
  auto fc = arima_forecast(sel.fit, y, exog, req.horizon, req.quantile_levels).quantiles;
  const auto& o = sel.fit.order;
  fc.flags.push_back("order=(" + std::to_string(o.p) + "," + std::to_string(o.d) + "," +
                     std::to_string(o.q) + ")");
  return fc;
}

ChildProcessSession::ChildProcessSession(AdapterDescriptor descriptor,
                                         std::map<std::string, std::string> env)
    : descriptor_(std::move(descriptor)), env_(std::move(env)) {
  descriptor_.require_valid();
  if (descriptor_.transport != Transport::child_process)
    throw Error("adapter '" + descriptor_.name + "' is not a child-process adapter");
}

ChildProcessSession::~ChildProcessSession() = default;

void ChildProcessSession::reset() {
  proc_.reset();
  handshake_.reset();
}

void ChildProcessSession::start() {
  reset();
  proc_ = std::make_unique<detail::ChildProcess>(*descriptor_.command, env_);
  const auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(effective_timeout_seconds(descriptor_)));
  const auto line = proc_->read_line(deadline);
  if (!line) {
    reset();
    throw AdapterTimeout("adapter timeout: '" + descriptor_.name + "' sent no handshake");
  }
  try {
    handshake_ = decode_handshake(*line);
  } catch (...) {
    reset();
    throw;
  }
}

const Handshake& ChildProcessSession::handshake() {
  if (!proc_ || !handshake_ || proc_->eof()) start();
  return *handshake_;
}

std::string ChildProcessSession::exchange(const std::string& line) {
  handshake();
  if (!proc_->write_line(line)) {
    reset();
    throw AdapterTimeout("adapter timeout: '" + descriptor_.name + "' exited");
  }
  const auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(effective_timeout_seconds(descriptor_)));
  auto reply = proc_->read_line(deadline);
  if (!reply) {
    const bool died = proc_->eof();
    reset();
    throw AdapterTimeout("adapter timeout: '" + descriptor_.name + "' " +
                         (died ? "exited before replying" : "did not reply in time"));
  }
  return *reply;
}

ChildProcessForecaster::ChildProcessForecaster(AdapterDescriptor descriptor,
                                               std::map<std::string, std::string> env)
    : name_(descriptor.name), session_(std::move(descriptor), std::move(env)) {}

bool ChildProcessForecaster::supports_covariates() const {
  return session_.descriptor().supports_covariates;
}

QuantileForecast ChildProcessForecaster::predict(const ForecastRequest& req) {
  const std::string reply = session_.exchange(encode_request(req));
  try {
    auto fc = decode_reply(reply, req.request_id);
    try {
      conform_forecast(fc, req);
    } catch (const ProtocolError& e) {
      throw ProtocolError(e.what(), reply);
    }
    return fc;
  } catch (const ProtocolError&) {
    // The stream may be out of step; start afresh next time.
    session_.reset();
    throw;
  }
}

ResidualCovariateWrapper::ResidualCovariateWrapper(std::shared_ptr<Forecaster> base,
                                                   std::string name)
    : base_(std::move(base)), name_(std::move(name)) {
  if (!base_) throw Error("residual wrapper needs a base adapter");
  if (name_.empty()) name_ = base_->name() + "+residual";
}

QuantileForecast ResidualCovariateWrapper::predict(const ForecastRequest& req) {
  ForecastRequest base_req = req;
  if (!base_->supports_covariates()) base_req.covariate_history.clear();
  auto out = forecast(*base_, base_req);

  auto inactive = [&out]() {
    out.flags.push_back("wrapper inactive");
    return out;
  };
  const std::size_t k = req.covariate_history.size();
  if (k == 0) return inactive();

  std::vector<std::map<Year, double>> covs;
  bool any_nonzero = false;
  std::vector<double> last_values;
  for (const auto& [name, pts] : req.covariate_history) {
    std::map<Year, double> m;
    for (const auto& p : pts) {
      m[p.year] = p.value;
      any_nonzero = any_nonzero || p.value != 0.0;
    }
    if (m.empty()) return inactive();
    last_values.push_back(m.rbegin()->second);
    covs.push_back(std::move(m));
  }
  if (!any_nonzero) return inactive();

  const auto& hist = req.target_history;
  std::vector<double> resid;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < hist.size(); ++i) {
    const Year prev = hist[i - 1].year;
    const Year year = hist[i].year;
    if (year != prev + 1) continue;
    std::vector<double> row;
    for (const auto& m : covs) {
      auto it = m.find(year);
      if (it == m.end()) break;
      row.push_back(it->second);
    }
    if (row.size() != k) continue;

    ForecastRequest sub;
    sub.request_id = req.request_id + "#replay-" + std::to_string(prev);
    sub.series_id = req.series_id;
    sub.target_history.assign(hist.begin(), hist.begin() + static_cast<long>(i));
    sub.horizon = 1;
    if (base_->supports_covariates())
      for (const auto& [name, pts] : req.covariate_history)
        for (const auto& p : pts)
          if (p.year <= prev) sub.covariate_history[name].push_back(p);
    try {
      const auto fc = forecast(*base_, sub);
      resid.push_back(hist[i].value - fc.steps.front().point);
      rows.push_back(std::move(row));
    } catch (const Error&) {
      continue;
    }
  }
  if (resid.size() < k + 2) return inactive();

  const Eigen::Index n = static_cast<Eigen::Index>(resid.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(k) + 1);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) design(i, static_cast<Eigen::Index>(j) + 1) = rows[i][j];
    target(i) = resid[i];
  }
  const Eigen::VectorXd b = design.completeOrthogonalDecomposition().solve(target);
  double adjustment = b(0);
  for (std::size_t j = 0; j < k; ++j) adjustment += b(static_cast<Eigen::Index>(j) + 1) * last_values[j];
  if (!std::isfinite(adjustment)) return inactive();

  for (auto& step : out.steps) {
    step.point += adjustment;
    for (auto& [level, value] : step.quantiles) value += adjustment;
  }
  out.flags.push_back("residual covariate adjustment");
  return out;
}

std::shared_ptr<Forecaster> residual_covariate_wrap(std::shared_ptr<Forecaster> base) {
  return std::make_shared<ResidualCovariateWrapper>(std::move(base));
}

std::shared_ptr<Forecaster> make_forecaster(const AdapterDescriptor& d,
                                            const std::map<std::string, std::string>& env) {
  d.require_valid();
  std::shared_ptr<Forecaster> base;
  if (d.transport == Transport::child_process) {
    base = std::make_shared<ChildProcessForecaster>(d, env);
  } else {
    const std::string model = d.model.empty() ? d.name : d.model;
    if (model == "persistence") {
      base = std::make_shared<PersistenceForecaster>(d.name);
    } else if (model == "arima") {
      ArimaAdapterOptions opts;
      opts.use_covariates = d.supports_covariates;
      base = std::make_shared<ArimaForecaster>(d.name, opts);
    } else {
      throw Error("unknown in-process model '" + model + "'");
    }
  }
  if (d.residual_covariates)
    return std::make_shared<ResidualCovariateWrapper>(std::move(base), d.name);
  return base;
}

}  // namespace enrolcast
