#include "enrolcast/arima.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>

#include "enrolcast/baselines.hpp"
#include "enrolcast/error.hpp"
#include "nelder_mead.hpp"
#include "state_space.hpp"

namespace enrolcast {

namespace {

using detail::ArmaSystem;
using detail::kalman_filter;
using detail::make_arma_system;
using detail::pacf_to_coefficients;

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kSigmaFloor = 1e-300;
constexpr double kKpssCritical5 = 0.463;

void require_finite(std::span<const double> y) {
  for (double v : y)
    if (!std::isfinite(v)) throw FitError("non-finite value in ARIMA input");
}

void check_exog_shape(std::span<const double> y, const Eigen::MatrixXd& exog) {
  if (exog.cols() > 0 && exog.rows() != static_cast<Eigen::Index>(y.size()))
    throw FitError("exogenous rows do not match the series length");
  if (exog.cols() > 0 && !exog.allFinite())
    throw FitError("non-finite exogenous value");
}

struct Prepared {
  Eigen::VectorXd w;   // differenced series
  Eigen::MatrixXd xd;  // exogenous rows aligned with w
};

Prepared prepare(std::span<const double> y, const Eigen::MatrixXd& exog, int d) {
  const auto diffed = difference(y, d);
  Prepared out;
  out.w = Eigen::Map<const Eigen::VectorXd>(diffed.data(),
                                            static_cast<Eigen::Index>(diffed.size()));
  const Eigen::Index n = out.w.size();
  out.xd = exog.cols() > 0 ? Eigen::MatrixXd(exog.bottomRows(n))
                           : Eigen::MatrixXd(n, 0);
  return out;
}

struct Concentrated {
  double loglik = 0.0;
  double sigma2 = 0.0;
  double c = 0.0;
  std::vector<double> beta;
};

// Profile (c, beta, sigma2) out of the likelihood by GLS on the filtered
// columns. The gain sequence is shared, so one filter pass handles all.
Concentrated concentrated_loglik(const std::vector<double>& phi,
                                 const std::vector<double>& theta, const Prepared& data,
                                 bool intercept) {
  const Eigen::Index n = data.w.size();
  const Eigen::Index k = data.xd.cols();
  const Eigen::Index m = (intercept ? 1 : 0) + k;
  Eigen::MatrixXd cols(n, 1 + m);
  cols.col(0) = data.w;
  if (intercept) cols.col(1).setOnes();
  if (k > 0) cols.rightCols(k) = data.xd;

  const ArmaSystem sys = make_arma_system(phi, theta);
  const auto filt = kalman_filter(sys, cols);
  const Eigen::ArrayXd inv_f = filt.F.array().inverse();

  Eigen::VectorXd resid = filt.innovations.col(0);
  Eigen::VectorXd coef;
  if (m > 0) {
    const Eigen::MatrixXd vz = filt.innovations.rightCols(m);
    const Eigen::MatrixXd wz = vz.array().colwise() * inv_f;
    const Eigen::MatrixXd gram = vz.transpose() * wz;
    const Eigen::VectorXd rhs = wz.transpose() * filt.innovations.col(0);
    coef = gram.ldlt().solve(rhs);
    resid -= vz * coef;
  }
  Concentrated out;
  double sigma2 = (resid.array().square() * inv_f).sum() / static_cast<double>(n);
  sigma2 = std::max(sigma2, kSigmaFloor);
  const double log_det = filt.F.array().log().sum();
  out.loglik = -0.5 * static_cast<double>(n) * (kLog2Pi + std::log(sigma2) + 1.0) -
               0.5 * log_det;
  if (!std::isfinite(out.loglik)) throw FitError("likelihood overflow");
  out.sigma2 = sigma2;
  Eigen::Index j = 0;
  if (intercept) out.c = coef(j++);
  for (Eigen::Index i = 0; i < k; ++i) out.beta.push_back(coef(j++));
  return out;
}

void split_raw(const std::vector<double>& raw, int p, int q, std::vector<double>& phi,
               std::vector<double>& theta) {
  phi = pacf_to_coefficients(std::span<const double>(raw.data(), p));
  auto ma = pacf_to_coefficients(std::span<const double>(raw.data() + p, q));
  theta.resize(ma.size());
  for (std::size_t i = 0; i < ma.size(); ++i) theta[i] = -ma[i];
}

Eigen::VectorXd adjusted_series(const ArimaParams& params, const Prepared& data) {
  Eigen::VectorXd w = data.w.array() - params.c;
  if (data.xd.cols() > 0) {
    const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(
        params.beta.data(), static_cast<Eigen::Index>(params.beta.size()));
    w -= data.xd * beta;
  }
  return w;
}

void check_order(ArimaOrder order, const ArimaCaps& caps) {
  if (order.p < 0 || order.d < 0 || order.q < 0)
    throw FitError("ARIMA orders must be non-negative");
  if (order.p > caps.max_p || order.d > caps.max_d || order.q > caps.max_q)
    throw FitError("ARIMA order exceeds configured caps");
}

// Binomial coefficient C(n, k) for small non-negative arguments.
double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

int ArimaFit::parameter_count() const {
  return order.p + order.q + (intercept ? 1 : 0) + static_cast<int>(beta.size()) + 1;
}

bool is_stationary(std::span<const double> phi) { return detail::is_stable(phi); }

bool is_invertible(std::span<const double> theta) {
  std::vector<double> neg(theta.begin(), theta.end());
  for (double& v : neg) v = -v;
  return detail::is_stable(neg);
}

double arima_loglik(const ArimaParams& params, ArimaOrder order,
                    std::span<const double> y, const Eigen::MatrixXd& exog) {
  if (static_cast<int>(params.phi.size()) != order.p ||
      static_cast<int>(params.theta.size()) != order.q)
    throw FitError("parameter vector does not match the order");
  if (static_cast<Eigen::Index>(params.beta.size()) != exog.cols())
    throw FitError("exogenous column count does not match beta");
  if (!(params.sigma2 > 0.0)) throw FitError("sigma2 must be positive");
  if (!is_stationary(params.phi)) throw FitError("non-stationary AR part");
  if (!is_invertible(params.theta)) throw FitError("non-invertible MA part");
  require_finite(y);
  check_exog_shape(y, exog);
  if (static_cast<int>(y.size()) <= order.d) throw FitError("series shorter than d");

  const Prepared data = prepare(y, exog, order.d);
  const Eigen::VectorXd w = adjusted_series(params, data);
  const auto filt = kalman_filter(make_arma_system(params.phi, params.theta), w);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < w.size(); ++t) {
    const double var = params.sigma2 * filt.F(t);
    const double v = filt.innovations(t, 0);
    ll -= 0.5 * (kLog2Pi + std::log(var) + v * v / var);
  }
  if (!std::isfinite(ll)) throw FitError("likelihood overflow");
  return ll;
}

ArimaFit arima_fit(std::span<const double> y, const Eigen::MatrixXd& exog,
                   ArimaOrder order, const ArimaOptions& options) {
  check_order(order, options.caps);
  require_finite(y);
  check_exog_shape(y, exog);
  const int k = static_cast<int>(exog.cols());
  const int n = static_cast<int>(y.size());
  if (n < order.p + order.q + order.d + k + 3)
    throw FitError("insufficient data for ARIMA order");

  const bool intercept = options.include_intercept.value_or(order.d == 0);
  const Prepared data = prepare(y, exog, order.d);

  const Eigen::Index m = (intercept ? 1 : 0) + k;
  if (k > 0) {
    Eigen::MatrixXd design(data.w.size(), m);
    if (intercept) design.col(0).setOnes();
    design.rightCols(k) = data.xd;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || !(s(0) > 0.0) || s(s.size() - 1) / s(0) < 1e-10)
      throw FitError("collinear exogenous");
  }

  const int p = order.p;
  const int q = order.q;
  auto objective = [&](const std::vector<double>& raw) {
    std::vector<double> phi, theta;
    split_raw(raw, p, q, phi, theta);
    try {
      return -concentrated_loglik(phi, theta, data, intercept).loglik;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<double> raw(static_cast<std::size_t>(p + q), 0.0);
  int iterations = 0;
  if (p + q > 0) {
    auto first = detail::nelder_mead(objective, raw, options.initial_step,
                                     options.max_iterations, options.reltol);
    auto second = detail::nelder_mead(objective, first.x, options.initial_step,
                                      options.max_iterations, options.reltol);
    iterations = first.iterations + second.iterations;
    if (!second.converged || !std::isfinite(second.value)) throw FitError("fit failed");
    raw = second.value <= first.value ? second.x : first.x;
  }

  ArimaFit fit;
  fit.order = order;
  fit.intercept = intercept;
  split_raw(raw, p, q, fit.phi, fit.theta);
  const auto conc = concentrated_loglik(fit.phi, fit.theta, data, intercept);
  fit.c = conc.c;
  fit.beta = conc.beta;
  fit.sigma2 = conc.sigma2;
  fit.loglik = conc.loglik;
  fit.n_used = static_cast<int>(data.w.size());
  fit.iterations = iterations;

  const int npar = fit.parameter_count();
  const double denom = static_cast<double>(fit.n_used - npar - 1);
  fit.aicc = -2.0 * fit.loglik + 2.0 * npar +
             (denom > 0.0 ? 2.0 * npar * (npar + 1) / denom
                          : std::numeric_limits<double>::infinity());
  return fit;
}

std::vector<ArimaOrder> default_order_grid() {
  std::vector<ArimaOrder> grid;
  for (int d = 0; d <= 1; ++d)
    for (int p = 0; p <= 2; ++p)
      for (int q = 0; q <= 2; ++q) grid.push_back({p, d, q});
  return grid;
}

double kpss_statistic(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = y[i] - mean;

  const int lags = static_cast<int>(std::trunc(4.0 * std::pow(n / 100.0, 0.25)));
  double s2 = 0.0;
  for (double v : e) s2 += v * v;
  for (int l = 1; l <= lags && static_cast<std::size_t>(l) < n; ++l) {
    double acc = 0.0;
    for (std::size_t t = l; t < n; ++t) acc += e[t] * e[t - l];
    s2 += 2.0 * (1.0 - l / (lags + 1.0)) * acc;
  }
  s2 /= static_cast<double>(n);
  if (!(s2 > 0.0)) return 0.0;

  double partial = 0.0;
  double sum_sq = 0.0;
  for (double v : e) {
    partial += v;
    sum_sq += partial * partial;
  }
  return sum_sq / (static_cast<double>(n) * static_cast<double>(n) * s2);
}

int select_differencing(std::span<const double> y, int max_d) {
  int d = 0;
  std::vector<double> cur(y.begin(), y.end());
  while (d < max_d && cur.size() >= 4 && kpss_statistic(cur) > kKpssCritical5) {
    cur = difference(cur, 1);
    ++d;
  }
  return d;
}

OrderSelection arima_select(std::span<const double> y, const Eigen::MatrixXd& exog,
                            std::span<const ArimaOrder> grid,
                            const ArimaOptions& options) {
  if (grid.empty()) throw FitError("no admissible order");
  int max_d = 0;
  for (const auto& o : grid) max_d = std::max(max_d, o.d);
  const int wanted = select_differencing(y, max_d);
  int chosen_d = grid.front().d;
  for (const auto& o : grid)
    if (std::abs(o.d - wanted) < std::abs(chosen_d - wanted) ||
        (std::abs(o.d - wanted) == std::abs(chosen_d - wanted) && o.d < chosen_d))
      chosen_d = o.d;

  OrderSelection sel;
  std::optional<ArimaFit> best;
  auto better = [](const ArimaFit& a, const ArimaFit& b) {
    const double tol = 1e-9 * std::max(1.0, std::abs(b.aicc));
    if (std::isfinite(a.aicc) && std::isfinite(b.aicc) && std::abs(a.aicc - b.aicc) > tol)
      return a.aicc < b.aicc;
    if (std::isfinite(a.aicc) != std::isfinite(b.aicc)) return std::isfinite(a.aicc);
    if (a.parameter_count() != b.parameter_count())
      return a.parameter_count() < b.parameter_count();
    if (a.order.p != b.order.p) return a.order.p < b.order.p;
    return a.order.q < b.order.q;
  };
  auto try_orders = [&](bool only_chosen) {
    for (const auto& o : grid) {
      if (only_chosen != (o.d == chosen_d)) continue;
      ++sel.candidates_tried;
      try {
        auto fit = arima_fit(y, exog, o, options);
        if (!best || better(fit, *best)) best = std::move(fit);
      } catch (const Error&) {
        ++sel.candidates_failed;
      }
    }
  };
  try_orders(true);
  if (!best) try_orders(false);
  if (!best) throw FitError("no admissible order");
  sel.fit = std::move(*best);
  return sel;
}

ArimaOrder arima_order_select(std::span<const double> y, const Eigen::MatrixXd& exog,
                              std::span<const ArimaOrder> grid,
                              const ArimaOptions& options) {
  return arima_select(y, exog, grid, options).fit.order;
}

ArimaForecast arima_forecast(const ArimaFit& fit, std::span<const double> y,
                             const Eigen::MatrixXd& exog, int horizon,
                             std::span<const double> quantile_levels,
                             std::span<const double> interval_levels) {
  if (horizon < 1) throw Error("horizon must be >= 1");
  require_finite(y);
  check_exog_shape(y, exog);
  if (static_cast<Eigen::Index>(fit.beta.size()) != exog.cols())
    throw FitError("exogenous column count does not match beta");
  const int d = fit.order.d;
  if (static_cast<int>(y.size()) <= d) throw FitError("series shorter than d");

  const ArimaParams params = fit.params();
  const Prepared data = prepare(y, exog, d);
  const Eigen::VectorXd w = adjusted_series(params, data);
  const ArmaSystem sys = make_arma_system(fit.phi, fit.theta);
  const auto filt = kalman_filter(sys, w);

  double shift = fit.c;
  if (exog.cols() > 0) {
    const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(
        fit.beta.data(), static_cast<Eigen::Index>(fit.beta.size()));
    shift += exog.row(exog.rows() - 1).dot(beta);
  }

  const Eigen::Index r = sys.dim();
  std::vector<Eigen::MatrixXd> tpow{Eigen::MatrixXd::Identity(r, r)};
  for (int h = 1; h < horizon; ++h) tpow.push_back(sys.T * tpow.back());

  std::vector<double> wpred(horizon);
  for (int h = 0; h < horizon; ++h)
    wpred[h] = (tpow[h] * filt.state_next)(0, 0) + shift;

  std::vector<Eigen::MatrixXd> cov{filt.cov_next};
  const Eigen::MatrixXd rr = sys.R * sys.R.transpose();
  for (int h = 1; h < horizon; ++h)
    cov.push_back(sys.T * cov.back() * sys.T.transpose() + rr);

  ArimaForecast out;
  if (d == 0) {
    out.point = wpred;
  } else {
    out.point = undifference(wpred, y.subspan(y.size() - d), d);
  }
  for (int h = 1; h <= horizon; ++h) {
    auto weight = [&](int i) {
      return d == 0 ? (i == h ? 1.0 : 0.0) : choose(h - i + d - 1, d - 1);
    };
    double var = 0.0;
    for (int i = 1; i <= h; ++i) {
      const double ci = weight(i);
      if (ci == 0.0) continue;
      var += ci * ci * cov[i - 1](0, 0);
      for (int j = i + 1; j <= h; ++j) {
        const double cj = weight(j);
        if (cj == 0.0) continue;
        var += 2.0 * ci * cj * (tpow[j - i] * cov[i - 1])(0, 0);
      }
    }
    out.variance.push_back(std::max(0.0, var) * fit.sigma2);
  }

  const boost::math::normal_distribution<double> normal;
  for (int h = 0; h < horizon; ++h) {
    const double sd = std::sqrt(out.variance[h]);
    std::vector<PredictionInterval> ivs;
    for (double level : interval_levels) {
      if (!(level >= 0.0 && level < 1.0)) throw Error("interval level must be in [0, 1)");
      const double half = level == 0.0 ? 0.0 : sd * boost::math::quantile(normal, (1.0 + level) / 2.0);
      ivs.push_back({level, out.point[h] - half, out.point[h] + half});
    }
    out.intervals.push_back(std::move(ivs));
    ForecastStep step;
    step.point = out.point[h];
    for (double level : quantile_levels) {
      if (!(level > 0.0 && level < 1.0)) throw Error("quantile level must be in (0, 1)");
      step.quantiles[level] = out.point[h] + sd * boost::math::quantile(normal, level);
    }
    out.quantiles.steps.push_back(std::move(step));
  }
  return out;
}

ResidualReport whiteness_report(std::span<const double> residuals,
                                int fitted_arma_params) {
  ResidualReport rep;
  rep.standardized.assign(residuals.begin(), residuals.end());
  const std::size_t n = residuals.size();
  double mean = 0.0;
  for (double v : residuals) mean += v;
  if (n > 0) mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : residuals) {
    const double e = v - mean;
    m2 += e * e;
    m3 += e * e * e;
    m4 += e * e * e * e;
  }
  if (n < 2 || !(m2 > 0.0) || !std::isfinite(m2)) {
    rep.degenerate = true;
    rep.normal = false;
    return rep;
  }

  rep.lags = std::max<int>(1, std::min<int>(8, static_cast<int>(n / 4)));
  rep.df = std::max(1, rep.lags - fitted_arma_params);
  double q = 0.0;
  for (int k = 1; k <= rep.lags && static_cast<std::size_t>(k) < n; ++k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t) acc += (residuals[t] - mean) * (residuals[t - k] - mean);
    const double rho = acc / m2;
    q += rho * rho / static_cast<double>(n - k);
  }
  q *= static_cast<double>(n) * static_cast<double>(n + 2);
  rep.ljung_box = q;
  const boost::math::chi_squared_distribution<double> chi(rep.df);
  rep.p_value = boost::math::cdf(boost::math::complement(chi, q));

  const double nn = static_cast<double>(n);
  const double var = m2 / nn;
  const double skew = (m3 / nn) / std::pow(var, 1.5);
  const double kurt = (m4 / nn) / (var * var);
  rep.jarque_bera = nn / 6.0 * (skew * skew + (kurt - 3.0) * (kurt - 3.0) / 4.0);
  const boost::math::chi_squared_distribution<double> chi2(2.0);
  rep.normal = boost::math::cdf(boost::math::complement(chi2, *rep.jarque_bera)) > 0.05;
  return rep;
}

ResidualReport residual_diagnostics(const ArimaFit& fit, std::span<const double> y,
                                    const Eigen::MatrixXd& exog) {
  require_finite(y);
  check_exog_shape(y, exog);
  const Prepared data = prepare(y, exog, fit.order.d);
  const Eigen::VectorXd w = adjusted_series(fit.params(), data);
  const auto filt = kalman_filter(make_arma_system(fit.phi, fit.theta), w);
  std::vector<double> z(static_cast<std::size_t>(w.size()));
  for (Eigen::Index t = 0; t < w.size(); ++t)
    z[t] = filt.innovations(t, 0) / std::sqrt(fit.sigma2 * filt.F(t));
  auto rep = whiteness_report(z, fit.order.p + fit.order.q);
  return rep;
}

}  // namespace enrolcast
