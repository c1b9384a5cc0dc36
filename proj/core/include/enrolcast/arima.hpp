#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "enrolcast/forecast.hpp"

namespace enrolcast {

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  friend auto operator<=>(const ArimaOrder&, const ArimaOrder&) = default;
};

struct ArimaCaps {
  int max_p = 3;
  int max_d = 2;
  int max_q = 3;
};

/// Model parameters. `phi` and `theta` follow
///   phi(B) (1-B)^d (y_t - c - x_t' beta) = theta(B) eps_t
/// with phi(B) = 1 - sum phi_j B^j and theta(B) = 1 + sum theta_j B^j,
/// the mean shift acting on the differenced scale.
struct ArimaParams {
  double c = 0.0;
  std::vector<double> phi;
  std::vector<double> theta;
  std::vector<double> beta;
  double sigma2 = 1.0;
};

struct ArimaOptions {
  /// Defaults to true when d == 0 and false otherwise.
  std::optional<bool> include_intercept;
  int max_iterations = 500;
  double reltol = 1e-8;
  double initial_step = 0.5;
  ArimaCaps caps;
};

struct ArimaFit {
  ArimaOrder order;
  bool intercept = false;
  double c = 0.0;
  std::vector<double> phi;
  std::vector<double> theta;
  std::vector<double> beta;
  double sigma2 = 0.0;
  double loglik = 0.0;
  double aicc = 0.0;
  int n_used = 0;  // observations on the differenced scale
  int iterations = 0;

  ArimaParams params() const { return {c, phi, theta, beta, sigma2}; }
  int parameter_count() const;
};

struct PredictionInterval {
  double level = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct ArimaForecast {
  std::vector<double> point;
  std::vector<double> variance;
  std::vector<std::vector<PredictionInterval>> intervals;  // per step
  QuantileForecast quantiles;
};

/// True iff 1 - sum phi_j z^j has all roots outside the unit circle.
bool is_stationary(std::span<const double> phi);
/// True iff 1 + sum theta_j z^j has all roots outside the unit circle.
bool is_invertible(std::span<const double> theta);

/// Exact Gaussian log-likelihood of the ARMA part on the differenced,
/// exogenous-adjusted series. `exog` has one row per observation of `y`
/// (or zero columns). Throws FitError on a non-stationary or
/// non-invertible parameter set and on a non-finite likelihood.
double arima_loglik(const ArimaParams& params, ArimaOrder order,
                    std::span<const double> y, const Eigen::MatrixXd& exog = {});

ArimaFit arima_fit(std::span<const double> y, const Eigen::MatrixXd& exog,
                   ArimaOrder order, const ArimaOptions& options = {});

std::vector<ArimaOrder> default_order_grid();

/// KPSS level-stationarity statistic with a Bartlett long-run variance.
double kpss_statistic(std::span<const double> y);
/// Number of differences (0..max_d) needed before KPSS at the 5% level no
/// longer rejects stationarity.
int select_differencing(std::span<const double> y, int max_d = 1);

struct OrderSelection {
  ArimaFit fit;
  int candidates_tried = 0;
  int candidates_failed = 0;
};

/// Differencing order from the KPSS sequence (snapped to the nearest d in
/// the grid), then the minimum-AICc (p, q) among grid entries with that d.
/// Ties go to fewer parameters, then lower p, then lower q.
OrderSelection arima_select(std::span<const double> y, const Eigen::MatrixXd& exog,
                            std::span<const ArimaOrder> grid,
                            const ArimaOptions& options = {});
ArimaOrder arima_order_select(std::span<const double> y, const Eigen::MatrixXd& exog,
                              std::span<const ArimaOrder> grid,
                              const ArimaOptions& options = {});

/// Recursive forecasts from the end of `y`. Future exogenous rows are held
/// at the last row of `exog`. Intervals are Gaussian with the exact
/// h-step forecast error variance.
ArimaForecast arima_forecast(const ArimaFit& fit, std::span<const double> y,
                             const Eigen::MatrixXd& exog, int horizon,
                             std::span<const double> quantile_levels = {},
                             std::span<const double> interval_levels = {});

struct ResidualReport {
  std::vector<double> standardized;
  int lags = 0;
  int df = 0;
  std::optional<double> ljung_box;
  std::optional<double> p_value;
  std::optional<double> jarque_bera;
  bool normal = true;
  bool degenerate = false;
};

/// Portmanteau whiteness test over lags 1..min(8, n/4) with the degrees of
/// freedom reduced by `fitted_arma_params`, plus a Jarque-Bera normality
/// flag at 5%. An all-zero residual vector is reported as degenerate.
ResidualReport whiteness_report(std::span<const double> residuals,
                                int fitted_arma_params = 0);
ResidualReport residual_diagnostics(const ArimaFit& fit, std::span<const double> y,
                                    const Eigen::MatrixXd& exog = {});

}  // namespace enrolcast
