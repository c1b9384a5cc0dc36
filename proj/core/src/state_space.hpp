#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace enrolcast::detail {

/// ARMA(p, q) in Harvey's state-space form with unit innovation variance:
///   alpha_{t+1} = T alpha_t + R eps_{t+1},  w_t = alpha_t[0].
/// P0 is the stationary state covariance (solution of P = T P T' + R R').
struct ArmaSystem {
  Eigen::MatrixXd T;
  Eigen::VectorXd R;
  Eigen::MatrixXd P0;

  Eigen::Index dim() const { return T.rows(); }
};

ArmaSystem make_arma_system(std::span<const double> phi,
                            std::span<const double> theta);

/// Filter every column of `data` (n x m) through the same system. The gain
/// sequence depends only on the system, so the innovations of all columns
/// share one variance sequence F (n).
struct FilterResult {
  Eigen::MatrixXd innovations;  // n x m
  Eigen::VectorXd F;            // n
  Eigen::MatrixXd state_next;   // r x m, a_{n+1|n}
  Eigen::MatrixXd cov_next;     // r x r, P_{n+1|n}
};

FilterResult kalman_filter(const ArmaSystem& sys, const Eigen::MatrixXd& data);

/// tanh-mapped partial autocorrelations -> coefficients of a stationary
/// polynomial 1 - sum a_j z^j (Durbin-Levinson recursion).
std::vector<double> pacf_to_coefficients(std::span<const double> raw);

/// True iff 1 - sum a_j z^j has every root strictly outside the unit circle.
bool is_stable(std::span<const double> a);

}  // namespace enrolcast::detail
