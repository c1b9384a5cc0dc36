#include "state_space.hpp"

#include <algorithm>
#include <cmath>

#include "enrolcast/error.hpp"

namespace enrolcast::detail {

ArmaSystem make_arma_system(std::span<const double> phi,
                            std::span<const double> theta) {
  const Eigen::Index p = static_cast<Eigen::Index>(phi.size());
  const Eigen::Index q = static_cast<Eigen::Index>(theta.size());
  const Eigen::Index r = std::max<Eigen::Index>(p, q + 1);

  ArmaSystem sys;
  sys.T = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < p; ++i) sys.T(i, 0) = phi[i];
  for (Eigen::Index i = 0; i + 1 < r; ++i) sys.T(i, i + 1) = 1.0;
  sys.R = Eigen::VectorXd::Zero(r);
  sys.R(0) = 1.0;
  for (Eigen::Index i = 0; i < q; ++i) sys.R(i + 1) = theta[i];

  // vec(P) = (I - T (x) T)^{-1} vec(R R')
  const Eigen::Index r2 = r * r;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(r2, r2);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index k = 0; k < r; ++k)
        for (Eigen::Index l = 0; l < r; ++l)
          A(i * r + k, j * r + l) -= sys.T(i, j) * sys.T(k, l);
  const Eigen::MatrixXd Q = sys.R * sys.R.transpose();
  Eigen::VectorXd q_vec(r2);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < r; ++k) q_vec(i * r + k) = Q(i, k);
  const auto lu = A.fullPivLu();
  if (!lu.isInvertible()) throw FitError("non-stationary AR part");
  const Eigen::VectorXd p_vec = lu.solve(q_vec);
  sys.P0.resize(r, r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < r; ++k) sys.P0(i, k) = p_vec(i * r + k);
  sys.P0 = 0.5 * (sys.P0 + sys.P0.transpose()).eval();
  return sys;
}

FilterResult kalman_filter(const ArmaSystem& sys, const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index m = data.cols();
  const Eigen::Index r = sys.dim();
  const Eigen::MatrixXd RR = sys.R * sys.R.transpose();

  FilterResult out;
  out.innovations.resize(n, m);
  out.F.resize(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r, m);
  Eigen::MatrixXd P = sys.P0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double F = P(0, 0);
    if (!(F > 0.0) || !std::isfinite(F)) throw FitError("likelihood overflow");
    const Eigen::RowVectorXd v = data.row(t) - a.row(0);
    const Eigen::VectorXd K = P.col(0) / F;
    out.innovations.row(t) = v;
    out.F(t) = F;
    const Eigen::MatrixXd a_upd = a + K * v;
    const Eigen::MatrixXd P_upd = P - K * K.transpose() * F;
    a = sys.T * a_upd;
    P = sys.T * P_upd * sys.T.transpose() + RR;
    P = 0.5 * (P + P.transpose()).eval();
  }
  out.state_next = std::move(a);
  out.cov_next = std::move(P);
  return out;
}

std::vector<double> pacf_to_coefficients(std::span<const double> raw) {
  const std::size_t n = raw.size();
  std::vector<double> a(n), prev(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pk = std::tanh(raw[k]);
    prev = a;
    a[k] = pk;
    for (std::size_t j = 0; j < k; ++j) a[j] = prev[j] - pk * prev[k - 1 - j];
  }
  return a;
}

bool is_stable(std::span<const double> coeffs) {
  std::vector<double> a(coeffs.begin(), coeffs.end());
  for (std::size_t k = a.size(); k >= 1; --k) {
    const double pk = a[k - 1];
    if (!(std::abs(pk) < 1.0)) return false;
    std::vector<double> next(k - 1);
    const double denom = 1.0 - pk * pk;
    for (std::size_t j = 0; j + 1 < k; ++j)
      next[j] = (a[j] + pk * a[k - 2 - j]) / denom;
    a = std::move(next);
  }
  return true;
}

}  // namespace enrolcast::detail
