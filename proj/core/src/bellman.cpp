#include "subma/bellman.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "subma/errors.hpp"
#include "subma/random.hpp"

namespace subma {

namespace {

void require_symmetric(const Eigen::MatrixXd& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw ValidationError(std::string(who) + ": matrix must be square and nonempty");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError(std::string(who) + ": matrix must be symmetric");
}

}  // namespace

void BellmanControl::validate(double tol) const {
  require_symmetric(M, "BellmanControl");
  if (!(a > 0.0)) throw ValidationError("BellmanControl: a must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  const double lam_min = eig.eigenvalues().minCoeff();
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (lam_min < -1e-10 * scale)
    throw ValidationError("BellmanControl: M has negative eigenvalue " +
                          std::to_string(lam_min));
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = eig.eigenvalues()[i];
    if (lam <= 0.0) throw ValidationError("BellmanControl: M is singular, det link fails");
    log_det += std::log(lam);
  }
  // det M = a^{-m}  <=>  log det M + m log a = 0.
  const double link = log_det + m() * std::log(a);
  if (std::abs(link) > tol * std::max(1.0, std::abs(log_det)))
    throw ValidationError("BellmanControl: det M = a^-m violated by " + std::to_string(link) +
                          " in log");
}

bool BellmanControl::is_feasible(double gamma, double tol) const {
  try {
    validate(tol);
  } catch (const ValidationError&) {
    return false;
  }
  if (!(gamma > 0.0)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff() <= 1.0 / gamma + tol * std::max(1.0, 1.0 / gamma);
}

LogDetResult logdet_exact(const Eigen::MatrixXd& A, double gamma) {
  require_symmetric(A, "logdet_exact");
  if (!(gamma > 0.0)) throw ValidationError("logdet_exact: gamma must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double lam_min = eig.eigenvalues().minCoeff();
  const double slack = 1e-10 * std::max(1.0, A.norm());
  if (lam_min < gamma - slack)
    throw SpectralFloorError(lam_min, gamma,
                             "logdet_exact: smallest eigenvalue " + std::to_string(lam_min) +
                                 " below floor " + std::to_string(gamma));

  const int m = static_cast<int>(A.rows());
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  LogDetResult out;
  if (llt.info() == Eigen::Success) {
    out.value = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    out.minimizer.M = llt.solve(Eigen::MatrixXd::Identity(m, m));
  } else {
    // Borderline floor cases can defeat LLT; the eigendecomposition is exact
    // enough there.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(A);
    out.value = full.eigenvalues().array().log().sum();
    out.minimizer.M = full.eigenvectors() *
                      full.eigenvalues().cwiseInverse().asDiagonal() *
                      full.eigenvectors().transpose();
  }
  out.minimizer.M = 0.5 * (out.minimizer.M + out.minimizer.M.transpose()).eval();
  out.minimizer.a = std::exp(out.value / m);
  return out;
}

double bellman_value(const Eigen::MatrixXd& A, const BellmanControl& c) {
  require_symmetric(A, "bellman_value");
  c.validate();
  if (A.rows() != c.M.rows())
    throw ValidationError("bellman_value: dimension mismatch between A and control");
  const int m = c.m();
  return m * std::log(c.a) - m + (A * c.M).trace();
}

namespace {

BellmanControl isotropic_control(int m, double gamma_prime) {
  BellmanControl c;
  c.M = Eigen::MatrixXd::Identity(m, m) / gamma_prime;
  c.a = gamma_prime;  // det M = gamma'^{-m}
  return c;
}

/// Bit-reversal fraction in [0, 1): 0, 1/2, 1/4, 3/4, 1/8, 5/8, ...
/// Prefixes of the sequence are uniform grids whenever the length is a power
/// of two, and longer prefixes refine shorter ones.
double van_der_corput(std::uint64_t t) {
  double base = 0.5, r = 0.0;
  while (t) {
    if (t & 1) r += base;
    base *= 0.5;
    t >>= 1;
  }
  return r;
}

Eigen::MatrixXd sampled_rotation(int m, std::uint64_t t, Rng& rng) {
  if (m == 1) return Eigen::MatrixXd::Identity(1, 1);
  if (m == 2) {
    const double theta = M_PI * van_der_corput(t);
    Eigen::MatrixXd R(2, 2);
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return R;
  }
  Eigen::MatrixXd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;  // fix signs so Q is unique given G
  return Q;
}

}  // namespace

std::vector<BellmanControl> control_grid(int m, double gamma, int density,
                                         std::uint64_t seed) {
  if (m < 1) throw ValidationError("control_grid: dimension must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("control_grid: gamma must be positive");
  if (density < 1) throw ValidationError("control_grid: density must be >= 1");

  // One isotropic and one sampled control per density step, interleaved, so
  // a denser grid extends a sparser one element-for-element and a policy
  // found on the coarse grid survives refinement.
  std::vector<BellmanControl> controls;
  controls.reserve(static_cast<std::size_t>(2 * density));
  Rng rng(seed);
  for (int t = 0; t < density; ++t) {
    controls.push_back(isotropic_control(m, gamma * std::pow(2.0, t)));

    const Eigen::MatrixXd R = sampled_rotation(m, static_cast<std::uint64_t>(t), rng);
    Eigen::VectorXd mu(m);
    double log_det = 0.0;
    for (int i = 0; i < m; ++i) {
      mu[i] = (1.0 - rng.uniform()) / gamma;  // in (0, 1/gamma]
      log_det += std::log(mu[i]);
    }
    BellmanControl c;
    c.M = R * mu.asDiagonal() * R.transpose();
    c.M = 0.5 * (c.M + c.M.transpose()).eval();
    c.a = std::exp(-log_det / m);
    controls.push_back(std::move(c));
  }
  return controls;
}

DoublingReport check_doubling_membership(const DoublingPair& d) {
  require_symmetric(d.X, "check_doubling_membership");
  require_symmetric(d.Y, "check_doubling_membership");
  if (d.X.rows() != d.Y.rows())
    throw ValidationError("check_doubling_membership: X and Y sizes differ");
  if (!(d.epsilon > 0.0))
    throw ValidationError("check_doubling_membership: epsilon must be positive");

  const int n = static_cast<int>(d.X.rows());
  const double c = 3.0 / d.epsilon;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = d.X;
  block.bottomRightCorner(n, n) = -d.Y;

  Eigen::MatrixXd left_slack = block + c * Eigen::MatrixXd::Identity(2 * n, 2 * n);
  Eigen::MatrixXd right_bound = c * Eigen::MatrixXd::Identity(2 * n, 2 * n);
  right_bound.topRightCorner(n, n) = -c * Eigen::MatrixXd::Identity(n, n);
  right_bound.bottomLeftCorner(n, n) = -c * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd right_slack = right_bound - block;

  DoublingReport report;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.compute(left_slack, Eigen::EigenvaluesOnly);
  report.left_min_eigen = eig.eigenvalues().minCoeff();
  eig.compute(right_slack, Eigen::EigenvaluesOnly);
  report.right_min_eigen = eig.eigenvalues().minCoeff();

  const double tol_left = 1e-10 * std::max(1.0, left_slack.norm());
  const double tol_right = 1e-10 * std::max(1.0, right_slack.norm());
  report.left_ok = report.left_min_eigen >= -tol_left;
  report.right_ok = report.right_min_eigen >= -tol_right;
  return report;
}

}  // namespace subma
