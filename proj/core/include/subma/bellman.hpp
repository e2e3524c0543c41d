#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace subma {

/// One admissible control of the min-representation
///   log det A = min { m log a - m + tr(A M) : a > 0, 0 <= M <= (1/gamma) I,
///                     det M = a^{-m} },
/// valid for symmetric A >= gamma I.
struct BellmanControl {
  Eigen::MatrixXd M;  // symmetric PSD, m x m
  double a = 1.0;

  int m() const { return static_cast<int>(M.rows()); }

  /// det M = a^{-m} within `tol` relative; M symmetric PSD; a > 0.
  /// Throws ValidationError on violation.
  void validate(double tol = 1e-10) const;

  /// validate() plus the ambient cap M <= (1/gamma) I.
  bool is_feasible(double gamma, double tol = 1e-10) const;
};

struct LogDetResult {
  double value = 0.0;
  BellmanControl minimizer;  // M = A^{-1}, a = (det A)^{1/m}
};

/// log det A for A >= gamma I, with the minimizing control.
/// Throws SpectralFloorError carrying the offending smallest eigenvalue when
/// the floor check fails (slack 1e-10 ||A||).
LogDetResult logdet_exact(const Eigen::MatrixXd& A, double gamma);

/// m log a - m + tr(A M). Throws ValidationError when the control violates
/// its invariants.
double bellman_value(const Eigen::MatrixXd& A, const BellmanControl& c);

/// Deterministic family of feasible controls for policy iteration:
/// an isotropic ladder M = (1/gamma') I for gamma' >= gamma, plus rotated
/// anisotropic entries M = R diag(mu) R^T with mu in (0, 1/gamma]^m.
/// For m = 2 the rotations walk a refining uniform angle grid (bit-reversal
/// order), for m >= 3 they come from QR of seeded Gaussian matrices; in both
/// cases a longer list extends a shorter one for the same seed, so the best
/// achievable Bellman value is nonincreasing in `density`.
std::vector<BellmanControl> control_grid(int m, double gamma, int density,
                                         std::uint64_t seed = 20240915);

/// Matrices entering the structure condition
///   -(3/eps) I_2n <= blockdiag(X, -Y) <= (3/eps) [[I, -I], [-I, I]].
struct DoublingPair {
  Eigen::MatrixXd X, Y;  // symmetric n x n
  double epsilon = 1.0;
};

struct DoublingReport {
  bool left_ok = false;              // blockdiag(X,-Y) + (3/eps) I >= 0
  bool right_ok = false;             // (3/eps) [[I,-I],[-I,I]] - blockdiag(X,-Y) >= 0
  double left_min_eigen = 0.0;       // smallest eigenvalue of the left slack
  double right_min_eigen = 0.0;      // smallest eigenvalue of the right slack
  bool member() const { return left_ok && right_ok; }
};

/// Eigenvalue check of both matrix inequalities; boundary cases count as
/// members (slack tolerance 1e-10 per unit of matrix norm).
DoublingReport check_doubling_membership(const DoublingPair& d);

}  // namespace subma
