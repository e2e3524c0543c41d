#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "subma/expression.hpp"
#include "subma/grid.hpp"

namespace subma {

/// Right-hand side H(x, r, q) of -det(D^2_x u) + H(x, u, D_x u) = 0.
/// Construction samples the standing hypotheses on domain x [-R, R] x ball:
/// positivity of H and monotonicity in r; violations throw ValidationError.
class Hamiltonian {
public:
  enum class Kind { gauss_curvature, power_of_gradient, constant_rhs, custom_expression };

  /// H = k(x) (1 + |q|^2)^{(m+2)/2}, the prescribed-curvature right-hand
  /// side. `k` is an expression over x1..xn.
  static Hamiltonian gauss_curvature(Expression k, int m, const Box& domain,
                                     double R = 10.0);

  /// H = f(x) (1 + |q|^2)^beta.
  static Hamiltonian power_of_gradient(Expression f, double beta, int m,
                                       const Box& domain, double R = 10.0);

  /// H = f(x), independent of (r, q).
  static Hamiltonian constant_rhs(Expression f, int m, const Box& domain,
                                  double R = 10.0);

  /// H given by an expression over x1..xn, r, q1..qm.
  static Hamiltonian custom(Expression h, int m, const Box& domain, double R = 10.0);

  Kind kind() const { return kind_; }
  int m() const { return m_; }
  int n() const { return n_; }
  double declared_r() const { return R_; }
  /// True when sampling detected actual dependence on r (always nondecreasing).
  bool monotone_in_u() const { return monotone_in_u_; }
  const Expression& coefficient() const { return expr_; }
  double beta() const { return beta_; }

  double value(const Eigen::VectorXd& x, double r, const Eigen::VectorXd& q) const;
  double log_value(const Eigen::VectorXd& x, double r, const Eigen::VectorXd& q) const;
  double root(const Eigen::VectorXd& x, double r, const Eigen::VectorXd& q) const;  // H^{1/m}

  static std::string kind_name(Kind k);

private:
  Hamiltonian() = default;
  void check_hypotheses(const Box& domain);
  double coefficient_at(const Eigen::VectorXd& x) const;

  Kind kind_ = Kind::constant_rhs;
  Expression expr_;       // k, f, or the full custom H
  double beta_ = 0.0;     // exponent on (1 + |q|^2)
  int m_ = 0, n_ = 0;
  double R_ = 10.0;
  bool monotone_in_u_ = false;
};

}  // namespace subma
