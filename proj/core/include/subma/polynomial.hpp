#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace subma {

/// Sparse multivariate polynomial: map from exponent vectors to coefficients.
/// Differentiation and ring operations are exact (no numerical differencing),
/// so downstream identities such as Lie-bracket closure hold to the last bit
/// whenever the coefficients are exactly representable.
class Polynomial {
public:
  using Monomial = std::vector<unsigned>;  // one exponent per variable

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double value);
  static Polynomial variable(int nvars, int index);  // x_{index}, 0-based

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }
  const std::map<Monomial, double>& terms() const { return terms_; }

  double eval(std::span<const double> x) const;

  Polynomial derivative(int var) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }

  void add_term(const Monomial& exps, double coeff);

  /// Largest total (unweighted) degree among terms; -1 for the zero polynomial.
  int degree() const;

  /// Largest index of a variable actually appearing, or -1 if constant.
  int max_variable() const;

  /// True when every term has the same weighted degree `target`, where
  /// variable k contributes weights[k] per power. Zero polynomials pass.
  bool is_weighted_homogeneous(std::span<const int> weights, int target) const;

  bool operator==(const Polynomial& other) const;

  std::string to_string() const;  // human-readable, deterministic term order

private:
  int nvars_;
  std::map<Monomial, double> terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

}  // namespace subma
