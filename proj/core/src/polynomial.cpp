#include "subma/polynomial.hpp"

#include <cmath>
#include <sstream>

#include "subma/errors.hpp"

namespace subma {

namespace {
constexpr double kDropTol = 0.0;  // keep exact zeros out, nothing else

double int_pow(double base, unsigned e) {
  double r = 1.0;
  while (e) {
    if (e & 1u) r *= base;
    base *= base;
    e >>= 1u;
  }
  return r;
}
}  // namespace

Polynomial Polynomial::constant(int nvars, double value) {
  Polynomial p(nvars);
  if (value != 0.0) p.terms_[Monomial(nvars, 0u)] = value;
  return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
  if (index < 0 || index >= nvars)
    throw ValidationError("polynomial variable index out of range");
  Polynomial p(nvars);
  Monomial m(nvars, 0u);
  m[index] = 1u;
  p.terms_[m] = 1.0;
  return p;
}

void Polynomial::add_term(const Monomial& exps, double coeff) {
  if (static_cast<int>(exps.size()) != nvars_)
    throw ValidationError("monomial arity mismatch");
  auto it = terms_.find(exps);
  if (it == terms_.end()) {
    if (coeff != kDropTol) terms_[exps] = coeff;
  } else {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::eval(std::span<const double> x) const {
  double acc = 0.0;
  for (const auto& [exps, c] : terms_) {
    double t = c;
    for (int k = 0; k < nvars_; ++k)
      if (exps[k]) t *= int_pow(x[k], exps[k]);
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(nvars_);
  for (const auto& [exps, c] : terms_) {
    if (exps[var] == 0u) continue;
    Monomial m = exps;
    const double coeff = c * static_cast<double>(m[var]);
    m[var] -= 1u;
    out.add_term(m, coeff);
  }
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  for (const auto& [exps, c] : other.terms_) out.add_term(exps, c);
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  Polynomial out = *this;
  for (const auto& [exps, c] : other.terms_) out.add_term(exps, -c);
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial out(nvars_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : other.terms_) {
      Monomial m(nvars_);
      for (int k = 0; k < nvars_; ++k) m[k] = ea[k] + eb[k];
      out.add_term(m, ca * cb);
    }
  }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(nvars_);
  if (s == 0.0) return out;
  for (const auto& [exps, c] : terms_) out.terms_[exps] = c * s;
  return out;
}

int Polynomial::degree() const {
  int deg = -1;
  for (const auto& [exps, c] : terms_) {
    int d = 0;
    for (unsigned e : exps) d += static_cast<int>(e);
    if (d > deg) deg = d;
  }
  return deg;
}

int Polynomial::max_variable() const {
  int mv = -1;
  for (const auto& [exps, c] : terms_)
    for (int k = nvars_ - 1; k > mv; --k)
      if (exps[k]) mv = k;
  return mv;
}

bool Polynomial::is_weighted_homogeneous(std::span<const int> weights, int target) const {
  for (const auto& [exps, c] : terms_) {
    int w = 0;
    for (int k = 0; k < nvars_; ++k) w += weights[k] * static_cast<int>(exps[k]);
    if (w != target) return false;
  }
  return true;
}

bool Polynomial::operator==(const Polynomial& other) const {
  return nvars_ == other.nvars_ && terms_ == other.terms_;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [exps, c] : terms_) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    os << std::abs(c);
    for (int k = 0; k < nvars_; ++k) {
      if (!exps[k]) continue;
      os << "*x" << (k + 1);
      if (exps[k] > 1u) os << "^" << exps[k];
    }
    first = false;
  }
  return os.str();
}

}  // namespace subma
