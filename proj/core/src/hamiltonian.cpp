#include "subma/hamiltonian.hpp"

#include <cmath>
#include <vector>

#include "subma/errors.hpp"
#include "subma/random.hpp"

namespace subma {

namespace {

constexpr std::uint64_t kHypothesisSeed = 0x48616d696c746eULL;
constexpr int kHypothesisSamples = 512;

}  // namespace

Hamiltonian Hamiltonian::gauss_curvature(Expression k, int m, const Box& domain, double R) {
  Hamiltonian h;
  h.kind_ = Kind::gauss_curvature;
  h.expr_ = std::move(k);
  h.m_ = m;
  h.n_ = domain.dim();
  h.beta_ = 0.5 * (m + 2);
  h.R_ = R;
  h.check_hypotheses(domain);
  return h;
}

Hamiltonian Hamiltonian::power_of_gradient(Expression f, double beta, int m,
                                           const Box& domain, double R) {
  Hamiltonian h;
  h.kind_ = Kind::power_of_gradient;
  h.expr_ = std::move(f);
  h.m_ = m;
  h.n_ = domain.dim();
  h.beta_ = beta;
  h.R_ = R;
  h.check_hypotheses(domain);
  return h;
}

Hamiltonian Hamiltonian::constant_rhs(Expression f, int m, const Box& domain, double R) {
  Hamiltonian h;
  h.kind_ = Kind::constant_rhs;
  h.expr_ = std::move(f);
  h.m_ = m;
  h.n_ = domain.dim();
  h.R_ = R;
  h.check_hypotheses(domain);
  return h;
}

Hamiltonian Hamiltonian::custom(Expression hexpr, int m, const Box& domain, double R) {
  Hamiltonian h;
  h.kind_ = Kind::custom_expression;
  h.expr_ = std::move(hexpr);
  h.m_ = m;
  h.n_ = domain.dim();
  h.R_ = R;
  h.check_hypotheses(domain);
  return h;
}

double Hamiltonian::coefficient_at(const Eigen::VectorXd& x) const {
  return expr_.eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double Hamiltonian::value(const Eigen::VectorXd& x, double r, const Eigen::VectorXd& q) const {
  return std::exp(log_value(x, r, q));
}

double Hamiltonian::log_value(const Eigen::VectorXd& x, double r,
                              const Eigen::VectorXd& q) const {
  switch (kind_) {
    case Kind::constant_rhs: {
      const double f = coefficient_at(x);
      if (!(f > 0.0))
        throw ValidationError("Hamiltonian nonpositive (" + std::to_string(f) + ") at a point");
      return std::log(f);
    }
    case Kind::gauss_curvature:
    case Kind::power_of_gradient: {
      const double f = coefficient_at(x);
      if (!(f > 0.0))
        throw ValidationError("Hamiltonian coefficient nonpositive (" + std::to_string(f) +
                              ") at a point");
      return std::log(f) + beta_ * std::log1p(q.squaredNorm());
    }
    case Kind::custom_expression: {
      std::vector<double> args(static_cast<std::size_t>(n_ + 1 + m_));
      for (int i = 0; i < n_; ++i) args[static_cast<std::size_t>(i)] = x[i];
      args[static_cast<std::size_t>(n_)] = r;
      for (int i = 0; i < m_; ++i) args[static_cast<std::size_t>(n_ + 1 + i)] = q[i];
      const double v = expr_.eval(args);
      if (!(v > 0.0))
        throw ValidationError("Hamiltonian nonpositive (" + std::to_string(v) + ") at a point");
      return std::log(v);
    }
  }
  throw ValidationError("Hamiltonian: unknown kind");
}

double Hamiltonian::root(const Eigen::VectorXd& x, double r, const Eigen::VectorXd& q) const {
  return std::exp(log_value(x, r, q) / m_);
}

void Hamiltonian::check_hypotheses(const Box& domain) {
  domain.validate();
  if (m_ < 1) throw ValidationError("Hamiltonian: horizontal dimension must be >= 1");
  if (!(R_ > 0.0)) throw ValidationError("Hamiltonian: declared R must be positive");
  if (expr_.empty()) throw ValidationError("Hamiltonian: empty expression");

  const double q_radius = std::max(10.0, R_);
  Rng rng(kHypothesisSeed);
  bool depends_on_r = false;

  // Deterministic probes first: the box center and every corner, with the
  // neutral arguments r = 0, q = 0. Random sampling alone can miss isolated
  // or boundary zeros of the coefficient.
  {
    std::vector<Eigen::VectorXd> probes;
    probes.push_back(0.5 * (domain.lo + domain.hi));
    if (n_ <= 16) {
      for (long mask = 0; mask < (1L << n_); ++mask) {
        Eigen::VectorXd corner(n_);
        for (int i = 0; i < n_; ++i)
          corner[i] = (mask >> i) & 1 ? domain.hi[i] : domain.lo[i];
        probes.push_back(std::move(corner));
      }
    }
    const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(m_);
    for (const Eigen::VectorXd& x : probes) {
      try {
        log_value(x, 0.0, q0);
      } catch (const ValidationError& e) {
        throw ValidationError(std::string("Hamiltonian positivity check failed: ") + e.what());
      }
    }
  }

  for (int s = 0; s < kHypothesisSamples; ++s) {
    Eigen::VectorXd x(n_);
    for (int i = 0; i < n_; ++i) x[i] = rng.uniform(domain.lo[i], domain.hi[i]);
    Eigen::VectorXd q(m_);
    for (int i = 0; i < m_; ++i) q[i] = rng.uniform(-q_radius, q_radius);
    const double r1 = rng.uniform(-R_, R_);
    const double r2 = rng.uniform(-R_, R_);
    const double lo = std::min(r1, r2), hi = std::max(r1, r2);
    double v_lo = 0.0, v_hi = 0.0;
    try {
      v_lo = log_value(x, lo, q);
      v_hi = log_value(x, hi, q);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("Hamiltonian positivity check failed: ") + e.what());
    }
    if (v_hi < v_lo - 1e-12 * std::max(1.0, std::abs(v_lo)))
      throw ValidationError("Hamiltonian decreasing in r between r = " + std::to_string(lo) +
                            " and r = " + std::to_string(hi));
    if (v_hi != v_lo) depends_on_r = true;
  }
  monotone_in_u_ = depends_on_r;
}

std::string Hamiltonian::kind_name(Kind k) {
  switch (k) {
    case Kind::gauss_curvature: return "gauss_curvature";
    case Kind::power_of_gradient: return "power_of_gradient";
    case Kind::constant_rhs: return "constant_rhs";
    case Kind::custom_expression: return "custom_expression";
  }
  return "unknown";
}

}  // namespace subma
