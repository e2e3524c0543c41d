#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "subma/grid.hpp"
#include "subma/hamiltonian.hpp"
#include "subma/solver.hpp"

namespace subma {

struct PerturbationParams {
  double epsilon = 0.0;
  double mu = 0.0;
};

/// u + epsilon exp(mu sum_{i<=m} x_i^2 / 2), the strictness perturbation.
/// Only first-layer coordinates enter the exponent. Throws OverflowError
/// (naming the max exponent over the grid) when the exponential would exceed
/// 1e300 somewhere on the box.
GridFunction perturb(const GridFunction& u, const PerturbationParams& params, int m);

enum class StrictnessLevel {
  det_power,  // -det^{1/m}(D^2_x u) + H^{1/m}(x, u, D_x u) <= -margin
  log_level,  // -log det(D^2_x u) + log H(x, u, D_x u) <= -margin
};

struct StrictnessCertificate {
  StrictnessLevel level = StrictnessLevel::det_power;
  Box subdomain;
  bool certified = false;
  double margin = 0.0;               // positive iff certified
  Eigen::Index violating_node = -1;  // flat index of the max-residual node
  std::vector<Eigen::Index> infeasible_nodes;  // convexity failures, flat indices
  std::vector<Eigen::Index> checked_nodes;     // flat indices swept
  Eigen::VectorXd residuals;                   // aligned with checked_nodes
};

/// Evaluates the chosen level's residual on every interior node lying in the
/// closed subdomain. Certification requires strict negativity everywhere:
/// margin = -max residual must exceed 1e-12 (an exact solution, whose
/// residual is roundoff noise, must fail). Convexity violations inside the
/// subdomain yield an infeasibility failure naming the nodes.
StrictnessCertificate certify_strict_subsolution(const DirichletProblem& problem,
                                                 const GridFunction& u,
                                                 const Box& subdomain,
                                                 StrictnessLevel level);

struct SweepRow {
  double mu = 0.0;
  bool overflow = false;    // perturbation exponential too large on the box
  bool infeasible = false;  // convexity failure inside the subdomain
  bool certified = false;
  double margin = 0.0;
};

/// Strictness margins of perturb(u, (epsilon, mu)) over the geometric ladder
/// mu = 2^0 .. 2^max_power; failed rows (overflow, infeasibility) are
/// recorded rather than skipped.
std::vector<SweepRow> strictness_sweep(const DirichletProblem& problem,
                                       const GridFunction& u, const Box& subdomain,
                                       double epsilon, StrictnessLevel level,
                                       int max_power = 10);

struct GradientBoundReport {
  double C = 0.0;  // max over checked nodes of |sigma^T Du|
  Box subdomain;
  std::vector<Eigen::Index> checked_nodes;  // flat indices
  Eigen::VectorXd p_norms;                  // aligned with checked_nodes
  Eigen::Index argmax_node = -1;
};

/// Horizontal gradient bound on the closed subdomain. Caller is responsible
/// for the X-convexity hypothesis; the report only measures.
GradientBoundReport gradient_bound(const CarnotFrame& frame, const GridFunction& u,
                                   const Box& subdomain);

struct ComparisonReport {
  double sup_gap = 0.0;       // max over all nodes of u - v
  double boundary_gap = 0.0;  // max over boundary nodes of (u - v)^+
  double tol = 0.0;
  bool preconditions_ok = false;
  bool verdict = false;  // preconditions_ok && sup_gap <= boundary_gap + tol
  std::vector<std::string> diagnostics;  // verdict-blocking findings
  ResidualField sub_residuals, super_residuals;
  std::vector<Eigen::Index> super_skipped_nodes;  // convexity failures of v,
                                                  // vacuous on the super side
  struct LadderRow {
    double epsilon = 0.0;
    double mu = 0.0;        // selected by the strictness sweep; 0 if none found
    double margin = 0.0;    // best det-level margin at this epsilon
    double sup_gap = 0.0;   // gap of the perturbed subsolution against v
    bool certified = false;
  };
  std::vector<LadderRow> ladder;  // epsilon -> 0
};

/// Certifies sup(u - v) <= max_boundary (u - v)^+ + tol for a discrete
/// sub/supersolution pair. Preconditions (residual(u) <= tol node-wise,
/// residual(v) >= -tol where v is convexity-feasible) are checked first;
/// failures block the verdict and are reported as diagnostics, never as a
/// false verdict. Nodes where v fails convexity are skipped on the super
/// side: no admissible test function touches v from below there. The report
/// also runs the perturbation pipeline, re-certifying strictness of
/// perturb(u) on the centered half-box along an epsilon ladder.
ComparisonReport verify_comparison(const DirichletProblem& problem,
                                   const GridFunction& u_sub,
                                   const GridFunction& v_super, double tol);

struct LipschitzReport {
  double empirical = 0.0;  // max sampled difference quotient of H^{1/m} in q
  double analytic = 0.0;   // gradient-based bound; NaN for custom kinds
  double R = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
};

/// Empirical Lipschitz constant of q -> H^{1/m}(x, r, q) over |r| <= R,
/// |q| <= R, perturbations |q1| <= 1, with x sampled from `domain`.
LipschitzReport lipschitz_h_check(const Hamiltonian& h, const Box& domain, double R,
                                  int samples, std::uint64_t seed = 20240915);

/// Interior nodes of `grid` whose points lie in the closed `subdomain`.
std::vector<Eigen::Index> nodes_in_subdomain(const Grid& grid, const Box& subdomain);

/// The centered box with half the side lengths, used by sweep defaults.
Box centered_half_box(const Box& box);

}  // namespace subma
