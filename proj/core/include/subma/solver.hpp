#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "subma/bellman.hpp"
#include "subma/carnot.hpp"
#include "subma/grid.hpp"
#include "subma/hamiltonian.hpp"
#include "subma/horizontal.hpp"

namespace subma {

/// Dirichlet problem -det(D^2_x u) + H(x, u, D_x u) = 0 on a grid box with
/// strongly imposed boundary values. Construction validates the data and
/// freezes the per-node frame table reused by all solver passes.
class DirichletProblem {
public:
  DirichletProblem(std::shared_ptr<const CarnotFrame> frame,
                   std::shared_ptr<const Grid> grid, Hamiltonian hamiltonian,
                   Eigen::VectorXd boundary_values,  // one per boundary node, grid order
                   double gamma_floor);

  static DirichletProblem with_boundary_function(
      std::shared_ptr<const CarnotFrame> frame, std::shared_ptr<const Grid> grid,
      Hamiltonian hamiltonian, const std::function<double(const Eigen::VectorXd&)>& g,
      double gamma_floor);

  const CarnotFrame& frame() const { return table_.frame(); }
  const Grid& grid() const { return table_.grid(); }
  const std::shared_ptr<const Grid>& grid_ptr() const { return table_.grid_ptr(); }
  const Hamiltonian& hamiltonian() const { return hamiltonian_; }
  const FrameTable& table() const { return table_; }
  double gamma_floor() const { return gamma_floor_; }
  const Eigen::VectorXd& boundary_values() const { return boundary_values_; }

  /// Overwrite the boundary nodes of `u` with the problem's boundary data.
  void impose_boundary(GridFunction& u) const;

private:
  FrameTable table_;
  Hamiltonian hamiltonian_;
  Eigen::VectorXd boundary_values_;
  double gamma_floor_;
};

/// Residual of the log-form equation at every interior node:
///   -log det(D^2_x u) + log H(x, u, D_x u).
/// Nodes where D^2_x u fails the gamma_floor spectral test are flagged
/// in-band (NaN value plus the flat node index) rather than throwing.
struct ResidualField {
  Eigen::VectorXd values;  // per interior node, frame-table order; NaN if infeasible
  std::vector<Eigen::Index> infeasible_nodes;  // flat indices
  double max_abs = 0.0;    // over feasible nodes only

  bool feasible() const { return infeasible_nodes.empty(); }
};

ResidualField residual(const DirichletProblem& problem, const GridFunction& u);

/// One Bellman control per interior node (frame-table order).
struct Policy {
  std::vector<BellmanControl> controls;
  std::vector<Eigen::Index> fallback_nodes;  // flat indices where the control
                                             // grid replaced direct inversion
};

/// Pointwise minimizer M = A^{-1}, a = (det A)^{1/m} with A the horizontal
/// Hessian clipped (eigenvalue-wise) to >= gamma_floor I; nodes with clipped
/// condition number above 10^12 fall back to the best element of
/// `fallback_grid`.
Policy policy_improve(const DirichletProblem& problem, const GridFunction& u,
                      const std::vector<BellmanControl>& fallback_grid);

/// Linear policy-evaluation step of Howard iteration: solves
///   tr(M(x) sigma^T D^2u sigma) =
///       log H(x, u_prev, D_x u_prev) - m log a(x) + m - tr(M(x) Q(x, Du_prev))
/// with 2nd-order stencils and strongly imposed boundary data; the gradient
/// slot is frozen at u_prev. Iterative solve to relative tolerance 1e-10,
/// warm-started from u_prev. Throws LinearSolveError on non-convergence.
GridFunction policy_solve(const DirichletProblem& problem, const Policy& policy,
                          const GridFunction& u_prev);

struct SolverConfig {
  double tol = 1e-6;          // on max |residual| of the log-form equation
  int max_iterations = 80;
  int max_halvings = 30;      // backtracking line search
  int control_density = 16;   // fallback control grid
  std::uint64_t seed = 42;    // control grid sampling
  double init_epsilon = 1e-2; // feasibility push of the initial iterate
};

struct SolverState {
  GridFunction u;
  Policy policy;  // from the last improvement step
  struct LogRow {
    int iteration;
    double max_residual;
    double damping;
  };
  std::vector<LogRow> residual_log;
  int iterations = 0;
  bool converged = false;
  std::string failure_reason;  // empty when converged
};

/// Damped Howard iteration with feasibility-preserving line search: a step is
/// accepted only when the blended iterate stays in the discrete convexity
/// cone and does not increase the max residual. Non-convergence is reported
/// through the state, not an exception.
SolverState solve(const DirichletProblem& problem, const SolverConfig& config = {});

}  // namespace subma
