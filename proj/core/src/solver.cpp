#include "subma/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "subma/errors.hpp"

namespace subma {

DirichletProblem::DirichletProblem(std::shared_ptr<const CarnotFrame> frame,
                                   std::shared_ptr<const Grid> grid,
                                   Hamiltonian hamiltonian,
                                   Eigen::VectorXd boundary_values, double gamma_floor)
    : table_(std::move(frame), std::move(grid)),
      hamiltonian_(std::move(hamiltonian)),
      boundary_values_(std::move(boundary_values)),
      gamma_floor_(gamma_floor) {
  if (!(gamma_floor_ > 0.0)) throw ValidationError("gamma_floor must be positive");
  const auto& boundary = table_.grid().boundary_nodes();
  if (boundary_values_.size() != static_cast<Eigen::Index>(boundary.size()))
    throw ValidationError("boundary data has " + std::to_string(boundary_values_.size()) +
                          " values for " + std::to_string(boundary.size()) +
                          " boundary nodes");
  if (!boundary_values_.allFinite())
    throw ValidationError("boundary data has non-finite values");
  if (hamiltonian_.m() != table_.frame().m())
    throw ValidationError("Hamiltonian horizontal dimension " +
                          std::to_string(hamiltonian_.m()) + " does not match frame (" +
                          std::to_string(table_.frame().m()) + ")");
  if (hamiltonian_.n() != table_.frame().n())
    throw ValidationError("Hamiltonian ambient dimension does not match frame");
}

DirichletProblem DirichletProblem::with_boundary_function(
    std::shared_ptr<const CarnotFrame> frame, std::shared_ptr<const Grid> grid,
    Hamiltonian hamiltonian, const std::function<double(const Eigen::VectorXd&)>& g,
    double gamma_floor) {
  const auto& boundary = grid->boundary_nodes();
  Eigen::VectorXd values(static_cast<Eigen::Index>(boundary.size()));
  for (std::size_t i = 0; i < boundary.size(); ++i)
    values[static_cast<Eigen::Index>(i)] = g(grid->point(boundary[i]));
  return DirichletProblem(std::move(frame), std::move(grid), std::move(hamiltonian),
                          std::move(values), gamma_floor);
}

void DirichletProblem::impose_boundary(GridFunction& u) const {
  const auto& boundary = table_.grid().boundary_nodes();
  for (std::size_t i = 0; i < boundary.size(); ++i)
    u.values[boundary[i]] = boundary_values_[static_cast<Eigen::Index>(i)];
}

ResidualField residual(const DirichletProblem& problem, const GridFunction& u) {
  u.validate();
  const FrameTable& table = problem.table();
  const auto& interior = table.grid().interior_nodes();
  ResidualField field;
  field.values.resize(static_cast<Eigen::Index>(interior.size()));
  field.max_abs = 0.0;
  for (std::size_t pos = 0; pos < interior.size(); ++pos) {
    const Eigen::Index node = interior[pos];
    const EuclideanJet ej = euclid_jet(u, node);
    const HorizontalJet jet = table.jet(ej, static_cast<Eigen::Index>(pos));
    double value;
    try {
      const LogDetResult ld = logdet_exact(jet.S, problem.gamma_floor());
      const Eigen::VectorXd x = table.grid().point(node);
      value = -ld.value + problem.hamiltonian().log_value(x, u.values[node], jet.p);
    } catch (const SpectralFloorError&) {
      field.infeasible_nodes.push_back(node);
      field.values[static_cast<Eigen::Index>(pos)] =
          std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    field.values[static_cast<Eigen::Index>(pos)] = value;
    field.max_abs = std::max(field.max_abs, std::abs(value));
  }
  return field;
}

Policy policy_improve(const DirichletProblem& problem, const GridFunction& u,
                      const std::vector<BellmanControl>& fallback_grid) {
  u.validate();
  const FrameTable& table = problem.table();
  const auto& interior = table.grid().interior_nodes();
  const double gamma = problem.gamma_floor();
  const int m = table.frame().m();

  Policy policy;
  policy.controls.reserve(interior.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (std::size_t pos = 0; pos < interior.size(); ++pos) {
    const Eigen::Index node = interior[pos];
    const HorizontalJet jet = table.jet(euclid_jet(u, node), static_cast<Eigen::Index>(pos));
    eig.compute(jet.S);
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(gamma);
    const double cond = lam.maxCoeff() / lam.minCoeff();
    if (cond > 1e12 && !fallback_grid.empty()) {
      const Eigen::MatrixXd A =
          eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
      std::size_t best = 0;
      double best_value = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < fallback_grid.size(); ++c) {
        const double v = bellman_value(A, fallback_grid[c]);
        if (v < best_value) {
          best_value = v;
          best = c;
        }
      }
      policy.controls.push_back(fallback_grid[best]);
      policy.fallback_nodes.push_back(node);
      continue;
    }
    BellmanControl c;
    c.M = eig.eigenvectors() * lam.cwiseInverse().asDiagonal() *
          eig.eigenvectors().transpose();
    c.M = 0.5 * (c.M + c.M.transpose()).eval();
    c.a = std::exp(lam.array().log().sum() / m);
    policy.controls.push_back(std::move(c));
  }
  return policy;
}

namespace {

/// Linear operator of one fixed policy. The matrix and the boundary coupling
/// depend only on the controls, so a single factorization serves every
/// frozen-gradient sweep against that policy.
class PolicyEvaluator {
 public:
  PolicyEvaluator(const DirichletProblem& problem, const Policy& policy)
      : problem_(problem), policy_(policy) {
    const FrameTable& table = problem.table();
    const Grid& grid = table.grid();
    const auto& interior = grid.interior_nodes();
    const int d = grid.dim();
    const int m = table.frame().m();
    if (policy.controls.size() != interior.size())
      throw ValidationError("policy has " + std::to_string(policy.controls.size()) +
                            " controls for " + std::to_string(interior.size()) +
                            " interior nodes");

    GridFunction g;  // boundary data readable by flat index
    g.grid = table.grid_ptr();
    g.values = Eigen::VectorXd::Zero(grid.total_nodes());
    problem.impose_boundary(g);

    const Eigen::Index n_unknowns = static_cast<Eigen::Index>(interior.size());
    b_const_.resize(n_unknowns);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n_unknowns) *
                     static_cast<std::size_t>(1 + 2 * d + 2 * d * (d - 1)));

    for (std::size_t pos = 0; pos < interior.size(); ++pos) {
      const Eigen::Index node = interior[pos];
      const Eigen::Index row = static_cast<Eigen::Index>(pos);
      const BellmanControl& control = policy.controls[pos];
      // The equation is tr(C D^2 u) = b with C = sigma M sigma^T; assembled
      // with flipped sign so the diagonal is positive. The u_prev-dependent
      // part of b is filled per sweep; boundary neighbors fold in here.
      double b = m * std::log(control.a) - m;

      const Eigen::MatrixXd& sigma = table.sigma_at(row);
      const Eigen::MatrixXd C = sigma * control.M * sigma.transpose();
      double diag = 0.0;
      auto couple = [&](Eigen::Index neighbor, double coeff) {
        const Eigen::Index col = table.interior_position(neighbor);
        if (col >= 0)
          triplets.emplace_back(row, col, coeff);
        else
          b -= coeff * g.values[neighbor];
      };
      for (int a = 0; a < d; ++a) {
        const double ha = grid.spacing(a);
        const double w = C(a, a) / (ha * ha);
        diag += 2.0 * w;
        couple(grid.neighbor(node, a, +1), -w);
        couple(grid.neighbor(node, a, -1), -w);
        for (int bx = a + 1; bx < d; ++bx) {
          const double hb = grid.spacing(bx);
          const double wc = C(a, bx) / (2.0 * ha * hb);
          if (wc == 0.0) continue;
          const Eigen::Index sa = grid.stride(a), sb = grid.stride(bx);
          couple(node + sa + sb, -wc);
          couple(node - sa - sb, -wc);
          couple(node + sa - sb, +wc);
          couple(node - sa + sb, +wc);
        }
      }
      triplets.emplace_back(row, row, diag);
      b_const_[row] = b;
    }

    A_.resize(n_unknowns, n_unknowns);
    A_.setFromTriplets(triplets.begin(), triplets.end());

    solver_.setTolerance(1e-10);
    solver_.setMaxIterations(20000);
    // Small systems get a near-exact factorization so tight nonlinear
    // tolerances stay reachable; large systems trade preconditioner accuracy
    // for factorization speed (the Krylov tolerance still governs the result).
    const bool small_system = n_unknowns < 20000;
    solver_.preconditioner().setDroptol(small_system ? 1e-10 : 1e-2);
    solver_.preconditioner().setFillfactor(small_system ? 40 : 12);
    solver_.compute(A_);
    if (solver_.info() != Eigen::Success)
      throw LinearSolveError(0, 0.0,
                             "policy_solve: preconditioner factorization failed");
  }

  PolicyEvaluator(const PolicyEvaluator&) = delete;
  PolicyEvaluator& operator=(const PolicyEvaluator&) = delete;

  /// One frozen-gradient sweep: H's arguments and Q are taken from u_prev.
  GridFunction sweep(const GridFunction& u_prev) {
    u_prev.validate();
    const FrameTable& table = problem_.table();
    const Grid& grid = table.grid();
    const auto& interior = grid.interior_nodes();
    const Eigen::Index n_unknowns = static_cast<Eigen::Index>(interior.size());

    Eigen::VectorXd rhs = b_const_;
    Eigen::VectorXd warm(n_unknowns);
    for (std::size_t pos = 0; pos < interior.size(); ++pos) {
      const Eigen::Index node = interior[pos];
      const Eigen::Index row = static_cast<Eigen::Index>(pos);
      const EuclideanJet ej = euclid_jet(u_prev, node);
      const Eigen::VectorXd x = grid.point(node);
      const Eigen::VectorXd p = table.sigma_at(row).transpose() * ej.gradient;
      double frozen =
          -problem_.hamiltonian().log_value(x, u_prev.values[node], p);
      if (!table.q_is_zero())
        frozen += (policy_.controls[pos].M * table.q_at(row, ej.gradient)).trace();
      rhs[row] += frozen;
      warm[row] = u_prev.values[node];
    }

    const Eigen::VectorXd sol = solver_.solveWithGuess(rhs, warm);
    if (std::getenv("SUBMA_SOLVER_DEBUG"))
      std::fprintf(stderr,
                   "[policy_solve] %lld unknowns, %lld bicgstab iters, err %.2e\n",
                   static_cast<long long>(n_unknowns),
                   static_cast<long long>(solver_.iterations()), solver_.error());
    if (solver_.info() != Eigen::Success)
      throw LinearSolveError(solver_.iterations(), solver_.error(),
                             "policy_solve: linear solver stalled after " +
                                 std::to_string(solver_.iterations()) +
                                 " iterations, estimated error " +
                                 std::to_string(solver_.error()));

    GridFunction u;
    u.grid = table.grid_ptr();
    u.values.resize(grid.total_nodes());
    for (std::size_t pos = 0; pos < interior.size(); ++pos)
      u.values[interior[pos]] = sol[static_cast<Eigen::Index>(pos)];
    problem_.impose_boundary(u);
    return u;
  }

 private:
  const DirichletProblem& problem_;
  const Policy& policy_;
  Eigen::SparseMatrix<double> A_;
  Eigen::VectorXd b_const_;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver_;
};

}  // namespace

GridFunction policy_solve(const DirichletProblem& problem, const Policy& policy,
                          const GridFunction& u_prev) {
  return PolicyEvaluator(problem, policy).sweep(u_prev);
}

namespace {

GridFunction blend(const GridFunction& base, const GridFunction& target, double theta) {
  GridFunction out;
  out.grid = base.grid;
  out.values = (1.0 - theta) * base.values + theta * target.values;
  return out;
}

/// Poisson-type solve with the isotropic floor control: the near-harmonic
/// extension of the boundary data, the base point of the feasibility push.
GridFunction poisson_base(const DirichletProblem& problem) {
  const Grid& grid = problem.grid();
  const int m = problem.frame().m();
  GridFunction u0;
  u0.grid = problem.grid_ptr();
  u0.values = Eigen::VectorXd::Zero(grid.total_nodes());
  problem.impose_boundary(u0);

  Policy isotropic;
  isotropic.controls.assign(grid.interior_nodes().size(), BellmanControl{
      Eigen::MatrixXd::Identity(m, m) / problem.gamma_floor(), problem.gamma_floor()});
  return policy_solve(problem, isotropic, u0);
}

double min_horizontal_eigen(const DirichletProblem& problem, const GridFunction& u) {
  const FrameTable& table = problem.table();
  const auto& interior = problem.grid().interior_nodes();
  double lam = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  for (std::size_t pos = 0; pos < interior.size(); ++pos) {
    const HorizontalJet jet =
        table.jet(euclid_jet(u, interior[pos]), static_cast<Eigen::Index>(pos));
    eig.compute(jet.S, Eigen::EigenvaluesOnly);
    lam = std::min(lam, eig.eigenvalues().minCoeff());
  }
  return lam;
}

/// First-layer quadratic push: adds exactly epsilon I to the horizontal
/// Hessian at every node (the top block of sigma is the identity and Q
/// vanishes on gradients supported in the first layer).
void push_first_layer(GridFunction& u, int m, double epsilon) {
  const Grid& grid = *u.grid;
  for (Eigen::Index node = 0; node < grid.total_nodes(); ++node)
    u.values[node] += epsilon * 0.5 * grid.point(node).head(m).squaredNorm();
}

/// Relative overshoot of the feasibility push past the cone boundary. Large
/// pushes inflate boundary-layer gradients and stall the damped iteration on
/// gradient-sensitive Hamiltonians, so the push clears the floor by a modest
/// margin instead.
constexpr double kInitMargin = 0.1;

/// Cap on frozen-slot Picard sweeps per policy evaluation. The shared
/// factorization makes self-consistency in the gradient slot cheap, and it
/// removes the first-order coupling error that otherwise stalls the line
/// search on gradient-sensitive Hamiltonians.
constexpr int kEvaluationSweeps = 6;

}  // namespace

SolverState solve(const DirichletProblem& problem, const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw ValidationError("solver tolerance must be positive");
  SolverState state;
  const std::vector<BellmanControl> fallback =
      control_grid(problem.frame().m(), problem.gamma_floor(), config.control_density,
                   config.seed);

  // The feasibility push is sized from the measured convexity deficit of the
  // Poisson base, then grown tenfold as a safety net until the iterate clears
  // the cone.
  double eps = config.init_epsilon;
  ResidualField res;
  try {
    const GridFunction base = poisson_base(problem);
    const double lam = min_horizontal_eigen(problem, base);
    const double gamma = problem.gamma_floor();
    if (lam < gamma) eps = std::max(eps, (1.0 + kInitMargin) * (gamma - lam));
    for (int attempt = 0;; ++attempt) {
      state.u = base;
      push_first_layer(state.u, problem.frame().m(), eps);
      res = residual(problem, state.u);
      if (res.feasible()) break;
      if (attempt >= 4) {
        state.failure_reason = "initial iterate infeasible at " +
                               std::to_string(res.infeasible_nodes.size()) +
                               " nodes even after feasibility push";
        return state;
      }
      eps *= 10.0;
    }
  } catch (const LinearSolveError& e) {
    state.failure_reason = std::string("initialization failed: ") + e.what();
    return state;
  }
  state.residual_log.push_back({0, res.max_abs, 1.0});

  while (state.iterations < config.max_iterations && res.max_abs >= config.tol) {
    Policy policy = policy_improve(problem, state.u, fallback);
    GridFunction candidate;
    try {
      PolicyEvaluator evaluator(problem, policy);
      candidate = evaluator.sweep(state.u);
      double prev_delta = std::numeric_limits<double>::infinity();
      for (int s = 1; s < kEvaluationSweeps; ++s) {
        GridFunction next = evaluator.sweep(candidate);
        const double delta = (next.values - candidate.values).cwiseAbs().maxCoeff();
        if (!(delta < prev_delta)) break;  // non-contracting: keep the last sweep
        candidate = std::move(next);
        if (delta < 1e-3 * std::max(res.max_abs, config.tol)) break;
        prev_delta = delta;
      }
    } catch (const LinearSolveError& e) {
      state.failure_reason = std::string("policy evaluation failed: ") + e.what();
      return state;
    }

    double theta = 1.0;
    bool accepted = false;
    GridFunction trial;
    ResidualField res_trial;
    for (int halvings = 0; halvings <= config.max_halvings; ++halvings) {
      trial = blend(state.u, candidate, theta);
      res_trial = residual(problem, trial);
      if (res_trial.feasible() && res_trial.max_abs <= res.max_abs) {
        accepted = true;
        break;
      }
      theta *= 0.5;
    }
    if (!accepted) {
      state.policy = std::move(policy);
      state.failure_reason = "line search exhausted " +
                             std::to_string(config.max_halvings) +
                             " halvings without an acceptable step";
      return state;
    }

    state.u = std::move(trial);
    res = std::move(res_trial);
    state.policy = std::move(policy);
    ++state.iterations;
    state.residual_log.push_back({state.iterations, res.max_abs, theta});
    if (res.max_abs == 0.0) break;
  }

  state.converged = res.feasible() && res.max_abs < config.tol;
  if (!state.converged && state.failure_reason.empty())
    state.failure_reason = "residual " + std::to_string(res.max_abs) +
                           " above tolerance after " +
                           std::to_string(state.iterations) + " iterations";
  return state;
}

}  // namespace subma
