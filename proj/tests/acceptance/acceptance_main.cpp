// Acceptance harness: one pass/fail line per criterion, exit code equal to
// the number of failures. Tolerances are pinned here, next to the checks
// they guard.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "subma/bellman.hpp"
#include "subma/carnot.hpp"
#include "subma/comparison.hpp"
#include "subma/errors.hpp"
#include "subma/horizontal.hpp"
#include "subma/problem_spec.hpp"
#include "subma/random.hpp"
#include "subma/solver.hpp"

using namespace subma;

namespace {

const std::string kFixtures = SUBMA_FIXTURES_DIR;

// Criterion 1: manufactured ladder.
constexpr int kLadder[3] = {17, 33, 49};
constexpr double kErrorCapAt33 = 5e-3;
// The exact solution is quadratic, so discretization error vanishes and the
// per-level error is pure solver residue. Its floor (iterative linear solves
// at relative tolerance 1e-10 against 1/h^2 operator scale) sits near 6e-8
// on the finest level; the monotonicity check allows that much additive
// noise between levels.
constexpr double kLadderNoiseSlack = 1e-7;
constexpr double kLevelTimeCap = 300.0;  // seconds

// Criterion 2.
constexpr double kEuclidErrorCap = 1e-8;

// Criterion 3.
constexpr int kLemmaMatrices = 1000;
constexpr int kLemmaControls = 100;
constexpr double kLemmaTol = 1e-10;
constexpr double kLemmaTimeCap = 30.0;

// Criterion 4.
constexpr int kIdentitySamples = 500;
constexpr int kMinkowskiPairs = 500;
constexpr double kIdentityTol = 1e-12;
constexpr double kIdentityTimeCap = 10.0;

// Criterion 5: the discrete horizontal Hessian of the perturbation needs
// h^2 mu^3-scale Taylor error small against the eigenvalue's e^{mu rho}
// cushion; 65 nodes per axis still fails at mu = 16, 97 certifies with
// margin. One grid serves every (epsilon, mu) cell.
constexpr int kGainResolution = 97;
constexpr double kGainFactor = 1.0 - 1e-6;

// Criterion 6.
constexpr double kSweepEpsilon = 0.1;

// Criterion 7.
constexpr double kComparisonTolFactor = 10.0;

// Criterion 9.
constexpr double kGradientVariationCap = 0.05;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

struct LadderLevel {
  BuiltProblem bp;
  SolverState state;
  double error = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

Eigen::MatrixXd random_spd(Rng& rng, int m, double lo, double hi) {
  Eigen::MatrixXd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = rng.normal();
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
  Eigen::VectorXd lam(m);
  for (int i = 0; i < m; ++i) lam(i) = rng.uniform(lo, hi);
  return Q * lam.asDiagonal() * Q.transpose();
}

std::vector<LadderLevel> criterion_1() {
  std::vector<LadderLevel> levels;
  bool pass = true;
  std::string detail = "manufactured ladder";
  for (const int res : kLadder) {
    ProblemSpec spec = builtin_problem("heisenberg-gauss-manufactured");
    apply_override(spec, fmt("resolution=%d %d %d", res, res, res));
    Timer timer;
    LadderLevel level{build_problem(spec), {}, 0.0, 0.0};
    level.state = solve(level.bp.problem, level.bp.solver_config());
    level.seconds = timer.seconds();
    if (level.state.converged) {
      level.error = (level.state.u.values - level.bp.exact_solution().values)
                        .cwiseAbs()
                        .maxCoeff();
    } else {
      pass = false;
    }
    detail += fmt("; %d^3: err %.3g, %.1f s", res, level.error, level.seconds);
    if (!(level.seconds <= kLevelTimeCap)) pass = false;
    levels.push_back(std::move(level));
  }
  if (levels.size() == 3 && pass) {
    if (!(levels[1].error <= kErrorCapAt33)) pass = false;
    for (int i = 1; i < 3; ++i)
      if (!(levels[i].error <= levels[i - 1].error + kLadderNoiseSlack)) pass = false;
  }
  report(1, pass, detail);
  return levels;
}

void criterion_2() {
  bool pass = true;
  std::string detail = "euclidean exactness";
  for (const int res : {9, 17}) {
    ProblemSpec spec = builtin_problem("euclidean-det-one");
    apply_override(spec, fmt("resolution=%d %d", res, res));
    const BuiltProblem bp = build_problem(spec);
    Timer timer;
    const SolverState state = solve(bp.problem, bp.solver_config());
    const double err =
        state.converged
            ? (state.u.values - bp.exact_solution().values).cwiseAbs().maxCoeff()
            : std::numeric_limits<double>::quiet_NaN();
    if (!state.converged || !(err <= kEuclidErrorCap)) pass = false;
    detail += fmt("; %d^2: err %.3g, %.1f s", res, err, timer.seconds());
  }
  report(2, pass, detail);
}

void criterion_3() {
  Timer timer;
  Rng rng(20240915);
  double worst_minimizer_gap = 0.0;
  double worst_control_deficit = 0.0;
  bool pass = true;
  for (int i = 0; i < kLemmaMatrices; ++i) {
    const int m = (i % 2 == 0) ? 2 : 3;
    const double gamma = (i % 4 < 2) ? 0.1 : 1.0;
    const Eigen::MatrixXd A = random_spd(rng, m, gamma, gamma + 3.0);
    const LogDetResult exact = logdet_exact(A, gamma);
    worst_minimizer_gap = std::max(
        worst_minimizer_gap, std::abs(bellman_value(A, exact.minimizer) - exact.value));

    int accepted = 0;
    while (accepted < kLemmaControls) {
      Eigen::MatrixXd M = random_spd(rng, m, 0.05, 1.0);
      const double top =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().maxCoeff();
      M *= rng.uniform(0.2, 1.0) / (gamma * top);
      BellmanControl c;
      c.M = M;
      c.a = std::pow(M.determinant(), -1.0 / m);
      if (!c.is_feasible(gamma)) continue;  // rejection step
      ++accepted;
      worst_control_deficit = std::max(
          worst_control_deficit, exact.value - bellman_value(A, c));
    }
  }
  const double elapsed = timer.seconds();
  if (worst_minimizer_gap > kLemmaTol) pass = false;
  if (worst_control_deficit > kLemmaTol) pass = false;
  if (!(elapsed < kLemmaTimeCap)) pass = false;
  report(3, pass,
         fmt("min-representation: minimizer gap %.2e, control deficit %.2e, %.1f s",
             worst_minimizer_gap, worst_control_deficit, elapsed));
}

void criterion_4() {
  Timer timer;
  Rng rng(271828);
  bool pass = true;
  double worst_identity = 0.0;
  for (int i = 0; i < kIdentitySamples; ++i) {
    const int m = 1 + static_cast<int>(rng.below(5));
    Eigen::VectorXd q(m);
    for (int j = 0; j < m; ++j) q(j) = rng.uniform(-1.5, 1.5);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) + q * q.transpose();
    worst_identity =
        std::max(worst_identity, std::abs(A.determinant() - (1.0 + q.squaredNorm())));
  }
  if (worst_identity > kIdentityTol) pass = false;

  double worst_slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kMinkowskiPairs; ++i) {
    const int m = 2 + static_cast<int>(rng.below(3));
    const Eigen::MatrixXd A = random_spd(rng, m, 0.01, 2.0);
    const Eigen::MatrixXd B = random_spd(rng, m, 0.01, 2.0);
    const double slack = std::pow((A + B).determinant(), 1.0 / m) -
                         std::pow(A.determinant(), 1.0 / m) -
                         std::pow(B.determinant(), 1.0 / m);
    worst_slack = std::min(worst_slack, slack);
  }
  if (!(worst_slack >= -kIdentityTol)) pass = false;

  const double elapsed = timer.seconds();
  if (!(elapsed < kIdentityTimeCap)) pass = false;
  report(4, pass,
         fmt("determinant identities: rank-one gap %.2e, minkowski slack %.2e, %.1f s",
             worst_identity, worst_slack, elapsed));
}

void criterion_5() {
  bool pass = true;
  Box box;
  box.lo = Eigen::VectorXd::Constant(3, -1.0);
  box.hi = Eigen::VectorXd::Constant(3, 1.0);
  auto grid = std::make_shared<Grid>(
      box, std::vector<int>{kGainResolution, kGainResolution, kGainResolution});
  auto frame = std::make_shared<CarnotFrame>(builtin_frame("heisenberg1"));
  const FrameTable table(frame, grid);
  const GridFunction zero{grid, Eigen::VectorXd::Zero(grid->total_nodes())};

  std::string detail = fmt("perturbation gain at %d^3", kGainResolution);
  for (const double eps : {1e-2, 1e-1}) {
    for (const double mu : {1.0, 4.0, 16.0}) {
      const double target = eps * mu * kGainFactor;
      const GridFunction up = perturb(zero, {eps, mu}, 2);
      const ConvexityCertificate cert = certify_convexity(table, up, target);
      const bool ok =
          cert.kind == ConvexityKind::uniformly_x_convex && cert.gamma >= target;
      if (!ok) pass = false;
      detail += fmt("; (%.2g,%.2g): %.4g", eps, mu, cert.gamma);
    }
  }
  report(5, pass, detail);
}

void criterion_6(const std::vector<LadderLevel>& levels) {
  if (levels.size() < 2 || !levels[1].state.converged) {
    report(6, false, "strictness sweep skipped: 33^3 solve unavailable");
    return;
  }
  const LadderLevel& level = levels[1];
  const Box half = centered_half_box(level.bp.grid->box());
  const std::vector<SweepRow> rows =
      strictness_sweep(level.bp.problem, level.state.u, half, kSweepEpsilon,
                       StrictnessLevel::det_power);
  double best_margin = 0.0;
  double best_mu = 0.0;
  for (const SweepRow& row : rows) {
    if (row.certified && row.margin > best_margin) {
      best_margin = row.margin;
      best_mu = row.mu;
    }
  }
  const bool pass = best_margin > 0.0;
  report(6, pass,
         fmt("strictness sweep: best margin %.3g at mu = %g over %zu rows",
             best_margin, best_mu, rows.size()));
}

void criterion_7(const std::vector<LadderLevel>& levels) {
  if (levels.empty() || !levels[0].state.converged) {
    report(7, false, "comparison verdicts skipped: 17^3 solve unavailable");
    return;
  }
  const LadderLevel& level = levels[0];
  const double tol = kComparisonTolFactor * level.bp.spec.tol;
  bool pass = true;
  std::string detail = "comparison verdicts";

  const ComparisonReport self =
      verify_comparison(level.bp.problem, level.state.u, level.state.u, tol);
  if (!(self.preconditions_ok && self.verdict)) pass = false;
  detail += fmt("; self gap %.2g", self.sup_gap);

  // Boundary shift: +0.05 lifts the solution rigidly (H has no u slot).
  ProblemSpec shifted_spec = builtin_problem("heisenberg-gauss-manufactured");
  apply_override(shifted_spec, "resolution=17 17 17");
  apply_override(shifted_spec, "boundary=(x1^2 + x2^2)/2 + 1/20");
  const BuiltProblem shifted = build_problem(shifted_spec);
  const SolverState lifted = solve(shifted.problem, shifted.solver_config());
  if (!lifted.converged) pass = false;

  const ComparisonReport shift_report =
      verify_comparison(level.bp.problem, level.state.u, lifted.u, tol);
  if (!(shift_report.preconditions_ok && shift_report.verdict)) pass = false;
  detail += fmt("; shift gap %.2g", shift_report.sup_gap);

  // Boundary monotonicity of the pair: the lifted solution dominates.
  const double min_gap = (lifted.u.values - level.state.u.values).minCoeff();
  if (!(min_gap >= -tol)) pass = false;
  detail += fmt("; monotone min %.2g", min_gap);

  // Negative control: denting the supersolution breaks its residual sign;
  // the pair must fail preconditions, never return a false verdict.
  GridFunction dented = lifted.u;
  for (Eigen::Index flat = 0; flat < level.bp.grid->total_nodes(); ++flat) {
    const Eigen::VectorXd x = level.bp.grid->point(flat);
    dented.values(flat) -= 0.5 * std::exp(-8.0 * x.squaredNorm());
  }
  const ComparisonReport bump =
      verify_comparison(level.bp.problem, level.state.u, dented, tol);
  if (bump.preconditions_ok || bump.verdict) pass = false;
  detail += fmt("; bump blocked %s", (!bump.preconditions_ok && !bump.verdict) ? "yes" : "no");

  report(7, pass, detail);
}

void criterion_8() {
  bool pass = true;
  std::string detail = "frame validation";

  const CarnotFrame h1 = builtin_frame("heisenberg1");
  const FrameValidation v = validate_frame(h1);
  if (!v.ok()) pass = false;

  // Symbolic bracket: [X1, X2] = d/dx3 exactly in the polynomial ring.
  const PolyVectorField bracket = lie_bracket(h1.generator(1), h1.generator(2));
  const bool bracket_ok = bracket.size() == 3 && bracket[0].is_zero() &&
                          bracket[1].is_zero() &&
                          bracket[2] == Polynomial::constant(3, 1.0);
  if (!bracket_ok) pass = false;
  detail += fmt("; h1 ok %s, bracket ok %s", v.ok() ? "yes" : "no",
                bracket_ok ? "yes" : "no");

  try {
    const CarnotFrame broken =
        load_frame_file(kFixtures + "/frames/broken-rank.frame", false);
    const FrameValidation bv = validate_frame(broken);
    const bool rank_diag = !bv.rank_ok && bv.triangular_ok && bv.homogeneity_ok &&
                           !bv.failures.empty() && bv.failures.front().check == "rank";
    if (!rank_diag) pass = false;
    detail += fmt("; rank fixture rejected %s", rank_diag ? "yes" : "no");

    const CarnotFrame inhom =
        load_frame_file(kFixtures + "/frames/inhomogeneous.frame", false);
    const FrameValidation iv = validate_frame(inhom);
    bool homo_diag = !iv.homogeneity_ok;
    bool found = false;
    for (const auto& f : iv.failures)
      if (f.check == "homogeneity" && f.row == 3 && f.col == 1) found = true;
    homo_diag = homo_diag && found;
    if (!homo_diag) pass = false;
    detail += fmt("; homogeneity fixture rejected %s", homo_diag ? "yes" : "no");
  } catch (const Error& e) {
    pass = false;
    detail += fmt("; fixture load failed: %s", e.what());
  }

  report(8, pass, detail);
}

void criterion_9(const std::vector<LadderLevel>& levels) {
  if (levels.size() < 3) {
    report(9, false, "gradient bound skipped: ladder unavailable");
    return;
  }
  bool pass = true;
  std::string detail = "gradient bound";
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const LadderLevel& level : levels) {
    if (!level.state.converged) {
      pass = false;
      continue;
    }
    const Box half = centered_half_box(level.bp.grid->box());
    const GradientBoundReport gb =
        gradient_bound(*level.bp.frame, level.state.u, half);
    lo = std::min(lo, gb.C);
    hi = std::max(hi, gb.C);
    detail += fmt("; C = %.8g", gb.C);
  }
  const double variation = (hi - lo) / lo;
  if (!(variation < kGradientVariationCap)) pass = false;
  detail += fmt("; variation %.2g%%", 100.0 * variation);
  report(9, pass, detail);
}

}  // namespace

int main() {
  std::printf("acceptance harness\n");
  Timer total;

  std::vector<LadderLevel> levels;
  try {
    levels = criterion_1();
  } catch (const Error& e) {
    report(1, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_2();
  } catch (const Error& e) {
    report(2, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_3();
  } catch (const Error& e) {
    report(3, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_4();
  } catch (const Error& e) {
    report(4, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_5();
  } catch (const Error& e) {
    report(5, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_6(levels);
  } catch (const Error& e) {
    report(6, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_7(levels);
  } catch (const Error& e) {
    report(7, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_8();
  } catch (const Error& e) {
    report(8, false, fmt("exception: %s", e.what()));
  }
  try {
    criterion_9(levels);
  } catch (const Error& e) {
    report(9, false, fmt("exception: %s", e.what()));
  }

  std::printf("%d of 9 criteria passed in %.1f s\n", 9 - g_failures, total.seconds());
  return g_failures;
}
