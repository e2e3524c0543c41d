#include "subma/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "subma/comparison.hpp"
#include "subma/errors.hpp"
#include "subma/grid_io.hpp"
#include "subma/problem_spec.hpp"

namespace subma {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int log_level() {
  const char* env = std::getenv("SUBMA_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& message) {
  if (log_level() >= 1) std::cout << message << "\n";
}

void log_debug(const std::string& message) {
  if (log_level() >= 2) std::cout << message << "\n";
}

std::string artifact_path(const RunConfig& config, const std::string& name) {
  return (fs::path(config.output_dir) / name).string();
}

void write_json_artifact(const std::string& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_error_json(const RunConfig& config, int exit_code, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  j["command"] = config.command;
  j["exit"] = exit_code;
  try {
    fs::create_directories(config.output_dir);
    write_json_artifact(artifact_path(config, "error.json"), j);
  } catch (...) {
    // Losing the error artifact must not mask the original failure.
  }
}

ordered_json spec_json(const ProblemSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["frame"] = spec.frame_ref;
  j["box"] = spec.box_bounds;
  j["resolution"] = spec.resolution;
  j["hamiltonian"] = spec.hamiltonian_kind;
  if (!spec.k_expr.empty()) j["k"] = spec.k_expr;
  if (!spec.f_expr.empty()) j["f"] = spec.f_expr;
  if (!spec.h_expr.empty()) j["h"] = spec.h_expr;
  if (spec.has_beta) j["beta"] = spec.beta;
  j["boundary"] = spec.boundary_expr;
  if (!spec.exact_expr.empty()) j["exact"] = spec.exact_expr;
  j["gamma_floor"] = spec.gamma_floor;
  j["tol"] = spec.tol;
  j["max_iter"] = spec.max_iter;
  j["seed"] = spec.seed;
  return j;
}

BuiltProblem load_problem(const RunConfig& config) {
  ProblemSpec spec;
  std::string base_dir;
  if (is_builtin_problem(config.spec_path)) {
    spec = builtin_problem(config.spec_path);
  } else {
    spec = load_problem_file(config.spec_path);
    base_dir = fs::path(config.spec_path).parent_path().string();
  }
  for (const std::string& sets : config.overrides) apply_override(spec, sets);
  if (config.seed) spec.seed = *config.seed;
  return build_problem(spec, base_dir);
}

void write_residual_log(const std::string& path, const SolverState& state,
                        std::uint64_t seed) {
  std::ostringstream out;
  out << "# seed = " << seed << "\n";
  out << "iteration,max_residual,damping\n";
  for (const SolverState::LogRow& row : state.residual_log)
    out << row.iteration << "," << format_double(row.max_residual, false) << ","
        << format_double(row.damping, false) << "\n";
  write_text_file(path, out.str());
}

void write_slices(const RunConfig& config, const BuiltProblem& built,
                  const GridFunction& u, std::uint64_t seed) {
  const Grid& grid = *built.grid;
  const int d = grid.dim();
  for (int axis = 0; axis < d; ++axis) {
    std::ostringstream out;
    out << "# seed = " << seed << "\n";
    out << "x" << (axis + 1) << ",value\n";
    std::vector<int> idx(d);
    for (int a = 0; a < d; ++a) idx[a] = grid.nodes(a) / 2;
    for (int i = 0; i < grid.nodes(axis); ++i) {
      idx[axis] = i;
      out << format_double(grid.coordinate(axis, i), false) << ","
          << format_double(u.values[grid.flat_index(idx)], false) << "\n";
    }
    write_text_file(artifact_path(config, "slice_x" + std::to_string(axis + 1) + ".csv"),
                    out.str());
  }
}

struct PlaneSegment {
  double x0, y0, x1, y1;
};

/// Marching squares on the (axis0, axis1) mid-plane; ambiguous saddle cells
/// split by the cell-center average.
std::vector<PlaneSegment> level_set_segments(const Grid& grid, const GridFunction& u,
                                             double level) {
  const int d = grid.dim();
  std::vector<int> idx(d);
  for (int a = 0; a < d; ++a) idx[a] = grid.nodes(a) / 2;
  const int nx = grid.nodes(0), ny = grid.nodes(1);
  auto value_at = [&](int i, int j) {
    idx[0] = i;
    idx[1] = j;
    return u.values[grid.flat_index(idx)];
  };

  std::vector<PlaneSegment> segments;
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      const double va = value_at(i, j);      // bottom-left
      const double vb = value_at(i + 1, j);  // bottom-right
      const double vc = value_at(i + 1, j + 1);
      const double vd = value_at(i, j + 1);
      const int mask = (va >= level ? 1 : 0) | (vb >= level ? 2 : 0) |
                       (vc >= level ? 4 : 0) | (vd >= level ? 8 : 0);
      if (mask == 0 || mask == 15) continue;

      const double x0 = grid.coordinate(0, i), x1 = grid.coordinate(0, i + 1);
      const double y0 = grid.coordinate(1, j), y1 = grid.coordinate(1, j + 1);
      auto lerp = [level](double a, double b, double pa, double pb) {
        return pa + (pb - pa) * ((level - a) / (b - a));
      };
      // Crossing points on the four cell edges.
      const auto bottom = [&] { return std::pair{lerp(va, vb, x0, x1), y0}; };
      const auto top = [&] { return std::pair{lerp(vd, vc, x0, x1), y1}; };
      const auto left = [&] { return std::pair{lerp(va, vd, y0, y1), x0}; };
      const auto right = [&] { return std::pair{lerp(vb, vc, y0, y1), x1}; };
      auto push = [&](std::pair<double, double> h, bool h_is_vertical,
                      std::pair<double, double> t, bool t_is_vertical) {
        PlaneSegment s{};
        if (h_is_vertical) {
          s.x0 = h.second;
          s.y0 = h.first;
        } else {
          s.x0 = h.first;
          s.y0 = h.second;
        }
        if (t_is_vertical) {
          s.x1 = t.second;
          s.y1 = t.first;
        } else {
          s.x1 = t.first;
          s.y1 = t.second;
        }
        segments.push_back(s);
      };
      const auto B = [&](auto other, bool vert) { push(bottom(), false, other, vert); };

      switch (mask) {
        case 1: case 14: push(left(), true, bottom(), false); break;
        case 2: case 13: B(right(), true); break;
        case 3: case 12: push(left(), true, right(), true); break;
        case 4: case 11: push(right(), true, top(), false); break;
        case 6: case 9: B(top(), false); break;
        case 7: case 8: push(left(), true, top(), false); break;
        case 5: case 10: {
          const double center = 0.25 * (va + vb + vc + vd);
          const bool center_high = center >= level;
          const bool connect_a = (mask == 5) == center_high;
          if (connect_a) {
            push(left(), true, top(), false);
            B(right(), true);
          } else {
            push(left(), true, bottom(), false);
            push(right(), true, top(), false);
          }
          break;
        }
        default: break;
      }
    }
  }
  return segments;
}

void write_level_set(const RunConfig& config, const BuiltProblem& built,
                     const GridFunction& u, std::uint64_t seed) {
  const Grid& grid = *built.grid;
  if (grid.dim() < 2) return;
  // Level: midpoint of the value range on the plotted plane.
  const int d = grid.dim();
  std::vector<int> idx(d);
  for (int a = 0; a < d; ++a) idx[a] = grid.nodes(a) / 2;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < grid.nodes(0); ++i)
    for (int j = 0; j < grid.nodes(1); ++j) {
      idx[0] = i;
      idx[1] = j;
      const double v = u.values[grid.flat_index(idx)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double level = 0.5 * (lo + hi);

  std::ostringstream out;
  out << "# seed = " << seed << "\n";
  out << "# level = " << format_double(level, false) << "\n";
  out << "segment,x_a,y_a,x_b,y_b\n";
  const std::vector<PlaneSegment> segments = level_set_segments(grid, u, level);
  for (std::size_t s = 0; s < segments.size(); ++s)
    out << s << "," << format_double(segments[s].x0, false) << ","
        << format_double(segments[s].y0, false) << ","
        << format_double(segments[s].x1, false) << ","
        << format_double(segments[s].y1, false) << "\n";
  write_text_file(artifact_path(config, "levelset.csv"), out.str());
}

struct SolveArtifacts {
  BuiltProblem built;
  SolverState state;
  double max_error = -1.0;  // against the exact solution, when declared
};

SolveArtifacts run_solver(const RunConfig& config) {
  SolveArtifacts out{load_problem(config), {}, -1.0};
  log_info("solving '" + out.built.spec.name + "' on " +
           std::to_string(out.built.grid->total_nodes()) + " nodes");
  out.state = solve(out.built.problem, out.built.solver_config());
  for (const SolverState::LogRow& row : out.state.residual_log)
    log_debug("  iter " + std::to_string(row.iteration) + " residual " +
              std::to_string(row.max_residual) + " damping " + std::to_string(row.damping));
  if (out.built.has_exact() && out.state.u.values.size() > 0) {
    const GridFunction exact = out.built.exact_solution();
    out.max_error = (out.state.u.values - exact.values).cwiseAbs().maxCoeff();
  }
  return out;
}

void write_solution_artifacts(const RunConfig& config, const SolveArtifacts& art) {
  const std::uint64_t seed = art.built.spec.seed;
  GridIoOptions io;
  io.hex_floats = true;
  io.seed = static_cast<long long>(seed);
  if (art.state.u.values.size() > 0) {
    write_grid_function(art.state.u, artifact_path(config, "solution.csv"),
                        artifact_path(config, "solution.json"), io);
    write_slices(config, art.built, art.state.u, seed);
    write_level_set(config, art.built, art.state.u, seed);
  }
  write_residual_log(artifact_path(config, "residual_log.csv"), art.state, seed);
}

ordered_json solve_json(const SolveArtifacts& art) {
  ordered_json j;
  j["problem"] = spec_json(art.built.spec);
  j["converged"] = art.state.converged;
  j["iterations"] = art.state.iterations;
  j["final_max_residual"] =
      art.state.residual_log.empty() ? -1.0 : art.state.residual_log.back().max_residual;
  if (!art.state.failure_reason.empty()) j["failure_reason"] = art.state.failure_reason;
  if (art.max_error >= 0.0) j["max_error_vs_exact"] = art.max_error;
  j["policy_fallback_nodes"] = art.state.policy.fallback_nodes.size();
  return j;
}

int run_solve(const RunConfig& config) {
  SolveArtifacts art = run_solver(config);
  write_solution_artifacts(config, art);
  ordered_json report;
  report["command"] = "solve";
  report.update(solve_json(art));
  write_json_artifact(artifact_path(config, "report.json"), report);
  if (!art.state.converged) {
    write_error_json(config, 2, "solver did not converge: " + art.state.failure_reason);
    log_info("solve failed: " + art.state.failure_reason);
    return 2;
  }
  log_info("converged in " + std::to_string(art.state.iterations) + " iterations" +
           (art.max_error >= 0.0 ? ", max error " + std::to_string(art.max_error) : ""));
  return 0;
}

const char* convexity_kind_name(ConvexityKind kind) {
  switch (kind) {
    case ConvexityKind::not_certified: return "not_certified";
    case ConvexityKind::x_convex: return "x_convex";
    case ConvexityKind::uniformly_x_convex: return "uniformly_x_convex";
  }
  return "unknown";
}

int run_certify(const RunConfig& config) {
  SolveArtifacts art = run_solver(config);
  write_solution_artifacts(config, art);

  ordered_json report;
  report["command"] = "certify";
  report.update(solve_json(art));

  bool certified = art.state.converged;
  if (art.state.converged) {
    const ConvexityCertificate cert = certify_convexity(
        art.built.problem.table(), art.state.u, art.built.spec.gamma_floor);
    ordered_json cj;
    cj["kind"] = convexity_kind_name(cert.kind);
    cj["gamma"] = cert.gamma;
    cj["global_min_eigenvalue"] = cert.global_min;
    cj["tol_eig"] = cert.tol_eig;
    if (cert.violating_node >= 0) cj["violating_node"] = cert.violating_node;
    report["convexity"] = cj;
    certified = cert.kind == ConvexityKind::uniformly_x_convex;

    const Box half = centered_half_box(art.built.grid->box());
    const GradientBoundReport gb = gradient_bound(*art.built.frame, art.state.u, half);
    ordered_json gj;
    gj["C"] = gb.C;
    gj["argmax_node"] = gb.argmax_node;
    gj["nodes_checked"] = gb.checked_nodes.size();
    report["gradient_bound"] = gj;

    for (const auto& [level, name] :
         {std::pair{StrictnessLevel::log_level, "strictness_log_level"},
          std::pair{StrictnessLevel::det_power, "strictness_det_power"}}) {
      const StrictnessCertificate sc =
          certify_strict_subsolution(art.built.problem, art.state.u, half, level);
      ordered_json sj;
      sj["certified"] = sc.certified;
      sj["margin"] = sc.margin;
      if (sc.violating_node >= 0) sj["violating_node"] = sc.violating_node;
      sj["infeasible_nodes"] = sc.infeasible_nodes.size();
      report[name] = sj;
    }
  }
  write_json_artifact(artifact_path(config, "report.json"), report);
  if (!certified) {
    const std::string why = art.state.converged
                                ? "solution is not certified uniformly X-convex"
                                : "solver did not converge: " + art.state.failure_reason;
    write_error_json(config, 2, why);
    log_info("certify failed: " + why);
    return 2;
  }
  log_info("certified uniformly X-convex");
  return 0;
}

ordered_json comparison_json(const ComparisonReport& report) {
  ordered_json j;
  j["verdict"] = report.verdict;
  j["preconditions_ok"] = report.preconditions_ok;
  j["sup_gap"] = report.sup_gap;
  j["boundary_gap"] = report.boundary_gap;
  j["tol"] = report.tol;
  j["diagnostics"] = report.diagnostics;
  j["super_skipped_nodes"] = report.super_skipped_nodes.size();
  ordered_json ladder = ordered_json::array();
  for (const ComparisonReport::LadderRow& row : report.ladder) {
    ordered_json r;
    r["epsilon"] = row.epsilon;
    r["mu"] = row.mu;
    r["margin"] = row.margin;
    r["sup_gap"] = row.sup_gap;
    r["certified"] = row.certified;
    ladder.push_back(r);
  }
  j["epsilon_ladder"] = ladder;
  return j;
}

int run_compare(const RunConfig& config) {
  SolveArtifacts art = run_solver(config);
  write_solution_artifacts(config, art);

  ordered_json report;
  report["command"] = "compare";
  report.update(solve_json(art));

  if (!art.state.converged) {
    write_json_artifact(artifact_path(config, "report.json"), report);
    write_error_json(config, 2, "solver did not converge: " + art.state.failure_reason);
    return 2;
  }

  const double tol_cmp = 10.0 * art.built.spec.tol;
  const ComparisonReport self =
      verify_comparison(art.built.problem, art.state.u, art.state.u, tol_cmp);
  report["self_comparison"] = comparison_json(self);

  // Constant-shift pair: u - c stays a subsolution because H is
  // nondecreasing in u.
  GridFunction shifted = art.state.u;
  shifted.values.array() -= art.built.spec.compare_shift;
  const ComparisonReport pair =
      verify_comparison(art.built.problem, shifted, art.state.u, tol_cmp);
  report["shift_comparison"] = comparison_json(pair);
  report["compare_shift"] = art.built.spec.compare_shift;

  write_json_artifact(artifact_path(config, "report.json"), report);
  const bool ok = self.verdict && pair.verdict;
  if (!ok) {
    write_error_json(config, 2, "comparison verdict failed");
    log_info("compare failed");
    return 2;
  }
  log_info("comparison verdicts true (self, constant shift)");
  return 0;
}

int run_sweep(const RunConfig& config) {
  SolveArtifacts art = run_solver(config);
  write_solution_artifacts(config, art);

  ordered_json report;
  report["command"] = "sweep";
  report.update(solve_json(art));

  if (!art.state.converged) {
    write_json_artifact(artifact_path(config, "report.json"), report);
    write_error_json(config, 2, "solver did not converge: " + art.state.failure_reason);
    return 2;
  }

  const Box half = centered_half_box(art.built.grid->box());
  const double eps = art.built.spec.sweep_epsilon;
  const std::vector<SweepRow> rows = strictness_sweep(
      art.built.problem, art.state.u, half, eps, StrictnessLevel::det_power);

  std::ostringstream csv;
  csv << "# seed = " << art.built.spec.seed << "\n";
  csv << "mu,margin,certified,overflow,infeasible\n";
  ordered_json jrows = ordered_json::array();
  bool any_certified = false;
  for (const SweepRow& row : rows) {
    csv << format_double(row.mu, false) << "," << format_double(row.margin, false) << ","
        << (row.certified ? 1 : 0) << "," << (row.overflow ? 1 : 0) << ","
        << (row.infeasible ? 1 : 0) << "\n";
    ordered_json r;
    r["mu"] = row.mu;
    r["margin"] = row.margin;
    r["certified"] = row.certified;
    r["overflow"] = row.overflow;
    r["infeasible"] = row.infeasible;
    jrows.push_back(r);
    any_certified = any_certified || row.certified;
  }
  write_text_file(artifact_path(config, "sweep.csv"), csv.str());
  report["epsilon"] = eps;
  report["rows"] = jrows;
  report["any_certified"] = any_certified;
  write_json_artifact(artifact_path(config, "report.json"), report);

  if (!any_certified) {
    write_error_json(config, 2, "no mu in the ladder yields a positive strictness margin");
    log_info("sweep found no positive margin");
    return 2;
  }
  log_info("sweep found positive strictness margins");
  return 0;
}

int run_validate_frame(const RunConfig& config) {
  CarnotFrame frame = [&] {
    try {
      return builtin_frame(config.spec_path);
    } catch (const ValidationError&) {
      // Unchecked load: structurally broken files still produce a report.
      return load_frame_file(config.spec_path, false);
    }
  }();
  const FrameValidation validation = validate_frame(frame);

  ordered_json report;
  report["command"] = "validate-frame";
  report["frame"] = frame.name();
  report["layers"] = frame.signature().layer_dims;
  report["ok"] = validation.ok();
  report["rank_seed"] = validation.rank_seed;
  ordered_json failures = ordered_json::array();
  for (const FrameValidation::Failure& f : validation.failures) {
    ordered_json fj;
    fj["check"] = f.check;
    if (f.row > 0) {
      fj["row"] = f.row;
      fj["col"] = f.col;
    }
    fj["detail"] = f.detail;
    failures.push_back(fj);
  }
  report["failures"] = failures;
  write_json_artifact(artifact_path(config, "report.json"), report);

  log_info(validation.summary());
  if (!validation.ok()) {
    write_error_json(config, 2, validation.summary());
    return 2;
  }
  return 0;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    fs::create_directories(config.output_dir);
    if (config.command == "solve") return run_solve(config);
    if (config.command == "certify") return run_certify(config);
    if (config.command == "compare") return run_compare(config);
    if (config.command == "sweep") return run_sweep(config);
    if (config.command == "validate-frame") return run_validate_frame(config);
    write_error_json(config, 1, "unknown command '" + config.command + "'");
    std::cerr << "unknown command '" << config.command << "'\n";
    return 1;
  } catch (const Error& e) {
    write_error_json(config, 1, e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    write_error_json(config, 1, e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace subma
