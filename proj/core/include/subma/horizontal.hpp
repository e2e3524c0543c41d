#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "subma/carnot.hpp"
#include "subma/grid.hpp"

namespace subma {

/// Full-space gradient and Hessian at a node from 2nd-order central
/// differences (4-point cross stencil for mixed entries).
struct EuclideanJet {
  Eigen::VectorXd gradient;  // n
  Eigen::MatrixXd hessian;   // n x n, symmetric by construction
};

/// Throws ValidationError at boundary nodes (a neighbor would be missing).
EuclideanJet euclid_jet(const GridFunction& u, Eigen::Index node);

/// First-order correction making the symmetrized horizontal Hessian exact:
/// S = sigma^T D^2u sigma + Q(x, Du), with
/// Q_ij = (J sigma_j sigma_i + J sigma_i sigma_j) . Du / 2.
Eigen::MatrixXd q_matrix(const CarnotFrame& frame, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& Du);

/// Horizontal gradient and symmetrized horizontal Hessian.
struct HorizontalJet {
  Eigen::VectorXd p;  // m, sigma^T Du
  Eigen::MatrixXd S;  // m x m, symmetric
};

HorizontalJet horizontal_jet(const CarnotFrame& frame, const GridFunction& u,
                             Eigen::Index node);

/// Per-node frame data frozen for one grid: sigma matrices and the Q
/// coefficient vectors, so inner solver loops avoid re-evaluating
/// polynomials. Covers interior nodes only.
class FrameTable {
public:
  FrameTable(std::shared_ptr<const CarnotFrame> frame, std::shared_ptr<const Grid> grid);

  const CarnotFrame& frame() const { return *frame_; }
  const std::shared_ptr<const CarnotFrame>& frame_ptr() const { return frame_; }
  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }

  Eigen::Index interior_count() const { return static_cast<Eigen::Index>(sigmas_.size()); }
  /// Position of a flat node index within interior_nodes(), or -1.
  Eigen::Index interior_position(Eigen::Index flat) const { return positions_[flat]; }

  const Eigen::MatrixXd& sigma_at(Eigen::Index pos) const { return sigmas_[pos]; }
  /// Q(x, Du) at interior position `pos`; zero matrix when the frame has no
  /// lower-layer polynomial dependence (e.g. Euclidean, Heisenberg).
  Eigen::MatrixXd q_at(Eigen::Index pos, const Eigen::VectorXd& Du) const;
  bool q_is_zero() const { return q_identically_zero_; }

  HorizontalJet jet(const GridFunction& u, Eigen::Index flat) const;
  HorizontalJet jet(const EuclideanJet& ej, Eigen::Index pos) const;

private:
  std::shared_ptr<const CarnotFrame> frame_;
  std::shared_ptr<const Grid> grid_;
  std::vector<Eigen::Index> positions_;
  std::vector<Eigen::MatrixXd> sigmas_;  // per interior node, n x m
  // Per interior node, m(m+1)/2 rows of Q coefficients: Q_ij = row . Du
  // for i <= j in row-packed order (1,1), (1,2), ..., (m,m).
  std::vector<Eigen::MatrixXd> qcoefs_;
  bool q_identically_zero_ = true;
};

enum class ConvexityKind { not_certified, x_convex, uniformly_x_convex };

struct ConvexityCertificate {
  ConvexityKind kind = ConvexityKind::not_certified;
  double gamma = 0.0;                 // certified uniform-convexity constant
  Eigen::VectorXd min_eigen_field;    // per interior node (table order)
  double global_min = 0.0;
  Eigen::Index violating_node = -1;   // flat index, set when not certified
  double tol_eig = 0.0;               // spectral slack used by the check
};

/// Eigenvalue check of the discrete horizontal Hessian at every interior
/// node. Certifies uniformly_x_convex with gamma = global minimum when
/// gamma_request > 0 and the minimum reaches it; x_convex when the minimum
/// is >= -tol_eig with tol_eig = 1e-8 (1 + max|u|) / h_min^2; otherwise
/// not_certified with the violating node recorded.
ConvexityCertificate certify_convexity(const FrameTable& table, const GridFunction& u,
                                       double gamma_request);
ConvexityCertificate certify_convexity(const CarnotFrame& frame, const GridFunction& u,
                                       double gamma_request);

double convexity_tolerance(const Grid& grid, const Eigen::VectorXd& values);

}  // namespace subma
