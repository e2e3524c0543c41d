#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

namespace subma {

/// Axis-aligned box [lo_1, hi_1] x ... x [lo_n, hi_n].
struct Box {
  Eigen::VectorXd lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;  // throws ValidationError when hi <= lo on some axis
  bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

/// Uniform rectangular lattice on a box. `resolution` counts nodes per axis
/// (>= 3 so interior second differences exist); node (N-1) on each axis lands
/// exactly on the box face. Flat indices run with axis 0 fastest.
class Grid {
public:
  Grid(Box box, std::vector<int> resolution);

  const Box& box() const { return box_; }
  int dim() const { return box_.dim(); }
  int nodes(int axis) const { return resolution_[axis]; }
  const std::vector<int>& resolution() const { return resolution_; }
  Eigen::Index total_nodes() const { return total_; }
  double spacing(int axis) const { return spacing_[axis]; }
  double min_spacing() const;

  Eigen::Index flat_index(const std::vector<int>& idx) const;
  std::vector<int> multi_index(Eigen::Index flat) const;
  Eigen::VectorXd point(const std::vector<int>& idx) const;
  Eigen::VectorXd point(Eigen::Index flat) const { return point(multi_index(flat)); }
  double coordinate(int axis, int i) const;

  bool is_boundary(const std::vector<int>& idx) const;
  bool is_boundary(Eigen::Index flat) const { return is_boundary(multi_index(flat)); }

  /// Flat indices of interior / boundary nodes, ascending; built once.
  const std::vector<Eigen::Index>& interior_nodes() const { return interior_; }
  const std::vector<Eigen::Index>& boundary_nodes() const { return boundary_; }

  /// Flat index of the neighbor displaced by `offset` nodes along `axis`.
  /// Caller guarantees the neighbor exists.
  Eigen::Index neighbor(Eigen::Index flat, int axis, int offset) const {
    return flat + static_cast<Eigen::Index>(offset) * stride_[axis];
  }
  Eigen::Index stride(int axis) const { return stride_[axis]; }

  bool operator==(const Grid& other) const {
    return resolution_ == other.resolution_ && box_.lo == other.box_.lo &&
           box_.hi == other.box_.hi;
  }

private:
  Box box_;
  std::vector<int> resolution_;
  std::vector<double> spacing_;
  std::vector<Eigen::Index> stride_;
  Eigen::Index total_ = 0;
  std::vector<Eigen::Index> interior_, boundary_;
};

/// Scalar field sampled at every lattice node.
struct GridFunction {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd values;  // one entry per node, flat order

  /// Throws ValidationError when sizes disagree or values are not finite.
  void validate() const;
};

/// Sample a callable at every node.
GridFunction sample(std::shared_ptr<const Grid> grid,
                    const std::function<double(const Eigen::VectorXd&)>& f);

}  // namespace subma
