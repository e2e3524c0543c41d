#include "subma/grid.hpp"

#include <cmath>

#include "subma/errors.hpp"

namespace subma {

void Box::validate() const {
  if (lo.size() != hi.size()) throw ValidationError("box lo/hi dimensions differ");
  if (lo.size() == 0) throw ValidationError("box must have positive dimension");
  for (int i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]))
      throw ValidationError("box axis " + std::to_string(i + 1) + " is empty: [" +
                            std::to_string(lo[i]) + ", " + std::to_string(hi[i]) + "]");
}

bool Box::contains(const Eigen::VectorXd& x, double slack) const {
  if (x.size() != lo.size()) return false;
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  return true;
}

Grid::Grid(Box box, std::vector<int> resolution)
    : box_(std::move(box)), resolution_(std::move(resolution)) {
  box_.validate();
  if (static_cast<int>(resolution_.size()) != box_.dim())
    throw ValidationError("resolution has " + std::to_string(resolution_.size()) +
                          " axes, box has " + std::to_string(box_.dim()));
  for (std::size_t a = 0; a < resolution_.size(); ++a)
    if (resolution_[a] < 3)
      throw ValidationError("axis " + std::to_string(a + 1) + " has " +
                            std::to_string(resolution_[a]) + " nodes, need at least 3");

  const int d = dim();
  spacing_.resize(d);
  stride_.resize(d);
  total_ = 1;
  for (int a = 0; a < d; ++a) {
    spacing_[a] = (box_.hi[a] - box_.lo[a]) / (resolution_[a] - 1);
    stride_[a] = total_;
    total_ *= resolution_[a];
  }

  interior_.reserve(static_cast<std::size_t>(total_));
  std::vector<int> idx(d, 0);
  for (Eigen::Index flat = 0; flat < total_; ++flat) {
    bool on_face = false;
    for (int a = 0; a < d; ++a)
      if (idx[a] == 0 || idx[a] == resolution_[a] - 1) {
        on_face = true;
        break;
      }
    (on_face ? boundary_ : interior_).push_back(flat);
    for (int a = 0; a < d; ++a) {
      if (++idx[a] < resolution_[a]) break;
      idx[a] = 0;
    }
  }
}

double Grid::min_spacing() const {
  double h = spacing_[0];
  for (double s : spacing_) h = std::min(h, s);
  return h;
}

Eigen::Index Grid::flat_index(const std::vector<int>& idx) const {
  Eigen::Index flat = 0;
  for (int a = 0; a < dim(); ++a) flat += static_cast<Eigen::Index>(idx[a]) * stride_[a];
  return flat;
}

std::vector<int> Grid::multi_index(Eigen::Index flat) const {
  std::vector<int> idx(dim());
  for (int a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>(flat % resolution_[a]);
    flat /= resolution_[a];
  }
  return idx;
}

double Grid::coordinate(int axis, int i) const {
  if (i == 0) return box_.lo[axis];
  if (i == resolution_[axis] - 1) return box_.hi[axis];
  return box_.lo[axis] + i * spacing_[axis];
}

Eigen::VectorXd Grid::point(const std::vector<int>& idx) const {
  Eigen::VectorXd x(dim());
  for (int a = 0; a < dim(); ++a) x[a] = coordinate(a, idx[a]);
  return x;
}

bool Grid::is_boundary(const std::vector<int>& idx) const {
  for (int a = 0; a < dim(); ++a)
    if (idx[a] == 0 || idx[a] == resolution_[a] - 1) return true;
  return false;
}

void GridFunction::validate() const {
  if (!grid) throw ValidationError("grid function has no grid");
  if (values.size() != grid->total_nodes())
    throw ValidationError("grid function has " + std::to_string(values.size()) +
                          " values for " + std::to_string(grid->total_nodes()) + " nodes");
  if (!values.allFinite()) throw ValidationError("grid function has non-finite values");
}

GridFunction sample(std::shared_ptr<const Grid> grid,
                    const std::function<double(const Eigen::VectorXd&)>& f) {
  GridFunction u;
  u.values.resize(grid->total_nodes());
  for (Eigen::Index i = 0; i < grid->total_nodes(); ++i) u.values[i] = f(grid->point(i));
  u.grid = std::move(grid);
  return u;
}

}  // namespace subma
