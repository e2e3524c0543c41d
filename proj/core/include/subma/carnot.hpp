#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subma/polynomial.hpp"

namespace subma {

/// Stratification of R^n into layers: layer k has dimension layer_dims[k-1]
/// and its coordinates carry anisotropic scaling weight k.
struct LayerSignature {
  std::vector<int> layer_dims;

  int step() const { return static_cast<int>(layer_dims.size()); }
  int total_dim() const;                 // n
  int generator_dim() const;             // m, first-layer dimension
  int weight(int coordinate) const;      // scaling weight of coordinate (0-based)
  std::vector<int> weights() const;      // all n weights

  /// Throws ValidationError unless every layer dimension is >= 1.
  void validate() const;
};

/// Anisotropic scaling: coordinate of weight w is multiplied by lambda^w.
struct Dilation {
  double lambda = 1.0;
  LayerSignature signature;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
};

/// A vector field with polynomial coefficients, one polynomial per
/// coordinate direction.
using PolyVectorField = std::vector<Polynomial>;

/// Commutator [X, Y] computed exactly in the polynomial ring.
PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y);

/// Result of frame validation; all checks are reported, none throw.
struct FrameValidation {
  struct Failure {
    std::string check;       // "triangular", "homogeneity", "degree", "rank"
    int row = -1, col = -1;  // offending sigma entry (1-based), if applicable
    std::string detail;
  };
  bool triangular_ok = true;
  bool homogeneity_ok = true;
  bool degree_ok = true;
  bool rank_ok = true;
  std::vector<Failure> failures;
  std::vector<Eigen::VectorXd> rank_samples;  // points where rank was tested
  std::uint64_t rank_seed = 0;

  bool ok() const { return triangular_ok && homogeneity_ok && degree_ok && rank_ok; }
  std::string summary() const;
};

/// Generator frame of a stratified group on R^n in canonical triangular form:
/// the j-th generator is d/dx_j plus, for rows i > m, polynomial coefficients
/// sigma(i,j) depending only on x_1..x_{i-1}. The implicit top block of the
/// n-by-m coefficient matrix is the identity, so the frame at the origin is
/// (I_m ; 0).
class CarnotFrame {
public:
  /// Validated construction: enforces triangular dependence, weighted
  /// homogeneity of each entry (weighted degree = weight(row) - 1) and total
  /// degree <= n - m. Throws ValidationError with the offending entry.
  static CarnotFrame create(LayerSignature sig,
                            std::map<std::pair<int, int>, Polynomial> sigma_polys,
                            std::string name);

  /// Construction without the exactness checks; used by the validator CLI so
  /// that broken frame files still produce a diagnostic report.
  static CarnotFrame create_unchecked(LayerSignature sig,
                                      std::map<std::pair<int, int>, Polynomial> sigma_polys,
                                      std::string name);

  const LayerSignature& signature() const { return sig_; }
  int n() const { return sig_.total_dim(); }
  int m() const { return sig_.generator_dim(); }
  const std::string& name() const { return name_; }

  /// Stored polynomial for entry (i, j), 1-based, i > m; zero if absent.
  const Polynomial& sigma_poly(int i, int j) const;

  /// The n-by-m coefficient matrix at x; rows 1..m are the identity.
  Eigen::MatrixXd sigma(const Eigen::VectorXd& x) const;

  /// Jacobians of the m columns at x, each n-by-n, by exact polynomial
  /// differentiation evaluated at x.
  std::vector<Eigen::MatrixXd> sigma_jacobians(const Eigen::VectorXd& x) const;

  /// The j-th generator (1-based) as a polynomial vector field.
  PolyVectorField generator(int j) const;

  bool is_euclidean() const { return sig_.step() == 1; }

private:
  CarnotFrame() = default;
  LayerSignature sig_;
  std::map<std::pair<int, int>, Polynomial> sigma_polys_;  // keys (i, j), 1-based
  std::string name_;
  Polynomial zero_;
};

struct FrameValidationOptions {
  int rank_sample_count = 8;       // pseudo-random points on top of the origin
  double rank_sample_radius = 1.0;
  std::uint64_t seed = 20240915;
  double rank_tolerance = 1e-9;
};

/// Full validation report: triangular dependence, weighted homogeneity,
/// degree bound, and the spanning condition for iterated commutators of the
/// generators, tested at the origin plus seeded sample points.
FrameValidation validate_frame(const CarnotFrame& frame,
                               const FrameValidationOptions& opts = {});

/// Built-in frames: "euclidean<N>" for any N >= 1, and "heisenberg1".
/// Throws ValidationError for unknown names.
CarnotFrame builtin_frame(const std::string& name);

/// Parse a frame definition (key-value text, see docs/formats.md).
/// `checked` selects create() vs create_unchecked().
CarnotFrame parse_frame_text(const std::string& text, bool checked = true);
CarnotFrame load_frame_file(const std::string& path, bool checked = true);

}  // namespace subma
