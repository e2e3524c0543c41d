#include "subma/carnot.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "subma/errors.hpp"
#include "subma/expression.hpp"
#include "subma/random.hpp"

namespace subma {

int LayerSignature::total_dim() const {
  int n = 0;
  for (int d : layer_dims) n += d;
  return n;
}

int LayerSignature::generator_dim() const {
  return layer_dims.empty() ? 0 : layer_dims.front();
}

int LayerSignature::weight(int coordinate) const {
  int offset = 0;
  for (std::size_t k = 0; k < layer_dims.size(); ++k) {
    offset += layer_dims[k];
    if (coordinate < offset) return static_cast<int>(k) + 1;
  }
  throw ValidationError("coordinate index " + std::to_string(coordinate) +
                        " outside signature of dimension " + std::to_string(total_dim()));
}

std::vector<int> LayerSignature::weights() const {
  std::vector<int> w;
  w.reserve(total_dim());
  for (std::size_t k = 0; k < layer_dims.size(); ++k)
    for (int i = 0; i < layer_dims[k]; ++i) w.push_back(static_cast<int>(k) + 1);
  return w;
}

void LayerSignature::validate() const {
  if (layer_dims.empty())
    throw ValidationError("layer signature must have at least one layer");
  for (std::size_t k = 0; k < layer_dims.size(); ++k)
    if (layer_dims[k] < 1)
      throw ValidationError("layer " + std::to_string(k + 1) +
                            " has non-positive dimension " + std::to_string(layer_dims[k]));
}

Eigen::VectorXd Dilation::operator()(const Eigen::VectorXd& x) const {
  const int n = signature.total_dim();
  if (x.size() != n)
    throw ValidationError("dilation applied to point of wrong dimension");
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::pow(lambda, signature.weight(i)) * x[i];
  return y;
}

PolyVectorField lie_bracket(const PolyVectorField& X, const PolyVectorField& Y) {
  if (X.size() != Y.size())
    throw ValidationError("lie_bracket of fields with different dimensions");
  const int n = static_cast<int>(X.size());
  PolyVectorField Z;
  Z.reserve(n);
  for (int i = 0; i < n; ++i) {
    Polynomial zi(n);
    for (int k = 0; k < n; ++k) {
      if (!X[k].is_zero()) zi = zi + X[k] * Y[i].derivative(k);
      if (!Y[k].is_zero()) zi = zi - Y[k] * X[i].derivative(k);
    }
    Z.push_back(std::move(zi));
  }
  return Z;
}

namespace {

std::string entry_name(int i, int j) {
  return "sigma[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

void check_entry_ranges(const LayerSignature& sig,
                        const std::map<std::pair<int, int>, Polynomial>& polys) {
  const int n = sig.total_dim();
  const int m = sig.generator_dim();
  for (const auto& [key, poly] : polys) {
    const auto [i, j] = key;
    if (i <= m || i > n || j < 1 || j > m)
      throw ValidationError(entry_name(i, j) + " outside the lower block (rows " +
                            std::to_string(m + 1) + ".." + std::to_string(n) +
                            ", columns 1.." + std::to_string(m) + ")");
    if (poly.nvars() != n && !poly.is_zero())
      throw ValidationError(entry_name(i, j) + " declared over " +
                            std::to_string(poly.nvars()) + " variables, expected " +
                            std::to_string(n));
  }
}

struct EntryCheck {
  bool triangular_ok = true;
  bool homogeneity_ok = true;
  bool degree_ok = true;
  std::string detail;
};

EntryCheck check_entry(const LayerSignature& sig, int i, int /*j*/, const Polynomial& p,
                       std::span<const int> weights) {
  EntryCheck c;
  if (p.max_variable() >= i - 1) {
    c.triangular_ok = false;
    c.detail = "depends on x" + std::to_string(p.max_variable() + 1) +
               ", allowed variables are x1..x" + std::to_string(i - 1);
    return c;
  }
  const int target = sig.weight(i - 1) - 1;
  if (!p.is_weighted_homogeneous(weights, target)) {
    c.homogeneity_ok = false;
    c.detail = "not weighted-homogeneous of degree " + std::to_string(target);
    return c;
  }
  const int max_deg = sig.total_dim() - sig.generator_dim();
  if (p.degree() > max_deg) {
    c.degree_ok = false;
    c.detail = "total degree " + std::to_string(p.degree()) + " exceeds bound " +
               std::to_string(max_deg);
  }
  return c;
}

}  // namespace

CarnotFrame CarnotFrame::create(LayerSignature sig,
                                std::map<std::pair<int, int>, Polynomial> sigma_polys,
                                std::string name) {
  sig.validate();
  check_entry_ranges(sig, sigma_polys);
  const std::vector<int> weights = sig.weights();
  for (const auto& [key, poly] : sigma_polys) {
    const auto [i, j] = key;
    const EntryCheck c = check_entry(sig, i, j, poly, weights);
    if (!c.triangular_ok || !c.homogeneity_ok || !c.degree_ok)
      throw ValidationError(entry_name(i, j) + ": " + c.detail);
  }
  return create_unchecked(std::move(sig), std::move(sigma_polys), std::move(name));
}

CarnotFrame CarnotFrame::create_unchecked(LayerSignature sig,
                                          std::map<std::pair<int, int>, Polynomial> sigma_polys,
                                          std::string name) {
  sig.validate();
  check_entry_ranges(sig, sigma_polys);
  CarnotFrame f;
  f.sig_ = std::move(sig);
  f.name_ = std::move(name);
  f.zero_ = Polynomial(f.sig_.total_dim());
  // Drop stored zeros so sigma_poly() has one canonical representation.
  for (auto& [key, poly] : sigma_polys)
    if (!poly.is_zero()) f.sigma_polys_.emplace(key, std::move(poly));
  return f;
}

const Polynomial& CarnotFrame::sigma_poly(int i, int j) const {
  const auto it = sigma_polys_.find({i, j});
  return it == sigma_polys_.end() ? zero_ : it->second;
}

Eigen::MatrixXd CarnotFrame::sigma(const Eigen::VectorXd& x) const {
  const int nn = n(), mm = m();
  if (x.size() != nn)
    throw ValidationError("sigma evaluated at point of wrong dimension");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nn, mm);
  s.topRows(mm).setIdentity();
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(nn));
  for (const auto& [key, poly] : sigma_polys_)
    s(key.first - 1, key.second - 1) = poly.eval(xs);
  return s;
}

std::vector<Eigen::MatrixXd> CarnotFrame::sigma_jacobians(const Eigen::VectorXd& x) const {
  const int nn = n(), mm = m();
  if (x.size() != nn)
    throw ValidationError("sigma_jacobians evaluated at point of wrong dimension");
  std::vector<Eigen::MatrixXd> jac(mm, Eigen::MatrixXd::Zero(nn, nn));
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(nn));
  for (const auto& [key, poly] : sigma_polys_) {
    const auto [i, j] = key;
    for (int k = 0; k < i - 1; ++k) {
      const Polynomial d = poly.derivative(k);
      if (!d.is_zero()) jac[j - 1](i - 1, k) = d.eval(xs);
    }
  }
  return jac;
}

PolyVectorField CarnotFrame::generator(int j) const {
  const int nn = n(), mm = m();
  if (j < 1 || j > mm)
    throw ValidationError("generator index " + std::to_string(j) + " outside 1.." +
                          std::to_string(mm));
  PolyVectorField X(nn, Polynomial(nn));
  X[j - 1] = Polynomial::constant(nn, 1.0);
  for (int i = mm + 1; i <= nn; ++i) {
    const Polynomial& p = sigma_poly(i, j);
    if (!p.is_zero()) X[i - 1] = p;
  }
  return X;
}

std::string FrameValidation::summary() const {
  if (ok()) return "frame valid";
  std::ostringstream out;
  out << "frame invalid:";
  for (const auto& f : failures) {
    out << "\n  [" << f.check << "]";
    if (f.row > 0) out << " sigma[" << f.row << "," << f.col << "]";
    out << " " << f.detail;
  }
  return out.str();
}

FrameValidation validate_frame(const CarnotFrame& frame, const FrameValidationOptions& opts) {
  FrameValidation report;
  report.rank_seed = opts.seed;
  const LayerSignature& sig = frame.signature();
  const int n = sig.total_dim();
  const int m = sig.generator_dim();
  const std::vector<int> weights = sig.weights();

  for (int i = m + 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const Polynomial& p = frame.sigma_poly(i, j);
      if (p.is_zero()) continue;
      const EntryCheck c = check_entry(sig, i, j, p, weights);
      if (c.triangular_ok && c.homogeneity_ok && c.degree_ok) continue;
      FrameValidation::Failure f;
      f.row = i;
      f.col = j;
      f.detail = c.detail;
      if (!c.triangular_ok) {
        f.check = "triangular";
        report.triangular_ok = false;
      } else if (!c.homogeneity_ok) {
        f.check = "homogeneity";
        report.homogeneity_ok = false;
      } else {
        f.check = "degree";
        report.degree_ok = false;
      }
      report.failures.push_back(std::move(f));
    }
  }

  // Spanning condition: iterated commutators of the generators up to length
  // `step` must span R^n at every sample point. The fields are exact
  // polynomials, so failures here are structural, not numerical.
  std::vector<PolyVectorField> fields;
  for (int j = 1; j <= m; ++j) fields.push_back(frame.generator(j));
  std::vector<PolyVectorField> previous = fields;
  for (int depth = 2; depth <= sig.step(); ++depth) {
    std::vector<PolyVectorField> next;
    for (int j = 1; j <= m; ++j)
      for (const auto& w : previous) next.push_back(lie_bracket(frame.generator(j), w));
    for (auto& w : next) fields.push_back(w);
    previous = std::move(next);
  }

  Rng rng(opts.seed);
  report.rank_samples.push_back(Eigen::VectorXd::Zero(n));
  for (int s = 0; s < opts.rank_sample_count; ++s) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
      x[i] = rng.uniform(-opts.rank_sample_radius, opts.rank_sample_radius);
    report.rank_samples.push_back(std::move(x));
  }

  for (const auto& x : report.rank_samples) {
    Eigen::MatrixXd span_matrix(n, static_cast<int>(fields.size()));
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < fields.size(); ++c)
      for (int i = 0; i < n; ++i) span_matrix(i, static_cast<int>(c)) = fields[c][i].eval(xs);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(span_matrix);
    qr.setThreshold(opts.rank_tolerance);
    if (qr.rank() < n) {
      std::ostringstream point;
      point << "rank " << qr.rank() << " < " << n << " at (" << x.transpose() << ")";
      report.rank_ok = false;
      report.failures.push_back({"rank", -1, -1, point.str()});
    }
  }
  return report;
}

CarnotFrame builtin_frame(const std::string& name) {
  if (name.rfind("euclidean", 0) == 0) {
    const std::string tail = name.substr(9);
    if (!tail.empty() &&
        std::all_of(tail.begin(), tail.end(), [](unsigned char c) { return std::isdigit(c); })) {
      const int n = std::stoi(tail);
      if (n >= 1) return CarnotFrame::create({{n}}, {}, name);
    }
    throw ValidationError("unknown builtin frame '" + name + "' (expected euclidean<N>, N >= 1)");
  }
  if (name == "heisenberg1") {
    const int n = 3;
    std::map<std::pair<int, int>, Polynomial> sigma;
    sigma[{3, 1}] = Polynomial::variable(n, 1) * -0.5;  // -x2/2
    sigma[{3, 2}] = Polynomial::variable(n, 0) * 0.5;   //  x1/2
    return CarnotFrame::create({{2, 1}}, std::move(sigma), name);
  }
  throw ValidationError("unknown builtin frame '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::pair<int, int> parse_sigma_key(const std::string& key, int line) {
  // key looks like sigma[i,j]
  const std::size_t open = key.find('[');
  const std::size_t comma = key.find(',', open);
  const std::size_t close = key.find(']', comma);
  if (open == std::string::npos || comma == std::string::npos || close == std::string::npos)
    throw ParseError(line, "malformed sigma entry '" + key + "', expected sigma[i,j]");
  try {
    const int i = std::stoi(trim(key.substr(open + 1, comma - open - 1)));
    const int j = std::stoi(trim(key.substr(comma + 1, close - comma - 1)));
    return {i, j};
  } catch (const std::exception&) {
    throw ParseError(line, "malformed sigma indices in '" + key + "'");
  }
}

}  // namespace

CarnotFrame parse_frame_text(const std::string& text, bool checked) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string name;
  std::optional<LayerSignature> sig;
  std::vector<std::string> variables;
  std::map<std::pair<int, int>, Polynomial> sigma;

  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "name") {
      name = value;
    } else if (key == "layers") {
      LayerSignature s;
      std::istringstream vals(value);
      int d = 0;
      while (vals >> d) s.layer_dims.push_back(d);
      if (!vals.eof())
        throw ParseError(lineno, "layers must be a list of integers, got '" + value + "'");
      try {
        s.validate();
      } catch (const ValidationError& e) {
        throw ParseError(lineno, e.what());
      }
      sig = std::move(s);
      variables.clear();
      for (int i = 1; i <= sig->total_dim(); ++i) variables.push_back("x" + std::to_string(i));
    } else if (key.rfind("sigma", 0) == 0) {
      if (!sig) throw ParseError(lineno, "sigma entry before layers");
      const auto ij = parse_sigma_key(key, lineno);
      try {
        const Expression expr = Expression::parse(value, variables);
        sigma[ij] = expr.to_polynomial(sig->total_dim());
      } catch (const ValidationError& e) {
        throw ParseError(lineno, e.what());
      }
    } else {
      throw ParseError(lineno, "unknown key '" + key + "'");
    }
  }

  if (!sig) throw ParseError(lineno, "frame definition has no layers entry");
  if (name.empty()) name = "unnamed";
  try {
    return checked ? CarnotFrame::create(*sig, std::move(sigma), std::move(name))
                   : CarnotFrame::create_unchecked(*sig, std::move(sigma), std::move(name));
  } catch (const ValidationError& e) {
    throw ParseError(lineno, e.what());
  }
}

CarnotFrame load_frame_file(const std::string& path, bool checked) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open frame file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_frame_text(buf.str(), checked);
}

}  // namespace subma
