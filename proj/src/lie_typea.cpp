#include "spinrs/lie_typea.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "spinrs/errors.hpp"

namespace spinrs {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 2) {
    throw DimensionError(std::string(what) + ": expected a square matrix of size >= 2");
  }
}

double scale_of(const Vector& v) {
  return std::max(1.0, v.cwiseAbs().maxCoeff());
}

}  // namespace

Dimension::Dimension(int n) : n_(n) {
  if (n < 1) throw DimensionError("Dimension: n must be >= 1");
}

// ---------------------------------------------------------------------------
// SimpleSubset

SimpleSubset::SimpleSubset(Dimension dim, const std::vector<int>& members)
    : dim_(dim), mask_(static_cast<std::size_t>(dim.n()), false) {
  for (int k : members) {
    if (k < 1 || k > dim.n()) {
      throw DimensionError("SimpleSubset: simple root index " +
                           std::to_string(k) + " outside 1.." +
                           std::to_string(dim.n()));
    }
    mask_[static_cast<std::size_t>(k - 1)] = true;
  }
}

SimpleSubset SimpleSubset::full(Dimension dim) {
  std::vector<int> all;
  for (int k = 1; k <= dim.n(); ++k) all.push_back(k);
  return SimpleSubset(dim, all);
}

SimpleSubset SimpleSubset::empty(Dimension dim) { return SimpleSubset(dim, {}); }

std::vector<SimpleSubset> SimpleSubset::all(Dimension dim) {
  std::vector<SimpleSubset> out;
  const unsigned count = 1u << dim.n();
  for (unsigned bits = 0; bits < count; ++bits) {
    std::vector<int> members;
    for (int k = 1; k <= dim.n(); ++k) {
      if (bits & (1u << (k - 1))) members.push_back(k);
    }
    out.emplace_back(dim, members);
  }
  return out;
}

bool SimpleSubset::is_full() const {
  for (bool b : mask_) {
    if (!b) return false;
  }
  return true;
}

bool SimpleSubset::contains(int k) const {
  return k >= 1 && k <= dim_.n() && mask_[static_cast<std::size_t>(k - 1)];
}

bool SimpleSubset::in_span(Root r) const {
  const int lo = std::min(r.i, r.j);
  const int hi = std::max(r.i, r.j);
  // alpha_lo,hi = alpha_{lo+1} + ... + alpha_hi in 1-based simple roots.
  for (int k = lo + 1; k <= hi; ++k) {
    if (!contains(k)) return false;
  }
  return true;
}

std::vector<int> SimpleSubset::members() const {
  std::vector<int> out;
  for (int k = 1; k <= dim_.n(); ++k) {
    if (contains(k)) out.push_back(k);
  }
  return out;
}

std::string SimpleSubset::label() const {
  if (is_full()) return "full";
  const auto m = members();
  if (m.empty()) return "empty";
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(m[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// CartanVector

CartanVector CartanVector::from(const Vector& entries) {
  if (entries.size() < 2) throw DimensionError("CartanVector: need at least 2 entries");
  if (!entries.allFinite()) throw InvariantError("CartanVector: non-finite entry");
  const Complex mean = entries.mean();
  if (std::abs(mean) > tolerance::kHard * scale_of(entries)) {
    throw InvariantError("CartanVector: entries do not sum to zero (mean " +
                         std::to_string(std::abs(mean)) + ")");
  }
  Vector v = entries;
  v.array() -= mean;
  return CartanVector(std::move(v));
}

CartanVector CartanVector::from_real(std::span<const double> entries) {
  Vector v(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) v(static_cast<Eigen::Index>(i)) = entries[i];
  return from(v);
}

CartanVector CartanVector::zero(Dimension dim) {
  return CartanVector(Vector::Zero(dim.size()));
}

bool CartanVector::is_real(double tol) const {
  return v_.imag().cwiseAbs().maxCoeff() <= tol;
}

double CartanVector::wall_distance(const SimpleSubset& subset) const {
  double best = std::numeric_limits<double>::infinity();
  const int size = this->size();
  for (int i = 0; i < size; ++i) {
    for (int j = i + 1; j < size; ++j) {
      if (!subset.in_span({i, j})) continue;
      const Complex a = v_(i) - v_(j);
      const double period = 2.0 * std::numbers::pi;
      const double k = std::round(a.imag() / period);
      best = std::min(best, std::abs(a - Complex(0.0, k * period)));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// AlgebraElement / GroupElement

AlgebraElement AlgebraElement::from(const Matrix& m) {
  require_square(m, "AlgebraElement");
  if (!m.allFinite()) throw InvariantError("AlgebraElement: non-finite entry");
  const auto n1 = static_cast<double>(m.rows());
  const Complex shift = m.trace() / n1;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (std::abs(shift) > tolerance::kHard * scale) {
    throw InvariantError("AlgebraElement: matrix is not traceless");
  }
  Matrix out = m;
  out.diagonal().array() -= shift;
  return AlgebraElement(std::move(out));
}

AlgebraElement AlgebraElement::zero(Dimension dim) {
  return AlgebraElement(Matrix::Zero(dim.size(), dim.size()));
}

GroupElement GroupElement::from(const Matrix& m) {
  require_square(m, "GroupElement");
  if (!m.allFinite()) throw InvariantError("GroupElement: non-finite entry");
  const Complex det = m.determinant();
  if (std::abs(det - 1.0) > tolerance::kHard) {
    throw InvariantError("GroupElement: determinant " + std::to_string(det.real()) +
                         (det.imag() >= 0 ? "+" : "") + std::to_string(det.imag()) +
                         "i is not 1");
  }
  if (std::abs(det - 1.0) <= std::numeric_limits<double>::epsilon()) {
    return GroupElement(m);
  }
  // Principal root of a number near 1 is the root nearest 1.
  const Complex root = std::pow(det, 1.0 / static_cast<double>(m.rows()));
  return GroupElement(m / root);
}

GroupElement GroupElement::identity(Dimension dim) {
  return GroupElement(Matrix::Identity(dim.size(), dim.size()));
}

GroupElement GroupElement::inverse() const { return GroupElement::from(m_.inverse()); }

// ---------------------------------------------------------------------------

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix adjoint_action(const Matrix& h, const Matrix& x) {
  return h * x * h.inverse();
}

Complex trace_pairing(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.cols() || x.cols() != y.rows()) {
    throw DimensionError("trace_pairing: size mismatch");
  }
  // tr(XY) = sum_ij X_ij Y_ji without forming the product.
  return (x.array() * y.transpose().array()).sum();
}

CartanVector proj_cartan(const Matrix& x) {
  require_square(x, "proj_cartan");
  Vector d = x.diagonal();
  d.array() -= d.mean();
  return CartanVector::from(d);
}

Matrix matrix_exp(const Matrix& x) {
  require_square(x, "matrix_exp");
  if (!x.allFinite()) throw RangeError("matrix_exp: non-finite input");
  // exp overflows double once the spectral abscissa passes ~709; the 1-norm
  // bounds it from above.
  if (x.cwiseAbs().colwise().sum().maxCoeff() > 700.0) {
    throw RangeError("matrix_exp: norm too large");
  }
  Matrix out = x.exp();
  if (!out.allFinite()) throw RangeError("matrix_exp: overflow");
  return out;
}

GroupElement exp_algebra(const AlgebraElement& x) {
  return GroupElement::from(matrix_exp(x.mat()));
}

LogPath log_diagonal_continuous(std::span<const Vector> diagonals,
                                const CartanVector& u0) {
  LogPath out;
  if (diagonals.empty()) return out;
  const int size = u0.size();
  const double two_pi = 2.0 * std::numbers::pi;
  const Vector e0 = u0.vec().array().exp();
  for (const auto& d : diagonals) {
    if (d.size() != size) throw DimensionError("log_diagonal_continuous: size mismatch");
  }
  if ((diagonals[0] - e0).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, e0.cwiseAbs().maxCoeff())) {
    throw ContinuityError("log_diagonal_continuous: path does not start at exp(u0)", 0.0);
  }
  out.u.push_back(u0);
  out.removed_trace.push_back(0.0);
  Vector prev = u0.vec();
  for (std::size_t k = 1; k < diagonals.size(); ++k) {
    const Vector& d = diagonals[k];
    const Vector& dp = diagonals[k - 1];
    Vector raw(size);
    for (int i = 0; i < size; ++i) {
      if (d(i) == Complex(0.0)) {
        throw SingularityError(i, i, 0.0);
      }
      const Complex ratio = d(i) / dp(i);
      if (std::abs(ratio - 1.0) >= 0.5) {
        throw ContinuityError("log_diagonal_continuous: step too large for an unambiguous branch",
                              static_cast<double>(k));
      }
      Complex l = std::log(d(i));
      const double wraps = std::round((prev(i).imag() - l.imag()) / two_pi);
      l += Complex(0.0, wraps * two_pi);
      raw(i) = l;
    }
    const Complex mean = raw.mean();
    prev = raw;
    Vector centred = raw;
    centred.array() -= mean;
    out.u.push_back(CartanVector::from(centred));
    out.removed_trace.push_back(mean);
  }
  return out;
}

Complex power_trace(const Matrix& g, int k) {
  require_square(g, "power_trace");
  if (k < 1) throw DimensionError("power_trace: power must be >= 1");
  Matrix p = g;
  for (int i = 1; i < k; ++i) p = p * g;
  return p.trace();
}

Complex eval_power_traces(const Matrix& g, const PowerTracePoly& poly) {
  Complex sum = 0.0;
  for (const auto& term : poly) sum += term.coeff * power_trace(g, term.power);
  return sum;
}

AlgebraElement invariant_gradient(const Matrix& g, const PowerTracePoly& poly) {
  require_square(g, "invariant_gradient");
  const auto size = g.rows();
  Matrix out = Matrix::Zero(size, size);
  int max_power = 0;
  for (const auto& term : poly) {
    if (term.power < 1) throw DimensionError("invariant_gradient: power must be >= 1");
    max_power = std::max(max_power, term.power);
  }
  if (max_power == 0) return AlgebraElement::from(out);
  std::vector<Matrix> powers{g};
  for (int k = 2; k <= max_power; ++k) powers.push_back(powers.back() * g);
  const Matrix id = Matrix::Identity(size, size);
  for (const auto& term : poly) {
    const Matrix& gk = powers[static_cast<std::size_t>(term.power - 1)];
    out += term.coeff * static_cast<double>(term.power) *
           (gk - gk.trace() / static_cast<double>(size) * id);
  }
  return AlgebraElement::from(out);
}

namespace {

// e_0..e_m from power sums p_1..p_m.
std::vector<Complex> elementary_from_power_sums(const std::vector<Complex>& p, int m) {
  std::vector<Complex> e(static_cast<std::size_t>(m + 1));
  e[0] = 1.0;
  for (int k = 1; k <= m; ++k) {
    Complex acc = 0.0;
    for (int i = 1; i <= k; ++i) {
      const double sign = (i % 2 == 1) ? 1.0 : -1.0;
      acc += sign * e[static_cast<std::size_t>(k - i)] * p[static_cast<std::size_t>(i)];
    }
    e[static_cast<std::size_t>(k)] = acc / static_cast<double>(k);
  }
  return e;
}

}  // namespace

std::vector<Complex> fundamental_characters(const Matrix& g) {
  require_square(g, "fundamental_characters");
  const int n = static_cast<int>(g.rows()) - 1;
  std::vector<Complex> p(static_cast<std::size_t>(n + 1));
  Matrix gk = g;
  for (int k = 1; k <= n; ++k) {
    if (k > 1) gk = gk * g;
    p[static_cast<std::size_t>(k)] = gk.trace();
  }
  const auto e = elementary_from_power_sums(p, n);
  return {e.begin() + 1, e.end()};
}

AlgebraElement character_gradient(const Matrix& g, int m) {
  require_square(g, "character_gradient");
  const auto size = g.rows();
  if (m < 1 || m >= size) throw DimensionError("character_gradient: index outside 1..N");
  std::vector<Matrix> powers{g};
  std::vector<Complex> p{0.0, g.trace()};
  for (int k = 2; k <= m; ++k) {
    powers.push_back(powers.back() * g);
    p.push_back(powers.back().trace());
  }
  const auto e = elementary_from_power_sums(p, m);
  const Matrix id = Matrix::Identity(size, size);
  Matrix out = Matrix::Zero(size, size);
  for (int k = 1; k <= m; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    const Matrix& gk = powers[static_cast<std::size_t>(k - 1)];
    out += sign * e[static_cast<std::size_t>(m - k)] *
           (gk - p[static_cast<std::size_t>(k)] / static_cast<double>(size) * id);
  }
  return AlgebraElement::from(out);
}

}  // namespace spinrs
