#pragma once

// Type-A primitives for sl(N+1) / SL(N+1) with the trace pairing (A,B) = tr(AB).
// The Cartan subalgebra h is identified with h* through the same pairing, so a
// Cartan element is stored as the zero-sum vector of its diagonal.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spinrs {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Tolerances for the zero-sum / traceless / det-1 invariants. Values within
/// `exact` are considered on the constraint, anything up to `hard` is projected
/// back, beyond that construction fails.
namespace tolerance {
inline constexpr double kZeroSum = 1e-12;
inline constexpr double kDet = 1e-10;
inline constexpr double kHard = 1e-6;
inline constexpr double kWall = 1e-8;
}  // namespace tolerance

/// N of SL(N+1).
class Dimension {
 public:
  explicit Dimension(int n);
  int n() const { return n_; }
  int size() const { return n_ + 1; }
  friend bool operator==(Dimension, Dimension) = default;

 private:
  int n_;
};

/// The root alpha_ij = e_i - e_j, with root vector E_ij. Indices are 0-based.
struct Root {
  int i;
  int j;
  bool positive() const { return i < j; }
  Root opposite() const { return {j, i}; }
  friend bool operator==(Root, Root) = default;
};

/// A subset pi' of the simple roots {alpha_1, ..., alpha_N} (1-based;
/// alpha_k = e_{k-1} - e_k).
class SimpleSubset {
 public:
  SimpleSubset(Dimension dim, const std::vector<int>& members);
  static SimpleSubset full(Dimension dim);
  static SimpleSubset empty(Dimension dim);
  /// All 2^N subsets, ordered by bitmask.
  static std::vector<SimpleSubset> all(Dimension dim);

  Dimension dim() const { return dim_; }
  bool is_full() const;
  bool contains(int k) const;
  /// True iff every simple root between i and j belongs to the subset.
  bool in_span(Root r) const;
  std::vector<int> members() const;
  /// "full", "empty" or a comma separated member list.
  std::string label() const;

 private:
  Dimension dim_;
  std::vector<bool> mask_;
};

/// A point of U in h* ~ h: zero-sum vector of length N+1.
class CartanVector {
 public:
  /// Projects onto the zero-sum hyperplane; throws InvariantError if the
  /// entry mean exceeds the hard limit.
  static CartanVector from(const Vector& entries);
  static CartanVector from_real(std::span<const double> entries);
  static CartanVector zero(Dimension dim);

  int size() const { return static_cast<int>(v_.size()); }
  Dimension dim() const { return Dimension(size() - 1); }
  Complex operator[](int i) const { return v_(i); }
  const Vector& vec() const { return v_; }
  Matrix as_matrix() const { return v_.asDiagonal(); }
  bool is_real(double tol = 0.0) const;

  /// alpha_ij(q) = q_i - q_j.
  Complex root_value(Root r) const { return v_(r.i) - v_(r.j); }
  /// Minimum over roots in the span of `subset` of the distance from
  /// alpha(q) to the pole set 2*pi*i*Z. +inf if the span is empty.
  double wall_distance(const SimpleSubset& subset) const;
  bool regular(const SimpleSubset& subset,
               double wall_tol = tolerance::kWall) const {
    return wall_distance(subset) > wall_tol;
  }

 private:
  explicit CartanVector(Vector v) : v_(std::move(v)) {}
  Vector v_;
};

/// Traceless (N+1)x(N+1) complex matrix.
class AlgebraElement {
 public:
  static AlgebraElement from(const Matrix& m);
  static AlgebraElement zero(Dimension dim);

  const Matrix& mat() const { return m_; }
  operator const Matrix&() const { return m_; }
  Dimension dim() const { return Dimension(static_cast<int>(m_.rows()) - 1); }

 private:
  explicit AlgebraElement(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Determinant-one (N+1)x(N+1) complex matrix.
class GroupElement {
 public:
  /// Rescales by an (N+1)-th root of det (the one nearest 1) when the
  /// determinant is off by less than the hard limit.
  static GroupElement from(const Matrix& m);
  static GroupElement identity(Dimension dim);

  const Matrix& mat() const { return m_; }
  operator const Matrix&() const { return m_; }
  Dimension dim() const { return Dimension(static_cast<int>(m_.rows()) - 1); }
  GroupElement inverse() const;

 private:
  explicit GroupElement(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

Matrix commutator(const Matrix& a, const Matrix& b);
/// Ad_h X = h X h^{-1}.
Matrix adjoint_action(const Matrix& h, const Matrix& x);

/// tr(X Y).
Complex trace_pairing(const Matrix& x, const Matrix& y);

/// Orthogonal projection onto h: the diagonal with its mean removed.
CartanVector proj_cartan(const Matrix& x);

/// Matrix exponential of a general square matrix.
Matrix matrix_exp(const Matrix& x);
/// exp of a traceless matrix, returned as a det-1 group element.
GroupElement exp_algebra(const AlgebraElement& x);

struct LogPath {
  std::vector<CartanVector> u;
  /// Mean removed from each raw logarithm (vanishes for det-1 input).
  std::vector<Complex> removed_trace;
};

/// Branch-continuous entrywise logarithm of a path of diagonals, anchored so
/// that the first output is exactly u0. Consecutive entries must satisfy
/// |d_k/d_{k-1} - 1| < 0.5.
LogPath log_diagonal_continuous(std::span<const Vector> diagonals,
                                const CartanVector& u0);

struct PowerTerm {
  int power;
  Complex coeff;
};
/// f(g) = sum_k c_k tr(g^k).
using PowerTracePoly = std::vector<PowerTerm>;

Complex power_trace(const Matrix& g, int k);
Complex eval_power_traces(const Matrix& g, const PowerTracePoly& poly);

/// Df(g) for f = sum c_k tr(g^k): sum c_k k (g^k - tr(g^k)/(N+1) I).
AlgebraElement invariant_gradient(const Matrix& g, const PowerTracePoly& poly);

/// chi_k(g) = e_k(spec g), k = 1..N, via Newton's identities on tr(g^k).
std::vector<Complex> fundamental_characters(const Matrix& g);

/// D chi_m(g) = sum_{k=1}^m (-1)^{k-1} e_{m-k}(g) (g^k - tr(g^k)/(N+1) I),
/// from d e_m / d p_k = (-1)^{k-1} e_{m-k} / k.
AlgebraElement character_gradient(const Matrix& g, int m);

}  // namespace spinrs
