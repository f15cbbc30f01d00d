#include "spinrs/groupoid_poisson.hpp"

#include "spinrs/errors.hpp"

namespace spinrs {

namespace {

Vector centred(const Vector& a) {
  Vector out = a;
  out.array() -= a.mean();
  return out;
}

Matrix traceless(const Matrix& m) {
  Matrix out = m;
  out.diagonal().array() -= m.trace() / static_cast<double>(m.rows());
  return out;
}

GroupoidPoint with_u(const GroupoidPoint& p, const Vector& u) {
  return {CartanVector::from(u), p.g, p.v};
}

GroupoidPoint with_v(const GroupoidPoint& p, const Vector& v) {
  return {p.u, p.g, CartanVector::from(v)};
}

GroupoidPoint with_g(const GroupoidPoint& p, const Matrix& g) {
  return {p.u, GroupElement::from(g), p.v};
}

ObservableGradients central_differences(const Observable::EvalFn& f, const GroupoidPoint& p,
                                        double h) {
  const int size = p.u.size();
  ObservableGradients out;
  out.approximate = true;
  out.d1 = Vector::Zero(size);
  out.d2 = Vector::Zero(size);
  out.D = Matrix::Zero(size, size);
  out.Dprime = Matrix::Zero(size, size);

  // Directions e_i - 1/(N+1) stay on the zero-sum hyperplane; pairing a
  // zero-sum gradient with them returns its i-th entry.
  for (int i = 0; i < size; ++i) {
    Vector dir = -Vector::Constant(size, 1.0 / size);
    dir(i) += 1.0;
    out.d1(i) = (f(with_u(p, p.u.vec() + h * dir)) - f(with_u(p, p.u.vec() - h * dir))) / (2.0 * h);
    out.d2(i) = (f(with_v(p, p.v.vec() + h * dir)) - f(with_v(p, p.v.vec() - h * dir))) / (2.0 * h);
  }
  const Matrix& g = p.g.mat();
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      // X = E_ij off the diagonal, E_ii - I/(N+1) on it; <G, X> = G_ji.
      Matrix x = Matrix::Zero(size, size);
      x(i, j) = 1.0;
      if (i == j) x.diagonal().array() -= 1.0 / size;
      const Matrix ep = matrix_exp(h * x);
      const Matrix em = matrix_exp(-h * x);
      out.D(j, i) = (f(with_g(p, ep * g)) - f(with_g(p, em * g))) / (2.0 * h);
      out.Dprime(j, i) = (f(with_g(p, g * ep)) - f(with_g(p, g * em))) / (2.0 * h);
    }
  }
  out.d1 = centred(out.d1);
  out.d2 = centred(out.d2);
  out.D = traceless(out.D);
  out.Dprime = traceless(out.Dprime);
  return out;
}

}  // namespace

ObservableGradients finite_difference_gradients(const Observable::EvalFn& f,
                                                const GroupoidPoint& p,
                                                FiniteDifferenceOptions fd) {
  auto coarse = central_differences(f, p, fd.step);
  if (!fd.richardson) return coarse;
  auto fine = central_differences(f, p, fd.step / 2.0);
  fine.d1 = (4.0 * fine.d1 - coarse.d1) / 3.0;
  fine.d2 = (4.0 * fine.d2 - coarse.d2) / 3.0;
  fine.D = (4.0 * fine.D - coarse.D) / 3.0;
  fine.Dprime = (4.0 * fine.Dprime - coarse.Dprime) / 3.0;
  return fine;
}

Observable::Observable(EvalFn eval, GradFn grad, FiniteDifferenceOptions fd)
    : eval_(std::move(eval)), grad_(std::move(grad)), fd_(fd) {}

ObservableGradients Observable::gradients(const GroupoidPoint& p) const {
  if (grad_) return grad_(p);
  return finite_difference_gradients(eval_, p, fd_);
}

Observable Observable::pullback(PowerTracePoly poly) {
  auto eval = [poly](const GroupoidPoint& p) { return eval_power_traces(p.g.mat(), poly); };
  auto grad = [poly](const GroupoidPoint& p) {
    const int size = p.u.size();
    const Matrix df = invariant_gradient(p.g.mat(), poly).mat();
    return ObservableGradients{Vector::Zero(size), Vector::Zero(size), df, df};
  };
  return Observable(eval, grad);
}

Observable Observable::linear_trace(Matrix pm) {
  auto eval = [pm](const GroupoidPoint& p) { return trace_pairing(pm, p.g.mat()); };
  auto grad = [pm](const GroupoidPoint& p) {
    const int size = p.u.size();
    const Matrix& g = p.g.mat();
    // d/dt tr(P e^{tX} g) = tr(X g P);  d/dt tr(P g e^{tX}) = tr(X P g)
    return ObservableGradients{Vector::Zero(size), Vector::Zero(size), traceless(g * pm),
                               traceless(pm * g)};
  };
  return Observable(eval, grad);
}

Observable Observable::cartan_linear(Vector a, Vector b) {
  auto eval = [a, b](const GroupoidPoint& p) {
    return a.cwiseProduct(p.u.vec()).sum() + b.cwiseProduct(p.v.vec()).sum();
  };
  auto grad = [a, b](const GroupoidPoint& p) {
    const int size = p.u.size();
    return ObservableGradients{centred(a), centred(b), Matrix::Zero(size, size),
                               Matrix::Zero(size, size)};
  };
  return Observable(eval, grad);
}

Observable Observable::cartan_exponential(Vector a, Vector b) {
  auto value = [a, b](const GroupoidPoint& p) {
    return std::exp(a.cwiseProduct(p.u.vec()).sum() - b.cwiseProduct(p.v.vec()).sum());
  };
  auto grad = [a, b, value](const GroupoidPoint& p) {
    const int size = p.u.size();
    const Complex phi = value(p);
    return ObservableGradients{phi * centred(a), -phi * centred(b), Matrix::Zero(size, size),
                               Matrix::Zero(size, size)};
  };
  return Observable(value, grad);
}

Observable operator*(const Observable& x, const Observable& y) {
  auto eval = [x, y](const GroupoidPoint& p) { return x(p) * y(p); };
  if (!x.analytic_gradients() || !y.analytic_gradients()) {
    return Observable(eval, {}, x.fd_);
  }
  auto grad = [x, y](const GroupoidPoint& p) {
    const Complex fx = x(p);
    const Complex fy = y(p);
    const auto gx = x.gradients(p);
    const auto gy = y.gradients(p);
    return ObservableGradients{fy * gx.d1 + fx * gy.d1, fy * gx.d2 + fx * gy.d2,
                               fy * gx.D + fx * gy.D, fy * gx.Dprime + fx * gy.Dprime};
  };
  return Observable(eval, grad);
}

Observable operator+(const Observable& x, const Observable& y) {
  auto eval = [x, y](const GroupoidPoint& p) { return x(p) + y(p); };
  if (!x.analytic_gradients() || !y.analytic_gradients()) {
    return Observable(eval, {}, x.fd_);
  }
  auto grad = [x, y](const GroupoidPoint& p) {
    const auto gx = x.gradients(p);
    const auto gy = y.gradients(p);
    return ObservableGradients{gx.d1 + gy.d1, gx.d2 + gy.d2, gx.D + gy.D,
                               gx.Dprime + gy.Dprime};
  };
  return Observable(eval, grad);
}

Observable Observable::scaled(Complex c) const {
  const Observable self = *this;
  auto eval = [self, c](const GroupoidPoint& p) { return c * self(p); };
  if (!analytic_gradients()) return Observable(eval, {}, fd_);
  auto grad = [self, c](const GroupoidPoint& p) {
    auto g = self.gradients(p);
    g.d1 *= c;
    g.d2 *= c;
    g.D *= c;
    g.Dprime *= c;
    return g;
  };
  return Observable(eval, grad);
}

Complex bracket_eval(const RMatrixSpec& spec, const Observable& phi, const Observable& psi,
                     const GroupoidPoint& p, double rescale) {
  const auto a = phi.gradients(p);
  const auto b = psi.gradients(p);
  const Matrix u = p.u.as_matrix();
  const Matrix v = p.v.as_matrix();
  const Matrix a1 = a.d1.asDiagonal();
  const Matrix a2 = a.d2.asDiagonal();
  const Matrix b1 = b.d1.asDiagonal();
  const Matrix b2 = b.d2.asDiagonal();

  Complex sum = trace_pairing(u, commutator(a1, b1)) - trace_pairing(v, commutator(a2, b2));
  sum += -trace_pairing(a1, b.D) - trace_pairing(a2, b.Dprime);
  sum += trace_pairing(b1, a.D) + trace_pairing(b2, a.Dprime);
  sum += trace_pairing(apply_R(spec, p.v, a.Dprime), b.Dprime);
  sum -= trace_pairing(apply_R(spec, p.u, a.D), b.D);
  return rescale * sum;
}

Observable bracket_observable(const RMatrixSpec& spec, Observable phi, Observable psi,
                              double rescale, FiniteDifferenceOptions fd) {
  auto eval = [spec, phi = std::move(phi), psi = std::move(psi), rescale](const GroupoidPoint& p) {
    return bracket_eval(spec, phi, psi, p, rescale);
  };
  return Observable(eval, {}, fd);
}

Complex invariant_pair_bracket(const RMatrixSpec& spec, const PowerTracePoly& f1,
                               const PowerTracePoly& f2, const GroupoidPoint& p) {
  const Matrix df1 = invariant_gradient(p.g.mat(), f1).mat();
  const Matrix df2 = invariant_gradient(p.g.mat(), f2).mat();
  return trace_pairing(apply_R(spec, p.v, df1) - apply_R(spec, p.u, df1), df2);
}

GroupoidPoint h_action(const GroupElement& h, const GroupoidPoint& p) {
  if (!h.mat().isDiagonal(0.0)) throw DimensionError("h_action: h must be diagonal");
  return {p.u, GroupElement::from(adjoint_action(h.mat(), p.g.mat())), p.v};
}

CartanVector momentum_gamma(const GroupoidPoint& p) {
  return CartanVector::from(p.u.vec() - p.v.vec());
}

GroupoidPoint groupoid_multiply(const GroupoidPoint& p1, const GroupoidPoint& p2, double tol) {
  if ((p1.v.vec() - p2.u.vec()).cwiseAbs().maxCoeff() > tol) {
    throw ComposabilityError("groupoid_multiply: source of the first factor differs from the target of the second");
  }
  return {p1.u, GroupElement::from(p1.g.mat() * p2.g.mat()), p2.v};
}

GroupoidPoint groupoid_inverse(const GroupoidPoint& p) {
  return {p.v, p.g.inverse(), p.u};
}

}  // namespace spinrs
