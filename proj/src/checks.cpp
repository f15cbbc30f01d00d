#include "spinrs/checks.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <functional>
#include <thread>

#include "spinrs/errors.hpp"

namespace spinrs {

namespace sample {

std::mt19937_64 generator(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

CartanVector regular_q(std::mt19937_64& rng, int n, double spread, double min_gap) {
  std::uniform_real_distribution<double> u(-spread, spread);
  const int size = n + 1;
  for (;;) {
    Vector q(size);
    for (int i = 0; i < size; ++i) q(i) = u(rng);
    q.array() -= q.mean();
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) gap = std::min(gap, std::abs(q(i) - q(j)));
    }
    if (gap >= min_gap) return CartanVector::from(q);
  }
}

Matrix algebra(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int size = n + 1;
  Matrix a(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) a(i, j) = Complex(u(rng), u(rng));
  }
  a.diagonal().array() -= a.trace() / static_cast<double>(size);
  return a;
}

GroupElement group(std::mt19937_64& rng, int n, double scale) {
  return exp_algebra(AlgebraElement::from(scale * algebra(rng, n)));
}

GroupElement hermitian_group(std::mt19937_64& rng, int n, double scale) {
  const Matrix a = algebra(rng, n);
  const Matrix h = 0.5 * scale * (a + a.adjoint());
  return exp_algebra(AlgebraElement::from(h));
}

GroupElement cartan_group(std::mt19937_64& rng, int n) {
  const Matrix a = algebra(rng, n);
  Vector c = 0.5 * a.diagonal();
  c.array() -= c.mean();
  return GroupElement::from(c.array().exp().matrix().asDiagonal());
}

}  // namespace sample

int worker_count(int requested) {
  int n = requested;
  if (n <= 0) {
    n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("SPINRS_THREADS")) {
      const int cap = std::atoi(env);
      if (cap > 0) n = std::min(n, cap);
    }
  }
  return std::max(1, n);
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"skew", "equivariance", "mdybe", "commute", "jacobi", "theta"};
  return names;
}

namespace {

constexpr int kMaxRedraws = 20;

struct SampleValue {
  double value = 0.0;
  int redraws = 0;
};

// Evaluates `f` at every sample index in parallel. A sample that lands on a
// singular configuration is redrawn from the next generator stream.
std::vector<SampleValue> map_samples(const CheckOptions& o, std::uint64_t salt,
                                     const std::function<double(std::mt19937_64&)>& f) {
  std::vector<SampleValue> out(static_cast<std::size_t>(o.samples));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < o.samples; i = next++) {
      try {
        SampleValue& sv = out[static_cast<std::size_t>(i)];
        for (int attempt = 0;; ++attempt) {
          auto rng = sample::generator(o.seed ^ (salt << 40), static_cast<std::uint64_t>(i) +
                                                                   (static_cast<std::uint64_t>(attempt) << 32));
          try {
            sv.value = f(rng);
            sv.redraws = attempt;
            break;
          } catch (const SingularityError&) {
            if (attempt >= kMaxRedraws) throw;
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = o.samples;
      }
    }
  };
  const int workers = std::min(worker_count(o.threads), std::max(1, o.samples));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

CheckResult upper(const std::string& name, const std::vector<SampleValue>& v, double tol) {
  CheckResult r;
  r.name = name;
  r.tolerance = tol;
  r.samples = static_cast<int>(v.size());
  for (const auto& s : v) {
    r.max_residual = std::max(r.max_residual, s.value);
    r.resampled += s.redraws;
  }
  std::vector<double> vals;
  for (const auto& s : v) vals.push_back(s.value);
  if (!vals.empty()) {
    std::nth_element(vals.begin(), vals.begin() + static_cast<long>(vals.size() / 2), vals.end());
    r.median = vals[vals.size() / 2];
  }
  r.passed = r.max_residual < tol;
  return r;
}

CheckResult lower(const std::string& name, const std::vector<SampleValue>& v, double tol) {
  CheckResult r = upper(name, v, tol);
  r.lower_bound = true;
  r.passed = r.median > tol;
  return r;
}

RMatrixSpec spec_of(const CheckOptions& o) {
  const Dimension dim(o.n);
  return {o.pi_prime ? SimpleSubset(dim, *o.pi_prime) : SimpleSubset::full(dim), o.kappa};
}

std::vector<CheckResult> skew(const CheckOptions& o) {
  const RMatrixSpec spec = spec_of(o);
  auto v = map_samples(o, 1, [&](std::mt19937_64& rng) {
    const CartanVector q = sample::regular_q(rng, o.n);
    const Matrix a = sample::algebra(rng, o.n), b = sample::algebra(rng, o.n);
    if (o.negative_control) {
      return std::abs(trace_pairing(apply_Rpm(spec, q, a, Sign::Plus), b) +
                      trace_pairing(a, apply_Rpm(spec, q, b, Sign::Plus)));
    }
    return std::abs(skew_defect(spec, q, a, b));
  });
  return {upper("skew", v, 1e-12)};
}

std::vector<CheckResult> equivariance(const CheckOptions& o) {
  const RMatrixSpec spec = spec_of(o);
  auto v = map_samples(o, 2, [&](std::mt19937_64& rng) {
    const CartanVector q = sample::regular_q(rng, o.n);
    const Matrix a = sample::algebra(rng, o.n);
    if (o.negative_control) {
      // A non-diagonal h is outside the symmetry group.
      const Matrix h = sample::group(rng, o.n).mat();
      return (apply_R(spec, q, adjoint_action(h, a)) - adjoint_action(h, apply_R(spec, q, a))).norm();
    }
    const GroupElement h = sample::cartan_group(rng, o.n);
    return equivariance_defect(spec, q, h, a).norm();
  });
  return {upper("equivariance", v, 1e-12)};
}

std::vector<CheckResult> mdybe(const CheckOptions& o) {
  const RMatrixSpec spec = spec_of(o);
  const RMatrixSpec used = o.negative_control ? spec.with_kappa(2.0 * o.kappa) : spec;
  auto v = map_samples(o, 3, [&](std::mt19937_64& rng) {
    const CartanVector q = sample::regular_q(rng, o.n);
    const Matrix a = sample::algebra(rng, o.n), b = sample::algebra(rng, o.n);
    return mdybe_residual(used, q, a, b).norm();
  });
  return {upper("mdybe", v, 1e-10)};
}

std::vector<CheckResult> theta(const CheckOptions& o) {
  const RMatrixSpec spec = spec_of(o);
  if (!spec.subset().is_full()) {
    CheckResult r;
    r.name = "theta";
    r.tolerance = 1e-10;
    r.passed = true;
    r.note = "skipped: the identity needs pi_prime = full";
    return {r};
  }
  const RMatrixSpec used = o.negative_control ? spec.with_kappa(2.0 * o.kappa) : spec;
  auto v = map_samples(o, 4, [&](std::mt19937_64& rng) {
    const CartanVector q = sample::regular_q(rng, o.n);
    const Matrix a = sample::algebra(rng, o.n);
    return theta_defect(used, q, a).norm();
  });
  auto r = upper("theta", v, 1e-10);
  if (o.kappa != 0.5) r.note = "the identity holds for kappa = 1/2";
  return {r};
}

std::vector<CheckResult> commute(const CheckOptions& o) {
  const RMatrixSpec spec = spec_of(o);
  std::vector<std::pair<int, int>> pairs;
  for (int j = 1; j <= o.n; ++j) {
    for (int k = j; k <= o.n; ++k) pairs.emplace_back(j, k);
  }
  auto bracket_max = [&](std::mt19937_64& rng, bool same_base) {
    const CartanVector u = sample::regular_q(rng, o.n);
    const CartanVector v = same_base ? u : sample::regular_q(rng, o.n);
    const GroupoidPoint p{u, sample::group(rng, o.n), v};
    double worst = 0.0;
    for (auto [j, k] : pairs) {
      const auto fj = Observable::pullback({{j, 1.0}});
      const auto fk = Observable::pullback({{k, 1.0}});
      worst = std::max(worst, std::abs(bracket_eval(spec, fj, fk, p)));
    }
    return worst;
  };
  auto on_bundle = map_samples(o, 5, [&](std::mt19937_64& rng) { return bracket_max(rng, !o.negative_control); });
  std::vector<CheckResult> out{upper("commute", on_bundle, 1e-10)};

  // Off the gauge bundle distinct power traces do not commute. For n = 1 the
  // only pair is {tr g, tr g}, which vanishes identically; for an empty
  // subset R is constant and R(v) - R(u) = 0.
  const bool dynamical = !spec.subset().members().empty();
  if (o.n >= 2 && dynamical) {
    auto off = map_samples(o, 6, [&](std::mt19937_64& rng) {
      const CartanVector u = sample::regular_q(rng, o.n);
      const CartanVector v = sample::regular_q(rng, o.n);
      const GroupoidPoint p{u, sample::group(rng, o.n), v};
      const auto f1 = Observable::pullback({{1, 1.0}});
      const auto f2 = Observable::pullback({{2, 1.0}});
      return std::abs(bracket_eval(spec, f1, f2, p));
    });
    out.push_back(lower("commute_off_bundle", off, 1e-4));
  } else {
    CheckResult r;
    r.name = "commute_off_bundle";
    r.tolerance = 1e-4;
    r.lower_bound = true;
    r.passed = true;
    r.note = dynamical ? "skipped: needs n >= 2" : "skipped: constant r-matrix for an empty subset";
    out.push_back(r);
  }
  return out;
}

std::vector<CheckResult> jacobi(const CheckOptions& o) {
  const RMatrixSpec spec = spec_of(o);
  // The negative control nests brackets of a different r-matrix.
  const RMatrixSpec inner_spec =
      o.negative_control
          ? RMatrixSpec(spec.subset().is_full() ? SimpleSubset::empty(spec.dim()) : SimpleSubset::full(spec.dim()),
                        o.kappa)
          : spec;
  const FiniteDifferenceOptions fd{1e-5, true};
  auto v = map_samples(o, 7, [&](std::mt19937_64& rng) {
    const int size = o.n + 1;
    const Matrix p1 = sample::algebra(rng, o.n), p2 = sample::algebra(rng, o.n);
    Vector a1 = Vector::Zero(size), b1 = Vector::Zero(size), a2 = Vector::Zero(size);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int i = 0; i < size; ++i) {
      a1(i) = unif(rng);
      b1(i) = unif(rng);
      a2(i) = unif(rng);
    }
    a1.array() -= a1.mean();
    b1.array() -= b1.mean();
    a2.array() -= a2.mean();
    const Observable x = Observable::linear_trace(p1);
    const Observable y = Observable::linear_trace(p2) * Observable::cartan_exponential(a1, b1);
    const Observable z = Observable::pullback({{2, 1.0}}) + Observable::cartan_linear(a2, -a2);
    const GroupoidPoint p{sample::regular_q(rng, o.n), sample::group(rng, o.n), sample::regular_q(rng, o.n)};
    const Complex s = bracket_eval(spec, bracket_observable(inner_spec, x, y, 1.0, fd), z, p) +
                      bracket_eval(spec, bracket_observable(inner_spec, y, z, 1.0, fd), x, p) +
                      bracket_eval(spec, bracket_observable(inner_spec, z, x, 1.0, fd), y, p);
    return std::abs(s);
  });
  return {upper("jacobi", v, 1e-4)};
}

}  // namespace

std::vector<CheckResult> run_suite(const std::string& suite, const CheckOptions& options) {
  if (options.n < 1) throw ConfigError("check: n must be >= 1");
  if (options.samples < 1) throw ConfigError("check: samples must be >= 1");
  if (suite == "all") {
    std::vector<CheckResult> out;
    for (const auto& name : suite_names()) {
      auto r = run_suite(name, options);
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }
  if (suite == "skew") return skew(options);
  if (suite == "equivariance") return equivariance(options);
  if (suite == "mdybe") return mdybe(options);
  if (suite == "commute") return commute(options);
  if (suite == "jacobi") return jacobi(options);
  if (suite == "theta") return theta(options);
  throw ConfigError("check: unknown suite '" + suite + "'");
}

}  // namespace spinrs
