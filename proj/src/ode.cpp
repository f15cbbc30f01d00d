#include "spinrs/ode.hpp"

#include <algorithm>
#include <cmath>

#include "spinrs/errors.hpp"

namespace spinrs::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b* (difference between the 5th and embedded 4th order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const State& err, const State& y, const State& y_new, double rtol,
                  double atol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
    worst = std::max(worst, std::abs(err(i)) / scale);
  }
  return worst;
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw IntegrationError("integrate: empty time grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw IntegrationError("integrate: time grid must be strictly increasing");
  }
}

void run_rk4(const Rhs& f, State& y, double t0, double t1, const Options& o,
             const Projection& project, Stats& stats) {
  const long pieces = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / o.step - 1e-9)));
  const double h = (t1 - t0) / static_cast<double>(pieces);
  double t = t0;
  for (long s = 0; s < pieces; ++s) {
    if (stats.accepted >= o.max_steps) throw IntegrationError("integrate: step budget exceeded");
    const State k1 = f(t, y);
    const State k2 = f(t + h / 2, y + h / 2 * k1);
    const State k3 = f(t + h / 2, y + h / 2 * k2);
    const State k4 = f(t + h, y + h * k3);
    stats.evaluations += 4;
    y += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (s + 1 == pieces) ? t1 : t0 + static_cast<double>(s + 1) * h;
    if (project) stats.max_correction = std::max(stats.max_correction, project(y));
    ++stats.accepted;
    stats.t = t;
  }
}

double initial_step(const Rhs& f, double t, const State& y, const State& dy, const Options& o) {
  double d0 = 0, d1 = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = o.atol + o.rtol * std::abs(y(i));
    d0 = std::max(d0, std::abs(y(i)) / sc);
    d1 = std::max(d1, std::abs(dy(i)) / sc);
  }
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  const State y1 = y + h0 * dy;
  const State dy1 = f(t + h0, y1);
  double d2 = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = o.atol + o.rtol * std::abs(y(i));
    d2 = std::max(d2, std::abs(dy1(i) - dy(i)) / sc);
  }
  d2 /= h0;
  const double h1 = (std::max(d1, d2) <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 1.0 / 5);
  return std::min(100 * h0, h1);
}

}  // namespace

void integrate(const Rhs& f, State y, std::span<const double> grid, const Options& o,
               const Projection& project, const SampleFn& sample, Stats& stats) {
  check_grid(grid);
  if (!(o.rtol > 0) || !(o.atol > 0)) throw IntegrationError("integrate: tolerances must be positive");
  if (o.method == Method::RK4 && !(o.step > 0)) throw IntegrationError("integrate: RK4 step must be positive");
  stats = Stats{};
  stats.t = grid[0];
  if (project) stats.max_correction = project(y);
  sample(grid[0], y);
  if (grid.size() == 1) return;

  if (o.method == Method::RK4) {
    for (std::size_t k = 1; k < grid.size(); ++k) {
      run_rk4(f, y, grid[k - 1], grid[k], o, project, stats);
      sample(grid[k], y);
    }
    return;
  }

  double t = grid[0];
  State k1 = f(t, y);
  stats.evaluations += 1;
  double h = initial_step(f, t, y, k1, o);
  stats.evaluations += 1;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double target = grid[k];
    while (target - t > 1e-14 * std::max(1.0, std::abs(target))) {
      if (stats.accepted + stats.rejected >= o.max_steps) {
        throw IntegrationError("integrate: step budget exceeded");
      }
      bool last = false;
      const double h_try = h;
      if (t + h >= target) {
        h = target - t;
        last = true;
      }
      if (!last && h <= 1e-14 * std::max(1.0, std::abs(t))) {
        throw StepSizeUnderflow("integrate: step size underflow at t=" + std::to_string(t));
      }
      const State k2 = f(t + c2 * h, y + h * (a21 * k1));
      const State k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      const State k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const State k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const State k6 =
          f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = f(t + h, y_new);
      stats.evaluations += 6;
      const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, y_new, o.rtol, o.atol);
      if (en <= 1.0) {
        t = last ? target : t + h;
        if (project) {
          const double corr = project(y_new);
          stats.max_correction = std::max(stats.max_correction, corr);
          k1 = corr > 0.0 ? f(t, y_new) : k7;
        } else {
          k1 = k7;
        }
        y = std::move(y_new);
        ++stats.accepted;
        stats.t = t;
        const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        // A step clipped to the grid should not shrink the next one.
        h = last ? std::max(h * factor, h_try) : h * factor;
      } else {
        ++stats.rejected;
        h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
      }
    }
    t = target;
    sample(target, y);
  }
}

}  // namespace spinrs::ode
