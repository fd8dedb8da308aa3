#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "obflip/error.hpp"
#include "obflip/irwin_hall.hpp"
#include "obflip/signflip.hpp"
#include "obflip/simulation.hpp"

namespace obflip {

enum class VolumeMethod { Exact, NormalApprox, MonteCarlo };
enum class Component { Explained, Unexplained };

constexpr std::string_view to_string(VolumeMethod m) {
  switch (m) {
    case VolumeMethod::Exact: return "exact";
    case VolumeMethod::NormalApprox: return "normal_approx";
    case VolumeMethod::MonteCarlo: return "monte_carlo";
  }
  return "?";
}

constexpr std::string_view to_string(Component c) {
  return c == Component::Explained ? "explained" : "unexplained";
}

struct VolumeEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  VolumeMethod method = VolumeMethod::Exact;
  Component component = Component::Unexplained;
  int d = 0;
  double M = 1.0;
  bool standardized = true;
  std::int64_t n_draws = 0;
  std::uint64_t seed = 0;
  std::int64_t flips = 0;
};

struct VolumeOptions {
  // Irwin-Hall(2d) uses the exact CDF while 2d <= exact_max_n.
  int exact_max_n = 40;
  double abs_tol = 1e-6;
  int max_depth = 40;
};

namespace detail {

struct SimpsonPanel {
  double a, b, fa, fm, fb, whole;
};

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

// Adaptive bisection on Simpson's rule with the Richardson correction
// (S2 - S1) / 15 as both error estimate and extrapolation.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int max_depth) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  std::function<double(const SimpsonPanel&, double, int)> refine = [&](const SimpsonPanel& p, double eps,
                                                                       int depth) -> double {
    const double mid = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + mid);
    const double rm = 0.5 * (mid + p.b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(p.a, mid, p.fa, flm, p.fm);
    const double right = simpson(mid, p.b, p.fm, frm, p.fb);
    const double delta = left + right - p.whole;
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth >= max_depth) {
      throw Error(ErrorCode::QuadratureNotConverged,
                  "interval [" + std::to_string(p.a) + ", " + std::to_string(p.b) + "] did not reach tolerance");
    }
    return refine({p.a, mid, p.fa, flm, p.fm, left}, eps / 2.0, depth + 1) +
           refine({mid, p.b, p.fm, frm, p.fb, right}, eps / 2.0, depth + 1);
  };
  // Always split once so a polynomial that happens to fool the first panel is still checked.
  return refine({a, b, fa, fm, fb, simpson(a, b, fa, fm, fb)}, tol, 0);
}

}  // namespace detail

/// Fraction of the standardized cube flipping the explained component: exactly one half.
inline VolumeEstimate explained_flip_fraction() {
  VolumeEstimate v;
  v.fraction = 0.5;
  v.method = VolumeMethod::Exact;
  v.component = Component::Explained;
  return v;
}

/*!
 * P_d = Pr(I2 > 1, J < d+1-I2) + Pr(I2 < 1, J > d+1-I2) with I2 ~ IH(2),
 * J ~ IH(2d) independent.
 *
 * Integrates the triangular density of I2 against the CDF of J over
 * [0,1] and [1,2] separately (the density has a kink at 1).
 */
inline VolumeEstimate unexplained_flip_fraction(int d, const VolumeOptions& opts = {}) {
  if (d < 1) throw Error(ErrorCode::NonPositiveParameter, "d must be >= 1");
  const IrwinHallSpec j_spec(2 * d);
  const bool exact = j_spec.n <= opts.exact_max_n;
  auto cdf = [&](double x) { return exact ? irwin_hall_cdf(j_spec, x) : irwin_hall_cdf_approx(j_spec, x); };
  const double shift = d + 1.0;
  auto below_one = [&](double t) { return t * (1.0 - cdf(shift - t)); };
  auto above_one = [&](double t) { return (2.0 - t) * cdf(shift - t); };
  const double half_tol = opts.abs_tol / 2.0;
  const double p = detail::adaptive_simpson(below_one, 0.0, 1.0, half_tol, opts.max_depth) +
                   detail::adaptive_simpson(above_one, 1.0, 2.0, half_tol, opts.max_depth);

  VolumeEstimate v;
  v.fraction = std::clamp(p, 0.0, 1.0);
  v.method = exact ? VolumeMethod::Exact : VolumeMethod::NormalApprox;
  v.component = Component::Unexplained;
  v.d = d;
  return v;
}

struct MonteCarloOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
};

/*!
 * Monte Carlo flip fraction over the Uniform(-M, M) parameter cube.
 *
 * Draw i is keyed by (seed, i), and flips are reduced as integer counts, so
 * the result is bitwise identical for any thread count. Draws whose
 * classified quantities sit on a sign boundary count as non-flips.
 */
inline VolumeEstimate monte_carlo_flip_fraction(int d, double M, Component component, bool standardized,
                                                std::int64_t n_draws, std::uint64_t seed,
                                                const MonteCarloOptions& opts = {}) {
  if (n_draws < 1000) {
    throw Error(ErrorCode::InvalidDrawCount, "n_draws must be >= 1000 (got " + std::to_string(n_draws) + ")");
  }
  if (d < 1) throw Error(ErrorCode::NonPositiveParameter, "d must be >= 1");
  if (!(M > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "M must be positive");

  auto count_range = [&](std::int64_t begin, std::int64_t end) {
    std::int64_t flips = 0;
    for (std::int64_t i = begin; i < end; ++i) {
      const auto [h, k] = draw_uniform_params(d, M, standardized, seed, static_cast<std::uint64_t>(i));
      const FlipQuantities q = flip_quantities(h, k);
      const bool flip = component == Component::Explained ? explained_flip(q).flip() : unexplained_flip(q).flip();
      flips += flip ? 1 : 0;
    }
    return flips;
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, n_draws));
  std::int64_t flips = 0;
  if (threads <= 1) {
    flips = count_range(0, n_draws);
  } else {
    std::vector<std::int64_t> partial(threads, 0);
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n_draws + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::int64_t begin = std::min<std::int64_t>(n_draws, t * chunk);
      const std::int64_t end = std::min<std::int64_t>(n_draws, begin + chunk);
      pool.emplace_back([&, t, begin, end] { partial[t] = count_range(begin, end); });
    }
    for (auto& th : pool) th.join();
    for (auto c : partial) flips += c;
  }

  VolumeEstimate v;
  v.fraction = static_cast<double>(flips) / static_cast<double>(n_draws);
  v.standard_error = std::sqrt(v.fraction * (1.0 - v.fraction) / static_cast<double>(n_draws));
  v.method = VolumeMethod::MonteCarlo;
  v.component = component;
  v.d = d;
  v.M = M;
  v.standardized = standardized;
  v.n_draws = n_draws;
  v.seed = seed;
  v.flips = flips;
  return v;
}

}  // namespace obflip
