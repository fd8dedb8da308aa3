#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>

#include "obflip/error.hpp"

namespace obflip {

/// Distribution of the sum of n independent Uniform(0, 1) variables.
struct IrwinHallSpec {
  int n = 1;

  IrwinHallSpec() = default;
  explicit IrwinHallSpec(int count) : n(count) {
    if (n < 1) throw Error(ErrorCode::NonPositiveParameter, "Irwin-Hall n must be >= 1");
  }
  double mean() const { return n / 2.0; }
  double variance() const { return n / 12.0; }
};

// Largest n evaluated by the exact alternating sum; above this the CDF falls
// back to the normal approximation.
inline constexpr int kIrwinHallExactLimit = 240;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

// (1/n!) sum_{k=0}^{floor x} (-1)^k C(n,k) (x-k)^n, for 0 < x <= n/2.
// Terms reach ~1e15 at n = 40 and ~1e32 at n = 80 before cancelling to a
// probability, so the sum is carried in extended precision.
template <typename Real>
double irwin_hall_sum(int n, double x) {
  const Real xr(x);
  Real term_coef(1);  // C(n, k), updated incrementally
  Real sum(0);
  const int kmax = static_cast<int>(std::floor(x));
  for (int k = 0; k <= kmax; ++k) {
    const Real t = term_coef * boost::multiprecision::pow(xr - k, n);
    if (k % 2 == 0) {
      sum += t;
    } else {
      sum -= t;
    }
    term_coef = term_coef * (n - k) / (k + 1);
  }
  Real factorial(1);
  for (int i = 2; i <= n; ++i) factorial *= i;
  return static_cast<double>(sum / factorial);
}

inline double irwin_hall_lower(int n, double x) {
  using namespace boost::multiprecision;
  if (n <= 40) return irwin_hall_sum<cpp_bin_float_50>(n, x);
  if (n <= 100) return irwin_hall_sum<cpp_bin_float_100>(n, x);
  using cpp_bin_float_250 = number<cpp_bin_float<250>>;
  return irwin_hall_sum<cpp_bin_float_250>(n, x);
}

}  // namespace detail

/// N(n/2, n/12) approximation to the Irwin-Hall(n) CDF.
inline double irwin_hall_cdf_approx(IrwinHallSpec spec, double x) {
  return normal_cdf((x - spec.mean()) / std::sqrt(spec.variance()));
}

/*!
 * Irwin-Hall(n) CDF.
 *
 * Exact for n <= kIrwinHallExactLimit via the alternating sum; the upper
 * half is obtained by reflection F(x) = 1 - F(n - x) so at most n/2 + 1
 * terms are summed.
 */
inline double irwin_hall_cdf(IrwinHallSpec spec, double x) {
  const int n = spec.n;
  if (!(x > 0.0)) return 0.0;
  if (x >= n) return 1.0;
  if (n == 1) return x;
  if (n > kIrwinHallExactLimit) return irwin_hall_cdf_approx(spec, x);
  const double half = n / 2.0;
  double f = x <= half ? detail::irwin_hall_lower(n, x) : 1.0 - detail::irwin_hall_lower(n, n - x);
  if (f < 0.0) f = 0.0;
  if (f > 1.0) f = 1.0;
  return f;
}

}  // namespace obflip
