#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

// Asymptotic Kolmogorov tail P(K > sqrt(n) D) with Stephens' small-sample
// correction.
inline double kolmogorov_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(double(n));
  const double x = (sn + 0.12 + 0.11 / sn) * d;
  if (x < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

// One-sample KS distance of `x` against `cdf`.
inline double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = double(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - double(i) / n, double(i + 1) / n - f});
  }
  return d;
}

}  // namespace testsupport
