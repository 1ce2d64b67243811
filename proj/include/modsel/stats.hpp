#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "modsel/errors.hpp"

namespace modsel {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw EmptyError("mean: empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Hyndman-Fan type 8 quantile (median-unbiased): with order statistics
// x_(1..n), h = (n + 1/3) p + 1/3, q = x_(i) + (h - i) (x_(i+1) - x_(i)).
inline double quantile_type8(std::vector<double> v, double p) {
  if (v.empty()) throw EmptyError("quantile: empty vector");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  double h = (n + 1.0 / 3.0) * p + 1.0 / 3.0;
  h = std::max(1.0, std::min(h, n));
  const auto i = static_cast<std::size_t>(std::floor(h));
  const double g = h - static_cast<double>(i);
  const double lo = v[i - 1];
  const double hi = v[std::min<std::size_t>(i, v.size() - 1)];
  return lo + g * (hi - lo);
}

inline double median(std::vector<double> v) { return quantile_type8(std::move(v), 0.5); }

// Least-squares slope of y on x (both length >= 2, x not constant).
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw BadArgsError("ols_slope: need matching vectors of length >= 2");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw BadArgsError("ols_slope: x is constant");
  return sxy / sxx;
}

}  // namespace modsel
