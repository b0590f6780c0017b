#include "bargain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bargain/params.hpp"

namespace bargain {

double ConditionalCurve::at(double x0) const {
  if (x.empty()) throw ValidationError("ConditionalCurve::at on an empty curve");
  if (x0 <= x.front()) return fitted.front();
  if (x0 >= x.back()) return fitted.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), x0) - x.begin());
  const std::size_t lo = hi - 1;
  const double w = (x0 - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - w) * fitted[lo] + w * fitted[hi];
}

double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

std::vector<double> unique_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double rule_of_thumb_bandwidth(std::span<const double> x) {
  return 1.06 * sample_sd(x) * std::pow(static_cast<double>(x.size()), -0.2);
}

ConditionalCurve local_linear_regress(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> x0, std::optional<double> bandwidth) {
  if (x.size() != y.size()) throw ValidationError("local_linear_regress: x and y differ in length");
  if (x.size() < 3) throw ValidationError("local_linear_regress: needs at least 3 observations");
  ConditionalCurve curve;
  curve.x.assign(x0.begin(), x0.end());
  curve.fitted.resize(x0.size());
  curve.local_constant.assign(x0.size(), 0);
  double h = bandwidth ? *bandwidth : rule_of_thumb_bandwidth(x);
  // all x identical: any positive bandwidth gives the local constant
  const bool flat = !(h > 0.0);
  if (flat) h = 1.0;
  curve.bandwidth = h;

  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x0.size(); ++k) {
    // shift exponents so the nearest observation has weight one
    double zmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - x0[k]) / h;
      z[i] = 0.5 * u * u;
      zmin = std::min(zmin, z[i]);
    }
    double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = std::exp(zmin - z[i]);
      const double d = x[i] - x0[k];
      s0 += w;
      s1 += w * d;
      s2 += w * d * d;
      t0 += w * y[i];
      t1 += w * d * y[i];
    }
    const double det = s0 * s2 - s1 * s1;
    if (flat || !(det > 1e-10 * s0 * s2)) {
      curve.fitted[k] = t0 / s0;
      curve.local_constant[k] = 1;
    } else {
      curve.fitted[k] = (s2 * t0 - s1 * t1) / det;
    }
  }
  return curve;
}

double duan_smearing_factor(std::span<const double> residuals) {
  if (residuals.empty()) throw ValidationError("duan_smearing_factor: no residuals");
  double s = 0.0;
  for (double e : residuals) s += std::exp(e);
  return s / static_cast<double>(residuals.size());
}

}  // namespace bargain
