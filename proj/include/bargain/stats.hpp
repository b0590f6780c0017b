#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bargain {

// Fitted values of a conditional mean at evaluation points.
struct ConditionalCurve {
  std::vector<double> x;
  std::vector<double> fitted;
  double bandwidth = 0.0;
  std::vector<std::uint8_t> local_constant;  // 1 where the local design was singular

  // Linear interpolation, flat beyond the ends. `x` must be sorted.
  double at(double x0) const;
};

// h = 1.06 sd(x) n^(-1/5).
double rule_of_thumb_bandwidth(std::span<const double> x);

// Gaussian-kernel local linear regression of y on x evaluated at x0. The
// bandwidth defaults to the rule of thumb. Points whose local design is
// singular get the local constant fit instead and are flagged.
// Throws ValidationError with fewer than 3 observations.
ConditionalCurve local_linear_regress(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> x0,
                                      std::optional<double> bandwidth = std::nullopt);

// mean(exp(residual)): retransformation factor from E[log T | x] to E[T | x].
double duan_smearing_factor(std::span<const double> residuals);

double mean(std::span<const double> v);
double sample_sd(std::span<const double> v);
// Quantile with linear interpolation between order statistics at p (n - 1).
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> v, double p);

// Sorted distinct values.
std::vector<double> unique_sorted(std::vector<double> v);

}  // namespace bargain
