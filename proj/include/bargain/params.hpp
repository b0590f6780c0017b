#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bargain {

// Raised when inputs break a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computed object violates a structural invariant.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A valuation distribution: either a normal law or the empirical law of a
// sample (e.g. estimated pseudovalues).
class ValueDistribution {
 public:
  enum class Kind { Normal, Empirical };

  static ValueDistribution normal(double mean, double sd);
  static ValueDistribution empirical(std::vector<double> sample);

  Kind kind() const { return kind_; }
  double cdf(double x) const;
  // Inverse CDF on (0,1). Empirical laws interpolate between order statistics.
  double quantile(double p) const;
  double mean() const;
  double sd() const;
  const std::vector<double>& sample() const { return sample_; }

 private:
  Kind kind_ = Kind::Normal;
  double mean_ = 0.0;
  double sd_ = 1.0;
  std::vector<double> sample_;  // sorted, empirical only
};

// Structural primitives. Defaults are the benchmark calibration (r = 0.05).
struct ModelParams {
  double lambda_S = 0.605;   // buyer arrivals to a seller, per day
  double lambda_B = 0.678;   // seller arrivals to a buyer, per day
  double lambda_R = 3.513;   // response / purchase-opportunity rate, per day
  double r = 0.05;           // continuous discount rate, per day
  double c = 1478.432;       // flow search cost, yen per day
  double t = 0.10;           // commission rate
  double kappa = 0.687;      // exogenous post-walkaway trade probability
  long N_S = 4545;
  long N_B = 4056;
  // Quartiles (7570.95, 8740.62, 9854.90) matched by a normal law.
  ValueDistribution F_S = ValueDistribution::normal(8740.62, 1693.0915);
  // Median 14443.64, interquartile range of (-22178.11, 56002.04).
  ValueDistribution F_B = ValueDistribution::normal(14443.64, 57955.321);

  double delta_R() const { return lambda_R / (lambda_R + r); }
  double delta_B() const { return lambda_B / (lambda_B + r); }
  double delta_S() const { return lambda_S / (lambda_S + r); }
  // Expected discounted search cost until the next seller arrives.
  double search_cost_flow() const { return c / (lambda_B + r); }

  // Throws ValidationError naming the first violated constraint.
  void validate() const;
};

}  // namespace bargain
