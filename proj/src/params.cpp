#include "bargain/params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace bargain {

ValueDistribution ValueDistribution::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || sd < 0.0)
    throw ValidationError("normal distribution needs finite mean and sd >= 0");
  ValueDistribution d;
  d.kind_ = Kind::Normal;
  d.mean_ = mean;
  d.sd_ = sd;
  return d;
}

ValueDistribution ValueDistribution::empirical(std::vector<double> sample) {
  if (sample.empty()) throw ValidationError("empirical distribution needs a sample");
  for (double x : sample)
    if (!std::isfinite(x)) throw ValidationError("empirical sample has non-finite value");
  std::sort(sample.begin(), sample.end());
  ValueDistribution d;
  d.kind_ = Kind::Empirical;
  const double n = static_cast<double>(sample.size());
  d.mean_ = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : sample) ss += (x - d.mean_) * (x - d.mean_);
  d.sd_ = sample.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  d.sample_ = std::move(sample);
  return d;
}

double ValueDistribution::cdf(double x) const {
  if (kind_ == Kind::Normal) {
    if (sd_ == 0.0) return x >= mean_ ? 1.0 : 0.0;
    return boost::math::cdf(boost::math::normal(mean_, sd_), x);
  }
  auto it = std::upper_bound(sample_.begin(), sample_.end(), x);
  return static_cast<double>(it - sample_.begin()) / static_cast<double>(sample_.size());
}

double ValueDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile probability must lie in (0,1)");
  if (kind_ == Kind::Normal) {
    if (sd_ == 0.0) return mean_;
    return boost::math::quantile(boost::math::normal(mean_, sd_), p);
  }
  const double pos = p * static_cast<double>(sample_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample_.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sample_[lo] + w * sample_[hi];
}

double ValueDistribution::mean() const { return mean_; }
double ValueDistribution::sd() const { return sd_; }

void ModelParams::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(what);
  };
  need(lambda_S > 0.0 && std::isfinite(lambda_S), "lambda_S must be positive");
  need(lambda_B > 0.0 && std::isfinite(lambda_B), "lambda_B must be positive");
  need(lambda_R > 0.0 && std::isfinite(lambda_R), "lambda_R must be positive");
  need(r > 0.0 && std::isfinite(r), "r must be positive");
  need(lambda_R > lambda_B, "lambda_R must exceed lambda_B");
  need(c >= 0.0 && std::isfinite(c), "search cost c must be finite and non-negative");
  need(t >= 0.0 && t < 1.0, "commission t must lie in [0,1)");
  need(kappa >= 0.0 && kappa <= 1.0, "kappa must lie in [0,1]");
  need(N_S > 0 && N_B > 0, "N_S and N_B must be positive");
}

}  // namespace bargain
