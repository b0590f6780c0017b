#include "bargain/grids.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bargain {
namespace {

constexpr double kJitter = 1e-6;  // yen

// Uniform on the open interval (0,1) from 53 random bits.
double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> draw_values(const ValueDistribution& dist, std::size_t n,
                                GridSampling sampling, std::mt19937_64& rng) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = open_uniform(rng);
    const double p = sampling == GridSampling::Stratified
                         ? (static_cast<double>(k) + u) / static_cast<double>(n)
                         : u;
    out[k] = dist.quantile(std::clamp(p, 1e-12, 1.0 - 1e-12));
  }
  sort_strictly(out);
  return out;
}

}  // namespace

double Grids::price_step() const {
  if (prices.size() < 2) return 0.0;
  return (prices.back() - prices.front()) / static_cast<double>(prices.size() - 1);
}

std::vector<double> uniform_price_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw ValidationError("price grid needs at least 2 points");
  if (!(hi > lo)) throw ValidationError("price grid needs hi > lo");
  std::vector<double> p(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) p[k] = lo + step * static_cast<double>(k);
  p.back() = hi;
  return p;
}

void sort_strictly(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1]) values[i] = values[i - 1] + kJitter;
}

Grids build_grids(const ModelParams& params, const GridSpec& layout, std::uint64_t seed) {
  if (layout.n_values < 2) throw ValidationError("value grids need at least 2 points");
  Grids g;
  g.seed = seed;
  // Separate streams so the buyer grid does not depend on the seller draw count.
  std::mt19937_64 seller_rng(seed);
  std::mt19937_64 buyer_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  g.seller_values = draw_values(params.F_S, layout.n_values, layout.sampling, seller_rng);
  g.buyer_values = draw_values(params.F_B, layout.n_values, layout.sampling, buyer_rng);
  g.prices = uniform_price_grid(layout.price_min, layout.price_max, layout.n_prices);
  return g;
}

}  // namespace bargain
