#pragma once

#include <cstdint>
#include <vector>

#include "bargain/params.hpp"

namespace bargain {

// How value grids are drawn from F_S and F_B.
enum class GridSampling {
  Stratified,  // one uniform draw inside each of n equal-probability strata
  Iid,         // n independent draws
};

// Discretized state and price spaces. The value grids are sorted samples and
// each point carries probability mass 1/n.
struct Grids {
  std::vector<double> seller_values;
  std::vector<double> buyer_values;
  std::vector<double> prices;
  std::uint64_t seed = 0;

  std::size_t n_sellers() const { return seller_values.size(); }
  std::size_t n_buyers() const { return buyer_values.size(); }
  std::size_t n_prices() const { return prices.size(); }
  double price_step() const;

  bool operator==(const Grids&) const = default;
};

struct GridSpec {
  std::size_t n_values = 100;
  std::size_t n_prices = 200;
  double price_min = 0.0;
  double price_max = 100000.0;
  GridSampling sampling = GridSampling::Stratified;
};

// Deterministic given the seed. Throws ValidationError on degenerate sizes.
Grids build_grids(const ModelParams& params, const GridSpec& layout, std::uint64_t seed);

// Uniform grid with exact endpoints.
std::vector<double> uniform_price_grid(double lo, double hi, std::size_t n);

// Sorts and separates ties by a minimal upward jitter so values are strictly increasing.
void sort_strictly(std::vector<double>& values);

}  // namespace bargain
