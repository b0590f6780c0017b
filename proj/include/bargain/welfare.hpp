#pragma once

#include <array>
#include <cstdint>

#include "bargain/solver.hpp"

namespace bargain {

// Shares of buyer actions with CN and CS pooled into C.
struct ActionShares {
  double A = 0.0;
  double C = 0.0;
  double D = 0.0;
};

// Per-listing welfare accounting and the action / price breakdown by seller
// quartile. Quartile k holds grid points i with floor(4 i / n) == k.
struct WelfareReport {
  double total = 0.0;
  double seller_overall = 0.0;
  std::array<double, 4> seller_by_quartile{};
  double buyer_overall = 0.0;
  std::array<double, 4> buyer_by_quartile{};
  double platform_overall = 0.0;
  double buyer_seller_ratio = 0.0;  // N_B / N_S

  ActionShares shares_overall;
  std::array<ActionShares, 4> shares_by_quartile{};
  double p0_overall = 0.0;
  std::array<double, 4> p0_by_quartile{};
  // Accepted counteroffers, pooling p1N over CN cells and p1S over CS cells.
  // NaN when a group has no C cells.
  double p1_overall = 0.0;
  std::array<double, 4> p1_by_quartile{};

  std::uint64_t grid_fingerprint = 0;
};

// Expected discounted commission from a match between grid seller i and buyer j.
double platform_value(std::size_t seller, std::size_t buyer, const Equilibrium& eq);

WelfareReport welfare_report(const Equilibrium& eq);

// Field-by-field cf - baseline. Throws ValidationError if the reports were
// computed on different grids.
WelfareReport counterfactual_compare(const WelfareReport& baseline, const WelfareReport& cf);

// Order-sensitive hash of the grid values.
std::uint64_t grid_fingerprint(const Grids& grids);

// Quartile index of position i on a sorted grid of n points.
inline std::size_t grid_quartile(std::size_t i, std::size_t n) { return 4 * i / n; }

}  // namespace bargain
