#pragma once

#include <span>
#include <vector>

#include "bargain/table.hpp"

namespace bargain {

// Gaussian kernel smoothing over grid indices: weights exp(-(i-j)^2 / (2 bw^2)),
// renormalized near the boundaries. A bandwidth of zero is the identity.
std::vector<double> smooth_values(std::span<const double> values, double bandwidth);

// Same Gaussian index weights, but fits a weighted line in the grid
// coordinates instead of a weighted mean. Functions that are linear in the
// coordinates pass through unchanged however unevenly the grid is spaced.
std::vector<double> smooth_values_local_linear(std::span<const double> values,
                                               std::span<const double> coords, double bandwidth);

// Local-linear smoothing of a (seller, buyer) table along the buyer
// dimension, then along the seller dimension.
void smooth_table(Table<double>& table, std::span<const double> seller_coords,
                  std::span<const double> buyer_coords, double bandwidth);

// Least-squares projection onto non-increasing sequences (pool adjacent violators).
// Returns true if the input had to be changed.
bool project_nonincreasing(std::span<double> values);

}  // namespace bargain
