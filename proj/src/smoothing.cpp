#include "bargain/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace bargain {

std::vector<double> smooth_values(std::span<const double> values, double bandwidth) {
  if (bandwidth < 0.0) throw std::invalid_argument("smoothing bandwidth must be >= 0");
  std::vector<double> out(values.begin(), values.end());
  if (bandwidth == 0.0 || values.size() < 2) return out;

  const auto n = static_cast<long>(values.size());
  const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  // Weights below exp(-50) do not change a double sum.
  const long reach = static_cast<long>(std::ceil(10.0 * bandwidth));
  // Averaging offsets from the centre value returns constants exactly.
  for (long i = 0; i < n; ++i) {
    const double v0 = values[static_cast<std::size_t>(i)];
    double num = 0.0;
    double den = 0.0;
    const long lo = std::max(0L, i - reach);
    const long hi = std::min(n - 1, i + reach);
    for (long j = lo; j <= hi; ++j) {
      const double d = static_cast<double>(i - j);
      const double w = std::exp(-d * d * inv2bw2);
      num += w * (values[static_cast<std::size_t>(j)] - v0);
      den += w;
    }
    out[static_cast<std::size_t>(i)] = v0 + num / den;
  }
  return out;
}

std::vector<double> smooth_values_local_linear(std::span<const double> values,
                                               std::span<const double> coords, double bandwidth) {
  if (bandwidth < 0.0) throw std::invalid_argument("smoothing bandwidth must be >= 0");
  if (coords.size() != values.size())
    throw std::invalid_argument("smoothing coordinates and values differ in length");
  std::vector<double> out(values.begin(), values.end());
  if (bandwidth == 0.0 || values.size() < 3) return out;

  const auto n = static_cast<long>(values.size());
  const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const long reach = static_cast<long>(std::ceil(10.0 * bandwidth));
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - reach);
    const long hi = std::min(n - 1, i + reach);
    const double x0 = coords[static_cast<std::size_t>(i)];
    const double y0 = values[static_cast<std::size_t>(i)];
    double sw = 0.0, swx = 0.0, swxx = 0.0, swy = 0.0, swxy = 0.0;
    for (long j = lo; j <= hi; ++j) {
      const double d = static_cast<double>(i - j);
      const double w = std::exp(-d * d * inv2bw2);
      const double x = coords[static_cast<std::size_t>(j)] - x0;
      const double y = values[static_cast<std::size_t>(j)] - y0;
      sw += w;
      swx += w * x;
      swxx += w * x * x;
      swy += w * y;
      swxy += w * x * y;
    }
    const double det = sw * swxx - swx * swx;
    // Degenerate spread in the coordinates: fall back to the weighted mean.
    if (std::abs(det) <= 1e-12 * sw * swxx || swxx == 0.0)
      out[static_cast<std::size_t>(i)] = y0 + swy / sw;
    else
      out[static_cast<std::size_t>(i)] = y0 + (swxx * swy - swx * swxy) / det;
  }
  return out;
}

void smooth_table(Table<double>& table, std::span<const double> seller_coords,
                  std::span<const double> buyer_coords, double bandwidth) {
  if (bandwidth == 0.0) return;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto row = table.row(r);
    auto sm = smooth_values_local_linear(row, buyer_coords, bandwidth);
    std::copy(sm.begin(), sm.end(), row.begin());
  }
  std::vector<double> col(table.rows());
  for (std::size_t c = 0; c < table.cols(); ++c) {
    for (std::size_t r = 0; r < table.rows(); ++r) col[r] = table(r, c);
    auto sm = smooth_values_local_linear(col, seller_coords, bandwidth);
    for (std::size_t r = 0; r < table.rows(); ++r) table(r, c) = sm[r];
  }
}

bool project_nonincreasing(std::span<double> values) {
  bool violated = false;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[i - 1]) {
      violated = true;
      break;
    }
  if (!violated) return false;

  // Blocks of pooled means, each with its length.
  std::vector<double> mean;
  std::vector<std::size_t> len;
  for (double v : values) {
    mean.push_back(v);
    len.push_back(1);
    while (mean.size() > 1 && mean[mean.size() - 1] > mean[mean.size() - 2]) {
      const std::size_t k = mean.size() - 1;
      const double total = mean[k] * static_cast<double>(len[k]) +
                           mean[k - 1] * static_cast<double>(len[k - 1]);
      len[k - 1] += len[k];
      mean[k - 1] = total / static_cast<double>(len[k - 1]);
      mean.pop_back();
      len.pop_back();
    }
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < mean.size(); ++b)
    for (std::size_t k = 0; k < len[b]; ++k) values[pos++] = mean[b];
  return true;
}

}  // namespace bargain
