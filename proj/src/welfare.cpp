#include "bargain/welfare.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace bargain {
namespace {

template <typename F>
std::array<double, 4> quartile_means(std::size_t n, F value) {
  std::array<double, 4> sum{};
  std::array<double, 4> count{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = grid_quartile(i, n);
    sum[q] += value(i);
    count[q] += 1.0;
  }
  for (std::size_t q = 0; q < 4; ++q)
    sum[q] = count[q] > 0 ? sum[q] / count[q] : std::numeric_limits<double>::quiet_NaN();
  return sum;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

struct GroupTally {
  double a = 0, c = 0, d = 0, p1_sum = 0;

  ActionShares shares() const {
    const double n = a + c + d;
    if (n == 0) return {};
    return {a / n, c / n, d / n};
  }
  double p1_mean() const { return c > 0 ? p1_sum / c : std::numeric_limits<double>::quiet_NaN(); }
};

}  // namespace

std::uint64_t grid_fingerprint(const Grids& grids) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](double x) {
    h ^= std::bit_cast<std::uint64_t>(x);
    h *= 1099511628211ULL;
  };
  for (const auto* v : {&grids.seller_values, &grids.buyer_values, &grids.prices}) {
    mix(static_cast<double>(v->size()));
    for (double x : *v) mix(x);
  }
  return h;
}

double platform_value(std::size_t seller, std::size_t buyer, const Equilibrium& eq) {
  const auto& pol = eq.policies;
  const auto& prm = eq.params;
  switch (pol.chi(seller, buyer)) {
    case Action::Accept: return prm.t * pol.p0[seller];
    case Action::Commit: return prm.t * prm.delta_R() * pol.p1N[seller];
    case Action::Search: {
      const double completes = 1.0 - (1.0 - prm.kappa) * pol.walk_prob(seller, buyer);
      return prm.t * prm.delta_B() * completes * pol.p1S(seller, buyer).value_or(0.0);
    }
    case Action::Decline: return 0.0;
  }
  return 0.0;
}

WelfareReport welfare_report(const Equilibrium& eq) {
  const std::size_t ns = eq.grids.n_sellers();
  const std::size_t nb = eq.grids.n_buyers();
  const auto& pol = eq.policies;
  WelfareReport rep;
  rep.grid_fingerprint = grid_fingerprint(eq.grids);
  rep.buyer_seller_ratio = static_cast<double>(eq.params.N_B) / static_cast<double>(eq.params.N_S);

  rep.seller_overall = mean_of(eq.values.U_S);
  rep.seller_by_quartile = quartile_means(ns, [&](std::size_t i) { return eq.values.U_S[i]; });
  rep.buyer_overall = mean_of(eq.values.U_B);
  rep.buyer_by_quartile = quartile_means(nb, [&](std::size_t j) { return eq.values.U_B[j]; });

  double platform = 0.0;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nb; ++j) platform += platform_value(i, j, eq);
  rep.platform_overall = platform / static_cast<double>(ns * nb);

  rep.total = rep.seller_overall + rep.buyer_seller_ratio * rep.buyer_overall + rep.platform_overall;

  GroupTally all;
  std::array<GroupTally, 4> by_q;
  for (std::size_t i = 0; i < ns; ++i) {
    auto& g = by_q[grid_quartile(i, ns)];
    for (std::size_t j = 0; j < nb; ++j) {
      switch (pol.chi(i, j)) {
        case Action::Accept: g.a += 1; all.a += 1; break;
        case Action::Decline: g.d += 1; all.d += 1; break;
        case Action::Commit:
          g.c += 1; all.c += 1;
          g.p1_sum += pol.p1N[i]; all.p1_sum += pol.p1N[i];
          break;
        case Action::Search: {
          const double p1 = pol.p1S(i, j).value_or(0.0);
          g.c += 1; all.c += 1;
          g.p1_sum += p1; all.p1_sum += p1;
          break;
        }
      }
    }
  }
  rep.shares_overall = all.shares();
  rep.p1_overall = all.p1_mean();
  for (std::size_t q = 0; q < 4; ++q) {
    rep.shares_by_quartile[q] = by_q[q].shares();
    rep.p1_by_quartile[q] = by_q[q].p1_mean();
  }
  rep.p0_overall = mean_of(pol.p0);
  rep.p0_by_quartile = quartile_means(ns, [&](std::size_t i) { return pol.p0[i]; });
  return rep;
}

WelfareReport counterfactual_compare(const WelfareReport& base, const WelfareReport& cf) {
  if (base.grid_fingerprint != cf.grid_fingerprint)
    throw ValidationError("counterfactual_compare: reports were computed on different grids");
  auto d4 = [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
    std::array<double, 4> out{};
    for (std::size_t q = 0; q < 4; ++q) out[q] = b[q] - a[q];
    return out;
  };
  auto ds = [](const ActionShares& a, const ActionShares& b) {
    return ActionShares{b.A - a.A, b.C - a.C, b.D - a.D};
  };
  WelfareReport out;
  out.grid_fingerprint = base.grid_fingerprint;
  out.buyer_seller_ratio = base.buyer_seller_ratio;
  out.total = cf.total - base.total;
  out.seller_overall = cf.seller_overall - base.seller_overall;
  out.seller_by_quartile = d4(base.seller_by_quartile, cf.seller_by_quartile);
  out.buyer_overall = cf.buyer_overall - base.buyer_overall;
  out.buyer_by_quartile = d4(base.buyer_by_quartile, cf.buyer_by_quartile);
  out.platform_overall = cf.platform_overall - base.platform_overall;
  out.shares_overall = ds(base.shares_overall, cf.shares_overall);
  for (std::size_t q = 0; q < 4; ++q)
    out.shares_by_quartile[q] = ds(base.shares_by_quartile[q], cf.shares_by_quartile[q]);
  out.p0_overall = cf.p0_overall - base.p0_overall;
  out.p0_by_quartile = d4(base.p0_by_quartile, cf.p0_by_quartile);
  out.p1_overall = cf.p1_overall - base.p1_overall;
  out.p1_by_quartile = d4(base.p1_by_quartile, cf.p1_by_quartile);
  return out;
}

}  // namespace bargain
