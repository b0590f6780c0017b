#include "bargain/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bargain {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack allowed when comparing money amounts that are equal up to rounding.
constexpr double kYenTol = 1e-9;

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Decline: return "D";
    case Action::Search: return "CS";
    case Action::Commit: return "CN";
    case Action::Accept: return "A";
  }
  return "?";
}

Action parse_action(std::string_view name) {
  if (name == "D") return Action::Decline;
  if (name == "CS") return Action::Search;
  if (name == "CN") return Action::Commit;
  if (name == "A") return Action::Accept;
  throw ValidationError("unknown action '" + std::string(name) + "'");
}

std::vector<double> ValueFunctions::seller_profile(std::size_t buyer) const {
  std::vector<double> out(V_B.rows());
  for (std::size_t i = 0; i < V_B.rows(); ++i) out[i] = V_B(i, buyer);
  return out;
}

double committed_offer(double s, double us, const ModelParams& params) {
  return (s + us / params.delta_R()) / (1.0 - params.t);
}

WalkawayCutoff walkaway_cutoff(double b, double p1, std::span<const double> seller_values,
                               std::span<const double> vb_profile) {
  const std::size_t n = vb_profile.size();
  if (n == 0 || seller_values.size() != n)
    throw ValidationError("walkaway_cutoff: profile and seller grid sizes differ");
  for (std::size_t i = 1; i < n; ++i) {
    const double scale = std::max({1.0, std::abs(vb_profile[i]), std::abs(vb_profile[i - 1])});
    if (vb_profile[i] > vb_profile[i - 1] + 1e-12 * scale)
      throw InvariantViolation("walkaway_cutoff: V_B increases in the seller value at index " +
                               std::to_string(i));
  }

  const double target = b - p1;
  WalkawayCutoff cut;
  if (vb_profile.front() < target) {
    cut.kind = CutoffKind::BelowSupport;
    cut.s_star = -kInf;
    return cut;
  }
  if (vb_profile.back() >= target) {
    cut.kind = CutoffKind::AboveSupport;
    cut.s_star = kInf;
    cut.walk_count = n;
    return cut;
  }
  // Last index m with V_B >= target; V_B[m+1] < target.
  std::size_t lo = 0;
  std::size_t hi = n - 1;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (vb_profile[mid] >= target)
      lo = mid;
    else
      hi = mid;
  }
  const double drop = vb_profile[lo] - vb_profile[hi];
  const double frac = (vb_profile[lo] - target) / drop;
  const double gap = seller_values[hi] - seller_values[lo];
  cut.kind = CutoffKind::Interior;
  cut.s_star = seller_values[lo] + frac * gap;
  cut.walk_count = lo + 1;
  cut.density = 1.0 / (static_cast<double>(n) * gap);
  return cut;
}

double walkaway_probability(const WalkawayCutoff& cut, std::size_t n_sellers) {
  return static_cast<double>(cut.walk_count) / static_cast<double>(n_sellers);
}

std::vector<double> walkaway_probabilities(double b, std::span<const double> seller_values,
                                           std::span<const double> vb_profile,
                                           std::span<const double> prices) {
  std::vector<double> out(prices.size());
  for (std::size_t k = 0; k < prices.size(); ++k)
    out[k] = walkaway_probability(walkaway_cutoff(b, prices[k], seller_values, vb_profile),
                                  seller_values.size());
  return out;
}

bool seller_accepts_noncommitted(double s, double us, double p1, double walk_prob,
                                 const ModelParams& params) {
  const double lost = (1.0 - params.kappa) * walk_prob;
  const double lhs = params.delta_B() * (lost * us + (1.0 - lost) * ((1.0 - params.t) * p1 - s));
  return lhs >= us - kYenTol;
}

std::optional<NoncommittedOffer> noncommitted_offer(double s, double us,
                                                    std::span<const double> prices,
                                                    std::span<const double> walk_probs,
                                                    const ModelParams& params) {
  for (std::size_t k = 0; k < prices.size(); ++k)
    if (seller_accepts_noncommitted(s, us, prices[k], walk_probs[k], params))
      return NoncommittedOffer{k, prices[k], walk_probs[k]};
  return std::nullopt;
}

std::optional<NoncommittedOffer> noncommitted_offer(double s, double b, double us,
                                                    std::span<const double> seller_values,
                                                    std::span<const double> vb_profile,
                                                    std::span<const double> prices,
                                                    const ModelParams& params) {
  const auto walk = walkaway_probabilities(b, seller_values, vb_profile, prices);
  return noncommitted_offer(s, us, prices, walk, params);
}

double ActionValues::of(Action a) const {
  switch (a) {
    case Action::Accept: return accept;
    case Action::Commit: return commit;
    case Action::Search: return search;
    case Action::Decline: return decline;
  }
  return -kInf;
}

ActionValues buyer_action_values(double b, double p0, double p1N, std::optional<double> p1S,
                                 std::span<const double> vb_profile, double ub,
                                 const ModelParams& params) {
  const double dR = params.delta_R();
  ActionValues v;
  v.accept = b - p0;
  v.commit = dR * dR * (b - p1N);
  v.decline = dR * ub;
  if (p1S && !vb_profile.empty()) {
    const double keep = b - *p1S;
    double sum = 0.0;
    for (double vb : vb_profile) sum += std::max(keep, vb);
    v.search = params.delta_B() * sum / static_cast<double>(vb_profile.size()) -
               params.search_cost_flow();
  } else {
    v.search = -kInf;
  }
  return v;
}

Action buyer_best_action(const ActionValues& v) {
  Action best = Action::Accept;
  double best_value = v.accept;
  for (Action a : {Action::Commit, Action::Search, Action::Decline}) {
    if (v.of(a) > best_value) {
      best = a;
      best_value = v.of(a);
    }
  }
  return best;
}

Fallback best_fallback(const ActionValues& v) {
  Fallback fb{Action::Commit, v.commit};
  for (Action a : {Action::Search, Action::Decline}) {
    if (v.of(a) > fb.value) fb = {a, v.of(a)};
  }
  return fb;
}

double seller_match_value(double s, double p0, Action chi, double us, const ModelParams& params) {
  switch (chi) {
    case Action::Accept: return (1.0 - params.t) * p0 - s;
    case Action::Commit:
    case Action::Search: return params.delta_R() * us;
    case Action::Decline: return us;
  }
  return us;
}

double seller_objective(double p0, double s, double us, std::span<const double> buyer_values,
                        std::span<const Fallback> fallbacks, const ModelParams& params) {
  double sum = 0.0;
  for (std::size_t j = 0; j < buyer_values.size(); ++j)
    sum += seller_match_value(s, p0, induced_action(buyer_values[j], p0, fallbacks[j]), us, params);
  return params.delta_S() * sum / static_cast<double>(buyer_values.size());
}

PriceChoice seller_best_price(double s, double us, std::span<const double> buyer_values,
                              std::span<const Fallback> fallbacks, std::span<const double> prices,
                              const ModelParams& params) {
  if (prices.empty()) throw ValidationError("seller_best_price: empty price grid");
  PriceChoice best{0, prices[0], seller_objective(prices[0], s, us, buyer_values, fallbacks, params)};
  for (std::size_t k = 1; k < prices.size(); ++k) {
    const double v = seller_objective(prices[k], s, us, buyer_values, fallbacks, params);
    if (v > best.value) best = {k, prices[k], v};
  }
  return best;
}

RegularityReport regularity_diagnostics(std::size_t seller, std::size_t buyer,
                                        std::size_t price_index, const Grids& grids,
                                        const ValueFunctions& values, const ModelParams& params) {
  RegularityReport rep;
  rep.rhs = params.delta_R() * params.delta_R() / params.delta_B() - 1.0;
  if (buyer == 0 || buyer + 1 >= grids.n_buyers() || price_index == 0 ||
      price_index + 1 >= grids.n_prices())
    return rep;

  const auto& sv = grids.seller_values;
  const auto& bv = grids.buyer_values;
  const auto& pv = grids.prices;
  const double p1 = pv[price_index];

  const auto here = walkaway_cutoff(bv[buyer], p1, sv, values.seller_profile(buyer));
  const auto b_up = walkaway_cutoff(bv[buyer + 1], p1, sv, values.seller_profile(buyer + 1));
  const auto b_dn = walkaway_cutoff(bv[buyer - 1], p1, sv, values.seller_profile(buyer - 1));
  const auto prof = values.seller_profile(buyer);
  const auto p_up = walkaway_cutoff(bv[buyer], pv[price_index + 1], sv, prof);
  const auto p_dn = walkaway_cutoff(bv[buyer], pv[price_index - 1], sv, prof);
  for (const auto* c : {&here, &b_up, &b_dn, &p_up, &p_dn})
    if (c->kind != CutoffKind::Interior) return rep;

  const double s = sv[seller];
  const double us = values.U_S[seller];
  const double dB = params.delta_B();
  const double keep = 1.0 - params.kappa;
  const double surplus_gap = us - (1.0 - params.t) * p1 + s;

  rep.available = true;
  rep.walk_prob = walkaway_probability(here, sv.size());
  rep.density = here.density;
  rep.ds_db = (b_up.s_star - b_dn.s_star) / (bv[buyer + 1] - bv[buyer - 1]);
  rep.ds_dp1 = (p_up.s_star - p_dn.s_star) / (pv[price_index + 1] - pv[price_index - 1]);
  rep.H_b = dB * keep * rep.density * rep.ds_db * surplus_gap;
  rep.H_p1 = dB * ((1.0 - params.t) * (1.0 - keep * rep.walk_prob) +
                   keep * rep.density * rep.ds_dp1 * surplus_gap);
  rep.lhs = (1.0 - rep.walk_prob) * rep.H_b / rep.H_p1;
  return rep;
}

}  // namespace bargain
