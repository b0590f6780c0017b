#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bargain/grids.hpp"
#include "bargain/params.hpp"
#include "bargain/table.hpp"

namespace bargain {

// Buyer actions upon matching, in the order D < CS < CN < A.
enum class Action : std::uint8_t { Decline = 0, Search = 1, Commit = 2, Accept = 3 };

std::string_view action_name(Action a);    // "D", "CS", "CN", "A"
Action parse_action(std::string_view name);

// Continuation values on the grids. V_B(i, j) is the matched value of buyer j
// facing seller i under the seller's current list price.
struct ValueFunctions {
  std::vector<double> U_S;
  std::vector<double> U_B;
  Table<double> V_B;  // (seller, buyer)

  // V_B(., j) over the seller grid.
  std::vector<double> seller_profile(std::size_t buyer) const;
  bool operator==(const ValueFunctions&) const = default;
};

struct Policies {
  std::vector<std::size_t> p0_index;
  std::vector<double> p0;
  std::vector<double> p1N;
  Table<std::optional<double>> p1S;  // (seller, buyer); empty when no grid price is accepted
  Table<double> walk_prob;           // F_S(s*(b, p1S)); 0 where p1S is absent
  Table<Action> chi;                 // (seller, buyer)
  bool operator==(const Policies&) const = default;
};

// Price at which a committed counteroffer leaves the seller indifferent.
double committed_offer(double s, double us, const ModelParams& params);

enum class CutoffKind { BelowSupport, Interior, AboveSupport };

struct WalkawayCutoff {
  CutoffKind kind = CutoffKind::BelowSupport;
  double s_star = 0.0;         // -inf / +inf for the off-support markers
  std::size_t walk_count = 0;  // grid sellers with V_B(s', b) >= b - p1
  double density = 0.0;        // interpolated-grid density at s_star (interior only)
};

// Solves V_B(s*, b) = b - p1 on a non-increasing seller profile, interpolating
// linearly between grid sellers. A buyer walks away iff V_B(s', b) >= b - p1.
// Throws InvariantViolation if the profile increases.
WalkawayCutoff walkaway_cutoff(double b, double p1, std::span<const double> seller_values,
                               std::span<const double> vb_profile);

// F_S(s*) under the grid law of sellers.
double walkaway_probability(const WalkawayCutoff& cut, std::size_t n_sellers);

// F_S(s*(b, p)) for every price on the grid.
std::vector<double> walkaway_probabilities(double b, std::span<const double> seller_values,
                                           std::span<const double> vb_profile,
                                           std::span<const double> prices);

// Seller acceptance condition for a noncommitted counteroffer p1.
bool seller_accepts_noncommitted(double s, double us, double p1, double walk_prob,
                                 const ModelParams& params);

struct NoncommittedOffer {
  std::size_t price_index = 0;
  double price = 0.0;
  double walk_prob = 0.0;
};

// Smallest grid price the seller accepts from a searching buyer, given the
// walkaway probability at each grid price.
std::optional<NoncommittedOffer> noncommitted_offer(double s, double us,
                                                    std::span<const double> prices,
                                                    std::span<const double> walk_probs,
                                                    const ModelParams& params);

std::optional<NoncommittedOffer> noncommitted_offer(double s, double b, double us,
                                                    std::span<const double> seller_values,
                                                    std::span<const double> vb_profile,
                                                    std::span<const double> prices,
                                                    const ModelParams& params);

struct ActionValues {
  double accept = 0.0;
  double commit = 0.0;
  double search = 0.0;  // -inf when the noncommitted offer does not exist
  double decline = 0.0;

  double of(Action a) const;
};

// Buyer values of A, CN, CS, D. Pass std::nullopt for p1S to disable CS.
ActionValues buyer_action_values(double b, double p0, double p1N, std::optional<double> p1S,
                                 std::span<const double> vb_profile, double ub,
                                 const ModelParams& params);

// Argmax with ties resolved toward the later action in D < CS < CN < A.
Action buyer_best_action(const ActionValues& v);

// Best action among CN, CS, D (the buyer's choice if A were unavailable).
struct Fallback {
  Action action = Action::Decline;
  double value = 0.0;
};
Fallback best_fallback(const ActionValues& v);

// Action induced by list price p0 for a buyer with the given fallback.
inline Action induced_action(double b, double p0, const Fallback& fb) {
  return b - p0 >= fb.value ? Action::Accept : fb.action;
}

double seller_match_value(double s, double p0, Action chi, double us, const ModelParams& params);

// Expected seller value from posting p0, averaging over the buyer grid.
double seller_objective(double p0, double s, double us, std::span<const double> buyer_values,
                        std::span<const Fallback> fallbacks, const ModelParams& params);

struct PriceChoice {
  std::size_t index = 0;
  double price = 0.0;
  double value = 0.0;
};

// Grid argmax of seller_objective; ties go to the lowest price.
PriceChoice seller_best_price(double s, double us, std::span<const double> buyer_values,
                              std::span<const Fallback> fallbacks, std::span<const double> prices,
                              const ModelParams& params);

struct RegularityReport {
  bool available = false;
  double walk_prob = 0.0;  // F_S(s*)
  double density = 0.0;    // f_S(s*)
  double ds_db = 0.0;
  double ds_dp1 = 0.0;
  double H_b = 0.0;
  double H_p1 = 0.0;
  double lhs = 0.0;  // (1 - F_S(s*)) H_b / H_p1
  double rhs = 0.0;  // delta_R^2 / delta_B - 1
  double assumption3_slack() const { return rhs - lhs; }
  double assumption4_slack() const { return H_p1; }
};

// Regularity terms at cell (seller, buyer) with the offer at prices[price_index].
// Derivatives of s* are centered differences over one buyer-grid and one
// price-grid step. Cells where a neighbouring cutoff is off-support, or that
// sit on a grid boundary, are reported unavailable.
RegularityReport regularity_diagnostics(std::size_t seller, std::size_t buyer,
                                        std::size_t price_index, const Grids& grids,
                                        const ValueFunctions& values, const ModelParams& params);

}  // namespace bargain
