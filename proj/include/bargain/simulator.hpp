#pragma once

#include <cstdint>

#include "bargain/event_log.hpp"
#include "bargain/solver.hpp"
#include "bargain/welfare.hpp"

namespace bargain {

// Event log for `options.n_listings` independent listings playing the
// equilibrium policies. Listing k draws from its own RNG stream, so any subset
// of listings reproduces exactly.
EventLog simulate_market(const Equilibrium& eq, const SimOptions& options);

// Listing- and match-level summary of a log.
struct LogSummary {
  std::uint64_t listings = 0;
  std::uint64_t purchases = 0;
  std::uint64_t exogenous_sales = 0;
  std::uint64_t censored = 0;
  std::uint64_t sold = 0;                   // purchases + exogenous sales
  std::uint64_t sold_with_bargaining = 0;   // sold after an accepted counteroffer
  std::uint64_t matches = 0;                // arrivals + likes
  std::uint64_t observable_matches = 0;     // arrivals
  std::uint64_t offers = 0;
  std::uint64_t committed_offers = 0;
  std::uint64_t accepted_noncommitted = 0;
  std::uint64_t walkaways = 0;
  double offers_per_listing = 0.0;
  double matches_per_listing = 0.0;
  double mean_sale_to_list = 0.0;           // over sold listings
  double mean_time_to_sale = 0.0;           // days, over sold listings
  double mean_time_acceptance_to_purchase = 0.0;
  double mean_inter_arrival = 0.0;          // days between matches, excluding negotiation spells
  ActionShares shares_all;                  // over every match
  ActionShares shares_first;                // over the first match of each listing
  double walkaway_share = 0.0;              // walkaways / accepted noncommitted offers
};

LogSummary summarize_log(const EventLog& log);

}  // namespace bargain
