#include "bargain/simulator.hpp"

#include <map>
#include <random>

namespace bargain {
namespace {

class ListingSim {
 public:
  ListingSim(const Equilibrium& eq, const SimOptions& opt, std::uint64_t id, std::vector<Event>& out)
      : eq_(eq), opt_(opt), id_(id), out_(out) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
    rng_.seed(seq);
  }

  double run() {
    const auto& pol = eq_.policies;
    const auto& prm = eq_.params;
    const std::size_t i = draw_index(eq_.grids.n_sellers());
    const double p0 = pol.p0[i];
    emit(0.0, EventKind::List, std::nullopt, p0);

    std::exponential_distribution<double> arrive(prm.lambda_S), respond(prm.lambda_R), meet(prm.lambda_B);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double now = 0.0;
    std::uint64_t next_buyer = 1;
    while (true) {
      now += arrive(rng_);
      if (now > opt_.horizon) return eq_.grids.seller_values[i];
      const std::size_t j = draw_index(eq_.grids.n_buyers());
      const std::uint64_t buyer = next_buyer++;
      switch (pol.chi(i, j)) {
        case Action::Accept:
          emit(now, EventKind::Arrival, buyer);
          emit(now, EventKind::Purchase, buyer, p0);
          return eq_.grids.seller_values[i];
        case Action::Decline:
          if (unit(rng_) < opt_.q_D_obs) {
            emit(now, EventKind::Arrival, buyer);
            emit(now, EventKind::Decline, buyer);
          } else {
            emit(now, EventKind::Like, buyer);
          }
          break;
        case Action::Commit: {
          const double p1 = pol.p1N[i];
          const double accepted = now + respond(rng_);
          const double bought = accepted + respond(rng_);
          emit(now, EventKind::Arrival, buyer);
          emit(now, EventKind::Offer, buyer, p1, true);
          if (accepted > opt_.horizon) return eq_.grids.seller_values[i];
          emit(accepted, EventKind::Accept, buyer, p1, true);
          emit(accepted, EventKind::PriceChange, std::nullopt, p1);
          if (bought > opt_.horizon) return eq_.grids.seller_values[i];
          emit(bought, EventKind::Purchase, buyer, p1);
          return eq_.grids.seller_values[i];
        }
        case Action::Search: {
          const double p1 = *pol.p1S(i, j);
          // The new seller arrives at rate lambda_B from the match; the
          // response is ordered before it.
          const double decided = now + meet(rng_);
          const double accepted = std::min(now + respond(rng_), decided);
          emit(now, EventKind::Arrival, buyer);
          emit(now, EventKind::Offer, buyer, p1, false);
          if (accepted > opt_.horizon) return eq_.grids.seller_values[i];
          emit(accepted, EventKind::Accept, buyer, p1, false);
          emit(accepted, EventKind::PriceChange, std::nullopt, p1);
          if (decided > opt_.horizon) return eq_.grids.seller_values[i];
          const std::size_t other = draw_index(eq_.grids.n_sellers());
          const double b = eq_.grids.buyer_values[j];
          if (eq_.values.V_B(other, j) < b - p1) {
            emit(decided, EventKind::Purchase, buyer, p1);
            return eq_.grids.seller_values[i];
          }
          emit(decided, EventKind::Walkaway, buyer, p1);
          if (unit(rng_) < prm.kappa) {
            emit(decided, EventKind::ExogenousSale, std::nullopt, p1);
            return eq_.grids.seller_values[i];
          }
          emit(decided, EventKind::PriceChange, std::nullopt, p0);
          now = decided;
          break;
        }
      }
    }
  }

 private:
  std::size_t draw_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  void emit(double time, EventKind kind, std::optional<std::uint64_t> buyer,
            std::optional<double> price = std::nullopt, std::optional<bool> committed = std::nullopt) {
    out_.push_back(Event{id_, time, kind, buyer, price, committed});
  }

  const Equilibrium& eq_;
  const SimOptions& opt_;
  std::uint64_t id_;
  std::vector<Event>& out_;
  std::mt19937_64 rng_;
};

}  // namespace

EventLog simulate_market(const Equilibrium& eq, const SimOptions& options) {
  options.validate();
  eq.params.validate();
  if (eq.grids.n_sellers() == 0 || eq.grids.n_buyers() == 0)
    throw ValidationError("simulate_market: equilibrium has empty grids");
  EventLog log;
  log.options = options;
  log.true_params = eq.params;
  log.n_listings = options.n_listings;
  log.seller_value_hidden.reserve(options.n_listings);
  for (std::uint64_t k = 0; k < options.n_listings; ++k)
    log.seller_value_hidden.push_back(ListingSim(eq, options, k, log.events).run());
  return log;
}

LogSummary summarize_log(const EventLog& log) {
  LogSummary s;
  double sale_ratio = 0.0, sale_time = 0.0, accept_to_purchase = 0.0, gap_sum = 0.0;
  std::uint64_t accept_to_purchase_n = 0, gaps = 0;
  double first_a = 0, first_c = 0, first_d = 0, all_a = 0, all_c = 0, all_d = 0;

  const auto& ev = log.events;
  std::size_t k = 0;
  while (k < ev.size()) {
    const auto id = ev[k].listing_id;
    std::size_t end = k;
    while (end < ev.size() && ev[end].listing_id == id) ++end;
    ++s.listings;
    const double p0 = ev[k].price.value_or(0.0);
    bool first = true, bargained = false, sold = false;
    double available = 0.0;
    std::map<std::uint64_t, double> accepted_at;
    auto tally = [&](char kind) {
      (kind == 'A' ? all_a : kind == 'C' ? all_c : all_d) += 1;
      if (first) (kind == 'A' ? first_a : kind == 'C' ? first_c : first_d) += 1;
      first = false;
    };
    for (std::size_t m = k; m < end; ++m) {
      const auto& e = ev[m];
      switch (e.kind) {
        case EventKind::Arrival:
        case EventKind::Like: {
          ++s.matches;
          if (e.kind == EventKind::Arrival) ++s.observable_matches;
          gap_sum += e.time - available;
          ++gaps;
          available = e.time;
          if (e.kind == EventKind::Like) {
            tally('D');
          } else if (m + 1 < end) {
            const auto& next = ev[m + 1];
            if (next.kind == EventKind::Purchase && next.buyer_id == e.buyer_id) tally('A');
            else if (next.kind == EventKind::Offer) tally('C');
            else tally('D');
          }
          break;
        }
        case EventKind::Offer:
          ++s.offers;
          if (e.committed.value_or(false)) ++s.committed_offers;
          break;
        case EventKind::Accept:
          if (e.buyer_id) accepted_at[*e.buyer_id] = e.time;
          if (!e.committed.value_or(true)) ++s.accepted_noncommitted;
          break;
        case EventKind::Walkaway:
          ++s.walkaways;
          available = e.time;
          break;
        case EventKind::Purchase:
        case EventKind::ExogenousSale:
          sold = true;
          if (e.kind == EventKind::Purchase) ++s.purchases;
          else ++s.exogenous_sales;
          // an exogenous sale closes at the accepted counteroffer
          bargained = e.kind == EventKind::ExogenousSale || (e.buyer_id && accepted_at.count(*e.buyer_id));
          if (p0 > 0.0) sale_ratio += e.price.value_or(0.0) / p0;
          sale_time += e.time;
          if (e.kind == EventKind::Purchase && e.buyer_id) {
            auto it = accepted_at.find(*e.buyer_id);
            if (it != accepted_at.end()) {
              accept_to_purchase += e.time - it->second;
              ++accept_to_purchase_n;
            }
          }
          break;
        default:
          break;
      }
    }
    if (sold) {
      ++s.sold;
      if (bargained) ++s.sold_with_bargaining;
    } else {
      ++s.censored;
    }
    k = end;
  }

  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  const double n = static_cast<double>(s.listings);
  s.offers_per_listing = ratio(static_cast<double>(s.offers), n);
  s.matches_per_listing = ratio(static_cast<double>(s.matches), n);
  s.mean_sale_to_list = ratio(sale_ratio, static_cast<double>(s.sold));
  s.mean_time_to_sale = ratio(sale_time, static_cast<double>(s.sold));
  s.mean_time_acceptance_to_purchase = ratio(accept_to_purchase, static_cast<double>(accept_to_purchase_n));
  s.mean_inter_arrival = ratio(gap_sum, static_cast<double>(gaps));
  const double all = all_a + all_c + all_d;
  const double firsts = first_a + first_c + first_d;
  if (all > 0) s.shares_all = {all_a / all, all_c / all, all_d / all};
  if (firsts > 0) s.shares_first = {first_a / firsts, first_c / firsts, first_d / firsts};
  s.walkaway_share = ratio(static_cast<double>(s.walkaways), static_cast<double>(s.accepted_noncommitted));
  return s;
}

}  // namespace bargain
