#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bargain/estimator.hpp"
#include "bargain/simulator.hpp"
#include "support.hpp"

using namespace bargain;

namespace {

std::size_t count_kind(const EventLog& log, EventKind k) {
  std::size_t n = 0;
  for (const auto& e : log.events) n += e.kind == k;
  return n;
}

// Every buyer searches, and every seller is worth walking to.
Equilibrium forced_walkaway(double kappa) {
  auto eq = testing::small_instance();
  eq.params.kappa = kappa;
  for (std::size_t i = 0; i < eq.grids.n_sellers(); ++i)
    for (std::size_t j = 0; j < eq.grids.n_buyers(); ++j) {
      eq.policies.chi(i, j) = Action::Search;
      eq.policies.p1S(i, j) = 12000.0;
      eq.values.V_B(i, j) = 1e9;
    }
  return eq;
}

}  // namespace

TEST_CASE("simulated logs satisfy the log invariants") {
  SimOptions o;
  o.n_listings = 2000;
  o.seed = 3;
  const auto log = simulate_market(testing::baseline(), o);
  CHECK_NOTHROW(check_event_log(log));
  const auto s = summarize_log(log);
  CHECK(s.listings == 2000);
  CHECK(s.purchases + s.exogenous_sales + s.censored == 2000);
  CHECK(log.seller_value_hidden.size() == 2000);

  // committed offers never end in a walkaway
  std::map<std::pair<std::uint64_t, std::uint64_t>, bool> committed;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::Offer) committed[{e.listing_id, *e.buyer_id}] = *e.committed;
    if (e.kind == EventKind::Walkaway) CHECK_FALSE(committed.at({e.listing_id, *e.buyer_id}));
  }
}

TEST_CASE("simulation is deterministic and listing streams are independent") {
  SimOptions o;
  o.n_listings = 300;
  o.seed = 99;
  const auto a = simulate_market(testing::baseline(), o);
  const auto b = simulate_market(testing::baseline(), o);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].time == b.events[k].time);
    CHECK(a.events[k].kind == b.events[k].kind);
  }
  o.n_listings = 150;
  const auto half = simulate_market(testing::baseline(), o);
  for (std::size_t k = 0; k < half.events.size(); ++k) {
    CHECK(half.events[k].listing_id == a.events[k].listing_id);
    CHECK(half.events[k].time == a.events[k].time);
  }
}

TEST_CASE("fast arrivals and universal acceptance sell at the list price immediately") {
  auto eq = testing::small_instance();
  eq.params.lambda_S = 1e6;
  for (auto& a : eq.policies.chi.data()) a = Action::Accept;
  SimOptions o;
  o.n_listings = 200;
  const auto log = simulate_market(eq, o);
  const auto recs = listing_records(log);
  for (const auto& r : recs) {
    CHECK(r.sold);
    CHECK(r.sale_price == r.p0);
    CHECK(r.sale_time < 1e-3);
  }
}

TEST_CASE("walkaways and exogenous sales") {
  SimOptions o;
  o.n_listings = 300;
  SUBCASE("kappa = 0") {
    const auto log = simulate_market(forced_walkaway(0.0), o);
    CHECK(count_kind(log, EventKind::ExogenousSale) == 0);
    CHECK(count_kind(log, EventKind::Walkaway) > 0);
    CHECK_NOTHROW(check_event_log(log));
  }
  SUBCASE("kappa = 1") {
    const auto log = simulate_market(forced_walkaway(1.0), o);
    CHECK(count_kind(log, EventKind::ExogenousSale) == count_kind(log, EventKind::Walkaway));
  }
}

TEST_CASE("walkaway share matches the policy-implied probability") {
  const auto& eq = testing::baseline();
  SimOptions o;
  o.n_listings = 10000;
  o.seed = 5;
  const auto s = summarize_log(simulate_market(eq, o));

  // Per seller, arrivals are i.i.d. over the buyer grid until a terminal
  // outcome, so CS matches are spread evenly over that row's CS cells.
  const std::size_t ns = eq.grids.n_sellers(), nb = eq.grids.n_buyers();
  const double kappa = eq.params.kappa;
  double weight = 0.0, walks = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    double stop = 0.0, cs = 0.0, w = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      const Action a = eq.policies.chi(i, j);
      if (a == Action::Accept || a == Action::Commit) stop += 1.0;
      if (a == Action::Search) {
        const double W = eq.policies.walk_prob(i, j);
        stop += 1.0 - W + W * kappa;
        cs += 1.0;
        w += W;
      }
    }
    if (cs == 0.0) continue;
    weight += cs / stop;
    walks += w / stop;
  }
  const double expected = walks / weight;
  const double n = static_cast<double>(s.accepted_noncommitted);
  REQUIRE(n > 100);
  const double se = std::sqrt(std::max(expected * (1.0 - expected), 1.0 / n) / n);
  CHECK(std::abs(s.walkaway_share - expected) <= 4.0 * se);
}

TEST_CASE("inter-arrival times have mean 1 / lambda_S") {
  const auto& eq = testing::baseline();
  SimOptions o;
  o.n_listings = 5000;
  o.seed = 8;
  const auto s = summarize_log(simulate_market(eq, o));
  const double mean = 1.0 / eq.params.lambda_S;
  const double se = mean / std::sqrt(static_cast<double>(s.matches));
  CHECK(std::abs(s.mean_inter_arrival - mean) <= 3.0 * se);
}

TEST_CASE("first-match action shares match the equilibrium shares") {
  const auto& eq = testing::baseline();
  SimOptions o;
  o.n_listings = 10000;
  o.seed = 12;
  const auto s = summarize_log(simulate_market(eq, o));
  // sellers and first buyers are both drawn uniformly from the grids
  const auto rep = welfare_report(eq);
  const double n = static_cast<double>(s.listings);
  for (auto [sim, grid] : {std::pair{s.shares_first.A, rep.shares_overall.A},
                           std::pair{s.shares_first.C, rep.shares_overall.C},
                           std::pair{s.shares_first.D, rep.shares_overall.D}})
    CHECK(std::abs(sim - grid) <= 3.0 * std::sqrt(grid * (1.0 - grid) / n));
}

TEST_CASE("summaries of tiny logs") {
  SUBCASE("empty") {
    const auto s = summarize_log(EventLog{});
    CHECK(s.listings == 0);
    CHECK(s.sold == 0);
    CHECK(s.matches == 0);
    CHECK(s.walkaway_share == 0.0);
  }
  SUBCASE("one sale at the list price") {
    EventLog log;
    log.events = {{0, 0.0, EventKind::List, std::nullopt, 15000.0, std::nullopt},
                  {0, 1.5, EventKind::Arrival, 1, std::nullopt, std::nullopt},
                  {0, 1.5, EventKind::Purchase, 1, 15000.0, std::nullopt}};
    const auto s = summarize_log(log);
    CHECK(s.sold == 1);
    CHECK(s.sold_with_bargaining == 0);
    CHECK(s.mean_sale_to_list == 1.0);
    CHECK(s.shares_first.A == 1.0);
  }
}

TEST_CASE("event CSV") {
  SimOptions o;
  o.n_listings = 200;
  o.seed = 4;
  const auto log = simulate_market(testing::baseline(), o);

  SUBCASE("round trip is lossless") {
    std::stringstream buf;
    write_event_csv(buf, log);
    const auto back = read_event_csv(buf);
    REQUIRE(back.events.size() == log.events.size());
    for (std::size_t k = 0; k < log.events.size(); ++k) {
      const auto& a = log.events[k];
      const auto& b = back.events[k];
      CHECK(a.listing_id == b.listing_id);
      CHECK(a.time == b.time);
      CHECK(a.kind == b.kind);
      CHECK(a.buyer_id == b.buyer_id);
      CHECK(a.price == b.price);
      CHECK(a.committed == b.committed);
    }
    CHECK(back.n_listings == 200);
    // the hidden seller values stay out of the CSV
    CHECK(buf.str().find("seller") == std::string::npos);
  }
  SUBCASE("sidecar restores the simulation settings") {
    std::stringstream buf;
    write_event_csv(buf, log);
    auto back = read_event_csv(buf);
    apply_event_sidecar(back, event_sidecar_json(log, "abc"));
    REQUIRE(back.options);
    CHECK(back.options->horizon == o.horizon);
    CHECK(back.seller_value_hidden == log.seller_value_hidden);
  }
  SUBCASE("empty simulation writes only the header") {
    SimOptions none;
    none.n_listings = 0;
    std::stringstream buf;
    write_event_csv(buf, simulate_market(testing::baseline(), none));
    CHECK(buf.str() == std::string(kEventCsvHeader) + "\n");
  }
  SUBCASE("malformed rows name their line") {
    std::stringstream bad(std::string(kEventCsvHeader) +
                          "\n0,0,List,,15000,\n0,abc,Arrival,1,,\n");
    try {
      read_event_csv(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::stringstream kind(std::string(kEventCsvHeader) + "\n0,0,Teleport,,,\n");
    CHECK_THROWS_AS(read_event_csv(kind), ParseError);
    std::stringstream header("listing,time\n");
    CHECK_THROWS_AS(read_event_csv(header), ParseError);
  }
}

TEST_CASE("log invariant checks") {
  EventLog log;
  log.events = {{0, 0.0, EventKind::List, std::nullopt, 15000.0, std::nullopt},
                {0, 2.0, EventKind::Arrival, 1, std::nullopt, std::nullopt},
                {0, 1.0, EventKind::Arrival, 2, std::nullopt, std::nullopt}};
  CHECK_THROWS_AS(check_event_log(log), InvariantViolation);
  log.events = {{0, 0.0, EventKind::List, std::nullopt, 15000.0, std::nullopt},
                {0, 1.0, EventKind::Accept, 1, 12000.0, false}};
  CHECK_THROWS_AS(check_event_log(log), InvariantViolation);
}
