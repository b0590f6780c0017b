#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bargain/smoothing.hpp"
#include "bargain/solver.hpp"
#include "support.hpp"

using namespace bargain;

TEST_CASE("grids") {
  ModelParams p;
  const auto g = build_grids(p, GridSpec{}, 42);
  CHECK(g.n_sellers() == 100);
  CHECK(g.n_buyers() == 100);
  CHECK(g.n_prices() == 200);
  CHECK(g.prices.front() == 0.0);
  CHECK(g.prices.back() == 100000.0);
  CHECK(g.price_step() == doctest::Approx(502.5125628));
  for (std::size_t k = 1; k < g.n_sellers(); ++k) {
    CHECK(g.seller_values[k] > g.seller_values[k - 1]);
    CHECK(g.buyer_values[k] > g.buyer_values[k - 1]);
  }
  CHECK(build_grids(p, GridSpec{}, 42) == g);
  CHECK_FALSE(build_grids(p, GridSpec{}, 43) == g);

  SUBCASE("point mass") {
    ModelParams q;
    q.F_S = ValueDistribution::normal(9000.0, 0.0);
    const auto h = build_grids(q, GridSpec{}, 1);
    for (double s : h.seller_values) CHECK(std::abs(s - 9000.0) < 1e-3);
    CHECK(h.seller_values.back() > h.seller_values.front());
  }
  SUBCASE("iid sampling") {
    GridSpec layout;
    layout.sampling = GridSampling::Iid;
    const auto h = build_grids(p, layout, 5);
    CHECK(h.n_sellers() == 100);
    CHECK(std::is_sorted(h.buyer_values.begin(), h.buyer_values.end()));
  }
  SUBCASE("degenerate sizes") {
    GridSpec layout;
    layout.n_values = 1;
    CHECK_THROWS_AS(build_grids(p, layout, 1), ValidationError);
    CHECK_THROWS_AS(uniform_price_grid(0.0, 1.0, 1), ValidationError);
  }
}

TEST_CASE("index smoothing") {
  const std::vector<double> flat(50, 3.25);
  const auto out = smooth_values(flat, 5.0);
  for (double x : out) CHECK(std::abs(x - 3.25) < 1e-12);

  std::vector<double> ramp(200);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  for (auto& x : ramp) x = 10.0 + 2.5 * x;
  CHECK(smooth_values(ramp, 0.0) == ramp);
  const auto sm = smooth_values(ramp, 5.0);
  for (std::size_t i = 60; i < 140; ++i) CHECK(std::abs(sm[i] - ramp[i]) < 1e-9);

  SUBCASE("local linear variant keeps lines in uneven coordinates") {
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::pow(static_cast<double>(i), 1.7);
      y[i] = 4.0 - 0.3 * x[i];
    }
    const auto ll = smooth_values_local_linear(y, x, 5.0);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(ll[i] == doctest::Approx(y[i]).epsilon(1e-9));
  }
  SUBCASE("isotonic projection") {
    std::vector<double> v{5.0, 3.0, 4.0, 1.0};
    CHECK(project_nonincreasing(v));
    CHECK(v == std::vector<double>{5.0, 3.5, 3.5, 1.0});
    CHECK_FALSE(project_nonincreasing(v));
  }
}

TEST_CASE("one step from zero values") {
  ModelParams p;
  GridSpec layout;
  layout.n_values = 20;
  layout.n_prices = 60;
  const auto g = build_grids(p, layout, 3);
  ValueFunctions zero;
  zero.U_S.assign(g.n_sellers(), 0.0);
  zero.U_B.assign(g.n_buyers(), 0.0);
  zero.V_B = Table<double>(g.n_sellers(), g.n_buyers(), 0.0);

  const auto br = best_responses(zero, p, g, false);
  const auto oracle = testing::oracle_best_responses(zero, p, g, false);
  for (std::size_t i = 0; i < g.n_sellers(); ++i)
    CHECK(br.image.U_S[i] == doctest::Approx(oracle.objective_at_p0[i]).epsilon(1e-12));

  SolverOptions o;
  const auto step = iterate_once(zero, p, g, o);
  const auto smoothed = smooth_values_local_linear(br.image.U_S, g.seller_values, o.smoothing_bandwidth);
  for (std::size_t i = 0; i < g.n_sellers(); ++i)
    CHECK(step.values.U_S[i] == doctest::Approx(o.damping * smoothed[i]).epsilon(1e-12));
}

TEST_CASE("converged values are a fixed point") {
  const auto& eq = testing::baseline();
  REQUIRE(eq.converged);
  CHECK(eq.residual_US <= eq.options.tol);
  CHECK(eq.residual_UB <= eq.options.tol);
  const auto step = iterate_once(eq.values, eq.params, eq.grids, eq.options);
  CHECK(step.residual_US <= 2.0 * eq.options.tol);
  CHECK(step.residual_UB <= 2.0 * eq.options.tol);
}

TEST_CASE("small instance equals brute-force best responses") {
  for (std::uint64_t seed : {42u, 7u}) {
    for (bool fc : {false, true}) {
      const auto eq = testing::small_instance(fc, seed);
      REQUIRE(eq.converged);
      const auto o = testing::oracle_best_responses(eq.values, eq.params, eq.grids, fc);
      for (std::size_t i = 0; i < eq.grids.n_sellers(); ++i) {
        CHECK(eq.policies.p0_index[i] == o.p0_index[i]);
        CHECK(eq.policies.p1N[i] == doctest::Approx(o.p1N[i]).epsilon(1e-12));
        for (std::size_t j = 0; j < eq.grids.n_buyers(); ++j) {
          CHECK(eq.policies.chi(i, j) == o.chi[i][j]);
          CHECK(eq.policies.p1S(i, j) == o.p1S[i][j]);
        }
      }
    }
  }
}

TEST_CASE("full commitment removes CS and raises list prices") {
  const auto& base = testing::baseline();
  const auto& cf = testing::full_commitment();
  REQUIRE(cf.converged);
  for (Action a : cf.policies.chi.data()) CHECK(a != Action::Search);
  for (const auto& p1 : cf.policies.p1S.data()) CHECK_FALSE(p1.has_value());
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  CHECK(mean(cf.policies.p0) > mean(base.policies.p0));
}

TEST_CASE("list prices are nearly monotone in the seller value") {
  const auto& eq = testing::baseline();
  for (std::size_t i = 1; i < eq.grids.n_sellers(); ++i)
    CHECK(eq.policies.p0[i] >= eq.policies.p0[i - 1] - eq.grids.price_step() - 1e-9);
}

TEST_CASE("solver is deterministic") {
  const auto a = testing::small_instance(false, 11);
  const auto b = testing::small_instance(false, 11);
  CHECK(a.values == b.values);
  CHECK(a.policies == b.policies);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("no buyer arrivals leaves sellers with nothing") {
  ModelParams p;
  p.lambda_S = 1e-7;
  GridSpec layout;
  layout.n_values = 20;
  layout.n_prices = 100;
  const auto eq = solve_equilibrium(p, build_grids(p, layout, 9), SolverOptions{});
  for (double us : eq.values.U_S) CHECK(std::abs(us) < 1e-2);
  // the price serves only buyers who would accept it outright
  for (std::size_t i = 0; i < eq.grids.n_sellers(); ++i) {
    bool any_accept = false;
    for (std::size_t j = 0; j < eq.grids.n_buyers(); ++j) any_accept |= eq.policies.chi(i, j) == Action::Accept;
    CHECK(any_accept);
  }
}

TEST_CASE("unconverged runs are flagged") {
  ModelParams p;
  GridSpec layout;
  layout.n_values = 10;
  layout.n_prices = 40;
  SolverOptions o;
  o.max_iters = 2;
  o.tol = 1e-12;
  const auto eq = solve_equilibrium(p, build_grids(p, layout, 1), o);
  CHECK_FALSE(eq.converged);
  CHECK(eq.iterations == 2);
  CHECK(eq.trace.size() == 2);
}

TEST_CASE("solver options are validated") {
  SolverOptions o;
  o.damping = 1.5;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o = SolverOptions{};
  o.smoothing_bandwidth = -1.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
}
