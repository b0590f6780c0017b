#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "bargain/solver.hpp"

namespace testing {

using namespace bargain;

// Benchmark calibration on the seed-42 grids, solved once per test binary.
inline const Equilibrium& baseline() {
  static const Equilibrium eq = [] {
    ModelParams p;
    return solve_equilibrium(p, build_grids(p, GridSpec{}, 42), SolverOptions{});
  }();
  return eq;
}

inline const Equilibrium& full_commitment() {
  static const Equilibrium eq = [] {
    ModelParams p;
    SolverOptions o;
    o.full_commitment = true;
    return solve_equilibrium(p, build_grids(p, GridSpec{}, 42), o);
  }();
  return eq;
}

inline Equilibrium small_instance(bool full_commitment = false, std::uint64_t seed = 42) {
  ModelParams p;
  GridSpec layout;
  layout.n_values = 5;
  layout.n_prices = 50;
  SolverOptions o;
  o.full_commitment = full_commitment;
  o.tol = 1e-8;
  o.max_iters = 5000;
  return solve_equilibrium(p, build_grids(p, layout, seed), o);
}

// Best responses rebuilt from the definitions by brute force, sharing nothing
// with the library beyond the data types.
struct OracleResult {
  std::vector<std::size_t> p0_index;
  std::vector<double> objective_at_p0;
  std::vector<double> p1N;
  std::vector<std::vector<std::optional<double>>> p1S;  // [seller][buyer]
  std::vector<std::vector<Action>> chi;
};

inline OracleResult oracle_best_responses(const ValueFunctions& v, const ModelParams& prm,
                                          const Grids& g, bool full_commitment) {
  const std::size_t ns = g.seller_values.size(), nb = g.buyer_values.size(), np = g.prices.size();
  const double r = prm.r, t = prm.t, kappa = prm.kappa;
  const double dR = prm.lambda_R / (prm.lambda_R + r);
  const double dB = prm.lambda_B / (prm.lambda_B + r);
  const double dS = prm.lambda_S / (prm.lambda_S + r);
  const double search_cost = prm.c / (prm.lambda_B + r);
  constexpr double kSlack = 1e-9;  // same rounding slack on the acceptance condition
  const double kInf = std::numeric_limits<double>::infinity();

  OracleResult out;
  out.p1N.resize(ns);
  for (std::size_t i = 0; i < ns; ++i)
    out.p1N[i] = (g.seller_values[i] + (prm.lambda_R + r) / prm.lambda_R * v.U_S[i]) / (1.0 - t);

  // share of grid sellers a buyer would leave an accepted offer for
  std::vector<std::vector<double>> walk(nb, std::vector<double>(np));
  for (std::size_t j = 0; j < nb; ++j)
    for (std::size_t k = 0; k < np; ++k) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < ns; ++i)
        if (v.V_B(i, j) >= g.buyer_values[j] - g.prices[k]) ++n;
      walk[j][k] = static_cast<double>(n) / static_cast<double>(ns);
    }

  out.p1S.assign(ns, std::vector<std::optional<double>>(nb));
  out.chi.assign(ns, std::vector<Action>(nb));
  out.p0_index.resize(ns);
  out.objective_at_p0.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const double s = g.seller_values[i], us = v.U_S[i];
    std::vector<double> fb_value(nb);
    std::vector<Action> fb_action(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      const double b = g.buyer_values[j];
      if (!full_commitment)
        for (std::size_t k = 0; k < np; ++k) {
          const double lost = (1.0 - kappa) * walk[j][k];
          const double lhs = dB * (lost * us + (1.0 - lost) * ((1.0 - t) * g.prices[k] - s));
          if (lhs >= us - kSlack) {
            out.p1S[i][j] = g.prices[k];
            break;
          }
        }
      const double cn = dR * dR * (b - out.p1N[i]);
      const double d = dR * v.U_B[j];
      double cs = -kInf;
      if (out.p1S[i][j]) {
        double sum = 0.0;
        for (std::size_t m = 0; m < ns; ++m) sum += std::max(b - *out.p1S[i][j], v.V_B(m, j));
        cs = dB * sum / static_cast<double>(ns) - search_cost;
      }
      // later action wins ties: CN over CS over D
      fb_action[j] = Action::Commit;
      fb_value[j] = cn;
      if (cs > fb_value[j]) fb_action[j] = Action::Search, fb_value[j] = cs;
      if (d > fb_value[j]) fb_action[j] = Action::Decline, fb_value[j] = d;
    }
    double best = -kInf;
    for (std::size_t k = 0; k < np; ++k) {
      const double p = g.prices[k];
      double sum = 0.0;
      for (std::size_t j = 0; j < nb; ++j) {
        const bool accept = g.buyer_values[j] - p >= fb_value[j];
        const Action a = accept ? Action::Accept : fb_action[j];
        sum += a == Action::Accept ? (1.0 - t) * p - s : a == Action::Decline ? us : dR * us;
      }
      const double obj = dS * sum / static_cast<double>(nb);
      if (obj > best) {
        best = obj;
        out.p0_index[i] = k;
      }
    }
    out.objective_at_p0[i] = best;
    const double p0 = g.prices[out.p0_index[i]];
    for (std::size_t j = 0; j < nb; ++j)
      out.chi[i][j] = g.buyer_values[j] - p0 >= fb_value[j] ? Action::Accept : fb_action[j];
  }
  return out;
}

}  // namespace testing
