#include "bargain/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bargain/smoothing.hpp"

namespace bargain {
namespace {

std::string dump_values(const ValueFunctions& v, int iteration) {
  nlohmann::json j;
  j["iteration"] = iteration;
  j["U_S"] = v.U_S;
  j["U_B"] = v.U_B;
  j["V_B_rows"] = v.V_B.rows();
  j["V_B_cols"] = v.V_B.cols();
  j["V_B"] = v.V_B.data();
  return j.dump();
}

void require_finite(const ValueFunctions& v, int iteration) {
  auto bad = [](double x) { return !std::isfinite(x); };
  const char* where = nullptr;
  if (std::any_of(v.U_S.begin(), v.U_S.end(), bad))
    where = "U_S";
  else if (std::any_of(v.U_B.begin(), v.U_B.end(), bad))
    where = "U_B";
  else if (std::any_of(v.V_B.data().begin(), v.V_B.data().end(), bad))
    where = "V_B";
  if (where) {
    std::ostringstream msg;
    msg << "non-finite " << where << " at iteration " << iteration;
    throw SolverError(msg.str(), dump_values(v, iteration));
  }
}

void blend(std::vector<double>& out, const std::vector<double>& prev,
           const std::vector<double>& next, double weight) {
  out.resize(prev.size());
  for (std::size_t k = 0; k < prev.size(); ++k)
    out[k] = (1.0 - weight) * prev[k] + weight * next[k];
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw ValidationError("solver tol must be positive");
  if (max_iters < 1) throw ValidationError("solver max_iters must be at least 1");
  if (!(smoothing_bandwidth >= 0.0)) throw ValidationError("smoothing bandwidth must be >= 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("damping must lie in (0,1]");
}

double RegularitySummary::assumption3_rate() const {
  return available ? static_cast<double>(assumption3_pass) / static_cast<double>(available) : 0.0;
}
double RegularitySummary::assumption4_rate() const {
  return available ? static_cast<double>(assumption4_pass) / static_cast<double>(available) : 0.0;
}

ValueFunctions initial_values(const ModelParams& params, const Grids& grids) {
  const std::size_t ns = grids.n_sellers();
  const std::size_t nb = grids.n_buyers();
  ValueFunctions v;
  v.U_S.resize(ns);
  v.U_B.assign(nb, 0.0);
  v.V_B = Table<double>(ns, nb);
  const double net_mean = (1.0 - params.t) * params.F_B.mean();
  for (std::size_t i = 0; i < ns; ++i) {
    const double s = grids.seller_values[i];
    v.U_S[i] = 0.1 * std::max(0.0, net_mean - s);
    for (std::size_t j = 0; j < nb; ++j)
      v.V_B(i, j) = std::max(0.0, grids.buyer_values[j] - s / (1.0 - params.t));
  }
  return v;
}

BestResponse best_responses(const ValueFunctions& values, const ModelParams& params,
                            const Grids& grids, bool full_commitment) {
  const std::size_t ns = grids.n_sellers();
  const std::size_t nb = grids.n_buyers();
  const auto& sv = grids.seller_values;
  const auto& bv = grids.buyer_values;

  BestResponse out;
  Policies& pol = out.policies;
  pol.p0_index.resize(ns);
  pol.p0.resize(ns);
  pol.p1N.resize(ns);
  pol.p1S = Table<std::optional<double>>(ns, nb);
  pol.walk_prob = Table<double>(ns, nb, 0.0);
  pol.chi = Table<Action>(ns, nb, Action::Decline);

  for (std::size_t i = 0; i < ns; ++i) pol.p1N[i] = committed_offer(sv[i], values.U_S[i], params);

  std::vector<std::vector<double>> profiles(nb);
  for (std::size_t j = 0; j < nb; ++j) profiles[j] = values.seller_profile(j);

  if (!full_commitment) {
    for (std::size_t j = 0; j < nb; ++j) {
      const auto walk = walkaway_probabilities(bv[j], sv, profiles[j], grids.prices);
      for (std::size_t i = 0; i < ns; ++i) {
        if (auto offer = noncommitted_offer(sv[i], values.U_S[i], grids.prices, walk, params)) {
          pol.p1S(i, j) = offer->price;
          pol.walk_prob(i, j) = offer->walk_prob;
        }
      }
    }
  }

  ValueFunctions& img = out.image;
  img.U_S.resize(ns);
  img.U_B.resize(nb);
  img.V_B = Table<double>(ns, nb);

  std::vector<ActionValues> av(nb);
  std::vector<Fallback> fallbacks(nb);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      // The list price only enters the A value, which is recomputed below.
      av[j] = buyer_action_values(bv[j], 0.0, pol.p1N[i], pol.p1S(i, j), profiles[j],
                                  values.U_B[j], params);
      fallbacks[j] = best_fallback(av[j]);
    }
    const auto choice =
        seller_best_price(sv[i], values.U_S[i], bv, fallbacks, grids.prices, params);
    pol.p0_index[i] = choice.index;
    pol.p0[i] = choice.price;
    img.U_S[i] = choice.value;
    for (std::size_t j = 0; j < nb; ++j) {
      av[j].accept = bv[j] - choice.price;
      const Action a = buyer_best_action(av[j]);
      pol.chi(i, j) = a;
      img.V_B(i, j) = av[j].of(a);
    }
  }

  const double dB = params.delta_B();
  for (std::size_t j = 0; j < nb; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ns; ++i) sum += img.V_B(i, j);
    img.U_B[j] = dB * sum / static_cast<double>(ns) - params.search_cost_flow();
  }
  return out;
}

double relative_change(std::span<const double> next, std::span<const double> prev) {
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < prev.size(); ++k) {
    diff = std::max(diff, std::abs(next[k] - prev[k]));
    scale = std::max(scale, std::abs(prev[k]));
  }
  return diff / scale;
}

IterationResult iterate_once(const ValueFunctions& values, const ModelParams& params,
                             const Grids& grids, const SolverOptions& options) {
  auto br = best_responses(values, params, grids, options.full_commitment);
  const double bw = options.smoothing_bandwidth;
  auto smooth = [&](ValueFunctions& v) {
    v.U_S = smooth_values_local_linear(v.U_S, grids.seller_values, bw);
    v.U_B = smooth_values_local_linear(v.U_B, grids.buyer_values, bw);
    smooth_table(v.V_B, grids.seller_values, grids.buyer_values, bw);
  };

  IterationResult res;
  ValueFunctions& next = res.values;
  // smooth the Bellman image, then damp, so the fixed point does not depend on damping
  smooth(br.image);
  blend(next.U_S, values.U_S, br.image.U_S, options.damping);
  blend(next.U_B, values.U_B, br.image.U_B, options.damping);
  next.V_B = Table<double>(values.V_B.rows(), values.V_B.cols());
  blend(next.V_B.data(), values.V_B.data(), br.image.V_B.data(), options.damping);

  std::vector<double> col(next.V_B.rows());
  for (std::size_t j = 0; j < next.V_B.cols(); ++j) {
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = next.V_B(i, j);
    if (project_nonincreasing(col)) {
      res.projected = true;
      for (std::size_t i = 0; i < col.size(); ++i) next.V_B(i, j) = col[i];
    }
  }

  res.policies = std::move(br.policies);
  res.residual_US = relative_change(next.U_S, values.U_S);
  res.residual_UB = relative_change(next.U_B, values.U_B);
  return res;
}

Equilibrium solve_equilibrium(const ModelParams& params, const Grids& grids,
                              const SolverOptions& options) {
  params.validate();
  options.validate();
  if (grids.n_sellers() < 2 || grids.n_buyers() < 2 || grids.n_prices() < 2)
    throw ValidationError("solve_equilibrium: grids need at least 2 points each");

  Equilibrium eq;
  eq.params = params;
  eq.grids = grids;
  eq.options = options;

  ValueFunctions current = initial_values(params, grids);
  require_finite(current, 0);
  ValueFunctions best = current;
  double best_residual = std::numeric_limits<double>::infinity();
  double best_US = 0.0;
  double best_UB = 0.0;
  int best_iter = 0;

  for (int it = 1; it <= options.max_iters; ++it) {
    auto step = iterate_once(current, params, grids, options);
    require_finite(step.values, it);
    eq.trace.push_back({it, step.residual_US, step.residual_UB, step.projected});
    current = std::move(step.values);
    const double worst = std::max(step.residual_US, step.residual_UB);
    if (worst < best_residual) {
      best_residual = worst;
      best = current;
      best_US = step.residual_US;
      best_UB = step.residual_UB;
      best_iter = it;
    }
    if (step.residual_US < options.tol && step.residual_UB < options.tol) {
      eq.converged = true;
      break;
    }
  }

  eq.iterations = static_cast<int>(eq.trace.size());
  if (eq.converged) {
    eq.values = std::move(current);
    eq.residual_US = eq.trace.back().residual_US;
    eq.residual_UB = eq.trace.back().residual_UB;
  } else {
    eq.values = std::move(best);
    eq.residual_US = best_US;
    eq.residual_UB = best_UB;
    (void)best_iter;
  }

  // Residuals over the final quarter should not end above where they started.
  if (eq.trace.size() >= 8) {
    const std::size_t q = eq.trace.size() * 3 / 4;
    auto worst = [](const IterationRecord& r) { return std::max(r.residual_US, r.residual_UB); };
    eq.residuals_settled = worst(eq.trace.back()) <= worst(eq.trace[q]);
  }

  eq.policies = best_responses(eq.values, params, grids, options.full_commitment).policies;
  eq.diagnostics = summarize_regularity(eq);
  return eq;
}

RegularitySummary summarize_regularity(const Equilibrium& eq) {
  RegularitySummary sum;
  const auto& pol = eq.policies;
  const auto& prices = eq.grids.prices;
  const double step = eq.grids.price_step();
  for (std::size_t i = 0; i < eq.grids.n_sellers(); ++i) {
    for (std::size_t j = 0; j < eq.grids.n_buyers(); ++j) {
      const auto& p1 = pol.p1S(i, j);
      if (!p1) continue;
      ++sum.cells_with_offer;
      const auto k = static_cast<std::size_t>(std::lround((*p1 - prices.front()) / step));
      const auto rep = regularity_diagnostics(i, j, k, eq.grids, eq.values, eq.params);
      if (!rep.available) continue;
      ++sum.available;
      if (rep.assumption3_slack() > 0.0) ++sum.assumption3_pass;
      if (rep.assumption4_slack() > 0.0) ++sum.assumption4_pass;
    }
  }
  return sum;
}

}  // namespace bargain
