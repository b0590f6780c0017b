#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bargain/grids.hpp"
#include "bargain/model.hpp"
#include "bargain/params.hpp"

namespace bargain {

struct SolverOptions {
  double tol = 1e-3;                 // relative change in U_S and U_B
  int max_iters = 500;
  double smoothing_bandwidth = 5.0;  // grid-index units
  double damping = 0.5;              // weight on the new iterate
  bool full_commitment = false;      // removes the CS action

  void validate() const;
};

// Thrown when an iteration produces a non-finite value. `dump` is a JSON
// snapshot of the offending iterate.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

struct IterationRecord {
  int iteration = 0;
  double residual_US = 0.0;
  double residual_UB = 0.0;
  bool projected = false;  // isotonic projection of V_B was needed
};

struct RegularitySummary {
  std::size_t cells_with_offer = 0;
  std::size_t available = 0;
  std::size_t assumption3_pass = 0;
  std::size_t assumption4_pass = 0;

  double assumption3_rate() const;
  double assumption4_rate() const;
};

struct Equilibrium {
  ModelParams params;
  Grids grids;
  SolverOptions options;
  ValueFunctions values;
  Policies policies;  // best responses to `values`
  int iterations = 0;
  double residual_US = 0.0;
  double residual_UB = 0.0;
  bool converged = false;
  bool residuals_settled = true;  // false if the residual tail was still rising
  std::vector<IterationRecord> trace;
  RegularitySummary diagnostics;
};

// Starting point: U_S(s) = 0.1 max(0, (1-t) E[b] - s), U_B = 0,
// V_B(s,b) = max(0, b - s/(1-t)).
ValueFunctions initial_values(const ModelParams& params, const Grids& grids);

// Best responses to a set of value functions together with the undamped,
// unsmoothed Bellman image of those values.
struct BestResponse {
  Policies policies;
  ValueFunctions image;
};
BestResponse best_responses(const ValueFunctions& values, const ModelParams& params,
                            const Grids& grids, bool full_commitment);

struct IterationResult {
  ValueFunctions values;
  Policies policies;
  double residual_US = 0.0;
  double residual_UB = 0.0;
  bool projected = false;
};

// One damped, smoothed value-iteration step.
IterationResult iterate_once(const ValueFunctions& values, const ModelParams& params,
                             const Grids& grids, const SolverOptions& options);

// sup |new - old| / max(sup |old|, 1).
double relative_change(std::span<const double> next, std::span<const double> prev);

Equilibrium solve_equilibrium(const ModelParams& params, const Grids& grids,
                              const SolverOptions& options);

RegularitySummary summarize_regularity(const Equilibrium& eq);

}  // namespace bargain
