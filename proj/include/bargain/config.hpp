#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "bargain/estimator.hpp"
#include "bargain/event_log.hpp"
#include "bargain/grids.hpp"
#include "bargain/params.hpp"
#include "bargain/solver.hpp"

namespace bargain {

struct IoConfig {
  std::string out = "out";
  std::uint64_t seed = 42;       // grid draws and simulation streams
  std::string equilibrium;       // defaults to <out>/equilibrium.json
  std::string counterfactual;    // defaults to <out>/counterfactual.json
  std::string log;               // defaults to <out>/events.csv
};

// Every block has defaults, so an empty file is the benchmark calibration.
struct RunConfig {
  ModelParams params;
  GridSpec grid;
  SolverOptions solver;
  SimOptions sim;
  EstimatorOptions estimate;
  IoConfig io;

  std::string equilibrium_path() const;
  std::string counterfactual_path() const;
  std::string log_path() const;

  // Canonical JSON rendering; the hash covers everything but output paths.
  std::string canonical_json() const;
  std::string hash() const;
  void validate() const;
};

// INI-style text with [params], [grid], [solver], [sim], [estimate] and [io]
// blocks. Unknown blocks or keys and malformed values raise ValidationError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace bargain
