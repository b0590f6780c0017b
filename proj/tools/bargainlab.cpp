// Command-line driver: solve, counterfactual, simulate, estimate, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bargain/config.hpp"
#include "bargain/estimator.hpp"
#include "bargain/io.hpp"
#include "bargain/simulator.hpp"
#include "bargain/welfare.hpp"

namespace fs = std::filesystem;
using namespace bargain;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNotConverged = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

template <typename F>
void write_stream(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  body(out);
}

int run_solve(const RunConfig& cfg, bool full_commitment) {
  fs::create_directories(cfg.io.out);
  auto options = cfg.solver;
  options.full_commitment = full_commitment;
  const auto grids = build_grids(cfg.params, cfg.grid, cfg.io.seed);
  const char* stem = full_commitment ? "counterfactual" : "equilibrium";
  const fs::path out(cfg.io.out);
  Equilibrium eq;
  try {
    eq = solve_equilibrium(cfg.params, grids, options);
  } catch (const SolverError& e) {
    write_file(out / (std::string(stem) + "_failure.json"), e.dump());
    std::cerr << "solver failed: " << e.what() << "\n";
    return kExitNotConverged;
  }
  const auto path = full_commitment ? cfg.counterfactual_path() : cfg.equilibrium_path();
  write_file(path, equilibrium_to_json(eq, cfg.hash()));
  write_stream(out / (std::string(stem) + "_trace.csv"), [&](std::ostream& o) { write_trace_csv(o, eq); });

  const auto rep = welfare_report(eq);
  std::printf("%s: %d iterations, residuals %.3g / %.3g, %s\n", stem, eq.iterations, eq.residual_US,
              eq.residual_UB, eq.converged ? "converged" : "NOT converged");
  std::printf("  mean p0 %.1f, shares A %.3f C %.3f D %.3f, total welfare %.2f\n", rep.p0_overall,
              rep.shares_overall.A, rep.shares_overall.C, rep.shares_overall.D, rep.total);
  std::printf("  wrote %s\n", path.c_str());
  if (!eq.converged) {
    std::cerr << "warning: value iteration did not converge within " << options.max_iters << " iterations\n";
    return kExitNotConverged;
  }
  return 0;
}

int run_simulate(const RunConfig& cfg) {
  const auto eq = equilibrium_from_json(read_file(cfg.equilibrium_path()));
  if (!eq.converged) throw ValidationError("'" + cfg.equilibrium_path() + "' holds an unconverged equilibrium");
  fs::create_directories(cfg.io.out);
  const auto log = simulate_market(eq, cfg.sim);
  const auto path = cfg.log_path();
  write_stream(path, [&](std::ostream& o) { write_event_csv(o, log); });
  write_file(path + ".json", event_sidecar_json(log, cfg.hash()));

  const auto s = summarize_log(log);
  nlohmann::ordered_json j;
  j["schema"] = "bargainlab.log_summary";
  j["schema_version"] = 1;
  j["config_hash"] = cfg.hash();
  j["listings"] = s.listings;
  j["sold"] = s.sold;
  j["sold_with_bargaining"] = s.sold_with_bargaining;
  j["purchases"] = s.purchases;
  j["exogenous_sales"] = s.exogenous_sales;
  j["censored"] = s.censored;
  j["offers_per_listing"] = s.offers_per_listing;
  j["matches_per_listing"] = s.matches_per_listing;
  j["mean_sale_to_list"] = s.mean_sale_to_list;
  j["mean_time_to_sale"] = s.mean_time_to_sale;
  j["mean_time_acceptance_to_purchase"] = s.mean_time_acceptance_to_purchase;
  j["mean_inter_arrival"] = s.mean_inter_arrival;
  j["shares_all"] = {{"A", s.shares_all.A}, {"C", s.shares_all.C}, {"D", s.shares_all.D}};
  j["shares_first_match"] = {{"A", s.shares_first.A}, {"C", s.shares_first.C}, {"D", s.shares_first.D}};
  j["walkaway_share"] = s.walkaway_share;
  write_file(fs::path(cfg.io.out) / "log_summary.json", j.dump(2) + "\n");
  std::printf("simulated %llu listings, %zu events; sold %llu, censored %llu\n  wrote %s\n",
              static_cast<unsigned long long>(s.listings), log.events.size(),
              static_cast<unsigned long long>(s.sold), static_cast<unsigned long long>(s.censored), path.c_str());
  return 0;
}

int run_estimate(const RunConfig& cfg) {
  const auto path = cfg.log_path();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open event log '" + path + "'");
  EventLog log;
  try {
    log = read_event_csv(in);
  } catch (const ParseError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (fs::exists(path + ".json")) apply_event_sidecar(log, read_file(path + ".json"));
  check_event_log(log);

  const CalibratedInputs inputs{cfg.params.r, cfg.params.t, cfg.params.N_S, cfg.params.N_B};
  const auto res = estimate_all(log, inputs, cfg.estimate);
  fs::create_directories(cfg.io.out);
  const fs::path out(cfg.io.out);
  write_file(out / "estimation.json", estimation_json(res, cfg.hash()));
  write_stream(out / "estimation_curves.csv", [&](std::ostream& o) { write_estimation_diagnostics_csv(o, res); });
  std::printf("lambda_R %.4f  lambda_S %.4f  lambda_B %.4f  kappa %.4f (se %.4f)\n", res.lambda_R,
              res.lambda_S, res.lambda_B, res.kappa.value, res.kappa.se);
  std::printf("F_S quartiles %.1f %.1f %.1f  mu_B %.1f  sigma_B %.1f  c %.2f (c/median F_B %.4f)\n",
              res.F_S.quantile(0.25), res.F_S.quantile(0.5), res.F_S.quantile(0.75), res.mu_B, res.sigma_B,
              res.c, res.c_over_median_buyer());
  return 0;
}

int run_report(const RunConfig& cfg) {
  const auto base = equilibrium_from_json(read_file(cfg.equilibrium_path()));
  const auto cf = equilibrium_from_json(read_file(cfg.counterfactual_path()));
  if (!base.converged || !cf.converged)
    std::cerr << "warning: report built from an unconverged equilibrium\n";
  const auto rb = welfare_report(base);
  const auto rc = welfare_report(cf);
  fs::create_directories(cfg.io.out);
  const fs::path out(cfg.io.out);
  write_stream(out / "welfare_table.csv", [&](std::ostream& o) { write_welfare_table_csv(o, rb, rc); });
  write_stream(out / "outcome_table.csv", [&](std::ostream& o) { write_outcome_table_csv(o, rb, rc); });
  write_file(out / "report.json", report_json(rb, rc, cfg.hash()));
  const auto d = counterfactual_compare(rb, rc);
  std::printf("full commitment minus baseline: total %.2f  sellers %.2f  buyers %.2f  platform %.2f\n", d.total,
              d.seller_overall, d.buyer_overall, d.platform_overall);
  std::printf("  shares dA %.4f dC %.4f dD %.4f  dp0 %.1f  dp1 %.1f\n", d.shares_overall.A, d.shares_overall.C,
              d.shares_overall.D, d.p0_overall, d.p1_overall);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search and bargaining marketplace model: solve, simulate, estimate, compare"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;

  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [io] out)");
    sub->add_option("--seed", seed, "seed for grids and simulation (overrides [io] seed)");
    return sub;
  };
  auto* solve = add("solve", "solve the baseline equilibrium");
  auto* counterfactual = add("counterfactual", "solve the full-commitment equilibrium");
  auto* simulate = add("simulate", "simulate an event log from a solved equilibrium");
  auto* estimate = add("estimate", "estimate structural parameters from an event log");
  auto* report = add("report", "welfare and outcome tables, baseline vs full commitment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    auto cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.io.out = out_dir;
    for (auto* sub : app.get_subcommands())
      if (sub->count("--seed")) {
        cfg.io.seed = seed;
        cfg.sim.seed = seed;
      }
    if (solve->parsed()) return run_solve(cfg, false);
    if (counterfactual->parsed()) return run_solve(cfg, true);
    if (simulate->parsed()) return run_simulate(cfg);
    if (estimate->parsed()) return run_estimate(cfg);
    if (report->parsed()) return run_report(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
