#include "bargain/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bargain/io.hpp"

namespace bargain {
namespace {

namespace pt = boost::property_tree;

template <typename T>
void read(const pt::ptree& block, const std::string& name, const std::string& key, T& out,
          std::set<std::string>& seen) {
  auto v = block.get_optional<std::string>(key);
  if (!v) return;
  seen.insert(key);
  std::istringstream in(*v);
  T parsed{};
  if constexpr (std::is_same_v<T, bool>) {
    if (*v == "true" || *v == "1") parsed = true;
    else if (*v == "false" || *v == "0") parsed = false;
    else throw ValidationError("config [" + name + "] " + key + ": expected true or false, got '" + *v + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    parsed = *v;
  } else {
    in >> parsed;
    if (in.fail() || !(in >> std::ws).eof())
      throw ValidationError("config [" + name + "] " + key + ": cannot parse '" + *v + "'");
  }
  out = parsed;
}

}  // namespace

std::string RunConfig::equilibrium_path() const {
  return io.equilibrium.empty() ? io.out + "/equilibrium.json" : io.equilibrium;
}
std::string RunConfig::counterfactual_path() const {
  return io.counterfactual.empty() ? io.out + "/counterfactual.json" : io.counterfactual;
}
std::string RunConfig::log_path() const { return io.log.empty() ? io.out + "/events.csv" : io.log; }

std::string RunConfig::canonical_json() const {
  nlohmann::ordered_json j;
  j["params"] = params_to_json(params);
  j["grid"] = grid_spec_to_json(grid);
  j["solver"] = solver_options_to_json(solver);
  j["sim"] = {{"n_listings", sim.n_listings}, {"horizon", sim.horizon}, {"q_D_obs", sim.q_D_obs}};
  j["estimate"] = {{"exposure_cap", estimate.exposure_cap}, {"kappa_window", estimate.kappa_window},
                   {"min_interval", estimate.min_interval}, {"price_bins", estimate.price_bins},
                   {"band_lo", estimate.band_lo},           {"band_hi", estimate.band_hi}};
  j["seed"] = io.seed;
  return j.dump();
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical_json())); }

void RunConfig::validate() const {
  params.validate();
  solver.validate();
  sim.validate();
  if (grid.n_values < 2 || grid.n_prices < 1) throw ValidationError("config [grid]: grids need at least 2 values and 1 price");
  if (!(grid.price_max >= grid.price_min)) throw ValidationError("config [grid]: price_max below price_min");
  if (estimate.price_bins < 1) throw ValidationError("config [estimate]: price_bins must be positive");
  if (!(estimate.band_lo >= 0.0 && estimate.band_lo <= estimate.band_hi && estimate.band_hi <= 1.0))
    throw ValidationError("config [estimate]: need 0 <= band_lo <= band_hi <= 1");
}

RunConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig c;
  double fs_mean = c.params.F_S.mean(), fs_sd = c.params.F_S.sd();
  double fb_mean = c.params.F_B.mean(), fb_sd = c.params.F_B.sd();
  std::string sampling = "stratified";

  using Reader = std::function<void(const pt::ptree&, const std::string&, std::set<std::string>&)>;
  const std::map<std::string, Reader> blocks = {
      {"params",
       [&](const pt::ptree& b, const std::string& n, std::set<std::string>& s) {
         auto& p = c.params;
         read(b, n, "lambda_S", p.lambda_S, s);
         read(b, n, "lambda_B", p.lambda_B, s);
         read(b, n, "lambda_R", p.lambda_R, s);
         read(b, n, "r", p.r, s);
         read(b, n, "c", p.c, s);
         read(b, n, "t", p.t, s);
         read(b, n, "kappa", p.kappa, s);
         read(b, n, "N_S", p.N_S, s);
         read(b, n, "N_B", p.N_B, s);
         read(b, n, "F_S_mean", fs_mean, s);
         read(b, n, "F_S_sd", fs_sd, s);
         read(b, n, "F_B_mean", fb_mean, s);
         read(b, n, "F_B_sd", fb_sd, s);
       }},
      {"grid",
       [&](const pt::ptree& b, const std::string& n, std::set<std::string>& s) {
         read(b, n, "n_values", c.grid.n_values, s);
         read(b, n, "n_prices", c.grid.n_prices, s);
         read(b, n, "price_min", c.grid.price_min, s);
         read(b, n, "price_max", c.grid.price_max, s);
         read(b, n, "sampling", sampling, s);
       }},
      {"solver",
       [&](const pt::ptree& b, const std::string& n, std::set<std::string>& s) {
         read(b, n, "tol", c.solver.tol, s);
         read(b, n, "max_iters", c.solver.max_iters, s);
         read(b, n, "smoothing_bandwidth", c.solver.smoothing_bandwidth, s);
         read(b, n, "damping", c.solver.damping, s);
       }},
      {"sim",
       [&](const pt::ptree& b, const std::string& n, std::set<std::string>& s) {
         read(b, n, "n_listings", c.sim.n_listings, s);
         read(b, n, "horizon", c.sim.horizon, s);
         read(b, n, "q_D_obs", c.sim.q_D_obs, s);
       }},
      {"estimate",
       [&](const pt::ptree& b, const std::string& n, std::set<std::string>& s) {
         read(b, n, "exposure_cap", c.estimate.exposure_cap, s);
         read(b, n, "kappa_window", c.estimate.kappa_window, s);
         read(b, n, "min_interval", c.estimate.min_interval, s);
         read(b, n, "price_bins", c.estimate.price_bins, s);
         read(b, n, "band_lo", c.estimate.band_lo, s);
         read(b, n, "band_hi", c.estimate.band_hi, s);
       }},
      {"io",
       [&](const pt::ptree& b, const std::string& n, std::set<std::string>& s) {
         read(b, n, "out", c.io.out, s);
         read(b, n, "seed", c.io.seed, s);
         read(b, n, "equilibrium", c.io.equilibrium, s);
         read(b, n, "counterfactual", c.io.counterfactual, s);
         read(b, n, "log", c.io.log, s);
       }},
  };

  for (const auto& [name, block] : tree) {
    auto it = blocks.find(name);
    if (it == blocks.end()) {
      if (block.empty()) throw ValidationError("config: key '" + name + "' outside a block");
      throw ValidationError("config: unknown block [" + name + "]");
    }
    std::set<std::string> seen;
    it->second(block, name, seen);
    for (const auto& [key, _] : block)
      if (!seen.count(key)) throw ValidationError("config [" + name + "]: unknown key '" + key + "'");
  }

  if (sampling == "stratified") c.grid.sampling = GridSampling::Stratified;
  else if (sampling == "iid") c.grid.sampling = GridSampling::Iid;
  else throw ValidationError("config [grid] sampling: expected stratified or iid, got '" + sampling + "'");
  c.params.F_S = ValueDistribution::normal(fs_mean, fs_sd);
  c.params.F_B = ValueDistribution::normal(fb_mean, fb_sd);
  c.sim.seed = c.io.seed;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace bargain
