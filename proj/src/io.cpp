#include "bargain/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace bargain {
namespace {

using ojson = nlohmann::ordered_json;

template <typename T>
T require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
ojson table_json(const Table<T>& t) {
  return ojson{{"rows", t.rows()}, {"cols", t.cols()}, {"data", t.data()}};
}

Table<double> table_from_json(const nlohmann::json& j) {
  const auto rows = require<std::size_t>(j, "rows");
  const auto cols = require<std::size_t>(j, "cols");
  auto data = require<std::vector<double>>(j, "data");
  if (data.size() != rows * cols) throw ValidationError("table size does not match its shape");
  Table<double> t(rows, cols);
  t.data() = std::move(data);
  return t;
}

ojson shares_json(const ActionShares& s) { return ojson{{"A", s.A}, {"C", s.C}, {"D", s.D}}; }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void check_schema(const nlohmann::json& j, std::string_view schema, int version) {
  const auto name = j.value("schema", std::string{});
  if (name != schema)
    throw ValidationError("expected schema '" + std::string(schema) + "', found '" + name + "'");
  const int v = j.value("schema_version", -1);
  if (v != version)
    throw ValidationError("schema version mismatch for '" + name + "': expected " +
                          std::to_string(version) + ", found " + std::to_string(v));
}

ojson distribution_to_json(const ValueDistribution& d) {
  if (d.kind() == ValueDistribution::Kind::Normal)
    return ojson{{"kind", "normal"}, {"mean", d.mean()}, {"sd", d.sd()}};
  return ojson{{"kind", "empirical"}, {"sample", d.sample()}};
}

ValueDistribution distribution_from_json(const nlohmann::json& j) {
  const auto kind = require<std::string>(j, "kind");
  if (kind == "normal") return ValueDistribution::normal(require<double>(j, "mean"), require<double>(j, "sd"));
  if (kind == "empirical") return ValueDistribution::empirical(require<std::vector<double>>(j, "sample"));
  throw ValidationError("unknown distribution kind '" + kind + "'");
}

ojson params_to_json(const ModelParams& p) {
  return ojson{{"lambda_S", p.lambda_S}, {"lambda_B", p.lambda_B}, {"lambda_R", p.lambda_R},
               {"r", p.r},               {"c", p.c},               {"t", p.t},
               {"kappa", p.kappa},       {"N_S", p.N_S},           {"N_B", p.N_B},
               {"F_S", distribution_to_json(p.F_S)},
               {"F_B", distribution_to_json(p.F_B)}};
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.lambda_S = require<double>(j, "lambda_S");
  p.lambda_B = require<double>(j, "lambda_B");
  p.lambda_R = require<double>(j, "lambda_R");
  p.r = require<double>(j, "r");
  p.c = require<double>(j, "c");
  p.t = require<double>(j, "t");
  p.kappa = require<double>(j, "kappa");
  p.N_S = require<long>(j, "N_S");
  p.N_B = require<long>(j, "N_B");
  p.F_S = distribution_from_json(j.at("F_S"));
  p.F_B = distribution_from_json(j.at("F_B"));
  return p;
}

ojson solver_options_to_json(const SolverOptions& o) {
  return ojson{{"tol", o.tol},
               {"max_iters", o.max_iters},
               {"smoothing_bandwidth", o.smoothing_bandwidth},
               {"damping", o.damping},
               {"full_commitment", o.full_commitment}};
}

SolverOptions solver_options_from_json(const nlohmann::json& j) {
  SolverOptions o;
  o.tol = require<double>(j, "tol");
  o.max_iters = require<int>(j, "max_iters");
  o.smoothing_bandwidth = require<double>(j, "smoothing_bandwidth");
  o.damping = require<double>(j, "damping");
  o.full_commitment = require<bool>(j, "full_commitment");
  return o;
}

ojson grid_spec_to_json(const GridSpec& g) {
  return ojson{{"n_values", g.n_values},
               {"n_prices", g.n_prices},
               {"price_min", g.price_min},
               {"price_max", g.price_max},
               {"sampling", g.sampling == GridSampling::Stratified ? "stratified" : "iid"}};
}

ojson sim_options_to_json(const SimOptions& o) {
  return ojson{{"n_listings", o.n_listings}, {"horizon", o.horizon}, {"seed", o.seed}, {"q_D_obs", o.q_D_obs}};
}

SimOptions sim_options_from_json(const nlohmann::json& j) {
  SimOptions o;
  o.n_listings = require<std::uint64_t>(j, "n_listings");
  o.horizon = require<double>(j, "horizon");
  o.seed = require<std::uint64_t>(j, "seed");
  o.q_D_obs = require<double>(j, "q_D_obs");
  return o;
}

std::string equilibrium_to_json(const Equilibrium& eq, const std::string& config_hash) {
  ojson j;
  j["schema"] = "bargainlab.equilibrium";
  j["schema_version"] = kEquilibriumSchemaVersion;
  j["config_hash"] = config_hash;
  j["converged"] = eq.converged;
  j["residuals_settled"] = eq.residuals_settled;
  j["iterations"] = eq.iterations;
  j["residual_US"] = eq.residual_US;
  j["residual_UB"] = eq.residual_UB;
  j["params"] = params_to_json(eq.params);
  j["solver"] = solver_options_to_json(eq.options);
  j["grids"] = ojson{{"seed", eq.grids.seed},
                     {"seller_values", eq.grids.seller_values},
                     {"buyer_values", eq.grids.buyer_values},
                     {"prices", eq.grids.prices}};
  j["values"] = ojson{{"U_S", eq.values.U_S}, {"U_B", eq.values.U_B}, {"V_B", table_json(eq.values.V_B)}};

  const auto& pol = eq.policies;
  ojson p1s = ojson::array();
  for (const auto& v : pol.p1S.data()) p1s.push_back(v ? ojson(*v) : ojson(nullptr));
  std::vector<std::string> chi;
  for (auto a : pol.chi.data()) chi.emplace_back(action_name(a));
  j["policies"] = ojson{{"p0_index", pol.p0_index},
                        {"p0", pol.p0},
                        {"p1N", pol.p1N},
                        {"p1S", ojson{{"rows", pol.p1S.rows()}, {"cols", pol.p1S.cols()}, {"data", p1s}}},
                        {"walk_prob", table_json(pol.walk_prob)},
                        {"chi", ojson{{"rows", pol.chi.rows()}, {"cols", pol.chi.cols()}, {"data", chi}}}};
  const auto& d = eq.diagnostics;
  j["regularity"] = ojson{{"cells_with_offer", d.cells_with_offer},
                          {"available", d.available},
                          {"assumption3_pass", d.assumption3_pass},
                          {"assumption4_pass", d.assumption4_pass}};
  ojson trace = ojson::array();
  for (const auto& r : eq.trace)
    trace.push_back(ojson{{"iteration", r.iteration},
                          {"residual_US", r.residual_US},
                          {"residual_UB", r.residual_UB},
                          {"projected", r.projected}});
  j["trace"] = trace;
  return j.dump(1) + "\n";
}

Equilibrium equilibrium_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("equilibrium file: ") + e.what());
  }
  check_schema(j, "bargainlab.equilibrium", kEquilibriumSchemaVersion);
  try {
    Equilibrium eq;
    eq.converged = require<bool>(j, "converged");
    eq.residuals_settled = j.value("residuals_settled", true);
    eq.iterations = require<int>(j, "iterations");
    eq.residual_US = require<double>(j, "residual_US");
    eq.residual_UB = require<double>(j, "residual_UB");
    eq.params = params_from_json(j.at("params"));
    eq.options = solver_options_from_json(j.at("solver"));
    const auto& g = j.at("grids");
    eq.grids.seed = require<std::uint64_t>(g, "seed");
    eq.grids.seller_values = require<std::vector<double>>(g, "seller_values");
    eq.grids.buyer_values = require<std::vector<double>>(g, "buyer_values");
    eq.grids.prices = require<std::vector<double>>(g, "prices");
    const auto ns = eq.grids.n_sellers();
    const auto nb = eq.grids.n_buyers();

    const auto& v = j.at("values");
    eq.values.U_S = require<std::vector<double>>(v, "U_S");
    eq.values.U_B = require<std::vector<double>>(v, "U_B");
    eq.values.V_B = table_from_json(v.at("V_B"));

    const auto& p = j.at("policies");
    auto& pol = eq.policies;
    pol.p0_index = require<std::vector<std::size_t>>(p, "p0_index");
    pol.p0 = require<std::vector<double>>(p, "p0");
    pol.p1N = require<std::vector<double>>(p, "p1N");
    pol.walk_prob = table_from_json(p.at("walk_prob"));
    const auto& p1s = p.at("p1S").at("data");
    const auto& chi = p.at("chi").at("data");
    if (p1s.size() != ns * nb || chi.size() != ns * nb)
      throw ValidationError("policy tables do not match the grids");
    pol.p1S = Table<std::optional<double>>(ns, nb);
    pol.chi = Table<Action>(ns, nb);
    for (std::size_t k = 0; k < ns * nb; ++k) {
      if (!p1s[k].is_null()) pol.p1S.data()[k] = p1s[k].get<double>();
      pol.chi.data()[k] = parse_action(chi[k].get<std::string>());
    }
    if (eq.values.U_S.size() != ns || eq.values.U_B.size() != nb || eq.values.V_B.rows() != ns ||
        eq.values.V_B.cols() != nb || pol.p0.size() != ns || pol.p1N.size() != ns ||
        pol.p0_index.size() != ns)
      throw ValidationError("equilibrium arrays do not match the grids");

    const auto& d = j.at("regularity");
    eq.diagnostics.cells_with_offer = require<std::size_t>(d, "cells_with_offer");
    eq.diagnostics.available = require<std::size_t>(d, "available");
    eq.diagnostics.assumption3_pass = require<std::size_t>(d, "assumption3_pass");
    eq.diagnostics.assumption4_pass = require<std::size_t>(d, "assumption4_pass");
    for (const auto& r : j.at("trace"))
      eq.trace.push_back({require<int>(r, "iteration"), require<double>(r, "residual_US"),
                          require<double>(r, "residual_UB"), require<bool>(r, "projected")});
    return eq;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("equilibrium file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("equilibrium file: ") + e.what());
  }
}

void write_trace_csv(std::ostream& out, const Equilibrium& eq) {
  out << "iteration,residual_US,residual_UB,projected\n";
  for (const auto& r : eq.trace)
    out << r.iteration << ',' << format_double(r.residual_US) << ',' << format_double(r.residual_UB)
        << ',' << (r.projected ? 1 : 0) << '\n';
}

void write_welfare_table_csv(std::ostream& out, const WelfareReport& base, const WelfareReport& cf) {
  const auto diff = counterfactual_compare(base, cf);
  out << "group,baseline,full_commitment,difference\n";
  auto row = [&](const std::string& name, auto get) {
    out << name << ',' << format_double(get(base)) << ',' << format_double(get(cf)) << ','
        << format_double(get(diff)) << '\n';
  };
  row("total", [](const WelfareReport& r) { return r.total; });
  row("sellers", [](const WelfareReport& r) { return r.seller_overall; });
  for (std::size_t q = 0; q < 4; ++q)
    row("sellers_Q" + std::to_string(q + 1), [q](const WelfareReport& r) { return r.seller_by_quartile[q]; });
  row("buyers", [](const WelfareReport& r) { return r.buyer_overall; });
  for (std::size_t q = 0; q < 4; ++q)
    row("buyers_Q" + std::to_string(q + 1), [q](const WelfareReport& r) { return r.buyer_by_quartile[q]; });
  row("platform", [](const WelfareReport& r) { return r.platform_overall; });
}

void write_outcome_table_csv(std::ostream& out, const WelfareReport& base, const WelfareReport& cf) {
  const auto diff = counterfactual_compare(base, cf);
  out << "regime,group,A,C,D,p0,p1\n";
  auto block = [&](const char* regime, const WelfareReport& r) {
    auto line = [&](const std::string& group, const ActionShares& s, double p0, double p1) {
      out << regime << ',' << group << ',' << format_double(s.A) << ',' << format_double(s.C) << ','
          << format_double(s.D) << ',' << format_double(p0) << ',' << format_double(p1) << '\n';
    };
    line("overall", r.shares_overall, r.p0_overall, r.p1_overall);
    for (std::size_t q = 0; q < 4; ++q)
      line("Q" + std::to_string(q + 1), r.shares_by_quartile[q], r.p0_by_quartile[q], r.p1_by_quartile[q]);
  };
  block("baseline", base);
  block("full_commitment", cf);
  block("difference", diff);
}

ojson welfare_to_json(const WelfareReport& r) {
  ojson q_shares = ojson::array();
  for (const auto& s : r.shares_by_quartile) q_shares.push_back(shares_json(s));
  return ojson{{"total", r.total},
               {"seller_overall", r.seller_overall},
               {"seller_by_quartile", r.seller_by_quartile},
               {"buyer_overall", r.buyer_overall},
               {"buyer_by_quartile", r.buyer_by_quartile},
               {"platform_overall", r.platform_overall},
               {"buyer_seller_ratio", r.buyer_seller_ratio},
               {"shares_overall", shares_json(r.shares_overall)},
               {"shares_by_quartile", q_shares},
               {"p0_overall", r.p0_overall},
               {"p0_by_quartile", r.p0_by_quartile},
               {"p1_overall", r.p1_overall},
               {"p1_by_quartile", r.p1_by_quartile},
               {"grid_fingerprint", hex64(r.grid_fingerprint)}};
}

std::string report_json(const WelfareReport& base, const WelfareReport& cf, const std::string& config_hash) {
  const auto diff = counterfactual_compare(base, cf);
  ojson j;
  j["schema"] = "bargainlab.report";
  j["schema_version"] = kReportSchemaVersion;
  j["config_hash"] = config_hash;
  j["baseline"] = welfare_to_json(base);
  j["full_commitment"] = welfare_to_json(cf);
  j["difference"] = welfare_to_json(diff);
  j["accounting_gap"] = base.total - (base.seller_overall + base.buyer_seller_ratio * base.buyer_overall +
                                      base.platform_overall);
  return j.dump(2) + "\n";
}

}  // namespace bargain
