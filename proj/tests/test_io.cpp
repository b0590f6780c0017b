#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "bargain/config.hpp"
#include "bargain/io.hpp"
#include "support.hpp"

using namespace bargain;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Runs the command-line tool and returns its exit status; stderr goes to `err`.
int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(BARGAINLAB_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bargainlab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmallConfig =
    "[grid]\n"
    "n_values = 12\n"
    "n_prices = 60\n"
    "[solver]\n"
    "tol = 1e-6\n"
    "max_iters = 3000\n"
    "[sim]\n"
    "n_listings = 300\n";

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto def = parse_config("");
  const ModelParams p;
  CHECK(def.params.lambda_S == p.lambda_S);
  CHECK(def.params.c == p.c);
  CHECK(def.params.F_B.mean() == p.F_B.mean());
  CHECK(def.grid.n_values == 100);
  CHECK(def.solver.tol == 1e-3);
  CHECK(def.io.seed == 42);
  CHECK(def.equilibrium_path() == "out/equilibrium.json");

  const auto cfg = parse_config(
      "# comment\n[params]\nkappa = 0.5\nF_S_mean = 9000\n[grid]\nsampling = iid\n[io]\nseed = 7\nout = here\n");
  CHECK(cfg.params.kappa == 0.5);
  CHECK(cfg.params.F_S.mean() == 9000.0);
  CHECK(cfg.grid.sampling == GridSampling::Iid);
  CHECK(cfg.io.seed == 7);
  CHECK(cfg.sim.seed == 7);
  CHECK(cfg.log_path() == "here/events.csv");
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("[params]\nlambda_Q = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[extras]\nx = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[params]\nkappa = lots\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[params]\nkappa = 1.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[params]\nlambda_R = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[grid]\nsampling = sobol\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[sim]\nq_D_obs = 2\n"), ValidationError);
  try {
    load_config("/nonexistent/run.ini");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/run.ini") != std::string::npos);
  }
}

TEST_CASE("config hash") {
  const auto a = parse_config("[params]\nc = 1500\n");
  CHECK(a.hash() == parse_config("[params]\nc = 1500\n").hash());
  CHECK(a.hash() != parse_config("[params]\nc = 1501\n").hash());
  CHECK(a.hash() == parse_config("[params]\nc = 1500\n[io]\nout = elsewhere\n").hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("equilibrium JSON") {
  const auto eq = testing::small_instance();
  const auto text = equilibrium_to_json(eq, "0123");
  const auto back = equilibrium_from_json(text);
  CHECK(back.values == eq.values);
  CHECK(back.policies == eq.policies);
  CHECK(back.grids == eq.grids);
  CHECK(back.converged == eq.converged);
  CHECK(back.params.F_S.sd() == eq.params.F_S.sd());
  CHECK(equilibrium_to_json(back, "0123") == text);

  auto j = nlohmann::json::parse(text);
  j["schema_version"] = 99;
  CHECK_THROWS_AS(equilibrium_from_json(j.dump()), ValidationError);
  j = nlohmann::json::parse(text);
  j["schema"] = "something.else";
  CHECK_THROWS_AS(equilibrium_from_json(j.dump()), ValidationError);
  j = nlohmann::json::parse(text);
  j["values"]["U_S"].erase(0);
  CHECK_THROWS_AS(equilibrium_from_json(j.dump()), ValidationError);
  CHECK_THROWS_AS(equilibrium_from_json("{not json"), ValidationError);
}

TEST_CASE("number formatting round trips") {
  for (double x : {0.0, 1.0 / 3.0, 14824.1, -2.5e-300, 1e22})
    CHECK(std::stod(format_double(x)) == x);
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
}

TEST_CASE("report tables") {
  const auto rb = welfare_report(testing::baseline());
  std::stringstream w, o;
  write_welfare_table_csv(w, rb, rb);
  write_outcome_table_csv(o, rb, rb);
  const auto wt = w.str();
  CHECK(wt.rfind("group,baseline,full_commitment,difference\n", 0) == 0);
  CHECK(wt.find("sellers_Q4,") != std::string::npos);
  CHECK(wt.find("platform,") != std::string::npos);
  CHECK(o.str().rfind("regime,group,A,C,D,p0,p1\n", 0) == 0);
  const auto rep = nlohmann::json::parse(report_json(rb, rb, "abc"));
  CHECK(rep["schema"] == "bargainlab.report");
  CHECK(rep["config_hash"] == "abc");
}

TEST_CASE("command-line tool") {
  const auto dir = scratch_dir("cli");
  const auto cfg = dir / "run.ini";
  spit(cfg, kSmallConfig);
  const auto err = dir / "stderr.txt";
  const std::string base = " --config " + cfg.string() + " --out ";

  SUBCASE("solve is deterministic") {
    REQUIRE(run_cli("solve" + base + (dir / "a").string(), err) == 0);
    REQUIRE(run_cli("solve" + base + (dir / "b").string(), err) == 0);
    CHECK(slurp(dir / "a" / "equilibrium.json") == slurp(dir / "b" / "equilibrium.json"));
    CHECK(slurp(dir / "a" / "equilibrium_trace.csv") == slurp(dir / "b" / "equilibrium_trace.csv"));
    const auto j = nlohmann::json::parse(slurp(dir / "a" / "equilibrium.json"));
    CHECK(j["config_hash"] == load_config(cfg.string()).hash());
    CHECK(j["residual_US"].get<double>() <= 1e-6);
  }
  SUBCASE("full pipeline") {
    const auto out = (dir / "p").string();
    REQUIRE(run_cli("solve" + base + out, err) == 0);
    REQUIRE(run_cli("counterfactual" + base + out, err) == 0);
    REQUIRE(run_cli("simulate" + base + out, err) == 0);
    REQUIRE(run_cli("estimate" + base + out, err) == 0);
    REQUIRE(run_cli("report" + base + out, err) == 0);
    for (const char* f : {"events.csv", "events.csv.json", "log_summary.json", "estimation.json",
                          "estimation_curves.csv", "welfare_table.csv", "outcome_table.csv", "report.json"})
      CHECK(fs::exists(dir / "p" / f));
    const auto est = nlohmann::json::parse(slurp(dir / "p" / "estimation.json"));
    CHECK(est["schema"] == "bargainlab.estimation");

    SUBCASE("same seed, same log") {
      REQUIRE(run_cli("simulate" + base + (dir / "p2").string(), err) != 0);  // no equilibrium there
      fs::create_directories(dir / "p2");
      fs::copy_file(dir / "p" / "equilibrium.json", dir / "p2" / "equilibrium.json");
      REQUIRE(run_cli("simulate" + base + (dir / "p2").string(), err) == 0);
      CHECK(slurp(dir / "p" / "events.csv") == slurp(dir / "p2" / "events.csv"));
    }
    SUBCASE("malformed event log") {
      auto text = slurp(dir / "p" / "events.csv");
      text.insert(text.find('\n', text.find('\n') + 1) + 1, "0,yesterday,Arrival,1,,\n");
      spit(dir / "p" / "events.csv", text);
      CHECK(run_cli("estimate" + base + out, err) == 2);
      CHECK(slurp(err).find("line 3") != std::string::npos);
    }
    SUBCASE("schema mismatch") {
      auto j = nlohmann::json::parse(slurp(dir / "p" / "equilibrium.json"));
      j["schema_version"] = 2;
      spit(dir / "p" / "equilibrium.json", j.dump());
      CHECK(run_cli("simulate" + base + out, err) == 2);
    }
  }
  SUBCASE("bad inputs") {
    CHECK(run_cli("solve --config " + (dir / "missing.ini").string(), err) == 2);
    CHECK(slurp(err).find("missing.ini") != std::string::npos);
    spit(dir / "bad.ini", "[solver]\nspeed = 11\n");
    CHECK(run_cli("solve --config " + (dir / "bad.ini").string(), err) == 2);
    CHECK(run_cli("teleport --config " + cfg.string(), err) == 2);
  }
  SUBCASE("non-convergence exits with 3 and still writes the result") {
    spit(dir / "slow.ini", "[grid]\nn_values = 12\nn_prices = 60\n[solver]\nmax_iters = 2\ntol = 1e-12\n");
    CHECK(run_cli("solve --config " + (dir / "slow.ini").string() + " --out " + (dir / "s").string(), err) == 3);
    const auto j = nlohmann::json::parse(slurp(dir / "s" / "equilibrium.json"));
    CHECK(j["converged"] == false);
  }
}
