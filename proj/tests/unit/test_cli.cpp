#include "spmnl/cli.hpp"
#include "spmnl/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace spmnl;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spmnl_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

cli::DataOptions data_in(const fs::path& dir) {
  cli::DataOptions d;
  d.shares = (dir / "shares.csv").string();
  d.covariates = (dir / "covariates.csv").string();
  d.coords = (dir / "coords.csv").string();
  return d;
}

fs::path simulated(const std::string& name, double rho, Eigen::Index n = 120) {
  const auto dir = scratch(name);
  cli::SimulateOptions s;
  s.n = n;
  s.rho = rho;
  s.seed = 5;
  s.out = dir.string();
  std::ostringstream log;
  cli::cmd_simulate(s, log);
  return dir;
}

cli::FitOptions quick_fit(const fs::path& data, const fs::path& out, const std::string& family) {
  cli::FitOptions f;
  f.data = data_in(data);
  f.family = family;
  f.draws = 200;
  f.burnin = 100;
  f.seed = 9;
  f.out = out.string();
  return f;
}

int run_cli(const std::string& args) {
  const char* exe = std::getenv("SPMNL_CLI");
  REQUIRE_MESSAGE(exe != nullptr, "SPMNL_CLI is not set");
  const std::string cmd = std::string(exe) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate writes the dataset and truth") {
  const auto dir = simulated("sim", 0.5);
  for (const char* f : {"shares.csv", "covariates.csv", "coords.csv", "truth.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto shares = read_csv(dir / "shares.csv");
  REQUIRE(shares.size() == 121);
  CHECK(shares[0] == std::vector<std::string>{"id", "class1", "class2", "class3"});
  for (std::size_t i = 1; i < shares.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 1; j < 4; ++j) s += std::stod(shares[i][j]);
    REQUIRE(std::abs(s - 1.0) < 1e-12);
  }
  const auto truth = nlohmann::json::parse(slurp(dir / "truth.json"));
  CHECK(truth["N"] == 120);
  CHECK(truth["reference_class"] == "class3");
  CHECK(truth["rho"][0] == 0.5);

  const auto again = simulated("sim2", 0.5);
  for (const char* f : {"shares.csv", "covariates.csv", "coords.csv", "truth.json"}) {
    CHECK(slurp(dir / f) == slurp(again / f));
  }
}

TEST_CASE("simulate rejects other class counts") {
  cli::SimulateOptions s;
  s.n_classes = 4;
  s.out = scratch("sim4").string();
  std::ostringstream log;
  CHECK_THROWS_AS(cli::cmd_simulate(s, log), ConfigError);
}

TEST_CASE("fit then impacts round trip is deterministic") {
  const auto data = simulated("rt_data", 0.5);
  const auto a = scratch("rt_a");
  const auto b = scratch("rt_b");
  std::ostringstream log;
  cli::cmd_fit(quick_fit(data, a, "sar"), log);
  cli::cmd_fit(quick_fit(data, b, "sar"), log);
  for (const char* f : {"chain_beta_1.csv", "chain_beta_2.csv", "chain_rho.csv", "chain_loglik.csv",
                        "summary.csv", "geweke.csv", "run_meta.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  for (const auto& dir : {a, b}) {
    cli::ImpactsOptions imp;
    imp.data = data_in(data);
    imp.data.shares.clear();
    imp.chain = dir.string();
    imp.out = dir.string();
    cli::cmd_impacts(imp, log);
  }
  CHECK(slurp(a / "impacts.csv") == slurp(b / "impacts.csv"));
  CHECK(slurp(a / "impacts_long.csv") == slurp(b / "impacts_long.csv"));

  const auto rows = read_csv(a / "impacts.csv");
  REQUIRE(rows.size() == 5);  // header, x1, x2, rho, mcfadden_r2
  CHECK(rows[0].size() == 19);
  CHECK(rows[1][0] == "x1");
  CHECK(rows[3][0] == "rho");
  CHECK(rows[4][0] == "mcfadden_r2");
  const double r2 = std::stod(rows[4][1]);
  CHECK(r2 > 0.0);
  CHECK(r2 < 1.0);
  // rows of Lambda sum to zero over classes
  for (std::size_t r = 1; r <= 2; ++r) {
    double total = 0.0;
    for (std::size_t j = 0; j < 3; ++j) total += std::stod(rows[r][1 + j * 6 + 4]);
    CHECK(std::abs(total) < 1e-12);
  }
  const auto meta = nlohmann::json::parse(slurp(a / "run_meta.json"));
  CHECK(meta["family"] == "sar");

  const auto c = scratch("rt_c");
  auto other = quick_fit(data, c, "sar");
  other.seed = 10;
  cli::cmd_fit(other, log);
  CHECK(slurp(a / "chain_rho.csv") != slurp(c / "chain_rho.csv"));
}

TEST_CASE("MNL impacts have zero spillover and no rho") {
  const auto data = simulated("mnl_data", 0.0);
  const auto out = scratch("mnl_fit");
  std::ostringstream log;
  auto f = quick_fit(data, out, "mnl");
  f.data.coords.clear();
  cli::cmd_fit(f, log);
  cli::ImpactsOptions imp;
  imp.data = f.data;
  imp.chain = out.string();
  imp.out = out.string();
  cli::cmd_impacts(imp, log);
  const auto rows = read_csv(out / "impacts.csv");
  for (std::size_t r = 1; r <= 2; ++r) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::stod(rows[r][1 + j * 6 + 2]) == 0.0);
  }
  CHECK(std::stod(rows[3][1]) == 0.0);
  CHECK(std::stod(rows[3][7]) == 0.0);
}

TEST_CASE("SDM and bivariate fits run from the CLI layer") {
  const auto data = simulated("fam_data", 0.4, 80);
  std::ostringstream log;
  auto sdm = quick_fit(data, scratch("fam_sdm"), "sar");
  sdm.durbin = true;
  cli::cmd_fit(sdm, log);
  CHECK(nlohmann::json::parse(slurp(fs::path(sdm.out) / "run_meta.json"))["family"] == "sdm");
  auto biv = quick_fit(data, scratch("fam_biv"), "bivariate");
  cli::cmd_fit(biv, log);
  const auto meta = nlohmann::json::parse(slurp(fs::path(biv.out) / "run_meta.json"));
  CHECK(meta["fit"]["mcfadden_r2"].is_null());
  CHECK_THROWS_AS(cli::resolve_family("mnl", true), ConfigError);
  CHECK(cli::resolve_family("sdm", false) == Family::SDM_MNL);
}

TEST_CASE("input validation") {
  const auto data = simulated("bad_data", 0.5, 40);
  std::ostringstream log;

  SUBCASE("spatial family without neighbours") {
    auto f = quick_fit(data, scratch("bad_nocoords"), "sar");
    f.data.coords.clear();
    CHECK_THROWS_AS(cli::cmd_fit(f, log), ConfigError);
  }
  SUBCASE("row count mismatch names the file") {
    const auto dir = scratch("bad_rows");
    std::string cov = slurp(data / "covariates.csv");
    cov.erase(cov.rfind('\n', cov.size() - 2) + 1);
    spit(dir / "covariates.csv", cov);
    auto f = quick_fit(data, dir, "sar");
    f.data.covariates = (dir / "covariates.csv").string();
    try {
      cli::cmd_fit(f, log);
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("covariates.csv") != std::string::npos);
    }
  }
  SUBCASE("NaN cell names row and column") {
    const auto dir = scratch("bad_nan");
    auto rows = read_csv(data / "covariates.csv");
    rows[3][2] = "nan";
    std::string text;
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) text += (c ? "," : "") + r[c];
      text += '\n';
    }
    spit(dir / "covariates.csv", text);
    auto f = quick_fit(data, dir, "sar");
    f.data.covariates = (dir / "covariates.csv").string();
    try {
      cli::cmd_fit(f, log);
      FAIL("expected an error");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("x2") != std::string::npos);
    }
  }
  SUBCASE("both coordinates and weights") {
    auto f = quick_fit(data, scratch("bad_both"), "sar");
    f.data.weights = f.data.coords;
    CHECK_THROWS_AS(cli::cmd_fit(f, log), ConfigError);
  }
  SUBCASE("impacts on a missing chain") {
    cli::ImpactsOptions imp;
    imp.data = data_in(data);
    imp.chain = (fs::temp_directory_path() / "spmnl_test_cli_nowhere").string();
    imp.out = scratch("bad_chain").string();
    CHECK_THROWS_AS(cli::cmd_impacts(imp, log), ConfigError);
  }
}

TEST_CASE("executable exit codes") {
  const auto data = simulated("exe_data", 0.5, 40);
  const auto out = scratch("exe_out");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("simulate --classes 4 --out " + out.string()) == 2);
  CHECK(run_cli("fit --family sar --shares " + (data / "shares.csv").string() + " --covariates " +
                (data / "covariates.csv").string() + " --out " + out.string()) == 2);
  CHECK(run_cli("fit --family probit --shares a --covariates b --out c") != 0);
  CHECK(run_cli("fit --family mnl --draws 40 --burnin 20 --shares " + (data / "shares.csv").string() +
                " --covariates " + (data / "covariates.csv").string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "summary.csv"));
}
