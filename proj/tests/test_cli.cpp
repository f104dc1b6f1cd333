#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "meshsim/cli.hpp"
#include "meshsim/config.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace meshsim;

namespace {

const std::string kSource = MESHSIM_SOURCE_DIR;
const std::string kDesk = kSource + "/configs/desk.cfg";

struct Outcome {
  int code;
  std::string out, err;
};

Outcome meshsim_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("meshsim-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(io::read_file(p));
  std::string line;
  while (std::getline(in, line)) rows.push_back(io::split(line, ','));
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = config::Config::parse(
      "# comment\n[a]\nx = 1.5\nflag = on\nname = hello world  # trailing\n\n[b]\ny = 3\n", "t.cfg");
  CHECK(c.get_double("a", "x", 0) == 1.5);
  CHECK(c.get_bool("a", "flag", false));
  CHECK(c.get_int("b", "y", 0) == 3);
  CHECK(c.get_int("b", "z", 7) == 7);
  CHECK(c.has_section("b"));
  CHECK(!c.has_section("c"));

  auto message = [](const std::string& text) {
    try {
      auto cfg = config::Config::parse(text, "bad.cfg");
      cfg.get_double("s", "v", 0);
      cfg.get_bool("s", "b", false);
      cfg.reject_unknown();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(contains(message("[s]\nv = 1\nv = 2\n"), "bad.cfg:3"));
  CHECK(contains(message("[s]\n[s]\n"), "bad.cfg:2"));
  CHECK(contains(message("[s]\nv = abc\n"), "bad.cfg:2: [s] v:"));
  CHECK(contains(message("[s]\nb = maybe\n"), "b"));
  CHECK(contains(message("[s]\nvv = 1\n"), "unknown key 'vv' in [s]"));
  CHECK(contains(message("v = 1\n"), "bad.cfg:1"));
  CHECK(contains(message("[s]\njunk\n"), "bad.cfg:2"));
}

TEST_CASE("io helpers") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(std::nan("")) == "NA");
  CHECK(io::format_double(14e6) == "14000000");
  CHECK(io::format_double(-0.0) == "-0");
  CHECK(io::format_double(1e300) == "1e+300");
  CHECK(io::format_grouped(46900) == "46,900");
  CHECK(io::format_grouped(1234567.0) == "1,234,567");
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hex64(0xabcULL) == "0000000000000abc");
  CHECK_THROWS_AS(io::parse_double("1.5x", "v"), FormatError);
  CHECK(io::parse_int("-12", "v") == -12);
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) CHECK(io::parse_double(io::format_double(x), "x") == x);
}

TEST_CASE("pathloss subcommand") {
  auto r = meshsim_run({"pathloss", "--model", "cost231", "--f", "2000", "--hbs", "50", "--hms", "1.5", "--d", "5",
                        "--env", "metro"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "161.28 dB"));
  r = meshsim_run({"pathloss", "--model", "fspl", "--d", "250", "--f", "2400"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "88.01 dB"));
  r = meshsim_run({"pathloss", "--model", "cost231", "--f", "900", "--hbs", "50", "--hms", "1.5", "--d", "5"});
  CHECK(r.code == 3);
  CHECK(contains(r.err, "1500"));
  CHECK(contains(r.err, "2000"));
  r = meshsim_run({"pathloss", "--model", "fspl", "--d", "0.5", "--f", "2400"});
  CHECK(r.code == 3);
  r = meshsim_run({"pathloss", "--model", "bogus", "--d", "1", "--f", "2400"});
  CHECK(r.code == 2);
}

TEST_CASE("usage") {
  CHECK(meshsim_run({"--help"}).code == 0);
  CHECK(meshsim_run({"compare", "--help"}).code == 0);
  CHECK(meshsim_run({"frobnicate"}).code == 2);
  CHECK(meshsim_run({}).code == 2);
  CHECK(contains(meshsim_run({"--version"}).out, cli::kVersion));
}

TEST_CASE("sustain subcommand") {
  const auto out = scratch("sustain");
  const auto r = meshsim_run({"sustain", "--preset", "hajj_5day", "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto report = io::read_file(out / "report.txt");
  CHECK(contains(report, "17.5 M L"));
  CHECK(contains(report, "46,900 t"));
  CHECK(contains(report, "114.7"));
  CHECK(contains(report, "73.6"));
  for (const char* f : {"event.csv", "fuel_savings.csv", "opex.csv", "capex.csv", "manifest"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK(meshsim_run({"sustain", "--preset", "no_such_preset", "--out", scratch("s2").string()}).code == 2);
}

TEST_CASE("desk comparison matches the pinned file") {
  const auto out = scratch("compare");
  const auto r = meshsim_run({"compare", "--config", kDesk, "--seeds", "10", "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto got = read_csv_rows(out / "comparison.csv");
  const auto want = read_csv_rows(oracle::data_path("desk_comparison.csv"));
  REQUIRE(got.size() == want.size());
  CHECK(got[0] == want[0]);
  for (std::size_t i = 1; i < want.size(); ++i) {
    REQUIRE(got[i].size() == want[i].size());
    CHECK(got[i][0] == want[i][0]);
    for (std::size_t j = 1; j < want[i].size(); ++j) {
      const double g = std::stod(got[i][j]), w = std::stod(want[i][j]);
      CHECK_MESSAGE(std::abs(g - w) <= 1e-9 * std::max(1.0, std::abs(w)), want[i][0] << " column " << j);
    }
  }
  for (const char* f : {"comparison.txt", "power_vs_load.csv", "ticks_macro.csv", "ticks_mesh.csv",
                        "node_tx_macro.csv", "node_tx_mesh.csv", "manifest"}) {
    CHECK(fs::exists(out / f));
  }
}

TEST_CASE("failures leave no outputs") {
  const auto out = scratch("missing");
  auto r = meshsim_run({"run", "--config", kSource + "/configs/nope.cfg", "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(!fs::exists(out / "manifest"));
  CHECK((!fs::exists(out) || fs::is_empty(out)));

  const auto cfg = scratch("typo.cfg");
  io::write_file(cfg, io::read_file(kDesk) + "\n[service]\n");
  r = meshsim_run({"run", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);

  auto text = io::read_file(kDesk);
  text.replace(text.find("noise_sigma"), 11, "noise_sigmaa");
  io::write_file(cfg, text);
  r = meshsim_run({"run", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "typo.cfg:"));
  CHECK(contains(r.err, "noise_sigmaa"));
  CHECK((!fs::exists(out) || fs::is_empty(out)));

  text = io::read_file(kDesk);
  text.replace(text.find("hotspot_user_fraction = 0.95"), 28, "hotspot_user_fraction = 0.05");
  io::write_file(cfg, text);
  r = meshsim_run({"run", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code != 0);
  CHECK(contains(r.err, "user_fraction"));
}

TEST_CASE("output directory from the environment") {
  const auto out = scratch("envdir");
  ::setenv(cli::kOutDirEnv, out.string().c_str(), 1);
  const auto r = meshsim_run({"sustain", "--preset", "annual_fleet"});
  ::unsetenv(cli::kOutDirEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "manifest"));
}

TEST_CASE("trained artifacts feed back into runs") {
  const auto pol = scratch("policy");
  REQUIRE(meshsim_run({"train-policy", "--config", kDesk, "--out", pol.string()}).code == 0);
  const auto fc = scratch("forecast");
  REQUIRE(meshsim_run({"train-forecast", "--config", kDesk, "--out", fc.string()}).code == 0);

  auto text = io::read_file(kDesk);
  const auto at = text.find("power_policy = heuristic");
  text.replace(at, 24,
               "power_policy = learned\npolicy_file = " + (pol / "policy.q").string() +
                   "\nforecast_model = " + (fc / "forecaster.lstm").string());
  text.replace(text.find("forecaster = off"), 16, "forecaster = on");
  const auto cfg = scratch("learned.cfg");
  io::write_file(cfg, text);
  const auto out = scratch("learned-run");
  const auto r = meshsim_run({"run", "--config", cfg.string(), "--out", out.string()});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(contains(io::read_file(out / "summary.txt"), "architecture: mesh"));

  // a policy trained for another node count is refused
  text.replace(text.find("n_nodes = 50"), 12, "n_nodes = 49");
  io::write_file(cfg, text);
  CHECK(meshsim_run({"run", "--config", cfg.string(), "--out", scratch("bad").string()}).code == 2);
}
