#include <doctest.h>

#include <cmath>
#include <sstream>

#include "meshsim/cli.hpp"
#include "meshsim/config.hpp"
#include "meshsim/engine.hpp"
#include "meshsim/errors.hpp"

using namespace meshsim;
using namespace meshsim::engine;

namespace {

const std::string kSource = MESHSIM_SOURCE_DIR;

cli::Scenario desk() {
  const auto cfg = config::Config::load(kSource + "/configs/desk.cfg");
  return cli::load_scenario(cfg, kSource + "/configs");
}

traffic::TrafficSeries zero_traffic(int cells, std::int64_t ticks) { return traffic::TrafficSeries(cells, ticks); }

traffic::TrafficScenario short_traffic(const cli::Scenario& s, std::int64_t ticks) {
  auto t = s.traffic;
  t.duration_ticks = ticks;
  t.surge.reset();
  return t;
}

}  // namespace

TEST_CASE("capacity model") {
  SUBCASE("no demand") {
    const std::vector<int> server{0, 0};
    const std::vector<char> covered{1, 1};
    const std::vector<std::int64_t> cap{10}, demand{0, 0};
    const auto r = capacity_model(server, covered, cap, demand);
    CHECK(r.served == 0);
    CHECK(r.congestion == 0);
  }
  SUBCASE("saturation") {
    const std::vector<int> server{0};
    const std::vector<char> covered{1};
    const std::vector<std::int64_t> cap{10}, demand{25};
    const auto r = capacity_model(server, covered, cap, demand);
    CHECK(r.served == 10);
    CHECK(r.congestion == 15);
    CHECK(r.uncovered == 0);
  }
  SUBCASE("uncovered demand is not congestion") {
    const std::vector<int> server{0, 0};
    const std::vector<char> covered{1, 0};
    const std::vector<std::int64_t> cap{10}, demand{4, 7};
    const auto r = capacity_model(server, covered, cap, demand);
    CHECK(r.served == 4);
    CHECK(r.congestion == 0);
    CHECK(r.uncovered == 7);
  }
  SUBCASE("two nodes sharing one zone serve twice the users of two zones") {
    const std::vector<int> server{0, 1};
    const std::vector<char> covered{1, 1};
    const std::vector<std::int64_t> demand{1000, 1000};
    const auto one = node_capacity_users(2, 50, 1, 1);
    const auto two = node_capacity_users(2, 50, 1, 2);
    const std::vector<std::int64_t> cap1{one, one}, cap2{two, two};
    CHECK(capacity_model(server, covered, cap1, demand).served ==
          2 * capacity_model(server, covered, cap2, demand).served);
  }
  SUBCASE("more demand never serves fewer") {
    const std::vector<int> server{0, 1, 0, 1, 2};
    const std::vector<char> covered{1, 1, 1, 0, 1};
    const std::vector<std::int64_t> cap{30, 12, 5};
    std::vector<std::int64_t> demand{3, 9, 40, 2, 1};
    std::int64_t prev = capacity_model(server, covered, cap, demand).served;
    for (int step = 0; step < 50; ++step) {
      demand[step % demand.size()] += step % 7;
      const auto now = capacity_model(server, covered, cap, demand).served;
      CHECK(now >= prev);
      prev = now;
    }
  }
  CHECK(node_capacity_users(4, 50, 1, 2) == 100);
  CHECK(node_capacity_users(3, 300, 1, 1) == 900);
  CHECK(node_capacity_users(1, 10, 3, 1) == 3);
}

TEST_CASE("simulation behaviour on the desk scenario") {
  const auto s = desk();
  const auto& macro = s.arch("macro");
  const auto& mesh_arch = s.arch("mesh");

  SUBCASE("idle adaptive mesh sits on its power floor") {
    const auto r = run_simulation(mesh_arch, s.service, zero_traffic(100, 20), 1);
    const double per_node = mesh_arch.power.overhead_w + mesh_arch.power.carrier_w +
                            std::pow(10.0, mesh_arch.bounds.p_min_dbm / 10.0) / 1000.0 /
                                mesh_arch.power.pa_efficiency;
    for (const auto& t : r.ticks) {
      CHECK(t.total_power_w == doctest::Approx(50 * per_node).epsilon(1e-12));
      CHECK(t.served == 0);
    }
  }
  SUBCASE("fixed macro draws the same power under any load") {
    const auto series = traffic::generate_demand(s.traffic);
    const auto r = run_simulation(macro, s.service, series, 1);
    for (const auto& t : r.ticks) CHECK(t.total_power_w == r.ticks.front().total_power_w);
    const auto idle = run_simulation(macro, s.service, zero_traffic(100, 5), 1);
    CHECK(idle.ticks.front().total_power_w == r.ticks.front().total_power_w);
  }
  SUBCASE("determinism and energy accounting") {
    const auto series = traffic::generate_demand(short_traffic(s, 120));
    const auto a = run_simulation(mesh_arch, s.service, series, 4);
    const auto b = run_simulation(mesh_arch, s.service, series, 4);
    std::ostringstream ca, cb, na, nb, sa, sb;
    write_ticks_csv(ca, a);
    write_ticks_csv(cb, b);
    write_node_trace_csv(na, a);
    write_node_trace_csv(nb, b);
    write_summary(sa, a);
    write_summary(sb, b);
    CHECK(ca.str() == cb.str());
    CHECK(na.str() == nb.str());
    CHECK(sa.str() == sb.str());

    double energy = 0.0, served = 0.0;
    std::int64_t congestion = 0;
    for (const auto& t : a.ticks) {
      energy += t.total_power_w * a.tick_seconds;
      served += static_cast<double>(t.served);
      congestion += t.congestion;
    }
    CHECK(a.total_energy_j == energy);
    CHECK(a.congestion_total == congestion);
    CHECK(a.mean_served == doctest::Approx(served / static_cast<double>(a.ticks.size())));
    CHECK(a.nodes.p_tx_dbm.size() == a.ticks.size() * 50);
  }
  SUBCASE("adaptive powers stay inside their bounds") {
    const auto series = traffic::generate_demand(short_traffic(s, 60));
    const auto r = run_simulation(mesh_arch, s.service, series, 2);
    for (double p : r.nodes.p_tx_dbm) {
      CHECK(p >= mesh_arch.bounds.p_min_dbm);
      CHECK(p <= mesh_arch.bounds.p_max_dbm);
    }
  }
  SUBCASE("more demand never serves fewer users under fixed powers") {
    auto t = short_traffic(s, 40);
    const auto low = traffic::generate_demand(t);
    traffic::TrafficSeries high(low.n_cells(), low.n_ticks());
    for (std::int64_t k = 0; k < low.n_ticks(); ++k) {
      for (int c = 0; c < low.n_cells(); ++c) high.set_users(k, c, low.users(k, c) * 3 + (c % 5));
    }
    for (const auto* arch : {&macro}) {
      auto fixed = *arch;
      fixed.mode = PowerMode::Fixed;
      fixed.carrier_lag_ticks = 0;
      const auto a = run_simulation(fixed, s.service, low, 1);
      const auto b = run_simulation(fixed, s.service, high, 1);
      for (std::size_t k = 0; k < a.ticks.size(); ++k) CHECK(b.ticks[k].served >= a.ticks[k].served);
    }
  }
}

TEST_CASE("configuration guards") {
  const auto s = desk();
  auto mesh_arch = s.arch("mesh");
  const auto series = traffic::generate_demand(short_traffic(s, 10));

  CHECK_THROWS_AS(run_simulation(mesh_arch, s.service, zero_traffic(99, 5), 1), ConfigMismatch);

  auto learned = mesh_arch;
  learned.policy = PowerPolicy::Learned;
  CHECK_THROWS_AS(run_simulation(learned, s.service, series, 1), UntrainedPolicy);

  auto forecasting = mesh_arch;
  forecasting.forecaster = true;
  CHECK_THROWS_AS(run_simulation(forecasting, s.service, series, 1), ConfigMismatch);

  auto other = s.arch("macro");
  other.coverage_target = 0.9;
  const std::vector<std::uint64_t> seeds{1};
  CHECK_THROWS_AS(compare_architectures(other, mesh_arch, s.service, short_traffic(s, 10), seeds),
                  ConfigMismatch);
  CHECK_THROWS_AS(compare_architectures(s.arch("macro"), mesh_arch, s.service, short_traffic(s, 10), {}),
                  ConfigMismatch);

  auto deaf = s.service;
  deaf.sensitivity_dbm = -30;
  try {
    compare_architectures(s.arch("macro"), mesh_arch, deaf, short_traffic(s, 10), seeds);
    FAIL("coverage guard did not fire");
  } catch (const CoverageUnmet& e) {
    CHECK(std::string(e.what()).find("architecture '") != std::string::npos);
  }
}

TEST_CASE("comparison symmetry") {
  const auto s = desk();
  const auto t = short_traffic(s, 60);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto self = compare_architectures(s.arch("mesh"), s.arch("mesh"), s.service, t, seeds);
  for (const auto* stat : {&self.power, &self.users_per_watt, &self.served}) {
    CHECK(stat->mean == 1.0);
    CHECK(stat->stddev == 0.0);
  }
  const auto ab = compare_architectures(s.arch("macro"), s.arch("mesh"), s.service, t, seeds);
  const auto ba = compare_architectures(s.arch("mesh"), s.arch("macro"), s.service, t, seeds);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(ab.power.per_seed[i] * ba.power.per_seed[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ab.users_per_watt.per_seed[i] * ba.users_per_watt.per_seed[i] ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ab.served.per_seed[i] * ba.served.per_seed[i] == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(ab.power.mean < 0.5);
  CHECK(ab.users_per_watt.mean > 10.0);
}

TEST_CASE("forecaster never adds congestion on the surge scenario") {
  const auto s = desk();
  auto off = s.arch("mesh");
  auto on = off;
  on.forecaster = true;
  on.forecast_model = train_demand_forecaster(s.traffic, s.forecast).model;
  const auto series = traffic::generate_demand(s.traffic);
  const auto a = run_simulation(off, s.service, series, 1);
  const auto b = run_simulation(on, s.service, series, 1);
  MESSAGE("congestion off " << a.congestion_total << ", on " << b.congestion_total);
  CHECK(b.congestion_total <= a.congestion_total);
}
