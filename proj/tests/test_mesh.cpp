#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "meshsim/errors.hpp"
#include "meshsim/mesh.hpp"
#include "meshsim/propagation.hpp"
#include "support/oracles.hpp"

using namespace meshsim;
using namespace meshsim::mesh;

namespace {

Topology line_of(int n, double spacing, double p = 0.0, double g = 0.0) {
  Topology t;
  t.side_m = spacing * (n + 1);
  t.f_mhz = 2400;
  for (int i = 0; i < n; ++i) t.nodes.push_back({i, spacing * (i + 1), 1.0, p, g});
  return t;
}

Topology random_topology(int n, std::uint64_t seed, double side = 1000.0) {
  PlacementSpec s;
  s.n = n;
  s.side_m = side;
  s.f_mhz = 2400;
  s.placement = Placement::UniformRandom;
  s.min_sep_m = 5;
  s.seed = seed;
  s.p_tx_dbm = 10;
  auto t = generate_topology(s);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-10, 20);
  for (auto& node : t.nodes) node.p_tx_dbm = u(rng);
  return t;
}

}  // namespace

TEST_CASE("grid placement") {
  PlacementSpec s;
  s.n = 4;
  s.side_m = 1000;
  s.f_mhz = 2400;
  const auto t = generate_topology(s);
  REQUIRE(t.size() == 4);
  const double xs[] = {250, 750, 250, 750}, ys[] = {250, 250, 750, 750};
  for (int i = 0; i < 4; ++i) {
    CHECK(t.nodes[i].id == i);
    CHECK(t.nodes[i].x_m == xs[i]);
    CHECK(t.nodes[i].y_m == ys[i]);
  }
}

TEST_CASE("uniform placement is deterministic and respects separation") {
  PlacementSpec s;
  s.n = 100;
  s.side_m = 1000;
  s.f_mhz = 2400;
  s.placement = Placement::UniformRandom;
  s.min_sep_m = 10;
  s.seed = 42;
  const auto a = generate_topology(s);
  const auto b = generate_topology(s);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.nodes[i].x_m == b.nodes[i].x_m);
    CHECK(a.nodes[i].y_m == b.nodes[i].y_m);
    for (std::size_t j = i + 1; j < a.size(); ++j) CHECK(distance(a.nodes[i], a.nodes[j]) >= 10.0);
  }
  CHECK_NOTHROW(validate(a, 10));
}

TEST_CASE("infeasible placement is reported") {
  PlacementSpec s;
  s.n = 50;
  s.side_m = 100;
  s.f_mhz = 2400;
  s.placement = Placement::UniformRandom;
  s.min_sep_m = 60;
  s.max_attempts_per_node = 200;
  CHECK_THROWS_AS(generate_topology(s), PlacementInfeasible);
}

TEST_CASE("distance") {
  CHECK(distance({0, 0, 0}, {1, 3, 4}) == 5.0);
  CHECK(distance({0, 7, 7}, {0, 7, 7}) == 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1000);
  for (int i = 0; i < 100; ++i) {
    Node a{0, u(rng), u(rng)}, b{1, u(rng), u(rng)};
    CHECK(distance(a, b) == distance(b, a));
  }
}

TEST_CASE("interference matrix") {
  auto two = line_of(2, 100, 10, 2);
  const auto m2 = build_interference_matrix(two, LinkModel{});
  CHECK(m2.at(0, 1) == m2.at(1, 0));

  const auto m3 = build_interference_matrix(line_of(3, 250), LinkModel{});
  CHECK(std::abs(m3.at(0, 1) - m3.at(2, 1)) < 1e-12);
  // end-to-end is one distance doubling weaker than adjacent
  CHECK(std::abs(m3.at(0, 1) - m3.at(0, 2) - 6.0205999132796239043) < 1e-9);
  CHECK(std::abs(m3.at(0, 1) - (0.0 - 88.01302500767287265)) < 1e-9);

  SUBCASE("diagonal is not readable") {
    CHECK_FALSE(m3.defined(1, 1));
    CHECK_THROWS_AS(m3.at(1, 1), ContractViolation);
    CHECK_THROWS_AS(m3.at(0, 3), ContractViolation);
  }
  SUBCASE("raising one node's power moves exactly its row") {
    auto t = random_topology(6, 9);
    const auto before = build_interference_matrix(t, LinkModel{});
    t.nodes[2].p_tx_dbm += 3.0;
    const auto after = build_interference_matrix(t, LinkModel{});
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        if (i == j) continue;
        const double want = i == 2 ? 3.0 : 0.0;
        CHECK(std::abs(after.at(i, j) - before.at(i, j) - want) < 1e-12);
      }
    }
  }
  SUBCASE("symmetric for equal powers and gains") {
    auto t = random_topology(8, 4);
    for (auto& n : t.nodes) n.p_tx_dbm = 7;
    const auto m = build_interference_matrix(t, LinkModel{});
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = i + 1; j < 8; ++j) CHECK(std::abs(m.at(i, j) - m.at(j, i)) < 1e-9);
    }
  }
  SUBCASE("incoming power sums defined entries only") {
    double mw = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (i != 1) mw += std::pow(10.0, m3.at(i, 1) / 10.0);
    }
    CHECK(m3.incoming_mw(1) == doctest::Approx(mw).epsilon(1e-12));
  }
  SUBCASE("co-located nodes and cost231 out of domain") {
    auto t = line_of(2, 100);
    t.nodes[1].x_m = t.nodes[0].x_m + 0.5;
    CHECK_THROWS_AS(build_interference_matrix(t, LinkModel{}), CoLocated);
    LinkModel c{LinkModel::Kind::Cost231, propagation::Environment::MediumCity, 30, 1.5};
    auto far = line_of(2, 500);
    far.f_mhz = 1800;
    try {
      build_interference_matrix(far, c);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("0-1") != std::string::npos);
    }
  }
}

TEST_CASE("top-k interferers") {
  const auto m2 = build_interference_matrix(line_of(2, 100), LinkModel{});
  const auto one = top_k_interferers(m2, 0, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].source_id == 1);
  CHECK(one[0].p_rx_dbm == m2.at(1, 0));

  const auto t = random_topology(6, 17);
  const auto m = build_interference_matrix(t, LinkModel{});
  for (std::size_t node = 0; node < 6; ++node) {
    std::vector<std::pair<double, int>> col;
    for (std::size_t i = 0; i < 6; ++i) {
      if (i != node) col.push_back({-m.at(i, node), static_cast<int>(i)});
    }
    std::sort(col.begin(), col.end());
    const auto got = top_k_interferers(m, node, 3);
    REQUIRE(got.size() == 3);
    for (int r = 0; r < 3; ++r) {
      CHECK(got[r].source_id == col[r].second);
      CHECK(got[r].p_rx_dbm == -col[r].first);
    }
    const auto full = top_k_interferers(m, node, 5);
    CHECK(full.size() == 5);
    for (std::size_t k = 1; k < 5; ++k) {
      const auto a = top_k_interferers(m, node, k);
      const auto b = top_k_interferers(m, node, k + 1);
      for (std::size_t r = 0; r < k; ++r) CHECK(a[r].source_id == b[r].source_id);
    }
  }
  CHECK_THROWS_AS(top_k_interferers(m, 0, 0), KOutOfRange);
  CHECK_THROWS_AS(top_k_interferers(m, 0, 6), KOutOfRange);

  // ties resolve to the lower source id
  const auto tied = InterferenceMatrix::from_function(4, [](std::size_t, std::size_t) { return -70.0; });
  const auto ties = top_k_interferers(tied, 2, 3);
  CHECK(ties[0].source_id == 0);
  CHECK(ties[1].source_id == 1);
  CHECK(ties[2].source_id == 3);
}

TEST_CASE("zone partitioning") {
  const auto t = random_topology(10, 5);
  const auto m = build_interference_matrix(t, LinkModel{});
  const auto none = partition_zones(m, 1e9);
  CHECK(none.n_zones == 1);
  CHECK(reuse_capacity_gain(none) == 10.0);
  const auto all = partition_zones(m, -1e9);
  CHECK(all.n_zones == 10);
  CHECK(reuse_capacity_gain(all) == 1.0);

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto ti = random_topology(5, seed);
    const auto mi = build_interference_matrix(ti, LinkModel{});
    for (double thr : {-80.0, -70.0, -60.0}) {
      const auto z = partition_zones(mi, thr);
      const auto adj = oracle::conflict_graph(mi, thr);
      CHECK(oracle::same_zone_conflicts(adj, z.zone_of) == 0);
      CHECK(z.n_zones <= oracle::chromatic_number(adj) + 1);
    }
  }
}

TEST_CASE("reuse gain endpoints") {
  ZoneAssignment one{std::vector<int>(20, 0), 1};
  CHECK(reuse_capacity_gain(one) == 20.0);
  ZoneAssignment each{{}, 20};
  for (int i = 0; i < 20; ++i) each.zone_of.push_back(i);
  CHECK(reuse_capacity_gain(each) == 1.0);
}

TEST_CASE("100-node grid at 250 m spacing") {
  PlacementSpec s;
  s.n = 100;
  s.side_m = 2500;
  s.f_mhz = 2400;
  s.p_tx_dbm = 0;
  const auto t = generate_topology(s);
  CHECK(std::abs(t.nodes[1].x_m - t.nodes[0].x_m - 250.0) < 1e-9);
  const auto m = build_interference_matrix(t, LinkModel{});
  const auto z = partition_zones(m, -90);
  CHECK(oracle::same_zone_conflicts(oracle::conflict_graph(m, -90), z.zone_of) == 0);
  // adjacent links land at -88.0 dBm, diagonals at -91.0: a bipartite grid
  CHECK(z.n_zones == 2);
  CHECK(reuse_capacity_gain(z) == 50.0);
}

TEST_CASE("reuse gain does not rise as the threshold falls") {
  int violations = 0, checks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = random_topology(12, 100 + seed);
    const auto m = build_interference_matrix(t, LinkModel{});
    double prev = 1e9;
    for (double thr = -40; thr >= -110; thr -= 2.5) {
      const double g = reuse_capacity_gain(partition_zones(m, thr));
      if (g > prev + 1e-12) ++violations;
      prev = g;
      ++checks;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("topology round trip and matrix csv") {
  const auto t = random_topology(7, 3);
  std::stringstream ss;
  write_topology(ss, t);
  const auto back = read_topology(ss);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.nodes[i].x_m == t.nodes[i].x_m);
    CHECK(back.nodes[i].y_m == t.nodes[i].y_m);
    CHECK(back.nodes[i].p_tx_dbm == t.nodes[i].p_tx_dbm);
  }
  CHECK(back.seed == t.seed);
  std::ostringstream csv;
  write_matrix_csv(csv, build_interference_matrix(line_of(2, 100), LinkModel{}));
  const auto text = csv.str();
  CHECK(text.rfind("source,0,1\n0,NA,", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
}
