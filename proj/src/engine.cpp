#include "meshsim/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <ostream>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"
#include "meshsim/rng.hpp"
#include "meshsim/sustain.hpp"

namespace meshsim::engine {

std::string_view to_string(ArchKind k) { return k == ArchKind::Macro ? "macro" : "mesh"; }
std::string_view to_string(PowerMode m) { return m == PowerMode::Fixed ? "fixed" : "adaptive"; }
std::string_view to_string(PowerPolicy p) {
  return p == PowerPolicy::Heuristic ? "heuristic" : "learned";
}

ArchKind parse_arch_kind(std::string_view s) {
  if (s == "macro") return ArchKind::Macro;
  if (s == "mesh") return ArchKind::Mesh;
  throw ConfigError("unknown architecture kind '" + std::string(s) + "' (expected macro|mesh)");
}

PowerMode parse_power_mode(std::string_view s) {
  if (s == "fixed") return PowerMode::Fixed;
  if (s == "adaptive") return PowerMode::Adaptive;
  throw ConfigError("unknown power mode '" + std::string(s) + "' (expected fixed|adaptive)");
}

PowerPolicy parse_power_policy(std::string_view s) {
  if (s == "heuristic") return PowerPolicy::Heuristic;
  if (s == "learned") return PowerPolicy::Learned;
  throw ConfigError("unknown power policy '" + std::string(s) + "' (expected heuristic|learned)");
}

void validate(const ArchitectureConfig& a) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ConfigMismatch("architecture '" + a.name + "': " + field + " " + why);
  };
  if (a.n_nodes < 2) fail("n_nodes", "must be >= 2");
  if (!(a.min_link_m >= 1.0)) fail("min_link_m", "must be >= 1");
  if (!(a.bounds.p_min_dbm < a.bounds.p_max_dbm)) fail("p_min_dbm", "must be below p_max_dbm");
  if (a.max_carriers < 1) fail("max_carriers", "must be >= 1");
  if (!(a.carrier_capacity_mbps > 0.0)) fail("carrier_capacity_mbps", "must be > 0");
  if (a.carrier_lag_ticks < 0) fail("carrier_lag_ticks", "must be >= 0");
  if (!(a.power.pa_efficiency > 0.0 && a.power.pa_efficiency <= 1.0)) {
    fail("pa_efficiency", "must lie in (0, 1]");
  }
  if (!(a.power.overhead_w >= 0.0)) fail("overhead_w", "must be >= 0");
  if (!(a.power.carrier_w >= 0.0)) fail("carrier_w", "must be >= 0");
  if (!(a.coverage_target >= 0.0 && a.coverage_target <= 1.0)) {
    fail("coverage_target", "must lie in [0, 1]");
  }
  if (!(a.shadowing_sigma_db >= 0.0)) fail("shadowing_sigma_db", "must be >= 0");
  if (a.policy_max_steps < 0) fail("policy_max_steps", "must be >= 0");
  if (!(a.grid_kg_co2_per_kwh >= 0.0)) fail("grid_kg_co2_per_kwh", "must be >= 0");
  if (!(a.annual_cost_usd >= 0.0)) fail("annual_cost_usd", "must be >= 0");
}

void validate(const ServiceConfig& s) {
  if (!(s.side_m > 0.0)) throw ConfigMismatch("service: side_m must be > 0");
  if (!(s.tick_seconds > 0.0)) throw ConfigMismatch("service: tick_seconds must be > 0");
  if (!(s.per_user_rate_mbps > 0.0)) throw ConfigMismatch("service: per_user_rate_mbps must be > 0");
  if (!std::isfinite(s.sensitivity_dbm)) throw ConfigMismatch("service: sensitivity_dbm must be finite");
}

mesh::Topology build_topology(const ArchitectureConfig& arch, const ServiceConfig& service) {
  mesh::PlacementSpec spec;
  spec.n = arch.n_nodes;
  spec.side_m = service.side_m;
  spec.f_mhz = arch.f_mhz;
  spec.placement = arch.placement;
  spec.min_sep_m = arch.min_sep_m;
  spec.seed = arch.topology_seed;
  spec.p_tx_dbm = arch.p_tx_dbm;
  spec.g_dbi = arch.g_dbi;
  return mesh::generate_topology(spec);
}

std::int64_t node_capacity_users(int carriers, double carrier_capacity_mbps,
                                 double per_user_rate_mbps, int n_zones) {
  if (carriers <= 0 || n_zones <= 0) return 0;
  return static_cast<std::int64_t>(std::floor(carriers * carrier_capacity_mbps /
                                              (per_user_rate_mbps * n_zones) + 1e-9));
}

ServiceResult capacity_model(std::span<const int> server_of_cell, std::span<const char> covered,
                             std::span<const std::int64_t> node_capacity,
                             std::span<const std::int64_t> demand) {
  ServiceResult r;
  r.served_per_cell.assign(demand.size(), 0);
  std::vector<std::int64_t> residual(node_capacity.begin(), node_capacity.end());
  for (std::size_t c = 0; c < demand.size(); ++c) {
    if (demand[c] < 0) throw DomainError("capacity_model: negative demand in cell " + std::to_string(c));
    if (demand[c] == 0) continue;
    if (!covered[c]) {
      r.uncovered += demand[c];
      continue;
    }
    auto& cap = residual[static_cast<std::size_t>(server_of_cell[c])];
    const std::int64_t s = std::min(demand[c], std::max<std::int64_t>(cap, 0));
    cap -= s;
    r.served_per_cell[c] = s;
    r.served += s;
    r.congestion += demand[c] - s;
  }
  return r;
}

namespace {

int side_cells(int n_cells) {
  int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_cells))));
  if (g * g != n_cells) {
    throw ConfigMismatch("traffic has " + std::to_string(n_cells) +
                         " cells; the footprint needs a square number of cells");
  }
  return g;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double ratio_or_nan(double num, double den) {
  return den != 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

SimReport run_simulation(const ArchitectureConfig& arch, const ServiceConfig& service,
                         const traffic::TrafficSeries& traffic, std::uint64_t seed) {
  validate(arch);
  validate(service);
  const int n_cells = traffic.n_cells();
  const int g = side_cells(n_cells);
  const auto topo = build_topology(arch, service);
  const std::size_t n = topo.size();
  const auto cells = static_cast<std::size_t>(n_cells);

  auto loss_at = [&](double d) {
    return mesh::link_loss_db(arch.link, std::max(d, arch.min_link_m), arch.f_mhz);
  };

  Rng shadow(seed ^ 0x5deece66dULL);
  std::vector<double> loss_nc(n * cells);
  const double cell_w = service.side_m / g;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cells; ++c) {
      const double cx = (static_cast<double>(c % g) + 0.5) * cell_w;
      const double cy = (static_cast<double>(c / g) + 0.5) * cell_w;
      const double d = std::hypot(topo.nodes[i].x_m - cx, topo.nodes[i].y_m - cy);
      double l = loss_at(d);
      if (arch.shadowing_sigma_db > 0.0) l += arch.shadowing_sigma_db * shadow.normal();
      loss_nc[i * cells + c] = l;
    }
  }
  std::vector<double> loss_nn(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double l = loss_at(mesh::distance(topo.nodes[i], topo.nodes[j]));
      loss_nn[i * n + j] = l;
      loss_nn[j * n + i] = l;
    }
  }

  std::vector<int> server(cells);
  std::vector<std::vector<std::size_t>> assigned(n);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = loss_nc[i * cells + c] - topo.nodes[i].g_dbi;
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    server[c] = static_cast<int>(best);
    assigned[best].push_back(c);
  }

  const bool adaptive = arch.mode == PowerMode::Adaptive;
  std::optional<powerctl::PowerControlEnv> env;
  if (adaptive && arch.policy == PowerPolicy::Learned) {
    if (!arch.q) {
      throw UntrainedPolicy("architecture '" + arch.name +
                            "' uses the learned power policy but no policy file was given");
    }
    if (arch.q->num_nodes() != n) {
      throw ConfigMismatch("policy was trained for " + std::to_string(arch.q->num_nodes()) +
                           " nodes; architecture '" + arch.name + "' has " + std::to_string(n));
    }
    env.emplace(topo, arch.link, powerctl::RewardConfig{}, arch.q->bounds(), arch.q->k());
  }
  if (arch.forecaster && !arch.forecast_model) {
    throw ConfigMismatch("architecture '" + arch.name + "' enables the forecaster without a model");
  }
  const auto totals = traffic.totals();

  SimReport rep;
  rep.arch_name = arch.name;
  rep.seed = seed;
  rep.n_nodes = n;
  rep.tick_seconds = service.tick_seconds;
  const auto n_ticks = traffic.n_ticks();
  rep.ticks.reserve(static_cast<std::size_t>(n_ticks));

  std::vector<double> powers(n, adaptive ? arch.bounds.clamp(arch.p_tx_dbm) : arch.p_tx_dbm);
  std::vector<std::deque<int>> target_hist(n);
  std::vector<double> est(cells), node_est(n), floor_dbm(n), rx(cells);
  std::vector<char> covered(cells);
  std::vector<int> active(n);
  std::vector<std::int64_t> capacity(n);

  double energy = 0.0, power_sum = 0.0, useful_energy = 0.0, cov_sum = 0.0, reuse_sum = 0.0;
  double min_cov = 1.0;
  std::int64_t served_sum = 0, demand_sum = 0, congestion_sum = 0;

  for (std::int64_t t = 0; t < n_ticks; ++t) {
    const std::int64_t obs = std::max<std::int64_t>(t - 1, 0);
    const auto row = traffic.tick_row(obs);
    for (std::size_t c = 0; c < cells; ++c) est[c] = static_cast<double>(row[c]);
    if (arch.forecaster) {
      const auto& model = *arch.forecast_model;
      const auto w = static_cast<std::int64_t>(model.window);
      if (obs + 1 >= w) {
        const double f = forecast::predict(
            model, std::span<const double>(totals).subspan(static_cast<std::size_t>(obs + 1 - w),
                                                           model.window));
        const double tot = totals[static_cast<std::size_t>(obs)];
        if (tot > 0.0) {
          for (std::size_t c = 0; c < cells; ++c) {
            est[c] = std::max(est[c], f * static_cast<double>(row[c]) / tot);
          }
        }
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      double load = 0.0;
      double fl = arch.bounds.p_min_dbm;
      for (std::size_t c : assigned[i]) {
        load += est[c];
        if (est[c] > 0.0) {
          fl = std::max(fl, service.sensitivity_dbm + arch.margin_db - topo.nodes[i].g_dbi -
                                service.ue_gain_dbi + loss_nc[i * cells + c]);
        }
      }
      node_est[i] = load;
      floor_dbm[i] = std::min(fl, arch.bounds.p_max_dbm);
    }

    if (!adaptive) {
      std::fill(powers.begin(), powers.end(), arch.p_tx_dbm);
    } else if (arch.policy == PowerPolicy::Heuristic) {
      powers = floor_dbm;
    } else {
      auto fp = powerctl::greedy_fixed_point(*env, *arch.q, powers, arch.policy_max_steps);
      for (std::size_t i = 0; i < n; ++i) {
        powers[i] = std::clamp(fp.powers_dbm[i], floor_dbm[i], arch.bounds.p_max_dbm);
      }
    }

    const auto matrix = mesh::InterferenceMatrix::from_function(n, [&](std::size_t i, std::size_t j) {
      return powers[i] + topo.nodes[i].g_dbi + topo.nodes[j].g_dbi - loss_nn[i * n + j];
    });
    const auto zones = mesh::partition_zones(matrix, arch.conflict_threshold_dbm);

    int carriers_total = 0;
    double power_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int target = arch.max_carriers;
      if (adaptive) {
        const double need =
            node_est[i] * service.per_user_rate_mbps * zones.n_zones / arch.carrier_capacity_mbps;
        target = std::clamp(static_cast<int>(std::ceil(need - 1e-9)), 1, arch.max_carriers);
      }
      auto& h = target_hist[i];
      h.push_back(target);
      while (h.size() > static_cast<std::size_t>(arch.carrier_lag_ticks) + 1) h.pop_front();
      active[i] = *std::min_element(h.begin(), h.end());
      carriers_total += active[i];
      capacity[i] = node_capacity_users(active[i], arch.carrier_capacity_mbps,
                                        service.per_user_rate_mbps, zones.n_zones);
      power_w += arch.power.overhead_w + active[i] * arch.power.carrier_w +
                 powerctl::dbm_to_mw(powers[i]) / 1000.0 / arch.power.pa_efficiency;
    }

    std::size_t n_covered = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      const auto s = static_cast<std::size_t>(server[c]);
      rx[c] = powers[s] + topo.nodes[s].g_dbi + service.ue_gain_dbi - loss_nc[s * cells + c];
      covered[c] = rx[c] >= service.sensitivity_dbm;
      n_covered += covered[c] ? 1 : 0;
    }
    const auto demand = traffic.tick_row(t);
    const auto sv = capacity_model(server, covered, capacity, demand);

    double useful_w = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (sv.served_per_cell[c] > 0) {
        useful_w += static_cast<double>(sv.served_per_cell[c]) * powerctl::dbm_to_mw(rx[c]) / 1000.0;
      }
    }

    TickLog log;
    log.tick = t;
    log.total_power_w = power_w;
    log.demand = traffic.total(t);
    log.served = sv.served;
    log.congestion = sv.congestion;
    log.uncovered = sv.uncovered;
    log.coverage = static_cast<double>(n_covered) / static_cast<double>(cells);
    log.carriers = carriers_total;
    log.n_zones = zones.n_zones;
    log.mean_tx_dbm = mean_of(powers);
    log.useful_rf_w = useful_w;
    rep.ticks.push_back(log);

    for (std::size_t i = 0; i < n; ++i) {
      rep.nodes.p_tx_dbm.push_back(powers[i]);
      std::int64_t load = 0;
      for (std::size_t c : assigned[i]) load += demand[c];
      rep.nodes.load.push_back(load);
      rep.nodes.carriers.push_back(active[i]);
    }

    energy += power_w * service.tick_seconds;
    useful_energy += useful_w * service.tick_seconds;
    power_sum += power_w;
    served_sum += sv.served;
    demand_sum += log.demand;
    congestion_sum += sv.congestion;
    cov_sum += log.coverage;
    min_cov = std::min(min_cov, log.coverage);
    reuse_sum += mesh::reuse_capacity_gain(zones);
  }

  const double T = static_cast<double>(std::max<std::int64_t>(n_ticks, 1));
  rep.total_energy_j = energy;
  rep.mean_power_w = power_sum / T;
  rep.mean_served = static_cast<double>(served_sum) / T;
  rep.served_ratio = demand_sum > 0 ? static_cast<double>(served_sum) / static_cast<double>(demand_sum) : 1.0;
  rep.users_per_watt = sustain::users_per_watt(rep.mean_served, rep.mean_power_w);
  rep.energy_to_user = energy > 0.0 ? sustain::energy_to_user(useful_energy, energy) : 0.0;
  rep.min_coverage = n_ticks > 0 ? min_cov : 0.0;
  rep.mean_coverage = cov_sum / T;
  rep.congestion_total = congestion_sum;
  rep.mean_reuse_gain = reuse_sum / T;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double traffic_gb =
      static_cast<double>(served_sum) * service.per_user_rate_mbps * service.tick_seconds / 8000.0;
  rep.co2_intensity_t_per_gb = nan;
  if (arch.grid_kg_co2_per_kwh > 0.0 && traffic_gb > 0.0) {
    const double co2_t = energy / 3.6e6 * arch.grid_kg_co2_per_kwh / 1000.0;
    rep.co2_intensity_t_per_gb = sustain::co2_intensity(co2_t, traffic_gb);
  }
  rep.cost_to_capacity = nan;
  const double gbps = rep.mean_served * service.per_user_rate_mbps / 1000.0;
  if (arch.annual_cost_usd > 0.0 && gbps > 0.0) {
    rep.cost_to_capacity = sustain::cost_to_capacity(arch.annual_cost_usd, gbps);
  }
  return rep;
}

forecast::TrainedForecaster train_demand_forecaster(const traffic::TrafficScenario& scenario,
                                                    const forecast::ForecastConfig& cfg) {
  auto history = scenario;
  history.surge.reset();
  history.seed = scenario.seed ^ 0x9e3779b97f4a7c15ULL;
  const auto min_len = static_cast<std::int64_t>(cfg.window + cfg.horizon + 1);
  history.duration_ticks = std::max(history.duration_ticks, min_len);
  const auto series = traffic::generate_demand(history);
  return forecast::train_forecaster(series.totals(), cfg);
}

namespace {

RatioStat ratio_stat(const std::vector<SimReport>& a, const std::vector<SimReport>& b,
                     const std::function<double(const SimReport&)>& metric) {
  RatioStat r;
  double sa = 0.0, sb = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const double va = metric(a[s]);
    const double vb = metric(b[s]);
    r.per_seed.push_back(ratio_or_nan(vb, va));
    sa += va;
    sb += vb;
  }
  r.mean = mean_of(r.per_seed);
  r.stddev = sample_std(r.per_seed);
  r.of_means = ratio_or_nan(sb, sa);
  return r;
}

double congestion_of(const SimReport& r) { return static_cast<double>(r.congestion_total); }

}  // namespace

ComparisonReport compare_architectures(const ArchitectureConfig& a, const ArchitectureConfig& b,
                                       const ServiceConfig& service,
                                       const traffic::TrafficScenario& scenario,
                                       std::span<const std::uint64_t> seeds) {
  if (a.coverage_target != b.coverage_target) {
    throw ConfigMismatch("coverage targets differ: '" + a.name + "' " +
                         io::format_double(a.coverage_target) + " vs '" + b.name + "' " +
                         io::format_double(b.coverage_target));
  }
  if (seeds.empty()) throw ConfigMismatch("compare needs at least one seed");
  ComparisonReport c;
  c.a_name = a.name;
  c.b_name = b.name;
  c.seeds.assign(seeds.begin(), seeds.end());
  auto guard = [](const ArchitectureConfig& arch, const SimReport& r) {
    if (r.min_coverage < arch.coverage_target) {
      throw CoverageUnmet("architecture '" + arch.name + "' covers " +
                          io::format_fixed(r.min_coverage, 4) + " of cells (target " +
                          io::format_double(arch.coverage_target) + ") with seed " +
                          std::to_string(r.seed));
    }
  };
  for (auto seed : seeds) {
    auto s = scenario;
    s.seed = seed;
    const auto demand = traffic::generate_demand(s);
    c.a_runs.push_back(run_simulation(a, service, demand, seed));
    guard(a, c.a_runs.back());
    c.b_runs.push_back(run_simulation(b, service, demand, seed));
    guard(b, c.b_runs.back());
  }
  c.power = ratio_stat(c.a_runs, c.b_runs, [](const SimReport& r) { return r.mean_power_w; });
  c.users_per_watt = ratio_stat(c.a_runs, c.b_runs, [](const SimReport& r) { return r.users_per_watt; });
  c.served = ratio_stat(c.a_runs, c.b_runs, [](const SimReport& r) { return r.mean_served; });
  c.energy_to_user = ratio_stat(c.a_runs, c.b_runs, [](const SimReport& r) { return r.energy_to_user; });
  c.congestion = ratio_stat(c.a_runs, c.b_runs, congestion_of);
  return c;
}

void write_ticks_csv(std::ostream& out, const SimReport& r) {
  io::CsvWriter csv(out);
  csv.header({"tick", "power_w", "demand", "served", "congestion", "uncovered", "coverage",
              "carriers", "zones", "mean_tx_dbm", "useful_rf_w"});
  for (const auto& t : r.ticks) {
    csv.cell(t.tick).cell(t.total_power_w).cell(t.demand).cell(t.served).cell(t.congestion);
    csv.cell(t.uncovered).cell(t.coverage).cell(t.carriers).cell(t.n_zones).cell(t.mean_tx_dbm);
    csv.cell(t.useful_rf_w);
    csv.end_row();
  }
}

void write_node_trace_csv(std::ostream& out, const SimReport& r) {
  io::CsvWriter csv(out);
  csv.header({"tick", "node", "load", "carriers", "p_tx_dbm"});
  for (std::size_t t = 0; t < r.ticks.size(); ++t) {
    for (std::size_t i = 0; i < r.n_nodes; ++i) {
      const std::size_t k = t * r.n_nodes + i;
      csv.cell(r.ticks[t].tick).cell(i).cell(r.nodes.load[k]).cell(r.nodes.carriers[k]);
      csv.cell(r.nodes.p_tx_dbm[k]);
      csv.end_row();
    }
  }
}

void write_load_curves_csv(std::ostream& out, std::span<const SimReport* const> runs) {
  io::CsvWriter csv(out);
  csv.header({"arch", "seed", "load_lo", "load_hi", "ticks", "mean_power_w", "users_per_watt"});
  constexpr int kBins = 10;
  for (const SimReport* r : runs) {
    std::int64_t peak = 0;
    for (const auto& t : r->ticks) peak = std::max(peak, t.demand);
    std::vector<double> power(kBins, 0.0), served(kBins, 0.0);
    std::vector<int> count(kBins, 0);
    for (const auto& t : r->ticks) {
      const double load = peak > 0 ? static_cast<double>(t.demand) / static_cast<double>(peak) : 0.0;
      const int b = std::min(kBins - 1, static_cast<int>(load * kBins));
      power[b] += t.total_power_w;
      served[b] += static_cast<double>(t.served);
      ++count[b];
    }
    for (int b = 0; b < kBins; ++b) {
      csv.cell(r->arch_name).cell(static_cast<std::int64_t>(r->seed));
      csv.cell(static_cast<double>(b) / kBins).cell(static_cast<double>(b + 1) / kBins).cell(count[b]);
      if (count[b] == 0) {
        csv.na().na();
      } else {
        csv.cell(power[b] / count[b]).cell(served[b] / power[b]);
      }
      csv.end_row();
    }
  }
}

void write_summary(std::ostream& out, const SimReport& r) {
  out << "architecture: " << r.arch_name << '\n'
      << "seed: " << r.seed << '\n'
      << "nodes: " << r.n_nodes << '\n'
      << "ticks: " << r.ticks.size() << '\n'
      << "total_energy_j: " << io::format_double(r.total_energy_j) << '\n'
      << "mean_power_w: " << io::format_double(r.mean_power_w) << '\n'
      << "mean_served_users: " << io::format_double(r.mean_served) << '\n'
      << "served_ratio: " << io::format_double(r.served_ratio) << '\n'
      << "users_per_watt: " << io::format_double(r.users_per_watt) << '\n'
      << "energy_to_user: " << io::format_double(r.energy_to_user) << '\n'
      << "coverage_min: " << io::format_double(r.min_coverage) << '\n'
      << "coverage_mean: " << io::format_double(r.mean_coverage) << '\n'
      << "congestion_users: " << r.congestion_total << '\n'
      << "mean_reuse_gain: " << io::format_double(r.mean_reuse_gain) << '\n'
      << "co2_t_per_gb: " << io::format_double(r.co2_intensity_t_per_gb) << '\n'
      << "cost_usd_per_gbps: " << io::format_double(r.cost_to_capacity) << '\n';
}

namespace {

struct MetricRow {
  const char* name;
  std::function<double(const SimReport&)> f;
};

std::vector<MetricRow> comparison_metrics() {
  return {
      {"mean_power_w", [](const SimReport& r) { return r.mean_power_w; }},
      {"users_per_watt", [](const SimReport& r) { return r.users_per_watt; }},
      {"users_served", [](const SimReport& r) { return r.mean_served; }},
      {"served_ratio", [](const SimReport& r) { return r.served_ratio; }},
      {"energy_to_user", [](const SimReport& r) { return r.energy_to_user; }},
      {"congestion_users", congestion_of},
      {"coverage_min", [](const SimReport& r) { return r.min_coverage; }},
      {"reuse_gain", [](const SimReport& r) { return r.mean_reuse_gain; }},
  };
}

std::string sig4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double run_mean(const std::vector<SimReport>& runs, const std::function<double(const SimReport&)>& f) {
  double s = 0.0;
  for (const auto& r : runs) s += f(r);
  return s / static_cast<double>(runs.size());
}

}  // namespace

void write_comparison_csv(std::ostream& out, const ComparisonReport& c) {
  io::CsvWriter csv(out);
  csv.header({"metric", c.a_name, c.b_name, "gain", "gain_mean", "gain_std"});
  for (const auto& m : comparison_metrics()) {
    const auto st = ratio_stat(c.a_runs, c.b_runs, m.f);
    csv.cell(m.name).cell(run_mean(c.a_runs, m.f)).cell(run_mean(c.b_runs, m.f));
    csv.cell(st.of_means).cell(st.mean).cell(st.stddev);
    csv.end_row();
  }
}

void write_comparison_text(std::ostream& out, const ComparisonReport& c) {
  out << c.b_name << " vs " << c.a_name << " over " << c.seeds.size() << " seeds\n";
  for (const auto& m : comparison_metrics()) {
    const auto st = ratio_stat(c.a_runs, c.b_runs, m.f);
    out << "  " << m.name << ": " << sig4(run_mean(c.a_runs, m.f)) << " -> "
        << sig4(run_mean(c.b_runs, m.f)) << "  x" << io::format_fixed(st.mean, 3)
        << " +/- " << io::format_fixed(st.stddev, 3) << '\n';
  }
  const double cut = (1.0 - c.power.of_means) * 100.0;
  out << "  power reduction: " << io::format_fixed(cut, 1) << "%\n";
}

}  // namespace meshsim::engine
