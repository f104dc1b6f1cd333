#pragma once

// Discrete-time simulation of one radio architecture serving a traffic
// series, and the matched-coverage comparison of two architectures.
//
// Per tick: observed (or forecast) demand sets node powers and carrier
// targets, carriers come up after a lag, the interference matrix decides
// the zone partition, and each cell is served by its static best server
// up to that server's share of spectrum.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshsim/forecast.hpp"
#include "meshsim/mesh.hpp"
#include "meshsim/powerctl.hpp"
#include "meshsim/traffic.hpp"

namespace meshsim::engine {

enum class ArchKind { Macro, Mesh };
enum class PowerMode { Fixed, Adaptive };
enum class PowerPolicy { Heuristic, Learned };

std::string_view to_string(ArchKind k);
std::string_view to_string(PowerMode m);
std::string_view to_string(PowerPolicy p);
ArchKind parse_arch_kind(std::string_view s);        // "macro" | "mesh"
PowerMode parse_power_mode(std::string_view s);      // "fixed" | "adaptive"
PowerPolicy parse_power_policy(std::string_view s);  // "heuristic" | "learned"

/// Site draw: overhead + carriers * carrier_w + radiated / pa_efficiency.
struct SitePowerModel {
  double overhead_w = 0.0;
  double carrier_w = 0.0;
  double pa_efficiency = 1.0;
};

struct ArchitectureConfig {
  std::string name;
  ArchKind kind = ArchKind::Mesh;
  int n_nodes = 2;
  mesh::Placement placement = mesh::Placement::Grid;
  double min_sep_m = 1.0;
  std::uint64_t topology_seed = 1;
  double f_mhz = 2400.0;
  double p_tx_dbm = 20.0;  // fixed-mode power, adaptive starting point
  double g_dbi = 0.0;
  mesh::LinkModel link;
  /// Links shorter than this are evaluated at this distance (COST-231 is
  /// only defined from 1 km).
  double min_link_m = 1.0;
  powerctl::PowerBounds bounds;
  PowerMode mode = PowerMode::Adaptive;
  PowerPolicy policy = PowerPolicy::Heuristic;
  std::optional<powerctl::QFunction> q;
  int policy_max_steps = 20;
  bool forecaster = false;
  std::optional<forecast::LstmModel> forecast_model;
  int max_carriers = 1;
  double carrier_capacity_mbps = 100.0;
  int carrier_lag_ticks = 0;
  SitePowerModel power;
  double conflict_threshold_dbm = -90.0;
  double coverage_target = 0.95;
  double margin_db = 10.0;
  double shadowing_sigma_db = 0.0;
  // Economics for the CO2 and cost KPIs; zero leaves them undefined.
  double grid_kg_co2_per_kwh = 0.0;
  double annual_cost_usd = 0.0;
};

/// Throws ConfigMismatch naming the field.
void validate(const ArchitectureConfig& arch);

struct ServiceConfig {
  double side_m = 2500.0;
  double tick_seconds = 1.0;
  double sensitivity_dbm = -95.0;
  double ue_gain_dbi = 0.0;
  double per_user_rate_mbps = 1.0;
};

void validate(const ServiceConfig& service);

mesh::Topology build_topology(const ArchitectureConfig& arch, const ServiceConfig& service);

/// floor(carriers * carrier_capacity / (per_user_rate * n_zones)).
std::int64_t node_capacity_users(int carriers, double carrier_capacity_mbps,
                                 double per_user_rate_mbps, int n_zones);

struct ServiceResult {
  std::vector<std::int64_t> served_per_cell;
  std::int64_t served = 0;
  std::int64_t congestion = 0;  // covered demand beyond server capacity
  std::int64_t uncovered = 0;   // demand in cells below sensitivity
};

/// Serves each covered cell from its server's residual capacity, cells in
/// index order.
ServiceResult capacity_model(std::span<const int> server_of_cell, std::span<const char> covered,
                             std::span<const std::int64_t> node_capacity,
                             std::span<const std::int64_t> demand);

struct TickLog {
  std::int64_t tick = 0;
  double total_power_w = 0.0;
  std::int64_t demand = 0;
  std::int64_t served = 0;
  std::int64_t congestion = 0;
  std::int64_t uncovered = 0;
  double coverage = 0.0;
  int carriers = 0;
  int n_zones = 0;
  double mean_tx_dbm = 0.0;
  double useful_rf_w = 0.0;
};

struct NodeTrace {
  std::vector<double> p_tx_dbm;      // tick-major, N per tick
  std::vector<std::int64_t> load;    // demand assigned to each node
  std::vector<int> carriers;
};

struct SimReport {
  std::string arch_name;
  std::uint64_t seed = 0;
  std::size_t n_nodes = 0;
  double tick_seconds = 1.0;
  std::vector<TickLog> ticks;
  NodeTrace nodes;
  // aggregates, recomputable from ticks
  double total_energy_j = 0.0;
  double mean_power_w = 0.0;
  double mean_served = 0.0;
  double served_ratio = 0.0;
  double users_per_watt = 0.0;
  double energy_to_user = 0.0;
  double min_coverage = 0.0;
  double mean_coverage = 0.0;
  std::int64_t congestion_total = 0;
  double mean_reuse_gain = 0.0;
  double co2_intensity_t_per_gb = 0.0;  // NaN when undefined
  double cost_to_capacity = 0.0;        // USD per Gbps; NaN when undefined
};

/// Throws ConfigMismatch when the traffic grid is not a square number of
/// cells or the policy does not fit the topology, UntrainedPolicy when a
/// learned policy is requested without one.
SimReport run_simulation(const ArchitectureConfig& arch, const ServiceConfig& service,
                         const traffic::TrafficSeries& traffic, std::uint64_t seed);

/// Trains the demand forecaster on a surge-free history drawn from the
/// scenario with a derived seed.
forecast::TrainedForecaster train_demand_forecaster(const traffic::TrafficScenario& scenario,
                                                    const forecast::ForecastConfig& cfg);

struct RatioStat {
  std::vector<double> per_seed;  // b / a
  double mean = 0.0;
  double stddev = 0.0;  // sample std; 0 for a single seed
  double of_means = 0.0;
};

struct ComparisonReport {
  std::string a_name, b_name;
  std::vector<std::uint64_t> seeds;
  std::vector<SimReport> a_runs, b_runs;
  RatioStat power, users_per_watt, served, energy_to_user, congestion;
};

/// Runs both architectures on the traffic regenerated for each seed and
/// reports b-over-a ratios. Throws ConfigMismatch if the coverage targets
/// differ and CoverageUnmet if either run misses its target.
ComparisonReport compare_architectures(const ArchitectureConfig& a, const ArchitectureConfig& b,
                                       const ServiceConfig& service,
                                       const traffic::TrafficScenario& scenario,
                                       std::span<const std::uint64_t> seeds);

void write_ticks_csv(std::ostream& out, const SimReport& r);
void write_node_trace_csv(std::ostream& out, const SimReport& r);
/// Mean power and users per watt by load decile, one row per (arch, bin).
void write_load_curves_csv(std::ostream& out, std::span<const SimReport* const> runs);
void write_summary(std::ostream& out, const SimReport& r);
void write_comparison_csv(std::ostream& out, const ComparisonReport& c);
void write_comparison_text(std::ostream& out, const ComparisonReport& c);

}  // namespace meshsim::engine
