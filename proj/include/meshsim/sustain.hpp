#pragma once

// KPI ratios, diesel/CO2 arithmetic for event scenarios, and the annual
// OPEX / CapEx comparison. Every value is kept at full precision; display
// rounding happens only in the text renderers.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace meshsim::sustain {

/// Served users per watt of site power.
double users_per_watt(double users_served, double site_power_w);
/// Useful energy at receivers over total site energy; lies in [0, 1].
double energy_to_user(double useful_energy_j, double total_energy_j);
/// Tonnes of CO2 per GB delivered.
double co2_intensity(double co2_tonnes, double traffic_gb);
/// Annual cost per Gbps delivered.
double cost_to_capacity(double annual_cost_usd, double throughput_gbps);

inline constexpr double kDieselKgCo2PerLiter = 2.68;

/// liters * kg_per_liter / 1000.
double diesel_to_co2(double liters, double kg_per_liter = kDieselKgCo2PerLiter);

struct EventScenario {
  std::string name;
  std::string period_label = "event";
  double n_towers = 0.0;
  double liters_per_tower_per_day = 0.0;
  double days = 1.0;
  double co2_kg_per_liter = kDieselKgCo2PerLiter;
  struct Mesh {
    double n_towers = 0.0;
    double n_nodes = 0.0;
    double liters_total = 0.0;
  } mesh;
  struct Power {
    double macro_w_per_tower = 0.0;
    double mesh_total_w = 0.0;
  } power;
  /// Published totals to cross-check against, when a source states them.
  std::optional<double> stated_liters_traditional;
  std::optional<double> stated_co2_traditional_t;
  std::vector<std::string> notes;  // carried verbatim into report footnotes
};

void validate(const EventScenario& e);

struct EventReport {
  double liters_traditional = 0.0;
  double liters_mesh = 0.0;
  double liters_saved = 0.0;
  double co2_traditional_t = 0.0;
  double co2_mesh_t = 0.0;
  double co2_saved_t = 0.0;
  double co2_reduction_pct = 0.0;
  double power_traditional_w = 0.0;
  double power_mesh_w = 0.0;
  double power_reduction_pct = 0.0;
  std::vector<std::string> footnotes;
};

EventReport event_report(const EventScenario& e);

/// Footnotes flagging where two presets disagree with each other.
std::vector<std::string> cross_check(const EventScenario& a, const EventScenario& b);

enum class CostCategory {
  Fuel,
  InfrastructureDeployment,
  InfrastructureMaintenance,
  OperationsStaffing,
  EquipmentReplacement,
  MonitoringSystems,
  TrainingCosts,
  RegulatoryCompliance,
};

inline constexpr std::array kCostCategories = {
    CostCategory::Fuel,
    CostCategory::InfrastructureDeployment,
    CostCategory::InfrastructureMaintenance,
    CostCategory::OperationsStaffing,
    CostCategory::EquipmentReplacement,
    CostCategory::MonitoringSystems,
    CostCategory::TrainingCosts,
    CostCategory::RegulatoryCompliance,
};

std::string_view to_string(CostCategory c);   // display name
std::string_view config_key(CostCategory c);  // e.g. "fuel"
std::optional<CostCategory> parse_cost_category(std::string_view key);

/// Amounts are held as integer tenths of a million USD so that totals are
/// exact sums of the line items.
class CostLedger {
 public:
  /// Throws DomainError unless both amounts are non-negative multiples of 0.1.
  void set(CostCategory c, double traditional_musd, double proposed_musd);
  bool has(CostCategory c) const;
  double traditional_musd(CostCategory c) const;
  double proposed_musd(CostCategory c) const;
  std::int64_t traditional_tenths(CostCategory c) const;
  std::int64_t proposed_tenths(CostCategory c) const;

 private:
  struct Line {
    bool present = false;
    std::int64_t traditional = 0;
    std::int64_t proposed = 0;
  };
  std::array<Line, kCostCategories.size()> lines_{};
};

struct OpexReport {
  double total_traditional_musd = 0.0;
  double total_proposed_musd = 0.0;
  double savings_musd = 0.0;
  double savings_pct = 0.0;          // full precision
  double savings_pct_display = 0.0;  // one decimal
};

/// Throws IncompleteLedger listing every missing category.
OpexReport opex_report(const CostLedger& ledger);

/// (1 - proposed / traditional) * 100.
double capex_compare(double traditional_musd, double proposed_musd);

/// Rounds to the nearest multiple of step.
double round_to(double x, double step);

void write_event_table(std::ostream& out, const EventScenario& e, const EventReport& r);
void write_opex_table(std::ostream& out, const CostLedger& ledger, const OpexReport& r);
void write_event_csv(std::ostream& out, const EventScenario& e, const EventReport& r);
void write_opex_csv(std::ostream& out, const CostLedger& ledger, const OpexReport& r);

}  // namespace meshsim::sustain
