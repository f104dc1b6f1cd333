#include "meshsim/sustain.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"

namespace meshsim::sustain {

namespace {

double ratio(double num, double den, std::string_view kpi) {
  if (!(num >= 0.0)) throw DomainError(std::string(kpi) + ": numerator must be non-negative");
  if (!(den > 0.0)) throw ZeroDenominator(std::string(kpi) + ": denominator must be positive");
  return num / den;
}

std::string pct(double x) { return io::format_fixed(std::round(x), 0) + "%"; }

std::string mega_liters(double liters) { return io::format_fixed(liters / 1e6, 1) + " M L"; }

}  // namespace

double users_per_watt(double users_served, double site_power_w) {
  return ratio(users_served, site_power_w, "users_per_watt");
}

double energy_to_user(double useful_energy_j, double total_energy_j) {
  const double eta = ratio(useful_energy_j, total_energy_j, "energy_to_user");
  if (eta > 1.0) throw DomainError("energy_to_user: useful energy exceeds total energy");
  return eta;
}

double co2_intensity(double co2_tonnes, double traffic_gb) {
  return ratio(co2_tonnes, traffic_gb, "co2_intensity");
}

double cost_to_capacity(double annual_cost_usd, double throughput_gbps) {
  return ratio(annual_cost_usd, throughput_gbps, "cost_to_capacity");
}

double diesel_to_co2(double liters, double kg_per_liter) {
  if (!(liters >= 0.0)) throw DomainError("diesel_to_co2: liters must be non-negative");
  if (!(kg_per_liter >= 0.0)) throw DomainError("diesel_to_co2: kg_per_liter must be non-negative");
  return liters * kg_per_liter / 1000.0;
}

void validate(const EventScenario& e) {
  auto non_negative = [&](double v, const char* field) {
    if (!(v >= 0.0)) throw DomainError("event scenario '" + e.name + "': " + field + " must be >= 0");
  };
  non_negative(e.n_towers, "n_towers");
  non_negative(e.liters_per_tower_per_day, "liters_per_tower_per_day");
  non_negative(e.co2_kg_per_liter, "co2_kg_per_liter");
  non_negative(e.mesh.n_towers, "mesh_towers");
  non_negative(e.mesh.n_nodes, "mesh_nodes");
  non_negative(e.mesh.liters_total, "mesh_liters_total");
  non_negative(e.power.macro_w_per_tower, "macro_w_per_tower");
  non_negative(e.power.mesh_total_w, "mesh_total_w");
  if (!(e.days >= 1.0)) throw DomainError("event scenario '" + e.name + "': days must be >= 1");
}

EventReport event_report(const EventScenario& e) {
  validate(e);
  EventReport r;
  r.liters_traditional = e.n_towers * e.liters_per_tower_per_day * e.days;
  r.liters_mesh = e.mesh.liters_total;
  r.liters_saved = r.liters_traditional - r.liters_mesh;
  r.co2_traditional_t = diesel_to_co2(r.liters_traditional, e.co2_kg_per_liter);
  r.co2_mesh_t = diesel_to_co2(r.liters_mesh, e.co2_kg_per_liter);
  r.co2_saved_t = diesel_to_co2(std::max(0.0, r.liters_saved), e.co2_kg_per_liter);
  r.co2_reduction_pct =
      r.co2_traditional_t > 0.0 ? (1.0 - r.co2_mesh_t / r.co2_traditional_t) * 100.0 : 0.0;
  r.power_traditional_w = e.n_towers * e.power.macro_w_per_tower;
  r.power_mesh_w = e.power.mesh_total_w;
  r.power_reduction_pct =
      r.power_traditional_w > 0.0 ? (1.0 - r.power_mesh_w / r.power_traditional_w) * 100.0 : 0.0;

  auto check = [&](const std::optional<double>& stated, double computed, const char* what,
                   const char* unit) {
    if (!stated) return;
    const double rel = std::abs(computed - *stated) / std::max(1.0, std::abs(*stated));
    if (rel > 1e-3) {
      std::ostringstream os;
      os << what << ": computed " << io::format_grouped(computed) << ' ' << unit
         << " differs from the stated " << io::format_grouped(*stated) << ' ' << unit << " ("
         << io::format_fixed(rel * 100.0, 1) << "%); the stated figures are mutually inconsistent";
      r.footnotes.push_back(os.str());
    }
  };
  check(e.stated_liters_traditional, r.liters_traditional, "traditional diesel", "L");
  check(e.stated_co2_traditional_t, r.co2_traditional_t, "traditional CO2", "t");
  for (const auto& n : e.notes) r.footnotes.push_back(n);
  return r;
}

std::vector<std::string> cross_check(const EventScenario& a, const EventScenario& b) {
  std::vector<std::string> notes;
  const auto ra = event_report(a);
  const auto rb = event_report(b);
  if (a.power.macro_w_per_tower != b.power.macro_w_per_tower) {
    notes.push_back("per-tower macro draw is " + io::format_grouped(a.power.macro_w_per_tower) +
                    " W in '" + a.name + "' but " + io::format_grouped(b.power.macro_w_per_tower) +
                    " W in '" + b.name + "'; both are kept as given");
  }
  const double la = a.liters_per_tower_per_day, lb = b.liters_per_tower_per_day;
  if (la > 0.0 && lb > 0.0 && la != lb) {
    notes.push_back("diesel per tower-day is " + io::format_fixed(la, 2) + " L in '" + a.name +
                    "' and " + io::format_fixed(lb, 2) + " L in '" + b.name + "' (" +
                    io::format_fixed(std::max(la, lb) / std::min(la, lb), 1) + "x apart)");
  }
  auto saving_note = [&](const EventScenario& x, const EventReport& rx, const EventScenario& y,
                         const EventReport& ry) {
    if (rx.liters_saved > 0.0 && std::abs(rx.liters_saved - ry.liters_traditional) < 1.0) {
      notes.push_back("the '" + x.name + "' diesel saving of " + mega_liters(rx.liters_saved) +
                      " equals the whole '" + y.name +
                      "' consumption; it is an event-period saving, not a per-" +
                      x.period_label + " one");
    }
  };
  saving_note(a, ra, b, rb);
  saving_note(b, rb, a, ra);
  return notes;
}

std::string_view to_string(CostCategory c) {
  switch (c) {
    case CostCategory::Fuel: return "Fuel Costs";
    case CostCategory::InfrastructureDeployment: return "Infrastructure Deployment";
    case CostCategory::InfrastructureMaintenance: return "Infrastructure Maintenance";
    case CostCategory::OperationsStaffing: return "Operations Staffing";
    case CostCategory::EquipmentReplacement: return "Equipment Replacement";
    case CostCategory::MonitoringSystems: return "Monitoring Systems";
    case CostCategory::TrainingCosts: return "Training Costs";
    case CostCategory::RegulatoryCompliance: return "Regulatory Compliance";
  }
  return "?";
}

std::string_view config_key(CostCategory c) {
  switch (c) {
    case CostCategory::Fuel: return "fuel";
    case CostCategory::InfrastructureDeployment: return "infrastructure_deployment";
    case CostCategory::InfrastructureMaintenance: return "infrastructure_maintenance";
    case CostCategory::OperationsStaffing: return "operations_staffing";
    case CostCategory::EquipmentReplacement: return "equipment_replacement";
    case CostCategory::MonitoringSystems: return "monitoring_systems";
    case CostCategory::TrainingCosts: return "training_costs";
    case CostCategory::RegulatoryCompliance: return "regulatory_compliance";
  }
  return "?";
}

std::optional<CostCategory> parse_cost_category(std::string_view key) {
  for (auto c : kCostCategories) {
    if (config_key(c) == key) return c;
  }
  return std::nullopt;
}

namespace {

std::int64_t to_tenths(double musd, CostCategory c) {
  const double scaled = musd * 10.0;
  const auto t = std::llround(scaled);
  if (!(musd >= 0.0) || std::abs(scaled - static_cast<double>(t)) > 1e-6) {
    throw DomainError(std::string(to_string(c)) + ": amount " + io::format_double(musd) +
                      " M$ must be a non-negative multiple of 0.1");
  }
  return t;
}

}  // namespace

void CostLedger::set(CostCategory c, double traditional_musd, double proposed_musd) {
  auto& line = lines_[static_cast<std::size_t>(c)];
  line.traditional = to_tenths(traditional_musd, c);
  line.proposed = to_tenths(proposed_musd, c);
  line.present = true;
}

bool CostLedger::has(CostCategory c) const { return lines_[static_cast<std::size_t>(c)].present; }

std::int64_t CostLedger::traditional_tenths(CostCategory c) const {
  return lines_[static_cast<std::size_t>(c)].traditional;
}
std::int64_t CostLedger::proposed_tenths(CostCategory c) const {
  return lines_[static_cast<std::size_t>(c)].proposed;
}
double CostLedger::traditional_musd(CostCategory c) const {
  return static_cast<double>(traditional_tenths(c)) / 10.0;
}
double CostLedger::proposed_musd(CostCategory c) const {
  return static_cast<double>(proposed_tenths(c)) / 10.0;
}

OpexReport opex_report(const CostLedger& ledger) {
  std::string missing;
  std::int64_t trad = 0, prop = 0;
  for (auto c : kCostCategories) {
    if (!ledger.has(c)) {
      missing += (missing.empty() ? "" : ", ") + std::string(config_key(c));
      continue;
    }
    trad += ledger.traditional_tenths(c);
    prop += ledger.proposed_tenths(c);
  }
  if (!missing.empty()) throw IncompleteLedger("cost ledger is missing: " + missing);
  if (trad <= 0) throw ZeroDenominator("opex_report: traditional total must be positive");
  OpexReport r;
  r.total_traditional_musd = static_cast<double>(trad) / 10.0;
  r.total_proposed_musd = static_cast<double>(prop) / 10.0;
  r.savings_musd = static_cast<double>(trad - prop) / 10.0;
  r.savings_pct = static_cast<double>(trad - prop) / static_cast<double>(trad) * 100.0;
  r.savings_pct_display = round_to(r.savings_pct, 0.1);
  return r;
}

double capex_compare(double traditional_musd, double proposed_musd) {
  if (!(traditional_musd > 0.0)) {
    throw ZeroDenominator("capex_compare: traditional CapEx must be positive");
  }
  if (!(proposed_musd >= 0.0)) throw DomainError("capex_compare: proposed CapEx must be >= 0");
  return (1.0 - proposed_musd / traditional_musd) * 100.0;
}

double round_to(double x, double step) {
  // Fractional steps divide by the integer reciprocal so that e.g. 35.8
  // comes back as the double nearest 35.8, not 358 * 0.1.
  const double inv = 1.0 / step;
  if (step < 1.0 && std::abs(inv - std::round(inv)) < 1e-9) return std::round(x * inv) / std::round(inv);
  return std::round(x / step) * step;
}

void write_event_table(std::ostream& out, const EventScenario& e, const EventReport& r) {
  const int w0 = 20, w1 = 52;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c) {
    out << std::left << std::setw(w0) << a << std::setw(w1) << b << c << '\n';
  };
  const std::string period = e.period_label == "event"
                                 ? io::format_grouped(e.days) + "-day event"
                                 : e.period_label;
  out << "Carbon footprint: " << e.name << " (" << period << ")\n";
  row("Metric", "Traditional Macrocell Network", "AI-Driven Mesh Network");
  row(std::string(w0 - 2, '-'), std::string(w1 - 2, '-'), std::string(40, '-'));
  row("Diesel use", mega_liters(r.liters_traditional) + " (" + io::format_grouped(e.n_towers) +
                        " towers x " + io::format_double(round_to(e.liters_per_tower_per_day, 0.01)) +
                        " L/day x " + io::format_grouped(e.days) + " days)",
      mega_liters(r.liters_mesh));
  row("CO2 emitted", io::format_grouped(r.co2_traditional_t) + " t",
      "~" + io::format_grouped(round_to(r.co2_mesh_t, 100.0)) + " t (" +
          io::format_grouped(r.co2_mesh_t) + " t), " + pct(r.co2_reduction_pct) + " reduction");
  row("Fuel saved", "", mega_liters(r.liters_saved) + " = " + io::format_grouped(r.co2_saved_t) +
                            " t CO2");
  row("Peak power", io::format_grouped(round_to(r.power_traditional_w / 1000.0, 1.0)) + " kW (" +
                        io::format_grouped(e.n_towers) + " towers x " +
                        io::format_grouped(e.power.macro_w_per_tower) + " W)",
      io::format_grouped(round_to(r.power_mesh_w / 1000.0, 1.0)) + " kW, " + pct(r.power_reduction_pct) +
          " less power (" + io::format_fixed(r.power_reduction_pct, 2) + "%)");
  for (std::size_t i = 0; i < r.footnotes.size(); ++i) {
    out << "[" << i + 1 << "] " << r.footnotes[i] << '\n';
  }
}

void write_opex_table(std::ostream& out, const CostLedger& ledger, const OpexReport& r) {
  out << "Annual operational expenditure (M$)\n";
  out << std::left << std::setw(30) << "Category" << std::right << std::setw(14) << "Traditional"
      << std::setw(12) << "Proposed" << '\n';
  for (auto c : kCostCategories) {
    out << std::left << std::setw(30) << to_string(c) << std::right << std::setw(14)
        << io::format_fixed(ledger.traditional_musd(c), 1) << std::setw(12)
        << io::format_fixed(ledger.proposed_musd(c), 1) << '\n';
  }
  out << std::left << std::setw(30) << "Total Annual Cost" << std::right << std::setw(14)
      << io::format_fixed(r.total_traditional_musd, 1) << std::setw(12)
      << io::format_fixed(r.total_proposed_musd, 1) << '\n';
  out << "Savings: " << io::format_fixed(r.savings_musd, 1) << " M$/year, "
      << io::format_fixed(r.savings_pct_display, 1) << "% (~" << pct(r.savings_pct) << ")\n";
}

void write_event_csv(std::ostream& out, const EventScenario& e, const EventReport& r) {
  io::CsvWriter csv(out);
  csv.header({"scenario", "metric", "traditional", "mesh", "reduction_pct"});
  auto row = [&](const char* metric, double trad, double mesh, double red) {
    csv.cell(e.name).cell(metric).cell(trad).cell(mesh);
    if (std::isnan(red)) {
      csv.na();
    } else {
      csv.cell(red);
    }
    csv.end_row();
  };
  const double na = std::nan("");
  row("diesel_liters", r.liters_traditional, r.liters_mesh,
      r.liters_traditional > 0 ? (1.0 - r.liters_mesh / r.liters_traditional) * 100.0 : na);
  row("co2_tonnes", r.co2_traditional_t, r.co2_mesh_t, r.co2_reduction_pct);
  row("power_w", r.power_traditional_w, r.power_mesh_w, r.power_reduction_pct);
  row("diesel_saved_liters", na, r.liters_saved, na);
  row("co2_saved_tonnes", na, r.co2_saved_t, na);
}

void write_opex_csv(std::ostream& out, const CostLedger& ledger, const OpexReport& r) {
  io::CsvWriter csv(out);
  csv.header({"category", "traditional_musd", "proposed_musd"});
  for (auto c : kCostCategories) {
    csv.cell(config_key(c)).cell(ledger.traditional_musd(c)).cell(ledger.proposed_musd(c));
    csv.end_row();
  }
  csv.cell("total").cell(r.total_traditional_musd).cell(r.total_proposed_musd);
  csv.end_row();
}

}  // namespace meshsim::sustain
