#include "meshsim/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "meshsim/io.hpp"
#include "meshsim/mesh.hpp"
#include "meshsim/propagation.hpp"

#ifndef MESHSIM_CONFIG_DIR
#define MESHSIM_CONFIG_DIR "configs"
#endif

namespace meshsim::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Domain: return 3;
    case ErrorKind::Divergence: return 4;
  }
  return 1;
}

const engine::ArchitectureConfig& Scenario::arch(const std::string& name) const {
  for (const auto& a : archs) {
    if (a.name == name) return a;
  }
  throw ConfigError("no [arch." + name + "] section in the config");
}

engine::ArchitectureConfig& Scenario::arch(const std::string& name) {
  return const_cast<engine::ArchitectureConfig&>(std::as_const(*this).arch(name));
}

engine::ArchitectureConfig default_architecture(engine::ArchKind kind, std::string name) {
  engine::ArchitectureConfig a;
  a.name = std::move(name);
  a.kind = kind;
  if (kind == engine::ArchKind::Macro) {
    a.n_nodes = 5;
    a.placement = mesh::Placement::UniformRandom;
    a.min_sep_m = 1000.0;
    a.f_mhz = 1800.0;
    a.p_tx_dbm = 46.0;
    a.g_dbi = 15.0;
    a.link = {mesh::LinkModel::Kind::Cost231, propagation::Environment::Metropolitan, 30.0, 1.5};
    a.min_link_m = 1000.0;
    a.bounds = {30.0, 46.0};
    a.mode = engine::PowerMode::Fixed;
    a.max_carriers = 3;
    a.carrier_capacity_mbps = 300.0;
    a.power = {4000.0, 250.0, 0.25};
  } else {
    a.n_nodes = 50;
    a.placement = mesh::Placement::Grid;
    a.f_mhz = 2400.0;
    a.p_tx_dbm = 20.0;
    a.g_dbi = 5.0;
    a.link = {mesh::LinkModel::Kind::Fspl, propagation::Environment::MediumCity, 30.0, 1.5};
    a.bounds = {-10.0, 30.0};
    a.mode = engine::PowerMode::Adaptive;
    a.max_carriers = 4;
    a.carrier_capacity_mbps = 50.0;
    a.power = {20.0, 8.0, 0.2};
  }
  a.carrier_lag_ticks = 5;
  return a;
}

namespace {

// Runs f, turning any library error into a ConfigError that names the key.
template <class F>
auto keyed(const config::Config& cfg, std::string_view section, std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    cfg.fail(section, key, e.what());
  }
}

template <class F>
void checked_section(const config::Config& cfg, std::string_view section, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(cfg.source() + ": [" + std::string(section) + "] " + e.what());
  }
}

std::string enum_value(const config::Config& cfg, std::string_view sec, std::string_view key,
                       std::string def, std::initializer_list<std::string_view> allowed) {
  std::string v = cfg.get_string(sec, key, def);
  for (auto a : allowed) {
    if (v == a) return v;
  }
  std::string list;
  for (auto a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
  cfg.fail(sec, key, "expected " + list + ", got '" + v + "'");
}

template <class T>
T load_text_model(const fs::path& path, T (*loader)(std::istream&)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return loader(in);
}

engine::ArchitectureConfig load_arch(const config::Config& cfg, const std::string& sec,
                                     const fs::path& base_dir) {
  const std::string name = sec.substr(5);
  const auto kind_s = enum_value(cfg, sec, "kind", "mesh", {"macro", "mesh"});
  auto a = default_architecture(engine::parse_arch_kind(kind_s), name);
  a.n_nodes = static_cast<int>(cfg.get_int(sec, "n_nodes", a.n_nodes));
  a.placement = mesh::parse_placement(
      enum_value(cfg, sec, "placement", a.placement == mesh::Placement::Grid ? "grid" : "uniform",
                 {"grid", "uniform"}));
  a.min_sep_m = cfg.get_double(sec, "min_sep_m", a.min_sep_m);
  a.topology_seed = static_cast<std::uint64_t>(cfg.get_int(sec, "topology_seed", 1));
  a.f_mhz = cfg.get_double(sec, "f_mhz", a.f_mhz);
  a.p_tx_dbm = cfg.get_double(sec, "p_tx_dbm", a.p_tx_dbm);
  a.g_dbi = cfg.get_double(sec, "g_dbi", a.g_dbi);
  a.link.kind = mesh::parse_link_kind(enum_value(
      cfg, sec, "link", a.link.kind == mesh::LinkModel::Kind::Fspl ? "fspl" : "cost231",
      {"fspl", "cost231"}));
  a.link.environment = propagation::parse_environment(enum_value(
      cfg, sec, "environment",
      a.link.environment == propagation::Environment::Metropolitan ? "metro" : "medium",
      {"medium", "metro"}));
  a.link.h_bs_m = cfg.get_double(sec, "h_bs_m", a.link.h_bs_m);
  a.link.h_ms_m = cfg.get_double(sec, "h_ms_m", a.link.h_ms_m);
  a.min_link_m = cfg.get_double(sec, "min_link_m", a.min_link_m);
  a.bounds.p_min_dbm = cfg.get_double(sec, "p_min_dbm", a.bounds.p_min_dbm);
  a.bounds.p_max_dbm = cfg.get_double(sec, "p_max_dbm", a.bounds.p_max_dbm);
  a.mode = engine::parse_power_mode(enum_value(cfg, sec, "power_mode",
                                               std::string(engine::to_string(a.mode)),
                                               {"fixed", "adaptive"}));
  a.policy = engine::parse_power_policy(enum_value(cfg, sec, "power_policy", "heuristic",
                                                   {"heuristic", "learned"}));
  if (auto p = cfg.get(sec, "policy_file")) {
    a.q = keyed(cfg, sec, "policy_file", [&] {
      return load_text_model<powerctl::QFunction>(base_dir / *p, &powerctl::QFunction::load);
    });
  }
  a.policy_max_steps = static_cast<int>(cfg.get_int(sec, "policy_max_steps", a.policy_max_steps));
  a.forecaster = cfg.get_bool(sec, "forecaster", false);
  if (auto p = cfg.get(sec, "forecast_model")) {
    a.forecast_model = keyed(cfg, sec, "forecast_model", [&] {
      return load_text_model<forecast::LstmModel>(base_dir / *p, &forecast::load_model);
    });
  }
  a.max_carriers = static_cast<int>(cfg.get_int(sec, "max_carriers", a.max_carriers));
  a.carrier_capacity_mbps = cfg.get_double(sec, "carrier_capacity_mbps", a.carrier_capacity_mbps);
  a.carrier_lag_ticks = static_cast<int>(cfg.get_int(sec, "carrier_lag_ticks", a.carrier_lag_ticks));
  a.power.overhead_w = cfg.get_double(sec, "overhead_w", a.power.overhead_w);
  a.power.carrier_w = cfg.get_double(sec, "carrier_w", a.power.carrier_w);
  a.power.pa_efficiency = cfg.get_double(sec, "pa_efficiency", a.power.pa_efficiency);
  a.conflict_threshold_dbm = cfg.get_double(sec, "conflict_threshold_dbm", a.conflict_threshold_dbm);
  a.coverage_target = cfg.get_double(sec, "coverage_target", a.coverage_target);
  a.margin_db = cfg.get_double(sec, "margin_db", a.margin_db);
  a.shadowing_sigma_db = cfg.get_double(sec, "shadowing_sigma_db", a.shadowing_sigma_db);
  a.grid_kg_co2_per_kwh = cfg.get_double(sec, "grid_kg_co2_per_kwh", a.grid_kg_co2_per_kwh);
  a.annual_cost_usd = cfg.get_double(sec, "annual_cost_usd", a.annual_cost_usd);
  checked_section(cfg, sec, [&] { engine::validate(a); });
  return a;
}

const std::set<std::string> kSimSections = {"service", "traffic", "forecast", "policy", "run", "compare"};
const std::set<std::string> kSustainSections = {"event", "notes", "opex", "capex"};

void reject_unknown_sections(const config::Config& cfg, const std::set<std::string>& known,
                             bool allow_arch) {
  for (const auto& s : cfg.sections()) {
    if (known.count(s) || (allow_arch && s.rfind("arch.", 0) == 0 && s.size() > 5)) continue;
    throw ConfigError(cfg.source() + ": unknown section [" + s + "]");
  }
}

}  // namespace

Scenario load_scenario(const config::Config& cfg, const fs::path& base_dir) {
  reject_unknown_sections(cfg, kSimSections, true);
  Scenario s;

  auto& sv = s.service;
  sv.side_m = cfg.get_double("service", "side_m", sv.side_m);
  sv.tick_seconds = cfg.get_double("service", "tick_seconds", sv.tick_seconds);
  sv.sensitivity_dbm = cfg.get_double("service", "sensitivity_dbm", sv.sensitivity_dbm);
  sv.ue_gain_dbi = cfg.get_double("service", "ue_gain_dbi", sv.ue_gain_dbi);
  sv.per_user_rate_mbps = cfg.get_double("service", "per_user_rate_mbps", sv.per_user_rate_mbps);
  checked_section(cfg, "service", [&] { engine::validate(sv); });

  auto& tr = s.traffic;
  const char* T = "traffic";
  tr.n_cells = static_cast<int>(cfg.get_int(T, "n_cells", tr.n_cells));
  tr.duration_ticks = cfg.get_int(T, "duration_ticks", tr.duration_ticks);
  tr.day_ticks = cfg.get_int(T, "day_ticks", tr.day_ticks);
  tr.base_users = cfg.get_double(T, "base_users", tr.base_users);
  tr.diurnal_amplitude = cfg.get_double(T, "diurnal_amplitude", tr.diurnal_amplitude);
  tr.hotspot.area_fraction = cfg.get_double(T, "hotspot_area_fraction", tr.hotspot.area_fraction);
  tr.hotspot.user_fraction = cfg.get_double(T, "hotspot_user_fraction", tr.hotspot.user_fraction);
  tr.noise_sigma = cfg.get_double(T, "noise_sigma", tr.noise_sigma);
  tr.seed = static_cast<std::uint64_t>(cfg.get_int(T, "seed", static_cast<std::int64_t>(tr.seed)));
  tr.tick_seconds = sv.tick_seconds;
  const auto ss = cfg.get_optional_double(T, "surge_start");
  const auto se = cfg.get_optional_double(T, "surge_end");
  const auto sm = cfg.get_optional_double(T, "surge_multiplier");
  if (ss || se || sm) {
    if (!(ss && se && sm)) {
      cfg.fail(T, ss ? (se ? "surge_multiplier" : "surge_end") : "surge_start",
               "surge_start, surge_end and surge_multiplier must be given together");
    }
    tr.surge = traffic::Surge{static_cast<std::int64_t>(*ss), static_cast<std::int64_t>(*se), *sm};
  }
  checked_section(cfg, T, [&] { traffic::validate(tr); });

  auto& fc = s.forecast;
  const char* F = "forecast";
  fc.window = static_cast<std::size_t>(cfg.get_int(F, "window", static_cast<std::int64_t>(fc.window)));
  fc.horizon = static_cast<std::size_t>(cfg.get_int(F, "horizon", static_cast<std::int64_t>(fc.horizon)));
  fc.hidden = static_cast<std::size_t>(cfg.get_int(F, "hidden", static_cast<std::int64_t>(fc.hidden)));
  fc.lr = cfg.get_double(F, "lr", fc.lr);
  fc.epochs = static_cast<int>(cfg.get_int(F, "epochs", fc.epochs));
  fc.seed = static_cast<std::uint64_t>(cfg.get_int(F, "seed", static_cast<std::int64_t>(fc.seed)));
  fc.grad_clip = cfg.get_double(F, "grad_clip", fc.grad_clip);
  checked_section(cfg, F, [&] { forecast::validate(fc); });

  const char* P = "policy";
  s.reward.alpha = cfg.get_double(P, "alpha", s.reward.alpha);
  s.reward.beta = cfg.get_double(P, "beta", s.reward.beta);
  s.reward.i_threshold_dbm = cfg.get_double(P, "i_threshold_dbm", s.reward.i_threshold_dbm);
  checked_section(cfg, P, [&] { powerctl::validate(s.reward); });
  s.policy_k = static_cast<std::size_t>(cfg.get_int(P, "k", static_cast<std::int64_t>(s.policy_k)));
  auto& h = s.policy;
  h.episodes = static_cast<int>(cfg.get_int(P, "episodes", h.episodes));
  h.steps_per_episode = static_cast<int>(cfg.get_int(P, "steps_per_episode", h.steps_per_episode));
  h.gamma = cfg.get_double(P, "gamma", h.gamma);
  h.lr = cfg.get_double(P, "lr", h.lr);
  h.epsilon_start = cfg.get_double(P, "epsilon_start", h.epsilon_start);
  h.epsilon_end = cfg.get_double(P, "epsilon_end", h.epsilon_end);
  h.replay = cfg.get_bool(P, "replay", h.replay);
  h.replay_capacity = static_cast<int>(cfg.get_int(P, "replay_capacity", h.replay_capacity));
  h.replay_batch = static_cast<int>(cfg.get_int(P, "replay_batch", h.replay_batch));
  h.hidden = static_cast<int>(cfg.get_int(P, "hidden", h.hidden));
  h.max_tabular_nodes = static_cast<int>(cfg.get_int(P, "max_tabular_nodes", h.max_tabular_nodes));
  h.q_bound = cfg.get_double(P, "q_bound", h.q_bound);
  h.reward_scale = cfg.get_double(P, "reward_scale", h.reward_scale);
  s.policy_seed = static_cast<std::uint64_t>(cfg.get_int(P, "seed", 1));
  s.policy_arch = cfg.get_string(P, "arch", "");
  if (h.episodes < 1 || h.steps_per_episode < 1) cfg.fail(P, "episodes", "episodes and steps must be >= 1");
  if (!(h.gamma >= 0.0 && h.gamma < 1.0)) cfg.fail(P, "gamma", "must lie in [0, 1)");
  if (s.policy_k < 1) cfg.fail(P, "k", "must be >= 1");

  for (const auto& sec : cfg.sections()) {
    if (sec.rfind("arch.", 0) == 0) s.archs.push_back(load_arch(cfg, sec, base_dir));
  }

  auto first_of = [&](engine::ArchKind k) -> std::string {
    for (const auto& a : s.archs) {
      if (a.kind == k) return a.name;
    }
    return s.archs.empty() ? std::string() : s.archs.front().name;
  };
  s.run_arch = cfg.get_string("run", "arch", first_of(engine::ArchKind::Mesh));
  s.compare_a = cfg.get_string("compare", "a", first_of(engine::ArchKind::Macro));
  s.compare_b = cfg.get_string("compare", "b", first_of(engine::ArchKind::Mesh));
  s.compare_seeds = static_cast<int>(cfg.get_int("compare", "seeds", s.compare_seeds));
  if (s.compare_seeds < 1) cfg.fail("compare", "seeds", "must be >= 1");
  auto require_arch = [&](const char* sec, const char* key, const std::string& name) {
    if (name.empty()) return;
    for (const auto& a : s.archs) {
      if (a.name == name) return;
    }
    cfg.fail(sec, key, "no [arch." + name + "] section");
  };
  require_arch("run", "arch", s.run_arch);
  require_arch("compare", "a", s.compare_a);
  require_arch("compare", "b", s.compare_b);
  require_arch("policy", "arch", s.policy_arch);

  cfg.reject_unknown();
  return s;
}

SustainPreset load_sustain(const config::Config& cfg) {
  reject_unknown_sections(cfg, kSustainSections, false);
  if (!cfg.has_section("event")) throw ConfigError(cfg.source() + ": missing [event] section");
  SustainPreset p;
  auto& e = p.event;
  const char* E = "event";
  e.name = cfg.get_string(E, "name", fs::path(cfg.source()).stem().string());
  e.period_label = cfg.get_string(E, "period_label", e.period_label);
  e.n_towers = cfg.get_double(E, "n_towers", 0.0);
  e.liters_per_tower_per_day = cfg.get_double(E, "liters_per_tower_per_day", 0.0);
  e.days = cfg.get_double(E, "days", 1.0);
  e.co2_kg_per_liter = cfg.get_double(E, "co2_kg_per_liter", e.co2_kg_per_liter);
  e.mesh.n_towers = cfg.get_double(E, "mesh_towers", 0.0);
  e.mesh.n_nodes = cfg.get_double(E, "mesh_nodes", 0.0);
  e.mesh.liters_total = cfg.get_double(E, "mesh_liters_total", 0.0);
  e.power.macro_w_per_tower = cfg.get_double(E, "macro_w_per_tower", 0.0);
  e.power.mesh_total_w = cfg.get_double(E, "mesh_total_w", 0.0);
  e.stated_liters_traditional = cfg.get_optional_double(E, "stated_liters_traditional");
  e.stated_co2_traditional_t = cfg.get_optional_double(E, "stated_co2_traditional_t");
  p.compare_with = cfg.get_string(E, "compare_with", "");
  checked_section(cfg, E, [&] { sustain::validate(e); });
  for (auto& [key, value] : cfg.entries("notes")) e.notes.push_back(value);

  if (cfg.has_section("opex")) {
    sustain::CostLedger ledger;
    for (auto& [key, value] : cfg.entries("opex")) {
      const auto cat = sustain::parse_cost_category(key);
      if (!cat) cfg.fail("opex", key, "unknown cost category");
      const auto parts = io::split(value, ',');
      if (parts.size() != 2) cfg.fail("opex", key, "expected 'traditional, proposed' in M$");
      keyed(cfg, "opex", key, [&] {
        ledger.set(*cat, io::parse_double(io::trim(parts[0]), key),
                   io::parse_double(io::trim(parts[1]), key));
        return 0;
      });
    }
    p.opex = ledger;
  }
  if (cfg.has_section("capex")) {
    p.capex = std::make_pair(cfg.get_double("capex", "traditional_musd", 0.0),
                             cfg.get_double("capex", "proposed_musd", 0.0));
  }
  cfg.reject_unknown();
  return p;
}

fs::path preset_path(const std::string& name) {
  if (name.empty() || name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_") != std::string::npos) {
    throw ConfigError("invalid preset name '" + name + "'");
  }
  fs::path p = fs::path(MESHSIM_CONFIG_DIR) / (name + ".cfg");
  if (!fs::exists(p)) throw ConfigError("unknown preset '" + name + "' (looked for " + p.string() + ")");
  return p;
}

namespace {

struct Artifact {
  std::string name;
  std::string content;
};

struct RunRecord {
  std::string command;
  std::string config_text;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::uint64_t> seeds;
  std::vector<Artifact> files;

  void add(std::string name, std::string content) {
    files.push_back({std::move(name), std::move(content)});
  }
};

std::string manifest_text(const RunRecord& r) {
  std::ostringstream os;
  os << "meshsim-manifest v1\n";
  os << "version " << kVersion << '\n';
  os << "command " << r.command << '\n';
  os << "config_hash " << io::hex64(io::fnv1a64(r.config_text)) << '\n';
  for (const auto& [k, v] : r.params) os << "param " << k << ' ' << v << '\n';
  os << "seeds";
  for (auto s : r.seeds) os << ' ' << s;
  os << '\n';
  for (const auto& f : r.files) {
    os << "file " << f.name << ' ' << io::hex64(io::fnv1a64(f.content)) << ' ' << f.content.size()
       << '\n';
  }
  return os.str();
}

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "meshsim-out";
}

// Writes every artifact plus the manifest; removes what it wrote if any
// write fails.
void commit(const fs::path& dir, RunRecord record) {
  record.add("manifest", manifest_text(record));
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (const auto& f : record.files) {
      const auto p = dir / f.name;
      written.push_back(p);
      io::write_file(p, f.content);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

struct SimInputs {
  config::Config cfg;
  Scenario scenario;
};

SimInputs load_sim(const std::string& path) {
  auto cfg = config::Config::load(path);
  auto scenario = load_scenario(cfg, fs::path(path).parent_path());
  return {std::move(cfg), std::move(scenario)};
}

void ensure_forecaster(engine::ArchitectureConfig& a, const Scenario& s) {
  if (a.forecaster && !a.forecast_model) {
    a.forecast_model = engine::train_demand_forecaster(s.traffic, s.forecast).model;
  }
}

double nan_if_unset() { return std::numeric_limits<double>::quiet_NaN(); }

// --- subcommands ---------------------------------------------------------

struct PathlossOpts {
  std::string model = "cost231";
  double f = nan_if_unset();
  double hbs = nan_if_unset();
  double hms = nan_if_unset();
  double d = nan_if_unset();
  std::string env = "medium";
  int digits = 2;
};

void cmd_pathloss(const PathlossOpts& o, std::ostream& out) {
  if (o.digits < 0 || o.digits > 17) throw ConfigError("pathloss: --digits must lie in [0, 17]");
  if (o.model == "cost231") {
    if (std::isnan(o.f) || std::isnan(o.hbs) || std::isnan(o.hms) || std::isnan(o.d)) {
      throw ConfigError("pathloss --model cost231 needs --f, --hbs, --hms and --d");
    }
    propagation::PathLossParams p{o.f, o.hbs, o.hms, o.d, propagation::parse_environment(o.env)};
    const double pl = propagation::cost231_path_loss(p);
    out << "path_loss = " << io::format_fixed(pl, o.digits) << " dB (cost231, "
        << propagation::to_string(p.environment) << ", f=" << io::format_double(o.f)
        << " MHz, h_bs=" << io::format_double(o.hbs) << " m, h_ms=" << io::format_double(o.hms)
        << " m, d=" << io::format_double(o.d) << " km)\n";
  } else {
    if (std::isnan(o.f) || std::isnan(o.d)) throw ConfigError("pathloss --model fspl needs --d and --f");
    const double pl = propagation::fspl(o.d, o.f);
    out << "path_loss = " << io::format_fixed(pl, o.digits) << " dB (fspl, f="
        << io::format_double(o.f) << " MHz, d=" << io::format_double(o.d) << " m)\n";
  }
}

struct SimOpts {
  std::string config;
  std::string arch;
  std::int64_t seed = -1;
  int seeds = 0;
  std::string out;
};

void cmd_run(const SimOpts& o, std::ostream& out) {
  auto [cfg, s] = load_sim(o.config);
  const std::string name = o.arch.empty() ? s.run_arch : o.arch;
  if (name.empty()) throw ConfigError(o.config + ": no architecture to run");
  if (o.seed >= 0) s.traffic.seed = static_cast<std::uint64_t>(o.seed);
  auto arch = s.arch(name);
  ensure_forecaster(arch, s);
  const auto demand = traffic::generate_demand(s.traffic);
  const auto rep = engine::run_simulation(arch, s.service, demand, s.traffic.seed);

  RunRecord rec{"run", cfg.text(), {{"arch", name}}, {s.traffic.seed}, {}};
  rec.add("ticks.csv", render([&](std::ostream& os) { engine::write_ticks_csv(os, rep); }));
  rec.add("node_tx.csv", render([&](std::ostream& os) { engine::write_node_trace_csv(os, rep); }));
  const engine::SimReport* runs[] = {&rep};
  rec.add("power_vs_load.csv",
          render([&](std::ostream& os) { engine::write_load_curves_csv(os, runs); }));
  const auto summary = render([&](std::ostream& os) { engine::write_summary(os, rep); });
  rec.add("summary.txt", summary);
  commit(resolve_out_dir(o.out), std::move(rec));
  out << summary;
}

void cmd_compare(const SimOpts& o, std::ostream& out) {
  auto [cfg, s] = load_sim(o.config);
  if (s.compare_a.empty() || s.compare_b.empty()) {
    throw ConfigError(o.config + ": compare needs two [arch.*] sections");
  }
  if (o.seed >= 0) s.traffic.seed = static_cast<std::uint64_t>(o.seed);
  const int n = o.seeds > 0 ? o.seeds : s.compare_seeds;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n; ++i) seeds.push_back(s.traffic.seed + static_cast<std::uint64_t>(i));
  auto a = s.arch(s.compare_a);
  auto b = s.arch(s.compare_b);
  ensure_forecaster(a, s);
  ensure_forecaster(b, s);
  const auto c = engine::compare_architectures(a, b, s.service, s.traffic, seeds);

  RunRecord rec{"compare", cfg.text(), {{"a", a.name}, {"b", b.name}}, seeds, {}};
  rec.add("comparison.csv", render([&](std::ostream& os) { engine::write_comparison_csv(os, c); }));
  const auto text = render([&](std::ostream& os) { engine::write_comparison_text(os, c); });
  rec.add("comparison.txt", text);
  std::vector<const engine::SimReport*> runs;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    runs.push_back(&c.a_runs[i]);
    runs.push_back(&c.b_runs[i]);
  }
  rec.add("power_vs_load.csv",
          render([&](std::ostream& os) { engine::write_load_curves_csv(os, runs); }));
  for (const auto* r : {&c.a_runs.front(), &c.b_runs.front()}) {
    rec.add("ticks_" + r->arch_name + ".csv",
            render([&](std::ostream& os) { engine::write_ticks_csv(os, *r); }));
    rec.add("node_tx_" + r->arch_name + ".csv",
            render([&](std::ostream& os) { engine::write_node_trace_csv(os, *r); }));
  }
  commit(resolve_out_dir(o.out), std::move(rec));
  out << text;
}

struct SustainOpts {
  std::string preset;
  std::string config;
  std::string out;
};

void cmd_sustain(const SustainOpts& o, std::ostream& out) {
  if (o.preset.empty() == o.config.empty()) {
    throw ConfigError("sustain needs exactly one of --preset or --config");
  }
  const fs::path path = o.config.empty() ? preset_path(o.preset) : fs::path(o.config);
  const auto cfg = config::Config::load(path);
  const auto p = load_sustain(cfg);
  auto report = sustain::event_report(p.event);
  if (!p.compare_with.empty()) {
    const auto other = load_sustain(config::Config::load(preset_path(p.compare_with)));
    for (auto& n : sustain::cross_check(p.event, other.event)) report.footnotes.push_back(n);
  }

  RunRecord rec{"sustain", cfg.text(), {{"scenario", p.event.name}}, {}, {}};
  std::ostringstream text;
  sustain::write_event_table(text, p.event, report);
  rec.add("event.csv", render([&](std::ostream& os) { sustain::write_event_csv(os, p.event, report); }));
  rec.add("fuel_savings.csv", render([&](std::ostream& os) {
            io::CsvWriter csv(os);
            csv.header({"scenario", "liters_traditional", "liters_mesh", "liters_saved",
                        "co2_saved_t"});
            csv.cell(p.event.name).cell(report.liters_traditional).cell(report.liters_mesh);
            csv.cell(report.liters_saved).cell(report.co2_saved_t);
            csv.end_row();
          }));
  if (p.opex) {
    const auto opex = sustain::opex_report(*p.opex);
    text << '\n';
    sustain::write_opex_table(text, *p.opex, opex);
    rec.add("opex.csv", render([&](std::ostream& os) { sustain::write_opex_csv(os, *p.opex, opex); }));
  }
  if (p.capex) {
    const double pct = sustain::capex_compare(p.capex->first, p.capex->second);
    text << "\nCapEx: " << io::format_fixed(p.capex->first, 1) << " M$ -> "
         << io::format_fixed(p.capex->second, 1) << " M$, " << io::format_fixed(pct, 2)
         << "% reduction (~" << io::format_fixed(std::round(pct), 0) << "%)\n";
    rec.add("capex.csv", render([&](std::ostream& os) {
              io::CsvWriter csv(os);
              csv.header({"traditional_musd", "proposed_musd", "reduction_pct"});
              csv.cell(p.capex->first).cell(p.capex->second).cell(pct);
              csv.end_row();
            }));
  }
  rec.add("report.txt", text.str());
  commit(resolve_out_dir(o.out), std::move(rec));
  out << text.str();
}

void cmd_train_forecast(const SimOpts& o, std::ostream& out) {
  auto [cfg, s] = load_sim(o.config);
  if (o.seed >= 0) s.forecast.seed = static_cast<std::uint64_t>(o.seed);
  const auto series = traffic::generate_demand(s.traffic).totals();
  const auto res = forecast::train_forecaster(series, s.forecast);

  // persistence on the same normalized pairs
  const auto& m = res.model;
  double pers = 0.0;
  std::size_t pairs = 0;
  for (std::size_t st = 0; st + m.window - 1 + m.horizon < series.size(); ++st) {
    const double last = m.normalize(series[st + m.window - 1]);
    const double target = m.normalize(series[st + m.window - 1 + m.horizon]);
    pers += (last - target) * (last - target);
    ++pairs;
  }
  pers /= static_cast<double>(std::max<std::size_t>(pairs, 1));

  RunRecord rec{"train-forecast", cfg.text(), {}, {s.traffic.seed, s.forecast.seed}, {}};
  rec.add("forecaster.lstm", render([&](std::ostream& os) { forecast::save_model(os, m); }));
  rec.add("loss_curve.csv",
          render([&](std::ostream& os) { forecast::write_loss_curve_csv(os, res.loss_curve); }));
  const auto summary = render([&](std::ostream& os) {
    os << "pairs: " << pairs << '\n'
       << "final_mse_normalized: " << io::format_double(res.final_mse) << '\n'
       << "persistence_mse_normalized: " << io::format_double(pers) << '\n';
  });
  rec.add("summary.txt", summary);
  commit(resolve_out_dir(o.out), std::move(rec));
  out << summary;
}

void cmd_train_policy(const SimOpts& o, std::ostream& out) {
  auto [cfg, s] = load_sim(o.config);
  std::string name = o.arch.empty() ? s.policy_arch : o.arch;
  if (name.empty()) name = s.run_arch;
  if (name.empty()) throw ConfigError(o.config + ": no architecture to train a policy for");
  const auto& arch = s.arch(name);
  const std::uint64_t seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : s.policy_seed;
  const auto topo = engine::build_topology(arch, s.service);
  const powerctl::PowerControlEnv env(topo, arch.link, s.reward, arch.bounds, s.policy_k);
  const auto res = powerctl::train_policy(env, s.policy, seed);
  const std::vector<double> start(topo.size(), arch.bounds.p_max_dbm);
  const auto fp = powerctl::greedy_fixed_point(env, res.q, start,
                                               static_cast<int>(20 * topo.size()));

  RunRecord rec{"train-policy", cfg.text(), {{"arch", name}}, {seed}, {}};
  rec.add("policy.q", render([&](std::ostream& os) { res.q.save(os); }));
  rec.add("learning_curve.csv", render([&](std::ostream& os) {
            powerctl::write_learning_curve_csv(os, res.learning_curve);
          }));
  const auto summary = render([&](std::ostream& os) {
    os << "arch: " << name << '\n'
       << "nodes: " << topo.size() << '\n'
       << "representation: " << (res.q.kind() == powerctl::QFunction::Kind::Tabular ? "tabular" : "mlp")
       << '\n'
       << "episodes: " << res.learning_curve.size() << '\n'
       << "greedy_reward_from_p_max: " << io::format_double(fp.reward) << '\n'
       << "greedy_steps: " << fp.steps << '\n'
       << "greedy_mean_tx_dbm: "
       << io::format_double(std::accumulate(fp.powers_dbm.begin(), fp.powers_dbm.end(), 0.0) /
                            static_cast<double>(fp.powers_dbm.size()))
       << '\n';
  });
  rec.add("summary.txt", summary);
  commit(resolve_out_dir(o.out), std::move(rec));
  out << summary;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"meshsim: macro vs adaptive-mesh radio access simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PathlossOpts pl;
  auto* c_pl = app.add_subcommand("pathloss", "Evaluate COST-231 Hata or free-space path loss");
  c_pl->add_option("--model", pl.model, "cost231 | fspl")
      ->check(CLI::IsMember({"cost231", "fspl"}))
      ->capture_default_str();
  c_pl->add_option("--f", pl.f, "Carrier frequency (MHz)");
  c_pl->add_option("--hbs", pl.hbs, "Base-station height (m)");
  c_pl->add_option("--hms", pl.hms, "Mobile height (m)");
  c_pl->add_option("--d", pl.d, "Distance: km for cost231, m for fspl");
  c_pl->add_option("--env", pl.env, "medium | metro")
      ->check(CLI::IsMember({"medium", "metro"}))
      ->capture_default_str();
  c_pl->add_option("--digits", pl.digits, "Decimals printed")->capture_default_str();

  SimOpts run_o, cmp_o, tf_o, tp_o;
  auto sim_common = [](CLI::App* c, SimOpts& o) {
    c->add_option("--config", o.config, "Scenario config file")->required();
    c->add_option("--out", o.out, std::string("Output directory (default $") + kOutDirEnv +
                                      " or ./meshsim-out)");
  };
  auto* c_run = app.add_subcommand("run", "Simulate one architecture");
  sim_common(c_run, run_o);
  c_run->add_option("--arch", run_o.arch, "Architecture section name (arch.NAME)");
  c_run->add_option("--seed", run_o.seed, "Traffic seed override")->check(CLI::NonNegativeNumber);

  auto* c_cmp = app.add_subcommand("compare", "Matched-coverage comparison of two architectures");
  sim_common(c_cmp, cmp_o);
  c_cmp->add_option("--seeds", cmp_o.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  c_cmp->add_option("--seed", cmp_o.seed, "First seed override")->check(CLI::NonNegativeNumber);

  SustainOpts su;
  auto* c_su = app.add_subcommand("sustain", "Diesel, CO2 and cost report");
  c_su->add_option("--preset", su.preset, "Shipped preset: hajj_5day | annual_fleet");
  c_su->add_option("--config", su.config, "Preset-format config file");
  c_su->add_option("--out", su.out, "Output directory");

  auto* c_tf = app.add_subcommand("train-forecast", "Train the LSTM demand forecaster");
  sim_common(c_tf, tf_o);
  c_tf->add_option("--seed", tf_o.seed, "Initialisation seed override")->check(CLI::NonNegativeNumber);

  auto* c_tp = app.add_subcommand("train-policy", "Train a power-control policy");
  sim_common(c_tp, tp_o);
  c_tp->add_option("--arch", tp_o.arch, "Architecture section name");
  c_tp->add_option("--seed", tp_o.seed, "Training seed override")->check(CLI::NonNegativeNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_pl) cmd_pathloss(pl, out);
    else if (*c_run) cmd_run(run_o, out);
    else if (*c_cmp) cmd_compare(cmp_o, out);
    else if (*c_su) cmd_sustain(su, out);
    else if (*c_tf) cmd_train_forecast(tf_o, out);
    else if (*c_tp) cmd_train_policy(tp_o, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace meshsim::cli
