#pragma once

// Command-line front end. run() is the whole program minus process
// plumbing so it can be driven in-process by tests.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 domain error,
// 4 runtime divergence, 1 anything else.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meshsim/config.hpp"
#include "meshsim/engine.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/forecast.hpp"
#include "meshsim/powerctl.hpp"
#include "meshsim/sustain.hpp"
#include "meshsim/traffic.hpp"

namespace meshsim::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutDirEnv = "MESHSIM_OUT_DIR";

int exit_code(ErrorKind kind);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct Scenario {
  engine::ServiceConfig service;
  traffic::TrafficScenario traffic;
  forecast::ForecastConfig forecast;
  powerctl::RewardConfig reward;
  powerctl::TrainHyper policy;
  std::size_t policy_k = 3;
  std::uint64_t policy_seed = 1;
  std::string policy_arch;
  std::vector<engine::ArchitectureConfig> archs;  // file order
  std::string run_arch;
  std::string compare_a, compare_b;
  int compare_seeds = 10;

  const engine::ArchitectureConfig& arch(const std::string& name) const;
  engine::ArchitectureConfig& arch(const std::string& name);
};

/// Reads every section of a simulation config. Relative model paths are
/// resolved against base_dir. Unknown keys are rejected.
Scenario load_scenario(const config::Config& cfg, const std::filesystem::path& base_dir);

/// Architecture defaults for a kind before config overrides.
engine::ArchitectureConfig default_architecture(engine::ArchKind kind, std::string name);

struct SustainPreset {
  sustain::EventScenario event;
  std::optional<sustain::CostLedger> opex;
  std::optional<std::pair<double, double>> capex;  // traditional, proposed (M$)
  std::string compare_with;                        // another preset's name
};

SustainPreset load_sustain(const config::Config& cfg);

/// Location of a shipped preset, e.g. "hajj_5day".
std::filesystem::path preset_path(const std::string& name);

}  // namespace meshsim::cli
