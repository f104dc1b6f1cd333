#include "meshsim/propagation.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "meshsim/errors.hpp"

namespace meshsim::propagation {

namespace {

void check_range(std::string_view field, double value, double lo, double hi, std::string_view unit) {
  if (!(value >= lo && value <= hi)) {
    std::ostringstream os;
    os << field << " = " << value << " outside COST-231 domain [" << lo << ", " << hi << "] "
       << unit;
    throw DomainError(os.str());
  }
}

void check_frequency(double f_mhz) {
  check_range("f_mhz", f_mhz, Cost231Domain::kMinFreqMhz, Cost231Domain::kMaxFreqMhz, "MHz");
}

void check_mobile_height(double h_ms_m) {
  check_range("h_ms_m", h_ms_m, Cost231Domain::kMinMsHeightM, Cost231Domain::kMaxMsHeightM, "m");
}

}  // namespace

std::string_view to_string(Environment env) {
  return env == Environment::Metropolitan ? "metro" : "medium";
}

Environment parse_environment(std::string_view name) {
  if (name == "metro" || name == "metropolitan") return Environment::Metropolitan;
  if (name == "medium" || name == "medium_city" || name == "suburban") {
    return Environment::MediumCity;
  }
  throw DomainError("unknown environment '" + std::string(name) + "' (expected medium|metro)");
}

void validate(const PathLossParams& params) {
  check_frequency(params.f_mhz);
  check_range("h_bs_m", params.h_bs_m, Cost231Domain::kMinBsHeightM, Cost231Domain::kMaxBsHeightM,
              "m");
  check_mobile_height(params.h_ms_m);
  check_range("d_km", params.d_km, Cost231Domain::kMinDistanceKm, Cost231Domain::kMaxDistanceKm,
              "km");
}

double mobile_height_correction(double f_mhz, double h_ms_m, Environment /*env*/) {
  check_frequency(f_mhz);
  check_mobile_height(h_ms_m);
  const double lf = std::log10(f_mhz);
  return (1.1 * lf - 0.7) * h_ms_m - (1.56 * lf - 0.8);
}

double cost231_path_loss(const PathLossParams& params) {
  validate(params);
  const double lf = std::log10(params.f_mhz);
  const double lh = std::log10(params.h_bs_m);
  const double cm = params.environment == Environment::Metropolitan ? 3.0 : 0.0;
  return 46.3 + 33.9 * lf - 13.82 * lh -
         mobile_height_correction(params.f_mhz, params.h_ms_m, params.environment) +
         (44.9 - 6.55 * lh) * std::log10(params.d_km) + cm;
}

double fspl(double d_m, double f_mhz) {
  if (!(d_m >= 1.0)) {
    throw NonPositiveInput("fspl: distance " + std::to_string(d_m) +
                           " m is below the 1 m near-field limit");
  }
  if (!(f_mhz > 0.0)) {
    throw NonPositiveInput("fspl: frequency must be positive, got " + std::to_string(f_mhz));
  }
  return 20.0 * std::log10(d_m) + 20.0 * std::log10(f_mhz) - 27.55;
}

double received_power(const LinkBudget& budget) {
  if (!std::isfinite(budget.loss_db) || !std::isfinite(budget.p_tx_dbm) ||
      !std::isfinite(budget.g_tx_dbi) || !std::isfinite(budget.g_rx_dbi)) {
    throw DomainError("received_power: link budget terms must be finite");
  }
  return budget.p_tx_dbm + budget.g_tx_dbi + budget.g_rx_dbi - budget.loss_db;
}

ProximityGain proximity_gain_db(double d_far_m, double d_near_m, double f_mhz) {
  if (!(d_far_m > d_near_m) || !(d_near_m >= 1.0)) {
    throw OrderError("proximity_gain_db: need d_far > d_near >= 1 m, got d_far = " +
                     std::to_string(d_far_m) + ", d_near = " + std::to_string(d_near_m));
  }
  if (!(f_mhz > 0.0)) {
    throw NonPositiveInput("proximity_gain_db: frequency must be positive");
  }
  // fspl(d_far) - fspl(d_near); the frequency term cancels.
  ProximityGain g;
  g.delta_db = 20.0 * std::log10(d_far_m / d_near_m);
  g.factor = std::pow(10.0, g.delta_db / 10.0);
  return g;
}

}  // namespace meshsim::propagation
