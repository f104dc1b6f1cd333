#pragma once

// Closed-form path-loss and link-budget computations. All powers are in dBm
// and all gains/losses in dB; nothing here converts to linear units.

#include <string_view>

namespace meshsim::propagation {

enum class Environment { MediumCity, Metropolitan };

std::string_view to_string(Environment env);
Environment parse_environment(std::string_view name);  // "medium" | "metro"

/// Inputs of the COST-231 Hata model.
///
/// Valid domain: 1500-2000 MHz carrier, 30-200 m base-station height,
/// 1-10 m mobile height and 1-20 km link distance. Outside it the model
/// is undefined and every entry point throws DomainError.
struct PathLossParams {
  double f_mhz = 0.0;
  double h_bs_m = 0.0;
  double h_ms_m = 0.0;
  double d_km = 0.0;
  Environment environment = Environment::MediumCity;
};

struct LinkBudget {
  double p_tx_dbm = 0.0;
  double g_tx_dbi = 0.0;
  double g_rx_dbi = 0.0;
  double loss_db = 0.0;
};

struct ProximityGain {
  double delta_db = 0.0;
  double factor = 1.0;  // linear power ratio, 10^(delta/10)
};

struct Cost231Domain {
  static constexpr double kMinFreqMhz = 1500.0;
  static constexpr double kMaxFreqMhz = 2000.0;
  static constexpr double kMinBsHeightM = 30.0;
  static constexpr double kMaxBsHeightM = 200.0;
  static constexpr double kMinMsHeightM = 1.0;
  static constexpr double kMaxMsHeightM = 10.0;
  static constexpr double kMinDistanceKm = 1.0;
  static constexpr double kMaxDistanceKm = 20.0;
};

/// Throws DomainError naming the first field outside the COST-231 domain.
void validate(const PathLossParams& params);

/// Mobile-station antenna height correction a(h_MS) in dB.
///
/// Uses the Hata small/medium-city form
///   a(h) = (1.1 log10 f - 0.7) h - (1.56 log10 f - 0.8)
/// for both environments. The large-city variant is deliberately not used:
/// the metropolitan distinction is carried entirely by the C_m offset.
double mobile_height_correction(double f_mhz, double h_ms_m, Environment env);

/// COST-231 Hata median path loss in dB.
double cost231_path_loss(const PathLossParams& params);

/// Free-space path loss in dB for d in metres and f in MHz.
/// Throws NonPositiveInput for d < 1 m (near field) or f <= 0.
double fspl(double d_m, double f_mhz);

/// P_rx = P_tx + G_tx + G_rx - PL.
double received_power(const LinkBudget& budget);

/// Free-space advantage of serving from d_near instead of d_far.
/// Throws OrderError unless d_far > d_near >= 1 m.
ProximityGain proximity_gain_db(double d_far_m, double d_near_m, double f_mhz);

}  // namespace meshsim::propagation
