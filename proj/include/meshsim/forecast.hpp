#pragma once

// Univariate short-horizon load forecasting: an LSTM (no peepholes) with a
// linear readout of the last hidden state, trained by plain sequential SGD
// with backpropagation through time, plus the persistence baseline.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace meshsim::forecast {

enum class Gate { Forget = 0, Input = 1, Output = 2, Cell = 3 };

/// All parameters live in one flat vector so gradients share its layout:
///   W_f, W_i, W_o, W_c   (each hidden x (1 + hidden), row-major, input column first)
///   b_f, b_i, b_o, b_c   (each hidden)
///   w_y (hidden), b_y (1)
/// The network works in normalised units; mean/stddev map back to load.
struct LstmModel {
  std::size_t hidden = 0;
  std::size_t window = 0;
  std::size_t horizon = 0;
  double mean = 0.0;
  double stddev = 1.0;
  std::vector<double> params;

  static LstmModel zeros(std::size_t hidden, std::size_t window, std::size_t horizon);
  /// Uniform [-0.1, 0.1] weights, forget-gate bias +1.
  static LstmModel initialised(std::size_t hidden, std::size_t window, std::size_t horizon,
                               std::uint64_t seed);

  static std::size_t param_count(std::size_t hidden);

  std::span<double> gate_weights(Gate g);
  std::span<const double> gate_weights(Gate g) const;
  std::span<double> gate_bias(Gate g);
  std::span<const double> gate_bias(Gate g) const;
  std::span<double> readout_weights();
  std::span<const double> readout_weights() const;
  double& readout_bias();
  double readout_bias() const;

  double normalize(double x) const { return (x - mean) / stddev; }
  double denormalize(double z) const { return z * stddev + mean; }
};

/// Per-step activations retained for backpropagation.
struct LstmCache {
  std::vector<double> x;                      // inputs, one per step
  std::vector<std::vector<double>> h, c;      // h[t], c[t] after step t; index 0 is the zero state
  std::vector<std::vector<double>> f, i, o, g;
};

struct ForwardResult {
  double prediction = 0.0;
  LstmCache cache;
};

/// Runs the recurrence over a normalised sequence of length model.window.
ForwardResult lstm_forward(const LstmModel& model, std::span<const double> sequence);

/// Exact gradient of 0.5 * (prediction - target)^2, laid out like params.
std::vector<double> lstm_gradients(const LstmModel& model, std::span<const double> sequence,
                                   double target);

struct ForecastConfig {
  std::size_t window = 30;
  std::size_t horizon = 5;  // ticks; 5 s at the default 1 s tick
  std::size_t hidden = 8;
  double lr = 0.02;
  int epochs = 60;
  std::uint64_t seed = 1;
  double grad_clip = 5.0;  // global-norm clip per sample; 0 disables
};

void validate(const ForecastConfig& cfg);

struct TrainedForecaster {
  LstmModel model;
  std::vector<double> loss_curve;  // mean per-sample MSE seen during each epoch
  double final_mse = 0.0;          // MSE over all pairs with the final parameters
};

/// Sliding (window -> value horizon ticks after the window's last sample)
/// pairs over the normalised series, visited in a seeded shuffled order.
TrainedForecaster train_forecaster(std::span<const double> series, const ForecastConfig& cfg);

/// Denormalised forecast horizon ticks ahead, clamped at zero.
double predict(const LstmModel& model, std::span<const double> recent_window);

/// The last observed value.
double persistence_baseline(std::span<const double> recent_window);

/// Closed-form persistence MSE on A sin(2 pi t / T): 2 A^2 sin^2(pi h / T).
/// In normalised units (A = sqrt 2) this is 4 sin^2(pi h / T).
double persistence_sinusoid_mse(double horizon, double period, double amplitude);

void save_model(std::ostream& out, const LstmModel& model);
LstmModel load_model(std::istream& in);

void write_loss_curve_csv(std::ostream& out, std::span<const double> curve);

}  // namespace meshsim::forecast
