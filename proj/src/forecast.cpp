#include "meshsim/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"
#include "meshsim/rng.hpp"

namespace meshsim::forecast {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Offsets into the flat parameter vector.
struct Layout {
  std::size_t h, z, wsize;
  explicit Layout(std::size_t hidden) : h(hidden), z(1 + hidden), wsize(hidden * (1 + hidden)) {}
  std::size_t w(Gate g) const { return static_cast<std::size_t>(g) * wsize; }
  std::size_t b(Gate g) const { return 4 * wsize + static_cast<std::size_t>(g) * h; }
  std::size_t wy() const { return 4 * wsize + 4 * h; }
  std::size_t by() const { return wy() + h; }
  std::size_t total() const { return by() + 1; }
};

constexpr Gate kGates[] = {Gate::Forget, Gate::Input, Gate::Output, Gate::Cell};
constexpr const char* kWeightNames[] = {"W_f", "W_i", "W_o", "W_c"};
constexpr const char* kBiasNames[] = {"b_f", "b_i", "b_o", "b_c"};

void check_model(const LstmModel& m) {
  if (m.hidden == 0) throw DomainError("LSTM hidden size must be positive");
  if (m.params.size() != LstmModel::param_count(m.hidden)) {
    throw DomainError("LSTM parameter vector has " + std::to_string(m.params.size()) +
                      " entries, expected " + std::to_string(LstmModel::param_count(m.hidden)));
  }
}

}  // namespace

std::size_t LstmModel::param_count(std::size_t hidden) { return Layout(hidden).total(); }

LstmModel LstmModel::zeros(std::size_t hidden, std::size_t window, std::size_t horizon) {
  LstmModel m;
  m.hidden = hidden;
  m.window = window;
  m.horizon = horizon;
  m.params.assign(param_count(hidden), 0.0);
  return m;
}

LstmModel LstmModel::initialised(std::size_t hidden, std::size_t window, std::size_t horizon,
                                 std::uint64_t seed) {
  LstmModel m = zeros(hidden, window, horizon);
  Rng rng(seed);
  for (auto& p : m.params) p = rng.uniform(-0.1, 0.1);
  for (auto& b : m.gate_bias(Gate::Forget)) b = 1.0;
  return m;
}

std::span<double> LstmModel::gate_weights(Gate g) {
  const Layout l(hidden);
  return {params.data() + l.w(g), l.wsize};
}
std::span<const double> LstmModel::gate_weights(Gate g) const {
  const Layout l(hidden);
  return {params.data() + l.w(g), l.wsize};
}
std::span<double> LstmModel::gate_bias(Gate g) {
  const Layout l(hidden);
  return {params.data() + l.b(g), hidden};
}
std::span<const double> LstmModel::gate_bias(Gate g) const {
  const Layout l(hidden);
  return {params.data() + l.b(g), hidden};
}
std::span<double> LstmModel::readout_weights() {
  return {params.data() + Layout(hidden).wy(), hidden};
}
std::span<const double> LstmModel::readout_weights() const {
  return {params.data() + Layout(hidden).wy(), hidden};
}
double& LstmModel::readout_bias() { return params[Layout(hidden).by()]; }
double LstmModel::readout_bias() const { return params[Layout(hidden).by()]; }

ForwardResult lstm_forward(const LstmModel& model, std::span<const double> sequence) {
  check_model(model);
  if (sequence.size() != model.window) {
    throw WindowMismatch("sequence length " + std::to_string(sequence.size()) +
                         " != model window " + std::to_string(model.window));
  }
  const Layout l(model.hidden);
  const std::size_t H = model.hidden;
  const std::size_t T = sequence.size();
  const double* p = model.params.data();

  ForwardResult r;
  auto& c = r.cache;
  c.x.assign(sequence.begin(), sequence.end());
  c.h.assign(T + 1, std::vector<double>(H, 0.0));
  c.c.assign(T + 1, std::vector<double>(H, 0.0));
  c.f.assign(T, std::vector<double>(H));
  c.i.assign(T, std::vector<double>(H));
  c.o.assign(T, std::vector<double>(H));
  c.g.assign(T, std::vector<double>(H));

  for (std::size_t t = 0; t < T; ++t) {
    if (!std::isfinite(sequence[t])) throw DomainError("LSTM input is not finite");
    const auto& h_prev = c.h[t];
    const auto& c_prev = c.c[t];
    for (std::size_t u = 0; u < H; ++u) {
      double pre[4];
      for (Gate g : kGates) {
        const double* w = p + l.w(g) + u * l.z;
        double a = p[l.b(g) + u] + w[0] * sequence[t];
        for (std::size_t k = 0; k < H; ++k) a += w[1 + k] * h_prev[k];
        pre[static_cast<int>(g)] = a;
      }
      const double f = sigmoid(pre[0]);
      const double i = sigmoid(pre[1]);
      const double o = sigmoid(pre[2]);
      const double g = std::tanh(pre[3]);
      const double cell = f * c_prev[u] + i * g;
      c.f[t][u] = f;
      c.i[t][u] = i;
      c.o[t][u] = o;
      c.g[t][u] = g;
      c.c[t + 1][u] = cell;
      c.h[t + 1][u] = o * std::tanh(cell);
    }
  }
  double y = p[l.by()];
  for (std::size_t u = 0; u < H; ++u) y += p[l.wy() + u] * c.h[T][u];
  r.prediction = y;
  return r;
}

std::vector<double> lstm_gradients(const LstmModel& model, std::span<const double> sequence,
                                   double target) {
  const auto fwd = lstm_forward(model, sequence);
  const auto& c = fwd.cache;
  const Layout l(model.hidden);
  const std::size_t H = model.hidden;
  const std::size_t T = sequence.size();
  const double* p = model.params.data();

  std::vector<double> grad(l.total(), 0.0);
  const double dy = fwd.prediction - target;
  grad[l.by()] = dy;
  std::vector<double> dh(H), dc_next(H, 0.0), dh_prev(H);
  for (std::size_t u = 0; u < H; ++u) {
    grad[l.wy() + u] = dy * c.h[T][u];
    dh[u] = dy * p[l.wy() + u];
  }

  for (std::size_t t = T; t-- > 0;) {
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (std::size_t u = 0; u < H; ++u) {
      const double f = c.f[t][u], i = c.i[t][u], o = c.o[t][u], g = c.g[t][u];
      const double tc = std::tanh(c.c[t + 1][u]);
      const double dc = dc_next[u] + dh[u] * o * (1.0 - tc * tc);
      const double da[4] = {
          dc * c.c[t][u] * f * (1.0 - f),  // forget
          dc * g * i * (1.0 - i),          // input
          dh[u] * tc * o * (1.0 - o),      // output
          dc * i * (1.0 - g * g),          // cell candidate
      };
      dc_next[u] = dc * f;
      for (Gate gate : kGates) {
        const double a = da[static_cast<int>(gate)];
        const std::size_t row = l.w(gate) + u * l.z;
        grad[l.b(gate) + u] += a;
        grad[row] += a * c.x[t];
        for (std::size_t k = 0; k < H; ++k) {
          grad[row + 1 + k] += a * c.h[t][k];
          dh_prev[k] += a * p[row + 1 + k];
        }
      }
    }
    dh.swap(dh_prev);
  }
  return grad;
}

void validate(const ForecastConfig& cfg) {
  if (cfg.window < 1) throw DomainError("forecast window must be >= 1");
  if (cfg.horizon < 1) throw DomainError("forecast horizon must be >= 1");
  if (cfg.hidden < 1) throw DomainError("forecast hidden size must be >= 1");
  if (!(cfg.lr > 0.0)) throw DomainError("forecast lr must be positive");
  if (cfg.epochs < 1) throw DomainError("forecast epochs must be >= 1");
  if (!(cfg.grad_clip >= 0.0)) throw DomainError("forecast grad_clip must be >= 0");
}

TrainedForecaster train_forecaster(std::span<const double> series, const ForecastConfig& cfg) {
  validate(cfg);
  if (series.size() < cfg.window + cfg.horizon + 1) {
    throw InsufficientData("series of length " + std::to_string(series.size()) + " needs at least " +
                           std::to_string(cfg.window + cfg.horizon + 1) + " samples");
  }
  TrainedForecaster out;
  LstmModel& m = out.model;
  m = LstmModel::initialised(cfg.hidden, cfg.window, cfg.horizon, cfg.seed);

  const double n = static_cast<double>(series.size());
  m.mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double var = 0.0;
  for (double x : series) var += (x - m.mean) * (x - m.mean);
  const double sd = std::sqrt(var / n);
  m.stddev = sd > 1e-12 ? sd : 1.0;

  std::vector<double> z(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) z[t] = m.normalize(series[t]);

  const std::size_t pairs = series.size() - cfg.window - cfg.horizon + 1;
  auto input = [&](std::size_t s) { return std::span<const double>(z.data() + s, cfg.window); };
  auto target = [&](std::size_t s) { return z[s + cfg.window - 1 + cfg.horizon]; };

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  out.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k = pairs; k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
    double sum_sq = 0.0;
    for (std::size_t s : order) {
      auto grad = lstm_gradients(m, input(s), target(s));
      const double dy = grad.back();  // d/db_y equals the residual
      sum_sq += dy * dy;
      double norm = 0.0;
      for (double gv : grad) norm += gv * gv;
      norm = std::sqrt(norm);
      const double scale = cfg.grad_clip > 0.0 && norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;
      for (std::size_t k = 0; k < grad.size(); ++k) m.params[k] -= cfg.lr * scale * grad[k];
    }
    const double mse = sum_sq / static_cast<double>(pairs);
    if (!std::isfinite(mse)) {
      throw DivergenceDetected("forecaster loss became non-finite at epoch " +
                               std::to_string(epoch) + "; reduce lr");
    }
    out.loss_curve.push_back(mse);
  }

  double sum_sq = 0.0;
  for (std::size_t s = 0; s < pairs; ++s) {
    const double e = lstm_forward(m, input(s)).prediction - target(s);
    sum_sq += e * e;
  }
  out.final_mse = sum_sq / static_cast<double>(pairs);
  if (!std::isfinite(out.final_mse)) throw DivergenceDetected("forecaster final loss is not finite");
  return out;
}

double predict(const LstmModel& model, std::span<const double> recent_window) {
  if (recent_window.size() != model.window) {
    throw WindowMismatch("window of " + std::to_string(recent_window.size()) +
                         " samples, model expects " + std::to_string(model.window));
  }
  std::vector<double> z(recent_window.size());
  for (std::size_t t = 0; t < z.size(); ++t) z[t] = model.normalize(recent_window[t]);
  return std::max(0.0, model.denormalize(lstm_forward(model, z).prediction));
}

double persistence_baseline(std::span<const double> recent_window) {
  if (recent_window.empty()) throw InsufficientData("persistence baseline needs a non-empty window");
  return recent_window.back();
}

double persistence_sinusoid_mse(double horizon, double period, double amplitude) {
  const double s = std::sin(std::numbers::pi * horizon / period);
  return 2.0 * amplitude * amplitude * s * s;
}

void save_model(std::ostream& out, const LstmModel& model) {
  check_model(model);
  out << "meshsim-lstm v1\n";
  out << "hidden " << model.hidden << '\n';
  out << "window " << model.window << '\n';
  out << "horizon " << model.horizon << '\n';
  out << "mean " << io::format_double(model.mean) << '\n';
  out << "stddev " << io::format_double(model.stddev) << '\n';
  auto block = [&](const char* name, std::span<const double> v) {
    out << name;
    for (double x : v) out << ' ' << io::format_double(x);
    out << '\n';
  };
  for (Gate g : kGates) block(kWeightNames[static_cast<int>(g)], model.gate_weights(g));
  for (Gate g : kGates) block(kBiasNames[static_cast<int>(g)], model.gate_bias(g));
  block("w_y", model.readout_weights());
  out << "b_y " << io::format_double(model.readout_bias()) << '\n';
}

LstmModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || io::trim(line) != "meshsim-lstm v1") {
    throw FormatError("not a meshsim-lstm v1 file");
  }
  auto next = [&](std::string_view label) {
    if (!std::getline(in, line)) throw FormatError("model file truncated at " + std::string(label));
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != label) {
      throw FormatError("model file: expected '" + std::string(label) + "', got '" + tag + "'");
    }
    std::vector<std::string> tok;
    for (std::string w; ls >> w;) tok.push_back(w);
    return tok;
  };
  auto one = [&](std::string_view label) {
    auto t = next(label);
    if (t.size() != 1) throw FormatError("model file: '" + std::string(label) + "' needs one value");
    return t[0];
  };
  const auto hidden = static_cast<std::size_t>(io::parse_int(one("hidden"), "hidden"));
  const auto window = static_cast<std::size_t>(io::parse_int(one("window"), "window"));
  const auto horizon = static_cast<std::size_t>(io::parse_int(one("horizon"), "horizon"));
  LstmModel m = LstmModel::zeros(hidden, window, horizon);
  m.mean = io::parse_double(one("mean"), "mean");
  m.stddev = io::parse_double(one("stddev"), "stddev");
  auto fill = [&](std::string_view label, std::span<double> dst) {
    const auto tok = next(label);
    if (tok.size() != dst.size()) {
      throw FormatError("model file: block '" + std::string(label) + "' has " +
                        std::to_string(tok.size()) + " values, expected " +
                        std::to_string(dst.size()));
    }
    for (std::size_t k = 0; k < tok.size(); ++k) dst[k] = io::parse_double(tok[k], label);
  };
  for (Gate g : kGates) fill(kWeightNames[static_cast<int>(g)], m.gate_weights(g));
  for (Gate g : kGates) fill(kBiasNames[static_cast<int>(g)], m.gate_bias(g));
  fill("w_y", m.readout_weights());
  m.readout_bias() = io::parse_double(one("b_y"), "b_y");
  return m;
}

void write_loss_curve_csv(std::ostream& out, std::span<const double> curve) {
  io::CsvWriter csv(out);
  csv.header({"epoch", "mse"});
  for (std::size_t e = 0; e < curve.size(); ++e) {
    csv.cell(e).cell(curve[e]);
    csv.end_row();
  }
}

}  // namespace meshsim::forecast
