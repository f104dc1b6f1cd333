#include "meshsim/powerctl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"

namespace meshsim::powerctl {

double PowerBounds::clamp(double p) const { return std::clamp(p, p_min_dbm, p_max_dbm); }

void validate(const RewardConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !(cfg.beta >= 0.0)) {
    throw DomainError("reward weights alpha and beta must be non-negative");
  }
  if (cfg.alpha == 0.0 && cfg.beta == 0.0) {
    throw DomainError("reward weights alpha and beta cannot both be zero");
  }
  if (!std::isfinite(cfg.i_threshold_dbm)) throw DomainError("i_threshold_dbm must be finite");
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double reward(const mesh::InterferenceMatrix& matrix, std::span<const double> powers_dbm,
              const RewardConfig& cfg) {
  const std::size_t n = matrix.size();
  if (powers_dbm.size() != n) {
    throw ContractViolation("reward: " + std::to_string(powers_dbm.size()) + " powers for an " +
                            std::to_string(n) + "-node matrix");
  }
  double excess_db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) excess_db += std::max(0.0, matrix.at(i, j) - cfg.i_threshold_dbm);
    }
  }
  double watts = 0.0;
  for (double p : powers_dbm) watts += dbm_to_mw(p) / 1000.0;
  return -cfg.alpha * excess_db - cfg.beta * watts;
}

int action_index(const PcAction& action) {
  const int step = static_cast<int>(action.step) / 3 + 1;  // -3,0,3 -> 0,1,2
  return action.node_id * kStepsPerNode + step;
}

PcAction action_from_index(int index) {
  if (index < 0) throw InvalidAction("negative action index");
  static constexpr PowerStep kSteps[] = {PowerStep::Down, PowerStep::Hold, PowerStep::Up};
  return {index / kStepsPerNode, kSteps[index % kStepsPerNode]};
}

// ---------------------------------------------------------------------------
// Environment

PowerControlEnv::PowerControlEnv(mesh::Topology topology, mesh::LinkModel link, RewardConfig reward,
                                 PowerBounds bounds, std::size_t k)
    : topology_(std::move(topology)), reward_(reward), bounds_(bounds) {
  validate(reward_);
  if (!(bounds_.p_min_dbm < bounds_.p_max_dbm)) {
    throw DomainError("power bounds need p_min < p_max");
  }
  const std::size_t n = topology_.size();
  if (n == 0) throw DomainError("power control needs at least one node");
  k_ = std::min(k, n - 1);
  loss_db_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = mesh::distance(topology_.nodes[i], topology_.nodes[j]);
      if (d < 1.0) {
        throw CoLocated("nodes " + std::to_string(i) + " and " + std::to_string(j) +
                        " are closer than 1 m");
      }
      loss_db_[i * n + j] = loss_db_[j * n + i] = mesh::link_loss_db(link, d, topology_.f_mhz);
    }
  }
}

mesh::InterferenceMatrix PowerControlEnv::matrix_for(std::span<const double> powers_dbm) const {
  const std::size_t n = num_nodes();
  if (powers_dbm.size() != n) throw ContractViolation("matrix_for: power vector size mismatch");
  return mesh::InterferenceMatrix::from_function(n, [&](std::size_t i, std::size_t j) {
    return propagation::received_power({powers_dbm[i], topology_.nodes[i].g_dbi,
                                        topology_.nodes[j].g_dbi, loss_db_[i * n + j]});
  });
}

PcState PowerControlEnv::make_state(std::span<const double> powers_dbm) const {
  PcState s;
  s.powers_dbm.assign(powers_dbm.begin(), powers_dbm.end());
  s.topk_features.resize(num_nodes());
  if (k_ == 0) return s;
  const auto m = matrix_for(powers_dbm);
  for (std::size_t j = 0; j < num_nodes(); ++j) {
    for (const auto& t : mesh::top_k_interferers(m, j, k_)) {
      s.topk_features[j].push_back(t.p_rx_dbm);
    }
  }
  return s;
}

double PowerControlEnv::reward_of(std::span<const double> powers_dbm) const {
  return reward(matrix_for(powers_dbm), powers_dbm, reward_);
}

StepResult PowerControlEnv::step(const PcState& state, const PcAction& action) const {
  if (action.node_id < 0 || static_cast<std::size_t>(action.node_id) >= num_nodes()) {
    throw InvalidAction("node " + std::to_string(action.node_id) + " out of range for N = " +
                        std::to_string(num_nodes()));
  }
  const int d = static_cast<int>(action.step);
  if (d != -3 && d != 0 && d != 3) throw InvalidAction("delta must be one of -3, 0, +3 dB");
  if (state.powers_dbm.size() != num_nodes()) throw InvalidAction("state size mismatch");

  std::vector<double> powers = state.powers_dbm;
  auto& p = powers[static_cast<std::size_t>(action.node_id)];
  p = bounds_.clamp(p + action.delta_db());
  StepResult r;
  r.next = make_state(powers);
  r.reward = reward_of(powers);
  return r;
}

// ---------------------------------------------------------------------------
// Q-function

QFunction QFunction::tabular(std::size_t n_nodes, std::size_t k, PowerBounds bounds,
                             double feature_ref_dbm) {
  QFunction q;
  q.kind_ = Kind::Tabular;
  q.n_nodes_ = n_nodes;
  q.k_ = k;
  q.bounds_ = bounds;
  q.feature_ref_dbm_ = feature_ref_dbm;
  return q;
}

QFunction QFunction::mlp(std::size_t n_nodes, std::size_t k, PowerBounds bounds,
                         double feature_ref_dbm, std::size_t hidden, Rng& rng) {
  QFunction q;
  q.kind_ = Kind::Mlp;
  q.n_nodes_ = n_nodes;
  q.k_ = k;
  q.bounds_ = bounds;
  q.feature_ref_dbm_ = feature_ref_dbm;
  q.hidden_ = hidden;
  const std::size_t in = n_nodes * (1 + k);
  const std::size_t out = q.num_actions();
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  q.w1_.resize(hidden * in);
  for (auto& w : q.w1_) w = rng.uniform(-s1, s1);
  q.b1_.assign(hidden, 0.0);
  q.w2_.resize(out * hidden);
  for (auto& w : q.w2_) w = rng.uniform(-s2, s2);
  q.b2_.assign(out, 0.0);
  return q;
}

std::vector<double> QFunction::features(const PcState& state) const {
  const double mid = 0.5 * (bounds_.p_min_dbm + bounds_.p_max_dbm);
  const double half = 0.5 * (bounds_.p_max_dbm - bounds_.p_min_dbm);
  std::vector<double> x;
  x.reserve(n_nodes_ * (1 + k_));
  for (double p : state.powers_dbm) x.push_back((p - mid) / half);
  for (std::size_t j = 0; j < n_nodes_; ++j) {
    for (std::size_t t = 0; t < k_; ++t) {
      const double v = t < state.topk_features[j].size() ? state.topk_features[j][t]
                                                         : feature_ref_dbm_ - 40.0;
      x.push_back((v - feature_ref_dbm_) / 20.0);
    }
  }
  return x;
}

std::vector<std::int64_t> QFunction::key(std::span<const double> powers_dbm) const {
  std::vector<std::int64_t> k;
  k.reserve(powers_dbm.size());
  for (double p : powers_dbm) k.push_back(std::llround(p * 1000.0));
  return k;
}

std::vector<double> QFunction::values(const PcState& state) const {
  if (state.powers_dbm.size() != n_nodes_) {
    throw ContractViolation("QFunction: state has " + std::to_string(state.powers_dbm.size()) +
                            " nodes, policy expects " + std::to_string(n_nodes_));
  }
  if (kind_ == Kind::Tabular) {
    const auto it = table_.find(key(state.powers_dbm));
    if (it == table_.end()) return std::vector<double>(num_actions(), 0.0);
    return it->second;
  }
  const auto x = features(state);
  const std::size_t in = x.size();
  std::vector<double> h(hidden_);
  for (std::size_t u = 0; u < hidden_; ++u) {
    double a = b1_[u];
    const double* w = &w1_[u * in];
    for (std::size_t i = 0; i < in; ++i) a += w[i] * x[i];
    h[u] = std::tanh(a);
  }
  std::vector<double> out(num_actions());
  for (std::size_t o = 0; o < out.size(); ++o) {
    double a = b2_[o];
    const double* w = &w2_[o * hidden_];
    for (std::size_t u = 0; u < hidden_; ++u) a += w[u] * h[u];
    out[o] = a;
  }
  return out;
}

double QFunction::update(const PcState& state, int action, double target, double lr) {
  const auto a = static_cast<std::size_t>(action);
  if (a >= num_actions()) throw InvalidAction("action index out of range");
  if (kind_ == Kind::Tabular) {
    auto [it, inserted] =
        table_.try_emplace(key(state.powers_dbm), std::vector<double>(num_actions(), 0.0));
    auto& q = it->second[a];
    q += lr * (target - q);
    return q;
  }

  const auto x = features(state);
  const std::size_t in = x.size();
  std::vector<double> h(hidden_);
  for (std::size_t u = 0; u < hidden_; ++u) {
    double s = b1_[u];
    const double* w = &w1_[u * in];
    for (std::size_t i = 0; i < in; ++i) s += w[i] * x[i];
    h[u] = std::tanh(s);
  }
  double qa = b2_[a];
  for (std::size_t u = 0; u < hidden_; ++u) qa += w2_[a * hidden_ + u] * h[u];

  // Huber-style clipping of the TD error.
  const double err = std::clamp(qa - target, -1.0, 1.0);
  for (std::size_t u = 0; u < hidden_; ++u) {
    const double dh = err * w2_[a * hidden_ + u] * (1.0 - h[u] * h[u]);
    w2_[a * hidden_ + u] -= lr * err * h[u];
    b1_[u] -= lr * dh;
    double* w = &w1_[u * in];
    for (std::size_t i = 0; i < in; ++i) w[i] -= lr * dh * x[i];
  }
  b2_[a] -= lr * err;
  return values(state)[a];
}

void QFunction::set_value(std::span<const double> powers_dbm, int action, double q) {
  if (kind_ != Kind::Tabular) throw ContractViolation("set_value needs a tabular Q-function");
  auto [it, inserted] =
      table_.try_emplace(key(powers_dbm), std::vector<double>(num_actions(), 0.0));
  it->second.at(static_cast<std::size_t>(action)) = q;
}

void QFunction::save(std::ostream& out) const {
  out << "meshsim-policy v1\n";
  out << "repr " << (kind_ == Kind::Tabular ? "tabular" : "mlp") << '\n';
  out << "n " << n_nodes_ << '\n';
  out << "k " << k_ << '\n';
  out << "bounds " << io::format_double(bounds_.p_min_dbm) << ' '
      << io::format_double(bounds_.p_max_dbm) << '\n';
  out << "feature_ref_dbm " << io::format_double(feature_ref_dbm_) << '\n';
  auto row = [&](const char* name, const std::vector<double>& v) {
    out << name;
    for (double x : v) out << ' ' << io::format_double(x);
    out << '\n';
  };
  if (kind_ == Kind::Tabular) {
    out << "entries " << table_.size() << '\n';
    for (const auto& [k, q] : table_) {
      for (auto v : k) out << v << ' ';
      out << ':';
      for (double x : q) out << ' ' << io::format_double(x);
      out << '\n';
    }
  } else {
    out << "hidden " << hidden_ << '\n';
    row("w1", w1_);
    row("b1", b1_);
    row("w2", w2_);
    row("b2", b2_);
  }
}

namespace {

std::string expect_line(std::istream& in, std::string_view label) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("policy file truncated before '" + std::string(label) + "'");
  }
  std::istringstream ls(line);
  std::string tag;
  ls >> tag;
  if (tag != label) {
    throw FormatError("policy file: expected '" + std::string(label) + "', got '" + tag + "'");
  }
  std::string rest;
  std::getline(ls, rest);
  return io::trim(rest);
}

std::vector<double> parse_numbers(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::istringstream is(text);
  for (std::string tok; is >> tok;) out.push_back(io::parse_double(tok, what));
  return out;
}

}  // namespace

QFunction QFunction::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || io::trim(line) != "meshsim-policy v1") {
    throw FormatError("not a meshsim-policy v1 file");
  }
  QFunction q;
  const std::string repr = expect_line(in, "repr");
  if (repr == "tabular") {
    q.kind_ = Kind::Tabular;
  } else if (repr == "mlp") {
    q.kind_ = Kind::Mlp;
  } else {
    throw FormatError("policy file: unknown representation '" + repr + "'");
  }
  q.n_nodes_ = static_cast<std::size_t>(io::parse_int(expect_line(in, "n"), "policy n"));
  q.k_ = static_cast<std::size_t>(io::parse_int(expect_line(in, "k"), "policy k"));
  const auto b = parse_numbers(expect_line(in, "bounds"), "policy bounds");
  if (b.size() != 2) throw FormatError("policy file: bounds needs two values");
  q.bounds_ = {b[0], b[1]};
  q.feature_ref_dbm_ = io::parse_double(expect_line(in, "feature_ref_dbm"), "feature_ref_dbm");

  if (q.kind_ == Kind::Tabular) {
    const auto entries = io::parse_int(expect_line(in, "entries"), "policy entries");
    for (std::int64_t e = 0; e < entries; ++e) {
      if (!std::getline(in, line)) throw FormatError("policy file: truncated table");
      const auto colon = line.find(':');
      if (colon == std::string::npos) throw FormatError("policy file: table row lacks ':'");
      std::vector<std::int64_t> k;
      std::istringstream ks(line.substr(0, colon));
      for (std::string tok; ks >> tok;) k.push_back(io::parse_int(tok, "policy key"));
      auto vals = parse_numbers(line.substr(colon + 1), "policy value");
      if (k.size() != q.n_nodes_ || vals.size() != q.num_actions()) {
        throw FormatError("policy file: table row has wrong arity");
      }
      q.table_.emplace(std::move(k), std::move(vals));
    }
    return q;
  }
  q.hidden_ = static_cast<std::size_t>(io::parse_int(expect_line(in, "hidden"), "policy hidden"));
  q.w1_ = parse_numbers(expect_line(in, "w1"), "w1");
  q.b1_ = parse_numbers(expect_line(in, "b1"), "b1");
  q.w2_ = parse_numbers(expect_line(in, "w2"), "w2");
  q.b2_ = parse_numbers(expect_line(in, "b2"), "b2");
  const std::size_t in_dim = q.n_nodes_ * (1 + q.k_);
  if (q.w1_.size() != q.hidden_ * in_dim || q.b1_.size() != q.hidden_ ||
      q.w2_.size() != q.num_actions() * q.hidden_ || q.b2_.size() != q.num_actions()) {
    throw FormatError("policy file: weight block sizes do not match the header");
  }
  return q;
}

// ---------------------------------------------------------------------------
// Acting and learning

namespace {

int argmax(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

struct Transition {
  PcState state;
  int action = 0;
  double reward = 0.0;
  PcState next;
};

}  // namespace

PcAction select_action(const QFunction& q, const PcState& state, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
  const double u = rng.uniform();
  if (u < epsilon) return action_from_index(static_cast<int>(rng.index(q.num_actions())));
  return action_from_index(argmax(q.values(state)));
}

TrainResult train_policy(const PowerControlEnv& env, const TrainHyper& hyper, std::uint64_t seed) {
  if (hyper.episodes <= 0 || hyper.steps_per_episode <= 0 || !(hyper.lr > 0.0)) {
    throw DomainError("train_policy: episodes, steps_per_episode and lr must be positive");
  }
  if (!(hyper.gamma > 0.0 && hyper.gamma < 1.0)) {
    throw DomainError("train_policy: gamma must lie in (0, 1)");
  }
  Rng rng(seed);
  const std::size_t n = env.num_nodes();
  const double ref = env.reward_config().i_threshold_dbm;
  QFunction q = static_cast<int>(n) <= hyper.max_tabular_nodes
                    ? QFunction::tabular(n, env.k(), env.bounds(), ref)
                    : QFunction::mlp(n, env.k(), env.bounds(), ref,
                                     static_cast<std::size_t>(hyper.hidden), rng);

  const auto& b = env.bounds();
  const auto lattice = static_cast<std::uint64_t>(std::floor((b.p_max_dbm - b.p_min_dbm) / 3.0)) + 1;

  if (hyper.reward_scale < 0.0) throw DomainError("train_policy: reward_scale must be >= 0");
  double scale = hyper.reward_scale;
  if (scale == 0.0) {
    scale = 1.0;
    if (q.kind() == QFunction::Kind::Mlp) {
      const std::vector<double> top(n, b.p_max_dbm);
      scale = std::max(1.0, std::abs(env.reward_of(top)));
    }
  }

  std::vector<Transition> replay;
  std::size_t replay_next = 0;

  auto learn = [&](const PcState& s, int a, double r, const PcState& next) {
    const double target = r / scale + hyper.gamma * max_of(q.values(next));
    const double v = q.update(s, a, target, hyper.lr);
    if (!std::isfinite(v) || std::abs(v) > hyper.q_bound) {
      throw DivergenceDetected("Q value " + io::format_double(v) + " exceeds bound " +
                               io::format_double(hyper.q_bound) + "; reduce lr");
    }
  };

  TrainResult result{q, {}};
  result.learning_curve.reserve(static_cast<std::size_t>(hyper.episodes));
  for (int ep = 0; ep < hyper.episodes; ++ep) {
    const double frac = hyper.episodes > 1 ? static_cast<double>(ep) / (hyper.episodes - 1) : 1.0;
    const double eps = hyper.epsilon_start + (hyper.epsilon_end - hyper.epsilon_start) * frac;
    std::vector<double> start(n);
    for (auto& p : start) p = b.p_min_dbm + 3.0 * static_cast<double>(rng.index(lattice));
    PcState state = env.make_state(start);
    double ret = 0.0;
    for (int t = 0; t < hyper.steps_per_episode; ++t) {
      const PcAction action = select_action(q, state, eps, rng);
      const int a = action_index(action);
      StepResult sr = env.step(state, action);
      ret += sr.reward;
      if (hyper.replay) {
        Transition tr{state, a, sr.reward, sr.next};
        if (replay.size() < static_cast<std::size_t>(hyper.replay_capacity)) {
          replay.push_back(std::move(tr));
        } else {
          replay[replay_next] = std::move(tr);
          replay_next = (replay_next + 1) % replay.size();
        }
        if (replay.size() >= static_cast<std::size_t>(hyper.replay_batch)) {
          for (int m = 0; m < hyper.replay_batch; ++m) {
            const auto& x = replay[rng.index(replay.size())];
            learn(x.state, x.action, x.reward, x.next);
          }
        }
      } else {
        learn(state, a, sr.reward, sr.next);
      }
      state = std::move(sr.next);
    }
    result.learning_curve.push_back({ep, ret, eps});
  }
  result.q = std::move(q);
  return result;
}

FixedPoint greedy_fixed_point(const PowerControlEnv& env, const QFunction& q,
                              std::span<const double> start_dbm, int max_steps) {
  PcState state = env.make_state(start_dbm);
  std::set<std::vector<double>> seen{state.powers_dbm};
  int steps = 0;
  for (; steps < max_steps; ++steps) {
    const PcAction a = action_from_index(argmax(q.values(state)));
    StepResult sr = env.step(state, a);
    if (sr.next.powers_dbm == state.powers_dbm) break;
    if (!seen.insert(sr.next.powers_dbm).second) {
      state = std::move(sr.next);
      ++steps;
      break;
    }
    state = std::move(sr.next);
  }
  return {state.powers_dbm, env.reward_of(state.powers_dbm), steps};
}

BruteForceResult brute_force_optimal(const mesh::Topology& topology, const mesh::LinkModel& link,
                                     const RewardConfig& cfg, std::span<const double> power_levels) {
  const std::size_t n = topology.size();
  if (power_levels.empty()) throw DomainError("brute_force_optimal: no power levels");
  double count = 1.0;
  for (std::size_t i = 0; i < n; ++i) count *= static_cast<double>(power_levels.size());
  if (count > 1e6) {
    throw TooLarge("brute_force_optimal: " + io::format_double(count) +
                   " candidates exceed the 1e6 enumeration bound");
  }
  std::vector<double> levels(power_levels.begin(), power_levels.end());
  std::sort(levels.begin(), levels.end());
  const PowerBounds bounds{levels.front(), std::max(levels.back(), levels.front() + 1.0)};
  const PowerControlEnv env(topology, link, cfg, bounds, 0);

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> powers(n, levels.front());
  BruteForceResult best{powers, env.reward_of(powers)};
  while (true) {
    // Odometer increment: last node varies fastest, giving lexicographic order.
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++idx[pos] < levels.size()) break;
      idx[pos] = 0;
      if (pos == 0) return best;
    }
    if (n == 0) return best;
    for (std::size_t i = 0; i < n; ++i) powers[i] = levels[idx[i]];
    const double r = env.reward_of(powers);
    if (r > best.best_reward) best = {powers, r};
  }
}

void write_learning_curve_csv(std::ostream& out, const std::vector<EpisodeStats>& curve) {
  io::CsvWriter csv(out);
  csv.header({"episode", "return", "epsilon"});
  for (const auto& e : curve) {
    csv.cell(e.episode).cell(e.ret).cell(e.epsilon);
    csv.end_row();
  }
}

}  // namespace meshsim::powerctl
