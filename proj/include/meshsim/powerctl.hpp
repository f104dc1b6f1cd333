#pragma once

// Reinforcement-learning transmit-power control: the per-node +/-3 dB MDP,
// its thresholded-interference plus energy reward, value-based agents
// (tabular for tiny networks, a one-hidden-layer approximator otherwise)
// and an exhaustive optimiser used as a verification oracle.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "meshsim/mesh.hpp"
#include "meshsim/rng.hpp"

namespace meshsim::powerctl {

struct PowerBounds {
  double p_min_dbm = -10.0;
  double p_max_dbm = 30.0;

  double clamp(double p) const;
};

/// r = -alpha * sum_{i!=j} max(0, I(i,j) - i_threshold) - beta * sum_i P_i[W]
struct RewardConfig {
  double alpha = 1.0;  // per dB of threshold excess
  double beta = 1.0;   // per watt of radiated power
  double i_threshold_dbm = -90.0;
};

void validate(const RewardConfig& cfg);

double dbm_to_mw(double dbm);

double reward(const mesh::InterferenceMatrix& matrix, std::span<const double> powers_dbm,
              const RewardConfig& cfg);

enum class PowerStep : int { Down = -3, Hold = 0, Up = 3 };

inline constexpr int kStepsPerNode = 3;

struct PcAction {
  int node_id = 0;
  PowerStep step = PowerStep::Hold;

  double delta_db() const { return static_cast<double>(static_cast<int>(step)); }
  bool operator==(const PcAction&) const = default;
};

/// Actions are indexed node-major with steps ordered (-3, 0, +3), so index
/// order is the (node_id, delta) lexicographic order.
int action_index(const PcAction& action);
PcAction action_from_index(int index);

struct PcState {
  std::vector<double> powers_dbm;
  std::vector<std::vector<double>> topk_features;  // per node, strongest first

  bool operator==(const PcState&) const = default;
};

struct StepResult {
  PcState next;
  double reward = 0.0;
};

/// The MDP over a fixed topology. Pairwise path losses are evaluated once;
/// every step rebuilds the interference matrix from the new powers.
class PowerControlEnv {
 public:
  PowerControlEnv(mesh::Topology topology, mesh::LinkModel link, RewardConfig reward,
                  PowerBounds bounds, std::size_t k);

  std::size_t num_nodes() const { return topology_.size(); }
  std::size_t num_actions() const { return kStepsPerNode * topology_.size(); }
  std::size_t k() const { return k_; }
  const PowerBounds& bounds() const { return bounds_; }
  const RewardConfig& reward_config() const { return reward_; }
  const mesh::Topology& topology() const { return topology_; }

  mesh::InterferenceMatrix matrix_for(std::span<const double> powers_dbm) const;
  PcState make_state(std::span<const double> powers_dbm) const;
  double reward_of(std::span<const double> powers_dbm) const;

  /// Applies the action (saturating at the bounds) and returns the reward
  /// of the resulting state. Throws InvalidAction for a bad node id.
  StepResult step(const PcState& state, const PcAction& action) const;

 private:
  mesh::Topology topology_;
  RewardConfig reward_;
  PowerBounds bounds_;
  std::size_t k_;
  std::vector<double> loss_db_;  // row-major N x N, diagonal unused
};

/// State-action values. Tabular over exact power vectors (quantised to
/// 1e-3 dB) for small networks; otherwise a tanh hidden layer over the
/// normalised state features with one linear output per action.
class QFunction {
 public:
  enum class Kind { Tabular, Mlp };

  static QFunction tabular(std::size_t n_nodes, std::size_t k, PowerBounds bounds,
                           double feature_ref_dbm);
  static QFunction mlp(std::size_t n_nodes, std::size_t k, PowerBounds bounds,
                       double feature_ref_dbm, std::size_t hidden, Rng& rng);

  Kind kind() const { return kind_; }
  std::size_t num_nodes() const { return n_nodes_; }
  std::size_t k() const { return k_; }
  std::size_t num_actions() const { return kStepsPerNode * n_nodes_; }
  const PowerBounds& bounds() const { return bounds_; }

  std::vector<double> values(const PcState& state) const;

  /// Moves Q(state, action) toward target by one step of size lr on the
  /// squared TD error; the approximator clips that error to +/-1. Returns
  /// the updated value.
  double update(const PcState& state, int action, double target, double lr);

  /// Overrides a tabular entry; used to hand-construct policies.
  void set_value(std::span<const double> powers_dbm, int action, double q);

  void save(std::ostream& out) const;
  static QFunction load(std::istream& in);

 private:
  QFunction() = default;
  std::vector<double> features(const PcState& state) const;
  std::vector<std::int64_t> key(std::span<const double> powers_dbm) const;

  Kind kind_ = Kind::Tabular;
  std::size_t n_nodes_ = 0;
  std::size_t k_ = 0;
  PowerBounds bounds_;
  double feature_ref_dbm_ = -90.0;
  // tabular
  std::map<std::vector<std::int64_t>, std::vector<double>> table_;
  // mlp
  std::size_t hidden_ = 0;
  std::vector<double> w1_, b1_, w2_, b2_;
};

/// Epsilon-greedy; greedy ties resolve to the smallest action index.
PcAction select_action(const QFunction& q, const PcState& state, double epsilon, Rng& rng);

struct TrainHyper {
  int episodes = 200;
  int steps_per_episode = 50;
  double gamma = 0.95;
  double lr = 0.1;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  bool replay = false;
  int replay_capacity = 5000;
  int replay_batch = 16;
  int hidden = 32;
  int max_tabular_nodes = 4;
  double q_bound = 1e6;
  /// Rewards are divided by this before learning. 0 picks 1 for the table
  /// and |r(all nodes at p_max)| for the approximator.
  double reward_scale = 0.0;
};

struct EpisodeStats {
  int episode = 0;
  double ret = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  QFunction q;
  std::vector<EpisodeStats> learning_curve;
};

/// Q-learning (tabular) or semi-gradient TD (approximator). Episodes start
/// from seeded random powers on the 3 dB lattice above p_min. Throws
/// DivergenceDetected when any updated value leaves [-q_bound, q_bound].
TrainResult train_policy(const PowerControlEnv& env, const TrainHyper& hyper, std::uint64_t seed);

struct FixedPoint {
  std::vector<double> powers_dbm;
  double reward = 0.0;
  int steps = 0;
};

/// Follows the greedy policy from start until an action leaves the state
/// unchanged, a state repeats, or max_steps is reached.
FixedPoint greedy_fixed_point(const PowerControlEnv& env, const QFunction& q,
                              std::span<const double> start_dbm, int max_steps);

struct BruteForceResult {
  std::vector<double> best_powers_dbm;
  double best_reward = 0.0;
};

/// Exhaustive search over power_levels^N; ties go to the lexicographically
/// smallest vector. Throws TooLarge beyond 1e6 candidates.
BruteForceResult brute_force_optimal(const mesh::Topology& topology, const mesh::LinkModel& link,
                                     const RewardConfig& cfg, std::span<const double> power_levels);

void write_learning_curve_csv(std::ostream& out, const std::vector<EpisodeStats>& curve);

}  // namespace meshsim::powerctl
