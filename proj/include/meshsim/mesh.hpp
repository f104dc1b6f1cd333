#pragma once

// Node placement, pairwise link evaluation, the interference matrix, top-K
// interferer features and spatial-reuse zone partitioning.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "meshsim/propagation.hpp"

namespace meshsim::mesh {

struct Node {
  int id = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  double p_tx_dbm = 0.0;
  double g_dbi = 0.0;
};

struct Topology {
  std::vector<Node> nodes;
  double side_m = 0.0;
  double f_mhz = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return nodes.size(); }
  std::vector<double> powers_dbm() const;
  /// Copy with every node's transmit power replaced.
  Topology with_powers(std::span<const double> powers_dbm) const;
};

enum class Placement { UniformRandom, Grid };

Placement parse_placement(std::string_view name);  // "uniform" | "grid"

struct PlacementSpec {
  int n = 0;
  double side_m = 0.0;
  double f_mhz = 0.0;
  Placement placement = Placement::Grid;
  double min_sep_m = 1.0;
  std::uint64_t seed = 0;
  double p_tx_dbm = 0.0;
  double g_dbi = 0.0;
  int max_attempts_per_node = 10000;
};

/// Grid placement uses the r x c factorisation of n with |r - c| minimal
/// (r <= c rows along y) and half-spacing margins; UniformRandom draws
/// positions by rejection against min_sep_m and throws PlacementInfeasible
/// once a node exhausts its attempt budget.
Topology generate_topology(const PlacementSpec& spec);

/// Checks the Topology invariants (contiguous ids, N >= 2, inside the
/// region, pairwise separation >= min_sep_m).
void validate(const Topology& topology, double min_sep_m = 1.0);

double distance(const Node& a, const Node& b);

/// Which closed-form loss a link is evaluated with.
struct LinkModel {
  enum class Kind { Fspl, Cost231 };
  Kind kind = Kind::Fspl;
  propagation::Environment environment = propagation::Environment::MediumCity;
  double h_bs_m = 30.0;
  double h_ms_m = 1.5;
};

LinkModel::Kind parse_link_kind(std::string_view name);  // "fspl" | "cost231"

/// Path loss of a d_m metre link under the given model.
double link_loss_db(const LinkModel& model, double d_m, double f_mhz);

/// N x N received-power table in dBm. Entry (i, j) is the power received at
/// node j from node i. The diagonal is undefined: reading it throws
/// ContractViolation instead of returning a number.
class InterferenceMatrix {
 public:
  InterferenceMatrix() = default;

  static InterferenceMatrix from_function(std::size_t n,
                                          const std::function<double(std::size_t, std::size_t)>& f);

  std::size_t size() const { return n_; }
  bool defined(std::size_t i, std::size_t j) const { return i != j && i < n_ && j < n_; }
  double at(std::size_t i, std::size_t j) const;

  /// Sum of the linear powers (mW) arriving at node j from every other node.
  double incoming_mw(std::size_t j) const;

  /// Principal sub-matrix over the given node indices, in that order.
  InterferenceMatrix subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

/// Throws CoLocated for any pair closer than 1 m and DomainError (naming the
/// pair) when a Cost231 link leaves the model's domain.
InterferenceMatrix build_interference_matrix(const Topology& topology, const LinkModel& model);

struct Interferer {
  int source_id = 0;
  double p_rx_dbm = 0.0;
};

/// The k strongest entries arriving at node_id, strongest first, ties by
/// ascending source id. Throws KOutOfRange unless 1 <= k <= N-1.
std::vector<Interferer> top_k_interferers(const InterferenceMatrix& matrix, std::size_t node_id,
                                          std::size_t k);

struct ZoneAssignment {
  std::vector<int> zone_of;
  int n_zones = 0;
};

/// Welsh-Powell greedy colouring of the conflict graph, where i and j
/// conflict iff max(I(i,j), I(j,i)) > conflict_threshold_dbm.
ZoneAssignment partition_zones(const InterferenceMatrix& matrix, double conflict_threshold_dbm);

/// N / n_zones.
double reuse_capacity_gain(const ZoneAssignment& zones);

void write_topology(std::ostream& out, const Topology& topology);
Topology read_topology(std::istream& in);

/// CSV with a `source` column followed by one column per receiver; the
/// diagonal is written as NA.
void write_matrix_csv(std::ostream& out, const InterferenceMatrix& matrix);

}  // namespace meshsim::mesh
