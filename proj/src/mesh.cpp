#include "meshsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"
#include "meshsim/rng.hpp"

namespace meshsim::mesh {

std::vector<double> Topology::powers_dbm() const {
  std::vector<double> p;
  p.reserve(nodes.size());
  for (const auto& n : nodes) p.push_back(n.p_tx_dbm);
  return p;
}

Topology Topology::with_powers(std::span<const double> powers) const {
  if (powers.size() != nodes.size()) {
    throw ContractViolation("with_powers: " + std::to_string(powers.size()) + " powers for " +
                            std::to_string(nodes.size()) + " nodes");
  }
  Topology t = *this;
  for (std::size_t i = 0; i < powers.size(); ++i) t.nodes[i].p_tx_dbm = powers[i];
  return t;
}

Placement parse_placement(std::string_view name) {
  if (name == "grid") return Placement::Grid;
  if (name == "uniform" || name == "uniform_random") return Placement::UniformRandom;
  throw ConfigError("unknown placement '" + std::string(name) + "' (expected grid|uniform)");
}

LinkModel::Kind parse_link_kind(std::string_view name) {
  if (name == "fspl") return LinkModel::Kind::Fspl;
  if (name == "cost231") return LinkModel::Kind::Cost231;
  throw ConfigError("unknown link model '" + std::string(name) + "' (expected fspl|cost231)");
}

double distance(const Node& a, const Node& b) { return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m); }

namespace {

bool far_enough(const std::vector<Node>& placed, double x, double y, double min_sep) {
  for (const auto& p : placed) {
    if (std::hypot(p.x_m - x, p.y_m - y) < min_sep) return false;
  }
  return true;
}

}  // namespace

Topology generate_topology(const PlacementSpec& spec) {
  if (spec.n < 2) throw DomainError("generate_topology: need n >= 2, got " + std::to_string(spec.n));
  if (!(spec.side_m > 0.0)) throw DomainError("generate_topology: side_m must be positive");
  if (!(spec.min_sep_m >= 1.0)) throw DomainError("generate_topology: min_sep_m must be >= 1 m");

  Topology t;
  t.side_m = spec.side_m;
  t.f_mhz = spec.f_mhz;
  t.seed = spec.seed;
  t.nodes.reserve(static_cast<std::size_t>(spec.n));

  if (spec.placement == Placement::Grid) {
    int rows = static_cast<int>(std::sqrt(static_cast<double>(spec.n)));
    while (spec.n % rows != 0) --rows;
    const int cols = spec.n / rows;
    const double dx = spec.side_m / cols;
    const double dy = spec.side_m / rows;
    if (std::min(dx, dy) < spec.min_sep_m) {
      throw PlacementInfeasible("grid spacing " + std::to_string(std::min(dx, dy)) +
                                " m is below min_sep_m = " + std::to_string(spec.min_sep_m) +
                                "; placed 0 of " + std::to_string(spec.n));
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        t.nodes.push_back({r * cols + c, (c + 0.5) * dx, (r + 0.5) * dy, spec.p_tx_dbm, spec.g_dbi});
      }
    }
    return t;
  }

  Rng rng(spec.seed);
  for (int i = 0; i < spec.n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_attempts_per_node; ++attempt) {
      const double x = rng.uniform() * spec.side_m;
      const double y = rng.uniform() * spec.side_m;
      if (far_enough(t.nodes, x, y, spec.min_sep_m)) {
        t.nodes.push_back({i, x, y, spec.p_tx_dbm, spec.g_dbi});
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw PlacementInfeasible("could not honour min_sep_m = " + std::to_string(spec.min_sep_m) +
                                " m; placed " + std::to_string(i) + " of " +
                                std::to_string(spec.n));
    }
  }
  return t;
}

void validate(const Topology& topology, double min_sep_m) {
  const auto& nodes = topology.nodes;
  if (nodes.size() < 2) throw DomainError("topology needs at least 2 nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id != static_cast<int>(i)) {
      throw DomainError("node ids must be contiguous from 0; position " + std::to_string(i) +
                        " has id " + std::to_string(n.id));
    }
    if (n.x_m < 0.0 || n.y_m < 0.0 || n.x_m > topology.side_m || n.y_m > topology.side_m) {
      throw DomainError("node " + std::to_string(n.id) + " lies outside the region");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(nodes[j], n) < min_sep_m) {
        throw CoLocated("nodes " + std::to_string(j) + " and " + std::to_string(i) +
                        " are closer than " + std::to_string(min_sep_m) + " m");
      }
    }
  }
}

double link_loss_db(const LinkModel& model, double d_m, double f_mhz) {
  if (model.kind == LinkModel::Kind::Fspl) return propagation::fspl(d_m, f_mhz);
  propagation::PathLossParams p;
  p.f_mhz = f_mhz;
  p.h_bs_m = model.h_bs_m;
  p.h_ms_m = model.h_ms_m;
  p.d_km = d_m / 1000.0;
  p.environment = model.environment;
  return propagation::cost231_path_loss(p);
}

InterferenceMatrix InterferenceMatrix::from_function(
    std::size_t n, const std::function<double(std::size_t, std::size_t)>& f) {
  InterferenceMatrix m;
  m.n_ = n;
  m.entries_.assign(n * n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = f(i, j);
      if (!std::isfinite(v)) {
        throw ContractViolation("interference entry (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") is not finite");
      }
      m.entries_[i * n + j] = v;
    }
  }
  return m;
}

double InterferenceMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) {
    throw ContractViolation("interference index (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") out of range for N = " + std::to_string(n_));
  }
  if (i == j) {
    throw ContractViolation("interference diagonal (" + std::to_string(i) + ", " +
                            std::to_string(i) + ") is undefined");
  }
  return entries_[i * n_ + j];
}

double InterferenceMatrix::incoming_mw(std::size_t j) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (i != j) sum += std::pow(10.0, at(i, j) / 10.0);
  }
  return sum;
}

InterferenceMatrix InterferenceMatrix::subset(std::span<const std::size_t> indices) const {
  return from_function(indices.size(),
                       [&](std::size_t a, std::size_t b) { return at(indices[a], indices[b]); });
}

InterferenceMatrix build_interference_matrix(const Topology& topology, const LinkModel& model) {
  const std::size_t n = topology.size();
  // Path loss is symmetric in distance; evaluate each unordered pair once.
  std::vector<double> loss(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(topology.nodes[i], topology.nodes[j]);
      if (d < 1.0) {
        throw CoLocated("nodes " + std::to_string(i) + " and " + std::to_string(j) + " are " +
                        std::to_string(d) + " m apart (minimum 1 m)");
      }
      try {
        loss[i * n + j] = loss[j * n + i] = link_loss_db(model, d, topology.f_mhz);
      } catch (const DomainError& e) {
        throw DomainError("link " + std::to_string(i) + "-" + std::to_string(j) + ": " + e.what());
      }
    }
  }
  return InterferenceMatrix::from_function(n, [&](std::size_t i, std::size_t j) {
    const auto& tx = topology.nodes[i];
    const auto& rx = topology.nodes[j];
    return propagation::received_power({tx.p_tx_dbm, tx.g_dbi, rx.g_dbi, loss[i * n + j]});
  });
}

std::vector<Interferer> top_k_interferers(const InterferenceMatrix& matrix, std::size_t node_id,
                                          std::size_t k) {
  const std::size_t n = matrix.size();
  if (node_id >= n) throw KOutOfRange("node " + std::to_string(node_id) + " out of range");
  if (k < 1 || k + 1 > n) {
    throw KOutOfRange("k = " + std::to_string(k) + " outside [1, " + std::to_string(n - 1) + "]");
  }
  std::vector<Interferer> column;
  column.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i != node_id) column.push_back({static_cast<int>(i), matrix.at(i, node_id)});
  }
  std::partial_sort(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(k), column.end(),
                    [](const Interferer& a, const Interferer& b) {
                      if (a.p_rx_dbm != b.p_rx_dbm) return a.p_rx_dbm > b.p_rx_dbm;
                      return a.source_id < b.source_id;
                    });
  column.resize(k);
  return column;
}

ZoneAssignment partition_zones(const InterferenceMatrix& matrix, double conflict_threshold_dbm) {
  if (!std::isfinite(conflict_threshold_dbm)) {
    throw DomainError("partition_zones: conflict threshold must be finite");
  }
  const std::size_t n = matrix.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::max(matrix.at(i, j), matrix.at(j, i)) > conflict_threshold_dbm) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return adj[a].size() > adj[b].size(); });

  ZoneAssignment z;
  z.zone_of.assign(n, -1);
  std::vector<char> used;
  for (std::size_t v : order) {
    used.assign(n + 1, 0);
    for (std::size_t u : adj[v]) {
      if (z.zone_of[u] >= 0) used[static_cast<std::size_t>(z.zone_of[u])] = 1;
    }
    int color = 0;
    while (used[static_cast<std::size_t>(color)]) ++color;
    z.zone_of[v] = color;
    z.n_zones = std::max(z.n_zones, color + 1);
  }
  return z;
}

double reuse_capacity_gain(const ZoneAssignment& zones) {
  if (zones.n_zones <= 0) throw DomainError("reuse_capacity_gain: assignment has no zones");
  return static_cast<double>(zones.zone_of.size()) / zones.n_zones;
}

void write_topology(std::ostream& out, const Topology& topology) {
  out << "# meshsim topology v1\n";
  out << "side_m " << io::format_double(topology.side_m) << '\n';
  out << "f_mhz " << io::format_double(topology.f_mhz) << '\n';
  out << "seed " << topology.seed << '\n';
  out << "id x_m y_m p_tx_dbm g_dbi\n";
  for (const auto& n : topology.nodes) {
    out << n.id << ' ' << io::format_double(n.x_m) << ' ' << io::format_double(n.y_m) << ' '
        << io::format_double(n.p_tx_dbm) << ' ' << io::format_double(n.g_dbi) << '\n';
  }
}

Topology read_topology(std::istream& in) {
  Topology t;
  std::string line;
  bool in_table = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = io::trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::istringstream fields(s);
    std::vector<std::string> tok;
    for (std::string w; fields >> w;) tok.push_back(w);
    const std::string where = "topology line " + std::to_string(line_no);
    if (!in_table) {
      if (tok[0] == "id") {
        in_table = true;
      } else if (tok.size() == 2 && tok[0] == "side_m") {
        t.side_m = io::parse_double(tok[1], where);
      } else if (tok.size() == 2 && tok[0] == "f_mhz") {
        t.f_mhz = io::parse_double(tok[1], where);
      } else if (tok.size() == 2 && tok[0] == "seed") {
        t.seed = static_cast<std::uint64_t>(io::parse_int(tok[1], where));
      } else {
        throw FormatError(where + ": unexpected '" + s + "'");
      }
      continue;
    }
    if (tok.size() != 5) throw FormatError(where + ": expected 5 columns");
    Node n;
    n.id = static_cast<int>(io::parse_int(tok[0], where));
    n.x_m = io::parse_double(tok[1], where);
    n.y_m = io::parse_double(tok[2], where);
    n.p_tx_dbm = io::parse_double(tok[3], where);
    n.g_dbi = io::parse_double(tok[4], where);
    t.nodes.push_back(n);
  }
  if (!in_table) throw FormatError("topology: missing 'id x_m y_m p_tx_dbm g_dbi' header");
  validate(t);
  return t;
}

void write_matrix_csv(std::ostream& out, const InterferenceMatrix& matrix) {
  io::CsvWriter csv(out);
  csv.cell("source");
  for (std::size_t j = 0; j < matrix.size(); ++j) csv.cell(j);
  csv.end_row();
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    csv.cell(i);
    for (std::size_t j = 0; j < matrix.size(); ++j) {
      if (matrix.defined(i, j)) {
        csv.cell(matrix.at(i, j));
      } else {
        csv.na();
      }
    }
    csv.end_row();
  }
}

}  // namespace meshsim::mesh
