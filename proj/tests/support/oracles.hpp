#pragma once

// Reference implementations used only by tests. They are deliberately
// naive so that they share no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "meshsim/mesh.hpp"

namespace oracle {

inline std::string data_path(const std::string& name) {
  return std::string(MESHSIM_TEST_DATA_DIR) + "/" + name;
}

/// Adjacency of the conflict graph, evaluated entry by entry.
inline std::vector<std::vector<bool>> conflict_graph(const meshsim::mesh::InterferenceMatrix& m,
                                                     double threshold) {
  const std::size_t n = m.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && (m.at(i, j) > threshold || m.at(j, i) > threshold)) adj[i][j] = true;
    }
  }
  return adj;
}

/// Number of same-zone pairs that conflict.
inline int same_zone_conflicts(const std::vector<std::vector<bool>>& adj,
                               const std::vector<int>& zone_of) {
  int bad = 0;
  for (std::size_t i = 0; i < adj.size(); ++i) {
    for (std::size_t j = i + 1; j < adj.size(); ++j) {
      if (adj[i][j] && zone_of[i] == zone_of[j]) ++bad;
    }
  }
  return bad;
}

/// Exact chromatic number by trying k = 1, 2, ... with plain backtracking.
inline int chromatic_number(const std::vector<std::vector<bool>>& adj) {
  const std::size_t n = adj.size();
  if (n == 0) return 0;
  std::vector<int> colour(n, -1);
  std::function<bool(std::size_t, int)> fill = [&](std::size_t v, int k) -> bool {
    if (v == n) return true;
    for (int c = 0; c < k; ++c) {
      bool ok = true;
      for (std::size_t u = 0; u < v; ++u) {
        if (adj[v][u] && colour[u] == c) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      colour[v] = c;
      if (fill(v + 1, k)) return true;
    }
    colour[v] = -1;
    return false;
  };
  for (int k = 1; k <= static_cast<int>(n); ++k) {
    if (fill(0, k)) return k;
  }
  return static_cast<int>(n);
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Every vector in levels^n, in lexicographic order.
inline std::vector<std::vector<double>> all_power_vectors(std::size_t n,
                                                          const std::vector<double>& levels) {
  std::vector<std::vector<double>> out{{}};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double l : levels) {
        auto v = prefix;
        v.push_back(l);
        next.push_back(v);
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Reward recomputed from scratch: link equation, hinge on every ordered
/// pair, plus radiated watts.
inline double reward_from_scratch(const meshsim::mesh::Topology& t, const std::vector<double>& p,
                                  double alpha, double beta, double threshold, double f_mhz) {
  double excess = 0.0, watts = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    watts += std::pow(10.0, p[i] / 10.0) / 1000.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i == j) continue;
      const double d = std::hypot(t.nodes[i].x_m - t.nodes[j].x_m, t.nodes[i].y_m - t.nodes[j].y_m);
      const double loss = 20.0 * std::log10(d) + 20.0 * std::log10(f_mhz) - 27.55;
      const double rx = p[i] + t.nodes[i].g_dbi + t.nodes[j].g_dbi - loss;
      excess += std::max(0.0, rx - threshold);
    }
  }
  return -alpha * excess - beta * watts;
}

/// Standalone LSTM loss 0.5 (y - target)^2 in long double, written from the
/// gate equations rather than shared with the library. Parameter layout:
/// four gate matrices (hidden x (1 + hidden), input column first), four
/// bias vectors, readout weights, readout bias.
inline long double lstm_loss_ld(const std::vector<long double>& p, std::size_t hidden,
                                const std::vector<double>& seq, double target) {
  const std::size_t H = hidden, Z = 1 + hidden;
  auto W = [&](int g, std::size_t u, std::size_t k) { return p[g * H * Z + u * Z + k]; };
  auto B = [&](int g, std::size_t u) { return p[4 * H * Z + g * H + u]; };
  auto sig = [](long double x) { return 1.0L / (1.0L + std::exp(-x)); };
  std::vector<long double> h(H, 0.0L), c(H, 0.0L);
  for (double x : seq) {
    std::vector<long double> hn(H), cn(H);
    for (std::size_t u = 0; u < H; ++u) {
      long double a[4];
      for (int g = 0; g < 4; ++g) {
        a[g] = B(g, u) + W(g, u, 0) * x;
        for (std::size_t k = 0; k < H; ++k) a[g] += W(g, u, 1 + k) * h[k];
      }
      cn[u] = sig(a[0]) * c[u] + sig(a[1]) * std::tanh(a[3]);
      hn[u] = sig(a[2]) * std::tanh(cn[u]);
    }
    h = hn;
    c = cn;
  }
  long double y = p[4 * H * Z + 4 * H + H];
  for (std::size_t u = 0; u < H; ++u) y += p[4 * H * Z + 4 * H + u] * h[u];
  const long double e = y - target;
  return 0.5L * e * e;
}

/// Central difference of lstm_loss_ld in parameter i with step h.
inline double lstm_fd_gradient(const std::vector<double>& params, std::size_t hidden,
                               const std::vector<double>& seq, double target, std::size_t i,
                               long double h) {
  std::vector<long double> p(params.begin(), params.end());
  p[i] = static_cast<long double>(params[i]) + h;
  const long double up = lstm_loss_ld(p, hidden, seq, target);
  p[i] = static_cast<long double>(params[i]) - h;
  const long double down = lstm_loss_ld(p, hidden, seq, target);
  return static_cast<double>((up - down) / (2.0L * h));
}

}  // namespace oracle
