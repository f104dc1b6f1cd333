#pragma once

// Synthetic per-cell user demand: diurnal modulation, hotspot
// concentration, an optional surge window and truncated Gaussian noise,
// apportioned to integer users per cell without losing any.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace meshsim::traffic {

struct Hotspot {
  double area_fraction = 0.2;  // a: share of cells that are hotspots
  double user_fraction = 0.95;  // p: share of users inside them
};

struct Surge {
  std::int64_t start = 0;  // first tick inside the surge
  std::int64_t end = 0;    // first tick after it
  double multiplier = 1.0;
};

struct TrafficScenario {
  int n_cells = 100;
  std::int64_t duration_ticks = 600;
  double tick_seconds = 1.0;
  std::int64_t day_ticks = 8640;
  double base_users = 1000.0;
  double diurnal_amplitude = 0.0;
  Hotspot hotspot;
  std::optional<Surge> surge;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

/// Throws InvalidScenario naming the offending field.
void validate(const TrafficScenario& s);

class TrafficSeries {
 public:
  TrafficSeries() = default;
  TrafficSeries(int n_cells, std::int64_t n_ticks);

  int n_cells() const { return n_cells_; }
  std::int64_t n_ticks() const { return n_ticks_; }

  std::int64_t users(std::int64_t tick, int cell) const;
  /// Also moves the tick total by the change in this cell.
  void set_users(std::int64_t tick, int cell, std::int64_t users);
  /// Stores a whole tick: the drawn total and its per-cell split, as given.
  void set_tick(std::int64_t tick, std::int64_t total, std::span<const std::int64_t> cells);
  std::span<const std::int64_t> tick_row(std::int64_t tick) const;
  /// The tick total as drawn by the generator (or read), kept apart from
  /// the cells so conservation can be checked rather than assumed.
  std::int64_t total(std::int64_t tick) const;
  std::int64_t cell_sum(std::int64_t tick) const;
  std::vector<double> totals() const;

  /// Cells that received the hotspot share; empty for imported series.
  std::vector<int> hotspot_cells;

 private:
  int n_cells_ = 0;
  std::int64_t n_ticks_ = 0;
  std::vector<std::int64_t> counts_;  // tick-major
  std::vector<std::int64_t> totals_;
};

/// Noise-free expected total at tick t (before integer rounding).
double expected_total(const TrafficScenario& s, std::int64_t tick);

TrafficSeries generate_demand(const TrafficScenario& s);

/// Largest-remainder apportionment of total over the given weights; ties in
/// the remainder go to the lower index.
std::vector<std::int64_t> apportion(std::int64_t total, std::span<const double> weights);

/// Time-averaged share of users in the ceil(a * n_cells) busiest cells.
double concentration_stat(const TrafficSeries& series, double area_fraction);

int hotspot_cell_count(int n_cells, double area_fraction);

void write_csv(std::ostream& out, const TrafficSeries& series);
TrafficSeries read_csv(std::istream& in);

}  // namespace meshsim::traffic
