#include "meshsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "meshsim/errors.hpp"
#include "meshsim/io.hpp"
#include "meshsim/rng.hpp"

namespace meshsim::traffic {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw InvalidScenario("traffic scenario field '" + field + "': " + why);
}

}  // namespace

void validate(const TrafficScenario& s) {
  if (s.n_cells < 1) invalid("n_cells", "must be >= 1");
  if (s.duration_ticks < 1) invalid("duration_ticks", "must be >= 1");
  if (!(s.tick_seconds > 0.0)) invalid("tick_seconds", "must be positive");
  if (s.day_ticks < 1) invalid("day_ticks", "must be >= 1");
  if (!(s.base_users >= 0.0)) invalid("base_users", "must be non-negative");
  if (!(s.diurnal_amplitude >= 0.0 && s.diurnal_amplitude < 1.0)) {
    invalid("diurnal_amplitude", "must lie in [0, 1)");
  }
  const auto& h = s.hotspot;
  if (!(h.area_fraction > 0.0 && h.area_fraction < 1.0)) {
    invalid("hotspot.area_fraction", "must lie in (0, 1)");
  }
  if (!(h.user_fraction >= h.area_fraction && h.user_fraction <= 1.0)) {
    invalid("hotspot.user_fraction", "must lie in [area_fraction, 1]");
  }
  if (s.surge) {
    if (!(s.surge->multiplier >= 1.0)) invalid("surge.multiplier", "must be >= 1");
    if (s.surge->start < 0 || s.surge->end <= s.surge->start) {
      invalid("surge.start/end", "need 0 <= start < end");
    }
  }
  if (!(s.noise_sigma >= 0.0)) invalid("noise_sigma", "must be non-negative");
}

TrafficSeries::TrafficSeries(int n_cells, std::int64_t n_ticks)
    : n_cells_(n_cells),
      n_ticks_(n_ticks),
      counts_(static_cast<std::size_t>(n_cells) * static_cast<std::size_t>(n_ticks), 0),
      totals_(static_cast<std::size_t>(n_ticks), 0) {}

std::int64_t TrafficSeries::users(std::int64_t tick, int cell) const {
  return counts_.at(static_cast<std::size_t>(tick * n_cells_ + cell));
}

void TrafficSeries::set_users(std::int64_t tick, int cell, std::int64_t users) {
  if (users < 0) throw InvalidScenario("user counts must be non-negative");
  auto& slot = counts_.at(static_cast<std::size_t>(tick * n_cells_ + cell));
  totals_.at(static_cast<std::size_t>(tick)) += users - slot;
  slot = users;
}

void TrafficSeries::set_tick(std::int64_t tick, std::int64_t total, std::span<const std::int64_t> cells) {
  if (cells.size() != static_cast<std::size_t>(n_cells_)) {
    throw InvalidScenario("tick row has " + std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(n_cells_));
  }
  if (total < 0) throw InvalidScenario("user counts must be non-negative");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c] < 0) throw InvalidScenario("user counts must be non-negative");
    counts_.at(static_cast<std::size_t>(tick * n_cells_) + c) = cells[c];
  }
  totals_.at(static_cast<std::size_t>(tick)) = total;
}

std::span<const std::int64_t> TrafficSeries::tick_row(std::int64_t tick) const {
  return {counts_.data() + tick * n_cells_, static_cast<std::size_t>(n_cells_)};
}

std::int64_t TrafficSeries::total(std::int64_t tick) const {
  return totals_.at(static_cast<std::size_t>(tick));
}

std::int64_t TrafficSeries::cell_sum(std::int64_t tick) const {
  const auto row = tick_row(tick);
  return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

std::vector<double> TrafficSeries::totals() const {
  std::vector<double> out(static_cast<std::size_t>(n_ticks_));
  for (std::int64_t t = 0; t < n_ticks_; ++t) out[static_cast<std::size_t>(t)] = static_cast<double>(total(t));
  return out;
}

int hotspot_cell_count(int n_cells, double area_fraction) {
  // The epsilon keeps e.g. 0.2 * 10 from rounding up to 3.
  const int h = static_cast<int>(std::ceil(area_fraction * n_cells - 1e-9));
  return std::clamp(h, 1, n_cells);
}

double expected_total(const TrafficScenario& s, std::int64_t tick) {
  double v = s.base_users *
             (1.0 + s.diurnal_amplitude *
                        std::sin(2.0 * std::numbers::pi * static_cast<double>(tick) /
                                 static_cast<double>(s.day_ticks)));
  if (s.surge && tick >= s.surge->start && tick < s.surge->end) v *= s.surge->multiplier;
  return v;
}

std::vector<std::int64_t> apportion(std::int64_t total, std::span<const double> weights) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> out(weights.size(), 0);
  if (total <= 0 || weights.empty() || !(wsum > 0.0)) return out;
  // Remainders are ranked on a 1e-9 grid so that quotas which tie exactly in
  // rational arithmetic (e.g. 19 * 11980 / 60 and 11980 / 60) still tie after
  // floating-point rounding and fall to the lower index.
  std::vector<std::int64_t> frac(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double quota = static_cast<double>(total) * weights[c] / wsum;
    const double fl = std::floor(quota);
    out[c] = static_cast<std::int64_t>(fl);
    frac[c] = std::llround((quota - fl) * 1e9);
    assigned += out[c];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  // At most one unit per cell is missing; the cycling and the reverse pass
  // only matter if rounding in the quotas pushed a floor across an integer.
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % order.size()]];
  for (std::size_t k = order.size(); assigned > total && k > 0;) {
    auto& v = out[order[--k]];
    if (v > 0) {
      --v;
      --assigned;
    }
  }
  return out;
}

TrafficSeries generate_demand(const TrafficScenario& s) {
  validate(s);
  Rng rng(s.seed);
  TrafficSeries series(s.n_cells, s.duration_ticks);

  // Hotspot cells: the first h entries of a seeded permutation.
  const int h = hotspot_cell_count(s.n_cells, s.hotspot.area_fraction);
  std::vector<int> perm(static_cast<std::size_t>(s.n_cells));
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[rng.index(k)]);
  series.hotspot_cells.assign(perm.begin(), perm.begin() + h);
  std::sort(series.hotspot_cells.begin(), series.hotspot_cells.end());

  std::vector<double> weights(static_cast<std::size_t>(s.n_cells));
  const int rest = s.n_cells - h;
  for (int c = 0; c < s.n_cells; ++c) {
    weights[static_cast<std::size_t>(c)] =
        rest > 0 ? (1.0 - s.hotspot.user_fraction) / rest : 0.0;
  }
  for (int c : series.hotspot_cells) {
    weights[static_cast<std::size_t>(c)] = rest > 0 ? s.hotspot.user_fraction / h : 1.0 / h;
  }

  for (std::int64_t t = 0; t < s.duration_ticks; ++t) {
    double v = expected_total(s, t);
    if (s.noise_sigma > 0.0) v *= 1.0 + std::max(-1.0, s.noise_sigma * rng.normal());
    const auto total = static_cast<std::int64_t>(std::llround(std::max(0.0, v)));
    series.set_tick(t, total, apportion(total, weights));
  }
  return series;
}

double concentration_stat(const TrafficSeries& series, double area_fraction) {
  if (!(area_fraction > 0.0 && area_fraction < 1.0)) {
    throw DomainError("concentration_stat: area_fraction must lie in (0, 1)");
  }
  const int h = hotspot_cell_count(series.n_cells(), area_fraction);
  double sum = 0.0;
  std::int64_t counted = 0;
  std::vector<std::int64_t> row;
  for (std::int64_t t = 0; t < series.n_ticks(); ++t) {
    const auto r = series.tick_row(t);
    row.assign(r.begin(), r.end());
    const auto total = std::accumulate(row.begin(), row.end(), std::int64_t{0});
    if (total == 0) continue;
    std::partial_sort(row.begin(), row.begin() + h, row.end(), std::greater<>());
    const auto top = std::accumulate(row.begin(), row.begin() + h, std::int64_t{0});
    sum += static_cast<double>(top) / static_cast<double>(total);
    ++counted;
  }
  return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

void write_csv(std::ostream& out, const TrafficSeries& series) {
  io::CsvWriter csv(out);
  csv.header({"tick", "cell_id", "users"});
  for (std::int64_t t = 0; t < series.n_ticks(); ++t) {
    for (int c = 0; c < series.n_cells(); ++c) {
      csv.cell(t).cell(c).cell(series.users(t, c));
      csv.end_row();
    }
  }
}

TrafficSeries read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || io::trim(line) != "tick,cell_id,users") {
    throw FormatError("traffic CSV must start with 'tick,cell_id,users'");
  }
  struct Row {
    std::int64_t tick;
    int cell;
    std::int64_t users;
  };
  std::vector<Row> rows;
  std::int64_t max_tick = -1;
  int max_cell = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    const auto f = io::split(io::trim(line), ',');
    const std::string where = "traffic CSV line " + std::to_string(line_no);
    if (f.size() != 3) throw FormatError(where + ": expected 3 fields");
    Row r{io::parse_int(f[0], where), static_cast<int>(io::parse_int(f[1], where)),
          io::parse_int(f[2], where)};
    if (r.tick < 0 || r.cell < 0 || r.users < 0) throw FormatError(where + ": negative value");
    max_tick = std::max(max_tick, r.tick);
    max_cell = std::max(max_cell, r.cell);
    rows.push_back(r);
  }
  if (rows.empty()) throw FormatError("traffic CSV has no rows");
  TrafficSeries s(max_cell + 1, max_tick + 1);
  if (rows.size() != static_cast<std::size_t>((max_tick + 1) * (max_cell + 1))) {
    throw FormatError("traffic CSV does not cover every (tick, cell) pair exactly once");
  }
  for (const auto& r : rows) s.set_users(r.tick, r.cell, r.users);
  return s;
}

}  // namespace meshsim::traffic
