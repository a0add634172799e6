#pragma once

// Time-step schedules: uniform grids on [0, 1], their image under the Beta
// quantile function, quantization onto the integer steps {0, ..., T-1}, and
// occurrence histograms of externally supplied step lists.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "betasched/specfun.hpp"

namespace betasched {

/// Non-decreasing points in [0, 1] that start at 0 and end at 1.
class NormalizedGrid {
public:
  explicit NormalizedGrid(std::vector<double> points);

  const std::vector<double> &points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }

private:
  std::vector<double> points_;
};

/// Strictly increasing integer time steps drawn from {0, ..., total_steps-1}.
///
/// Schedules produced by make_schedule() always contain both 0 and
/// total_steps - 1; ingested step lists and hand-built schedules only need to
/// be non-empty, strictly increasing and in range.
class TimestepSchedule {
public:
  TimestepSchedule(std::int64_t total_steps, std::vector<std::int64_t> steps);

  std::int64_t total_steps() const noexcept { return total_steps_; }
  const std::vector<std::int64_t> &steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_.size(); }

  /// True when the first step is 0 and the last is total_steps - 1.
  bool spans_full_range() const noexcept;

  bool operator==(const TimestepSchedule &) const = default;

private:
  std::int64_t total_steps_;
  std::vector<std::int64_t> steps_;
};

/// Per-step occurrence counts over a family of schedules.
struct StepHistogram {
  std::int64_t total_steps = 0;
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> cumulative;

  std::int64_t total() const noexcept {
    return cumulative.empty() ? 0 : cumulative.back();
  }
};

/// i / (n - 1) for i = 0..n-1.
NormalizedGrid uniform_grid(std::int64_t n);

/// Pointwise Beta quantile transform of a grid.
NormalizedGrid beta_transform(const NormalizedGrid &grid, const BetaParams &p);

/// Maps x to round(x * (T - 1)), ties away from zero. A point that collides
/// with its predecessor is pushed up to the next free integer; if that runs
/// past T - 1 the tail is pulled back down so the last step stays at T - 1.
TimestepSchedule quantize(const NormalizedGrid &grid, std::int64_t total_steps);

/// quantize(beta_transform(uniform_grid(n), p), total_steps).
TimestepSchedule make_schedule(std::int64_t n, std::int64_t total_steps,
                               const BetaParams &p);

/// Uniformly spaced schedule; identical to make_schedule with Beta(1, 1).
TimestepSchedule make_uniform_schedule(std::int64_t n, std::int64_t total_steps);

/// Parses the plain-text step-list document:
///
///     # comment
///     T=1000
///     0,146,500,853,999
///
/// Throws ParseError for malformed lines and InvariantError for step lists
/// that break schedule invariants; both carry the 1-based line number.
std::vector<TimestepSchedule> parse_step_lists(std::string_view text);

/// Counts how many schedules visit each step.
StepHistogram cumulative_histogram(std::span<const TimestepSchedule> schedules);

/// Kolmogorov-Smirnov distance max_t |C(t) - F((t + 1) / T)| between the
/// normalized cumulative histogram and a Beta CDF.
double ks_against_beta(const StepHistogram &hist, const BetaParams &p);

/// Schedule file: {"total_steps": T, "steps": [...], "provenance": "..."}.
struct ScheduleFile {
  TimestepSchedule schedule;
  std::string provenance;
};

std::string schedule_to_json(const TimestepSchedule &schedule,
                             const std::string &provenance);
ScheduleFile schedule_from_json(std::string_view text);

void write_schedule_file(const std::string &path,
                         const TimestepSchedule &schedule,
                         const std::string &provenance);
ScheduleFile read_schedule_file(const std::string &path);

/// Histogram CSV with header `t,count,cumulative`.
void write_histogram_csv(std::ostream &out, const StepHistogram &hist);

/// Provenance tag for generated schedules, e.g. "beta:0.5,0.5" or "uniform".
std::string beta_provenance(const BetaParams &p);

} // namespace betasched
