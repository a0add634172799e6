#include "betasched/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "betasched/errors.hpp"

namespace betasched {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_int(std::string_view s, std::int64_t &out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_shape(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

} // namespace

NormalizedGrid::NormalizedGrid(std::vector<double> points)
    : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw InvariantError("normalized grid needs at least two points");
  }
  if (points_.front() != 0.0 || points_.back() != 1.0) {
    throw InvariantError("normalized grid must start at 0 and end at 1");
  }
  // Non-decreasing rather than strict: extreme shapes saturate several
  // quantiles to the same double next to 0 or 1, and quantize() separates them.
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] >= points_[i - 1])) {
      throw InvariantError("normalized grid must be ascending");
    }
  }
}

TimestepSchedule::TimestepSchedule(std::int64_t total_steps,
                                   std::vector<std::int64_t> steps)
    : total_steps_(total_steps), steps_(std::move(steps)) {
  if (total_steps_ < 1) {
    throw InvariantError("total_steps must be positive");
  }
  if (steps_.empty()) {
    throw InvariantError("schedule must contain at least one step");
  }
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (steps_[i] < 0 || steps_[i] >= total_steps_) {
      throw InvariantError("step " + std::to_string(steps_[i]) +
                           " outside [0, " + std::to_string(total_steps_ - 1) +
                           "]");
    }
    if (i > 0 && steps_[i] <= steps_[i - 1]) {
      throw InvariantError("steps must be strictly increasing (" +
                           std::to_string(steps_[i - 1]) + " then " +
                           std::to_string(steps_[i]) + ")");
    }
  }
}

bool TimestepSchedule::spans_full_range() const noexcept {
  return steps_.front() == 0 && steps_.back() == total_steps_ - 1;
}

NormalizedGrid uniform_grid(std::int64_t n) {
  if (n < 2) {
    throw DomainError("uniform grid needs n >= 2, got " + std::to_string(n));
  }
  std::vector<double> points(static_cast<std::size_t>(n));
  const double denom = static_cast<double>(n - 1);
  for (std::int64_t i = 0; i < n; ++i) {
    points[static_cast<std::size_t>(i)] = static_cast<double>(i) / denom;
  }
  return NormalizedGrid(std::move(points));
}

NormalizedGrid beta_transform(const NormalizedGrid &grid, const BetaParams &p) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid.points()) out.push_back(beta_inv_cdf(x, p));
  return NormalizedGrid(std::move(out));
}

TimestepSchedule quantize(const NormalizedGrid &grid, std::int64_t total_steps) {
  const auto n = static_cast<std::int64_t>(grid.size());
  if (total_steps < n) {
    throw InfeasibleError("cannot place " + std::to_string(n) +
                          " distinct steps in a horizon of " +
                          std::to_string(total_steps));
  }
  const double scale = static_cast<double>(total_steps - 1);
  std::vector<std::int64_t> steps;
  steps.reserve(grid.size());
  for (double x : grid.points()) {
    // std::round rounds halfway cases away from zero.
    auto v = static_cast<std::int64_t>(std::round(x * scale));
    if (!steps.empty() && v <= steps.back()) v = steps.back() + 1;
    steps.push_back(v);
  }
  if (steps.back() > total_steps - 1) {
    steps.back() = total_steps - 1;
    for (std::size_t i = steps.size() - 1; i-- > 0;) {
      steps[i] = std::min(steps[i], steps[i + 1] - 1);
    }
  }
  return TimestepSchedule(total_steps, std::move(steps));
}

TimestepSchedule make_schedule(std::int64_t n, std::int64_t total_steps,
                               const BetaParams &p) {
  if (n < 2 || n > total_steps) {
    throw DomainError("schedule size must satisfy 2 <= n <= T, got n=" +
                      std::to_string(n) + ", T=" + std::to_string(total_steps));
  }
  return quantize(beta_transform(uniform_grid(n), p), total_steps);
}

TimestepSchedule make_uniform_schedule(std::int64_t n, std::int64_t total_steps) {
  if (n < 2 || n > total_steps) {
    throw DomainError("schedule size must satisfy 2 <= n <= T, got n=" +
                      std::to_string(n) + ", T=" + std::to_string(total_steps));
  }
  return quantize(uniform_grid(n), total_steps);
}

std::vector<TimestepSchedule> parse_step_lists(std::string_view text) {
  std::vector<TimestepSchedule> out;
  std::int64_t total_steps = 0;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (!have_header) {
      if (line.size() < 3 || line.substr(0, 2) != "T=" ||
          !parse_int(line.substr(2), total_steps)) {
        throw ParseError(line_no, "expected header 'T=<integer>'");
      }
      if (total_steps < 1) {
        throw ParseError(line_no, "T must be positive");
      }
      have_header = true;
      continue;
    }

    std::vector<std::int64_t> steps;
    std::size_t field_start = 0;
    while (true) {
      const auto comma = line.find(',', field_start);
      const auto field = line.substr(field_start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - field_start);
      std::int64_t v = 0;
      if (!parse_int(field, v)) {
        throw ParseError(line_no, "malformed step value '" +
                                      std::string(trim(field)) + "'");
      }
      steps.push_back(v);
      if (comma == std::string_view::npos) break;
      field_start = comma + 1;
    }
    try {
      out.emplace_back(total_steps, std::move(steps));
    } catch (const InvariantError &e) {
      throw InvariantError(line_no, e.what());
    }
  }
  if (!have_header) {
    throw ParseError(line_no, "missing header 'T=<integer>'");
  }
  return out;
}

StepHistogram cumulative_histogram(std::span<const TimestepSchedule> schedules) {
  if (schedules.empty()) {
    throw DomainError("cumulative histogram needs at least one schedule");
  }
  StepHistogram h;
  h.total_steps = schedules.front().total_steps();
  h.counts.assign(static_cast<std::size_t>(h.total_steps), 0);
  for (const auto &s : schedules) {
    if (s.total_steps() != h.total_steps) {
      throw InvariantError("schedules disagree on total_steps (" +
                           std::to_string(h.total_steps) + " vs " +
                           std::to_string(s.total_steps()) + ")");
    }
    for (auto t : s.steps()) ++h.counts[static_cast<std::size_t>(t)];
  }
  h.cumulative.resize(h.counts.size());
  std::int64_t running = 0;
  for (std::size_t t = 0; t < h.counts.size(); ++t) {
    running += h.counts[t];
    h.cumulative[t] = running;
  }
  return h;
}

double ks_against_beta(const StepHistogram &hist, const BetaParams &p) {
  const auto total = hist.total();
  if (total <= 0) {
    throw DomainError("KS statistic of an empty histogram");
  }
  const auto T = static_cast<double>(hist.total_steps);
  double d = 0.0;
  for (std::size_t t = 0; t < hist.cumulative.size(); ++t) {
    const double empirical =
        static_cast<double>(hist.cumulative[t]) / static_cast<double>(total);
    const double model = beta_cdf(std::min(1.0, static_cast<double>(t + 1) / T), p);
    d = std::max(d, std::fabs(empirical - model));
  }
  return d;
}

std::string schedule_to_json(const TimestepSchedule &schedule,
                             const std::string &provenance) {
  nlohmann::ordered_json j;
  j["total_steps"] = schedule.total_steps();
  j["steps"] = schedule.steps();
  j["provenance"] = provenance;
  return j.dump() + "\n";
}

ScheduleFile schedule_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(0, std::string("schedule file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("total_steps") || !j.contains("steps")) {
    throw ParseError(0, "schedule file needs 'total_steps' and 'steps'");
  }
  if (!j["total_steps"].is_number_integer() || !j["steps"].is_array()) {
    throw ParseError(0, "schedule file has mistyped fields");
  }
  std::vector<std::int64_t> steps;
  for (const auto &v : j["steps"]) {
    if (!v.is_number_integer()) {
      throw ParseError(0, "schedule steps must be integers");
    }
    steps.push_back(v.get<std::int64_t>());
  }
  std::string provenance;
  if (j.contains("provenance")) {
    if (!j["provenance"].is_string()) {
      throw ParseError(0, "schedule provenance must be a string");
    }
    provenance = j["provenance"].get<std::string>();
  }
  return {TimestepSchedule(j["total_steps"].get<std::int64_t>(), std::move(steps)),
          std::move(provenance)};
}

void write_schedule_file(const std::string &path,
                         const TimestepSchedule &schedule,
                         const std::string &provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << schedule_to_json(schedule, provenance);
  if (!out) throw IoError("failed writing " + path);
}

ScheduleFile read_schedule_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open schedule file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return schedule_from_json(ss.str());
}

void write_histogram_csv(std::ostream &out, const StepHistogram &hist) {
  out << "t,count,cumulative\n";
  for (std::size_t t = 0; t < hist.counts.size(); ++t) {
    out << t << ',' << hist.counts[t] << ',' << hist.cumulative[t] << '\n';
  }
}

std::string beta_provenance(const BetaParams &p) {
  return "beta:" + format_shape(p.alpha()) + "," + format_shape(p.beta());
}

} // namespace betasched
