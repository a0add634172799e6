#include "betasched/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "betasched/errors.hpp"
#include "betasched/experiment.hpp"
#include "betasched/rng.hpp"

namespace betasched {

namespace {

namespace fs = std::filesystem;

// Bad flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(const std::string &s, const std::string &flag) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw UsageError(flag + ": '" + s + "' is not a number");
  }
  return v;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

FrequencyBand parse_band(const std::string &s, const std::string &flag) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw UsageError(flag + " expects LO:HI, got '" + s + "'");
  const FrequencyBand b{parse_double(parts[0], flag), parse_double(parts[1], flag)};
  if (!(b.lo >= 0.0 && b.lo < b.hi && b.hi <= 0.5)) {
    throw UsageError(flag + " needs 0 <= LO < HI <= 0.5");
  }
  return b;
}

// "0.3:1.0:0.1" -> 0.3, 0.4, ..., 1.0. Values are rounded to 1e-9 so the
// accumulated step error never produces 0.30000000000000004-style labels.
std::vector<double> parse_range(const std::string &s, const std::string &flag) {
  const auto parts = split(s, ':');
  if (parts.size() == 1) return {parse_double(parts[0], flag)};
  if (parts.size() != 3) throw UsageError(flag + " expects A or START:STOP:STEP");
  const double start = parse_double(parts[0], flag);
  const double stop = parse_double(parts[1], flag);
  const double step = parse_double(parts[2], flag);
  if (!(step > 0.0) || stop < start) {
    throw UsageError(flag + " needs STEP > 0 and STOP >= START");
  }
  std::vector<double> out;
  for (std::int64_t k = 0;; ++k) {
    const double v = start + static_cast<double>(k) * step;
    if (v > stop + 1e-9) break;
    out.push_back(std::round(v * 1e9) / 1e9);
  }
  return out;
}

BetaParams parse_dist_spec(const std::string &s, const std::string &flag) {
  if (s == "uniform") return BetaParams(1.0, 1.0);
  if (s.rfind("beta:", 0) != 0) {
    throw UsageError(flag + " expects beta:A,B or uniform, got '" + s + "'");
  }
  const auto parts = split(s.substr(5), ',');
  if (parts.size() != 2) throw UsageError(flag + " expects beta:A,B");
  const double a = parse_double(parts[0], flag);
  const double b = parse_double(parts[1], flag);
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError(flag + " needs A > 0 and B > 0");
  return BetaParams(a, b);
}

void require_steps(std::int64_t n, std::int64_t total) {
  if (total < 2) throw UsageError("--total-t must be at least 2");
  if (n < 2) throw UsageError("--steps must satisfy n >= 2 (got " + std::to_string(n) + ")");
  if (n > total) {
    throw UsageError("--steps must satisfy n <= T (" + std::to_string(n) + " > " +
                     std::to_string(total) + ")");
  }
}

void require_samples(std::int64_t m) {
  if (m < 1) throw UsageError("--samples must be at least 1");
}

void require_horizon(const TimestepSchedule &s, const GmmDiffusionModel &model,
                     const std::string &what) {
  if (s.total_steps() != model.schedule().total_steps()) {
    throw InvariantError(what + " has total_steps " + std::to_string(s.total_steps()) +
                         " but the model uses " +
                         std::to_string(model.schedule().total_steps()));
  }
}

std::string join_steps(const TimestepSchedule &s) {
  std::string line;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(s.steps()[i]);
  }
  return line;
}

std::string short_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

SampleSet load_reference(const std::string &spec, const GmmDiffusionModel &model,
                         std::size_t samples, std::uint64_t seed) {
  if (spec == "model") return reference_samples(model, samples, seed);
  auto ref = read_sample_file(spec);
  if (ref.dim() != model.dim()) {
    throw DimensionError("reference " + spec + " has dimension " +
                         std::to_string(ref.dim()) + ", model has " +
                         std::to_string(model.dim()));
  }
  return ref;
}

struct ScheduleArgs {
  std::int64_t steps = 0;
  std::int64_t total_t = 1000;
  std::string dist = "beta";
  double alpha = 0.5;
  double beta = 0.5;
  std::string out;
};

int cmd_schedule(const ScheduleArgs &a, std::ostream &out) {
  require_steps(a.steps, a.total_t);
  std::optional<TimestepSchedule> s;
  std::string provenance;
  if (a.dist == "uniform") {
    s = make_uniform_schedule(a.steps, a.total_t);
    provenance = "uniform";
  } else {
    if (!(a.alpha > 0.0) || !(a.beta > 0.0)) {
      throw UsageError("--alpha and --beta must be positive");
    }
    const BetaParams p(a.alpha, a.beta);
    s = make_schedule(a.steps, a.total_t, p);
    provenance = beta_provenance(p);
  }
  if (!a.out.empty()) write_schedule_file(a.out, *s, provenance);
  out << join_steps(*s) << '\n';
  return kExitOk;
}

struct AnalyzeArgs {
  std::vector<std::string> manifests;
  std::int64_t bins = kDefaultBins;
  std::string low = "0:0.1";
  std::string high = "0.25:0.5";
  std::string prefix;
  bool svg = false;
};

int cmd_analyze(const AnalyzeArgs &a, std::ostream &out) {
  if (a.bins < 1) throw UsageError("--bins must be at least 1");
  const auto low = parse_band(a.low, "--low");
  const auto high = parse_band(a.high, "--high");

  std::vector<LoadedTrajectory> trajs;
  for (const auto &m : a.manifests) trajs.push_back(load_trajectory(m));
  const auto res = analyze_trajectories(trajs, static_cast<std::size_t>(a.bins), low, high);

  {
    auto f = open_out(a.prefix + "_profile.csv");
    write_profile_csv(f, res.profiles);
  }
  {
    auto f = open_out(a.prefix + "_heatmap.csv");
    write_heatmap_csv(f, res.heatmap);
  }
  {
    auto f = open_out(a.prefix + "_bands.csv");
    f << "# low_band=" << short_double(low.lo) << ':' << short_double(low.hi) << '\n'
      << "# high_band=" << short_double(high.lo) << ':' << short_double(high.hi) << '\n'
      << "# trajectories=" << trajs.size() << '\n';
    write_band_csv(f, res.heatmap, res.bands);
  }
  if (a.svg) {
    auto f = open_out(a.prefix + "_heatmap.svg");
    write_heatmap_svg(f, res.heatmap);
  }
  out << "analyzed " << trajs.size() << " trajectories, "
      << res.heatmap.n_transitions() << " transitions, " << res.heatmap.n_bins()
      << " bins\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string model;
  std::string schedule;
  std::int64_t samples = 0;
  std::uint64_t seed = 42;
  std::string out;
  std::string dump_dir;
  std::int64_t dump_count = 1;
};

int cmd_simulate(const SimulateArgs &a, std::ostream &out) {
  require_samples(a.samples);
  if (!a.dump_dir.empty() && (a.dump_count < 1 || a.dump_count > a.samples)) {
    throw UsageError("--dump-count must lie in [1, --samples]");
  }
  const auto model = load_model_config(a.model);
  const auto sf = read_schedule_file(a.schedule);
  require_horizon(sf.schedule, model, a.schedule);

  const auto m = static_cast<std::size_t>(a.samples);
  const auto samples = generate_samples(model, sf.schedule, m, a.seed);
  write_sample_file(a.out, samples, model.height(), model.width(),
                    "ddim " + sf.provenance, a.seed);

  if (!a.dump_dir.empty()) {
    const auto noise = initial_noise(model, static_cast<std::size_t>(a.dump_count), a.seed);
    for (std::size_t k = 0; k < noise.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "traj_%03zu", k);
      dump_trajectory(ddim_sample(model, sf.schedule, noise[k]), model.height(),
                      model.width(), fs::path(a.dump_dir) / name);
    }
  }
  out << "wrote " << samples.size() << " samples of dimension " << samples.dim()
      << " to " << a.out << '\n';
  return kExitOk;
}

struct CompareArgs {
  std::string model;
  std::vector<std::string> schedules;
  std::int64_t samples = 2000;
  std::uint64_t seed = 42;
  std::string reference = "model";
  std::int64_t projections = 200;
  std::string out;
};

int cmd_compare(const CompareArgs &a, std::ostream &out) {
  require_samples(a.samples);
  if (a.projections < 1) throw UsageError("--projections must be at least 1");
  const auto model = load_model_config(a.model);

  std::vector<NamedSchedule> named;
  for (const auto &path : a.schedules) {
    auto sf = read_schedule_file(path);
    require_horizon(sf.schedule, model, path);
    named.push_back({fs::path(path).stem().string(), sf.provenance, sf.schedule});
  }
  CompareOptions opt;
  opt.samples = static_cast<std::size_t>(a.samples);
  opt.seed = a.seed;
  opt.projections = static_cast<std::size_t>(a.projections);
  const auto ref = load_reference(a.reference, model, opt.samples, a.seed);
  const auto rows = compare_schedules(model, named, ref, opt);

  auto f = open_out(a.out);
  write_report_csv(f, rows);
  out << "wrote " << rows.size() << " rows to " << a.out << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string model;
  std::string alphas = "0.3:1.0:0.1";
  std::vector<std::int64_t> steps_list{4, 6, 10, 15, 20};
  std::int64_t samples = 2000;
  std::uint64_t seed = 42;
  std::string reference = "model";
  std::int64_t projections = 200;
  std::string out;
};

int cmd_sweep(const SweepArgs &a, std::ostream &out) {
  require_samples(a.samples);
  if (a.projections < 1) throw UsageError("--projections must be at least 1");
  const auto alphas = parse_range(a.alphas, "--alphas");
  for (double al : alphas) {
    if (!(al > 0.0)) throw UsageError("--alphas values must be positive");
  }
  const auto model = load_model_config(a.model);
  const auto total = model.schedule().total_steps();
  for (auto n : a.steps_list) require_steps(n, total);

  std::vector<NamedSchedule> named;
  for (double al : alphas) {
    const BetaParams p(al, al);
    for (auto n : a.steps_list) {
      named.push_back({"beta_" + short_double(al), beta_provenance(p),
                       make_schedule(n, total, p)});
    }
  }
  CompareOptions opt;
  opt.samples = static_cast<std::size_t>(a.samples);
  opt.seed = a.seed;
  opt.projections = static_cast<std::size_t>(a.projections);
  opt.gaussian_metric = false;
  const auto ref = load_reference(a.reference, model, opt.samples, a.seed);
  const auto rows = compare_schedules(model, named, ref, opt);

  auto f = open_out(a.out);
  write_report_csv(f, rows);
  out << "wrote " << rows.size() << " rows to " << a.out << '\n';
  return kExitOk;
}

struct HistogramArgs {
  std::string steps_file;
  std::string ks_against = "beta:0.5,0.5";
  std::string out;
};

int cmd_histogram(const HistogramArgs &a, std::ostream &out) {
  const auto p = parse_dist_spec(a.ks_against, "--ks-against");
  const auto schedules = parse_step_lists(read_text(a.steps_file));
  const auto hist = cumulative_histogram(schedules);
  if (!a.out.empty()) {
    auto f = open_out(a.out);
    write_histogram_csv(f, hist);
  }
  out << std::setprecision(17) << ks_against_beta(hist, p) << '\n';
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Beta-schedule diffusion step scheduling and spectral analysis"};
  app.name("betasched");
  app.require_subcommand(1);

  ScheduleArgs sch;
  auto *c_sch = app.add_subcommand("schedule", "Generate a time-step schedule");
  c_sch->add_option("--steps", sch.steps, "Number of steps n")->required();
  c_sch->add_option("--total-t", sch.total_t, "Training horizon T")->capture_default_str();
  c_sch->add_option("--dist", sch.dist, "Step distribution")
      ->check(CLI::IsMember({"uniform", "beta"}))
      ->capture_default_str();
  c_sch->add_option("--alpha", sch.alpha, "Beta alpha")->capture_default_str();
  c_sch->add_option("--beta", sch.beta, "Beta beta")->capture_default_str();
  c_sch->add_option("--out", sch.out, "Schedule JSON file to write");

  AnalyzeArgs ana;
  auto *c_ana = app.add_subcommand("analyze", "Spectral analysis of trajectories");
  c_ana->add_option("--trajectory", ana.manifests, "Trajectory manifest(s)")
      ->required()
      ->expected(1, -1);
  c_ana->add_option("--bins", ana.bins, "Radial frequency bins")->capture_default_str();
  c_ana->add_option("--low", ana.low, "Low band LO:HI")->capture_default_str();
  c_ana->add_option("--high", ana.high, "High band LO:HI")->capture_default_str();
  c_ana->add_option("--out-prefix", ana.prefix, "Output path prefix")->required();
  c_ana->add_flag("--svg", ana.svg, "Also write an SVG heatmap");

  SimulateArgs sim;
  auto *c_sim = app.add_subcommand("simulate", "Sample the toy model along a schedule");
  c_sim->add_option("--model", sim.model, "Model config JSON")->required();
  c_sim->add_option("--schedule", sim.schedule, "Schedule JSON")->required();
  c_sim->add_option("--samples", sim.samples, "Number of samples")->required();
  c_sim->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  c_sim->add_option("--out", sim.out, "Sample file (float32)")->required();
  c_sim->add_option("--dump-trajectories", sim.dump_dir, "Directory for trajectory dumps");
  c_sim->add_option("--dump-count", sim.dump_count, "Trajectories to dump")
      ->capture_default_str();

  CompareArgs cmp;
  auto *c_cmp = app.add_subcommand("compare", "Compare schedules against a reference");
  c_cmp->add_option("--model", cmp.model, "Model config JSON")->required();
  c_cmp->add_option("--schedules", cmp.schedules, "Schedule JSON files")
      ->required()
      ->expected(1, -1);
  c_cmp->add_option("--samples", cmp.samples, "Samples per schedule")->capture_default_str();
  c_cmp->add_option("--seed", cmp.seed, "Noise and projection seed")->capture_default_str();
  c_cmp->add_option("--reference", cmp.reference, "'model' or a sample file")
      ->capture_default_str();
  c_cmp->add_option("--projections", cmp.projections, "Slicing directions")
      ->capture_default_str();
  c_cmp->add_option("--out", cmp.out, "Report CSV")->required();

  SweepArgs swp;
  auto *c_swp = app.add_subcommand("sweep", "Sweep alpha = beta against step counts");
  c_swp->add_option("--model", swp.model, "Model config JSON")->required();
  c_swp->add_option("--alphas", swp.alphas, "START:STOP:STEP or a single value")
      ->capture_default_str();
  c_swp->add_option("--steps-list", swp.steps_list, "Comma-separated step counts")
      ->delimiter(',')
      ->capture_default_str();
  c_swp->add_option("--samples", swp.samples, "Samples per cell")->capture_default_str();
  c_swp->add_option("--seed", swp.seed, "Noise and projection seed")->capture_default_str();
  c_swp->add_option("--reference", swp.reference, "'model' or a sample file")
      ->capture_default_str();
  c_swp->add_option("--projections", swp.projections, "Slicing directions")
      ->capture_default_str();
  c_swp->add_option("--out", swp.out, "Report CSV")->required();

  HistogramArgs his;
  auto *c_his = app.add_subcommand("histogram", "Step histogram and KS statistic");
  c_his->add_option("--steps-file", his.steps_file, "Step-list document")->required();
  c_his->add_option("--ks-against", his.ks_against, "beta:A,B or uniform")
      ->capture_default_str();
  c_his->add_option("--out", his.out, "Histogram CSV");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_sch->parsed()) return cmd_schedule(sch, out);
    if (c_ana->parsed()) return cmd_analyze(ana, out);
    if (c_sim->parsed()) return cmd_simulate(sim, out);
    if (c_cmp->parsed()) return cmd_compare(cmp, out);
    if (c_swp->parsed()) return cmd_sweep(swp, out);
    if (c_his->parsed()) return cmd_histogram(his, out);
  } catch (const UsageError &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << "error: no command given\n";
  return kExitUsage;
}

} // namespace betasched
