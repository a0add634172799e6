#include "betasched/experiment.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "betasched/errors.hpp"
#include "betasched/rng.hpp"

namespace betasched {

namespace {

void round_to_float(std::vector<double> &v) {
  for (double &x : v) x = static_cast<double>(static_cast<float>(x));
}

} // namespace

std::vector<std::vector<double>> initial_noise(const GmmDiffusionModel &model,
                                               std::size_t count,
                                               std::uint64_t seed) {
  auto rng = make_stream(seed, Stream::kInitialNoise);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(standard_normal(model.dim(), rng));
  }
  return out;
}

SampleSet generate_samples(const GmmDiffusionModel &model,
                           const TimestepSchedule &schedule, std::size_t count,
                           std::uint64_t seed) {
  if (count == 0) throw DomainError("sample count must be at least 1");
  auto rng = make_stream(seed, Stream::kInitialNoise);
  std::vector<double> data;
  data.reserve(count * model.dim());
  for (std::size_t i = 0; i < count; ++i) {
    const auto x_init = standard_normal(model.dim(), rng);
    auto x = ddim_final(model, schedule, x_init);
    round_to_float(x);
    data.insert(data.end(), x.begin(), x.end());
  }
  return SampleSet(model.dim(), std::move(data));
}

SampleSet reference_samples(const GmmDiffusionModel &model, std::size_t count,
                            std::uint64_t seed) {
  if (count == 0) throw DomainError("sample count must be at least 1");
  auto rng = make_stream(seed, Stream::kReferenceSamples);
  std::vector<double> data;
  data.reserve(count * model.dim());
  for (std::size_t i = 0; i < count; ++i) {
    auto x = sample_data(model, rng);
    round_to_float(x);
    data.insert(data.end(), x.begin(), x.end());
  }
  return SampleSet(model.dim(), std::move(data));
}

std::vector<ReportRow> compare_schedules(const GmmDiffusionModel &model,
                                         std::span<const NamedSchedule> schedules,
                                         const SampleSet &reference,
                                         const CompareOptions &options) {
  if (reference.dim() != model.dim()) {
    throw DimensionError("reference samples do not match the model dimension");
  }
  if (reference.size() != options.samples) {
    throw DimensionError("reference holds " + std::to_string(reference.size()) +
                         " samples, expected " + std::to_string(options.samples));
  }
  const SlicedWasserstein swd(model.dim(), options.projections, options.seed);
  const auto ref_sorted = swd.project_sorted(reference);
  const auto ref_fit = fit_isotropic(reference);

  std::vector<ReportRow> rows;
  for (const auto &s : schedules) {
    const auto samples = generate_samples(model, s.schedule, options.samples, options.seed);
    const auto n_steps = static_cast<std::int64_t>(s.schedule.size());
    rows.push_back({s.name, s.provenance, n_steps, kSlicedMetric,
                    swd.distance(swd.project_sorted(samples), ref_sorted),
                    options.seed});
    if (options.gaussian_metric) {
      const auto fit = fit_isotropic(samples);
      rows.push_back({s.name, s.provenance, n_steps, kGaussianMetric,
                      gaussian_w2(fit.mean, fit.sigma, ref_fit.mean, ref_fit.sigma),
                      options.seed});
    }
  }
  return rows;
}

void write_sample_file(const std::string &path, const SampleSet &samples,
                       std::size_t height, std::size_t width,
                       const std::string &provenance, std::uint64_t seed) {
  if (height * width != samples.dim()) {
    throw DimensionError("sample geometry does not match the sample dimension");
  }
  write_f32_le(path, samples.data());
  nlohmann::ordered_json side;
  side["count"] = samples.size();
  side["dim"] = samples.dim();
  side["height"] = height;
  side["width"] = width;
  side["dtype"] = "float32-le";
  side["provenance"] = provenance;
  side["seed"] = seed;
  std::ofstream out(path + ".json", std::ios::binary);
  if (!out) throw IoError("cannot open " + path + ".json for writing");
  out << side.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path + ".json");
}

SampleSet read_sample_file(const std::string &path) {
  std::ifstream in(path + ".json", std::ios::binary);
  if (!in) throw IoError("missing sample sidecar " + path + ".json");
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(0, path + ".json: " + e.what());
  }
  if (!side.contains("count") || !side.contains("dim") ||
      !side["count"].is_number_integer() || !side["dim"].is_number_integer()) {
    throw ParseError(0, path + ".json needs integer 'count' and 'dim'");
  }
  const auto count = side["count"].get<std::size_t>();
  const auto dim = side["dim"].get<std::size_t>();
  auto data = read_f32_le(path);
  if (data.size() != count * dim) {
    throw ParseError(0, path + " does not hold count x dim float32 values");
  }
  return SampleSet(dim, std::move(data));
}

SpectralAnalysis analyze_trajectories(std::span<const LoadedTrajectory> trajectories,
                                      std::size_t n_bins, FrequencyBand low,
                                      FrequencyBand high) {
  if (trajectories.empty()) throw DomainError("no trajectories to analyze");
  const auto &first = trajectories.front().manifest;
  for (const auto &tr : trajectories) {
    const auto &m = tr.manifest;
    if (m.total_steps != first.total_steps) {
      throw InvariantError("trajectories disagree on total_steps");
    }
    if (m.height != first.height || m.width != first.width) {
      throw DimensionError("trajectories disagree on grid size");
    }
    if (m.timesteps != first.timesteps) {
      throw InvariantError("trajectories visit different timesteps");
    }
  }

  SpectralAnalysis out;
  std::vector<SpectralProfile> per_traj(trajectories.size());
  for (std::size_t s = 0; s < first.timesteps.size(); ++s) {
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
      per_traj[k] = rlm(ImageGrid(first.height, first.width, trajectories[k].states[s]),
                        n_bins);
    }
    out.profiles.push_back({first.timesteps[s], average_profiles(per_traj)});
  }
  out.heatmap = delta_heatmap(out.profiles);
  out.bands = band_curves(out.heatmap, low, high);
  return out;
}

LoadedTrajectory as_loaded(const Trajectory &traj, std::size_t height,
                           std::size_t width) {
  LoadedTrajectory out;
  out.manifest.height = height;
  out.manifest.width = width;
  out.manifest.total_steps = traj.schedule.total_steps();
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    out.manifest.timesteps.push_back(traj.step_of(i));
  }
  out.states = traj.states;
  return out;
}

} // namespace betasched
