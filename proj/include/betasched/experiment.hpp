#pragma once

// Pipelines shared by the command-line tool and the acceptance suite: sample
// generation under a schedule, schedule comparison against a reference set,
// and multi-trajectory spectral analysis.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "betasched/metrics.hpp"
#include "betasched/schedule.hpp"
#include "betasched/spectral.hpp"
#include "betasched/toydiff.hpp"
#include "betasched/trajectory_io.hpp"

namespace betasched {

/// Initial noise for sample i of a run seeded with `seed`. All schedules in a
/// comparison start from these same vectors.
std::vector<std::vector<double>> initial_noise(const GmmDiffusionModel &model,
                                               std::size_t count,
                                               std::uint64_t seed);

/// DDIM samples for `count` noise vectors, rounded to float32 precision so
/// that in-memory sets match what sample files store.
SampleSet generate_samples(const GmmDiffusionModel &model,
                           const TimestepSchedule &schedule, std::size_t count,
                           std::uint64_t seed);

/// Exact draws from the model's data distribution, rounded to float32.
SampleSet reference_samples(const GmmDiffusionModel &model, std::size_t count,
                            std::uint64_t seed);

struct NamedSchedule {
  std::string name;
  std::string provenance;
  TimestepSchedule schedule;
};

inline constexpr const char *kSlicedMetric = "swd_sq";
inline constexpr const char *kGaussianMetric = "gauss_w2_sq";

struct CompareOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 42;
  std::size_t projections = 200;
  /// Also report the isotropic-Gaussian W2 between fitted moments.
  bool gaussian_metric = true;
};

/// One report row per schedule per metric. The reference set must hold
/// `options.samples` vectors of the model's dimension.
std::vector<ReportRow> compare_schedules(const GmmDiffusionModel &model,
                                         std::span<const NamedSchedule> schedules,
                                         const SampleSet &reference,
                                         const CompareOptions &options);

/// Sample file: raw float32 (count x dim) plus a JSON sidecar at path + ".json".
void write_sample_file(const std::string &path, const SampleSet &samples,
                       std::size_t height, std::size_t width,
                       const std::string &provenance, std::uint64_t seed);
SampleSet read_sample_file(const std::string &path);

struct SpectralAnalysis {
  std::vector<TimedProfile> profiles;
  DeltaHeatmap heatmap;
  BandCurves bands;
};

/// Averages RLM profiles step by step across trajectories, then differences
/// the averaged profiles. All trajectories must share geometry, horizon and
/// timesteps.
SpectralAnalysis analyze_trajectories(std::span<const LoadedTrajectory> trajectories,
                                      std::size_t n_bins, FrequencyBand low,
                                      FrequencyBand high);

/// In-memory view of a sampled trajectory in the on-disk layout.
LoadedTrajectory as_loaded(const Trajectory &traj, std::size_t height,
                           std::size_t width);

} // namespace betasched
