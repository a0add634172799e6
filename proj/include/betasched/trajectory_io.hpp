#pragma once

// On-disk trajectory format shared with external exporters.
//
// A trajectory directory holds `manifest.json`
//
//     {"height": H, "width": W, "total_steps": T,
//      "timesteps": [999, ..., 0, -1], "files": ["state_000.f32", ...]}
//
// and one raw little-endian float32 file of exactly H*W values per entry of
// "timesteps". Paths in "files" are relative to the manifest. The trailing -1
// marks the final x_0 estimate.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "betasched/toydiff.hpp"

namespace betasched {

struct TrajectoryManifest {
  std::size_t height = 0;
  std::size_t width = 0;
  std::int64_t total_steps = 0;
  std::vector<std::int64_t> timesteps;
  std::vector<std::string> files;
  std::string provenance;
};

struct LoadedTrajectory {
  TrajectoryManifest manifest;
  /// One row-major grid per timestep, widened from float32.
  std::vector<std::vector<double>> states;
};

/// Writes manifest.json plus one grid file per state into `directory`
/// (created if needed). Returns the manifest path.
std::filesystem::path dump_trajectory(const Trajectory &traj, std::size_t height,
                                      std::size_t width,
                                      const std::filesystem::path &directory);

/// Reads and validates a manifest and all grid files it lists.
LoadedTrajectory load_trajectory(const std::filesystem::path &manifest_path);

/// Raw little-endian float32 helpers, also used for sample files.
void write_f32_le(const std::filesystem::path &path, std::span<const double> values);
std::vector<double> read_f32_le(const std::filesystem::path &path);

} // namespace betasched
