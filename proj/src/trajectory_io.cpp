#include "betasched/trajectory_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "betasched/errors.hpp"

namespace betasched {

namespace fs = std::filesystem;

void write_f32_le(const fs::path &path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) {
      bytes[4 * i + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> read_f32_le(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) {
    throw ParseError(0, path.string() + " is not a whole number of float32 values");
  }
  std::vector<double> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(
                  static_cast<unsigned char>(bytes[4 * i + static_cast<std::size_t>(b)]))
              << (8 * b);
    }
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return values;
}

fs::path dump_trajectory(const Trajectory &traj, std::size_t height,
                         std::size_t width, const fs::path &directory) {
  if (height * width == 0 || traj.states.empty() ||
      traj.states.front().size() != height * width) {
    throw DimensionError("trajectory states do not match a " +
                         std::to_string(height) + "x" + std::to_string(width) +
                         " grid");
  }
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  nlohmann::ordered_json manifest;
  manifest["height"] = height;
  manifest["width"] = width;
  manifest["total_steps"] = traj.schedule.total_steps();
  std::vector<std::int64_t> timesteps;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "state_%03zu.f32", i);
    write_f32_le(directory / name, traj.states[i]);
    timesteps.push_back(traj.step_of(i));
    files.emplace_back(name);
  }
  manifest["timesteps"] = timesteps;
  manifest["files"] = files;
  manifest["provenance"] = "betasched ddim";

  const auto path = directory / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
  return path;
}

LoadedTrajectory load_trajectory(const fs::path &manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error &e) {
    throw ParseError(0, manifest_path.string() + ": " + e.what());
  }
  const auto bad = [&](const std::string &what) {
    return ParseError(0, manifest_path.string() + ": " + what);
  };
  for (const char *key : {"height", "width", "total_steps"}) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
      throw bad(std::string("missing integer field '") + key + "'");
    }
  }
  if (!j.contains("timesteps") || !j["timesteps"].is_array() ||
      !j.contains("files") || !j["files"].is_array()) {
    throw bad("needs 'timesteps' and 'files' arrays");
  }

  LoadedTrajectory out;
  auto &m = out.manifest;
  const auto h = j["height"].get<std::int64_t>();
  const auto w = j["width"].get<std::int64_t>();
  m.total_steps = j["total_steps"].get<std::int64_t>();
  if (h <= 0 || w <= 0 || m.total_steps <= 0) {
    throw bad("dimensions and total_steps must be positive");
  }
  m.height = static_cast<std::size_t>(h);
  m.width = static_cast<std::size_t>(w);
  for (const auto &t : j["timesteps"]) {
    if (!t.is_number_integer()) throw bad("timesteps must be integers");
    m.timesteps.push_back(t.get<std::int64_t>());
  }
  for (const auto &f : j["files"]) {
    if (!f.is_string()) throw bad("files must be strings");
    m.files.push_back(f.get<std::string>());
  }
  if (j.contains("provenance") && j["provenance"].is_string()) {
    m.provenance = j["provenance"].get<std::string>();
  }
  if (m.timesteps.empty() || m.timesteps.size() != m.files.size()) {
    throw bad("timesteps and files must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < m.timesteps.size(); ++i) {
    const auto t = m.timesteps[i];
    if (t < -1 || t >= m.total_steps) throw bad("timestep out of range");
    if (i > 0 && !(t < m.timesteps[i - 1])) {
      throw bad("timesteps must be strictly descending");
    }
  }

  const auto base = manifest_path.parent_path();
  for (const auto &name : m.files) {
    auto grid = read_f32_le(base / name);
    if (grid.size() != m.height * m.width) {
      throw bad(name + " holds " + std::to_string(grid.size()) +
                " values, expected " + std::to_string(m.height * m.width));
    }
    out.states.push_back(std::move(grid));
  }
  return out;
}

} // namespace betasched
