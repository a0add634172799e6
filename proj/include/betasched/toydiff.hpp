#pragma once

// A diffusion model whose denoiser is exact: data are an isotropic Gaussian
// mixture in pixel space, so E[x_0 | x_t] has a closed form at every noise
// level and the only approximation left in sampling is the choice of steps.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "betasched/schedule.hpp"

namespace betasched {

/// DDPM forward-process coefficients for steps 0..T-1.
class NoiseSchedule {
public:
  explicit NoiseSchedule(std::vector<double> betas);

  std::int64_t total_steps() const noexcept {
    return static_cast<std::int64_t>(betas_.size());
  }
  const std::vector<double> &betas() const noexcept { return betas_; }
  const std::vector<double> &alpha_bars() const noexcept { return alpha_bars_; }
  double alpha_bar(std::int64_t t) const {
    return alpha_bars_.at(static_cast<std::size_t>(t));
  }

private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

/// Betas spaced linearly from beta_start to beta_end, both inclusive.
NoiseSchedule linear_schedule(std::int64_t total_steps, double beta_start = 1e-4,
                              double beta_end = 0.02);

struct MixtureComponent {
  double weight;
  std::vector<double> mean;
  double sigma;
};

class GmmDiffusionModel {
public:
  GmmDiffusionModel(std::size_t height, std::size_t width,
                    std::vector<MixtureComponent> components,
                    NoiseSchedule schedule);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return height_ * width_; }
  const std::vector<MixtureComponent> &components() const noexcept {
    return components_;
  }
  const NoiseSchedule &schedule() const noexcept { return schedule_; }

private:
  std::size_t height_;
  std::size_t width_;
  std::vector<MixtureComponent> components_;
  NoiseSchedule schedule_;
};

/// E[x_0 | x_t] under the mixture. Responsibilities are normalized in log
/// space, so very distant components underflow harmlessly to zero weight.
std::vector<double> posterior_x0(const GmmDiffusionModel &model,
                                 std::span<const double> x_t, std::int64_t t);

/// Predicted noise (x_t - sqrt(abar_t) x0_hat) / sqrt(1 - abar_t).
std::vector<double> eps_hat(const GmmDiffusionModel &model,
                            std::span<const double> x_t, std::int64_t t);

/// States visited by a sampler: one per schedule step in descending t, plus
/// the final x_0 estimate.
struct Trajectory {
  TimestepSchedule schedule;
  std::vector<std::vector<double>> states;

  /// Step label for states[i]; the final estimate is labelled -1.
  std::int64_t step_of(std::size_t i) const;
};

/// Deterministic DDIM (eta = 0) over the schedule, visited high t to low t.
/// The last visited step returns x0_hat instead of taking another update.
Trajectory ddim_sample(const GmmDiffusionModel &model,
                       const TimestepSchedule &schedule,
                       std::span<const double> x_init);

/// Same update as ddim_sample but keeps only the final estimate.
std::vector<double> ddim_final(const GmmDiffusionModel &model,
                               const TimestepSchedule &schedule,
                               std::span<const double> x_init);

/// Exact draw from the data distribution.
std::vector<double> sample_data(const GmmDiffusionModel &model,
                                std::mt19937_64 &rng);

/// Standard-normal vector of the model's dimension.
std::vector<double> standard_normal(std::size_t dim, std::mt19937_64 &rng);

/// Builds a model from the JSON config format:
///
///     {"height": 64, "width": 64,
///      "noise": {"total_steps": 1000, "beta_start": 1e-4, "beta_end": 0.02},
///      "components": [{"weight": 0.5, "sigma": 0.2,
///                      "mean": {"offset": 0.5,
///                               "cosines": [{"fu": 1, "fv": 2, "amp": 0.4,
///                                            "phase": 0.0}],
///                               "patch": {"row": 8, "col": 40, "size": 16,
///                                         "fu": 20, "fv": 24, "amp": 0.3}}},
///                     {"weight": 0.5, "sigma": 0.2, "mean": [ ... H*W ... ]}]}
///
/// Cosine frequencies are in cycles per image. The patch is a square window
/// of a cosine texture added on top of the smooth part.
GmmDiffusionModel parse_model_config(const std::string &json_text);
GmmDiffusionModel load_model_config(const std::string &path);

} // namespace betasched
