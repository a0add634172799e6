#include "betasched/toydiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "betasched/errors.hpp"

namespace betasched {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.size() < 2) throw DomainError("noise schedule needs T >= 2");
  alpha_bars_.resize(betas_.size());
  double prod = 1.0;
  for (std::size_t t = 0; t < betas_.size(); ++t) {
    if (!(betas_[t] > 0.0 && betas_[t] < 1.0)) {
      throw DomainError("noise schedule betas must lie in (0, 1)");
    }
    prod *= 1.0 - betas_[t];
    alpha_bars_[t] = prod;
  }
  if (!(alpha_bars_.back() > 0.0)) {
    throw DomainError("cumulative alpha underflows to zero");
  }
}

NoiseSchedule linear_schedule(std::int64_t total_steps, double beta_start,
                              double beta_end) {
  if (total_steps < 2) throw DomainError("linear schedule needs T >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw DomainError("linear schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(total_steps));
  const double denom = static_cast<double>(total_steps - 1);
  for (std::int64_t t = 0; t < total_steps; ++t) {
    const double frac = static_cast<double>(t) / denom;
    betas[static_cast<std::size_t>(t)] = beta_start + frac * (beta_end - beta_start);
  }
  return NoiseSchedule(std::move(betas));
}

GmmDiffusionModel::GmmDiffusionModel(std::size_t height, std::size_t width,
                                     std::vector<MixtureComponent> components,
                                     NoiseSchedule schedule)
    : height_(height), width_(width), components_(std::move(components)),
      schedule_(std::move(schedule)) {
  if (height_ == 0 || width_ == 0) throw DimensionError("model grid is empty");
  if (components_.empty()) throw InvariantError("mixture has no components");
  double total = 0.0;
  for (const auto &c : components_) {
    if (!(c.weight > 0.0)) throw InvariantError("mixture weights must be positive");
    if (!(c.sigma > 0.0 && std::isfinite(c.sigma))) {
      throw InvariantError("component sigma must be positive");
    }
    if (c.mean.size() != dim()) {
      throw DimensionError("component mean has " + std::to_string(c.mean.size()) +
                           " entries, expected " + std::to_string(dim()));
    }
    for (double v : c.mean) {
      if (!std::isfinite(v)) throw InvariantError("component mean is not finite");
    }
    total += c.weight;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw InvariantError("mixture weights must sum to 1");
  }
}

std::vector<double> posterior_x0(const GmmDiffusionModel &model,
                                 std::span<const double> x_t, std::int64_t t) {
  if (x_t.size() != model.dim()) {
    throw DimensionError("state has the wrong dimension");
  }
  if (t < 0 || t >= model.schedule().total_steps()) {
    throw DomainError("step " + std::to_string(t) + " outside the noise schedule");
  }
  const auto &comps = model.components();
  const std::size_t dim = model.dim();
  const double a = model.schedule().alpha_bar(t);
  const double sa = std::sqrt(a);

  std::vector<double> logits(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto &mu = comps[k].mean;
    const double s2 = a * comps[k].sigma * comps[k].sigma + (1.0 - a);
    double r = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = x_t[i] - sa * mu[i];
      r += d * d;
    }
    logits[k] = std::log(comps[k].weight) - r / (2.0 * s2) -
                0.5 * static_cast<double>(dim) * std::log(s2);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (double &l : logits) {
    l = std::exp(l - top);
    norm += l;
  }
  assert(norm >= 1.0 && std::isfinite(norm));

  // Each component posterior is mu_k + g_k (x_t - sa mu_k) with
  // g_k = sa sigma_k^2 / s_k^2, i.e. (1 - sa g_k) mu_k + g_k x_t.
  std::vector<double> out(dim, 0.0);
  double x_coef = 0.0;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double gamma = logits[k] / norm;
    if (gamma == 0.0) continue;
    const double s2 = a * comps[k].sigma * comps[k].sigma + (1.0 - a);
    const double gain = sa * comps[k].sigma * comps[k].sigma / s2;
    const double mean_coef = gamma * (1.0 - sa * gain);
    const auto &mu = comps[k].mean;
    for (std::size_t i = 0; i < dim; ++i) out[i] += mean_coef * mu[i];
    x_coef += gamma * gain;
  }
  for (std::size_t i = 0; i < dim; ++i) out[i] += x_coef * x_t[i];
  return out;
}

std::vector<double> eps_hat(const GmmDiffusionModel &model,
                            std::span<const double> x_t, std::int64_t t) {
  auto x0 = posterior_x0(model, x_t, t);
  const double a = model.schedule().alpha_bar(t);
  const double sa = std::sqrt(a);
  const double inv_noise = 1.0 / std::sqrt(1.0 - a);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x0[i] = (x_t[i] - sa * x0[i]) * inv_noise;
  }
  return x0;
}

std::int64_t Trajectory::step_of(std::size_t i) const {
  const auto &steps = schedule.steps();
  if (i < steps.size()) return steps[steps.size() - 1 - i];
  return -1;
}

namespace {

template <typename Visit>
std::vector<double> run_ddim(const GmmDiffusionModel &model,
                             const TimestepSchedule &schedule,
                             std::span<const double> x_init, Visit &&visit) {
  if (schedule.total_steps() != model.schedule().total_steps()) {
    throw InvariantError("schedule horizon " +
                         std::to_string(schedule.total_steps()) +
                         " does not match the model's " +
                         std::to_string(model.schedule().total_steps()));
  }
  if (x_init.size() != model.dim()) {
    throw DimensionError("initial state has the wrong dimension");
  }
  for (double v : x_init) {
    if (!std::isfinite(v)) throw InvariantError("initial state is not finite");
  }
  const auto &steps = schedule.steps();
  const auto &noise = model.schedule();

  std::vector<double> x(x_init.begin(), x_init.end());
  visit(x);
  for (std::size_t i = steps.size(); i-- > 0;) {
    const std::int64_t t = steps[i];
    auto x0 = posterior_x0(model, x, t);
    if (i == 0) {
      visit(x0);
      return x0;
    }
    const double a = noise.alpha_bar(t);
    const double a_next = noise.alpha_bar(steps[i - 1]);
    const double sa = std::sqrt(a);
    const double inv_noise = 1.0 / std::sqrt(1.0 - a);
    const double sa_next = std::sqrt(a_next);
    const double noise_next = std::sqrt(1.0 - a_next);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double eps = (x[j] - sa * x0[j]) * inv_noise;
      x[j] = sa_next * x0[j] + noise_next * eps;
    }
    visit(x);
  }
  return x; // unreachable: schedules are non-empty
}

} // namespace

Trajectory ddim_sample(const GmmDiffusionModel &model,
                       const TimestepSchedule &schedule,
                       std::span<const double> x_init) {
  Trajectory traj{schedule, {}};
  traj.states.reserve(schedule.size() + 1);
  run_ddim(model, schedule, x_init,
           [&](const std::vector<double> &s) { traj.states.push_back(s); });
  return traj;
}

std::vector<double> ddim_final(const GmmDiffusionModel &model,
                               const TimestepSchedule &schedule,
                               std::span<const double> x_init) {
  return run_ddim(model, schedule, x_init, [](const std::vector<double> &) {});
}

std::vector<double> standard_normal(std::size_t dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(dim);
  for (double &v : z) v = normal(rng);
  return z;
}

std::vector<double> sample_data(const GmmDiffusionModel &model,
                                std::mt19937_64 &rng) {
  const auto &comps = model.components();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  std::size_t k = 0;
  double acc = comps[0].weight;
  while (k + 1 < comps.size() && u >= acc) {
    ++k;
    acc += comps[k].weight;
  }
  auto x = standard_normal(model.dim(), rng);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = comps[k].mean[i] + comps[k].sigma * x[i];
  }
  return x;
}

} // namespace betasched
