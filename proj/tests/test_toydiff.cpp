#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "betasched/errors.hpp"
#include "betasched/rng.hpp"
#include "betasched/schedule.hpp"
#include "betasched/toydiff.hpp"
#include "betasched/trajectory_io.hpp"

using namespace betasched;
namespace fs = std::filesystem;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64 &rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto &x : v) x = g(rng);
  return v;
}

GmmDiffusionModel small_mixture() {
  std::mt19937_64 rng(3);
  std::vector<MixtureComponent> comps;
  const double weights[] = {0.2, 0.5, 0.3};
  const double sigmas[] = {0.1, 0.4, 1.3};
  for (int k = 0; k < 3; ++k) comps.push_back({weights[k], random_vec(8, rng), sigmas[k]});
  return GmmDiffusionModel(2, 4, comps, linear_schedule(1000));
}

// log p_t(x) for the noised mixture, written out independently of the library.
long double log_marginal(const GmmDiffusionModel &m, const std::vector<double> &x, std::int64_t t) {
  const long double a = m.schedule().alpha_bar(t);
  const long double dim = static_cast<long double>(x.size());
  std::vector<long double> terms;
  for (const auto &c : m.components()) {
    const long double s2 = a * c.sigma * c.sigma + (1.0L - a);
    long double d2 = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const long double d = x[i] - std::sqrt(a) * c.mean[i];
      d2 += d * d;
    }
    terms.push_back(std::log(static_cast<long double>(c.weight)) - 0.5L * dim * std::log(s2) -
                    d2 / (2.0L * s2));
  }
  long double mx = terms[0];
  for (auto v : terms) mx = std::max(mx, v);
  long double s = 0.0L;
  for (auto v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

std::vector<double> fd_score(const GmmDiffusionModel &m, std::vector<double> x, std::int64_t t,
                             double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const auto up = log_marginal(m, x, t);
    x[i] = xi - h;
    const auto dn = log_marginal(m, x, t);
    x[i] = xi;
    g[i] = static_cast<double>((up - dn) / (2.0L * h));
  }
  return g;
}

std::vector<double> analytic_score(const GmmDiffusionModel &m, const std::vector<double> &x,
                                   std::int64_t t) {
  const double a = m.schedule().alpha_bar(t);
  std::vector<double> logs;
  for (const auto &c : m.components()) {
    const double s2 = a * c.sigma * c.sigma + (1.0 - a);
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - std::sqrt(a) * c.mean[i];
      d2 += d * d;
    }
    logs.push_back(std::log(c.weight) - 0.5 * x.size() * std::log(s2) - d2 / (2 * s2));
  }
  double mx = logs[0];
  for (double v : logs) mx = std::max(mx, v);
  double z = 0.0;
  for (double &v : logs) z += (v = std::exp(v - mx));
  std::vector<double> score(x.size(), 0.0);
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const auto &c = m.components()[k];
    const double s2 = a * c.sigma * c.sigma + (1.0 - a);
    for (std::size_t i = 0; i < x.size(); ++i) {
      score[i] -= logs[k] / z * (x[i] - std::sqrt(a) * c.mean[i]) / s2;
    }
  }
  return score;
}

double rel_err(const std::vector<double> &got, const std::vector<double> &want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num / den);
}

fs::path scratch(const std::string &name) {
  auto p = fs::temp_directory_path() / ("betasched_toydiff_" + name);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST(LinearSchedule, TwoStepExample) {
  const auto s = linear_schedule(2, 0.5, 0.5);
  EXPECT_EQ(s.betas(), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(s.alpha_bars(), (std::vector<double>{0.5, 0.25}));
}

TEST(LinearSchedule, DefaultsNearlyDestroySignal) {
  const auto s = linear_schedule(1000);
  EXPECT_EQ(s.betas().front(), 1e-4);
  EXPECT_NEAR(s.betas().back(), 0.02, 1e-15);
  EXPECT_LT(s.alpha_bar(999), 1e-4);
  for (std::size_t t = 1; t < 1000; ++t) EXPECT_LT(s.alpha_bars()[t], s.alpha_bars()[t - 1]);
}

TEST(LinearSchedule, Errors) {
  EXPECT_THROW(linear_schedule(1), DomainError);
  EXPECT_THROW(linear_schedule(10, 0.0, 0.1), DomainError);
  EXPECT_THROW(linear_schedule(10, 0.2, 0.1), DomainError);
  EXPECT_THROW(linear_schedule(10, 0.1, 1.0), DomainError);
  EXPECT_THROW(NoiseSchedule({0.1}), DomainError);
  EXPECT_THROW(NoiseSchedule({0.1, 1.0}), DomainError);
}

TEST(GmmModel, Invariants) {
  const auto ns = linear_schedule(10);
  EXPECT_THROW(GmmDiffusionModel(2, 2, {}, ns), InvariantError);
  EXPECT_THROW(GmmDiffusionModel(2, 2, {{1.0, {0, 0, 0}, 1.0}}, ns), DimensionError);
  EXPECT_THROW(GmmDiffusionModel(2, 2, {{1.0, {0, 0, 0, 0}, 0.0}}, ns), InvariantError);
  EXPECT_THROW(GmmDiffusionModel(2, 2, {{0.6, {0, 0, 0, 0}, 1.0}}, ns), InvariantError);
  EXPECT_THROW(GmmDiffusionModel(2, 2, {{-0.5, {0, 0, 0, 0}, 1.0}, {1.5, {0, 0, 0, 0}, 1.0}}, ns),
               InvariantError);
  EXPECT_THROW(GmmDiffusionModel(2, 2, {{1.0, {0, 0, std::nan(""), 0}, 1.0}}, ns), InvariantError);
}

TEST(PosteriorX0, SingleComponentClosedForm) {
  std::mt19937_64 rng(11);
  const auto mu = random_vec(8, rng);
  const double sigma = 0.7;
  const GmmDiffusionModel m(2, 4, {{1.0, mu, sigma}}, linear_schedule(1000));
  for (std::int64_t t : {0, 10, 250, 999}) {
    const auto x = random_vec(8, rng);
    const double a = m.schedule().alpha_bar(t);
    const double gain = std::sqrt(a) * sigma * sigma / (a * sigma * sigma + 1 - a);
    const auto got = posterior_x0(m, x, t);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_NEAR(got[i], mu[i] + gain * (x[i] - std::sqrt(a) * mu[i]), 1e-12);
    }
  }
}

TEST(PosteriorX0, PointMassReturnsMean) {
  std::mt19937_64 rng(12);
  const auto mu = random_vec(8, rng);
  const GmmDiffusionModel m(2, 4, {{1.0, mu, 1e-6}}, linear_schedule(1000));
  const auto got = posterior_x0(m, random_vec(8, rng), 500);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(got[i], mu[i], 1e-9);
}

TEST(PosteriorX0, SymmetricPairAtOriginIsZero) {
  std::mt19937_64 rng(13);
  auto mu = random_vec(8, rng);
  auto neg = mu;
  for (auto &v : neg) v = -v;
  const GmmDiffusionModel m(2, 4, {{0.5, mu, 0.3}, {0.5, neg, 0.3}}, linear_schedule(1000));
  for (std::int64_t t : {0, 100, 900}) {
    for (double v : posterior_x0(m, std::vector<double>(8, 0.0), t)) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(PosteriorX0, FarComponentsDoNotUnderflow) {
  const GmmDiffusionModel m(1, 2, {{0.5, {1e3, 1e3}, 1e-3}, {0.5, {-1e3, -1e3}, 1e-3}},
                            linear_schedule(100));
  const auto got = posterior_x0(m, std::vector<double>{50.0, 50.0}, 0);
  for (double v : got) EXPECT_TRUE(std::isfinite(v));
}

TEST(PosteriorX0, Errors) {
  const auto m = small_mixture();
  EXPECT_THROW(posterior_x0(m, std::vector<double>(7, 0.0), 5), DimensionError);
  EXPECT_THROW(posterior_x0(m, std::vector<double>(8, 0.0), 1000), DomainError);
  EXPECT_THROW(posterior_x0(m, std::vector<double>(8, 0.0), -1), DomainError);
}

TEST(EpsHat, ZeroWhenStateIsScaledEstimate) {
  // For a point-mass model the estimate does not depend on x_t, so
  // x_t = sqrt(abar) * x0_hat reproduces itself exactly.
  std::vector<double> mu{0.5, -1.0, 2.0, 0.25};
  const GmmDiffusionModel m(2, 2, {{1.0, mu, 1e-9}}, linear_schedule(1000));
  const std::int64_t t = 300;
  std::vector<double> x(4);
  const auto x0 = posterior_x0(m, mu, t);
  for (std::size_t i = 0; i < 4; ++i) x[i] = std::sqrt(m.schedule().alpha_bar(t)) * x0[i];
  for (double v : eps_hat(m, x, t)) EXPECT_NEAR(v, 0.0, 1e-8);
}

TEST(EpsHat, MatchesFiniteDifferenceScoreForStandardNormalData) {
  const GmmDiffusionModel m(2, 4, {{1.0, std::vector<double>(8, 0.0), 1.0}}, linear_schedule(1000));
  std::mt19937_64 rng(21);
  for (std::int64_t t : {1, 200, 700, 999}) {
    const auto x = random_vec(8, rng);
    const double a = m.schedule().alpha_bar(t);
    auto want = fd_score(m, x, t, 1e-5);
    for (auto &v : want) v *= -std::sqrt(1 - a);
    EXPECT_LE(rel_err(eps_hat(m, x, t), want), 1e-3) << t;
  }
}

TEST(EpsHat, MatchesFiniteDifferenceScoreForMixture) {
  const auto m = small_mixture();
  std::mt19937_64 rng(22);
  for (int probe = 0; probe < 40; ++probe) {
    const std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, 999)(rng);
    const auto x = random_vec(8, rng);
    const double a = m.schedule().alpha_bar(t);
    auto want = fd_score(m, x, t, 1e-5);
    for (auto &v : want) v *= -std::sqrt(1 - a);
    EXPECT_LE(rel_err(eps_hat(m, x, t), want), 1e-3) << "t=" << t;
  }
}

TEST(PosteriorX0, TweedieIdentity) {
  const auto m = small_mixture();
  std::mt19937_64 rng(23);
  for (int probe = 0; probe < 40; ++probe) {
    const std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, 999)(rng);
    const auto x = random_vec(8, rng, 1.5);
    const double a = m.schedule().alpha_bar(t);
    const auto score = analytic_score(m, x, t);
    std::vector<double> want(8);
    for (std::size_t i = 0; i < 8; ++i) want[i] = (x[i] + (1 - a) * score[i]) / std::sqrt(a);
    const auto got = posterior_x0(m, x, t);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(got[i], want[i], 1e-6 * std::max(1.0, std::fabs(want[i])));
  }
}

TEST(Ddim, FullScheduleReproducesGaussianData) {
  const std::vector<double> mu{0.5, -0.3, 1.0, 0.0};
  const GmmDiffusionModel m(2, 2, {{1.0, mu, 1.0}}, linear_schedule(1000));
  const auto sched = make_uniform_schedule(1000, 1000);
  auto rng = make_stream(5, Stream::kInitialNoise);
  const std::size_t n = 10000;
  std::vector<double> sum(4, 0.0), sum2(4, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto x = ddim_final(m, sched, standard_normal(4, rng));
    for (std::size_t i = 0; i < 4; ++i) {
      sum[i] += x[i];
      sum2[i] += x[i] * x[i];
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double mean = sum[i] / n;
    const double sd = std::sqrt(sum2[i] / n - mean * mean);
    EXPECT_NEAR(mean, mu[i], 3.0 / std::sqrt(n));
    EXPECT_NEAR(sd, 1.0, 3.0 / std::sqrt(2.0 * n));
  }
}

TEST(Ddim, SingleStepScheduleReturnsPosterior) {
  const auto m = small_mixture();
  std::mt19937_64 rng(31);
  const auto x = random_vec(8, rng);
  const TimestepSchedule one(1000, {999});
  const auto traj = ddim_sample(m, one, x);
  ASSERT_EQ(traj.states.size(), 2u);
  EXPECT_EQ(traj.states[0], x);
  EXPECT_EQ(traj.states[1], posterior_x0(m, x, 999));
  EXPECT_EQ(traj.step_of(0), 999);
  EXPECT_EQ(traj.step_of(1), -1);
}

TEST(Ddim, DeterministicAndFinalMatchesTrajectory) {
  const auto m = small_mixture();
  std::mt19937_64 rng(32);
  const auto x = random_vec(8, rng);
  const auto sched = make_schedule(10, 1000, BetaParams(0.5, 0.5));
  const auto a = ddim_sample(m, sched, x);
  const auto b = ddim_sample(m, sched, x);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.states.size(), sched.size() + 1);
  EXPECT_EQ(ddim_final(m, sched, x), a.states.back());
  for (const auto &s : a.states) {
    for (double v : s) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Ddim, OneUpdateByHand) {
  const auto m = small_mixture();
  std::mt19937_64 rng(33);
  const auto x = random_vec(8, rng);
  const TimestepSchedule two(1000, {100, 600});
  const auto traj = ddim_sample(m, two, x);
  const auto x0 = posterior_x0(m, x, 600);
  const auto eps = eps_hat(m, x, 600);
  const double a = m.schedule().alpha_bar(100);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(traj.states[1][i], std::sqrt(a) * x0[i] + std::sqrt(1 - a) * eps[i], 1e-12);
  }
}

TEST(Ddim, Errors) {
  const auto m = small_mixture();
  EXPECT_THROW(ddim_sample(m, make_uniform_schedule(5, 500), std::vector<double>(8, 0.0)),
               InvariantError);
  EXPECT_THROW(ddim_sample(m, make_uniform_schedule(5, 1000), std::vector<double>(6, 0.0)),
               DimensionError);
  std::vector<double> bad(8, 0.0);
  bad[2] = INFINITY;
  EXPECT_THROW(ddim_sample(m, make_uniform_schedule(5, 1000), bad), InvariantError);
}

TEST(SampleData, MatchesMixtureMoments) {
  const GmmDiffusionModel m(1, 2, {{0.25, {2.0, 0.0}, 0.5}, {0.75, {-1.0, 1.0}, 0.5}},
                            linear_schedule(10));
  std::mt19937_64 rng(41);
  double s0 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) s0 += sample_data(m, rng)[0];
  // E = 0.25*2 - 0.75*1 = -0.25; sd of the mixture coordinate is about 1.4
  EXPECT_NEAR(s0 / n, -0.25, 4 * 1.4 / std::sqrt(n));
}

TEST(TrajectoryIo, DumpLoadRoundTrip) {
  const auto m = small_mixture();
  std::mt19937_64 rng(51);
  const auto sched = make_schedule(10, 1000, BetaParams(0.5, 0.5));
  const auto traj = ddim_sample(m, sched, random_vec(8, rng));
  const auto dir = scratch("roundtrip");
  const auto manifest = dump_trajectory(traj, 2, 4, dir);
  EXPECT_EQ(manifest, dir / "manifest.json");

  std::size_t grids = 0;
  for (const auto &e : fs::directory_iterator(dir)) grids += e.path().extension() == ".f32";
  EXPECT_EQ(grids, 11u);

  const auto loaded = load_trajectory(manifest);
  EXPECT_EQ(loaded.manifest.height, 2u);
  EXPECT_EQ(loaded.manifest.width, 4u);
  EXPECT_EQ(loaded.manifest.total_steps, 1000);
  std::vector<std::int64_t> want(sched.steps().rbegin(), sched.steps().rend());
  want.push_back(-1);
  EXPECT_EQ(loaded.manifest.timesteps, want);
  ASSERT_EQ(loaded.states.size(), traj.states.size());
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(loaded.states[s][i], static_cast<double>(static_cast<float>(traj.states[s][i])));
    }
  }

  // Reloading what was loaded is exact once the values are float32.
  Trajectory again{sched, loaded.states};
  const auto dir2 = scratch("roundtrip2");
  EXPECT_EQ(load_trajectory(dump_trajectory(again, 2, 4, dir2)).states, loaded.states);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(TrajectoryIo, SixtyFourSquareTenSteps) {
  const GmmDiffusionModel m(64, 64, {{1.0, std::vector<double>(4096, 0.0), 0.5}},
                            linear_schedule(1000));
  auto rng = make_stream(1, Stream::kInitialNoise);
  const auto traj = ddim_sample(m, make_uniform_schedule(10, 1000), standard_normal(4096, rng));
  const auto dir = scratch("sixtyfour");
  dump_trajectory(traj, 64, 64, dir);
  std::size_t grids = 0, manifests = 0;
  for (const auto &e : fs::directory_iterator(dir)) {
    grids += e.path().extension() == ".f32";
    manifests += e.path().filename() == "manifest.json";
    if (e.path().extension() == ".f32") EXPECT_EQ(fs::file_size(e.path()), 4096u * 4u);
  }
  EXPECT_EQ(grids, 11u);
  EXPECT_EQ(manifests, 1u);
  fs::remove_all(dir);
}

TEST(TrajectoryIo, RejectsBadManifests) {
  const auto dir = scratch("bad");
  fs::create_directories(dir);
  write_f32_le(dir / "a.f32", std::vector<double>(8, 0.0));
  write_f32_le(dir / "b.f32", std::vector<double>(7, 0.0));
  const auto write = [&](const std::string &text) {
    std::ofstream(dir / "manifest.json") << text;
    return dir / "manifest.json";
  };
  EXPECT_THROW(load_trajectory(dir / "missing.json"), IoError);
  EXPECT_THROW(load_trajectory(write("{oops")), ParseError);
  EXPECT_THROW(load_trajectory(write(R"({"height":2,"width":4,"total_steps":10,"timesteps":[5,-1],"files":["a.f32"]})")),
               ParseError);
  EXPECT_THROW(load_trajectory(write(R"({"height":2,"width":4,"total_steps":10,"timesteps":[-1,5],"files":["a.f32","a.f32"]})")),
               ParseError);
  EXPECT_THROW(load_trajectory(write(R"({"height":2,"width":4,"total_steps":10,"timesteps":[12,-1],"files":["a.f32","a.f32"]})")),
               ParseError);
  EXPECT_THROW(load_trajectory(write(R"({"height":2,"width":4,"total_steps":10,"timesteps":[5,-1],"files":["a.f32","b.f32"]})")),
               ParseError);
  EXPECT_THROW(load_trajectory(write(R"({"height":2,"width":4,"total_steps":10,"timesteps":[5,-1],"files":["a.f32","nope.f32"]})")),
               IoError);
  EXPECT_NO_THROW(load_trajectory(write(R"({"height":2,"width":4,"total_steps":10,"timesteps":[5,-1],"files":["a.f32","a.f32"]})")));
  fs::remove_all(dir);
}

TEST(TrajectoryIo, F32LittleEndianBytes) {
  const auto dir = scratch("bytes");
  fs::create_directories(dir);
  write_f32_le(dir / "one.f32", std::vector<double>{1.0});
  std::ifstream in(dir / "one.f32", std::ios::binary);
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  EXPECT_EQ(b[0], 0x00);
  EXPECT_EQ(b[1], 0x00);
  EXPECT_EQ(b[2], 0x80);
  EXPECT_EQ(b[3], 0x3f);
  EXPECT_EQ(read_f32_le(dir / "one.f32"), std::vector<double>{1.0});
  fs::remove_all(dir);
}

TEST(ModelConfig, ParsesProceduralAndInlineMeans) {
  const auto m = parse_model_config(R"({
    "height": 8, "width": 8,
    "noise": {"total_steps": 50, "beta_start": 0.001, "beta_end": 0.05},
    "components": [
      {"weight": 0.5, "sigma": 0.2,
       "mean": {"offset": 0.5,
                "cosines": [{"fu": 1, "fv": 0, "amp": 0.4, "phase": 0.0}],
                "patch": {"row": 0, "col": 4, "size": 4, "fu": 2, "fv": 0, "amp": 0.3, "phase": 0.0}}},
      {"weight": 0.5, "sigma": 0.1, "mean": [0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,
        0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,1]}
    ]})");
  EXPECT_EQ(m.dim(), 64u);
  EXPECT_EQ(m.schedule().total_steps(), 50);
  EXPECT_NEAR(m.schedule().betas().front(), 0.001, 1e-15);
  const auto &mu = m.components()[0].mean;
  // row 0 outside the patch: offset + 0.4 cos(2 pi row / 8)
  EXPECT_NEAR(mu[0 * 8 + 0], 0.9, 1e-12);
  EXPECT_NEAR(mu[2 * 8 + 0], 0.5, 1e-12);
  EXPECT_NE(mu[0 * 8 + 4], mu[0 * 8 + 0]);
  EXPECT_EQ(m.components()[1].mean[63], 1.0);
}

TEST(ModelConfig, Errors) {
  EXPECT_THROW(parse_model_config("[1,2"), ParseError);
  EXPECT_THROW(parse_model_config("[1,2]"), ParseError);
  EXPECT_THROW(parse_model_config(R"({"height": 8, "width": 8, "noise": {"total_steps": 10}})"),
               ParseError);
  EXPECT_THROW(parse_model_config(R"({"height": 8, "width": 8, "noise": {"total_steps": 10},
      "components": [{"weight": 1, "sigma": 1, "mean": {"patch": {"row": 6, "col": 0, "size": 4,
      "fu": 1, "fv": 1, "amp": 1}}}]})"),
               ParseError);
  EXPECT_THROW(parse_model_config(R"({"height": 8, "width": 8, "noise": {"total_steps": 10},
      "components": [{"weight": 1, "sigma": 1, "mean": [1, 2]}]})"),
               DimensionError);
  EXPECT_THROW(load_model_config("/nonexistent/model.json"), IoError);
}

TEST(ModelConfig, ShippedConfigLoads) {
  const auto m = load_model_config(std::string(BETASCHED_CONFIG_DIR) + "/smooth_mixture.json");
  EXPECT_EQ(m.height(), 64u);
  EXPECT_EQ(m.width(), 64u);
  EXPECT_EQ(m.components().size(), 8u);
  EXPECT_EQ(m.schedule().total_steps(), 1000);
  for (const auto &c : m.components()) {
    double dc = 0.0;
    for (double v : c.mean) dc += v;
    EXPECT_NEAR(dc, 0.0, 1e-9);
  }
}
