#include <doctest.h>

#include <cmath>

#include "galtraj/errors.hpp"
#include "galtraj/guidance.hpp"
#include "galtraj/map_builder.hpp"
#include "galtraj/synthesize.hpp"

using namespace galtraj;
using diff::DiffusionSchedule;
using geom::Vec2;
using nn::Mat;

namespace {

world::Horizons tiny_h{3, 6, 0.1};

diff::DenoiserConfig tiny_denoiser_config() {
  diff::DenoiserConfig c;
  c.horizons = tiny_h;
  c.hidden = 24;
  return c;
}

std::vector<world::Scenario> tiny_dataset(int count, std::uint64_t seed) {
  world::DatasetConfig config;
  config.count = count;
  config.horizons = tiny_h;
  config.agents_max = 4;
  return world::synthesize_dataset(config, seed);
}

}  // namespace

TEST_CASE("schedule invariants") {
  const DiffusionSchedule s = DiffusionSchedule::linear_default();
  CHECK(s.steps() == 32);
  CHECK(s.alpha_bar(0) == 1.0);
  for (int k = 1; k <= s.steps(); ++k) {
    CHECK(s.beta(k) > 0.0);
    CHECK(s.beta(k) < 1.0);
    if (k > 1) CHECK(s.beta(k) >= s.beta(k - 1));
    CHECK(s.alpha_bar(k) < s.alpha_bar(k - 1));
    CHECK(s.alpha_bar(k) > 0.0);
  }
  CHECK(s.posterior_variance(1) == 0.0);
  for (int k = 2; k <= s.steps(); ++k) CHECK(s.posterior_variance(k) > 0.0);
  CHECK_THROWS_AS(s.beta(0), ConfigError);
  CHECK_THROWS_AS(s.alpha_bar(33), ConfigError);
  CHECK_THROWS_AS(DiffusionSchedule(0, 1e-4, 0.05), ConfigError);
}

TEST_CASE("forward_noise: identity at k=0, moments at intermediate k") {
  const DiffusionSchedule s = DiffusionSchedule::linear_default();
  Eigen::RowVectorXd y0(4);
  y0 << 1.0, -2.0, 0.5, 3.0;

  const Eigen::RowVectorXd same = diff::forward_noise(y0, 0, s, std::uint64_t{11});
  CHECK(same == y0);  // bit-exact

  for (int k : {s.steps() / 4, s.steps() / 2, s.steps()}) {
    const double a = std::sqrt(s.alpha_bar(k));
    const double var_want = 1.0 - s.alpha_bar(k);
    Rng rng = make_rng(77);
    const int n = 10000;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(4);
    Eigen::RowVectorXd m2 = Eigen::RowVectorXd::Zero(4);
    for (int i = 0; i < n; ++i) {
      const Eigen::RowVectorXd y = diff::forward_noise(y0, k, s, rng);
      mean += y;
      m2 += (y - a * y0).cwiseProduct(y - a * y0);
    }
    mean /= n;
    m2 /= n;
    for (int c = 0; c < 4; ++c) {
      CHECK(std::abs(mean(c) - a * y0(c)) <= 0.02 * std::max(1.0, std::abs(a * y0(c))) + 0.02);
      CHECK(m2(c) == doctest::Approx(var_want).epsilon(0.05));
    }
  }

  // Zero input: mean 0, variance 1 - alpha_bar.
  Eigen::RowVectorXd zeros = Eigen::RowVectorXd::Zero(8);
  Rng rng = make_rng(3);
  double acc = 0.0, acc2 = 0.0;
  const int k = 10, n = 20000;
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd y = diff::forward_noise(zeros, k, s, rng);
    acc += y.sum();
    acc2 += y.cwiseProduct(y).sum();
  }
  CHECK(std::abs(acc / (8 * n)) < 0.01);
  CHECK(acc2 / (8 * n) == doctest::Approx(1.0 - s.alpha_bar(k)).epsilon(0.03));

  CHECK_THROWS_AS(diff::forward_noise(y0, -1, s, std::uint64_t{0}), ConfigError);
  CHECK_THROWS_AS(diff::forward_noise(y0, 33, s, std::uint64_t{0}), ConfigError);
}

TEST_CASE("costs: analytic values") {
  const world::MapGraph map = world::build_map(0, world::Topology::kStraight);

  // Inside everywhere -> zero cost, zero gradient.
  std::vector<Vec2> inside = {{0.0, 0.0}, {2.0, 1.0}};
  const auto ok = diff::cost_no_offroad(inside, map, 1.0);
  CHECK(ok.value == 0.0);
  CHECK(ok.grad[0].norm() == 0.0);

  // Straight-road drivable area spans y in [-4.5, 4.5]; 2 m above is outside.
  std::vector<Vec2> out_point = {{0.0, 6.5}};
  const auto bad = diff::cost_no_offroad(out_point, map, 1.0);
  CHECK(bad.value == doctest::Approx(-4.0));
  CHECK(bad.grad[0].y() == doctest::Approx(-4.0));
  CHECK(bad.grad[0].x() == doctest::Approx(0.0));

  // Repeller: coincident agents at one step.
  std::vector<std::vector<Vec2>> trajs = {{{0.0, 0.0}}, {{0.0, 0.0}}};
  const auto rep = diff::cost_repeller(trajs, 1.0, 2.0);
  CHECK(rep.value == doctest::Approx(-4.0));

  std::vector<std::vector<Vec2>> apart = {{{0.0, 0.0}}, {{5.0, 0.0}}};
  CHECK(diff::cost_repeller(apart, 1.0, 2.0).value == 0.0);
}

TEST_CASE("cost gradients match central finite differences") {
  const world::MapGraph map = world::build_map(2, world::Topology::kCurve);
  Rng rng = make_rng(31);
  const double h = 1e-6;
  int off_checked = 0, rep_checked = 0;

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> traj;
    for (int t = 0; t < 5; ++t) traj.push_back({uniform(rng, -60, 60), uniform(rng, -60, 60)});
    const auto cost = diff::cost_no_offroad(traj, map, 0.7);
    for (std::size_t t = 0; t < traj.size(); ++t) {
      for (int axis = 0; axis < 2; ++axis) {
        // Skip hinge neighborhoods.
        const double d = geom::distance_outside(map.drivable_area, traj[t]).d_out;
        if (d < 1e-3) continue;
        auto perturbed = traj;
        perturbed[t][axis] += h;
        const double fp = diff::cost_no_offroad(perturbed, map, 0.7).value;
        perturbed[t][axis] -= 2 * h;
        const double fm = diff::cost_no_offroad(perturbed, map, 0.7).value;
        const double numeric = (fp - fm) / (2 * h);
        const double denom = std::max({1.0, std::abs(numeric), std::abs(cost.grad[t][axis])});
        CHECK(std::abs(cost.grad[t][axis] - numeric) / denom < 1e-4);
        ++off_checked;
      }
    }

    std::vector<std::vector<Vec2>> trajs(3);
    for (auto& tr : trajs)
      for (int t = 0; t < 3; ++t) tr.push_back({uniform(rng, -2, 2), uniform(rng, -2, 2)});
    const auto rep = diff::cost_repeller(trajs, 0.9, 2.5);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      for (std::size_t t = 0; t < trajs[i].size(); ++t) {
        bool near_hinge = false;
        for (std::size_t j = 0; j < trajs.size(); ++j) {
          if (j == i) continue;
          const double dist = (trajs[i][t] - trajs[j][t]).norm();
          if (std::abs(dist - 2.5) < 1e-3 || dist < 1e-3) near_hinge = true;
        }
        if (near_hinge) continue;
        for (int axis = 0; axis < 2; ++axis) {
          auto perturbed = trajs;
          perturbed[i][t][axis] += h;
          const double fp = diff::cost_repeller(perturbed, 0.9, 2.5).value;
          perturbed[i][t][axis] -= 2 * h;
          const double fm = diff::cost_repeller(perturbed, 0.9, 2.5).value;
          const double numeric = (fp - fm) / (2 * h);
          const double denom =
              std::max({1.0, std::abs(numeric), std::abs(rep.grad[i][t][axis])});
          CHECK(std::abs(rep.grad[i][t][axis] - numeric) / denom < 1e-4);
          ++rep_checked;
        }
      }
    }
  }
  CHECK(off_checked > 100);
  CHECK(rep_checked > 100);
}

TEST_CASE("apply_gradient_guidance: identity, pull and masking") {
  Mat mu(3, 4);
  mu << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;

  const diff::LatentCostFn zero_cost = [](const Mat& m) {
    return std::make_pair(0.0, Mat::Zero(m.rows(), m.cols()).eval());
  };
  const std::vector<bool> all_head = {true, true, true};
  CHECK(diff::apply_gradient_guidance(mu, 0.3, zero_cost, all_head) == mu);

  // C = -0.5 ||mu - g||^2 pulls toward g.
  Mat g = Mat::Constant(3, 4, 2.0);
  const diff::LatentCostFn quad = [&g](const Mat& m) {
    return std::make_pair(-0.5 * (m - g).squaredNorm(), (g - m).eval());
  };
  const double sigma2 = 0.25;
  const Mat pulled = diff::apply_gradient_guidance(mu, sigma2, quad, all_head);
  CHECK(pulled == mu + sigma2 * (g - mu));

  const std::vector<bool> only_first = {true, false, false};
  const Mat masked = diff::apply_gradient_guidance(mu, sigma2, quad, only_first);
  CHECK(masked.row(0) == (mu + sigma2 * (g - mu)).row(0));
  CHECK(masked.row(1) == mu.row(1));
  CHECK(masked.row(2) == mu.row(2));

  // Non-finite gradient falls back to the unperturbed mean.
  const diff::LatentCostFn broken = [](const Mat& m) {
    return std::make_pair(0.0, Mat::Constant(m.rows(), m.cols(), std::nan("")).eval());
  };
  bool warned = false;
  CHECK(diff::apply_gradient_guidance(mu, sigma2, broken, all_head, &warned) == mu);
  CHECK(warned);
}

TEST_CASE("categorize_agents follows the attention rule") {
  // errors (3.0, 0.5), tau=2, attention 0->1 = 0.6, |N|=4 -> (tail, relevant).
  Mat att = Mat::Constant(2, 2, 0.4);
  att(0, 1) = 0.6;
  att(0, 0) = 0.4;
  std::vector<std::vector<int>> neighbors = {{1, -1, -1, -1}, {0}};
  neighbors[0] = {1, 2, 3, 4};  // |N_0| = 4 (threshold 0.25)
  const auto cats = diff::categorize_agents({3.0, 0.5}, 2.0, att, {{1, 2, 3, 4}, {0}});
  CHECK(cats[0] == diff::AgentCategory::kTail);
  CHECK(cats[1] == diff::AgentCategory::kRelevant);

  // All below tau: everyone is head, nobody relevant.
  const auto all_head = diff::categorize_agents({0.5, 0.6}, 2.0, att, {{1}, {0}});
  CHECK(all_head[0] == diff::AgentCategory::kHead);
  CHECK(all_head[1] == diff::AgentCategory::kHead);

  // Uniform attention exactly at 1/|N|: strict inequality keeps others head.
  Mat uniform_att = Mat::Constant(3, 3, 1.0 / 3.0);
  const auto strict =
      diff::categorize_agents({3.0, 0.5, 0.4}, 2.0, uniform_att, diff::all_other_neighbors(3));
  CHECK(strict[0] == diff::AgentCategory::kTail);
  CHECK(strict[1] == diff::AgentCategory::kHead);
  CHECK(strict[2] == diff::AgentCategory::kHead);

  // Undefined errors can never be tail.
  const auto undef = diff::categorize_agents({std::nullopt, 0.5}, 2.0, att, {{1}, {0}});
  CHECK(undef[0] == diff::AgentCategory::kHead);
}

TEST_CASE("real guidance start steps for the published lambda values") {
  CHECK(diff::real_guidance_start_step(0.25, 32) == 8);
  CHECK(diff::real_guidance_start_step(0.6, 32) == 19);
  CHECK(diff::real_guidance_start_step(1.0, 32) == 32);
  CHECK(diff::real_guidance_start_step(0.0, 32) == 0);
}

TEST_CASE("real_guided_sample: lambda 0 reproduces ground truth bit-exactly") {
  const DiffusionSchedule s(16, 1e-4, 0.05);
  diff::Denoiser den(tiny_denoiser_config(), s, 5);
  const auto scenarios = tiny_dataset(4, 99);
  diff::GuidanceConfig g;
  g.lambda_tail = g.lambda_rel = g.lambda_head = 0.0;
  for (const auto& scenario : scenarios) {
    const std::vector<diff::AgentCategory> cats(scenario.agents.size(),
                                                diff::AgentCategory::kHead);
    const auto out = diff::real_guided_sample(den, scenario, cats, g, 7);
    for (std::size_t a = 0; a < scenario.agents.size(); ++a)
      for (int t = 1; t <= scenario.horizons.t_f; ++t) {
        const auto& truth =
            scenario.agents[a].positions[world::AgentTrack::index_of(scenario.horizons, t)];
        CHECK(out.futures[a][t - 1].x() == truth.x());
        CHECK(out.futures[a][t - 1].y() == truth.y());
      }
  }
}

TEST_CASE("denoiser training: loss decreases and is ordered across steps") {
  const DiffusionSchedule s(16, 1e-4, 0.05);
  const auto scenarios = tiny_dataset(150, 55);

  int wins = 0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    diff::Denoiser den(tiny_denoiser_config(), s, seed);
    const auto losses = den.train(scenarios, 6, seed);
    REQUIRE(losses.size() == 6);
    for (double l : losses) CHECK(std::isfinite(l));
    if (losses.back() < losses.front()) ++wins;
  }
  CHECK(wins >= 2);  // majority of seeds

  // After training, denoising near the data (k=1) is easier than at k=K.
  diff::Denoiser den(tiny_denoiser_config(), s, 4);
  den.train(scenarios, 6, 11);
  const auto holdout = tiny_dataset(30, 1234);
  CHECK(den.noise_loss_at(holdout, 1, 5) < den.noise_loss_at(holdout, s.steps(), 5));
}

TEST_CASE("denoise_step contract with a real scene") {
  const DiffusionSchedule s(16, 1e-4, 0.05);
  diff::Denoiser den(tiny_denoiser_config(), s, 5);
  const auto scenarios = tiny_dataset(2, 42);
  const auto& scenario = scenarios[0];
  const int n = static_cast<int>(scenario.agents.size());
  Mat y = Mat::Random(n, 2 * tiny_h.t_f);

  const auto a = den.denoise_step(y, 8, scenario);
  const auto b = den.denoise_step(y, 8, scenario);
  CHECK(a.mu == b.mu);  // deterministic
  CHECK(a.sigma2 == b.sigma2);
  CHECK(a.mu.allFinite());
  CHECK(a.sigma2 > 0.0);
  REQUIRE(a.attention.rows() == n);
  for (int i = 0; i < n; ++i)
    CHECK(a.attention.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(den.denoise_step(y, 0, scenario), ConfigError);
  CHECK_THROWS_AS(den.denoise_step(y, 17, scenario), ConfigError);
}

TEST_CASE("denoiser checkpoint round trip") {
  const DiffusionSchedule s(16, 1e-4, 0.05);
  diff::Denoiser den(tiny_denoiser_config(), s, 5);
  const auto scenarios = tiny_dataset(10, 3);
  den.train(scenarios, 1, 2);
  den.save("/tmp/galtraj_denoiser.json");
  diff::Denoiser back = diff::Denoiser::load("/tmp/galtraj_denoiser.json");
  CHECK(back.epoch() == den.epoch());
  CHECK(back.schedule().steps() == 16);

  const auto& scenario = scenarios[0];
  Mat y = Mat::Random(static_cast<int>(scenario.agents.size()), 2 * tiny_h.t_f);
  const auto a = den.denoise_step(y, 5, scenario);
  const auto b = back.denoise_step(y, 5, scenario);
  CHECK(a.mu == b.mu);
}
