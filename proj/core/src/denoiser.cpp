#include "galtraj/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "galtraj/errors.hpp"
#include "galtraj/features.hpp"

namespace galtraj::diff {

namespace {

using nn::Mat;
using nn::Tape;

Eigen::RowVectorXd step_embedding(int k, int k_total, int dims) {
  Eigen::RowVectorXd e(dims);
  const double x = static_cast<double>(k) / k_total;
  for (int j = 0; j < dims / 2; ++j) {
    const double w = M_PI * std::pow(2.0, j);
    e(2 * j) = std::sin(w * x);
    e(2 * j + 1) = std::cos(w * x);
  }
  return e;
}

}  // namespace

Denoiser::Denoiser(DenoiserConfig config, const DiffusionSchedule& schedule,
                   std::uint64_t init_seed)
    : config_(config), schedule_(schedule), init_seed_(init_seed) {
  Rng rng = make_rng(init_seed, 0xD0153);
  const int latent = 2 * config_.horizons.t_f;
  const int in = latent + feat::condition_dim(config_.horizons.t_h) + config_.step_embed;
  const int h = config_.hidden;
  enc_ = nn::Linear(store_, "enc", in, h, rng);
  att_q_ = nn::Linear(store_, "att_q", h, h, rng);
  att_k_ = nn::Linear(store_, "att_k", h, h, rng);
  att_v_ = nn::Linear(store_, "att_v", h, h, rng);
  att_o_ = nn::Linear(store_, "att_o", h, h, rng);
  post_ = nn::Linear(store_, "post", h, h, rng);
  out_ = nn::Linear(store_, "out", h, latent, rng);
  adam_ = nn::Adam(store_, {.lr = config_.lr});
}

Tape::Var Denoiser::forward(Tape& tape, Tape::Var y_k, int k, const world::Scenario& scenario,
                            Tape::Var* attention) const {
  if (!(scenario.horizons == config_.horizons))
    throw DataError("denoiser: scenario horizons do not match the model");
  const int n = static_cast<int>(scenario.agents.size());
  Mat cond(n, feat::condition_dim(config_.horizons.t_h) + config_.step_embed);
  const Eigen::RowVectorXd embed = step_embedding(k, schedule_.steps(), config_.step_embed);
  for (int i = 0; i < n; ++i) {
    const feat::AgentFrame frame = feat::make_agent_frame(scenario.agents[i], scenario.horizons);
    cond.row(i) << feat::encode_condition(scenario, i, frame), embed;
  }
  Tape::Var x = tape.concat_cols({y_k, tape.constant(std::move(cond))});
  Tape::Var h1 = tape.tanh(enc_.apply(tape, x));
  Tape::Var q = att_q_.apply(tape, h1);
  Tape::Var kk = att_k_.apply(tape, h1);
  Tape::Var v = att_v_.apply(tape, h1);
  Tape::Var scores = tape.scale(tape.matmul_nt(q, kk), 1.0 / std::sqrt(config_.hidden));
  Tape::Var att = tape.softmax_rows(scores);
  Tape::Var ctx = att_o_.apply(tape, tape.matmul(att, v));
  Tape::Var h2 = tape.tanh(post_.apply(tape, tape.add(h1, ctx)));
  if (attention) *attention = att;
  return out_.apply(tape, h2);
}

Mat Denoiser::predict_noise(const Mat& y_k, int k, const world::Scenario& scenario,
                            Mat* attention_out) const {
  nn::Tape tape(const_cast<nn::ParamStore*>(&store_));
  Tape::Var att;
  Tape::Var eps = forward(tape, tape.constant(y_k), k, scenario, &att);
  if (attention_out) *attention_out = tape.value(att);
  return tape.value(eps);
}

DenoiseStep Denoiser::denoise_step(const Mat& y_k, int k, const world::Scenario& scenario) const {
  if (k < 1 || k > schedule_.steps())
    throw ConfigError("denoise_step: k outside [1, K]");
  DenoiseStep step;
  Mat eps = predict_noise(y_k, k, scenario, &step.attention);

  const double ab_k = schedule_.alpha_bar(k);
  const double ab_prev = schedule_.alpha_bar(k - 1);
  const double beta_k = schedule_.beta(k);
  const double alpha_k = schedule_.alpha(k);
  const Mat x0_hat = (y_k - std::sqrt(1.0 - ab_k) * eps) / std::sqrt(ab_k);
  step.mu = (std::sqrt(alpha_k) * (1.0 - ab_prev) * y_k + std::sqrt(ab_prev) * beta_k * x0_hat) /
            (1.0 - ab_k);
  step.sigma2 = schedule_.posterior_variance(k);
  if (!step.mu.allFinite())
    throw NumericError("denoise_step: non-finite activations at k=" + std::to_string(k));
  return step;
}

std::vector<double> Denoiser::train(const std::vector<world::Scenario>& scenarios, int epochs,
                                    std::uint64_t seed) {
  if (scenarios.empty()) throw ConfigError("denoiser train: empty dataset");
  const std::size_t holdout =
      std::max<std::size_t>(1, static_cast<std::size_t>(config_.holdout_fraction *
                                                        static_cast<double>(scenarios.size())));
  const std::size_t n_train = scenarios.size() > holdout ? scenarios.size() - holdout : 1;

  std::vector<double> holdout_losses;
  Rng rng = make_rng(seed, 0xD03B);
  const int t_f = config_.horizons.t_f;
  for (int e = 0; e < epochs; ++e) {
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_index(rng, i)]);

    int in_batch = 0;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const world::Scenario& s = scenarios[order[oi]];
      const int n = static_cast<int>(s.agents.size());
      const int k = 1 + static_cast<int>(uniform_index(rng, schedule_.steps()));

      Mat z0(n, 2 * t_f), noise(n, 2 * t_f);
      for (int i = 0; i < n; ++i) {
        const feat::AgentFrame frame = feat::make_agent_frame(s.agents[i], s.horizons);
        z0.row(i) = feat::future_to_latent(s.agents[i], s.horizons, frame);
        for (int c = 0; c < 2 * t_f; ++c) noise(i, c) = normal01(rng);
      }
      const double a = std::sqrt(schedule_.alpha_bar(k));
      const double b = std::sqrt(1.0 - schedule_.alpha_bar(k));
      Mat z_k = a * z0 + b * noise;

      nn::Tape tape(&store_);
      Tape::Var eps_hat = forward(tape, tape.constant(std::move(z_k)), k, s, nullptr);
      const Mat ones = Mat::Constant(n, 2 * t_f, 1.0 / (n * 2.0 * t_f));
      Tape::Var loss = tape.weighted_mse(eps_hat, noise, ones, 1.0);
      if (!std::isfinite(tape.value(loss)(0, 0)))
        throw NumericError("denoiser train: non-finite loss at epoch " + std::to_string(e));
      tape.backward(tape.scale(loss, 1.0 / config_.batch_scenarios));
      if (++in_batch == config_.batch_scenarios || oi + 1 == order.size()) {
        adam_.step(store_);
        in_batch = 0;
      }
    }
    ++epoch_;

    // Held-out loss, averaged over all steps via a fixed evaluation stream.
    double acc = 0.0;
    int count = 0;
    Rng eval_rng = make_rng(seed, 0xE7A1);
    for (std::size_t i = n_train; i < scenarios.size(); ++i) {
      for (int rep = 0; rep < 4; ++rep) {
        const int k = 1 + static_cast<int>(uniform_index(eval_rng, schedule_.steps()));
        acc += noise_loss_single(scenarios[i], k, eval_rng);
        ++count;
      }
    }
    holdout_losses.push_back(count > 0 ? acc / count : 0.0);
  }
  return holdout_losses;
}

double Denoiser::noise_loss_single(const world::Scenario& s, int k, Rng& rng) const {
  const int n = static_cast<int>(s.agents.size());
  const int t_f = config_.horizons.t_f;
  Mat z0(n, 2 * t_f), noise(n, 2 * t_f);
  for (int i = 0; i < n; ++i) {
    const feat::AgentFrame frame = feat::make_agent_frame(s.agents[i], s.horizons);
    z0.row(i) = feat::future_to_latent(s.agents[i], s.horizons, frame);
    for (int c = 0; c < 2 * t_f; ++c) noise(i, c) = normal01(rng);
  }
  const double a = std::sqrt(schedule_.alpha_bar(k));
  const double b = std::sqrt(1.0 - schedule_.alpha_bar(k));
  const Mat z_k = a * z0 + b * noise;
  const Mat eps_hat = predict_noise(z_k, k, s);
  return (eps_hat - noise).squaredNorm() / static_cast<double>(n * 2 * t_f);
}

double Denoiser::noise_loss_at(const std::vector<world::Scenario>& scenarios, int k,
                               std::uint64_t seed) const {
  Rng rng = make_rng(seed, 0x10A7);
  double acc = 0.0;
  for (const auto& s : scenarios) acc += noise_loss_single(s, k, rng);
  return scenarios.empty() ? 0.0 : acc / static_cast<double>(scenarios.size());
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json blobs_to_json(const std::vector<nn::TensorBlob>& blobs) {
  json arr = json::array();
  for (const auto& b : blobs)
    arr.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"data", b.data}});
  return arr;
}

std::vector<nn::TensorBlob> blobs_from_json(const json& arr) {
  std::vector<nn::TensorBlob> out;
  for (const auto& j : arr) {
    nn::TensorBlob b;
    b.name = j.at("name").get<std::string>();
    b.rows = j.at("rows").get<int>();
    b.cols = j.at("cols").get<int>();
    b.data = j.at("data").get<std::vector<double>>();
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

void Denoiser::save(const std::string& path) const {
  json j;
  j["kind"] = "denoiser";
  j["config"] = {{"t_h", config_.horizons.t_h},   {"t_f", config_.horizons.t_f},
                 {"dt", config_.horizons.dt},     {"hidden", config_.hidden},
                 {"step_embed", config_.step_embed}, {"lr", config_.lr},
                 {"batch_scenarios", config_.batch_scenarios},
                 {"holdout_fraction", config_.holdout_fraction}};
  j["schedule"] = {{"k", schedule_.steps()},
                   {"beta_start", schedule_.beta_start()},
                   {"beta_end", schedule_.beta_end()}};
  j["epoch"] = epoch_;
  j["seed"] = init_seed_;
  j["params"] = blobs_to_json(nn::dump_params(store_));
  std::ofstream out(path);
  if (!out) throw DataError("denoiser save: cannot open " + path);
  out << j.dump() << "\n";
  if (!out) throw DataError("denoiser save: write failed for " + path);
}

Denoiser Denoiser::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("denoiser load: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("denoiser load: " + path + ": " + e.what());
  }
  if (j.value("kind", "") != "denoiser")
    throw DataError("denoiser load: " + path + " is not a denoiser checkpoint");
  DenoiserConfig cfg;
  const json& c = j.at("config");
  cfg.horizons.t_h = c.at("t_h").get<int>();
  cfg.horizons.t_f = c.at("t_f").get<int>();
  cfg.horizons.dt = c.at("dt").get<double>();
  cfg.hidden = c.at("hidden").get<int>();
  cfg.step_embed = c.at("step_embed").get<int>();
  cfg.lr = c.at("lr").get<double>();
  cfg.batch_scenarios = c.at("batch_scenarios").get<int>();
  cfg.holdout_fraction = c.at("holdout_fraction").get<double>();
  const json& sch = j.at("schedule");
  DiffusionSchedule schedule(sch.at("k").get<int>(), sch.at("beta_start").get<double>(),
                             sch.at("beta_end").get<double>());
  Denoiser d(cfg, schedule, j.at("seed").get<std::uint64_t>());
  d.epoch_ = j.at("epoch").get<int>();
  nn::load_params(d.store_, blobs_from_json(j.at("params")));
  return d;
}

}  // namespace galtraj::diff
