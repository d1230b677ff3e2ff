#include "galtraj/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "galtraj/errors.hpp"
#include "galtraj/features.hpp"
#include "galtraj/metrics.hpp"
#include "galtraj/rng.hpp"

namespace galtraj::pred {

namespace {

using nn::Mat;
using nn::Tape;

}  // namespace

Predictor::Predictor(PredictorConfig config, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed) {
  Rng rng = make_rng(init_seed, 0x9ED1C7);
  const int in = feat::condition_dim(config_.horizons.t_h);
  const int h = config_.hidden;
  const int d = config_.dec_hidden;
  const int out = config_.n_modes * 2 * config_.horizons.t_f;
  enc_ = nn::Linear(store_, "enc", in, h, rng);
  att_q_ = nn::Linear(store_, "att_q", h, h, rng);
  att_k_ = nn::Linear(store_, "att_k", h, h, rng);
  att_v_ = nn::Linear(store_, "att_v", h, h, rng);
  att_o_ = nn::Linear(store_, "att_o", h, h, rng);
  post_ = nn::Linear(store_, "post", h, h, rng);
  dec_ = nn::Linear(store_, "dec", h, d, rng);
  traj_out_ = nn::Linear(store_, "traj_out", d, out, rng);
  logit_out_ = nn::Linear(store_, "logit_out", d, config_.n_modes, rng);
  adam_ = nn::Adam(store_, {.lr = config_.lr});
}

Predictor::SceneOutput Predictor::forward(nn::Tape& tape, const world::Scenario& scenario) const {
  if (!(scenario.horizons == config_.horizons))
    throw DataError("predictor: scenario horizons do not match the model");
  const int n = static_cast<int>(scenario.agents.size());
  Mat x(n, feat::condition_dim(config_.horizons.t_h));
  for (int i = 0; i < n; ++i) {
    const feat::AgentFrame frame = feat::make_agent_frame(scenario.agents[i], scenario.horizons);
    x.row(i) = feat::encode_condition(scenario, i, frame);
  }
  Tape::Var xv = tape.constant(std::move(x));
  Tape::Var h1 = tape.tanh(enc_.apply(tape, xv));
  Tape::Var q = att_q_.apply(tape, h1);
  Tape::Var k = att_k_.apply(tape, h1);
  Tape::Var v = att_v_.apply(tape, h1);
  Tape::Var scores = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(config_.hidden));
  Tape::Var att = tape.softmax_rows(scores);
  Tape::Var ctx = att_o_.apply(tape, tape.matmul(att, v));
  Tape::Var h2 = tape.tanh(post_.apply(tape, tape.add(h1, ctx)));
  Tape::Var d = tape.tanh(dec_.apply(tape, h2));
  SceneOutput out;
  out.traj = traj_out_.apply(tape, d);
  out.logits = logit_out_.apply(tape, d);
  return out;
}

PredictionSet Predictor::predict(const world::Scenario& scenario) const {
  nn::Tape tape(const_cast<nn::ParamStore*>(&store_));
  const SceneOutput out = forward(tape, scenario);
  const Mat& traj = tape.value(out.traj);
  const Mat& logits = tape.value(out.logits);
  const int t_f = config_.horizons.t_f;

  PredictionSet set;
  set.agents.resize(scenario.agents.size());
  for (std::size_t i = 0; i < scenario.agents.size(); ++i) {
    const feat::AgentFrame frame = feat::make_agent_frame(scenario.agents[i], scenario.horizons);
    AgentPrediction& ap = set.agents[i];
    ap.modes.resize(config_.n_modes);
    ap.mode_probs.resize(config_.n_modes);
    const double mx = logits.row(static_cast<Eigen::Index>(i)).maxCoeff();
    double z = 0.0;
    for (int m = 0; m < config_.n_modes; ++m)
      z += std::exp(logits(static_cast<Eigen::Index>(i), m) - mx);
    for (int m = 0; m < config_.n_modes; ++m) {
      ap.mode_probs[m] = std::exp(logits(static_cast<Eigen::Index>(i), m) - mx) / z;
      Eigen::RowVectorXd latent =
          traj.row(static_cast<Eigen::Index>(i)).segment(m * 2 * t_f, 2 * t_f);
      ap.modes[m] = feat::latent_to_future(latent, frame);
      for (const auto& p : ap.modes[m])
        if (!std::isfinite(p.x()) || !std::isfinite(p.y()))
          throw NumericError("predictor: non-finite prediction");
    }
  }
  return set;
}

nn::Tape::Var Predictor::build_wta_loss(nn::Tape& tape, const world::Scenario& scenario,
                                        std::vector<int>* winners_out,
                                        std::vector<std::optional<double>>* min_ades_out) const {
  const SceneOutput out = forward(tape, scenario);
  const Mat& traj = tape.value(out.traj);
  const int n = static_cast<int>(scenario.agents.size());
  const int t_f = config_.horizons.t_f;
  const int cols = config_.n_modes * 2 * t_f;

  Mat target = Mat::Zero(n, cols);
  Mat weight = Mat::Zero(n, cols);
  std::vector<int> winners(static_cast<std::size_t>(n), 0);
  std::vector<std::optional<double>> min_ades(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const world::AgentTrack& track = scenario.agents[i];
    const feat::AgentFrame frame = feat::make_agent_frame(track, scenario.horizons);
    const Eigen::RowVectorXd truth = feat::future_to_latent(track, scenario.horizons, frame);

    int n_valid = 0;
    for (int t = 1; t <= t_f; ++t)
      if (track.valid_mask[world::AgentTrack::index_of(scenario.horizons, t)]) ++n_valid;

    // Winner = mode with least ADE over valid steps (latent units).
    int best_mode = 0;
    double best_ade = std::numeric_limits<double>::infinity();
    for (int m = 0; m < config_.n_modes; ++m) {
      double sum = 0.0;
      for (int t = 1; t <= t_f; ++t) {
        if (!track.valid_mask[world::AgentTrack::index_of(scenario.horizons, t)]) continue;
        const int c = m * 2 * t_f + 2 * (t - 1);
        const double dx = traj(i, c) - truth(2 * (t - 1));
        const double dy = traj(i, c + 1) - truth(2 * (t - 1) + 1);
        sum += std::sqrt(dx * dx + dy * dy);
      }
      if (n_valid > 0 && sum < best_ade) {
        best_ade = sum;
        best_mode = m;
      }
    }
    winners[static_cast<std::size_t>(i)] = best_mode;
    if (n_valid > 0)
      min_ades[static_cast<std::size_t>(i)] = best_ade / n_valid * feat::kLatentScale;

    for (int m = 0; m < config_.n_modes; ++m)
      target.row(i).segment(m * 2 * t_f, 2 * t_f) = truth;
    if (n_valid > 0) {
      const double w = 1.0 / (static_cast<double>(n) * 2.0 * n_valid);
      for (int t = 1; t <= t_f; ++t) {
        if (!track.valid_mask[world::AgentTrack::index_of(scenario.horizons, t)]) continue;
        const int c = best_mode * 2 * t_f + 2 * (t - 1);
        weight(i, c) = w;
        weight(i, c + 1) = w;
      }
    }
  }
  if (winners_out) *winners_out = winners;
  if (min_ades_out) *min_ades_out = min_ades;
  Tape::Var reg = tape.weighted_mse(out.traj, target, weight, 1.0);
  if (config_.ce_weight > 0.0) {
    Tape::Var ce = tape.cross_entropy_rows(out.logits, winners);
    return tape.add_to_scalar(reg, ce, config_.ce_weight);
  }
  return reg;
}

EpochErrors Predictor::train_epoch(const loop::WeightedDataset& dataset, int epoch_size,
                                   std::uint64_t seed) {
  if (dataset.empty()) throw ConfigError("train_epoch: empty dataset");
  if (epoch_size < 0 || epoch_size > config_.max_epoch_size)
    throw ConfigError("train_epoch: epoch_size outside [0, max_epoch_size]");

  EpochErrors errors;
  std::map<std::pair<std::int64_t, int>, std::size_t> seen;
  if (epoch_size == 0) {
    ++epoch_;
    return errors;
  }

  std::vector<double> weights(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) weights[i] = dataset.weight(i);

  Rng rng = make_rng(seed, 0x7E41);
  const std::vector<std::size_t> draws =
      loop::weighted_sample_with_replacement(weights, epoch_size, rng);
  int in_batch = 0;
  for (int drawn = 0; drawn < epoch_size; ++drawn) {
    const std::size_t idx = draws[static_cast<std::size_t>(drawn)];
    const loop::DatasetEntry& entry = dataset.entry(idx);
    const world::Scenario& scenario = entry.scenario;

    nn::Tape tape(&store_);
    std::vector<std::optional<double>> min_ades;
    Tape::Var loss = build_wta_loss(tape, scenario, nullptr, &min_ades);
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value))
      throw NumericError("train_epoch: non-finite loss at draw " + std::to_string(drawn) +
                         " (scenario " + std::to_string(scenario.scenario_id) + ")");
    tape.backward(tape.scale(loss, 1.0 / config_.batch_scenarios));
    ++in_batch;

    // minADE6 comes straight from the loss pass; no extra inference.
    for (std::size_t a = 0; a < scenario.agents.size(); ++a) {
      AgentErrorRecord rec;
      rec.scenario_id = scenario.scenario_id;
      rec.agent_id = scenario.agents[a].agent_id;
      rec.generated = entry.provenance == loop::Provenance::kGenerated;
      rec.min_ade = min_ades[a];
      const auto key = std::make_pair(rec.scenario_id, rec.agent_id);
      const auto it = seen.find(key);
      if (it == seen.end()) {
        seen.emplace(key, errors.records.size());
        errors.records.push_back(rec);
      } else {
        errors.records[it->second] = rec;
      }
    }

    if (in_batch == config_.batch_scenarios || drawn + 1 == epoch_size) {
      adam_.step(store_);
      in_batch = 0;
    }
  }
  ++epoch_;
  return errors;
}

std::optional<double> per_agent_error(const AgentPrediction& pred,
                                      const world::AgentTrack& truth,
                                      const world::Horizons& horizons) {
  return metrics::min_ade(pred.modes, truth, horizons);
}

// ---------------------------------------------------------------------------
// Checkpointing

namespace {

using nlohmann::json;

json blobs_to_json(const std::vector<nn::TensorBlob>& blobs) {
  json arr = json::array();
  for (const auto& b : blobs) {
    arr.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"data", b.data}});
  }
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

json moments_to_json(const std::vector<Mat>& ms) {
  json arr = json::array();
  for (const auto& m : ms) {
    std::vector<double> data(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c)
        data[static_cast<std::size_t>(r) * m.cols() + c] = m(r, c);
    arr.push_back({{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}});
  }
  return arr;
}

void moments_from_json(const json& arr, std::vector<Mat>& ms) {
  if (arr.size() != ms.size()) throw DataError("checkpoint: adam moment count mismatch");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const json& j = arr[i];
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    if (rows != ms[i].rows() || cols != ms[i].cols())
      throw DataError("checkpoint: adam moment shape mismatch");
    const auto data = j.at("data").get<std::vector<double>>();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) ms[i](r, c) = data[static_cast<std::size_t>(r) * cols + c];
  }
}

}  // namespace

void Predictor::save(const std::string& path) const {
  json j;
  j["kind"] = "predictor";
  j["config"] = {{"t_h", config_.horizons.t_h},
                 {"t_f", config_.horizons.t_f},
                 {"dt", config_.horizons.dt},
                 {"hidden", config_.hidden},
                 {"dec_hidden", config_.dec_hidden},
                 {"n_modes", config_.n_modes},
                 {"ce_weight", config_.ce_weight},
                 {"lr", config_.lr},
                 {"batch_scenarios", config_.batch_scenarios},
                 {"max_epoch_size", config_.max_epoch_size}};
  j["epoch"] = epoch_;
  j["seed"] = init_seed_;
  j["params"] = blobs_to_json(nn::dump_params(store_));
  j["adam"] = {{"t", adam_.steps_taken()},
               {"m", moments_to_json(const_cast<Predictor*>(this)->adam_.moments_m())},
               {"v", moments_to_json(const_cast<Predictor*>(this)->adam_.moments_v())}};
  std::ofstream out(path);
  if (!out) throw DataError("predictor save: cannot open " + path);
  out << j.dump() << "\n";
  if (!out) throw DataError("predictor save: write failed for " + path);
}

Predictor Predictor::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("predictor load: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("predictor load: " + path + ": " + e.what());
  }
  if (j.value("kind", "") != "predictor")
    throw DataError("predictor load: " + path + " is not a predictor checkpoint");
  PredictorConfig cfg;
  const json& c = j.at("config");
  cfg.horizons.t_h = c.at("t_h").get<int>();
  cfg.horizons.t_f = c.at("t_f").get<int>();
  cfg.horizons.dt = c.at("dt").get<double>();
  cfg.hidden = c.at("hidden").get<int>();
  cfg.dec_hidden = c.at("dec_hidden").get<int>();
  cfg.n_modes = c.at("n_modes").get<int>();
  cfg.ce_weight = c.at("ce_weight").get<double>();
  cfg.lr = c.at("lr").get<double>();
  cfg.batch_scenarios = c.at("batch_scenarios").get<int>();
  cfg.max_epoch_size = c.at("max_epoch_size").get<int>();
  Predictor p(cfg, j.at("seed").get<std::uint64_t>());
  p.epoch_ = j.at("epoch").get<int>();
  nn::load_params(p.store_, blobs_from_json(j.at("params")));
  const json& a = j.at("adam");
  p.adam_.set_steps_taken(a.at("t").get<int>());
  moments_from_json(a.at("m"), p.adam_.moments_m());
  moments_from_json(a.at("v"), p.adam_.moments_v());
  return p;
}

}  // namespace galtraj::pred
