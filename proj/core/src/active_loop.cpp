#include "galtraj/active_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>

#include "galtraj/errors.hpp"
#include "galtraj/rng.hpp"

namespace galtraj::loop {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

double choose_tau(const std::vector<double>& errors, const TauPolicy& policy) {
  if (policy.kind == TauPolicy::Kind::kFixed) return policy.value;
  if (errors.empty()) throw ConfigError("choose_tau: empty error list");
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const double p = policy.value / 100.0;
  if (sorted.size() == 1) return sorted[0];
  const double rank = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<TailRecord> mine_tail_samples(const pred::EpochErrors& errors, double tau,
                                          int epoch) {
  std::map<std::int64_t, TailRecord> by_scenario;
  for (const auto& rec : errors.records) {
    if (rec.generated || !rec.min_ade) continue;
    if (*rec.min_ade <= tau) continue;
    TailRecord& tr = by_scenario
                         .try_emplace(rec.scenario_id,
                                      TailRecord{rec.scenario_id, {}, epoch, *rec.min_ade})
                         .first->second;
    tr.tail_agent_ids.push_back(rec.agent_id);
    tr.max_error = std::max(tr.max_error, *rec.min_ade);
  }
  std::vector<TailRecord> out;
  out.reserve(by_scenario.size());
  for (auto& [sid, rec] : by_scenario) {
    std::sort(rec.tail_agent_ids.begin(), rec.tail_agent_ids.end());
    out.push_back(std::move(rec));
  }
  return out;
}

world::Scenario time_window_shift(const world::Scenario& generated, int delta_t, int delta_max) {
  const world::Horizons& h = generated.horizons;
  if (delta_max < 0) delta_max = h.t_f / 2;
  if (delta_t < 0 || delta_t > delta_max)
    throw ConfigError("time_window_shift: delta_t " + std::to_string(delta_t) +
                      " outside [0, " + std::to_string(delta_max) + "]");
  if (delta_t == 0) return generated;
  world::Scenario out = generated;
  const int len = h.track_length();
  for (std::size_t a = 0; a < out.agents.size(); ++a) {
    const world::AgentTrack& src = generated.agents[a];
    world::AgentTrack& dst = out.agents[a];
    for (int j = 0; j < len; ++j) {
      const int from = j + delta_t;
      if (from < len) {
        dst.positions[static_cast<std::size_t>(j)] = src.positions[static_cast<std::size_t>(from)];
        dst.valid_mask[static_cast<std::size_t>(j)] = src.valid_mask[static_cast<std::size_t>(from)];
      } else {
        dst.positions[static_cast<std::size_t>(j)] = geom::Vec2::Zero();
        dst.valid_mask[static_cast<std::size_t>(j)] = false;
      }
    }
  }
  return out;
}

AugmentResult augment_tail(const std::vector<TailRecord>& records,
                           const WeightedDataset& dataset, const diff::Denoiser& denoiser,
                           const diff::GuidanceConfig& guidance, std::uint64_t seed,
                           GenerationMode mode) {
  AugmentResult result;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const TailRecord& record = records[r];
    const auto idx = dataset.index_of(record.scenario_id);
    if (!idx) {
      ++result.failures;
      std::cerr << "[augment] skip record " << record.scenario_id << ": unknown scenario\n";
      continue;
    }
    const world::Scenario& original = dataset.entry(*idx).scenario;
    const std::uint64_t record_seed = mix_seed(seed, 0xAB000 + r);
    try {
      diff::GeneratedFutures futures;
      if (mode == GenerationMode::kTailAware) {
        const int n = static_cast<int>(original.agents.size());
        std::vector<bool> is_tail(static_cast<std::size_t>(n), false);
        for (int id : record.tail_agent_ids)
          for (int i = 0; i < n; ++i)
            if (original.agents[static_cast<std::size_t>(i)].agent_id == id)
              is_tail[static_cast<std::size_t>(i)] = true;
        const nn::Mat attention =
            diff::preliminary_attention(denoiser, original, guidance, record_seed);
        const auto categories = diff::categorize_from_tail_set(
            is_tail, attention, diff::all_other_neighbors(n));
        futures = diff::real_guided_sample(denoiser, original, categories, guidance,
                                           record_seed, /*gradient_guidance=*/true);
        result.guidance_warnings += futures.guidance_warnings;
      } else {
        futures = diff::unguided_sample(denoiser, original, record_seed);
      }

      world::Scenario generated = original;
      for (std::size_t a = 0; a < generated.agents.size(); ++a) {
        for (int t = 1; t <= generated.horizons.t_f; ++t) {
          const int j = world::AgentTrack::index_of(generated.horizons, t);
          generated.agents[a].positions[static_cast<std::size_t>(j)] =
              futures.futures[a][static_cast<std::size_t>(t - 1)];
          generated.agents[a].valid_mask[static_cast<std::size_t>(j)] = true;
        }
      }
      result.generated.emplace_back(std::move(generated), record.scenario_id);
    } catch (const std::exception& e) {
      ++result.failures;
      std::cerr << "[augment] skip record " << record.scenario_id << ": " << e.what() << "\n";
    }
  }
  return result;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kVanilla: return "vanilla";
    case Method::kResampling: return "resampling";
    case Method::kNaive: return "naive";
    case Method::kGalTraj: return "galtraj";
  }
  return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (int i = 0; i < 4; ++i) {
    const Method m = static_cast<Method>(i);
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

int RunConfig::initial_epochs() const {
  return static_cast<int>(std::ceil(initial_fraction * total_epochs));
}

void RunConfig::validate() const {
  if (total_epochs < 1) throw ConfigError("run: total_epochs must be >= 1");
  if (!(initial_fraction > 0.0 && initial_fraction < 1.0))
    throw ConfigError("run: initial_fraction outside (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("run: alpha outside (0,1)");
  if (!(w_min > 0.0 && w_min < 1.0)) throw ConfigError("run: w_min outside (0,1)");
  if (epoch_size < 1) throw ConfigError("run: epoch_size must be >= 1");
  guidance.validate();
}

metrics::ErrorTable evaluate_predictor(const pred::Predictor& predictor,
                                       const std::vector<world::Scenario>& split,
                                       const std::string& model_tag,
                                       const std::string& split_tag) {
  metrics::ErrorTable table;
  table.model = model_tag;
  table.split = split_tag;
  for (const auto& scenario : split) {
    const pred::PredictionSet pset = predictor.predict(scenario);
    for (std::size_t a = 0; a < scenario.agents.size(); ++a) {
      const auto ade = metrics::min_ade(pset.agents[a].modes, scenario.agents[a],
                                        scenario.horizons);
      const auto fde = metrics::min_fde(pset.agents[a].modes, scenario.agents[a],
                                        scenario.horizons);
      if (!ade || !fde) continue;
      table.insert({scenario.scenario_id, scenario.agents[a].agent_id}, {*ade, *fde});
    }
  }
  return table;
}

RunResult run_method(Method method, const RunConfig& config,
                     const std::vector<world::Scenario>& train,
                     const std::vector<world::Scenario>& val,
                     const diff::Denoiser* denoiser) {
  config.validate();
  if (train.empty()) throw ConfigError("run: empty training dataset");
  const bool generative = method == Method::kGalTraj || method == Method::kNaive;
  if (generative && denoiser == nullptr)
    throw ConfigError(std::string("run: method ") + method_name(method) +
                      " requires a pretrained denoiser");

  WeightedDataset dataset(train, config.alpha, config.w_min);
  pred::Predictor predictor(config.predictor, mix_seed(config.seed, 0x11));

  RunHistory history;
  history.method = method_name(method);
  history.seed = config.seed;
  history.total_epochs = config.total_epochs;
  history.initial_epochs = config.initial_epochs();
  history.epoch_size = config.epoch_size;
  history.alpha = config.alpha;
  history.w_min = config.w_min;

  metrics::ErrorTable reference;
  pred::EpochErrors prev_errors;

  for (int epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    EpochRecord rec;
    StageTimes times;
    rec.epoch = epoch;
    rec.loop_phase = epoch > config.initial_epochs();

    if (rec.loop_phase && method != Method::kVanilla) {
      // Mine from the errors of the epoch that just finished.
      auto t0 = Clock::now();
      std::vector<double> original_errors;
      int visited = 0;
      for (const auto& r : prev_errors.records) {
        if (r.generated || !r.min_ade) continue;
        original_errors.push_back(*r.min_ade);
        ++visited;
      }
      rec.visited_agent_count = visited;
      const double tau = choose_tau(original_errors, config.tau_policy);
      rec.tau = tau;
      const std::vector<TailRecord> tails = mine_tail_samples(prev_errors, tau, epoch);
      rec.tail_scenario_count = static_cast<int>(tails.size());
      for (const auto& t : tails) rec.tail_agent_count += static_cast<int>(t.tail_agent_ids.size());
      rec.tail_agent_fraction =
          visited > 0 ? static_cast<double>(rec.tail_agent_count) / visited : 0.0;
      times.mine_ms = ms_since(t0);

      if (method == Method::kGalTraj || method == Method::kNaive) {
        t0 = Clock::now();
        const GenerationMode mode = method == Method::kGalTraj ? GenerationMode::kTailAware
                                                               : GenerationMode::kUnguidedNoise;
        AugmentResult aug = augment_tail(tails, dataset, *denoiser, config.guidance,
                                         mix_seed(config.seed, 0x500 + epoch), mode);
        rec.generation_failures = aug.failures;
        times.generate_ms = ms_since(t0);

        t0 = Clock::now();
        if (method == Method::kGalTraj) {
          Rng shift_rng = make_rng(config.seed, 0x600 + epoch);
          const int delta_max =
              config.delta_max < 0 ? config.predictor.horizons.t_f / 2 : config.delta_max;
          for (auto& [scenario, parent] : aug.generated) {
            const int delta = static_cast<int>(uniform_index(
                shift_rng, static_cast<std::size_t>(delta_max + 1)));
            scenario = time_window_shift(scenario, delta, delta_max);
          }
        }
        times.shift_ms = ms_since(t0);

        t0 = Clock::now();
        rec.generated_count = static_cast<int>(aug.generated.size());
        if (method == Method::kGalTraj) {
          update_dataset(dataset, std::move(aug.generated));
        } else {
          // Naive: direct concatenation, no decay bookkeeping.
          for (auto& [scenario, parent] : aug.generated)
            dataset.append_generated(std::move(scenario), parent);
        }
        times.update_ms = ms_since(t0);
      } else if (method == Method::kResampling) {
        t0 = Clock::now();
        dataset.decay_all();
        for (const auto& t : tails) {
          const auto idx = dataset.index_of(t.scenario_id);
          if (idx) dataset.reset_weight(*idx);
        }
        times.update_ms = ms_since(t0);
      }
    }

    auto t0 = Clock::now();
    prev_errors = predictor.train_epoch(dataset, config.epoch_size,
                                        mix_seed(config.seed, 0x700 + epoch));
    times.train_ms = ms_since(t0);
    rec.sampled_count = config.epoch_size;

    t0 = Clock::now();
    if (!val.empty()) {
      const metrics::ErrorTable table =
          evaluate_predictor(predictor, val, history.method, "val");
      double ade = 0.0, fde = 0.0;
      for (const auto& [key, row] : table.rows()) {
        ade += row.minade6;
        fde += row.minfde6;
      }
      if (!table.empty()) {
        rec.val_minade6 = ade / static_cast<double>(table.size());
        rec.val_minfde6 = fde / static_cast<double>(table.size());
      }
      if (epoch == config.initial_epochs()) {
        reference = evaluate_predictor(predictor, val, "pretrained", "val");
      }
    }
    times.eval_ms = ms_since(t0);

    rec.dataset_size = static_cast<std::int64_t>(dataset.size());
    double w_min_seen = 1.0, w_max_seen = 0.0, w_sum = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const double w = dataset.weight(i);
      w_min_seen = std::min(w_min_seen, w);
      w_max_seen = std::max(w_max_seen, w);
      w_sum += w;
    }
    rec.weight_min = w_min_seen;
    rec.weight_max = w_max_seen;
    rec.weight_mean = dataset.size() > 0 ? w_sum / static_cast<double>(dataset.size()) : 0.0;

    times.epoch_ms = ms_since(epoch_start);
    history.epochs.push_back(rec);
    history.timings.push_back(times);
  }

  return RunResult{std::move(predictor), std::move(history), std::move(reference)};
}

}  // namespace galtraj::loop
