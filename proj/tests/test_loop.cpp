#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "galtraj/active_loop.hpp"
#include "galtraj/errors.hpp"
#include "galtraj/map_builder.hpp"
#include "galtraj/synthesize.hpp"

using namespace galtraj;
using loop::TailRecord;
using loop::TauPolicy;

namespace {

world::Horizons tiny_h{3, 6, 0.1};

std::vector<world::Scenario> tiny_dataset(int count, std::uint64_t seed) {
  world::DatasetConfig config;
  config.count = count;
  config.horizons = tiny_h;
  config.agents_max = 4;
  return world::synthesize_dataset(config, seed);
}

pred::EpochErrors make_errors(
    const std::vector<std::tuple<std::int64_t, int, double, bool>>& rows) {
  pred::EpochErrors e;
  for (const auto& [sid, aid, err, gen] : rows)
    e.records.push_back({sid, aid, err, gen});
  return e;
}

}  // namespace

TEST_CASE("choose_tau percentile convention") {
  std::vector<double> errs;
  for (int i = 1; i <= 100; ++i) errs.push_back(i);
  CHECK(loop::choose_tau(errs, {TauPolicy::Kind::kPercentile, 95.0}) ==
        doctest::Approx(95.05).epsilon(1e-12));
  CHECK(loop::choose_tau({7.0, 7.0, 7.0}, {TauPolicy::Kind::kPercentile, 95.0}) == 7.0);
  CHECK(loop::choose_tau(errs, {TauPolicy::Kind::kFixed, 3.5}) == 3.5);
  CHECK_THROWS_AS(loop::choose_tau({}, {TauPolicy::Kind::kPercentile, 95.0}), ConfigError);
}

TEST_CASE("mine_tail_samples direct cases") {
  const auto recs =
      mine_tail_samples(make_errors({{0, 0, 0.5, false}, {0, 1, 3.0, false}}), 2.0, 4);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].scenario_id == 0);
  CHECK(recs[0].tail_agent_ids == std::vector<int>{1});
  CHECK(recs[0].max_error == 3.0);
  CHECK(recs[0].epoch == 4);

  CHECK(loop::mine_tail_samples(make_errors({{0, 0, 0.5, false}, {1, 0, 1.9, false}}), 2.0, 1)
            .empty());

  // Generated provenance is excluded by contract.
  const auto only_gen = loop::mine_tail_samples(make_errors({{5, 0, 9.0, true}}), 2.0, 1);
  CHECK(only_gen.empty());
}

TEST_CASE("mine_tail_samples equals a brute-force scan on random errors") {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::tuple<std::int64_t, int, double, bool>> rows;
    for (int sid = 0; sid < 100; ++sid) {
      const int n_agents = 1 + static_cast<int>(uniform_index(rng, 4));
      const bool gen = uniform01(rng) < 0.2;
      for (int aid = 0; aid < n_agents; ++aid)
        rows.emplace_back(sid, aid, uniform(rng, 0.0, 5.0), gen);
    }
    const double tau = uniform(rng, 1.0, 4.0);
    const auto got = loop::mine_tail_samples(make_errors(rows), tau, 2);

    // Independent scan.
    std::map<std::int64_t, std::set<int>> want;
    for (const auto& [sid, aid, err, gen] : rows)
      if (!gen && err > tau) want[sid].insert(aid);
    REQUIRE(got.size() == want.size());
    for (const auto& rec : got) {
      REQUIRE(want.count(rec.scenario_id) == 1);
      const auto& ids = want[rec.scenario_id];
      CHECK(std::set<int>(rec.tail_agent_ids.begin(), rec.tail_agent_ids.end()) == ids);
      CHECK(rec.max_error > tau);
    }
  }
}

TEST_CASE("time_window_shift") {
  const auto scenarios = tiny_dataset(3, 77);
  const auto& s = scenarios[0];

  SUBCASE("delta 0 is the identity") {
    const auto same = loop::time_window_shift(s, 0);
    for (std::size_t a = 0; a < s.agents.size(); ++a)
      for (std::size_t i = 0; i < s.agents[a].positions.size(); ++i) {
        CHECK(same.agents[a].positions[i] == s.agents[a].positions[i]);
        CHECK(same.agents[a].valid_mask[i] == s.agents[a].valid_mask[i]);
      }
  }

  SUBCASE("delta 2 re-windows and masks") {
    const int delta = 2;
    const auto shifted = loop::time_window_shift(s, delta);
    const int len = tiny_h.track_length();
    for (std::size_t a = 0; a < s.agents.size(); ++a) {
      int valid_future = 0;
      for (int t = 1; t <= tiny_h.t_f; ++t)
        if (shifted.agents[a].valid_mask[world::AgentTrack::index_of(tiny_h, t)]) ++valid_future;
      CHECK(valid_future == tiny_h.t_f - delta);
      // Content moved: new index j holds old index j + delta.
      for (int j = 0; j + delta < len; ++j)
        CHECK(shifted.agents[a].positions[j] == s.agents[a].positions[j + delta]);
      // Trailing steps are zero-padded and invalid.
      for (int j = len - delta; j < len; ++j) {
        CHECK_FALSE(shifted.agents[a].valid_mask[j]);
        CHECK(shifted.agents[a].positions[j] == geom::Vec2::Zero());
      }
    }
  }

  SUBCASE("delta out of range") {
    CHECK_THROWS_AS(loop::time_window_shift(s, -1), ConfigError);
    CHECK_THROWS_AS(loop::time_window_shift(s, tiny_h.t_f / 2 + 1), ConfigError);
  }
}

TEST_CASE("weighted dataset update rule") {
  auto scenarios = tiny_dataset(2, 5);
  loop::WeightedDataset ds(scenarios, 0.5, 0.2);
  REQUIRE(ds.size() == 2);
  CHECK(ds.weight(0) == 1.0);

  loop::update_dataset(ds, {{scenarios[0], scenarios[0].scenario_id}});
  CHECK(ds.weight(0) == 0.5);
  CHECK(ds.weight(1) == 0.5);
  CHECK(ds.weight(2) == 1.0);
  CHECK(ds.entry(2).provenance == loop::Provenance::kGenerated);
  CHECK(*ds.entry(2).parent_id == scenarios[0].scenario_id);
  CHECK(ds.entry(2).scenario.scenario_id == 2);  // fresh unique id

  // Clipping at w_min.
  loop::update_dataset(ds, {});
  loop::update_dataset(ds, {});
  CHECK(ds.weight(0) == 0.2);  // 0.125 clipped

  // Closed form alpha^E before the clip binds.
  loop::WeightedDataset ds2(tiny_dataset(2, 6), 0.9, 1e-9);
  for (int e = 0; e < 7; ++e) loop::update_dataset(ds2, {});
  CHECK(ds2.weight(0) == std::pow(0.9, 7));  // bitwise: both sides use pow

  CHECK_THROWS_AS(loop::WeightedDataset(tiny_dataset(2, 7), 1.5, 0.2), ConfigError);
}

TEST_CASE("weighted sampling matches the multinomial oracle") {
  // Uniform weights: chi-square over 10^4 draws.
  Rng rng = make_rng(23);
  const int n_items = 20, draws = 10000;
  std::vector<double> weights(n_items, 1.0);
  const auto picks = loop::weighted_sample_with_replacement(weights, draws, rng);
  std::vector<int> counts(n_items, 0);
  for (auto i : picks) counts[i]++;
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / n_items;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 43.82);  // df=19, p=0.001

  // Weights (2,1,1,...): first item visited about twice as often.
  std::vector<double> w2(n_items, 1.0);
  w2[0] = 2.0;
  const auto picks2 = loop::weighted_sample_with_replacement(w2, draws, rng);
  int first = 0;
  for (auto i : picks2) first += i == 0 ? 1 : 0;
  const double p_first = 2.0 / (n_items + 1);
  const double sigma = std::sqrt(p_first * (1 - p_first) * draws);
  CHECK(std::abs(first - p_first * draws) <= 4 * sigma);

  CHECK_THROWS_AS(loop::weighted_sample_with_replacement({}, 1, rng), ConfigError);
  CHECK_THROWS_AS(loop::weighted_sample_with_replacement({0.0, 0.0}, 1, rng), ConfigError);
}

TEST_CASE("augment_tail skips unknown records and keeps the past") {
  const auto scenarios = tiny_dataset(6, 9);
  loop::WeightedDataset ds(scenarios, 0.9, 0.2);
  const diff::DiffusionSchedule schedule(8, 1e-4, 0.05);
  diff::DenoiserConfig dc;
  dc.horizons = tiny_h;
  dc.hidden = 16;
  diff::Denoiser den(dc, schedule, 3);

  std::vector<TailRecord> records;
  records.push_back({scenarios[1].scenario_id, {0}, 1, 5.0});
  records.push_back({9999, {0}, 1, 5.0});  // unknown -> skipped

  diff::GuidanceConfig guidance;
  const auto out = loop::augment_tail(records, ds, den, guidance, 4);
  CHECK(out.failures == 1);
  REQUIRE(out.generated.size() == 1);
  const auto& [gen, parent] = out.generated[0];
  CHECK(parent == scenarios[1].scenario_id);
  // Past (t <= 0) equals the original past; future replaced.
  for (std::size_t a = 0; a < gen.agents.size(); ++a)
    for (int t = -tiny_h.t_h; t <= 0; ++t) {
      const int idx = world::AgentTrack::index_of(tiny_h, t);
      CHECK(gen.agents[a].positions[idx] == scenarios[1].agents[a].positions[idx]);
    }
}

TEST_CASE("run_method bookkeeping on a tiny problem") {
  const auto train = tiny_dataset(14, 31);
  const auto val = tiny_dataset(4, 32);

  loop::RunConfig config;
  config.total_epochs = 3;
  config.epoch_size = 10;
  config.seed = 5;
  config.predictor.horizons = tiny_h;
  config.predictor.hidden = 16;
  config.predictor.dec_hidden = 16;
  config.tau_policy = {TauPolicy::Kind::kPercentile, 80.0};

  const diff::DiffusionSchedule schedule(8, 1e-4, 0.05);
  diff::DenoiserConfig dc;
  dc.horizons = tiny_h;
  dc.hidden = 16;
  diff::Denoiser den(dc, schedule, 3);
  den.train(train, 1, 1);

  CHECK(config.initial_epochs() == 2);

  SUBCASE("vanilla has zero mining and generation events") {
    const auto result = loop::run_method(loop::Method::kVanilla, config, train, val, nullptr);
    REQUIRE(result.history.epochs.size() == 3);
    for (const auto& e : result.history.epochs) {
      CHECK(e.sampled_count == 10);
      CHECK(e.tail_scenario_count == 0);
      CHECK(e.generated_count == 0);
      CHECK(e.dataset_size == 14);
    }
    CHECK_FALSE(result.reference_table.empty());
  }

  SUBCASE("resampling never grows the dataset") {
    const auto result =
        loop::run_method(loop::Method::kResampling, config, train, val, nullptr);
    for (const auto& e : result.history.epochs) {
      CHECK(e.dataset_size == 14);
      CHECK(e.generated_count == 0);
    }
    CHECK(result.history.epochs.back().tail_scenario_count > 0);
  }

  SUBCASE("galtraj generates and decays weights") {
    const auto result = loop::run_method(loop::Method::kGalTraj, config, train, val, &den);
    const auto& last = result.history.epochs.back();
    CHECK(last.generated_count > 0);
    CHECK(last.dataset_size == 14 + last.generated_count);
    CHECK(last.weight_min < 1.0);
    CHECK(last.weight_max == 1.0);
  }

  SUBCASE("naive generates without reweighting") {
    const auto result = loop::run_method(loop::Method::kNaive, config, train, val, &den);
    const auto& last = result.history.epochs.back();
    CHECK(last.generated_count > 0);
    CHECK(last.weight_min == 1.0);  // direct concatenation
  }

  SUBCASE("generative methods require a denoiser") {
    CHECK_THROWS_AS(loop::run_method(loop::Method::kGalTraj, config, train, val, nullptr),
                    ConfigError);
  }

  SUBCASE("fixed seeds reproduce the deterministic history sections") {
    const auto a = loop::run_method(loop::Method::kGalTraj, config, train, val, &den);
    const auto b = loop::run_method(loop::Method::kGalTraj, config, train, val, &den);
    CHECK(loop::history_deterministic_digest(a.history) ==
          loop::history_deterministic_digest(b.history));
  }
}

TEST_CASE("history io round trip") {
  loop::RunHistory h;
  h.method = "galtraj";
  h.seed = 7;
  h.total_epochs = 2;
  h.initial_epochs = 1;
  h.epoch_size = 10;
  h.alpha = 0.9;
  h.w_min = 0.2;
  h.created_at = "2000-01-01T00:00:00Z";
  loop::EpochRecord e;
  e.epoch = 1;
  e.val_minade6 = 1.5;
  h.epochs.push_back(e);
  loop::StageTimes t;
  t.train_ms = 12.0;
  t.epoch_ms = 13.0;
  h.timings.push_back(t);

  loop::save_history(h, "/tmp/galtraj_hist.json");
  const auto back = loop::load_history("/tmp/galtraj_hist.json");
  CHECK(back.method == "galtraj");
  CHECK(back.epochs.size() == 1);
  CHECK(*back.epochs[0].val_minade6 == 1.5);
  CHECK(back.timings[0].train_ms == 12.0);
  CHECK(loop::history_deterministic_digest(back) == loop::history_deterministic_digest(h));

  // Timestamps and timings stay out of the deterministic digest.
  loop::RunHistory other = h;
  other.created_at = "2020-12-31T00:00:00Z";
  other.timings[0].train_ms = 99.0;
  CHECK(loop::history_deterministic_digest(other) == loop::history_deterministic_digest(h));
}

TEST_CASE("method names round trip") {
  for (int i = 0; i < 4; ++i) {
    const auto m = static_cast<loop::Method>(i);
    CHECK(*loop::method_from_name(loop::method_name(m)) == m);
  }
  CHECK_FALSE(loop::method_from_name("nope").has_value());
}
