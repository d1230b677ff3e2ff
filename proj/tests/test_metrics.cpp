#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "galtraj/errors.hpp"
#include "galtraj/metrics.hpp"
#include "galtraj/rng.hpp"

using namespace galtraj;
using geom::Vec2;

namespace {

world::Horizons small_h{2, 5, 0.1};

world::AgentTrack make_truth(const std::vector<Vec2>& future) {
  world::AgentTrack t;
  t.agent_id = 0;
  t.positions.assign(static_cast<std::size_t>(small_h.track_length()), Vec2::Zero());
  t.valid_mask.assign(static_cast<std::size_t>(small_h.track_length()), true);
  for (int i = 1; i <= small_h.t_f; ++i)
    t.positions[static_cast<std::size_t>(world::AgentTrack::index_of(small_h, i))] =
        future[static_cast<std::size_t>(i - 1)];
  return t;
}

// Plain nested-loop re-implementations, independent of the library path.
double oracle_min_ade(const std::vector<std::vector<Vec2>>& modes,
                      const world::AgentTrack& truth) {
  double best = 0.0;
  bool first = true;
  for (const auto& mode : modes) {
    double sum = 0.0;
    int n = 0;
    for (int t = 1; t <= small_h.t_f; ++t) {
      const int idx = world::AgentTrack::index_of(small_h, t);
      if (!truth.valid_mask[static_cast<std::size_t>(idx)]) continue;
      const double dx = mode[static_cast<std::size_t>(t - 1)].x() -
                        truth.positions[static_cast<std::size_t>(idx)].x();
      const double dy = mode[static_cast<std::size_t>(t - 1)].y() -
                        truth.positions[static_cast<std::size_t>(idx)].y();
      sum += std::sqrt(dx * dx + dy * dy);
      ++n;
    }
    const double score = sum / n;
    if (first || score < best) {
      best = score;
      first = false;
    }
  }
  return best;
}

metrics::ErrorTable random_table(Rng& rng, int n, const char* model = "m") {
  metrics::ErrorTable t;
  t.model = model;
  t.split = "test";
  for (int i = 0; i < n; ++i)
    t.insert({i / 4, i % 4}, {uniform(rng, 0.0, 20.0), uniform(rng, 0.0, 30.0)});
  return t;
}

metrics::ErrorTable table_from(const std::vector<double>& errors) {
  metrics::ErrorTable t;
  t.model = "m";
  t.split = "s";
  for (std::size_t i = 0; i < errors.size(); ++i)
    t.insert({static_cast<std::int64_t>(i), 0}, {errors[i], errors[i]});
  return t;
}

double oracle_top_k(const metrics::ErrorTable& ref, const metrics::ErrorTable& cur, double k) {
  struct Item {
    metrics::ErrorKey key;
    double ref_err;
  };
  std::vector<Item> items;
  for (const auto& [key, row] : ref.rows()) items.push_back({key, row.minade6});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.ref_err != b.ref_err) return a.ref_err > b.ref_err;
    return a.key < b.key;
  });
  const std::size_t m = static_cast<std::size_t>(std::ceil(k / 100.0 * items.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += cur.rows().at(items[i].key).minade6;
  return sum / static_cast<double>(m);
}

double oracle_var(const metrics::ErrorTable& t, int alpha) {
  std::vector<double> v;
  for (const auto& [key, row] : t.rows()) v.push_back(row.minade6);
  std::sort(v.begin(), v.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(static_cast<double>(alpha) / 1000.0 * static_cast<double>(v.size())));
  if (rank < 1) rank = 1;
  if (rank > v.size()) rank = v.size();
  return v[rank - 1];
}

double oracle_fpr(const metrics::ErrorTable& t, double th) {
  std::size_t c = 0;
  for (const auto& [key, row] : t.rows())
    if (row.minade6 > th) ++c;
  return 100.0 * static_cast<double>(c) / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("min_ade / min_fde analytic cases") {
  std::vector<Vec2> future;
  for (int t = 1; t <= small_h.t_f; ++t) future.push_back({1.0 * t, 0.0});
  const world::AgentTrack truth = make_truth(future);

  std::vector<std::vector<Vec2>> modes(6, future);
  CHECK(*metrics::min_ade(modes, truth, small_h) == 0.0);
  CHECK(*metrics::min_fde(modes, truth, small_h) == 0.0);

  for (auto& mode : modes)
    for (auto& p : mode) p += Vec2{0.0, 2.0};
  CHECK(*metrics::min_ade(modes, truth, small_h) == doctest::Approx(2.0));
  CHECK(*metrics::min_fde(modes, truth, small_h) == doctest::Approx(2.0));

  // 3-4-5 offset on all modes.
  for (auto& mode : modes)
    for (std::size_t i = 0; i < mode.size(); ++i) mode[i] = future[i] + Vec2{3.0, 4.0};
  CHECK(*metrics::min_ade(modes, truth, small_h) == doctest::Approx(5.0));

  // No valid future -> sentinel.
  world::AgentTrack empty = truth;
  for (int t = 1; t <= small_h.t_f; ++t)
    empty.valid_mask[static_cast<std::size_t>(world::AgentTrack::index_of(small_h, t))] = false;
  CHECK_FALSE(metrics::min_ade(modes, empty, small_h).has_value());
}

TEST_CASE("min_ade matches brute-force oracle bitwise") {
  Rng rng = make_rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Vec2> future;
    for (int t = 1; t <= small_h.t_f; ++t)
      future.push_back({uniform(rng, -10, 10), uniform(rng, -10, 10)});
    world::AgentTrack truth = make_truth(future);
    // Random mask with at least one valid step.
    int first_future = world::AgentTrack::index_of(small_h, 1);
    for (int t = 1; t <= small_h.t_f; ++t)
      truth.valid_mask[static_cast<std::size_t>(world::AgentTrack::index_of(small_h, t))] =
          uniform01(rng) < 0.8;
    truth.valid_mask[static_cast<std::size_t>(first_future)] = true;

    std::vector<std::vector<Vec2>> modes(6);
    for (auto& mode : modes)
      for (int t = 0; t < small_h.t_f; ++t)
        mode.push_back({uniform(rng, -10, 10), uniform(rng, -10, 10)});
    CHECK(*metrics::min_ade(modes, truth, small_h) == oracle_min_ade(modes, truth));
  }
}

TEST_CASE("top_k_percent selection semantics") {
  std::vector<double> errs;
  for (int i = 1; i <= 100; ++i) errs.push_back(i);
  const metrics::ErrorTable t = table_from(errs);
  CHECK(metrics::top_k_percent(t, t, 1.0) == 100.0);
  CHECK(metrics::top_k_percent(t, t, 5.0) == doctest::Approx((100 + 99 + 98 + 97 + 96) / 5.0));

  // Ranking comes from the reference, values from the current table.
  metrics::ErrorTable cur = table_from(errs);
  metrics::ErrorTable ref;
  ref.model = "ref";
  ref.split = "s";
  metrics::ErrorTable cur2;
  cur2.model = "cur";
  cur2.split = "s";
  ref.insert({0, 0}, {10.0, 0});
  ref.insert({1, 0}, {1.0, 0});
  cur2.insert({0, 0}, {0.3, 0});
  cur2.insert({1, 0}, {9.0, 0});
  CHECK(metrics::top_k_percent(ref, cur2, 50.0) == 0.3);

  // Key mismatch is an error.
  metrics::ErrorTable missing;
  missing.insert({0, 0}, {0.3, 0});
  CHECK_THROWS_AS(metrics::top_k_percent(ref, missing, 50.0), DataError);
  CHECK_THROWS_AS(metrics::top_k_percent(ref, cur2, 0.0), ConfigError);
}

TEST_CASE("top_k matches sort-based brute force bitwise") {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 400));
    metrics::ErrorTable ref = random_table(rng, n, "ref");
    metrics::ErrorTable cur;
    cur.model = "cur";
    cur.split = "test";
    for (const auto& [key, row] : ref.rows()) cur.insert(key, {uniform(rng, 0.0, 9.0), 0.0});
    const double k = uniform(rng, 0.5, 100.0);
    CHECK(metrics::top_k_percent(ref, cur, k) == oracle_top_k(ref, cur, k));
  }
}

TEST_CASE("value_at_risk nearest-rank") {
  std::vector<double> errs;
  for (int i = 1; i <= 1000; ++i) errs.push_back(i);
  CHECK(metrics::value_at_risk(table_from(errs), 999) == 999.0);
  CHECK(metrics::value_at_risk(table_from({7.0, 7.0, 7.0}), 500) == 7.0);
  CHECK_THROWS_AS(metrics::value_at_risk(metrics::ErrorTable{}, 999), DataError);
  CHECK_THROWS_AS(metrics::value_at_risk(table_from({1.0}), 1000), ConfigError);

  Rng rng = make_rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 500));
    const metrics::ErrorTable t = random_table(rng, n);
    const int alpha = 1 + static_cast<int>(uniform_index(rng, 999));
    CHECK(metrics::value_at_risk(t, alpha) == oracle_var(t, alpha));
  }
}

TEST_CASE("false_prediction_ratio") {
  CHECK(metrics::false_prediction_ratio(table_from({1, 2, 6, 7}), 5.0) == 50.0);
  CHECK(metrics::false_prediction_ratio(table_from({1, 2, 6, 7}), 100.0) == 0.0);
  CHECK_THROWS_AS(metrics::false_prediction_ratio(metrics::ErrorTable{}, 5.0), DataError);

  Rng rng = make_rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const metrics::ErrorTable t = random_table(rng, 300);
    CHECK(metrics::false_prediction_ratio(t, 5.0) == oracle_fpr(t, 5.0));
  }
}

TEST_CASE("metric monotonicity and scale equivariance") {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const metrics::ErrorTable t = random_table(rng, 200);
    CHECK(metrics::value_at_risk(t, 500) <= metrics::value_at_risk(t, 900));
    CHECK(metrics::value_at_risk(t, 900) <= metrics::value_at_risk(t, 999));
    CHECK(metrics::false_prediction_ratio(t, 2.0) >= metrics::false_prediction_ratio(t, 5.0));

    // Current = monotone transform of reference: top-k nonincreasing in k.
    metrics::ErrorTable cur;
    cur.model = "c";
    cur.split = "s";
    for (const auto& [key, row] : t.rows()) cur.insert(key, {2.0 * row.minade6 + 1.0, 0.0});
    double prev = 1e18;
    for (double k : {1.0, 5.0, 20.0, 50.0, 100.0}) {
      const double v = metrics::top_k_percent(t, cur, k);
      CHECK(v <= prev + 1e-12);
      prev = v;
    }

    // Scale by a power of two: exact for FPR, exact selection for VaR.
    metrics::ErrorTable scaled;
    scaled.model = "sc";
    scaled.split = "s";
    for (const auto& [key, row] : t.rows()) scaled.insert(key, {4.0 * row.minade6, 0.0});
    CHECK(metrics::value_at_risk(scaled, 900) == 4.0 * metrics::value_at_risk(t, 900));
    CHECK(metrics::false_prediction_ratio(scaled, 4.0 * 5.0) ==
          metrics::false_prediction_ratio(t, 5.0));
    CHECK(metrics::top_k_percent(t, scaled, 10.0) ==
          doctest::Approx(4.0 * metrics::top_k_percent(t, t, 10.0)).epsilon(1e-12));
  }
}

TEST_CASE("error table io round trip") {
  Rng rng = make_rng(13);
  const metrics::ErrorTable t = random_table(rng, 57, "galtraj");
  const std::string path = "/tmp/galtraj_test_table.csv";
  metrics::save_error_table(t, path);
  const metrics::ErrorTable back = metrics::load_error_table(path);
  CHECK(back.model == t.model);
  CHECK(back.split == t.split);
  REQUIRE(back.size() == t.size());
  auto it = t.rows().begin();
  for (const auto& [key, row] : back.rows()) {
    CHECK(key == it->first);
    CHECK(row.minade6 == it->second.minade6);
    CHECK(row.minfde6 == it->second.minfde6);
    ++it;
  }
  CHECK_THROWS_AS(metrics::ErrorTable{}.insert({0, 0}, {std::nan(""), 0.0}), DataError);
}
