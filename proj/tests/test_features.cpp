#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "lyricscope/error.hpp"
#include "lyricscope/features.hpp"
#include "lyricscope/random.hpp"

using namespace lyricscope;
using namespace std::chrono_literals;

namespace {

ScrobbleEvent play(const std::string& track, long long minute, const std::string& user = "u") {
  return {user, track, Timestamp{std::chrono::minutes{minute}}};
}

std::vector<ScrobbleEvent> with_counts(std::initializer_list<std::pair<const char*, int>> counts) {
  std::vector<ScrobbleEvent> out;
  long long t = 0;
  for (auto [track, n] : counts) {
    for (int i = 0; i < n; ++i) out.push_back(play(track, t++));
  }
  return out;
}

Session session_of(std::initializer_list<const char*> tracks) {
  Session s;
  s.user_id = "u";
  for (auto t : tracks) s.events.push_back(play(t, 0));
  return s;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// Reference aggregates written straight from the definitions.
struct Naive {
  static std::optional<double> mean_over(const std::vector<std::string>& tracks, const MetricStore& m, Metric which) {
    double sum = 0.0;
    int n = 0;
    for (const auto& t : tracks) {
      if (!m.contains(t)) continue;
      sum += which == Metric::Aic ? m.at(t).aic : m.at(t).compressibility;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  }
  static std::vector<std::string> top(const std::vector<ScrobbleEvent>& h, std::size_t n) {
    std::map<std::string, int> counts;
    for (const auto& e : h) counts[e.track_id]++;
    std::vector<std::string> ids;
    for (auto& [k, v] : counts) ids.push_back(k);
    // selection by repeated maximum
    std::vector<std::string> out;
    while (out.size() < n && !ids.empty()) {
      auto best = ids.begin();
      for (auto it = ids.begin(); it != ids.end(); ++it) {
        if (counts[*it] > counts[*best] || (counts[*it] == counts[*best] && *it < *best)) best = it;
      }
      out.push_back(*best);
      ids.erase(best);
    }
    return out;
  }
  static std::optional<double> sd(const std::vector<double>& v) {
    if (v.size() < 2) return std::nullopt;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
};

}  // namespace

TEST_CASE("quadrant_of") {
  CHECK(quadrant_of({"t", 0.8, 0.7}) == Quadrant::Happiness);
  CHECK(quadrant_of({"t", 0.2, 0.3}) == Quadrant::Sadness);
  CHECK(quadrant_of({"t", 0.5, 0.5}) == Quadrant::Happiness);
  CHECK(quadrant_of({"t", 0.2, 0.9}) == Quadrant::Tension);
  CHECK(quadrant_of({"t", 0.9, 0.1}) == Quadrant::Tenderness);
  CHECK(quadrant_of({"t", 0.49, 0.5}) == Quadrant::Tension);
  CHECK(quadrant_of({"t", 0.3, 0.3}, 0.25) == Quadrant::Happiness);
  CHECK_THROWS_AS(quadrant_of({"t", 1.1, 0.5}), DomainError);
  CHECK_THROWS_AS(quadrant_of({"t", 0.5, -0.01}), DomainError);

  // Totality over a grid including the edges.
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const auto q = quadrant_of({"t", i / 100.0, j / 100.0});
      CHECK(std::find(kQuadrants.begin(), kQuadrants.end(), q) != kQuadrants.end());
    }
  }
}

TEST_CASE("top_n_tracks") {
  const auto h = with_counts({{"x", 5}, {"y", 3}, {"z", 1}});
  CHECK(as_set(top_n_tracks(h, TopN::of(2))) == std::set<std::string>{"x", "y"});
  CHECK(top_n_tracks(with_counts({{"y", 2}, {"x", 2}}), TopN::of(1)) == std::vector<std::string>{"x"});
  CHECK(top_n_tracks(h, TopN::all()).size() == 3);
  CHECK(top_n_tracks(h, TopN::of(100)).size() == 3);
  CHECK_THROWS_AS(top_n_tracks(h, TopN::of(0)), DomainError);

  std::vector<ScrobbleEvent> forty;
  for (int i = 0; i < 40; ++i) forty.push_back(play("t" + std::to_string(i), i));
  CHECK(top_n_tracks(forty, TopN::of(100)).size() == 40);

  // Nested selections.
  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScrobbleEvent> hist;
    for (int i = 0; i < 60; ++i) hist.push_back(play("t" + std::to_string(uniform_index(rng, 25)), i));
    const auto all = as_set(top_n_tracks(hist, TopN::all()));
    for (std::size_t n = 1; n < 30; ++n) {
      const auto small = as_set(top_n_tracks(hist, TopN::of(n)));
      const auto big = as_set(top_n_tracks(hist, TopN::of(n + 1)));
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
      CHECK(std::includes(all.begin(), all.end(), small.begin(), small.end()));
    }
  }
}

TEST_CASE("static_features") {
  MetricStore m = {{"a", {0.4, 10}}, {"b", {0.6, 20}}, {"i", {1.0, 0}}};
  auto two = static_features(with_counts({{"a", 1}, {"b", 3}}), m, TopN::all());
  REQUIRE(two);
  CHECK(two->compressibility == doctest::Approx(0.5));
  CHECK(two->aic == doctest::Approx(15));

  auto instrumental = static_features(with_counts({{"i", 1}, {"a", 1}}), m, TopN::all());
  REQUIRE(instrumental);
  CHECK(instrumental->compressibility == doctest::Approx(0.7));

  CHECK_FALSE(static_features(with_counts({{"nope", 2}}), m, TopN::all()));

  auto weighted = static_features(with_counts({{"a", 1}, {"b", 3}}), m, TopN::all(), Weighting::PerPlay);
  REQUIRE(weighted);
  CHECK(weighted->compressibility == doctest::Approx((0.4 + 3 * 0.6) / 4));

  // top-1 picks b (3 plays)
  auto top1 = static_features(with_counts({{"a", 1}, {"b", 3}}), m, TopN::of(1));
  CHECK(top1->compressibility == doctest::Approx(0.6));
}

TEST_CASE("quadrant_features") {
  FeatureStore va({{"s1", 0.1, 0.1}, {"s2", 0.2, 0.3}, {"h", 0.9, 0.9}, {"novalue", 0.9, 0.9}});
  MetricStore m = {{"s1", {0.3, 1}}, {"s2", {0.5, 3}}, {"h", {0.9, 5}}, {"nova", {0.1, 1}}};

  const auto q = quadrant_features(with_counts({{"s1", 1}, {"s2", 4}, {"h", 2}, {"nova", 1}}), m, va);
  REQUIRE(q[static_cast<int>(Quadrant::Sadness)]);
  CHECK(q[static_cast<int>(Quadrant::Sadness)]->compressibility == doctest::Approx(0.4));
  CHECK(q[static_cast<int>(Quadrant::Sadness)]->aic == doctest::Approx(2));
  CHECK(q[static_cast<int>(Quadrant::Happiness)]->compressibility == doctest::Approx(0.9));
  CHECK_FALSE(q[static_cast<int>(Quadrant::Tension)]);
  CHECK_FALSE(q[static_cast<int>(Quadrant::Tenderness)]);

  const auto only_sad = quadrant_features(with_counts({{"s1", 1}}), m, va);
  int defined = 0;
  for (const auto& x : only_sad) defined += x.has_value();
  CHECK(defined == 1);
}

TEST_CASE("intra_session_variability") {
  MetricStore m = {{"a", {0.4, 4}}, {"b", {0.5, 5}}, {"c", {0.2, 2}}, {"d", {0.4, 4}}};
  std::vector<Session> constant = {session_of({"a", "a"}), session_of({"b", "b"})};
  CHECK(*intra_session_variability(constant, m, Metric::Compressibility) == 0.0);

  std::vector<Session> one = {session_of({"c", "d"})};
  CHECK(*intra_session_variability(one, m, Metric::Compressibility) == doctest::Approx(0.1414213562).epsilon(1e-9));

  std::vector<Session> singles = {session_of({"a"}), session_of({"b"})};
  CHECK_FALSE(intra_session_variability(singles, m, Metric::Compressibility));

  // Uncovered plays do not count toward the two-play minimum.
  std::vector<Session> sparse = {session_of({"a", "zz"}), session_of({"c", "d", "zz"})};
  CHECK(*intra_session_variability(sparse, m, Metric::Aic) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("inter_session_variability") {
  MetricStore m = {{"a", {0.4, 4}}, {"b", {0.5, 5}}};
  std::vector<Session> two = {session_of({"a"}), session_of({"b"})};
  CHECK(*inter_session_variability(two, m, Metric::Compressibility) == doctest::Approx(0.0707106781).epsilon(1e-9));
  std::vector<Session> same = {session_of({"a"}), session_of({"a", "a"})};
  CHECK(*inter_session_variability(same, m, Metric::Compressibility) == 0.0);
  std::vector<Session> one = {session_of({"a", "b"})};
  CHECK_FALSE(inter_session_variability(one, m, Metric::Compressibility));
  std::vector<Session> uncovered = {session_of({"a"}), session_of({"zz"})};
  CHECK_FALSE(inter_session_variability(uncovered, m, Metric::Compressibility));
}

TEST_CASE("features match a naive reference on small random histories") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    MetricStore metrics;
    std::vector<AudioFeatures> va;
    for (int t = 0; t < 8; ++t) {
      const std::string id = "t" + std::to_string(t);
      if (uniform_index(rng, 5) != 0) metrics[id] = {uniform01(rng), static_cast<double>(uniform_index(rng, 200))};
      if (uniform_index(rng, 4) != 0) va.push_back({id, uniform01(rng), uniform01(rng)});
    }
    const FeatureStore audio(va);
    std::vector<ScrobbleEvent> hist;
    long long minute = 0;
    const auto n = 1 + uniform_index(rng, 20);
    for (std::size_t i = 0; i < n; ++i) {
      minute += uniform_index(rng, 3) == 0 ? 180 : static_cast<long long>(uniform_index(rng, 60));
      hist.push_back(play("t" + std::to_string(uniform_index(rng, 8)), minute));
    }

    for (std::size_t top : {1u, 2u, 5u, 100u}) {
      const auto got = static_features(hist, metrics, TopN::of(top));
      const auto sel = Naive::top(hist, top);
      const auto want_c = Naive::mean_over(sel, metrics, Metric::Compressibility);
      const auto want_a = Naive::mean_over(sel, metrics, Metric::Aic);
      REQUIRE(got.has_value() == want_c.has_value());
      if (got) {
        CHECK(std::abs(got->compressibility - *want_c) <= 1e-12);
        CHECK(std::abs(got->aic - *want_a) <= 1e-12 * std::max(1.0, *want_a));
        CHECK(got->compressibility >= 0.0);
        CHECK(got->compressibility <= 1.0);
      }
    }

    const auto quads = quadrant_features(hist, metrics, audio);
    for (auto q : kQuadrants) {
      std::vector<std::string> in_q;
      for (const auto& t : Naive::top(hist, 1000)) {
        const auto* f = audio.find(t);
        if (f && quadrant_of(*f) == q) in_q.push_back(t);
      }
      const auto want = Naive::mean_over(in_q, metrics, Metric::Compressibility);
      const auto& got = quads[static_cast<int>(q)];
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK(std::abs(got->compressibility - *want) <= 1e-12);
    }

    const auto sessions = segment(hist);
    for (Metric which : {Metric::Compressibility, Metric::Aic}) {
      double sum = 0.0;
      int k = 0;
      std::vector<double> means;
      for (const auto& s : sessions) {
        std::vector<double> v;
        for (const auto& e : s.events) {
          if (metrics.contains(e.track_id)) {
            v.push_back(which == Metric::Aic ? metrics[e.track_id].aic : metrics[e.track_id].compressibility);
          }
        }
        if (auto sd = Naive::sd(v)) {
          sum += *sd;
          ++k;
        }
        if (!v.empty()) {
          double mean = 0.0;
          for (double x : v) mean += x;
          means.push_back(mean / static_cast<double>(v.size()));
        }
      }
      const auto intra = intra_session_variability(sessions, metrics, which);
      REQUIRE(intra.has_value() == (k > 0));
      if (intra) CHECK(std::abs(*intra - sum / k) <= 1e-12 * std::max(1.0, sum / k));
      const auto inter = inter_session_variability(sessions, metrics, which);
      const auto want_inter = Naive::sd(means);
      REQUIRE(inter.has_value() == want_inter.has_value());
      if (inter) CHECK(std::abs(*inter - *want_inter) <= 1e-12 * std::max(1.0, *want_inter));
    }

    // Shuffling history does not change static features; translating time
    // does not change dynamic ones.
    auto shuffled = hist;
    shuffle(rng, std::span<ScrobbleEvent>(shuffled));
    const auto a = static_features(hist, metrics, TopN::of(3));
    const auto b = static_features(shuffled, metrics, TopN::of(3));
    REQUIRE(a.has_value() == b.has_value());
    if (a) CHECK(a->compressibility == b->compressibility);
    CHECK(quadrant_features(shuffled, metrics, audio)[0].has_value() == quads[0].has_value());

    auto moved = hist;
    for (auto& e : moved) e.timestamp += 1000h;
    const auto moved_sessions = segment(moved);
    CHECK(intra_session_variability(moved_sessions, metrics, Metric::Aic) ==
          intra_session_variability(sessions, metrics, Metric::Aic));
    CHECK(inter_session_variability(moved_sessions, metrics, Metric::Aic) ==
          inter_session_variability(sessions, metrics, Metric::Aic));
  }
}

TEST_CASE("compute_all_features is independent of the thread count") {
  SplitMix64 rng(12);
  std::vector<UserProfile> users;
  std::vector<ScrobbleEvent> events;
  MetricStore metrics;
  std::vector<AudioFeatures> va;
  for (int t = 0; t < 30; ++t) {
    metrics["t" + std::to_string(t)] = {uniform01(rng), static_cast<double>(uniform_index(rng, 100))};
    va.push_back({"t" + std::to_string(t), uniform01(rng), uniform01(rng)});
  }
  for (int u = 0; u < 25; ++u) {
    const std::string id = "user" + std::to_string(u);
    const int k10 = 10 + static_cast<int>(uniform_index(rng, 41));
    users.push_back({id, k10, 20, assign_risk_group(k10), AgeGroup::Young});
    long long minute = 0;
    for (int i = 0; i < 40; ++i) {
      minute += uniform_index(rng, 5) == 0 ? 200 : 4;
      events.push_back(play("t" + std::to_string(uniform_index(rng, 30)), minute, id));
    }
  }
  users.push_back({"silent", 40, 30, RiskGroup::AtRisk, AgeGroup::Older});
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.user_id < b.user_id; });

  const FeatureStore audio(va);
  const FeatureOptions options;
  std::string reference;
  for (unsigned threads : {1u, 2u, 3u, 8u}) {
    const auto rows = compute_all_features(users, events, metrics, audio, options, threads);
    CHECK(rows.size() == users.size());
    std::ostringstream out;
    write_features_csv(out, rows, options);
    if (threads == 1) reference = out.str();
    CHECK(out.str() == reference);
  }

  const auto rows = compute_all_features(users, events, metrics, audio, options);
  const auto silent = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.user_id == "silent"; });
  REQUIRE(silent != rows.end());
  CHECK(silent->n_events == 0);
  CHECK_FALSE(silent->top_n[0]);
  CHECK_FALSE(silent->intra_sd_aic);
}

TEST_CASE("features_out.csv layout") {
  UserFeatureRow row;
  row.user_id = "u1";
  row.risk_group = RiskGroup::AtRisk;
  row.age_group = AgeGroup::Young;
  row.top_n = {MetricMeans{0.5, 12}, std::nullopt};
  row.quadrants[static_cast<int>(Quadrant::Sadness)] = MetricMeans{0.25, 3};
  row.intra_sd_aic = 1.5;
  FeatureOptions options;
  options.top_n = {TopN::of(100), TopN::all()};
  std::ostringstream out;
  write_features_csv(out, std::vector<UserFeatureRow>{row}, options);
  CHECK(out.str() ==
        "user_id,risk_group,age_group,n_events,n_sessions,n_tracks_covered,"
        "mean_compressibility_top_100,mean_aic_top_100,mean_compressibility_top_all,mean_aic_top_all,"
        "compressibility_Happiness,aic_Happiness,compressibility_Tension,aic_Tension,"
        "compressibility_Sadness,aic_Sadness,compressibility_Tenderness,aic_Tenderness,"
        "intra_sd_compressibility,intra_sd_aic,inter_sd_compressibility,inter_sd_aic\n"
        "u1,AtRisk,Young,0,0,0,0.5,12,,,,,,,0.25,3,,,,1.5,,\n");
}
