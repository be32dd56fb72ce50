#pragma once

// Per-user aggregates of the lyric metrics.
//
// Static features are means over a user's top-n tracks by playcount and over
// the tracks falling in each valence/arousal quadrant. Dynamic features
// describe how the per-play metric moves within and across sessions.
// Undefined aggregates are std::nullopt, never zero.

#include <array>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyricscope/corpus.hpp"
#include "lyricscope/sessions.hpp"

namespace lyricscope {

enum class Quadrant { Happiness, Tension, Sadness, Tenderness };
inline constexpr std::array<Quadrant, 4> kQuadrants = {Quadrant::Happiness, Quadrant::Tension,
                                                      Quadrant::Sadness, Quadrant::Tenderness};
const char* to_string(Quadrant q);

// Energy stands in for arousal. Values >= threshold count as high.
// Throws DomainError when valence or energy is outside [0, 1].
Quadrant quadrant_of(const AudioFeatures& features, double threshold = 0.5);

// Top-n selection size; an empty `n` means every track.
struct TopN {
  std::optional<std::size_t> n;

  static TopN all() { return {}; }
  static TopN of(std::size_t count) { return {count}; }
  std::string label() const;
  friend bool operator==(const TopN&, const TopN&) = default;
};

// Distinct tracks ordered by descending playcount, ties by track_id.
// Throws DomainError for n == 0.
std::vector<std::string> top_n_tracks(std::span<const ScrobbleEvent> history, TopN top);

struct TrackMetric {
  double compressibility = 0.0;
  double aic = 0.0;
};
using MetricStore = std::unordered_map<std::string, TrackMetric>;

enum class Metric { Compressibility, Aic };
const char* to_string(Metric m);

struct MetricMeans {
  double compressibility = 0.0;
  double aic = 0.0;
  double get(Metric m) const { return m == Metric::Compressibility ? compressibility : aic; }
};

enum class Weighting { PerTrack, PerPlay };

// Mean over the selected distinct tracks that have metrics. PerPlay weights
// each track by its playcount instead.
std::optional<MetricMeans> static_features(std::span<const ScrobbleEvent> history,
                                           const MetricStore& metrics, TopN top,
                                           Weighting weighting = Weighting::PerTrack);

using QuadrantMeans = std::array<std::optional<MetricMeans>, 4>;

// Tracks need both audio features and metrics to count. Indexed by Quadrant.
QuadrantMeans quadrant_features(std::span<const ScrobbleEvent> history, const MetricStore& metrics,
                                const FeatureStore& audio, double threshold = 0.5,
                                Weighting weighting = Weighting::PerTrack);

// Mean of per-session sample standard deviations of the per-play metric.
// Sessions with fewer than two covered plays are skipped.
std::optional<double> intra_session_variability(std::span<const Session> sessions,
                                                const MetricStore& metrics, Metric metric);

// Sample standard deviation of per-session means over sessions with at
// least one covered play; needs two such sessions.
std::optional<double> inter_session_variability(std::span<const Session> sessions,
                                                const MetricStore& metrics, Metric metric);

struct FeatureOptions {
  std::vector<TopN> top_n = {TopN::of(100), TopN::of(250), TopN::of(500), TopN::all()};
  Weighting weighting = Weighting::PerTrack;
  double quadrant_threshold = 0.5;
  std::chrono::seconds session_gap = kDefaultSessionGap;
};

struct UserFeatureRow {
  std::string user_id;
  RiskGroup risk_group = RiskGroup::Excluded;
  AgeGroup age_group = AgeGroup::OutOfRange;
  std::vector<std::optional<MetricMeans>> top_n;  // aligned with FeatureOptions::top_n
  QuadrantMeans quadrants;
  std::optional<double> intra_sd_compressibility;
  std::optional<double> intra_sd_aic;
  std::optional<double> inter_sd_compressibility;
  std::optional<double> inter_sd_aic;
  std::size_t n_events = 0;
  std::size_t n_sessions = 0;
  std::size_t n_tracks_covered = 0;

  std::optional<double> intra(Metric m) const {
    return m == Metric::Compressibility ? intra_sd_compressibility : intra_sd_aic;
  }
  std::optional<double> inter(Metric m) const {
    return m == Metric::Compressibility ? inter_sd_compressibility : inter_sd_aic;
  }
};

// `history` holds one user's events sorted by timestamp (may be empty).
UserFeatureRow compute_user_features(const UserProfile& profile,
                                     std::span<const ScrobbleEvent> history,
                                     const MetricStore& metrics, const FeatureStore& audio,
                                     const FeatureOptions& options);

// One row per profile, ordered by user_id. `events` must be sorted by
// (user_id, timestamp). Users are processed on up to `threads` workers; each
// row is computed independently so the output does not depend on the count.
std::vector<UserFeatureRow> compute_all_features(std::span<const UserProfile> users,
                                                 std::span<const ScrobbleEvent> events,
                                                 const MetricStore& metrics,
                                                 const FeatureStore& audio,
                                                 const FeatureOptions& options,
                                                 unsigned threads = 1);

// Column order:
//   user_id, risk_group, age_group, n_events, n_sessions, n_tracks_covered,
//   then per top-n label L: mean_compressibility_top_L, mean_aic_top_L,
//   then per quadrant Q: compressibility_Q, aic_Q,
//   intra_sd_compressibility, intra_sd_aic, inter_sd_compressibility, inter_sd_aic.
// Absent values are empty fields.
void write_features_csv(std::ostream& out, std::span<const UserFeatureRow> rows,
                        const FeatureOptions& options);

}  // namespace lyricscope
