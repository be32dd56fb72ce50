#include "lyricscope/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "lyricscope/error.hpp"

namespace lyricscope {

const char* to_string(Quadrant q) {
  switch (q) {
    case Quadrant::Happiness: return "Happiness";
    case Quadrant::Tension: return "Tension";
    case Quadrant::Sadness: return "Sadness";
    case Quadrant::Tenderness: return "Tenderness";
  }
  return "?";
}

const char* to_string(Metric m) {
  return m == Metric::Compressibility ? "compressibility" : "aic";
}

Quadrant quadrant_of(const AudioFeatures& features, double threshold) {
  if (!(features.valence >= 0.0 && features.valence <= 1.0) ||
      !(features.energy >= 0.0 && features.energy <= 1.0)) {
    throw DomainError("valence/energy outside [0, 1] for track " + features.track_id);
  }
  const bool high_valence = features.valence >= threshold;
  const bool high_energy = features.energy >= threshold;
  if (high_energy) return high_valence ? Quadrant::Happiness : Quadrant::Tension;
  return high_valence ? Quadrant::Tenderness : Quadrant::Sadness;
}

std::string TopN::label() const { return n ? std::to_string(*n) : "all"; }

namespace {

// Distinct tracks with their playcounts, ordered by track_id.
std::map<std::string, std::size_t> playcounts(std::span<const ScrobbleEvent> history) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ev : history) ++counts[ev.track_id];
  return counts;
}

// Accumulates a (possibly weighted) mean of both metrics.
struct MeanAccumulator {
  double sum_c = 0.0;
  double sum_a = 0.0;
  double weight = 0.0;

  void add(const TrackMetric& m, double w) {
    sum_c += w * m.compressibility;
    sum_a += w * m.aic;
    weight += w;
  }
  std::optional<MetricMeans> result() const {
    if (weight <= 0.0) return std::nullopt;
    return MetricMeans{sum_c / weight, sum_a / weight};
  }
};

double metric_value(const TrackMetric& m, Metric which) {
  return which == Metric::Compressibility ? m.compressibility : m.aic;
}

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample sd, valid for n >= 2
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
  }
  return m;
}

std::vector<double> covered_values(const Session& s, const MetricStore& metrics, Metric which) {
  std::vector<double> values;
  for (const auto& ev : s.events) {
    auto it = metrics.find(ev.track_id);
    if (it != metrics.end()) values.push_back(metric_value(it->second, which));
  }
  return values;
}

}  // namespace

std::vector<std::string> top_n_tracks(std::span<const ScrobbleEvent> history, TopN top) {
  if (top.n && *top.n == 0) throw DomainError("top-n size must be positive");
  const auto counts = playcounts(history);
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is already ordered by track_id, so a stable sort keeps that as the tie-break
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = top.n ? std::min(*top.n, ranked.size()) : ranked.size();
  std::vector<std::string> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(ranked[i].first);
  return out;
}

std::optional<MetricMeans> static_features(std::span<const ScrobbleEvent> history,
                                           const MetricStore& metrics, TopN top,
                                           Weighting weighting) {
  const auto selected = top_n_tracks(history, top);
  std::map<std::string, std::size_t> counts;
  if (weighting == Weighting::PerPlay) counts = playcounts(history);
  MeanAccumulator acc;
  for (const auto& track : selected) {
    auto it = metrics.find(track);
    if (it == metrics.end()) continue;
    const double w = weighting == Weighting::PerPlay ? static_cast<double>(counts[track]) : 1.0;
    acc.add(it->second, w);
  }
  return acc.result();
}

QuadrantMeans quadrant_features(std::span<const ScrobbleEvent> history, const MetricStore& metrics,
                                const FeatureStore& audio, double threshold, Weighting weighting) {
  std::array<MeanAccumulator, 4> acc;
  for (const auto& [track, plays] : playcounts(history)) {
    const auto* va = audio.find(track);
    auto it = metrics.find(track);
    if (va == nullptr || it == metrics.end()) continue;
    const auto q = quadrant_of(*va, threshold);
    const double w = weighting == Weighting::PerPlay ? static_cast<double>(plays) : 1.0;
    acc[static_cast<std::size_t>(q)].add(it->second, w);
  }
  QuadrantMeans out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i].result();
  return out;
}

std::optional<double> intra_session_variability(std::span<const Session> sessions,
                                                const MetricStore& metrics, Metric metric) {
  double sum = 0.0;
  std::size_t qualifying = 0;
  for (const auto& s : sessions) {
    const auto m = moments(covered_values(s, metrics, metric));
    if (m.n < 2) continue;
    sum += m.sd;
    ++qualifying;
  }
  if (qualifying == 0) return std::nullopt;
  return sum / static_cast<double>(qualifying);
}

std::optional<double> inter_session_variability(std::span<const Session> sessions,
                                                const MetricStore& metrics, Metric metric) {
  std::vector<double> means;
  for (const auto& s : sessions) {
    const auto m = moments(covered_values(s, metrics, metric));
    if (m.n >= 1) means.push_back(m.mean);
  }
  if (means.size() < 2) return std::nullopt;
  return moments(means).sd;
}

UserFeatureRow compute_user_features(const UserProfile& profile,
                                     std::span<const ScrobbleEvent> history,
                                     const MetricStore& metrics, const FeatureStore& audio,
                                     const FeatureOptions& options) {
  UserFeatureRow row;
  row.user_id = profile.user_id;
  row.risk_group = profile.risk_group;
  row.age_group = profile.age_group;
  row.n_events = history.size();
  row.top_n.resize(options.top_n.size());
  if (history.empty()) return row;

  for (std::size_t i = 0; i < options.top_n.size(); ++i) {
    row.top_n[i] = static_features(history, metrics, options.top_n[i], options.weighting);
  }
  row.quadrants = quadrant_features(history, metrics, audio, options.quadrant_threshold,
                                    options.weighting);

  const auto sessions = segment(history, options.session_gap);
  row.n_sessions = sessions.size();
  row.intra_sd_compressibility = intra_session_variability(sessions, metrics, Metric::Compressibility);
  row.intra_sd_aic = intra_session_variability(sessions, metrics, Metric::Aic);
  row.inter_sd_compressibility = inter_session_variability(sessions, metrics, Metric::Compressibility);
  row.inter_sd_aic = inter_session_variability(sessions, metrics, Metric::Aic);

  for (const auto& [track, plays] : playcounts(history)) {
    if (metrics.contains(track)) ++row.n_tracks_covered;
  }
  return row;
}

std::vector<UserFeatureRow> compute_all_features(std::span<const UserProfile> users,
                                                 std::span<const ScrobbleEvent> events,
                                                 const MetricStore& metrics,
                                                 const FeatureStore& audio,
                                                 const FeatureOptions& options, unsigned threads) {
  std::unordered_map<std::string, std::span<const ScrobbleEvent>> history_of;
  for (auto run : split_by_user(events)) history_of.emplace(run.front().user_id, run);

  std::vector<const UserProfile*> ordered;
  ordered.reserve(users.size());
  for (const auto& u : users) ordered.push_back(&u);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const UserProfile* a, const UserProfile* b) { return a->user_id < b->user_id; });

  std::vector<UserFeatureRow> rows(ordered.size());
  auto work = [&](std::size_t i) {
    const auto* profile = ordered[i];
    auto it = history_of.find(profile->user_id);
    const std::span<const ScrobbleEvent> history =
        it == history_of.end() ? std::span<const ScrobbleEvent>{} : it->second;
    rows[i] = compute_user_features(*profile, history, metrics, audio, options);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) work(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

namespace {

void write_optional(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << io::format_double(*v);
}

}  // namespace

void write_features_csv(std::ostream& out, std::span<const UserFeatureRow> rows,
                        const FeatureOptions& options) {
  out << "user_id,risk_group,age_group,n_events,n_sessions,n_tracks_covered";
  for (const auto& top : options.top_n) {
    out << ",mean_compressibility_top_" << top.label() << ",mean_aic_top_" << top.label();
  }
  for (auto q : kQuadrants) out << ",compressibility_" << to_string(q) << ",aic_" << to_string(q);
  out << ",intra_sd_compressibility,intra_sd_aic,inter_sd_compressibility,inter_sd_aic\n";

  for (const auto& row : rows) {
    out << io::quote_field(row.user_id) << ',' << to_string(row.risk_group) << ','
        << to_string(row.age_group) << ',' << row.n_events << ',' << row.n_sessions << ','
        << row.n_tracks_covered;
    for (const auto& means : row.top_n) {
      write_optional(out, means ? std::optional(means->compressibility) : std::nullopt);
      write_optional(out, means ? std::optional(means->aic) : std::nullopt);
    }
    for (const auto& means : row.quadrants) {
      write_optional(out, means ? std::optional(means->compressibility) : std::nullopt);
      write_optional(out, means ? std::optional(means->aic) : std::nullopt);
    }
    write_optional(out, row.intra_sd_compressibility);
    write_optional(out, row.intra_sd_aic);
    write_optional(out, row.inter_sd_compressibility);
    write_optional(out, row.inter_sd_aic);
    out << '\n';
  }
}

}  // namespace lyricscope
