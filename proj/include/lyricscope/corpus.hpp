#pragma once

// Input artifacts: scrobbles, user profiles, lyrics and audio features.
//
// File formats (UTF-8, header row required):
//   scrobbles.csv   user_id,track_id,timestamp   (ISO-8601 or epoch seconds)
//   users.csv       user_id,k10,age
//   lyrics.jsonl    {"track_id": ..., "text": ..., "instrumental": bool}
//   features.csv    track_id,valence,energy
//
// Parsers never abort on a bad row; they return the good records together
// with one RowError per rejected line. A missing header column is a
// ConfigError.

#include <cstddef>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyricscope/text_io.hpp"

namespace lyricscope {

using Timestamp = io::Timestamp;

struct ScrobbleEvent {
  std::string user_id;
  std::string track_id;
  Timestamp timestamp;
  friend bool operator==(const ScrobbleEvent&, const ScrobbleEvent&) = default;
};

enum class RiskGroup { AtRisk, NoRisk, Excluded };
enum class AgeGroup { Young, Older, OutOfRange };

const char* to_string(RiskGroup group);
const char* to_string(AgeGroup group);

// AtRisk for k10 > 29, NoRisk for k10 < 20, Excluded for 20..29.
// Throws DomainError outside [10, 50].
RiskGroup assign_risk_group(int k10);

// Young for [15, 25), Older for [25, 35], OutOfRange otherwise.
AgeGroup assign_age_group(int age);

struct UserProfile {
  std::string user_id;
  int k10 = 10;
  int age = 0;
  RiskGroup risk_group = RiskGroup::Excluded;
  AgeGroup age_group = AgeGroup::OutOfRange;
};

struct LyricsRecord {
  std::string track_id;
  std::string text;
  bool instrumental = false;
};

struct AudioFeatures {
  std::string track_id;
  double valence = 0.0;
  double energy = 0.0;
};

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1 for CSV
  std::string message;
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  std::vector<RowError> errors;
};

struct CsvFormat {
  char delimiter = ',';
};

// Events come back sorted by (user_id, timestamp); ties keep file order.
// Duplicate rows are kept.
ParseResult<ScrobbleEvent> parse_scrobbles(std::istream& source, const CsvFormat& format = {});
ParseResult<UserProfile> parse_users(std::istream& source, const CsvFormat& format = {});
ParseResult<LyricsRecord> parse_lyrics(std::istream& source);
ParseResult<AudioFeatures> parse_features(std::istream& source, const CsvFormat& format = {});

// Immutable after construction; later duplicates of a track_id are ignored.
template <typename T>
class TrackStore {
 public:
  TrackStore() = default;
  explicit TrackStore(std::vector<T> records) {
    for (auto& rec : records) {
      const std::string key = rec.track_id;
      if (index_.contains(key)) continue;
      index_.emplace(key, records_.size());
      records_.push_back(std::move(rec));
    }
  }

  const T* find(const std::string& track_id) const {
    auto it = index_.find(track_id);
    return it == index_.end() ? nullptr : &records_[it->second];
  }
  bool contains(const std::string& track_id) const { return index_.contains(track_id); }
  std::size_t size() const { return records_.size(); }
  const std::vector<T>& records() const { return records_; }

 private:
  std::vector<T> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

using LyricsStore = TrackStore<LyricsRecord>;
using FeatureStore = TrackStore<AudioFeatures>;

struct CoverageReport {
  std::size_t total_events = 0;
  std::size_t events_with_lyrics = 0;  // lyrics record present, instrumental included
  std::size_t events_instrumental = 0;
  std::size_t events_with_va = 0;

  double lyrics_ratio() const { return ratio(events_with_lyrics); }
  double instrumental_ratio() const { return ratio(events_instrumental); }
  double va_ratio() const { return ratio(events_with_va); }

 private:
  double ratio(std::size_t count) const {
    return total_events == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total_events);
  }
};

// Play-weighted: every event counts once, so a track played ten times
// contributes ten.
CoverageReport coverage(const std::vector<ScrobbleEvent>& events, const LyricsStore& lyrics,
                        const FeatureStore& features);

// Source of per-track lyrics and audio features. Implementations return
// nullopt for unknown tracks and throw FetchError for I/O or decoding
// failures.
class TrackFetcher {
 public:
  virtual ~TrackFetcher() = default;
  virtual std::optional<LyricsRecord> fetch_lyrics(const std::string& track_id) = 0;
  virtual std::optional<AudioFeatures> fetch_features(const std::string& track_id) = 0;
};

// Reads lyrics.jsonl / features.csv fixtures on first use and caches them.
// Any unreadable file or rejected row turns into FetchError; the cache is
// only populated by a clean load, so a later call retries.
class FileTrackFetcher final : public TrackFetcher {
 public:
  FileTrackFetcher(std::string lyrics_path, std::string features_path);

  std::optional<LyricsRecord> fetch_lyrics(const std::string& track_id) override;
  std::optional<AudioFeatures> fetch_features(const std::string& track_id) override;

 private:
  std::string lyrics_path_;
  std::string features_path_;
  std::mutex mutex_;
  std::optional<LyricsStore> lyrics_;
  std::optional<FeatureStore> features_;
};

}  // namespace lyricscope
