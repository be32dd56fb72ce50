#include "lyricscope/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "lyricscope/compress.hpp"
#include "lyricscope/error.hpp"

namespace lyricscope {

const char* to_string(RiskGroup group) {
  switch (group) {
    case RiskGroup::AtRisk: return "AtRisk";
    case RiskGroup::NoRisk: return "NoRisk";
    case RiskGroup::Excluded: return "Excluded";
  }
  return "?";
}

const char* to_string(AgeGroup group) {
  switch (group) {
    case AgeGroup::Young: return "Young";
    case AgeGroup::Older: return "Older";
    case AgeGroup::OutOfRange: return "OutOfRange";
  }
  return "?";
}

RiskGroup assign_risk_group(int k10) {
  if (k10 < 10 || k10 > 50) {
    throw DomainError("K10 score " + std::to_string(k10) + " outside [10, 50]");
  }
  if (k10 > 29) return RiskGroup::AtRisk;
  if (k10 < 20) return RiskGroup::NoRisk;
  return RiskGroup::Excluded;
}

AgeGroup assign_age_group(int age) {
  if (age >= 15 && age < 25) return AgeGroup::Young;
  if (age >= 25 && age <= 35) return AgeGroup::Older;
  return AgeGroup::OutOfRange;
}

namespace {

// Walks a delimited stream: resolves the named columns from the header and
// invokes `on_row` with the selected fields of each non-blank line.
void for_each_row(std::istream& source, const CsvFormat& format,
                  const std::vector<std::string>& required, const std::string& what,
                  std::vector<RowError>& errors,
                  const std::function<void(std::size_t, const std::vector<std::string>&)>& on_row) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> column_of(required.size());
  std::size_t n_columns = 0;

  bool have_header = false;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (io::trim(line).empty()) continue;
    auto fields = io::split_row(line, format.delimiter);
    if (!have_header) {
      if (!fields) throw ConfigError(what + ": malformed header row");
      n_columns = fields->size();
      for (std::size_t r = 0; r < required.size(); ++r) {
        auto it = std::find_if(fields->begin(), fields->end(), [&](const std::string& f) {
          return io::trim(f) == required[r];
        });
        if (it == fields->end()) {
          throw ConfigError(what + ": missing required column '" + required[r] + "'");
        }
        column_of[r] = static_cast<std::size_t>(it - fields->begin());
      }
      have_header = true;
      continue;
    }
    if (!fields) {
      errors.push_back({line_no, "unterminated quoted field"});
      continue;
    }
    if (fields->size() != n_columns) {
      errors.push_back({line_no, "expected " + std::to_string(n_columns) + " fields, found " +
                                     std::to_string(fields->size())});
      continue;
    }
    std::vector<std::string> selected;
    selected.reserve(required.size());
    for (std::size_t c : column_of) selected.emplace_back(io::trim((*fields)[c]));
    on_row(line_no, selected);
  }
  if (!have_header) throw ConfigError(what + ": missing header row");
}

}  // namespace

ParseResult<ScrobbleEvent> parse_scrobbles(std::istream& source, const CsvFormat& format) {
  ParseResult<ScrobbleEvent> result;
  enum class TsMode { Unknown, Epoch, Iso } mode = TsMode::Unknown;

  for_each_row(source, format, {"user_id", "track_id", "timestamp"}, "scrobbles", result.errors,
               [&](std::size_t line_no, const std::vector<std::string>& f) {
                 if (f[0].empty() || f[1].empty()) {
                   result.errors.push_back({line_no, "empty user_id or track_id"});
                   return;
                 }
                 if (mode == TsMode::Unknown) {
                   if (io::looks_like_epoch(f[2])) {
                     mode = TsMode::Epoch;
                   } else if (io::parse_iso8601(f[2])) {
                     mode = TsMode::Iso;
                   }
                 }
                 std::optional<Timestamp> ts;
                 if (mode == TsMode::Epoch) ts = io::parse_epoch(f[2]);
                 if (mode == TsMode::Iso) ts = io::parse_iso8601(f[2]);
                 if (!ts) {
                   result.errors.push_back({line_no, "unparseable timestamp '" + f[2] + "'"});
                   return;
                 }
                 result.records.push_back({f[0], f[1], *ts});
               });

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const ScrobbleEvent& a, const ScrobbleEvent& b) {
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     return a.timestamp < b.timestamp;
                   });
  return result;
}

ParseResult<UserProfile> parse_users(std::istream& source, const CsvFormat& format) {
  ParseResult<UserProfile> result;
  for_each_row(source, format, {"user_id", "k10", "age"}, "users", result.errors,
               [&](std::size_t line_no, const std::vector<std::string>& f) {
                 if (f[0].empty()) {
                   result.errors.push_back({line_no, "empty user_id"});
                   return;
                 }
                 const auto k10 = io::parse_int(f[1]);
                 const auto age = io::parse_int(f[2]);
                 if (!k10 || *k10 < 10 || *k10 > 50) {
                   result.errors.push_back({line_no, "k10 '" + f[1] + "' is not an integer in [10, 50]"});
                   return;
                 }
                 if (!age || *age < 0 || *age > 150) {
                   result.errors.push_back({line_no, "age '" + f[2] + "' is not a plausible integer"});
                   return;
                 }
                 UserProfile profile;
                 profile.user_id = f[0];
                 profile.k10 = static_cast<int>(*k10);
                 profile.age = static_cast<int>(*age);
                 profile.risk_group = assign_risk_group(profile.k10);
                 profile.age_group = assign_age_group(profile.age);
                 result.records.push_back(std::move(profile));
               });
  return result;
}

ParseResult<LyricsRecord> parse_lyrics(std::istream& source) {
  ParseResult<LyricsRecord> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      result.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    if (!doc.is_object() || !doc.contains("track_id") || !doc["track_id"].is_string()) {
      result.errors.push_back({line_no, "record lacks a string track_id"});
      continue;
    }
    LyricsRecord rec;
    rec.track_id = doc["track_id"].get<std::string>();
    if (rec.track_id.empty()) {
      result.errors.push_back({line_no, "empty track_id"});
      continue;
    }
    if (doc.contains("text") && !doc["text"].is_null()) {
      if (!doc["text"].is_string()) {
        result.errors.push_back({line_no, "text must be a string"});
        continue;
      }
      rec.text = doc["text"].get<std::string>();
    }
    if (doc.contains("instrumental") && !doc["instrumental"].is_null()) {
      if (!doc["instrumental"].is_boolean()) {
        result.errors.push_back({line_no, "instrumental must be a boolean"});
        continue;
      }
      rec.instrumental = doc["instrumental"].get<bool>();
    }
    if (rec.instrumental && !tokenize(rec.text).empty()) {
      result.errors.push_back({line_no, "track " + rec.track_id + " is flagged instrumental but has lyric text"});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

ParseResult<AudioFeatures> parse_features(std::istream& source, const CsvFormat& format) {
  ParseResult<AudioFeatures> result;
  for_each_row(source, format, {"track_id", "valence", "energy"}, "features", result.errors,
               [&](std::size_t line_no, const std::vector<std::string>& f) {
                 if (f[0].empty()) {
                   result.errors.push_back({line_no, "empty track_id"});
                   return;
                 }
                 const auto valence = io::parse_double(f[1]);
                 const auto energy = io::parse_double(f[2]);
                 if (!valence || !(*valence >= 0.0 && *valence <= 1.0)) {
                   result.errors.push_back({line_no, "valence '" + f[1] + "' not a number in [0, 1]"});
                   return;
                 }
                 if (!energy || !(*energy >= 0.0 && *energy <= 1.0)) {
                   result.errors.push_back({line_no, "energy '" + f[2] + "' not a number in [0, 1]"});
                   return;
                 }
                 result.records.push_back({f[0], *valence, *energy});
               });
  return result;
}

CoverageReport coverage(const std::vector<ScrobbleEvent>& events, const LyricsStore& lyrics,
                        const FeatureStore& features) {
  CoverageReport report;
  report.total_events = events.size();
  for (const auto& ev : events) {
    if (const auto* rec = lyrics.find(ev.track_id)) {
      ++report.events_with_lyrics;
      if (rec->instrumental) ++report.events_instrumental;
    }
    if (features.contains(ev.track_id)) ++report.events_with_va;
  }
  return report;
}

FileTrackFetcher::FileTrackFetcher(std::string lyrics_path, std::string features_path)
    : lyrics_path_(std::move(lyrics_path)), features_path_(std::move(features_path)) {}

namespace {

template <typename Record, typename Parser>
TrackStore<Record> load_fixture(const std::string& path, Parser parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FetchError("cannot open fixture " + path);
  ParseResult<Record> parsed;
  try {
    parsed = parse(in);
  } catch (const ConfigError& e) {
    throw FetchError("fixture " + path + ": " + e.what());
  }
  if (in.bad()) throw FetchError("read failure on fixture " + path);
  if (!parsed.errors.empty()) {
    const auto& first = parsed.errors.front();
    throw FetchError("fixture " + path + " is corrupt at line " + std::to_string(first.line) +
                     ": " + first.message);
  }
  return TrackStore<Record>(std::move(parsed.records));
}

}  // namespace

std::optional<LyricsRecord> FileTrackFetcher::fetch_lyrics(const std::string& track_id) {
  std::lock_guard lock(mutex_);
  if (!lyrics_) {
    lyrics_ = load_fixture<LyricsRecord>(lyrics_path_, [](std::istream& in) { return parse_lyrics(in); });
  }
  if (const auto* rec = lyrics_->find(track_id)) return *rec;
  return std::nullopt;
}

std::optional<AudioFeatures> FileTrackFetcher::fetch_features(const std::string& track_id) {
  std::lock_guard lock(mutex_);
  if (!features_) {
    features_ = load_fixture<AudioFeatures>(features_path_, [](std::istream& in) { return parse_features(in); });
  }
  if (const auto* rec = features_->find(track_id)) return *rec;
  return std::nullopt;
}

}  // namespace lyricscope
