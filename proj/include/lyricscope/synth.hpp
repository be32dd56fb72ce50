#pragma once

// Seeded synthetic corpora with planted group effects.
//
// Every song is a run of sections "verse_i chorus" where verse tokens are
// fresh and the chorus repeats. With m sections, verse length v >= 1 and
// chorus length c >= 2 the word-level LZ77 output has
//   aic             = m (v + 1) + c - 1
//   token count     = m (v + c)
//   compressibility = (c - 1)(m - 1) / (m (v + c))
// so song length and repetition are the two knobs that realize a target AIC
// and compressibility.
//
// Each user draws a latent information preference and a latent repetition
// preference from N(0, 1); At-Risk users get `aic_shift` and
// `compressibility_shift` added, i.e. the shifts are in units of the
// between-user standard deviation. Track targets add per-track noise on top.
// Valence is coupled to the realized compressibility ranks through a
// Gaussian copula so the sample rank correlation lands near the target.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lyricscope/corpus.hpp"

namespace lyricscope {

struct SynthConfig {
  std::size_t n_at_risk = 100;
  std::size_t n_no_risk = 100;
  std::size_t tracks_per_user = 100;
  std::size_t sessions_per_user = 30;
  std::size_t plays_per_session = 10;
  double aic_shift = 0.0;
  double compressibility_shift = 0.0;
  double valence_compressibility_rho = 0.08;
  double instrumental_fraction = 0.0;
  double lyrics_coverage = 1.0;  // fraction of tracks with a lyrics record
  double va_coverage = 1.0;      // fraction of tracks with audio features
  std::uint64_t seed = 1;
};

// Throws ConfigError naming the offending field.
void validate(const SynthConfig& config);

// Reads a JSON object; absent fields keep their defaults, unknown fields and
// wrongly typed values are ConfigErrors naming the field.
SynthConfig parse_synth_config(const std::string& json_text);
std::string to_json(const SynthConfig& config);

struct SongShape {
  std::size_t sections = 2;
  std::size_t verse_len = 1;
  std::size_t chorus_len = 2;

  std::size_t token_count() const { return sections * (verse_len + chorus_len); }
  std::size_t aic() const { return sections * (verse_len + 1) + chorus_len - 1; }
  double compressibility() const {
    return 1.0 - static_cast<double>(aic()) / static_cast<double>(token_count());
  }
};

// Shape whose AIC and compressibility are closest to the targets.
SongShape fit_song_shape(double target_aic, double target_compressibility);

// Lyric text for a shape: section markers, capitalized lines, punctuation.
// Tokenizes back to exactly shape.token_count() tokens. `salt` picks the
// vocabulary.
std::string render_song(const SongShape& shape, std::uint64_t salt);

struct SynthCorpus {
  std::vector<ScrobbleEvent> scrobbles;
  std::vector<UserProfile> users;
  std::vector<LyricsRecord> lyrics;
  std::vector<AudioFeatures> features;
};

SynthCorpus generate(const SynthConfig& config);

struct CorpusPaths {
  std::filesystem::path scrobbles, users, lyrics, features;
  static CorpusPaths in(const std::filesystem::path& dir);
};

// Writes scrobbles.csv, users.csv, lyrics.jsonl and features.csv.
CorpusPaths write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace lyricscope
