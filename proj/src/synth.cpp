#include "lyricscope/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "lyricscope/error.hpp"
#include "lyricscope/random.hpp"
#include "lyricscope/stats.hpp"

namespace lyricscope {

namespace {

constexpr std::array<const char*, 16> kSyllables = {"la", "na", "do", "re", "mi", "so", "ka", "lo",
                                                    "ve", "ri", "ta", "mo", "be", "su", "ne", "fi"};

// Distinct k give distinct words: fixed-width syllables decode uniquely.
std::string make_word(std::size_t k, std::uint64_t salt) {
  std::string word;
  std::size_t x = k + 1;
  while (x > 0) {
    word += kSyllables[(x % 16 + salt) % 16];
    x /= 16;
  }
  return word;
}

std::string pad(std::size_t value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

int digits(std::size_t n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

void append_lines(std::string& out, const std::vector<std::string>& words) {
  constexpr std::size_t kWordsPerLine = 6;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string w = words[i];
    const bool line_start = i % kWordsPerLine == 0;
    const bool line_end = i % kWordsPerLine == kWordsPerLine - 1 || i + 1 == words.size();
    if (line_start) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    out += w;
    out += line_end ? ",\n" : " ";
  }
}

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_phi(double p) {
  static const boost::math::normal standard;
  return boost::math::quantile(standard, p);
}

std::size_t pick_weighted(SplitMix64& rng, const std::vector<double>& cumulative) {
  const double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace

void validate(const SynthConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("synth config field '" + field + "': " + why);
  };
  if (c.n_at_risk < 1) fail("n_at_risk", "must be >= 1");
  if (c.n_no_risk < 1) fail("n_no_risk", "must be >= 1");
  if (c.tracks_per_user < 1) fail("tracks_per_user", "must be >= 1");
  if (c.sessions_per_user < 1) fail("sessions_per_user", "must be >= 1");
  if (c.plays_per_session < 1) fail("plays_per_session", "must be >= 1");
  if (c.sessions_per_user * c.plays_per_session < c.tracks_per_user) {
    fail("tracks_per_user", "exceeds sessions_per_user * plays_per_session, so some tracks would never be played");
  }
  if (!std::isfinite(c.aic_shift)) fail("aic_shift", "must be finite");
  if (!std::isfinite(c.compressibility_shift)) fail("compressibility_shift", "must be finite");
  if (!(std::abs(c.valence_compressibility_rho) < 1.0)) {
    fail("valence_compressibility_rho", "must lie strictly between -1 and 1");
  }
  for (auto [name, v] : {std::pair{"instrumental_fraction", c.instrumental_fraction},
                         std::pair{"lyrics_coverage", c.lyrics_coverage},
                         std::pair{"va_coverage", c.va_coverage}}) {
    if (!(v >= 0.0 && v <= 1.0)) fail(name, "must lie in [0, 1]");
  }
  const std::size_t total_tracks = (c.n_at_risk + c.n_no_risk) * c.tracks_per_user;
  if (c.valence_compressibility_rho != 0.0 && total_tracks < 3) {
    fail("valence_compressibility_rho", "a nonzero rank correlation needs at least 3 tracks");
  }
}

SynthConfig parse_synth_config(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("synth config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("synth config must be a JSON object");

  SynthConfig c;
  auto count = [&](const std::string& key, const nlohmann::json& v, std::size_t& out) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("synth config field '" + key + "': expected a non-negative integer");
    }
    out = v.get<std::size_t>();
  };
  auto real = [&](const std::string& key, const nlohmann::json& v, double& out) {
    if (!v.is_number()) throw ConfigError("synth config field '" + key + "': expected a number");
    out = v.get<double>();
  };
  for (const auto& [key, v] : doc.items()) {
    if (key == "n_at_risk") count(key, v, c.n_at_risk);
    else if (key == "n_no_risk") count(key, v, c.n_no_risk);
    else if (key == "tracks_per_user") count(key, v, c.tracks_per_user);
    else if (key == "sessions_per_user") count(key, v, c.sessions_per_user);
    else if (key == "plays_per_session") count(key, v, c.plays_per_session);
    else if (key == "aic_shift") real(key, v, c.aic_shift);
    else if (key == "compressibility_shift") real(key, v, c.compressibility_shift);
    else if (key == "valence_compressibility_rho") real(key, v, c.valence_compressibility_rho);
    else if (key == "instrumental_fraction") real(key, v, c.instrumental_fraction);
    else if (key == "lyrics_coverage") real(key, v, c.lyrics_coverage);
    else if (key == "va_coverage") real(key, v, c.va_coverage);
    else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError("synth config field 'seed': expected a non-negative integer");
      }
      c.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError("synth config field '" + key + "': unknown field");
    }
  }
  validate(c);
  return c;
}

std::string to_json(const SynthConfig& c) {
  nlohmann::ordered_json doc;
  doc["n_at_risk"] = c.n_at_risk;
  doc["n_no_risk"] = c.n_no_risk;
  doc["tracks_per_user"] = c.tracks_per_user;
  doc["sessions_per_user"] = c.sessions_per_user;
  doc["plays_per_session"] = c.plays_per_session;
  doc["aic_shift"] = c.aic_shift;
  doc["compressibility_shift"] = c.compressibility_shift;
  doc["valence_compressibility_rho"] = c.valence_compressibility_rho;
  doc["instrumental_fraction"] = c.instrumental_fraction;
  doc["lyrics_coverage"] = c.lyrics_coverage;
  doc["va_coverage"] = c.va_coverage;
  doc["seed"] = c.seed;
  return doc.dump(2) + "\n";
}

SongShape fit_song_shape(double target_aic, double target_compressibility) {
  SongShape best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t m = 2; m <= 12; ++m) {
    for (std::size_t c = 2; c <= 80; ++c) {
      const double v_real = (target_aic - static_cast<double>(c) + 1.0) / static_cast<double>(m) - 1.0;
      const auto v = static_cast<std::size_t>(std::max(1.0, std::round(v_real)));
      const SongShape shape{m, v, c};
      const double da = (static_cast<double>(shape.aic()) - target_aic) / target_aic;
      const double dc = shape.compressibility() - target_compressibility;
      const double cost = da * da + 4.0 * dc * dc;
      if (cost < best_cost) {
        best_cost = cost;
        best = shape;
      }
    }
  }
  return best;
}

std::string render_song(const SongShape& shape, std::uint64_t salt) {
  std::vector<std::string> chorus;
  for (std::size_t k = 0; k < shape.chorus_len; ++k) chorus.push_back(make_word(k, salt));
  std::size_t next_word = shape.chorus_len;

  std::string text;
  for (std::size_t s = 0; s < shape.sections; ++s) {
    std::vector<std::string> verse;
    for (std::size_t k = 0; k < shape.verse_len; ++k) verse.push_back(make_word(next_word++, salt));
    text += "[Verse " + std::to_string(s + 1) + "]\n";
    append_lines(text, verse);
    text += "\n[Chorus]\n";
    append_lines(text, chorus);
    if (s + 1 < shape.sections) text += "\n";
  }
  return text;
}

CorpusPaths CorpusPaths::in(const std::filesystem::path& dir) {
  return {dir / "scrobbles.csv", dir / "users.csv", dir / "lyrics.jsonl", dir / "features.csv"};
}

SynthCorpus generate(const SynthConfig& config) {
  validate(config);
  SynthCorpus corpus;
  SplitMix64 rng(derive_seed(config.seed, 0));

  const std::size_t n_users = config.n_at_risk + config.n_no_risk;
  const int user_width = std::max(4, digits(n_users));
  const int track_width = std::max(3, digits(config.tracks_per_user));

  struct TrackDraft {
    std::string id;
    SongShape shape;
    bool has_lyrics = false;
    bool instrumental = false;
    bool has_va = false;
    double energy = 0.0;
  };
  std::vector<TrackDraft> tracks;
  tracks.reserve(n_users * config.tracks_per_user);

  for (std::size_t u = 0; u < n_users; ++u) {
    const bool at_risk = u < config.n_at_risk;
    UserProfile profile;
    profile.user_id = "u" + pad(u + 1, user_width);
    profile.k10 = at_risk ? 30 + static_cast<int>(uniform_index(rng, 21))
                          : 10 + static_cast<int>(uniform_index(rng, 10));
    profile.age = 15 + static_cast<int>(uniform_index(rng, 21));
    profile.risk_group = assign_risk_group(profile.k10);
    profile.age_group = assign_age_group(profile.age);

    const double info_pref = standard_normal(rng) + (at_risk ? config.aic_shift : 0.0);
    const double rep_pref = standard_normal(rng) + (at_risk ? config.compressibility_shift : 0.0);

    const std::size_t first_track = tracks.size();
    for (std::size_t t = 0; t < config.tracks_per_user; ++t) {
      TrackDraft d;
      d.id = profile.user_id + "_t" + pad(t + 1, track_width);
      const double target_aic = std::clamp(80.0 + 20.0 * info_pref + 25.0 * standard_normal(rng), 8.0, 400.0);
      const double target_comp = std::clamp(0.45 + 0.08 * rep_pref + 0.12 * standard_normal(rng), 0.02, 0.85);
      d.shape = fit_song_shape(target_aic, target_comp);
      d.has_lyrics = uniform01(rng) < config.lyrics_coverage;
      const bool instrumental_draw = uniform01(rng) < config.instrumental_fraction;
      d.instrumental = d.has_lyrics && instrumental_draw;
      d.has_va = uniform01(rng) < config.va_coverage;
      d.energy = uniform01(rng);
      tracks.push_back(std::move(d));
    }

    // Every track is played once; the remaining plays follow a 1/rank law.
    const std::size_t total_plays = config.sessions_per_user * config.plays_per_session;
    std::vector<std::size_t> plays(config.tracks_per_user);
    std::iota(plays.begin(), plays.end(), first_track);
    std::vector<double> cumulative(config.tracks_per_user);
    double acc = 0.0;
    for (std::size_t t = 0; t < cumulative.size(); ++t) {
      acc += 1.0 / static_cast<double>(t + 1);
      cumulative[t] = acc;
    }
    while (plays.size() < total_plays) plays.push_back(first_track + pick_weighted(rng, cumulative));
    shuffle(rng, std::span<std::size_t>(plays));

    // Sessions are separated by 3-24 h, plays inside by 150-400 s, so the
    // 2 h rule recovers exactly sessions_per_user sessions.
    Timestamp clock{std::chrono::sys_days{std::chrono::year{2019} / 1 / 1}};
    clock += std::chrono::seconds{static_cast<long long>(uniform_index(rng, 86400))};
    std::size_t p = 0;
    for (std::size_t s = 0; s < config.sessions_per_user; ++s) {
      if (s > 0) clock += std::chrono::seconds{3 * 3600 + static_cast<long long>(uniform_index(rng, 21 * 3600))};
      for (std::size_t k = 0; k < config.plays_per_session; ++k, ++p) {
        if (k > 0) clock += std::chrono::seconds{150 + static_cast<long long>(uniform_index(rng, 251))};
        corpus.scrobbles.push_back({profile.user_id, tracks[plays[p]].id, clock});
      }
    }
    corpus.users.push_back(std::move(profile));
  }

  // Valence: Gaussian copula on the normal scores of realized compressibility
  // ranks, with the noise orthogonalized against those scores so the sample
  // correlation equals the Pearson equivalent of the rank target.
  std::vector<std::size_t> coupled;
  std::vector<double> realized;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].has_lyrics && tracks[i].has_va) {
      coupled.push_back(i);
      realized.push_back(tracks[i].instrumental ? 1.0 : tracks[i].shape.compressibility());
    }
  }
  std::vector<double> valence(tracks.size(), 0.0);
  SplitMix64 va_rng(derive_seed(config.seed, 1));
  for (auto& v : valence) v = phi(standard_normal(va_rng));
  if (coupled.size() >= 3) {
    const auto ranks = average_ranks(realized);
    const double n = static_cast<double>(coupled.size());
    std::vector<double> z(coupled.size()), e(coupled.size());
    for (std::size_t k = 0; k < coupled.size(); ++k) {
      z[k] = inverse_phi((ranks[k] - 0.5) / n);
      e[k] = standard_normal(va_rng);
    }
    auto standardize = [](std::vector<double>& xs) {
      const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double& x : xs) {
        x -= mean;
        ss += x * x;
      }
      const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
      if (sd > 0.0) {
        for (double& x : xs) x /= sd;
      }
      return sd > 0.0;
    };
    if (standardize(z)) {
      standardize(e);
      double proj = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) proj += z[k] * e[k];
      proj /= n;
      for (std::size_t k = 0; k < z.size(); ++k) e[k] -= proj * z[k];
      standardize(e);
      const double rho_s = config.valence_compressibility_rho;
      const double rho_p = 2.0 * std::sin(std::numbers::pi * rho_s / 6.0);
      const double noise = std::sqrt(1.0 - rho_p * rho_p);
      for (std::size_t k = 0; k < coupled.size(); ++k) {
        valence[coupled[k]] = phi(rho_p * z[k] + noise * e[k]);
      }
    }
  }

  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& d = tracks[i];
    if (d.has_lyrics) {
      LyricsRecord rec;
      rec.track_id = d.id;
      rec.instrumental = d.instrumental;
      if (!d.instrumental) rec.text = render_song(d.shape, derive_seed(config.seed, 2 + i));
      corpus.lyrics.push_back(std::move(rec));
    }
    if (d.has_va) corpus.features.push_back({d.id, valence[i], d.energy});
  }
  return corpus;
}

CorpusPaths write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = CorpusPaths::in(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.scrobbles);
    out << "user_id,track_id,timestamp\n";
    for (const auto& ev : corpus.scrobbles) {
      out << io::quote_field(ev.user_id) << ',' << io::quote_field(ev.track_id) << ','
          << io::format_iso8601(ev.timestamp) << '\n';
    }
  }
  {
    auto out = open(paths.users);
    out << "user_id,k10,age\n";
    for (const auto& u : corpus.users) out << io::quote_field(u.user_id) << ',' << u.k10 << ',' << u.age << '\n';
  }
  {
    auto out = open(paths.lyrics);
    for (const auto& rec : corpus.lyrics) {
      nlohmann::ordered_json doc;
      doc["track_id"] = rec.track_id;
      doc["text"] = rec.text;
      doc["instrumental"] = rec.instrumental;
      out << doc.dump() << '\n';
    }
  }
  {
    auto out = open(paths.features);
    out << "track_id,valence,energy\n";
    for (const auto& f : corpus.features) {
      out << io::quote_field(f.track_id) << ',' << io::format_double(f.valence) << ','
          << io::format_double(f.energy) << '\n';
    }
  }
  return paths;
}

}  // namespace lyricscope
