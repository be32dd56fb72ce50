#include "lyricscope/analyze.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lyricscope/error.hpp"
#include "lyricscope/sessions.hpp"

namespace lyricscope {

namespace {

using nlohmann::ordered_json;

template <typename T>
std::vector<T> load_checked(const std::filesystem::path& path, const std::string& what,
                            ParseResult<T> (*parse)(std::istream&)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + what + " file: " + path.string());
  ParseResult<T> parsed;
  try {
    parsed = parse(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!parsed.errors.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": " << parsed.errors.size() << " rejected row(s)";
    for (std::size_t i = 0; i < std::min<std::size_t>(parsed.errors.size(), 5); ++i) {
      msg << "\n  line " << parsed.errors[i].line << ": " << parsed.errors[i].message;
    }
    throw ConfigError(msg.str());
  }
  return std::move(parsed.records);
}

ParseResult<ScrobbleEvent> parse_scrobbles_default(std::istream& in) { return parse_scrobbles(in); }
ParseResult<UserProfile> parse_users_default(std::istream& in) { return parse_users(in); }
ParseResult<AudioFeatures> parse_features_default(std::istream& in) { return parse_features(in); }

bool in_design(const UserFeatureRow& row) {
  return row.risk_group == RiskGroup::AtRisk || row.risk_group == RiskGroup::NoRisk;
}

// Runs an At-Risk vs No-Risk MWU over the users for which `value` is defined.
template <typename Getter>
TestRecord group_test(std::string family, std::string metric, std::string subset,
                      const std::vector<UserFeatureRow>& rows, Getter value) {
  TestRecord rec;
  rec.id = family + "/" + metric + "/" + subset;
  rec.family = std::move(family);
  rec.metric = std::move(metric);
  rec.subset = std::move(subset);
  std::vector<double> at_risk, no_risk;
  for (const auto& row : rows) {
    if (!in_design(row)) continue;
    const std::optional<double> v = value(row);
    if (!v) continue;
    (row.risk_group == RiskGroup::AtRisk ? at_risk : no_risk).push_back(*v);
  }
  try {
    rec.result = mann_whitney_u(at_risk, no_risk);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::string significance(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return "~";
  return "";
}

std::string fmt(double v) { return io::format_double(v); }

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

ordered_json to_json(const TestRecord& rec) {
  ordered_json j;
  j["id"] = rec.id;
  j["family"] = rec.family;
  j["metric"] = rec.metric;
  j["subset"] = rec.subset;
  if (rec.result) {
    const auto& r = *rec.result;
    j["test"] = r.test;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["method"] = to_string(r.method);
    j["n_per_group"] = r.n_per_group;
    j["medians"] = r.medians;
    if (r.test == "mann_whitney_u") j["groups"] = {"AtRisk", "NoRisk"};
    if (r.test == "spearman") j["variables"] = {"valence", "compressibility"};
  } else if (rec.wts) {
    const auto& w = *rec.wts;
    j["test"] = "permuted_wts";
    j["effect"] = to_string(w.effect);
    j["statistic"] = w.statistic;
    j["p_value"] = w.p_value;
    j["method"] = to_string(TestMethod::Permutation);
    j["n_permutations"] = w.n_permutations;
    j["seed"] = w.seed;
    j["cells"] = {"Young*AtRisk", "Young*NoRisk", "Older*AtRisk", "Older*NoRisk"};
    j["cell_n"] = w.cell_n;
  } else {
    j["test"] = rec.family == "wts" ? "permuted_wts" : rec.family == "spearman" ? "spearman" : "mann_whitney_u";
    j["statistic"] = nullptr;
    j["p_value"] = nullptr;
  }
  if (rec.error) j["error"] = *rec.error;
  return j;
}

void write_group_table(std::ostream& csv, std::ostream& md, const std::vector<const TestRecord*>& recs,
                       const std::string& subset_header) {
  csv << subset_header << ",metric,n_at_risk,n_no_risk,median_at_risk,median_no_risk,U,p,significance\n";
  md << "| " << subset_header << " | metric | n At-Risk | n No-Risk | median At-Risk | median No-Risk | U | p | |\n";
  md << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto* rec : recs) {
    if (!rec->result) {
      csv << rec->subset << ',' << rec->metric << ",,,,,,,\n";
      md << "| " << rec->subset << " | " << rec->metric << " | | | | | | n/a (" << rec->error.value_or("") << ") | |\n";
      continue;
    }
    const auto& r = *rec->result;
    csv << rec->subset << ',' << rec->metric << ',' << r.n_per_group[0] << ',' << r.n_per_group[1] << ','
        << fmt(r.medians[0]) << ',' << fmt(r.medians[1]) << ',' << fmt(r.statistic) << ','
        << fmt(r.p_value) << ',' << significance(r.p_value) << '\n';
    md << "| " << rec->subset << " | " << rec->metric << " | " << r.n_per_group[0] << " | "
       << r.n_per_group[1] << " | " << short_fmt(r.medians[0]) << " | " << short_fmt(r.medians[1])
       << " | " << short_fmt(r.statistic) << " | " << short_fmt(r.p_value) << " | "
       << significance(r.p_value) << " |\n";
  }
  md << "\n";
}

}  // namespace

const TestRecord* AnalysisResult::find(const std::string& id) const {
  for (const auto& t : tests) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<TopN> parse_top_n_list(const std::string& text) {
  std::vector<TopN> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto trimmed = std::string(io::trim(item));
    std::string lower;
    for (char ch : trimmed) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (lower == "all") {
      out.push_back(TopN::all());
      continue;
    }
    const auto n = io::parse_int(trimmed);
    if (!n || *n <= 0) throw ConfigError("--top-n: '" + trimmed + "' is neither a positive integer nor 'all'");
    out.push_back(TopN::of(static_cast<std::size_t>(*n)));
  }
  if (out.empty()) throw ConfigError("--top-n: empty list");
  return out;
}

AnalysisResult run_analysis(const RunConfig& config) {
  if (config.permutations < 100) throw ConfigError("--permutations must be at least 100");
  if (config.min_match < 1) throw ConfigError("--min-match must be at least 1");
  if (!(config.quadrant_threshold >= 0.0 && config.quadrant_threshold <= 1.0)) {
    throw ConfigError("--quadrant-threshold must lie in [0, 1]");
  }
  if (config.gap <= std::chrono::seconds::zero()) throw ConfigError("--gap-hours must be positive");
  for (const auto& t : config.top_n) {
    if (t.n && *t.n == 0) throw ConfigError("--top-n entries must be positive");
  }

  const auto events = load_checked<ScrobbleEvent>(config.scrobbles, "scrobbles", &parse_scrobbles_default);
  const auto users = load_checked<UserProfile>(config.users, "users", &parse_users_default);
  const LyricsStore lyrics(load_checked<LyricsRecord>(config.lyrics, "lyrics", &parse_lyrics));
  const FeatureStore audio(load_checked<AudioFeatures>(config.audio_features, "audio features", &parse_features_default));

  {
    std::set<std::string> seen;
    for (const auto& u : users) {
      if (!seen.insert(u.user_id).second) {
        throw ConfigError(config.users.string() + ": duplicate user_id '" + u.user_id + "'");
      }
    }
  }

  AnalysisResult result;
  result.coverage = coverage(events, lyrics, audio);

  // Per-track metrics, in track_id order for the dump.
  const CompressOptions compress_options{config.min_match};
  std::vector<const LyricsRecord*> ordered_lyrics;
  for (const auto& rec : lyrics.records()) ordered_lyrics.push_back(&rec);
  std::sort(ordered_lyrics.begin(), ordered_lyrics.end(),
            [](const LyricsRecord* a, const LyricsRecord* b) { return a->track_id < b->track_id; });
  std::ostringstream metrics_csv;
  metrics_csv << "track_id,token_count,compressed_len,compressibility,aic,instrumental\n";
  for (const auto* rec : ordered_lyrics) {
    CompressionResult scored;
    try {
      scored = score(*rec, compress_options);
    } catch (const MissingLyricsError&) {
      ++result.lyrics_empty_excluded;
      continue;
    }
    result.metrics.emplace(rec->track_id, TrackMetric{scored.compressibility, static_cast<double>(scored.aic)});
    metrics_csv << io::quote_field(rec->track_id) << ',' << scored.original_len << ',' << scored.compressed_len
                << ',' << fmt(scored.compressibility) << ',' << scored.aic << ','
                << (scored.instrumental ? "true" : "false") << '\n';
  }
  result.files["metrics.csv"] = metrics_csv.str();

  // Sessions dump.
  std::vector<Session> all_sessions;
  for (auto run : split_by_user(events)) {
    auto s = segment(run, config.gap);
    std::move(s.begin(), s.end(), std::back_inserter(all_sessions));
  }
  std::ostringstream sessions_csv;
  write_sessions_csv(sessions_csv, all_sessions);
  result.files["sessions.csv"] = sessions_csv.str();

  // Features. The whole history is always part of the top-n list.
  auto& fo = result.feature_options;
  fo.top_n = config.top_n;
  if (std::find(fo.top_n.begin(), fo.top_n.end(), TopN::all()) == fo.top_n.end()) fo.top_n.push_back(TopN::all());
  fo.weighting = config.play_weighted ? Weighting::PerPlay : Weighting::PerTrack;
  fo.quadrant_threshold = config.quadrant_threshold;
  fo.session_gap = config.gap;
  result.rows = compute_all_features(users, events, result.metrics, audio, fo, config.threads);
  std::ostringstream features_csv;
  write_features_csv(features_csv, result.rows, fo);
  result.files["features_out.csv"] = features_csv.str();

  const auto& rows = result.rows;
  const std::size_t all_index = static_cast<std::size_t>(
      std::find(fo.top_n.begin(), fo.top_n.end(), TopN::all()) - fo.top_n.begin());
  constexpr std::array<Metric, 2> kMetrics = {Metric::Compressibility, Metric::Aic};

  // (a) static top-n
  for (Metric m : kMetrics) {
    for (std::size_t i = 0; i < fo.top_n.size(); ++i) {
      result.tests.push_back(group_test("static", to_string(m), "top_" + fo.top_n[i].label(), rows,
                                        [&](const UserFeatureRow& r) -> std::optional<double> {
                                          if (!r.top_n[i]) return std::nullopt;
                                          return r.top_n[i]->get(m);
                                        }));
    }
  }
  // (b) quadrants
  for (Metric m : kMetrics) {
    for (auto q : kQuadrants) {
      const auto qi = static_cast<std::size_t>(q);
      result.tests.push_back(group_test("quadrant", to_string(m), to_string(q), rows,
                                        [&](const UserFeatureRow& r) -> std::optional<double> {
                                          if (!r.quadrants[qi]) return std::nullopt;
                                          return r.quadrants[qi]->get(m);
                                        }));
    }
  }
  // (c) valence vs compressibility over the distinct tracks heard by the two groups
  {
    std::set<std::string> group_users;
    for (const auto& r : rows) {
      if (in_design(r)) group_users.insert(r.user_id);
    }
    std::set<std::string> tracks;
    for (const auto& ev : events) {
      if (group_users.contains(ev.user_id)) tracks.insert(ev.track_id);
    }
    std::vector<double> valence, comp;
    for (const auto& t : tracks) {
      const auto* va = audio.find(t);
      auto it = result.metrics.find(t);
      if (va == nullptr || it == result.metrics.end()) continue;
      valence.push_back(va->valence);
      comp.push_back(it->second.compressibility);
    }
    TestRecord rec;
    rec.id = "spearman/compressibility/valence";
    rec.family = "spearman";
    rec.metric = "compressibility";
    rec.subset = "valence";
    try {
      rec.result = spearman(valence, comp);
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    result.tests.push_back(std::move(rec));
  }
  // (d) permuted WTS on whole-history means
  for (Metric m : kMetrics) {
    FactorialSample sample;
    for (const auto& r : rows) {
      if (!in_design(r) || r.age_group == AgeGroup::OutOfRange || !r.top_n[all_index]) continue;
      sample.observations.push_back({r.risk_group, r.age_group, r.top_n[all_index]->get(m)});
    }
    for (Effect e : kEffects) {
      TestRecord rec;
      rec.family = "wts";
      rec.metric = to_string(m);
      rec.subset = to_string(e);
      rec.id = "wts/" + rec.metric + "/" + rec.subset;
      try {
        rec.wts = permuted_wts(sample, e, config.permutations, config.seed, config.threads);
      } catch (const std::exception& ex) {
        rec.error = ex.what();
      }
      result.tests.push_back(std::move(rec));
    }
  }
  // (e) session variability
  for (Metric m : kMetrics) {
    result.tests.push_back(group_test("intra_session", to_string(m), "sessions", rows,
                                      [&](const UserFeatureRow& r) { return r.intra(m); }));
    result.tests.push_back(group_test("inter_session", to_string(m), "sessions", rows,
                                      [&](const UserFeatureRow& r) { return r.inter(m); }));
  }

  // tests_out.json
  {
    ordered_json arr = ordered_json::array();
    for (const auto& t : result.tests) arr.push_back(to_json(t));
    result.files["tests_out.json"] = arr.dump(2) + "\n";
  }
  // coverage.json
  {
    ordered_json j;
    const auto& c = result.coverage;
    j["total_events"] = c.total_events;
    j["events_with_lyrics"] = c.events_with_lyrics;
    j["events_instrumental"] = c.events_instrumental;
    j["events_with_va"] = c.events_with_va;
    j["lyrics_ratio"] = c.lyrics_ratio();
    j["instrumental_ratio"] = c.instrumental_ratio();
    j["va_ratio"] = c.va_ratio();
    j["lyrics_records_empty_excluded"] = result.lyrics_empty_excluded;
    result.files["coverage.json"] = j.dump(2) + "\n";
  }

  // Report tables, built only from the records above.
  auto select = [&](const std::string& family, const std::string& metric) {
    std::vector<const TestRecord*> out;
    for (const auto& t : result.tests) {
      if (t.family == family && (metric.empty() || t.metric == metric)) out.push_back(&t);
    }
    return out;
  };
  std::ostringstream md;
  md << "# Lyric simplicity report\n\n";
  md << "Significance: ** p < 0.01, * p < 0.05, ~ p < 0.1 (borderline). Raw p values are always shown.\n\n";
  md << "Coverage: " << result.coverage.total_events << " plays; lyrics "
     << short_fmt(result.coverage.lyrics_ratio()) << ", instrumental "
     << short_fmt(result.coverage.instrumental_ratio()) << ", valence/arousal "
     << short_fmt(result.coverage.va_ratio()) << ".\n\n";

  {
    std::ostringstream csv;
    md << "## Mann-Whitney U, mean AIC by top-n threshold\n\n";
    write_group_table(csv, md, select("static", "aic"), "threshold");
    result.files["table1_aic.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    md << "## Mann-Whitney U, mean compressibility by top-n threshold\n\n";
    write_group_table(csv, md, select("static", "compressibility"), "threshold");
    result.files["table_static_compressibility.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    md << "## Mann-Whitney U per valence/arousal quadrant\n\n";
    write_group_table(csv, md, select("quadrant", ""), "quadrant");
    result.files["quadrant_tests.csv"] = csv.str();
  }
  {
    const auto* rec = result.find("spearman/compressibility/valence");
    md << "## Spearman correlation, valence vs compressibility (tracks)\n\n";
    if (rec->result) {
      md << "rho = " << short_fmt(rec->result->statistic) << ", p = " << short_fmt(rec->result->p_value)
         << " " << significance(rec->result->p_value) << ", n = " << rec->result->n_per_group[0] << "\n\n";
    } else {
      md << "n/a (" << rec->error.value_or("") << ")\n\n";
    }
  }
  {
    std::ostringstream csv;
    csv << "metric,effect,wts,p,n_permutations,seed,significance\n";
    md << "## Permuted Wald-type statistic, age x risk (whole-history means)\n\n";
    md << "| metric | effect | WTS | p | permutations | |\n|---|---|---|---|---|---|\n";
    for (const auto* rec : select("wts", "")) {
      if (!rec->wts) {
        csv << rec->metric << ',' << rec->subset << ",,,,,\n";
        md << "| " << rec->metric << " | " << rec->subset << " | | n/a (" << rec->error.value_or("") << ") | | |\n";
        continue;
      }
      const auto& w = *rec->wts;
      csv << rec->metric << ',' << rec->subset << ',' << fmt(w.statistic) << ',' << fmt(w.p_value) << ','
          << w.n_permutations << ',' << w.seed << ',' << significance(w.p_value) << '\n';
      md << "| " << rec->metric << " | " << rec->subset << " | " << short_fmt(w.statistic) << " | "
         << short_fmt(w.p_value) << " | " << w.n_permutations << " | " << significance(w.p_value) << " |\n";
    }
    md << "\n";
    result.files["wts_tests.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    auto recs = select("intra_session", "");
    auto inter = select("inter_session", "");
    recs.insert(recs.end(), inter.begin(), inter.end());
    md << "## Mann-Whitney U, session variability\n\n";
    // the subset column carries the family here
    std::vector<TestRecord> relabeled;
    for (const auto* r : recs) {
      TestRecord copy = *r;
      copy.subset = r->family;
      relabeled.push_back(std::move(copy));
    }
    std::vector<const TestRecord*> ptrs;
    for (const auto& r : relabeled) ptrs.push_back(&r);
    write_group_table(csv, md, ptrs, "variability");
    result.files["session_tests.csv"] = csv.str();
  }
  // Boxplot data per user and quadrant.
  {
    std::ostringstream csv;
    csv << "user_id,risk_group,quadrant,compressibility,aic\n";
    for (const auto& r : rows) {
      if (!in_design(r)) continue;
      for (auto q : kQuadrants) {
        const auto& means = r.quadrants[static_cast<std::size_t>(q)];
        if (!means) continue;
        csv << io::quote_field(r.user_id) << ',' << to_string(r.risk_group) << ',' << to_string(q) << ','
            << fmt(means->compressibility) << ',' << fmt(means->aic) << '\n';
      }
    }
    result.files["quadrant_boxplot.csv"] = csv.str();
  }
  // Group medians by threshold, taken from the static test records.
  {
    std::ostringstream csv;
    csv << "threshold,metric,group,median,n\n";
    for (const auto* rec : select("static", "")) {
      if (!rec->result) continue;
      const auto& r = *rec->result;
      csv << rec->subset << ',' << rec->metric << ",AtRisk," << fmt(r.medians[0]) << ',' << r.n_per_group[0] << '\n';
      csv << rec->subset << ',' << rec->metric << ",NoRisk," << fmt(r.medians[1]) << ',' << r.n_per_group[1] << '\n';
    }
    result.files["median_by_threshold.csv"] = csv.str();
  }
  result.files["report.md"] = md.str();
  return result;
}

void write_outputs(const AnalysisResult& result, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const bool created_dir = !fs::exists(dir);
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : result.files) {
      const auto path = dir / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw ConfigError("cannot write output file: " + path.string());
      written.push_back(path);
      out << content;
      out.close();
      if (!out) throw ConfigError("error writing output file: " + path.string());
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created_dir) fs::remove(dir, ec);
    throw;
  }
}

}  // namespace lyricscope
