#pragma once

// End-to-end run: ingest -> lyric metrics -> per-user features -> group
// tests, producing machine-readable outputs and report tables.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lyricscope/compress.hpp"
#include "lyricscope/corpus.hpp"
#include "lyricscope/features.hpp"
#include "lyricscope/stats.hpp"

namespace lyricscope {

struct RunConfig {
  std::filesystem::path scrobbles;
  std::filesystem::path users;
  std::filesystem::path lyrics;
  std::filesystem::path audio_features;
  std::filesystem::path out;
  std::vector<TopN> top_n = {TopN::of(100), TopN::of(250), TopN::of(500), TopN::all()};
  std::chrono::seconds gap = kDefaultSessionGap;
  std::size_t permutations = kDefaultPermutations;
  std::uint64_t seed = 0;
  bool play_weighted = false;
  std::size_t min_match = kDefaultMinMatch;
  double quadrant_threshold = 0.5;
  unsigned threads = 1;
};

// One hypothesis test in tests_out.json. Exactly one of mwu/spearman/wts is
// set unless `error` explains why the test could not run.
struct TestRecord {
  std::string id;      // e.g. "static/aic/top_100"
  std::string family;  // static, quadrant, spearman, wts, intra_session, inter_session
  std::string metric;  // compressibility or aic
  std::string subset;  // top_100, Sadness, all, ...
  std::optional<TestResult> result;
  std::optional<WtsResult> wts;
  std::optional<std::string> error;
};

struct AnalysisResult {
  CoverageReport coverage;
  std::size_t lyrics_empty_excluded = 0;
  MetricStore metrics;
  std::vector<UserFeatureRow> rows;
  FeatureOptions feature_options;
  std::vector<TestRecord> tests;
  // Output file name -> contents, written verbatim by write_outputs.
  std::map<std::string, std::string> files;

  const TestRecord* find(const std::string& id) const;
};

// Parses and validates every input, then computes all outputs in memory.
// Throws ConfigError (naming the path) on unreadable files, missing columns
// or rejected rows.
AnalysisResult run_analysis(const RunConfig& config);

// Writes `files` into `dir`. On failure every file written so far is
// removed before the exception propagates.
void write_outputs(const AnalysisResult& result, const std::filesystem::path& dir);

// Parses "100,250,500,all".
std::vector<TopN> parse_top_n_list(const std::string& text);

}  // namespace lyricscope
