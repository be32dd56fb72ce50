// lyricscope: lyric simplicity analysis of listening histories.
//
//   lyricscope analyze --scrobbles s.csv --users u.csv --lyrics l.jsonl \
//       --audio-features f.csv --out results/
//   lyricscope simulate --config synth.json --out corpus/

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "lyricscope/analyze.hpp"
#include "lyricscope/error.hpp"
#include "lyricscope/synth.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 1;

}  // namespace

int main(int argc, char** argv) {
  using namespace lyricscope;

  CLI::App app{"Lyric simplicity metrics and group statistics over listening histories"};
  app.require_subcommand(1);

  RunConfig run;
  std::string top_n = "100,250,500,all";
  double gap_hours = 2.0;
  auto* analyze = app.add_subcommand("analyze", "Compute metrics, features and group tests");
  analyze->add_option("--scrobbles", run.scrobbles, "scrobbles.csv (user_id,track_id,timestamp)")->required();
  analyze->add_option("--users", run.users, "users.csv (user_id,k10,age)")->required();
  analyze->add_option("--lyrics", run.lyrics, "lyrics.jsonl (track_id,text,instrumental)")->required();
  analyze->add_option("--audio-features", run.audio_features, "features.csv (track_id,valence,energy)")->required();
  analyze->add_option("--out", run.out, "Output directory")->required();
  analyze->add_option("--top-n", top_n, "Comma-separated top-n thresholds; 'all' for the whole history")
      ->capture_default_str();
  analyze->add_option("--gap-hours", gap_hours, "Inactivity gap that starts a new session")->capture_default_str();
  analyze->add_option("--permutations", run.permutations, "Permutations per WTS test")->capture_default_str();
  analyze->add_option("--seed", run.seed, "Seed for permutation tests")->capture_default_str();
  analyze->add_flag("--play-weighted", run.play_weighted, "Weight static means by playcount");
  analyze->add_option("--min-match", run.min_match, "Shortest LZ77 back-reference, in words")->capture_default_str();
  analyze->add_option("--quadrant-threshold", run.quadrant_threshold, "Valence/energy midpoint")->capture_default_str();
  analyze->add_option("--threads", run.threads, "Worker threads; output does not depend on this")
      ->capture_default_str();

  std::string config_path;
  std::filesystem::path corpus_out;
  bool print_config = false;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus");
  simulate->add_option("--config", config_path, "JSON synth config; defaults apply to absent fields");
  simulate->add_option("--out", corpus_out, "Directory for the four corpus files");
  simulate->add_flag("--print-default-config", print_config, "Print the default config and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) {
      run.top_n = parse_top_n_list(top_n);
      if (!(gap_hours > 0.0)) throw ConfigError("--gap-hours must be positive");
      run.gap = std::chrono::seconds{static_cast<long long>(std::llround(gap_hours * 3600.0))};
      if (run.threads == 0) run.threads = 1;
      const auto result = run_analysis(run);
      write_outputs(result, run.out);
      std::cout << "wrote " << result.files.size() << " files to " << run.out.string() << "\n";
      return EXIT_SUCCESS;
    }
    if (print_config) {
      std::cout << to_json(SynthConfig{});
      return EXIT_SUCCESS;
    }
    if (corpus_out.empty()) throw ConfigError("simulate: --out is required");
    SynthConfig config;
    if (!config_path.empty()) config = parse_synth_config(io::read_file(config_path));
    const auto corpus = generate(config);
    const auto paths = write_corpus(corpus, corpus_out);
    std::cout << "wrote " << paths.scrobbles.string() << ", " << paths.users.string() << ", "
              << paths.lyrics.string() << ", " << paths.features.string() << "\n";
    return EXIT_SUCCESS;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
