#pragma once

#include <chrono>
#include <memory>
#include <random>
#include <filesystem>
#include <string>
#include <vector>

#include "oracleloom/config.hpp"
#include "oracleloom/sentiment.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom::testing {

std::filesystem::path source_path(const std::string& relative);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Clock pinned at the end of the bundled fixture window.
Timestamp golden_now();
inline constexpr const char* kGoldenNowText = "2024-10-14T12:00:00Z";
inline constexpr const char* kFixtureKeyword = "food delivery";

/// Default sources replaying the bundled corpus, bundled lexicon and
/// stopwords, everything written under `data_dir`.
ServiceConfig fixture_config(const std::filesystem::path& data_dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Records requested sleeps instead of sleeping.
struct RecordingSleeper {
  std::shared_ptr<std::vector<std::chrono::milliseconds>> calls =
      std::make_shared<std::vector<std::chrono::milliseconds>>();
  Sleeper sleeper() const {
    auto c = calls;
    return [c](std::chrono::milliseconds d) { c->push_back(d); };
  }
};

/// Runs the CLI in-process.
struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};
CliResult run_cli(const std::vector<std::string>& args);

}  // namespace oracleloom::testing

namespace oracleloom::testing {

/// Independent brute-force span scorer written from the rule text: for each
/// token with a neutral-intensity entry, flip-and-halve polarity when either
/// of the two previous tokens is a negator, then scale by a preceding
/// intensity entry and clamp; average over spans.
struct OracleScore {
  double polarity = 0.0;
  double subjectivity = 0.0;
  int spans = 0;
};
OracleScore oracle_score(const std::string& text, const std::vector<LexiconEntry>& lexicon);

/// Random lexicon of `n` entries (about a fifth are intensity modifiers) and
/// random texts over its tokens, negators and filler words.
std::vector<LexiconEntry> random_lexicon(std::mt19937_64& rng, int n);
std::string random_text(std::mt19937_64& rng, const std::vector<LexiconEntry>& lexicon, int max_tokens);

}  // namespace oracleloom::testing
