#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oracleloom/crawler.hpp"
#include "oracleloom/domain.hpp"
#include "oracleloom/llm_gateway.hpp"

namespace oracleloom {

/// Everything the service and CLI need to assemble a pipeline. Relative paths
/// in a config file are resolved against the file's directory.
struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8787;
  std::filesystem::path data_dir = "var";
  SourceRegistry registry;
  std::vector<SourceAdapterConfig> adapters;
  std::vector<ProviderConfig> providers;
  std::string default_provider = "stub";
  ScoreWeights score_weights;
  bool show_urls = true;
  std::optional<int64_t> token_budget;
  bool chat_llm_fallback = false;
  std::filesystem::path lexicon_path = "data/lexicon/en_sentiment.tsv";
  std::filesystem::path stopwords_path = "data/lexicon/stopwords_en.txt";
  int workers = 4;
  /// Keywords reported on by the daily scheduler.
  std::vector<std::string> daily_keywords;

  /// Throws BadConfig.
  static ServiceConfig from_json(const Json& j, const std::filesystem::path& base_dir);
  static ServiceConfig load(const std::filesystem::path& path);
  /// `explicit_path`, else $ORACLELOOM_CONFIG, else built-in defaults.
  static ServiceConfig resolve(const std::optional<std::filesystem::path>& explicit_path);

  Json to_json() const;

  /// Switches every adapter to Replay from `<dir>/<source_id>.jsonl`.
  void use_fixture_dir(const std::filesystem::path& dir);

  /// Throws BadConfig on a missing default provider, a bad listen port, or
  /// an adapter without a source profile.
  void validate() const;

  RequestFields request_defaults(Date today) const;
};

/// The five channels the bundled corpus simulates: two official media, one
/// search engine, two social media.
std::vector<SourceProfile> default_source_profiles();

}  // namespace oracleloom
