#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oracleloom/canonical_json.hpp"
#include "oracleloom/sentiment.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom {

struct RawDocument {
  std::string url;
  std::string source_id;
  std::string title;
  std::string body;
  std::optional<Timestamp> published_at;
  Timestamp fetched_at{};

  /// published_at when known, otherwise fetched_at.
  Timestamp effective_time() const { return published_at.value_or(fetched_at); }

  Json to_json() const;
  /// Throws BadFixture when a field is missing or violates the invariants.
  /// `fetched_default` stands in for an absent fetched_at (live responses).
  static RawDocument from_json(const Json& j, std::optional<Timestamp> fetched_default = std::nullopt);
};

enum class AdapterMode { Replay, Live };

struct SourceAdapterConfig {
  std::string source_id;
  AdapterMode mode = AdapterMode::Replay;
  std::filesystem::path fixture_path;
  /// Live: URL template; `{keyword}` and `{date}` (YYYY-MM-DD) are substituted.
  std::string endpoint;
  /// Live: name of the environment variable holding the credential.
  std::string credential_env;
  int request_interval_ms = 1000;
  int max_docs_per_day = 50;
  int timeout_ms = 60'000;

  /// Throws BadConfig when mode-specific fields are missing or
  /// request_interval_ms < 100.
  void validate() const;
};

struct FetchQuery {
  std::string keyword;
  std::vector<std::string> synonyms;
  DateRange window;
};

/// Case-insensitive substring match of keyword or any synonym on title + body.
bool matches_keyword(const RawDocument& doc, const FetchQuery& query);

/// Replay reads the line-delimited JSON fixture; Live issues one GET per day
/// of the window, spaced by request_interval_ms. Both filter by keyword and
/// window, cap each calendar day at max_docs_per_day, and order by
/// (effective time, url). Throws FixtureMissing, LiveDisabled, UpstreamError.
std::vector<RawDocument> fetch(const SourceAdapterConfig& config, const FetchQuery& query,
                               const Sleeper& sleep = real_sleeper(), const Clock& clock = system_clock());

/// Runs each source concurrently and merges by (effective time, url).
std::vector<RawDocument> fetch_all(std::span<const SourceAdapterConfig> configs, const FetchQuery& query,
                                   const Sleeper& sleep = real_sleeper(), const Clock& clock = system_clock());

/// Lowercases scheme and host, drops the fragment and utm_* query parameters.
std::string normalize_url(std::string_view url);

/// Removes documents whose normalized URLs repeat, keeping the earliest
/// published version at the position of the group's first occurrence.
std::vector<RawDocument> dedupe(std::span<const RawDocument> docs);

std::pair<Timestamp, TimestampConfidence> assign_timestamp(const RawDocument& doc);

/// Strips tags (dropping script/style bodies), decodes common entities, and
/// collapses whitespace.
std::string extract_visible_text(std::string_view html);
std::optional<std::string> extract_title(std::string_view html);

/// Replay: looks the URL up in the fixture (normalized match). Live: GETs the
/// page. Either way the body goes through extract_visible_text. Throws
/// NotFound, UpstreamError.
RawDocument fetch_url(const std::string& url, const SourceAdapterConfig& config, const Clock& clock = system_clock());

/// Stable identity of the corpus the adapters would read: fixture contents
/// for Replay sources, the current day for Live ones.
std::string corpus_snapshot_id(std::span<const SourceAdapterConfig> configs, const Clock& clock);

}  // namespace oracleloom
