#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oracleloom/crawler.hpp"
#include "oracleloom/daily_record.hpp"
#include "oracleloom/domain.hpp"
#include "oracleloom/forecasting.hpp"
#include "oracleloom/llm_gateway.hpp"
#include "oracleloom/prompts.hpp"
#include "oracleloom/record_store.hpp"
#include "oracleloom/sentiment.hpp"

namespace oracleloom {

struct SentimentDistribution {
  double positive = 0.0;
  double neutral = 0.0;
  double negative = 0.0;
};

struct ChartData {
  SentimentDistribution sentiment_distribution;
  std::vector<std::pair<Date, double>> trend;
  std::vector<TermCount> term_bars;

  Json to_json() const;
  static ChartData from_json(const Json& j);
};

struct Citation {
  std::string claim_section;
  std::string url;
  std::string source_id;
  TimestampConfidence timestamp_confidence = TimestampConfidence::Published;
};

struct StepTrace {
  int step = 0;
  std::string provider_id;
  int tokens_in = 0;
  int tokens_out = 0;
  int64_t latency_ms = 0;
  int attempts = 1;
};

/// Single-document assessment attached to URL reports.
struct DocumentAssessment {
  std::string url;
  std::string title;
  SentimentScore sentiment;
  SentimentClass sentiment_class = SentimentClass::Neutral;
  Timestamp timestamp{};
  TimestampConfidence timestamp_confidence = TimestampConfidence::Published;
};

struct Report {
  std::string id;
  AnalysisRequest request;
  SectionEnvelope sections;
  std::vector<Citation> citations;
  ChartData charts;
  std::optional<ForecastResult> forecast;
  /// "Rising risk" or "Stable"; set with the forecast.
  std::optional<std::string> risk_level;
  std::optional<DocumentAssessment> assessment;
  int document_count = 0;
  Timestamp created_at{};
  std::vector<StepTrace> pipeline_trace;

  Json to_json() const;
  std::string canonical() const { return canonical_dump(to_json()); }
};

enum class PipelineStage { Crawling, Scoring, Synthesizing };

struct PipelineDeps {
  std::span<const SourceAdapterConfig> sources;
  const Lexicon* lexicon = nullptr;
  const StopwordSet* stopwords = nullptr;
  RecordStore* store = nullptr;
  LlmGateway* gateway = nullptr;
  std::string provider_id = "stub";
  Clock clock = system_clock();
  Sleeper sleep = real_sleeper();
  PromptOptions prompts;
  Thresholds thresholds;
  int top_k = 10;
  int horizon = kDefaultHorizon;
  size_t excerpt_docs = 8;
  size_t excerpt_chars_per_doc = 400;
  size_t excerpt_record_chars = 2000;
  int max_output_tokens = 1024;
  /// Called on every stage change; `step` is set while synthesizing.
  std::function<void(PipelineStage stage, int step)> on_progress;
};

/// Content hash of the request and the corpus the sources would read.
std::string report_id(const AnalysisRequest& request, std::string_view corpus_snapshot);

/// Slope threshold (combined score per day) below which a forecast reads as
/// rising risk.
inline constexpr double kRiskSlope = -0.02;
std::string risk_level(const ForecastResult& forecast, double last_observed);

struct IngestResult {
  std::vector<ScoredDocument> docs;
  /// One per day that had documents, in day order.
  std::vector<DailyRecord> records;
};

/// Fetches, dedupes, scores, and upserts one record per day with documents.
IngestResult ingest(const AnalysisRequest& request, const PipelineDeps& deps);

/// Fetches, scores, archives, synthesizes. Past requests whose window is fully
/// archived skip the crawl. Throws NoData, StepError, and crawler/gateway
/// errors.
Report generate_report(const AnalysisRequest& request, const PipelineDeps& deps);

/// Single-URL variant. Throws NotFound, NoData.
Report generate_url_report(const AnalysisRequest& request, const PipelineDeps& deps);

/// Dispatches on the request kind.
Report run_pipeline(const AnalysisRequest& request, const PipelineDeps& deps);

/// Distribution from classified docs (falling back to the records' class
/// counts when no docs are given), trend from records, term bars from docs
/// (or merged record terms).
ChartData build_chart_data(std::span<const DailyRecord> records, std::span<const ScoredDocument> docs, int k,
                           const StopwordSet& stopwords, const std::unordered_set<std::string>& excluded = {},
                           const Thresholds& thresholds = {});

inline constexpr int kMaxReportWords = 2000;

/// Throws IncompleteReport when a section required by the report kind is
/// missing.
std::string render_report_markdown(const Report& report);

struct ChartSvgs {
  std::string pie;
  std::string trend;
  std::string bars;
};
ChartSvgs render_charts_svg(const ChartData& charts);

/// Writes report.md, report.json, pie.svg, trend.svg, bars.svg under
/// `<data_dir>/reports/<id>/` and returns that directory.
std::filesystem::path write_report_artifacts(const Report& report, const std::filesystem::path& data_dir);

std::filesystem::path report_dir(const std::filesystem::path& data_dir, const std::string& id);

}  // namespace oracleloom
