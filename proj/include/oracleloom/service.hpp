#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "oracleloom/config.hpp"
#include "oracleloom/llm_gateway.hpp"
#include "oracleloom/record_store.hpp"
#include "oracleloom/report.hpp"
#include "oracleloom/sentiment.hpp"

namespace oracleloom {

enum class JobState { Queued, Crawling, Scoring, Synthesizing, Done, Failed };
std::string_view to_string(JobState s);

struct JobEvent {
  JobState state = JobState::Queued;
  /// Thinking step while Synthesizing, else 0.
  int step = 0;
  std::string reason;
  Timestamp at{};

  Json to_json() const;
};

/// A move forward in Queued, Crawling, Scoring, Synthesizing(1..8) order, or
/// into Done/Failed from any non-terminal state.
bool transition_allowed(const JobEvent& from, const JobEvent& to);
bool is_monotone(std::span<const JobEvent> events);

struct JobStatus {
  std::string report_id;
  std::vector<JobEvent> events;

  const JobEvent& current() const { return events.back(); }
  bool terminal() const;
  Json to_json() const;
};

/// User-adjustable settings persisted as `<data_dir>/settings.json`.
struct Settings {
  ScoreWeights score_weights;
  SourceWeights source_weights;
  bool show_urls = true;

  Json to_json() const;
};

struct Submission {
  std::string report_id;
  /// False when an identical job is already queued or running.
  bool accepted = true;
};

/// Job queue, worker pool, and HTTP facade over the report pipeline.
class ReportService {
 public:
  explicit ReportService(ServiceConfig config, Clock clock = system_clock(), Sleeper sleep = real_sleeper());
  ~ReportService();
  ReportService(const ReportService&) = delete;
  ReportService& operator=(const ReportService&) = delete;

  Submission submit(const AnalysisRequest& request);
  std::optional<JobStatus> status(const std::string& id) const;
  /// Persisted report.json bytes.
  std::optional<std::string> report_json(const std::string& id) const;
  /// Blocks until the job is terminal or `timeout` passes; returns the status.
  std::optional<JobStatus> wait(const std::string& id, std::chrono::milliseconds timeout) const;

  Settings settings() const;
  /// Merges a partial settings object and persists it. Throws AllZero,
  /// InvalidRequest.
  Settings update_settings(const Json& patch);
  RequestFields request_defaults() const;

  /// Rule-based parse, then the optional LLM fallback. Throws NoKeyword.
  AnalysisRequest interpret_chat(const std::string& message);

  const ServiceConfig& config() const { return config_; }
  RecordStore& store() { return store_; }

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  /// Submits a Present report for each daily keyword at HH:MM UTC every day.
  void start_daily(int hour, int minute);

 private:
  struct Impl;

  void worker_loop();
  void record(const std::string& id, JobEvent event);
  std::optional<JobStatus> status_unlocked(const std::string& id) const;
  void persist_settings() const;

  ServiceConfig config_;
  Clock clock_;
  Sleeper sleep_;
  Lexicon lexicon_;
  StopwordSet stopwords_;
  RecordStore store_;
  std::unique_ptr<LlmGateway> gateway_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, JobStatus> jobs_;
  std::deque<std::pair<std::string, AnalysisRequest>> queue_;
  Settings settings_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
  std::thread daily_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace oracleloom
