#include "oracleloom/service.hpp"

#include <httplib.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "oracleloom/error.hpp"
#include "oracleloom/prompts.hpp"

namespace oracleloom {

namespace fs = std::filesystem;

namespace {

int rank(const JobEvent& e) {
  switch (e.state) {
    case JobState::Queued: return 0;
    case JobState::Crawling: return 1;
    case JobState::Scoring: return 2;
    case JobState::Synthesizing: return 10 + e.step;
    case JobState::Done:
    case JobState::Failed: return 100;
  }
  return 0;
}

bool is_terminal(JobState s) { return s == JobState::Done || s == JobState::Failed; }

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoKeyword:
    case ErrorCode::BadDate:
    case ErrorCode::AllZero:
    case ErrorCode::InvalidRequest:
    case ErrorCode::BadArgument:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                Json extra = Json::object()) {
  Json body = std::move(extra);
  body["error"] = {{"code", std::string(code)}, {"message", message}};
  send_json(res, status, body);
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// First balanced top-level JSON object in free text.
std::string first_json_object(const std::string& text) {
  const size_t open = text.find('{');
  if (open == std::string::npos) return {};
  int depth = 0;
  bool in_string = false;
  for (size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return text.substr(open, i - open + 1);
    }
  }
  return {};
}

Json parse_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidRequest, std::string("body is not JSON: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Crawling: return "crawling";
    case JobState::Scoring: return "scoring";
    case JobState::Synthesizing: return "synthesizing";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "queued";
}

Json JobEvent::to_json() const {
  Json j = {{"state", std::string(to_string(state))}, {"at", format_rfc3339(at)}};
  if (state == JobState::Synthesizing) j["step"] = step;
  if (!reason.empty()) j["reason"] = reason;
  return j;
}

bool transition_allowed(const JobEvent& from, const JobEvent& to) {
  if (is_terminal(from.state)) return false;
  if (is_terminal(to.state)) return true;
  return rank(to) > rank(from);
}

bool is_monotone(std::span<const JobEvent> events) {
  if (events.empty() || events.front().state != JobState::Queued) return false;
  for (size_t i = 1; i < events.size(); ++i) {
    if (!transition_allowed(events[i - 1], events[i])) return false;
  }
  return true;
}

bool JobStatus::terminal() const { return !events.empty() && is_terminal(events.back().state); }

Json JobStatus::to_json() const {
  Json evs = Json::array();
  for (const auto& e : events) evs.push_back(e.to_json());
  Json j = {{"report_id", report_id}, {"events", evs}};
  if (!events.empty()) {
    j["state"] = std::string(to_string(current().state));
    if (current().state == JobState::Synthesizing) j["step"] = current().step;
    if (!current().reason.empty()) j["reason"] = current().reason;
  }
  return j;
}

Json Settings::to_json() const {
  Json sw = Json::object();
  for (const auto& [id, w] : source_weights) sw[id] = w;
  return {{"score_weights", score_weights.to_json()}, {"source_weights", sw}, {"show_urls", show_urls}};
}

struct ReportService::Impl {
  httplib::Server server;
  std::thread listener;
};

ReportService::ReportService(ServiceConfig config, Clock clock, Sleeper sleep)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      sleep_(std::move(sleep)),
      lexicon_(Lexicon::load(config_.lexicon_path)),
      stopwords_(load_stopwords(config_.stopwords_path)),
      store_(config_.data_dir),
      gateway_(std::make_unique<LlmGateway>(config_.providers, config_.token_budget, sleep_)),
      impl_(std::make_unique<Impl>()) {
  config_.validate();
  settings_.score_weights = config_.score_weights;
  settings_.source_weights = config_.registry.default_weights();
  settings_.show_urls = config_.show_urls;
  if (auto saved = read_file(config_.data_dir / "settings.json")) {
    try {
      update_settings(Json::parse(*saved));
    } catch (const std::exception& e) {
      std::cerr << "ignoring unreadable settings.json: " << e.what() << "\n";
    }
  }
  for (int i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ReportService::~ReportService() { stop(); }

void ReportService::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ && workers_.empty()) return;
    stopping_ = true;
  }
  changed_.notify_all();
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  if (daily_.joinable()) daily_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

Submission ReportService::submit(const AnalysisRequest& request) {
  const std::string id = report_id(request, corpus_snapshot_id(config_.adapters, clock_));
  std::lock_guard lock(mutex_);
  if (stopping_) throw Error(ErrorCode::StorageFailure, "service is shutting down");
  if (auto it = jobs_.find(id); it != jobs_.end() && !it->second.terminal()) return {id, false};
  if (fs::exists(report_dir(config_.data_dir, id) / "report.json")) {
    if (!jobs_.contains(id)) jobs_[id] = JobStatus{id, {JobEvent{JobState::Done, 0, {}, clock_()}}};
    return {id, true};
  }
  jobs_[id] = JobStatus{id, {JobEvent{JobState::Queued, 0, {}, clock_()}}};
  queue_.emplace_back(id, request);
  changed_.notify_all();
  return {id, true};
}

std::optional<JobStatus> ReportService::status_unlocked(const std::string& id) const {
  if (auto it = jobs_.find(id); it != jobs_.end()) return it->second;
  if (id.find_first_not_of("0123456789abcdef") == std::string::npos &&
      fs::exists(report_dir(config_.data_dir, id) / "report.json")) {
    return JobStatus{id, {JobEvent{JobState::Done, 0, {}, clock_()}}};
  }
  return std::nullopt;
}

std::optional<JobStatus> ReportService::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return status_unlocked(id);
}

std::optional<std::string> ReportService::report_json(const std::string& id) const {
  if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string::npos) return std::nullopt;
  return read_file(report_dir(config_.data_dir, id) / "report.json");
}

std::optional<JobStatus> ReportService::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] {
    auto s = status_unlocked(id);
    return !s || s->terminal() || stopping_;
  });
  return status_unlocked(id);
}

void ReportService::record(const std::string& id, JobEvent event) {
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return;
    if (!transition_allowed(it->second.current(), event)) return;
    it->second.events.push_back(std::move(event));
  }
  changed_.notify_all();
}

void ReportService::worker_loop() {
  while (true) {
    std::optional<std::pair<std::string, AnalysisRequest>> job;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job.emplace(std::move(queue_.front()));
      queue_.pop_front();
    }
    const std::string& id = job->first;
    PipelineDeps deps;
    deps.sources = config_.adapters;
    deps.lexicon = &lexicon_;
    deps.stopwords = &stopwords_;
    deps.store = &store_;
    deps.gateway = gateway_.get();
    deps.provider_id = config_.default_provider;
    deps.clock = clock_;
    deps.sleep = sleep_;
    deps.on_progress = [&](PipelineStage stage, int step) {
      const JobState state = stage == PipelineStage::Crawling  ? JobState::Crawling
                             : stage == PipelineStage::Scoring ? JobState::Scoring
                                                               : JobState::Synthesizing;
      record(id, JobEvent{state, step, {}, clock_()});
    };
    try {
      const Report report = run_pipeline(job->second, deps);
      write_report_artifacts(report, config_.data_dir);
      record(id, JobEvent{JobState::Done, 0, {}, clock_()});
    } catch (const Error& e) {
      record(id, JobEvent{JobState::Failed, 0, std::string(to_string(e.code())) + ": " + e.what(), clock_()});
    } catch (const std::exception& e) {
      record(id, JobEvent{JobState::Failed, 0, e.what(), clock_()});
    }
  }
}

Settings ReportService::settings() const {
  std::lock_guard lock(mutex_);
  return settings_;
}

Settings ReportService::update_settings(const Json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::InvalidRequest, "settings must be a JSON object");
  Settings next = settings();
  try {
    const Json* weights = patch.contains("score_weights") ? &patch.at("score_weights") : &patch;
    if (weights->contains("w_p") || weights->contains("w_s")) {
      const double wp = weights->value("w_p", next.score_weights.w_p());
      const double ws = weights->value("w_s", next.score_weights.w_s());
      next.score_weights = ScoreWeights(wp, ws);
    }
    if (patch.contains("source_weights")) {
      SourceWeights raw;
      for (const auto& [id, w] : patch.at("source_weights").items()) raw[id] = w.get<double>();
      next.source_weights = normalize_weights(raw);
    }
    if (patch.contains("show_urls")) next.show_urls = patch.at("show_urls").get<bool>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidRequest, std::string("malformed settings: ") + e.what());
  }
  {
    std::lock_guard lock(mutex_);
    settings_ = next;
  }
  persist_settings();
  return next;
}

void ReportService::persist_settings() const {
  const std::string body = canonical_dump(settings().to_json());
  std::error_code ec;
  fs::create_directories(config_.data_dir, ec);
  const fs::path path = config_.data_dir / "settings.json";
  const fs::path tmp = config_.data_dir / "settings.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out || !(out << body)) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot replace " + path.string() + ": " + ec.message());
}

RequestFields ReportService::request_defaults() const {
  RequestFields f = config_.request_defaults(day_of(clock_()));
  const Settings s = settings();
  f.score_weights = s.score_weights;
  if (!s.source_weights.empty()) f.source_weights = s.source_weights;
  f.show_urls = s.show_urls;
  return f;
}

AnalysisRequest ReportService::interpret_chat(const std::string& message) {
  const RequestFields defaults = request_defaults();
  try {
    RequestFields f = parse_query(message, config_.registry, day_of(clock_()), defaults.score_weights,
                                  defaults.show_urls)
                          .fields();
    f.source_weights = defaults.source_weights;
    return AnalysisRequest::create(std::move(f));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoKeyword || !config_.chat_llm_fallback) throw;
  }
  CompletionRequest req;
  req.system_prompt = render_role_prompt(RolePrompt::standard());
  req.user_prompt = request_extraction_prompt(message);
  req.max_output_tokens = 256;
  req.provider_id = config_.default_provider;
  try {
    const CompletionResponse res = gateway_->complete(req);
    const std::string object = first_json_object(res.text);
    if (object.empty()) throw Error(ErrorCode::NoKeyword, "model reply holds no JSON object");
    Json j = Json::parse(object);
    j.erase("url");
    if (j.value("kind", std::string{}) == "url") j.erase("kind");
    return AnalysisRequest::from_json(j, defaults);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::NoKeyword, std::string("no keyword in message; model fallback failed: ") + e.what());
  }
}

void ReportService::start_daily(int hour, int minute) {
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59) throw Error(ErrorCode::BadArgument, "daily time must be HH:MM");
  daily_ = std::thread([this, hour, minute] {
    while (true) {
      const Timestamp now = clock_();
      Timestamp next = start_of(day_of(now)) + std::chrono::hours{hour} + std::chrono::minutes{minute};
      if (next <= now) next += std::chrono::days{1};
      {
        std::unique_lock lock(mutex_);
        if (changed_.wait_for(lock, next - now, [&] { return stopping_; })) return;
      }
      for (const auto& keyword : config_.daily_keywords) {
        try {
          RequestFields f = request_defaults();
          f.keyword = keyword;
          f.kind = ReportKind::Present;
          const auto sub = submit(AnalysisRequest::create(std::move(f)));
          std::cerr << "daily report for '" << keyword << "': " << sub.report_id << "\n";
        } catch (const std::exception& e) {
          std::cerr << "daily report for '" << keyword << "' failed: " << e.what() << "\n";
        }
      }
    }
  });
}

int ReportService::start(const std::string& host, int port) {
  auto& server = impl_->server;
  auto handle = [this](const auto& fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, http_status_for(e.code()), to_string(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "Internal", e.what());
      }
    };
  };

  server.Get("/api/v1/health", handle([](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"status", "ok"}});
             }));

  server.Post("/api/v1/reports", handle([this](const httplib::Request& req, httplib::Response& res) {
                const AnalysisRequest request = AnalysisRequest::from_json(parse_body(req.body), request_defaults());
                const Submission sub = submit(request);
                const std::string status_url = "/api/v1/reports/" + sub.report_id + "/status";
                if (!sub.accepted) {
                  send_error(res, 409, "Conflict", "an identical job is already running",
                             {{"report_id", sub.report_id}, {"status_url", status_url}});
                  return;
                }
                send_json(res, 202, {{"report_id", sub.report_id}, {"status_url", status_url}});
              }));

  server.Get(R"(/api/v1/reports/([0-9a-z]+))", handle([this](const httplib::Request& req, httplib::Response& res) {
               if (auto body = report_json(req.matches[1])) {
                 res.status = 200;
                 res.set_content(*body, "application/json");
               } else {
                 send_error(res, 404, "NotFound", "no persisted report " + std::string(req.matches[1]));
               }
             }));

  server.Get(R"(/api/v1/reports/([0-9a-z]+)/status)",
             handle([this](const httplib::Request& req, httplib::Response& res) {
               if (auto s = status(req.matches[1])) {
                 send_json(res, 200, s->to_json());
               } else {
                 send_error(res, 404, "NotFound", "unknown report " + std::string(req.matches[1]));
               }
             }));

  server.Get(R"(/api/v1/reports/([0-9a-z]+)/events)",
             handle([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               if (!status(id)) {
                 send_error(res, 404, "NotFound", "unknown report " + id);
                 return;
               }
               auto sent = std::make_shared<size_t>(0);
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream", [this, id, sent](size_t, httplib::DataSink& sink) {
                     std::vector<JobEvent> pending;
                     bool terminal = false;
                     {
                       std::unique_lock lock(mutex_);
                       changed_.wait_for(lock, std::chrono::milliseconds{500}, [&] {
                         auto s = status_unlocked(id);
                         return stopping_ || !s || s->events.size() != *sent;
                       });
                       auto s = status_unlocked(id);
                       if (stopping_ || !s) {
                         sink.done();
                         return true;
                       }
                       if (s->events.size() < *sent) *sent = 0;
                       pending.assign(s->events.begin() + static_cast<std::ptrdiff_t>(*sent), s->events.end());
                       *sent = s->events.size();
                       terminal = s->terminal();
                     }
                     for (const auto& e : pending) {
                       Json data = e.to_json();
                       data["report_id"] = id;
                       const std::string frame = "event: status\ndata: " + canonical_dump(data) + "\n\n";
                       if (!sink.write(frame.data(), frame.size())) return false;
                     }
                     if (terminal) sink.done();
                     return true;
                   });
             }));

  server.Get("/api/v1/records", handle([this](const httplib::Request& req, httplib::Response& res) {
               const std::string keyword = req.get_param_value("keyword");
               if (keyword.empty()) throw Error(ErrorCode::NoKeyword, "keyword query parameter is required");
               const DateRange fallback = default_window(day_of(clock_()));
               auto date_param = [&](const char* name, Date dflt) {
                 if (!req.has_param(name)) return dflt;
                 auto d = Date::parse(req.get_param_value(name));
                 if (!d) throw Error(ErrorCode::BadDate, std::string(name) + " must be YYYY-MM-DD");
                 return *d;
               };
               const Date from = date_param("from", fallback.start);
               const Date to = date_param("to", fallback.end);
               const FillMode fill =
                   req.has_param("fill") ? fill_mode_from_string(req.get_param_value("fill")) : FillMode::None;
               Json out = Json::array();
               for (const auto& r : store_.get_range(keyword, from, to, fill)) out.push_back(r.to_json());
               send_json(res, 200, out);
             }));

  server.Get("/api/v1/settings", handle([this](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, settings().to_json());
             }));

  server.Put("/api/v1/settings", handle([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, update_settings(parse_body(req.body)).to_json());
             }));

  server.Post("/api/v1/chat", handle([this](const httplib::Request& req, httplib::Response& res) {
                const Json body = parse_body(req.body);
                if (!body.is_object() || !body.contains("message") || !body["message"].is_string()) {
                  throw Error(ErrorCode::InvalidRequest, "chat body needs a string 'message'");
                }
                std::optional<AnalysisRequest> parsed;
                try {
                  parsed = interpret_chat(body["message"].get<std::string>());
                } catch (const Error& e) {
                  if (e.code() != ErrorCode::NoKeyword) throw;
                  send_error(res, 422, to_string(e.code()), e.what());
                  return;
                }
                const AnalysisRequest& request = *parsed;
                const Submission sub = submit(request);
                Json out = {{"request", request.to_json()},
                            {"report_id", sub.report_id},
                            {"status_url", "/api/v1/reports/" + sub.report_id + "/status"}};
                if (!sub.accepted) {
                  send_error(res, 409, "Conflict", "an identical job is already running", out);
                  return;
                }
                send_json(res, 202, out);
              }));

  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::BadConfig, "cannot listen on " + host + ":" + std::to_string(port));
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ReportService::run(const std::string& host, int port) {
  const int bound = start(host, port);
  std::cerr << "listening on http://" << host << ":" << bound << "\n";
  if (impl_->listener.joinable()) impl_->listener.join();
}

}  // namespace oracleloom
