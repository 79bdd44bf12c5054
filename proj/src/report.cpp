#include "oracleloom/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "oracleloom/error.hpp"

namespace oracleloom {

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", canonical_round(v));
  return buf;
}

void progress(const PipelineDeps& deps, PipelineStage stage, int step = 0) {
  if (deps.on_progress) deps.on_progress(stage, step);
}

ScoredDocument score_raw(const RawDocument& raw, const Lexicon& lexicon, const ScoreWeights& weights) {
  ScoredDocument d;
  d.url = raw.url;
  d.source_id = raw.source_id;
  std::tie(d.published_at, d.timestamp_confidence) = assign_timestamp(raw);
  d.text = raw.title.empty() ? raw.body : (raw.body.empty() ? raw.title : raw.title + "\n" + raw.body);
  d.sentiment = score_text(d.text, lexicon, weights);
  return d;
}

void require_deps(const PipelineDeps& deps) {
  if (deps.lexicon == nullptr || deps.stopwords == nullptr || deps.gateway == nullptr) {
    throw Error(ErrorCode::BadArgument, "pipeline needs a lexicon, stopwords and a gateway");
  }
}

struct StepRun {
  SectionEnvelope sections;
  std::vector<StepTrace> trace;
};

StepRun run_steps(const std::vector<RenderedStep>& steps, const PipelineDeps& deps) {
  StepRun run;
  for (const auto& r : steps) {
    const int index = r.step.index;
    progress(deps, PipelineStage::Synthesizing, index);
    try {
      CompletionRequest req;
      req.system_prompt = r.system_prompt;
      req.user_prompt = r.user_prompt(run.sections);
      req.max_output_tokens = deps.max_output_tokens;
      req.provider_id = deps.provider_id;
      CompletionResponse res = deps.gateway->complete(req);
      StepTrace t{index, res.provider_id, res.tokens_in, res.tokens_out, res.latency_ms, res.attempt};
      SectionEnvelope fragment;
      try {
        fragment = parse_sections(res.text, r.step.expected_sections);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MissingSection) throw;
        req.user_prompt += "\n" + corrective_instruction(missing_sections(res.text, r.step.expected_sections));
        res = deps.gateway->complete(req);
        t.tokens_in += res.tokens_in;
        t.tokens_out += res.tokens_out;
        t.latency_ms += res.latency_ms;
        t.attempts += res.attempt;
        fragment = parse_sections(res.text, r.step.expected_sections);
      }
      if (auto it = fragment.find("chart_data"); it != fragment.end()) {
        try {
          ChartData::from_json(Json::parse(it->second));
        } catch (const Json::exception& e) {
          throw Error(ErrorCode::MalformedMarkers, std::string("chart_data is not JSON: ") + e.what());
        }
      }
      for (auto& [id, text] : fragment) run.sections[id] = std::move(text);
      run.trace.push_back(std::move(t));
    } catch (const StepError&) {
      throw;
    } catch (const Error& e) {
      throw StepError(e.code(), index, e.what());
    }
  }
  return run;
}

std::vector<Citation> cite(const DocExcerpt& excerpt, std::span<const std::string_view> sections) {
  std::vector<Citation> out;
  for (auto id : sections) {
    if (id == "chart_data") continue;
    for (const auto* d : excerpt.docs) {
      out.push_back({std::string(id), d->url, d->source_id, d->timestamp_confidence});
    }
  }
  return out;
}

int count_words(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string first_words(std::string_view text, int keep) {
  std::istringstream in{std::string(text)};
  std::string word, out;
  for (int i = 0; i < keep && in >> word; ++i) out += (i ? " " : "") + word;
  return out;
}

std::string title_case(std::string_view id) {
  std::string out(id);
  bool start = true;
  for (auto& c : out) {
    if (c == '_') {
      c = ' ';
      start = true;
    } else if (start) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      start = false;
    }
  }
  return out;
}

std::string compose_markdown(const Report& report, const SectionEnvelope& sections) {
  const auto& req = report.request;
  const bool url_kind = req.kind() == ReportKind::Url;
  std::string md = "# Sentiment report: " + req.keyword() + "\n\n";
  md += "- Report: `" + report.id + "`\n";
  md += "- Kind: " + std::string(to_string(req.kind())) + "\n";
  if (url_kind) {
    md += "- Page: " + (req.show_urls() ? *req.url() : std::string("(hidden)")) + "\n";
  } else {
    md += "- Window: " + req.window().start.to_string() + " to " + req.window().end.to_string() + "\n";
  }
  md += "- Documents analysed: " + std::to_string(report.document_count) + "\n";
  md += "- Generated: " + format_rfc3339(report.created_at) + "\n";

  const auto order = url_kind ? std::span<const std::string_view>(kUrlSectionIds)
                              : std::span<const std::string_view>(kSectionIds);
  for (auto id : order) {
    if (id == "chart_data") continue;
    md += "\n## " + title_case(id) + "\n\n" + sections.at(std::string(id)) + "\n";
    if (id == "risk_assessment" && report.risk_level) md += "\nForecast risk level: **" + *report.risk_level + "**\n";
  }

  if (report.assessment) {
    const auto& a = *report.assessment;
    md += "\n## Document Assessment\n\n";
    md += "| Measure | Value |\n|---|---|\n";
    md += "| Polarity | " + fixed6(a.sentiment.polarity) + " |\n";
    md += "| Subjectivity | " + fixed6(a.sentiment.subjectivity) + " |\n";
    md += "| Combined score | " + fixed6(a.sentiment.score) + " |\n";
    md += "| Class | " + std::string(to_string(a.sentiment_class)) + " |\n";
    md += "| Timestamp | " + format_rfc3339(a.timestamp) + " (" + std::string(to_string(a.timestamp_confidence)) +
          ") |\n";
  }

  if (report.forecast) {
    const auto& f = *report.forecast;
    md += "\n## Forecast\n\nModel: " + std::string(to_string(f.model_id)) + ", horizon " + std::to_string(f.horizon) +
          " days.\n\n| Day | Predicted score |\n|---|---|\n";
    const Date last = report.charts.trend.empty() ? req.window().end : report.charts.trend.back().first;
    for (size_t i = 0; i < f.predictions.size(); ++i) {
      md += "| " + (last + static_cast<int>(i + 1)).to_string() + " | " + fixed6(f.predictions[i]) + " |\n";
    }
  }

  md += "\n## Charts\n\n![Sentiment distribution](pie.svg)\n\n![Daily combined score](trend.svg)\n\n"
        "![Associated terms](bars.svg)\n";

  if (!report.citations.empty()) {
    std::vector<std::string> urls;
    std::map<std::string, std::vector<std::string>> where;
    std::map<std::string, const Citation*> first;
    for (const auto& c : report.citations) {
      if (!first.contains(c.url)) {
        urls.push_back(c.url);
        first[c.url] = &c;
      }
      where[c.url].push_back(title_case(c.claim_section));
    }
    md += "\n## Sources\n\n";
    for (size_t i = 0; i < urls.size(); ++i) {
      const Citation& c = *first[urls[i]];
      std::string used;
      for (size_t k = 0; k < where[urls[i]].size(); ++k) used += (k ? ", " : "") + where[urls[i]][k];
      md += std::to_string(i + 1) + ". ";
      if (req.show_urls()) md += "<" + c.url + "> ";
      md += "(" + c.source_id + ", ";
      md += c.timestamp_confidence == TimestampConfidence::Fetched ? "publication time unknown, fetch time used"
                                                                   : "published";
      md += "). Cited in: " + used + ".\n";
    }
  }
  return md;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace

Json Report::to_json() const {
  Json cites = Json::array();
  for (const auto& c : citations) {
    cites.push_back({{"claim_section", c.claim_section},
                     {"url", c.url},
                     {"source_id", c.source_id},
                     {"timestamp_confidence", std::string(to_string(c.timestamp_confidence))}});
  }
  Json trace = Json::array();
  for (const auto& t : pipeline_trace) {
    trace.push_back({{"step", t.step},
                     {"provider_id", t.provider_id},
                     {"tokens_in", t.tokens_in},
                     {"tokens_out", t.tokens_out},
                     {"latency_ms", t.latency_ms},
                     {"attempts", t.attempts}});
  }
  Json j = {{"id", id},
            {"schema_version", 1},
            {"request", request.to_json()},
            {"sections", sections},
            {"citations", cites},
            {"charts", charts.to_json()},
            {"document_count", document_count},
            {"created_at", format_rfc3339(created_at)},
            {"pipeline_trace", trace}};
  if (forecast) j["forecast"] = forecast->to_json();
  if (risk_level) j["risk_level"] = *risk_level;
  if (assessment) {
    const auto& a = *assessment;
    j["assessment"] = {{"url", a.url},
                       {"title", a.title},
                       {"polarity", a.sentiment.polarity},
                       {"subjectivity", a.sentiment.subjectivity},
                       {"score", a.sentiment.score},
                       {"class", std::string(to_string(a.sentiment_class))},
                       {"timestamp", format_rfc3339(a.timestamp)},
                       {"timestamp_confidence", std::string(to_string(a.timestamp_confidence))}};
  }
  return j;
}

std::string report_id(const AnalysisRequest& request, std::string_view corpus_snapshot) {
  return sha256_hex(canonical_dump(request.to_json()) + "\n" + std::string(corpus_snapshot), 16);
}

std::string risk_level(const ForecastResult& forecast, double last_observed) {
  if (forecast.predictions.empty() || forecast.horizon <= 0) return "Stable";
  const double slope = (forecast.predictions.back() - last_observed) / forecast.horizon;
  return slope < kRiskSlope ? "Rising risk" : "Stable";
}

IngestResult ingest(const AnalysisRequest& request, const PipelineDeps& deps) {
  if (deps.lexicon == nullptr || deps.stopwords == nullptr || deps.store == nullptr) {
    throw Error(ErrorCode::BadArgument, "ingest needs a lexicon, stopwords and a record store");
  }
  FetchQuery query{request.keyword(), request.synonyms(), request.window()};
  const std::vector<RawDocument> raw = dedupe(fetch_all(deps.sources, query, deps.sleep, deps.clock));

  progress(deps, PipelineStage::Scoring);
  IngestResult out;
  out.docs.reserve(raw.size());
  for (const auto& r : raw) out.docs.push_back(score_raw(r, *deps.lexicon, request.score_weights()));

  AggregateOptions agg;
  agg.keyword = request.keyword();
  agg.synonyms = request.synonyms();
  agg.stopwords = deps.stopwords;
  agg.top_k = deps.top_k;
  agg.thresholds = deps.thresholds;
  agg.generated_at = deps.clock();
  std::map<Date, std::vector<ScoredDocument>> by_day;
  for (const auto& d : out.docs) by_day[day_of(d.published_at)].push_back(d);
  for (const auto& [day, day_docs] : by_day) {
    out.records.push_back(aggregate_daily(day_docs, day, request.source_weights(), agg));
    deps.store->put_record(out.records.back());
  }
  return out;
}

Report generate_report(const AnalysisRequest& request, const PipelineDeps& deps) {
  require_deps(deps);
  if (deps.store == nullptr) throw Error(ErrorCode::BadArgument, "pipeline needs a record store");
  if (request.kind() == ReportKind::Url) return generate_url_report(request, deps);
  const DateRange window = request.window();

  progress(deps, PipelineStage::Crawling);
  const bool archive_only =
      request.kind() == ReportKind::Past && deps.store->covers(request.keyword(), window.start, window.end);
  std::vector<ScoredDocument> docs;
  if (archive_only) {
    progress(deps, PipelineStage::Scoring);
  } else {
    docs = ingest(request, deps).docs;
  }
  const Timestamp now = deps.clock();

  const auto records = deps.store->get_range(request.keyword(), window.start, window.end, FillMode::CarryForward);
  if (docs.empty() && records.empty()) {
    throw Error(ErrorCode::NoData, "no documents or records for '" + request.keyword() + "' between " +
                                       window.start.to_string() + " and " + window.end.to_string());
  }

  Report report{.id = report_id(request, corpus_snapshot_id(deps.sources, deps.clock)), .request = request};
  report.created_at = now;
  report.document_count = static_cast<int>(docs.size());

  if (request.kind() == ReportKind::Future) {
    const Series series = to_series(records, SeriesField::CombinedScore);
    report.forecast = forecast_with(select_default_model(series.size()), series, deps.horizon);
    report.risk_level = risk_level(*report.forecast, series.values.back());
  }

  const DocExcerpt doc_excerpt = excerpt_documents(docs, deps.excerpt_docs, deps.excerpt_chars_per_doc);
  const std::string records_excerpt = excerpt_records(records, std::max<size_t>(deps.excerpt_record_chars, 200));
  const auto steps = render_thinking_steps(request, records_excerpt, doc_excerpt.text, deps.prompts);
  StepRun run = run_steps(steps, deps);

  report.charts = build_chart_data(records, docs, deps.top_k, *deps.stopwords,
                                   keyword_tokens(request.keyword(), request.synonyms()), deps.thresholds);
  run.sections["chart_data"] = canonical_dump(report.charts.to_json());
  report.sections = std::move(run.sections);
  report.pipeline_trace = std::move(run.trace);
  report.citations = cite(doc_excerpt, kSectionIds);
  return report;
}

Report generate_url_report(const AnalysisRequest& request, const PipelineDeps& deps) {
  require_deps(deps);
  if (request.kind() != ReportKind::Url || !request.url()) {
    throw Error(ErrorCode::InvalidRequest, "url reports need kind=url and a url");
  }
  const std::string& url = *request.url();

  progress(deps, PipelineStage::Crawling);
  std::optional<RawDocument> raw;
  for (const auto& config : deps.sources) {
    try {
      raw = fetch_url(url, config, deps.clock);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotFound) throw;
    }
  }
  if (!raw) throw Error(ErrorCode::NotFound, "no source can provide " + url);
  if (raw->body.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::NoData, "no extractable text at " + url);
  }

  progress(deps, PipelineStage::Scoring);
  const std::vector<ScoredDocument> docs = {score_raw(*raw, *deps.lexicon, request.score_weights())};
  const ScoredDocument& doc = docs.front();

  Report report{.id = report_id(request, corpus_snapshot_id(deps.sources, deps.clock)), .request = request};
  report.created_at = deps.clock();
  report.document_count = 1;
  report.assessment = DocumentAssessment{raw->url,         raw->title,
                                         doc.sentiment,    classify(doc.sentiment.score, deps.thresholds),
                                         doc.published_at, doc.timestamp_confidence};

  const DocExcerpt excerpt = excerpt_documents(docs, 1, deps.excerpt_chars_per_doc * 4);
  StepRun run = run_steps(render_url_steps(request, excerpt.text, deps.prompts), deps);

  report.charts = build_chart_data({}, docs, deps.top_k, *deps.stopwords,
                                   keyword_tokens(request.keyword(), request.synonyms()), deps.thresholds);
  report.charts.trend = {{day_of(doc.published_at), doc.sentiment.score}};
  run.sections["chart_data"] = canonical_dump(report.charts.to_json());
  report.sections = std::move(run.sections);
  report.pipeline_trace = std::move(run.trace);
  report.citations = cite(excerpt, kUrlSectionIds);
  return report;
}

Report run_pipeline(const AnalysisRequest& request, const PipelineDeps& deps) {
  return request.kind() == ReportKind::Url ? generate_url_report(request, deps) : generate_report(request, deps);
}

std::string render_report_markdown(const Report& report) {
  const bool url_kind = report.request.kind() == ReportKind::Url;
  const auto required = url_kind ? std::span<const std::string_view>(kUrlSectionIds)
                                 : std::span<const std::string_view>(kSectionIds);
  std::vector<std::string> missing;
  for (auto id : required) {
    if (!report.sections.contains(std::string(id))) missing.emplace_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::IncompleteReport, "report " + report.id + " lacks sections: " + list);
  }

  static constexpr std::array<std::string_view, 7> kTruncationOrder = {
      "associated_words", "policy_suggestions", "risk_assessment", "cause_analysis",
      "summary",          "introduction",       "conclusion"};
  SectionEnvelope sections = report.sections;
  std::string md = compose_markdown(report, sections);
  for (auto id : kTruncationOrder) {
    const int excess = count_words(md) - kMaxReportWords;
    if (excess <= 0) break;
    auto it = sections.find(std::string(id));
    if (it == sections.end()) continue;
    const int have = count_words(it->second);
    const int keep = std::max(0, have - excess - 1);
    it->second = first_words(it->second, keep) + (keep > 0 ? " " : "") + "[truncated]";
    md = compose_markdown(report, sections);
  }
  return md;
}

std::filesystem::path report_dir(const std::filesystem::path& data_dir, const std::string& id) {
  return data_dir / "reports" / id;
}

std::filesystem::path write_report_artifacts(const Report& report, const std::filesystem::path& data_dir) {
  const auto dir = report_dir(data_dir, report.id);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
  const ChartSvgs svgs = render_charts_svg(report.charts);
  write_atomic(dir / "report.md", render_report_markdown(report));
  write_atomic(dir / "pie.svg", svgs.pie);
  write_atomic(dir / "trend.svg", svgs.trend);
  write_atomic(dir / "bars.svg", svgs.bars);
  write_atomic(dir / "report.json", report.canonical());
  return dir;
}

}  // namespace oracleloom
