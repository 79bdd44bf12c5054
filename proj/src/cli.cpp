#include "oracleloom/cli.hpp"

#include <CLI11.hpp>

#include <array>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "oracleloom/config.hpp"
#include "oracleloom/forecasting.hpp"
#include "oracleloom/llm_gateway.hpp"
#include "oracleloom/record_store.hpp"
#include "oracleloom/report.hpp"
#include "oracleloom/sentiment.hpp"
#include "oracleloom/service.hpp"

namespace oracleloom::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string data_dir;
  std::string fixtures;
  std::string now;
  std::string lexicon;
  std::string stopwords;
  bool json = false;
};

struct Context {
  ServiceConfig config;
  Clock clock;
  bool json = false;
};

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", canonical_round(v));
  return buf;
}

std::string signed6(double v) {
  const std::string s = fixed6(v);
  return s.front() == '-' ? s : "+" + s;
}

Date parse_date_arg(const std::string& text, const char* name) {
  auto d = Date::parse(text);
  if (!d) throw Error(ErrorCode::BadDate, std::string(name) + " must be YYYY-MM-DD, got '" + text + "'");
  return *d;
}

Context make_context(const Globals& g) {
  Context ctx;
  ctx.config = ServiceConfig::resolve(g.config_path.empty() ? std::nullopt : std::optional<fs::path>(g.config_path));
  if (!g.data_dir.empty()) ctx.config.data_dir = g.data_dir;
  if (!g.fixtures.empty()) ctx.config.use_fixture_dir(g.fixtures);
  if (!g.lexicon.empty()) ctx.config.lexicon_path = g.lexicon;
  if (!g.stopwords.empty()) ctx.config.stopwords_path = g.stopwords;
  ctx.config.validate();
  if (g.now.empty()) {
    ctx.clock = system_clock();
  } else if (auto ts = parse_rfc3339(g.now)) {
    ctx.clock = fixed_clock(*ts);
  } else if (auto d = Date::parse(g.now)) {
    ctx.clock = fixed_clock(start_of(*d));
  } else {
    throw Error(ErrorCode::BadDate, "--now must be RFC 3339 or YYYY-MM-DD");
  }
  ctx.json = g.json;
  return ctx;
}

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadArgument, std::string("cannot read ") + what + " " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct WindowArgs {
  std::string keyword;
  std::vector<std::string> synonyms;
  std::string from;
  std::string to;
};

void add_window_options(CLI::App* cmd, WindowArgs& w) {
  cmd->add_option("--keyword,-k", w.keyword, "Keyword to analyse")->required();
  cmd->add_option("--synonym", w.synonyms, "Additional match term (repeatable)");
  cmd->add_option("--from", w.from, "First day, YYYY-MM-DD");
  cmd->add_option("--to", w.to, "Last day, YYYY-MM-DD");
}

RequestFields request_fields(const Context& ctx, const WindowArgs& w) {
  RequestFields f = ctx.config.request_defaults(day_of(ctx.clock()));
  f.keyword = w.keyword;
  f.synonyms = w.synonyms;
  if (!w.from.empty() && !w.to.empty()) {
    f.window = {parse_date_arg(w.from, "--from"), parse_date_arg(w.to, "--to")};
  } else if (!w.from.empty()) {
    f.window.start = parse_date_arg(w.from, "--from");
  } else if (!w.to.empty()) {
    const Date end = parse_date_arg(w.to, "--to");
    f.window = {end - (kDefaultWindowDays - 1), end};
  }
  return f;
}

struct Pipeline {
  Lexicon lexicon;
  StopwordSet stopwords;
  RecordStore store;
  LlmGateway gateway;
  PipelineDeps deps;

  explicit Pipeline(const Context& ctx)
      : lexicon(Lexicon::load(ctx.config.lexicon_path)),
        stopwords(load_stopwords(ctx.config.stopwords_path)),
        store(ctx.config.data_dir),
        gateway(ctx.config.providers, ctx.config.token_budget, real_sleeper()) {
    deps.sources = ctx.config.adapters;
    deps.lexicon = &lexicon;
    deps.stopwords = &stopwords;
    deps.store = &store;
    deps.gateway = &gateway;
    deps.provider_id = ctx.config.default_provider;
    deps.clock = ctx.clock;
  }
};

int cmd_ingest(const Context& ctx, const WindowArgs& w, std::ostream& out) {
  const AnalysisRequest request = AnalysisRequest::create(request_fields(ctx, w));
  Pipeline p(ctx);
  const IngestResult result = ingest(request, p.deps);
  if (ctx.json) {
    Json records = Json::array();
    for (const auto& r : result.records) records.push_back(r.to_json());
    out << canonical_dump({{"keyword", request.keyword()},
                           {"from", request.window().start.to_string()},
                           {"to", request.window().end.to_string()},
                           {"documents", result.docs.size()},
                           {"records", records}})
        << "\n";
    return kExitOk;
  }
  for (const auto& r : result.records) {
    ClassCounts c;
    for (const auto& [id, s] : r.per_source) {
      c.positive += s.class_counts.positive;
      c.neutral += s.class_counts.neutral;
      c.negative += s.class_counts.negative;
    }
    out << r.day.to_string() << "  docs=" << std::setw(3) << r.doc_count() << "  score=" << signed6(r.combined.score)
        << "  pos/neu/neg=" << c.positive << "/" << c.neutral << "/" << c.negative << "\n";
  }
  out << result.records.size() << " records\n";
  return kExitOk;
}

struct ReportArgs {
  WindowArgs window;
  std::string kind = "present";
  std::string provider;
  std::string url;
};

int cmd_report(const Context& ctx, const ReportArgs& a, std::ostream& out) {
  RequestFields f = request_fields(ctx, a.window);
  f.kind = report_kind_from_string(a.kind);
  if (!a.url.empty()) f.url = a.url;
  const AnalysisRequest request = AnalysisRequest::create(std::move(f));
  Pipeline p(ctx);
  if (!a.provider.empty()) {
    if (p.gateway.find(a.provider) == nullptr) throw Error(ErrorCode::ProviderUnknown, "unknown provider " + a.provider);
    p.deps.provider_id = a.provider;
  }
  const Report report = run_pipeline(request, p.deps);
  const fs::path dir = write_report_artifacts(report, ctx.config.data_dir);
  if (ctx.json) {
    out << canonical_dump({{"report_id", report.id},
                           {"dir", dir.string()},
                           {"markdown", (dir / "report.md").string()},
                           {"report", (dir / "report.json").string()}})
        << "\n";
  } else {
    out << (dir / "report.md").string() << "\n";
  }
  return kExitOk;
}

struct ForecastArgs {
  std::string keyword;
  std::string from;
  std::string to;
  std::string model = "auto";
  int horizon = kDefaultHorizon;
  int holdout = 0;
  std::string series_file;
};

Series load_series_file(const std::string& path) {
  const std::string text = read_text(path, "series file");
  Series s{.start = Date(2000, 1, 1), .name = fs::path(path).stem().string()};
  try {
    const Json j = Json::parse(text);
    const Json& values = j.is_object() ? j.at("values") : j;
    if (j.is_object() && j.contains("start")) s.start = parse_date_arg(j.at("start").get<std::string>(), "start");
    s.values = values.get<std::vector<double>>();
  } catch (const Json::exception&) {
    std::istringstream in(text);
    double v;
    while (in >> v) s.values.push_back(v);
    if (!in.eof()) throw Error(ErrorCode::BadArgument, path + " is neither JSON nor whitespace-separated numbers");
  }
  return s;
}

ModelChoice model_choice(const std::string& model, size_t n) {
  if (model == "auto") return select_default_model(n);
  ModelChoice c;
  c.id = model_id_from_string(model);
  return c;
}

int cmd_forecast(const Context& ctx, const ForecastArgs& a, std::ostream& out) {
  Series series;
  if (!a.series_file.empty()) {
    series = load_series_file(a.series_file);
  } else {
    if (a.keyword.empty()) throw Error(ErrorCode::NoKeyword, "forecast needs --keyword or --series-file");
    WindowArgs w{a.keyword, {}, a.from, a.to};
    const RequestFields f = request_fields(ctx, w);
    RecordStore store(ctx.config.data_dir);
    const auto records = store.get_range(a.keyword, f.window.start, f.window.end, FillMode::CarryForward);
    if (records.empty()) {
      throw Error(ErrorCode::NoData, "no archived records for '" + a.keyword + "'; run ingest first");
    }
    series = to_series(records, SeriesField::CombinedScore);
  }
  if (series.values.empty()) throw Error(ErrorCode::NoData, "series is empty");

  const ForecastResult result = forecast_with(model_choice(a.model, series.size()), series, a.horizon);
  std::vector<ForecastResult> ranking;
  if (a.holdout > 0) ranking = compare_models(series, a.holdout);

  if (ctx.json) {
    Json j = {{"series", {{"name", series.name}, {"start", series.start.to_string()}, {"length", series.size()}}},
              {"forecast", result.to_json()}};
    if (a.holdout > 0) {
      Json cmp = Json::array();
      for (const auto& r : ranking) cmp.push_back(r.to_json());
      j["comparison"] = cmp;
      j["holdout"] = a.holdout;
    }
    out << canonical_dump(j) << "\n";
    return kExitOk;
  }
  const Date next = series.start + static_cast<int>(series.size());
  out << "model " << to_string(result.model_id) << ", horizon " << result.horizon << ", " << series.size()
      << " observations\n";
  for (int h = 0; h < result.horizon; ++h) {
    out << (next + h).to_string() << "  " << signed6(result.predictions[static_cast<size_t>(h)]) << "\n";
  }
  if (a.holdout > 0) {
    out << "\nholdout " << a.holdout << "\n";
    out << "rank  model  mse\n";
    for (size_t i = 0; i < ranking.size(); ++i) {
      out << std::left << std::setw(6) << (i + 1) << std::setw(7) << to_string(ranking[i].model_id)
          << fixed6(ranking[i].mse.value_or(0.0)) << "\n";
    }
  }
  return kExitOk;
}

struct BenchArgs {
  std::string provider;
  int trials = 5;
  std::string prompt_file;
};

int cmd_bench(const Context& ctx, const BenchArgs& a, std::ostream& out) {
  const std::string prompt = read_text(a.prompt_file, "prompt file");
  LlmGateway gateway(ctx.config.providers, ctx.config.token_budget, real_sleeper());
  const std::string provider = a.provider.empty() ? ctx.config.default_provider : a.provider;
  const BenchStats stats = gateway.bench(provider, prompt, a.trials);
  if (ctx.json) {
    out << canonical_dump(stats.to_json()) << "\n";
    return kExitOk;
  }
  out << "provider        " << stats.provider_id << "\n"
      << "trials          " << stats.trials << "\n"
      << "cold_start_ms   " << fixed6(stats.cold_start_ms) << "\n"
      << "warm_mean_ms    " << fixed6(stats.warm_mean_ms) << "\n"
      << "warm_stddev_ms  " << fixed6(stats.warm_stddev_ms) << "\n\n"
      << "trial  latency_ms  tokens\n";
  for (size_t i = 0; i < stats.latencies_ms.size(); ++i) {
    out << std::left << std::setw(7) << (i + 1) << std::setw(12) << stats.latencies_ms[i]
        << (i < stats.token_counts.size() ? stats.token_counts[i] : 0) << "\n";
  }
  out << canonical_dump(stats.to_json()) << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string dataset;
  std::string weights;
};

ScoreWeights parse_weights(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::BadArgument, "--weights must be wp,ws");
  try {
    return ScoreWeights(std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1)));
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::BadArgument, "--weights must be two numbers, got '" + text + "'");
  }
}

int cmd_eval(const Context& ctx, const EvalArgs& a, std::ostream& out) {
  // Labels are binary polarity judgments; subjectivity carries no sign.
  const ScoreWeights weights = a.weights.empty() ? ScoreWeights(1.0, 0.0) : parse_weights(a.weights);
  std::istringstream in(read_text(a.dataset, "dataset"));
  const Lexicon lexicon = Lexicon::load(ctx.config.lexicon_path);

  // tp/fp/fn per binary label; neutral predictions are plain misses.
  std::map<std::string, std::array<int, 3>> counts = {{"positive", {0, 0, 0}}, {"negative", {0, 0, 0}}};
  int total = 0, correct = 0, neutral = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string text, label;
    try {
      const Json j = Json::parse(line);
      text = j.at("text").get<std::string>();
      label = j.at("label").get<std::string>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::BadArgument, a.dataset + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (label != "positive" && label != "negative") {
      throw Error(ErrorCode::BadArgument,
                  a.dataset + ":" + std::to_string(line_no) + ": label must be positive or negative");
    }
    const std::string predicted(to_string(classify(score_text(text, lexicon, weights).score)));
    ++total;
    if (predicted == label) {
      ++correct;
      ++counts[label][0];
    } else {
      ++counts[label][2];
      if (counts.contains(predicted)) ++counts[predicted][1];
      else ++neutral;
    }
  }
  if (total == 0) throw Error(ErrorCode::BadArgument, "dataset " + a.dataset + " has no labelled lines");

  auto ratio = [](int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; };
  Json classes = Json::object();
  for (const auto& [label, c] : counts) {
    classes[label] = {{"precision", ratio(c[0], c[0] + c[1])}, {"recall", ratio(c[0], c[0] + c[2])}};
  }
  const double accuracy = ratio(correct, total);
  if (ctx.json) {
    out << canonical_dump({{"total", total},
                           {"correct", correct},
                           {"neutral_predictions", neutral},
                           {"accuracy", accuracy},
                           {"weights", weights.to_json()},
                           {"classes", classes}})
        << "\n";
    return kExitOk;
  }
  out << "examples   " << total << "\n"
      << "correct    " << correct << "\n"
      << "neutral    " << neutral << "\n"
      << "accuracy   " << fixed6(accuracy) << "\n\n"
      << "label     precision  recall\n";
  for (const auto& [label, m] : classes.items()) {
    out << std::left << std::setw(10) << label << std::setw(11) << fixed6(m["precision"].get<double>())
        << fixed6(m["recall"].get<double>()) << "\n";
  }
  return kExitOk;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct ServeArgs {
  std::string listen;
  std::string daily;
};

int cmd_serve(const Context& ctx, const ServeArgs& a, std::ostream& out) {
  ServiceConfig config = ctx.config;
  std::string host = config.listen_host;
  int port = config.listen_port;
  if (!a.listen.empty()) {
    const auto colon = a.listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::BadArgument, "--listen must be host:port");
    host = a.listen.substr(0, colon);
    try {
      port = std::stoi(a.listen.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadArgument, "--listen port is not a number");
    }
  }
  ReportService service(std::move(config), ctx.clock);
  if (!a.daily.empty()) {
    int hh = -1, mm = -1;
    if (std::sscanf(a.daily.c_str(), "%d:%d", &hh, &mm) != 2) {
      throw Error(ErrorCode::BadArgument, "--daily must be HH:MM");
    }
    service.start_daily(hh, mm);
  }
  const int bound = service.start(host, port);
  out << "listening on http://" << host << ":" << bound << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds{200});
  service.stop();
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoKeyword:
    case ErrorCode::BadDate:
    case ErrorCode::AllZero:
    case ErrorCode::InvalidRequest:
    case ErrorCode::BadArgument:
    case ErrorCode::BadThresholds:
    case ErrorCode::LengthMismatch:
      return kExitUsage;
    case ErrorCode::NoData:
    case ErrorCode::TooShort:
    case ErrorCode::NonContiguous:
      return kExitNoData;
    case ErrorCode::BadConfig:
    case ErrorCode::ProviderUnknown:
    case ErrorCode::LiveDisabled:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::FixtureMissing:
    case ErrorCode::BadFixture:
    case ErrorCode::BadLexicon:
    case ErrorCode::EmptyLexicon:
    case ErrorCode::MissingSection:
    case ErrorCode::MalformedMarkers:
      return kExitProvider;
    case ErrorCode::UpstreamError:
    case ErrorCode::Timeout:
    case ErrorCode::NotFound:
      return kExitUpstream;
    default:
      return kExitInternal;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keyword sentiment archive, forecasts, and LLM-written reports"};
  app.name("oracleloom");
  app.require_subcommand(1);
  // Subcommands inherit this, so global options may follow the subcommand.
  app.fallthrough();

  Globals g;
  app.add_option("--config,-c", g.config_path, "Config file (else $ORACLELOOM_CONFIG, else defaults)");
  app.add_option("--data-dir", g.data_dir, "Archive and report root");
  app.add_option("--fixtures", g.fixtures, "Replay every source from <dir>/<source_id>.jsonl");
  app.add_option("--now", g.now, "Pin the clock (RFC 3339 or YYYY-MM-DD)");
  app.add_option("--lexicon", g.lexicon, "Sentiment lexicon TSV");
  app.add_option("--stopwords", g.stopwords, "Stopword list");
  app.add_flag("--json", g.json, "Canonical JSON on stdout");

  WindowArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Crawl or replay, score, and archive daily records");
  add_window_options(ingest_cmd, ingest_args);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Run the report pipeline and write artifacts");
  add_window_options(report_cmd, report_args.window);
  report_cmd->add_option("--kind", report_args.kind, "present, past, future or url")
      ->check(CLI::IsMember({"present", "past", "future", "url"}));
  report_cmd->add_option("--provider", report_args.provider, "LLM provider id");
  report_cmd->add_option("--url", report_args.url, "Page to assess (kind url)");

  ForecastArgs forecast_args;
  auto* forecast_cmd = app.add_subcommand("forecast", "Forecast the archived combined score");
  forecast_cmd->add_option("--keyword,-k", forecast_args.keyword, "Archived keyword");
  forecast_cmd->add_option("--from", forecast_args.from, "First day, YYYY-MM-DD");
  forecast_cmd->add_option("--to", forecast_args.to, "Last day, YYYY-MM-DD");
  forecast_cmd->add_option("--model", forecast_args.model, "ma, ar, arima or auto")
      ->check(CLI::IsMember({"ma", "ar", "arima", "auto"}));
  forecast_cmd->add_option("--horizon", forecast_args.horizon, "Days ahead")->check(CLI::Range(1, 365));
  forecast_cmd->add_option("--holdout", forecast_args.holdout, "Compare models on the last N points")
      ->check(CLI::Range(1, 1000));
  forecast_cmd->add_option("--series-file", forecast_args.series_file, "JSON array or whitespace-separated values");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench-llm", "Cold and warm latency of a provider");
  bench_cmd->add_option("--provider", bench_args.provider, "Provider id");
  bench_cmd->add_option("--trials", bench_args.trials, "Number of calls (>= 2)")->check(CLI::Range(2, 10000));
  bench_cmd->add_option("--prompt-file", bench_args.prompt_file, "Prompt text")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval-sentiment", "Accuracy of the classifier on labelled lines");
  eval_cmd->add_option("--dataset", eval_args.dataset, "NDJSON {text, label}")->required();
  eval_cmd->add_option("--weights", eval_args.weights, "wp,ws (default 1,0: polarity only)");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--listen", serve_args.listen, "host:port");
  serve_cmd->add_option("--daily", serve_args.daily, "Daily report time, HH:MM UTC");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const Context ctx = make_context(g);
    if (*ingest_cmd) return cmd_ingest(ctx, ingest_args, out);
    if (*report_cmd) return cmd_report(ctx, report_args, out);
    if (*forecast_cmd) return cmd_forecast(ctx, forecast_args, out);
    if (*bench_cmd) return cmd_bench(ctx, bench_args, out);
    if (*eval_cmd) return cmd_eval(ctx, eval_args, out);
    if (*serve_cmd) return cmd_serve(ctx, serve_args, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace oracleloom::cli
