// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//   acceptance                 run everything
//   acceptance --update-golden rewrite tests/golden from the current build

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "oracleloom/error.hpp"
#include "oracleloom/forecasting.hpp"
#include "oracleloom/record_store.hpp"
#include "oracleloom/report.hpp"
#include "oracleloom/sentiment.hpp"
#include "oracleloom/service.hpp"
#include "test_support.hpp"

using namespace oracleloom;
namespace fs = std::filesystem;
using Clock_ = std::chrono::steady_clock;

namespace {

bool g_update_golden = false;

// A criterion body returns "" on success or a failure description.
struct Criterion {
  const char* name;
  double time_limit_s;  // 0: no limit
  std::function<std::string()> body;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Series make_series(std::vector<double> v) { return Series{Date(2024, 1, 1), std::move(v), "s"}; }

std::vector<std::string> cli_globals(const fs::path& data_dir) {
  return {"--data-dir",  data_dir.string(),
          "--fixtures",  testing::source_path("data/fixtures/food_delivery").string(),
          "--lexicon",   testing::source_path("data/lexicon/en_sentiment.tsv").string(),
          "--stopwords", testing::source_path("data/lexicon/stopwords_en.txt").string(),
          "--now",       testing::kGoldenNowText};
}

testing::CliResult cli(const fs::path& data_dir, std::vector<std::string> args) {
  auto full = cli_globals(data_dir);
  full.insert(full.end(), args.begin(), args.end());
  return testing::run_cli(full);
}

std::string combine_exactness() {
  const double v = combine_score(-0.5, 0.8, ScoreWeights(0.7, 0.3));
  if (std::abs(v - (-0.11)) > 1e-12) return "combine(-0.5, 0.8) = " + fmt("%.17g", v);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> p(-1, 1), s(0, 1), w(0.01, 10);
  for (int i = 0; i < 1000; ++i) {
    const double a = p(rng), b = s(rng);
    if (combine_score(a, b, ScoreWeights(1, 0)) != a) return "w=(1,0) is not polarity";
    if (combine_score(a, b, ScoreWeights(0, 1)) != b) return "w=(0,1) is not subjectivity";
    const double wp = w(rng), ws = w(rng);
    const double want = (wp / (wp + ws)) * a + (ws / (wp + ws)) * b;
    if (std::abs(combine_score(a, b, ScoreWeights(wp, ws)) - want) > 1e-12) return "weighted sum mismatch";
  }
  return "";
}

std::string scorer_oracle() {
  std::mt19937_64 rng(500);
  const auto entries = testing::random_lexicon(rng, 30);
  const Lexicon lex(entries);
  for (int i = 0; i < 500; ++i) {
    const std::string text = testing::random_text(rng, entries, 50);
    const auto got = score_document(text, lex);
    const auto want = testing::oracle_score(text, entries);
    if (got.polarity != want.polarity || got.subjectivity != want.subjectivity || got.matched_terms != want.spans) {
      return "mismatch on \"" + text + "\"";
    }
  }
  return "";
}

std::string ar_exactness() {
  std::vector<double> v;
  for (int t = 1; t <= 20; ++t) v.push_back(t);
  const Series line = make_series(v);
  const auto m = fit_ar(line, 2, false);
  if (m.coefficients.size() != 2 || std::abs(m.coefficients[0] - 2) > 1e-6 || std::abs(m.coefficients[1] + 1) > 1e-6) {
    return "AR(2) coefficients off";
  }
  const auto f = forecast_ar(m, line, 3);
  for (int h = 0; h < 3; ++h) {
    if (std::abs(f.predictions[h] - (21 + h)) > 1e-6) return "AR(2) forecast off at h=" + std::to_string(h + 1);
  }

  std::mt19937_64 rng(17);
  std::normal_distribution<double> eps(0.0, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    const double phi = 0.1 + 0.035 * trial;
    std::vector<double> x{0.0};
    while (x.size() < 30) x.push_back(0.05 + phi * x.back() + eps(rng));
    const Series s = make_series(x);
    const auto rw = forecast_arima(fit_arima(s, 0, 1, 0), s, 3);
    for (double p : rw.predictions) {
      if (p != x.back()) return "ARIMA(0,1,0) is not the last observation";
    }
    const auto a = fit_arima(s, 1, 0, 0);
    const auto o = fit_ar(s, 1, true);
    if (std::abs(a.ar_coefficients[0] - o.coefficients[0]) > 1e-4 || std::abs(a.intercept - o.intercept) > 1e-4) {
      return "ARIMA(1,0,0) vs AR(1) differ by " + fmt("%.3g", std::abs(a.ar_coefficients[0] - o.coefficients[0]));
    }
  }
  return "";
}

std::string model_ranking() {
  std::vector<double> v;
  for (int t = 1; t <= 20; ++t) v.push_back(t);
  const auto ranked = compare_models(make_series(v), 3);
  if (ranked.empty() || ranked[0].model_id != ModelId::AR) return "AR is not ranked first on the line";
  if (!(*ranked[0].mse < 1e-6)) return "AR MSE " + fmt("%.3g", *ranked[0].mse);
  double ma = -1, ar = -1;
  for (const auto& r : ranked) {
    if (r.model_id == ModelId::MA) ma = *r.mse;
    if (r.model_id == ModelId::AR) ar = *r.mse;
  }
  if (!(ar < ma)) return "MSE(AR) >= MSE(MA)";
  for (const auto& r : compare_models(make_series(std::vector<double>(20, 0.3)), 3)) {
    if (*r.mse != 0.0) return std::string(to_string(r.model_id)) + " MSE nonzero on a constant series";
  }
  return "";
}

std::string golden_e2e() {
  const fs::path golden = testing::source_path("tests/golden");
  testing::TempDir dir;

  const auto ingest = cli(dir.path(), {"ingest", "-k", testing::kFixtureKeyword});
  if (ingest.code != 0) return "ingest exited " + std::to_string(ingest.code) + ": " + ingest.err;

  testing::TempDir fresh;
  const auto r = cli(fresh.path(), {"report", "-k", testing::kFixtureKeyword, "--kind", "present", "--json"});
  if (r.code != 0) return "report exited " + std::to_string(r.code) + ": " + r.err;
  const fs::path out = Json::parse(r.out)["dir"].get<std::string>();

  const std::vector<std::pair<std::string, fs::path>> artifacts = {
      {"ingest.txt", fs::path()},  {"report.md", out / "report.md"}, {"report.json", out / "report.json"},
      {"pie.svg", out / "pie.svg"}, {"trend.svg", out / "trend.svg"}, {"bars.svg", out / "bars.svg"}};
  if (g_update_golden) {
    fs::create_directories(golden);
    for (const auto& [name, path] : artifacts) {
      testing::write_file(golden / name, path.empty() ? ingest.out : testing::read_file(path));
    }
  }
  for (const auto& [name, path] : artifacts) {
    if (!fs::exists(golden / name)) return "missing golden " + name + " (run with --update-golden)";
    const std::string got = path.empty() ? ingest.out : testing::read_file(path);
    if (got != testing::read_file(golden / name)) return name + " differs from the golden copy";
  }

  const Json report = Json::parse(testing::read_file(out / "report.json"));
  for (auto id : kSectionIds) {
    if (!report["sections"].contains(std::string(id))) return "missing section " + std::string(id);
  }
  for (const char* id : {"cause_analysis", "risk_assessment", "policy_suggestions", "associated_words"}) {
    int n = 0;
    for (const auto& c : report["citations"]) n += c["claim_section"] == id;
    if (n == 0) return std::string("no citation for ") + id;
  }
  return "";
}

std::string future_rule() {
  testing::TempDir dir;
  const auto r = cli(dir.path(), {"report", "-k", testing::kFixtureKeyword, "--kind", "future", "--json"});
  if (r.code != 0) return "report exited " + std::to_string(r.code) + ": " + r.err;
  const fs::path out = Json::parse(r.out)["dir"].get<std::string>();
  const Json report = Json::parse(testing::read_file(out / "report.json"));
  if (!report.contains("forecast")) return "no forecast attached";
  const Json& fc = report["forecast"];
  if (fc["model_id"] != "ar" || fc["horizon"] != 3) return "forecast is not AR, horizon 3";
  const auto stored = fc["predictions"].get<std::vector<double>>();
  if (stored.size() != 3) return "forecast has " + std::to_string(stored.size()) + " predictions";

  RecordStore store(dir.path());
  const Json& window = report["request"]["window"];
  const Series series = to_series(store.get_range(report["request"]["keyword"].get<std::string>(),
                                                  *Date::parse(window["start"].get<std::string>()),
                                                  *Date::parse(window["end"].get<std::string>()), FillMode::CarryForward),
                                  SeriesField::CombinedScore);
  const ModelChoice choice = select_default_model(series.size());
  if (choice.id != ModelId::AR) return "default model for " + std::to_string(series.size()) + " points is not AR";
  const auto again = forecast_with(choice, series, 3);
  // The report stores six decimals, so compare the recomputation at that precision.
  for (size_t h = 0; h < 3; ++h) {
    if (canonical_round(again.predictions[h]) != stored[h]) {
      return "prediction " + std::to_string(h + 1) + " differs";
    }
  }
  return "";
}

DailyRecord random_record(std::mt19937_64& rng, Date day) {
  std::uniform_real_distribution<double> pol(-1, 1), sub(0, 1);
  std::uniform_int_distribution<int> cnt(0, 6), nsrc(1, 4), nterms(0, 5);
  const std::vector<std::string> ids = {"bing_news", "google_news", "twitter", "yahoo_hot"};
  DailyRecord r;
  r.keyword = "k" + std::to_string(rng() % 3);
  r.day = day;
  const int n = nsrc(rng);
  double sp = 0, ss = 0, sc = 0;
  int live = 0;
  for (int i = 0; i < n; ++i) {
    SourceStats s;
    s.class_counts = {cnt(rng), cnt(rng), cnt(rng)};
    s.doc_count = s.class_counts.total();
    if (s.doc_count > 0) {
      s.polarity = canonical_round(pol(rng));
      s.subjectivity = canonical_round(sub(rng));
      s.score = canonical_round(combine_score(s.polarity, s.subjectivity, ScoreWeights()));
      sp += s.polarity;
      ss += s.subjectivity;
      sc += s.score;
      ++live;
    }
    r.per_source[ids[static_cast<size_t>(i)]] = s;
  }
  if (live > 0) r.combined = {sp / live, ss / live, sc / live};
  for (int i = nterms(rng); i > 0; --i) r.top_terms.push_back({"t" + std::to_string(rng() % 50), 1 + i});
  r.generated_at = start_of(day) + std::chrono::seconds(rng() % 86400);
  return r;
}

std::string store_roundtrip() {
  std::mt19937_64 rng(100);
  for (int i = 0; i < 100; ++i) {
    const DailyRecord r = random_record(rng, Date(2024, 1, 1) + i);
    validate_record(r);
    const std::string once = r.canonical();
    if (DailyRecord::from_json(Json::parse(once)).canonical() != once) return "record " + std::to_string(i) + " drifted";
  }

  testing::TempDir dir;
  RecordStore store(dir.path());
  std::bernoulli_distribution keep(0.35);
  const Date base(2024, 3, 1);
  std::set<int> kept;
  for (int i = 0; i < 90; ++i) {
    if (!keep(rng)) continue;
    DailyRecord r = random_record(rng, base + i);
    r.keyword = "prop";
    store.put_record(r);
    kept.insert(i);
  }
  std::uniform_int_distribution<int> pick(0, 89);
  for (int trial = 0; trial < 200; ++trial) {
    int a = pick(rng), b = pick(rng);
    if (a > b) std::swap(a, b);
    const auto plain = store.get_range("prop", base + a, base + b, FillMode::None);
    size_t expect = 0;
    for (int k : kept) expect += k >= a && k <= b;
    if (plain.size() != expect) return "unfilled range returned the wrong count";
    const auto filled = store.get_range("prop", base + a, base + b, FillMode::CarryForward);
    for (size_t i = 0; i < filled.size(); ++i) {
      if (filled[i].day < base + a || filled[i].day > base + b) return "record outside range";
      if (i > 0 && filled[i].day - filled[i - 1].day != 1) return "filled range has a gap";
      if (i > 0 && !(filled[i - 1].day < filled[i].day)) return "range not increasing";
    }
    if (!filled.empty() && filled.back().day != base + b) return "filled range stops early";
    for (const auto& r : plain) {
      if (!kept.contains(r.day - base)) return "unfilled range invented a day";
    }
  }
  return "";
}

double eval_accuracy(const std::vector<std::string>& extra) {
  testing::TempDir dir;
  std::vector<std::string> args = {"eval-sentiment", "--dataset",
                                   testing::source_path("data/eval/food_reviews_200.jsonl").string(), "--json"};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = cli(dir.path(), args);
  if (r.code != 0) throw std::runtime_error("eval-sentiment exited " + std::to_string(r.code) + ": " + r.err);
  const Json j = Json::parse(r.out);
  if (j["total"] != 200) throw std::runtime_error("dataset does not have 200 examples");
  return j["accuracy"].get<double>();
}

std::string eval_floor() {
  const double acc = eval_accuracy({});
  std::cout << "INFO  eval accuracy with polarity-only weights " << fmt("%.3f", acc) << ", with 0.7/0.3 weights "
            << fmt("%.3f", eval_accuracy({"--weights", "0.7,0.3"})) << "\n";
  if (acc < 0.70) return "accuracy " + fmt("%.3f", acc) + " < 0.70";
  return "";
}

std::string service_contract() {
  testing::TempDir dir;
  ReportService service(testing::fixture_config(dir.path()), fixed_clock(testing::golden_now()));
  const int port = service.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  const Json body = {{"keyword", testing::kFixtureKeyword},
                     {"kind", "present"},
                     {"window", {{"start", "2024-10-01"}, {"end", "2024-10-14"}}}};
  auto res = client.Post("/api/v1/reports", body.dump(), "application/json");
  if (!res || res->status != 202) return "POST did not return 202";
  const std::string id = Json::parse(res->body)["report_id"];

  std::string stream;
  res = client.Get("/api/v1/reports/" + id + "/events", [&](const char* data, size_t n) {
    stream.append(data, n);
    return true;
  });
  if (!res || res->status != 200) return "events stream failed";
  std::vector<JobEvent> events;
  std::istringstream in(stream);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("data: ", 0) != 0) continue;
    const Json e = Json::parse(line.substr(6));
    JobEvent ev;
    const std::string state = e["state"];
    bool known = false;
    for (auto st : {JobState::Queued, JobState::Crawling, JobState::Scoring, JobState::Synthesizing, JobState::Done,
                    JobState::Failed}) {
      if (to_string(st) == state) {
        ev.state = st;
        known = true;
      }
    }
    if (!known) return "unknown state " + state;
    ev.step = e.value("step", 0);
    events.push_back(ev);
  }
  if (events.empty() || events.back().state != JobState::Done) return "job did not finish";
  if (!is_monotone(events)) return "event sequence regressed";

  res = client.Get("/api/v1/reports/" + id);
  if (!res || res->status != 200) return "GET report failed";
  if (res->body != testing::read_file(report_dir(dir.path(), id) / "report.json")) return "body differs from the file";

  Json reversed = body;
  reversed["window"] = {{"start", "2024-10-14"}, {"end", "2024-10-01"}};
  res = client.Post("/api/v1/reports", reversed.dump(), "application/json");
  if (!res || res->status != 400) return "reversed window was not rejected with 400";
  service.stop();
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--update-golden") {
      g_update_golden = true;
    } else {
      std::cerr << "usage: acceptance [--update-golden]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {"combine_score exact and weight identities (tol 1e-12, 1000 inputs)", 1.0, combine_exactness},
      {"scorer matches brute-force oracle (500 texts, exact)", 5.0, scorer_oracle},
      {"AR(2) on x_t=t, ARIMA(0,1,0), ARIMA(1,0,0) vs AR(1) (tol 1e-6 / exact / 1e-4)", 5.0, ar_exactness},
      {"model comparison: AR first on a line, all zero on a constant", 1.0, model_ranking},
      {"golden end-to-end present report (byte-identical)", 5.0, golden_e2e},
      {"future report forecast recomputes from the archive", 0.0, future_rule},
      {"record store round-trip and range properties (100 records)", 0.0, store_roundtrip},
      {"eval-sentiment accuracy >= 0.70 on 200 reviews", 0.0, eval_floor},
      {"service contract: 202, monotone events, body equals file, 400 on reversed window", 0.0, service_contract},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock_::now();
    std::string why;
    try {
      why = c.body();
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock_::now() - t0).count();
    if (why.empty() && c.time_limit_s > 0 && secs >= c.time_limit_s) {
      why = "took " + fmt("%.2f", secs) + " s, limit " + fmt("%.0f", c.time_limit_s) + " s";
    }
    std::cout << (why.empty() ? "PASS" : "FAIL") << "  " << c.name << "  [" << fmt("%.3f", secs) << " s]";
    if (!why.empty()) std::cout << "  " << why;
    std::cout << std::endl;
    failed += !why.empty();
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
