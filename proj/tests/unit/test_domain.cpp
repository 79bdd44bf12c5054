#include <doctest.h>

#include <random>

#include "oracleloom/domain.hpp"
#include "oracleloom/error.hpp"

using namespace oracleloom;

namespace {

SourceRegistry registry() {
  return SourceRegistry({{"bing_news", SourceCategory::OfficialMedia, 1.0, "en-US"},
                         {"twitter", SourceCategory::SocialMedia, 0.5, "en-US"}});
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::BadArgument;
}

const Date kToday(2019, 10, 14);

}  // namespace

TEST_CASE("normalize_weights divides by the sum") {
  auto w = normalize_weights({{"a", 1.0}, {"b", 3.0}});
  CHECK(w["a"] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(w["b"] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(normalize_weights({{"a", 2.0}, {"b", 2.0}})["a"] == 0.5);
  CHECK(normalize_weights({{"a", 1.0}})["a"] == 1.0);
}

TEST_CASE("normalize_weights rejects all-zero and negative weights") {
  CHECK(code_of([] { normalize_weights({{"a", 0.0}, {"b", 0.0}}); }) == ErrorCode::AllZero);
  CHECK(code_of([] { normalize_weights({{"a", -1.0}, {"b", 2.0}}); }) == ErrorCode::InvalidRequest);
}

TEST_CASE("normalize_weights sums to one and keeps ratio order") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    SourceWeights raw;
    const int n = 1 + trial % 6;
    for (int i = 0; i < n; ++i) raw["s" + std::to_string(i)] = u(rng);
    const auto w = normalize_weights(raw);
    double sum = 0.0;
    for (const auto& [k, v] : w) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (const auto& [a, va] : raw) {
      for (const auto& [b, vb] : raw) {
        if (va < vb) CHECK(w.at(a) <= w.at(b));
      }
    }
  }
}

TEST_CASE("ScoreWeights normalizes at construction") {
  ScoreWeights w(7.0, 3.0);
  CHECK(w.w_p() == doctest::Approx(0.7));
  CHECK(w.w_s() == doctest::Approx(0.3));
  CHECK(w.w_p() + w.w_s() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(code_of([] { ScoreWeights(0.0, 0.0); }) == ErrorCode::AllZero);
  CHECK(code_of([] { ScoreWeights(-1.0, 2.0); }) == ErrorCode::InvalidRequest);
  const ScoreWeights d;
  CHECK(d.w_p() == 0.7);
  CHECK(d.w_s() == 0.3);
}

TEST_CASE("AnalysisRequest enforces its invariants") {
  RequestFields f;
  f.keyword = "x";
  f.window = {Date(2024, 5, 1), Date(2024, 5, 3)};
  CHECK_NOTHROW(AnalysisRequest::create(f));

  auto reversed = f;
  reversed.window = {Date(2024, 5, 2), Date(2024, 5, 1)};
  CHECK(code_of([&] { AnalysisRequest::create(reversed); }) == ErrorCode::BadDate);

  auto no_keyword = f;
  no_keyword.keyword = "   ";
  CHECK(code_of([&] { AnalysisRequest::create(no_keyword); }) == ErrorCode::NoKeyword);

  auto url_missing = f;
  url_missing.kind = ReportKind::Url;
  CHECK(code_of([&] { AnalysisRequest::create(url_missing); }) == ErrorCode::InvalidRequest);

  auto url_relative = url_missing;
  url_relative.url = "/relative/path";
  CHECK(code_of([&] { AnalysisRequest::create(url_relative); }) == ErrorCode::InvalidRequest);

  auto url_on_present = f;
  url_on_present.url = "https://example.test/a";
  CHECK(code_of([&] { AnalysisRequest::create(url_on_present); }) == ErrorCode::InvalidRequest);

  auto zero_sources = f;
  zero_sources.source_weights = {{"a", 0.0}};
  CHECK(code_of([&] { AnalysisRequest::create(zero_sources); }) == ErrorCode::AllZero);
}

TEST_CASE("AnalysisRequest JSON round-trips and fills defaults") {
  RequestFields defaults;
  defaults.window = default_window(kToday);
  defaults.source_weights = {{"bing_news", 1.0}};
  defaults.show_urls = false;

  const auto r = AnalysisRequest::from_json(Json{{"keyword", "Halloween"}, {"kind", "future"}}, defaults);
  CHECK(r.keyword() == "Halloween");
  CHECK(r.kind() == ReportKind::Future);
  CHECK(r.window() == defaults.window);
  CHECK_FALSE(r.show_urls());
  CHECK(AnalysisRequest::from_json(r.to_json(), RequestFields{}) == r);

  CHECK(code_of([&] {
          AnalysisRequest::from_json(Json{{"keyword", "x"}, {"window", {{"start", "2024-05-02"}, {"end", "2024-05-01"}}}},
                                     defaults);
        }) == ErrorCode::BadDate);
}

TEST_CASE("default window is the 14 days ending today") {
  const DateRange w = default_window(kToday);
  CHECK(w.end == kToday);
  CHECK(w.start == Date(2019, 10, 1));
  CHECK(w.days() == kDefaultWindowDays);
}

TEST_CASE("parse_query reads the report utterance") {
  const auto r = parse_query("Provide me with a sentiment analysis report on the Halloween Holiday", registry(), kToday);
  CHECK(r.keyword() == "Halloween Holiday");
  CHECK(r.kind() == ReportKind::Present);
  CHECK(r.window() == default_window(kToday));
  CHECK(r.source_weights().at("bing_news") == 1.0);
  CHECK(r.source_weights().at("twitter") == 0.5);
}

TEST_CASE("parse_query reads the prediction utterance") {
  const auto r =
      parse_query("Predict the emotional trend of the Halloween Holiday from October 1, 2019", registry(), kToday);
  CHECK(r.keyword() == "Halloween Holiday");
  CHECK(r.kind() == ReportKind::Future);
  CHECK(r.window().start == Date(2019, 10, 1));
  CHECK(r.window().end == kToday);
}

TEST_CASE("parse_query variants") {
  CHECK(code_of([] { parse_query("report on X from 2024-05-02 to 2024-05-01", registry(), kToday); }) ==
        ErrorCode::BadDate);
  CHECK(code_of([] { parse_query("hello there", registry(), kToday); }) == ErrorCode::NoKeyword);

  const auto quoted = parse_query("analysis of \"food delivery\" please", registry(), kToday);
  CHECK(quoted.keyword() == "food delivery");

  const auto past = parse_query("report on rail strikes from 2019-09-01 to 2019-09-10", registry(), kToday);
  CHECK(past.kind() == ReportKind::Past);
  CHECK(past.window() == DateRange{Date(2019, 9, 1), Date(2019, 9, 10)});

  const auto url = parse_query("report on https://example.test/news/1", registry(), kToday);
  CHECK(url.kind() == ReportKind::Url);
  CHECK(url.url() == std::optional<std::string>("https://example.test/news/1"));
}

TEST_CASE("parse_query is deterministic") {
  const std::string msg = "Predict the trend of \"ev chargers\" since 2019-10-05";
  CHECK(parse_query(msg, registry(), kToday) == parse_query(msg, registry(), kToday));
}

TEST_CASE("SourceRegistry rejects duplicate ids and negative weights") {
  CHECK(code_of([] {
          SourceRegistry({{"a", SourceCategory::OfficialMedia, 1.0, "en-US"},
                          {"a", SourceCategory::SocialMedia, 1.0, "en-US"}});
        }) == ErrorCode::BadConfig);
  CHECK(code_of([] { SourceRegistry({{"a", SourceCategory::OfficialMedia, -1.0, "en-US"}}); }) ==
        ErrorCode::BadConfig);
}

TEST_CASE("dates") {
  CHECK(Date::parse("2024-02-29").has_value());
  CHECK_FALSE(Date::parse("2023-02-29").has_value());
  CHECK_FALSE(Date::parse("2024-1-01").has_value());
  CHECK(Date(2024, 3, 1) - Date(2024, 2, 28) == 2);
  CHECK(format_rfc3339(*parse_rfc3339("2024-05-01T10:30:00+02:00")) == "2024-05-01T08:30:00Z");
  CHECK(day_of(*parse_rfc3339("2024-05-01T23:59:59Z")) == Date(2024, 5, 1));
}
