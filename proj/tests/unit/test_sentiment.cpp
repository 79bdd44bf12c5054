#include <doctest.h>

#include <random>

#include "oracleloom/error.hpp"
#include "oracleloom/sentiment.hpp"
#include "test_support.hpp"

using namespace oracleloom;

namespace {

Lexicon small_lexicon() {
  return Lexicon({{"great", 0.8, 0.75, 1.0}, {"very", 0.0, 0.3, 1.3}, {"bad", -0.7, 0.6, 1.0}});
}

ScoredDocument doc(const std::string& source, double score, double polarity = 0.0, double subjectivity = 0.0,
                   const std::string& text = "") {
  ScoredDocument d;
  d.url = "https://example.test/" + source + "/" + std::to_string(score);
  d.source_id = source;
  d.published_at = start_of(Date(2024, 5, 1)) + std::chrono::hours{9};
  d.text = text;
  d.sentiment = {polarity, subjectivity, score, 1};
  return d;
}

}  // namespace

TEST_CASE("combine_score weight identities and the worked example") {
  CHECK(combine_score(0.6, 0.4, ScoreWeights(1, 0)) == 0.6);
  CHECK(combine_score(0.6, 0.4, ScoreWeights(0, 1)) == 0.4);
  CHECK(std::abs(combine_score(-0.5, 0.8, ScoreWeights(0.7, 0.3)) - (-0.11)) <= 1e-12);
}

TEST_CASE("combine_score is the left-to-right weighted sum") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> p(-1, 1), s(0, 1), w(0, 5);
  for (int i = 0; i < 1000; ++i) {
    const double pol = p(rng), sub = s(rng);
    const ScoreWeights weights(w(rng), w(rng) + 1e-9);
    CHECK(combine_score(pol, sub, weights) == weights.w_p() * pol + weights.w_s() * sub);
  }
}

TEST_CASE("score_document examples") {
  const Lexicon lex = small_lexicon();
  auto s = score_document("", lex);
  CHECK(s.polarity == 0.0);
  CHECK(s.subjectivity == 0.0);
  CHECK(s.matched_terms == 0);

  s = score_document("great great", lex);
  CHECK(s.polarity == doctest::Approx(0.8));
  CHECK(s.subjectivity == doctest::Approx(0.75));

  s = score_document("not great", lex);
  CHECK(s.polarity == doctest::Approx(-0.4));
  CHECK(s.subjectivity == doctest::Approx(0.75));

  s = score_document("very great", lex);
  CHECK(s.polarity == 1.0);
  CHECK(s.subjectivity == doctest::Approx(0.975));
  CHECK(s.matched_terms == 1);
}

TEST_CASE("negation reaches two tokens back and covers n't forms") {
  const Lexicon lex = small_lexicon();
  CHECK(score_document("not very great", lex).polarity == doctest::Approx(-0.52));
  CHECK(score_document("isn't great", lex).polarity == doctest::Approx(-0.4));
  CHECK(score_document("never so great", lex).polarity == doctest::Approx(-0.4));
  CHECK(score_document("no food here great", lex).polarity == doctest::Approx(0.8));
  CHECK(score_document("Isn\xE2\x80\x99t great", lex).polarity == doctest::Approx(-0.4));
}

TEST_CASE("score_document needs a lexicon") {
  CHECK_THROWS_AS(score_document("x", Lexicon{}), Error);
}

TEST_CASE("score_document matches the brute-force oracle") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 40; ++round) {
    const auto entries = testing::random_lexicon(rng, 30);
    const Lexicon lex(entries);
    for (int i = 0; i < 25; ++i) {
      const std::string text = testing::random_text(rng, entries, 50);
      const auto got = score_document(text, lex);
      const auto want = testing::oracle_score(text, entries);
      CHECK_MESSAGE(got.polarity == want.polarity, text);
      CHECK_MESSAGE(got.subjectivity == want.subjectivity, text);
      CHECK(got.matched_terms == want.spans);
    }
  }
}

TEST_CASE("scores stay in range for random text and lexicons") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 20; ++round) {
    const auto entries = testing::random_lexicon(rng, 40);
    const Lexicon lex(entries);
    for (int i = 0; i < 50; ++i) {
      const auto s = score_text(testing::random_text(rng, entries, 60), lex, ScoreWeights());
      CHECK(s.polarity >= -1.0);
      CHECK(s.polarity <= 1.0);
      CHECK(s.subjectivity >= 0.0);
      CHECK(s.subjectivity <= 1.0);
      CHECK(s.score >= -1.0);
      CHECK(s.score <= 1.0);
    }
  }
}

TEST_CASE("tokenize") {
  CHECK(tokenize("Don't STOP, it's 'fine'!") == std::vector<std::string>{"don't", "stop", "it's", "fine"});
  CHECK(tokenize("caf\xC3\xA9 ok") == std::vector<std::string>{"caf\xC3\xA9", "ok"});
  CHECK(tokenize("").empty());
}

TEST_CASE("lexicon parsing and validation") {
  const Lexicon lex = Lexicon::parse("# comment\ngood\t0.7\t0.6\t1.0\n\nvery\t0.2\t0.3\t1.3\n");
  CHECK(lex.size() == 2);
  CHECK(lex.find("very")->is_modifier());
  CHECK_THROWS_AS(Lexicon::parse("Good\t0.7\t0.6\t1.0\n"), Error);
  CHECK_THROWS_AS(Lexicon::parse("good\t1.7\t0.6\t1.0\n"), Error);
  CHECK_THROWS_AS(Lexicon::parse("good\t0.7\t-0.1\t1.0\n"), Error);
  CHECK_THROWS_AS(Lexicon::parse("good\t0.7\t0.6\t0\n"), Error);
  CHECK_THROWS_AS(Lexicon::parse("good\t0.7\n"), Error);
}

TEST_CASE("bundled lexicon loads") {
  const Lexicon lex = Lexicon::load(testing::source_path("data/lexicon/en_sentiment.tsv"));
  CHECK(lex.size() > 1500);
  REQUIRE(lex.find("great") != nullptr);
  CHECK(lex.find("great")->polarity > 0.0);
  CHECK(lex.find("very")->is_modifier());
}

TEST_CASE("classify bands") {
  CHECK(classify(0.0) == SentimentClass::Neutral);
  CHECK(classify(-0.05) == SentimentClass::Neutral);
  CHECK(classify(0.05) == SentimentClass::Neutral);
  CHECK(classify(0.5) == SentimentClass::Positive);
  CHECK(classify(-0.0501) == SentimentClass::Negative);
  CHECK_THROWS_AS(classify(0.0, Thresholds{0.1, 0.1}), Error);
}

TEST_CASE("aggregate_daily examples") {
  AggregateOptions opts;
  opts.keyword = "x";
  const Date day(2024, 5, 1);

  const auto empty = aggregate_daily({}, day, {{"a", 1.0}}, opts);
  CHECK(empty.doc_count() == 0);
  CHECK(empty.combined.score == 0.0);

  std::vector<ScoredDocument> only_a = {doc("a", 0.4, 0.5, 0.2), doc("a", 0.2, 0.1, 0.4)};
  const auto r1 = aggregate_daily(only_a, day, {{"a", 0.3}, {"b", 0.7}}, opts);
  CHECK(r1.combined.score == doctest::Approx(0.3));
  CHECK(r1.combined.polarity == doctest::Approx(0.3));
  CHECK(r1.combined.subjectivity == doctest::Approx(0.3));
  CHECK(r1.per_source.at("a").doc_count == 2);

  std::vector<ScoredDocument> both = {doc("a", 0.2), doc("b", -0.2)};
  const auto r2 = aggregate_daily(both, day, {{"a", 0.5}, {"b", 0.5}}, opts);
  CHECK(r2.combined.score == doctest::Approx(0.0));

  std::vector<ScoredDocument> weighted = {doc("a", 0.4), doc("b", 0.0)};
  CHECK(aggregate_daily(weighted, day, {{"a", 1.0}, {"b", 3.0}}, opts).combined.score == doctest::Approx(0.1));
}

TEST_CASE("aggregate_daily class counts and day check") {
  AggregateOptions opts;
  opts.keyword = "x";
  std::vector<ScoredDocument> docs = {doc("a", 0.5), doc("a", 0.0), doc("a", -0.5), doc("b", -0.3)};
  const auto r = aggregate_daily(docs, Date(2024, 5, 1), {{"a", 1.0}, {"b", 1.0}}, opts);
  CHECK(r.per_source.at("a").class_counts == ClassCounts{1, 1, 1});
  CHECK(r.per_source.at("b").class_counts == ClassCounts{0, 0, 1});
  CHECK(r.doc_count() == 4);
  CHECK_NOTHROW(validate_record(r));

  try {
    aggregate_daily(docs, Date(2024, 5, 2), {{"a", 1.0}}, opts);
    FAIL("expected DayMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DayMismatch);
  }
}

TEST_CASE("top_terms counts, breaks ties by term, and drops stopwords") {
  std::vector<ScoredDocument> docs = {doc("a", 0, 0, 0, "delivery delivery fee")};
  const StopwordSet none;
  CHECK(top_terms(docs, none, 2) == std::vector<TermCount>{{"delivery", 2}, {"fee", 1}});

  std::vector<ScoredDocument> fruit = {doc("a", 0, 0, 0, "banana apple")};
  CHECK(top_terms(fruit, none, 1) == std::vector<TermCount>{{"apple", 1}});

  const StopwordSet stop = {"the", "and"};
  std::vector<ScoredDocument> stops = {doc("a", 0, 0, 0, "the and The")};
  CHECK(top_terms(stops, stop, 5).empty());

  CHECK(top_terms(docs, none, 5, keyword_tokens("Delivery", {})) == std::vector<TermCount>{{"fee", 1}});
}

TEST_CASE("aggregate_daily excludes keyword and synonym tokens from top terms") {
  AggregateOptions opts;
  opts.keyword = "food delivery";
  opts.synonyms = {"takeout"};
  const StopwordSet stop = {"the"};
  opts.stopwords = &stop;
  std::vector<ScoredDocument> docs = {doc("a", 0.1, 0, 0, "the food delivery takeout was late late")};
  const auto r = aggregate_daily(docs, Date(2024, 5, 1), {{"a", 1.0}}, opts);
  CHECK(r.top_terms == std::vector<TermCount>{{"late", 2}, {"was", 1}});
}
