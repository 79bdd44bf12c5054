#include <doctest.h>

#include <set>

#include "oracleloom/error.hpp"
#include "oracleloom/llm_gateway.hpp"
#include "oracleloom/prompts.hpp"

using namespace oracleloom;

namespace {

AnalysisRequest analysis(ReportKind kind = ReportKind::Present) {
  RequestFields f;
  f.keyword = "food delivery";
  f.synonyms = {"takeout", "meal apps"};
  f.window = {Date(2024, 10, 1), Date(2024, 10, 14)};
  f.kind = kind;
  if (kind == ReportKind::Url) f.url = "https://news.test/a";
  f.source_weights = {{"bing_news", 1.0}};
  return AnalysisRequest::create(f);
}

DailyRecord rec(Date day, double score, std::vector<TermCount> terms = {{"late", 3}, {"fee", 2}, {"app", 1}, {"x", 1}}) {
  DailyRecord r;
  r.keyword = "food delivery";
  r.day = day;
  r.combined = {score, 0.4, score};
  r.top_terms = std::move(terms);
  return r;
}

ScoredDocument scored(const std::string& url, const std::string& text, double score) {
  ScoredDocument d;
  d.url = url;
  d.source_id = "twitter";
  d.published_at = *parse_rfc3339("2024-10-10T09:00:00Z");
  d.text = text;
  d.sentiment = {score, 0.5, score, 1};
  return d;
}

size_t occurrences(const std::string& hay, const std::string& needle) {
  size_t n = 0;
  for (size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
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

}  // namespace

TEST_CASE("role prompt follows the four clauses in order") {
  const RolePrompt role = RolePrompt::standard();
  const std::string text = render_role_prompt(role);
  CHECK(text.rfind("1. You are a public opinion analysis expert with strong research and analytical capabilities", 0) ==
        0);
  CHECK(text.find("2. Conduct sentiment and content analysis to provide positive and negative evaluations of public "
                  "opinion.") != std::string::npos);
  CHECK(text.find("3. Interpret public opinion information in the correct context") != std::string::npos);
  CHECK(text.find("4. You must produce reports based on user input requirements.") != std::string::npos);
  CHECK(render_role_prompt(role) == text);

  RolePrompt broken = role;
  broken.normative = "  ";
  CHECK(code_of([&] { render_role_prompt(broken); }) == ErrorCode::EmptyClause);
}

TEST_CASE("thinking steps are eight, contiguous, ending with the final check") {
  const auto& steps = thinking_steps();
  REQUIRE(steps.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(steps[i].index == i + 1);
  CHECK(steps[0].instruction.find("Please summarize reports on keywords and synonyms") != std::string::npos);
  CHECK(steps[7].instruction ==
        "Final Check: Please think step by step, do not output the thought process, and do not explain the output "
        "logic.");
  std::set<std::string> produced;
  for (const auto& s : steps) produced.insert(s.expected_sections.begin(), s.expected_sections.end());
  for (auto id : kSectionIds) CHECK(produced.count(std::string(id)) == 1);
}

TEST_CASE("rendered steps carry the right context") {
  const std::string records = excerpt_records(std::vector<DailyRecord>{rec(Date(2024, 10, 14), 0.1)}, 1000);
  const auto steps = render_thinking_steps(analysis(), records, "<<DOC url=\"https://n.test/1\">>x<<END>>");
  REQUIRE(steps.size() == 8);
  const std::string role = render_role_prompt(RolePrompt::standard());

  const std::string p1 = steps[0].user_prompt();
  CHECK(p1.find("food delivery") != std::string::npos);
  CHECK(p1.find("takeout") != std::string::npos);
  CHECK(p1.find("meal apps") != std::string::npos);

  std::set<std::string> distinct;
  for (const auto& s : steps) {
    CHECK(occurrences(s.full_text(), role) == 1);
    for (const auto& id : s.step.expected_sections) {
      CHECK(s.user_prompt().find("<<SECTION:" + id + ">>") != std::string::npos);
    }
    distinct.insert(s.full_text());
  }
  CHECK(distinct.size() == 8);

  std::string last = steps[7].user_prompt();
  while (!last.empty() && std::isspace(static_cast<unsigned char>(last.back()))) last.pop_back();
  CHECK(last.ends_with("do not explain the output logic."));

  const auto again = render_thinking_steps(analysis(), records, "<<DOC url=\"https://n.test/1\">>x<<END>>");
  for (size_t i = 0; i < 8; ++i) CHECK(again[i].full_text() == steps[i].full_text());
}

TEST_CASE("chart step asks for JSON, not an image") {
  const auto steps = render_thinking_steps(analysis(), "", "");
  bool found = false;
  for (const auto& s : steps) {
    for (const auto& id : s.step.expected_sections) {
      if (id != "chart_data") continue;
      found = true;
      CHECK(s.user_prompt().find("JSON") != std::string::npos);
    }
  }
  CHECK(found);
}

TEST_CASE("oversized excerpts are rejected before any call") {
  PromptOptions small;
  small.max_prompt_tokens = 500;
  std::string huge;
  for (int i = 0; i < 2000; ++i) huge += "word ";
  CHECK(code_of([&] { render_thinking_steps(analysis(), huge, "", small); }) == ErrorCode::BudgetExceeded);
}

TEST_CASE("parse_sections") {
  const std::vector<std::string> both = {"summary", "conclusion"};
  const auto env = parse_sections("noise\n<<SECTION:summary>>\n  Up.  \n<<END>>\n<<SECTION:conclusion>>Done<<END>>",
                                  both);
  CHECK(env.at("summary") == "Up.");
  CHECK(env.at("conclusion") == "Done");

  try {
    parse_sections("<<SECTION:summary>>x<<END>>", both);
    FAIL("expected MissingSection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSection);
    CHECK(std::string(e.what()).find("conclusion") != std::string::npos);
  }
  CHECK(missing_sections("<<SECTION:summary>>x<<END>>", both) == std::vector<std::string>{"conclusion"});

  const std::vector<std::string> one = {"summary"};
  CHECK(code_of([&] { parse_sections("<<SECTION:summary>>a<<END>><<SECTION:summary>>b<<END>>", one); }) ==
        ErrorCode::MalformedMarkers);
  CHECK(code_of([&] { parse_sections("<<SECTION:summary>>a", one); }) == ErrorCode::MalformedMarkers);
  CHECK(code_of([&] { parse_sections("<<SECTION:summary>>a<<SECTION:conclusion>>b<<END>><<END>>", one); }) ==
        ErrorCode::MalformedMarkers);
  CHECK(code_of([&] { parse_sections("<<SECTION:summary>>a<<END>><<SECTION:bogus>>b<<END>>", one); }) ==
        ErrorCode::MalformedMarkers);
  CHECK(code_of([&] { parse_sections("<<SECTION:summary>>a<<END>><<SECTION:conclusion>>b<<END>>", one); }) ==
        ErrorCode::MalformedMarkers);
}

TEST_CASE("excerpt_records") {
  const std::vector<DailyRecord> two = {rec(Date(2024, 10, 1), 0.1), rec(Date(2024, 10, 2), -0.2)};
  const std::string text = excerpt_records(two, 1000);
  CHECK(occurrences(text, "\n") + (text.ends_with("\n") ? 0 : 1) == 2);
  CHECK(text.rfind("2024-10-02|", 0) == 0);
  CHECK(text.find("late,fee,app") != std::string::npos);
  CHECK(text.find("|x") == std::string::npos);

  std::vector<DailyRecord> many;
  for (int i = 0; i < 40; ++i) many.push_back(rec(Date(2024, 9, 1) + i, 0.01 * i));
  const std::string cut = excerpt_records(many, 200);
  CHECK(cut.size() <= 200);
  CHECK(cut.rfind("2024-10-10|", 0) == 0);

  CHECK(excerpt_records({}, 500).empty());
  CHECK(code_of([] { excerpt_records({}, 199); }) == ErrorCode::BadArgument);
}

TEST_CASE("excerpt_records keeps only the newest line when one fits") {
  const std::vector<DailyRecord> two = {rec(Date(2024, 10, 1), 0.1), rec(Date(2024, 10, 2), -0.2)};
  // Padding terms make each line long enough that only one fits in 200.
  std::vector<DailyRecord> wide;
  for (const auto& r : two) {
    auto w = r;
    w.top_terms = {{std::string(60, 'a'), 3}, {std::string(60, 'b'), 2}, {std::string(20, 'c'), 1}};
    wide.push_back(w);
  }
  const std::string one = excerpt_records(wide, 200);
  CHECK(one.rfind("2024-10-02|", 0) == 0);
  CHECK(one.find("2024-10-01") == std::string::npos);
}

TEST_CASE("excerpt_documents dedupes and alternates polarity") {
  const std::vector<ScoredDocument> docs = {
      scored("https://t.test/1", "Love it!", 0.9),   scored("https://t.test/2", "Love it!", 0.9),
      scored("https://t.test/3", "Awful", -0.8),     scored("https://t.test/4", "Great", 0.7),
      scored("https://t.test/5", "Meh", 0.0),        scored("https://t.test/6", "Terrible", -0.6)};
  const auto ex = excerpt_documents(docs, 4, 200);
  REQUIRE(ex.docs.size() == 4);
  CHECK(ex.docs[0]->url == "https://t.test/1");
  CHECK(ex.docs[1]->url == "https://t.test/3");
  CHECK(ex.docs[2]->url == "https://t.test/4");
  CHECK(ex.docs[3]->url == "https://t.test/6");
  for (const auto* d : ex.docs) CHECK(ex.text.find(d->url) != std::string::npos);
}

TEST_CASE("stub completions of every rendered step parse into a complete envelope") {
  for (auto kind : {ReportKind::Past, ReportKind::Present, ReportKind::Future}) {
    const std::vector<ScoredDocument> docs = {scored("https://t.test/1", "Fast delivery, great food", 0.7),
                                              scored("https://t.test/2", "Late again and cold", -0.5)};
    const auto ex = excerpt_documents(docs, 10, 300);
    const std::vector<DailyRecord> records = {rec(Date(2024, 10, 13), 0.1), rec(Date(2024, 10, 14), 0.2)};
    SectionEnvelope all;
    for (const auto& s : render_thinking_steps(analysis(kind), excerpt_records(records, 2000), ex.text)) {
      const std::string out = stub_completion(s.system_prompt, s.user_prompt(all));
      for (auto& [id, body] : parse_sections(out, s.step.expected_sections)) all[id] = body;
    }
    for (auto id : kSectionIds) CHECK_MESSAGE(all.count(std::string(id)) == 1, id);
    CHECK_NOTHROW(Json::parse(all.at("chart_data")));
  }
}

TEST_CASE("url steps produce the single-document section set") {
  SectionEnvelope all;
  const std::vector<ScoredDocument> docs = {scored("https://news.test/a", "Couriers strike over pay", -0.3)};
  const auto ex = excerpt_documents(docs, 1, 2000);
  const auto steps = render_url_steps(analysis(ReportKind::Url), ex.text);
  for (const auto& s : steps) {
    for (auto& [id, body] : parse_sections(stub_completion(s.system_prompt, s.user_prompt(all)), s.step.expected_sections)) {
      all[id] = body;
    }
  }
  // chart_data is computed by the pipeline, never asked of the model here.
  std::set<std::string> want;
  for (auto id : kUrlSectionIds) {
    if (id != "chart_data") want.insert(std::string(id));
  }
  std::set<std::string> got;
  for (const auto& [id, body] : all) got.insert(id);
  CHECK(got == want);
}
