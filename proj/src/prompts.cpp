#include "oracleloom/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>

#include "oracleloom/error.hpp"
#include "oracleloom/llm_gateway.hpp"

namespace oracleloom {

namespace {

const std::string kStep8 =
    "Final Check: Please think step by step, do not output the thought process, and do not explain the output "
    "logic.";

std::vector<std::string> ids(std::initializer_list<std::string_view> list) {
  return {list.begin(), list.end()};
}

std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

/// Marker-safe single-line rendering of quoted text.
std::string sanitize(std::string_view text) {
  std::string out;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n' || c == '\r' || c == '\t') {
      out.push_back(' ');
    } else if ((c == '<' || c == '>') && i + 1 < text.size() && text[i + 1] == c) {
      out.push_back(c);
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string attr_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"') {
      out += "%22";
    } else if (c == '\n' || c == '\r') {
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
  return buf;
}

/// Cuts at the last space at or before `limit` bytes; falls back to a UTF-8
/// character boundary when the text has no space.
std::string cut(std::string_view text, size_t limit) {
  if (text.size() <= limit) return std::string(text);
  size_t at = text.rfind(' ', limit);
  if (at == std::string_view::npos || at == 0) {
    at = limit;
    while (at > 0 && (static_cast<unsigned char>(text[at]) & 0xC0) == 0x80) --at;
  }
  return std::string(text.substr(0, at)) + " ...";
}

std::string request_header(const AnalysisRequest& request, const ThinkingStep& step) {
  std::string h = "<<STEP:" + std::to_string(step.index) + ">>\n";
  h += "<<EXPECT:" + join(step.expected_sections, ",") + ">>\n";
  h += "<<KEYWORD:" + sanitize(request.keyword()) + ">>\n";
  if (!request.synonyms().empty()) h += "<<SYNONYMS:" + sanitize(join(request.synonyms(), ", ")) + ">>\n";
  h += "<<WINDOW:" + request.window().start.to_string() + " to " + request.window().end.to_string() + ">>\n";
  h += "<<KIND:" + std::string(to_string(request.kind())) + ">>\n";
  if (request.url()) h += "<<URL:" + sanitize(*request.url()) + ">>\n";
  return h;
}

std::string records_block(std::string_view records_excerpt) {
  std::string out = "Daily records (day|combined score|polarity|subjectivity|top terms), newest first:\n<<RECORDS>>\n";
  out += records_excerpt;
  if (!records_excerpt.empty() && records_excerpt.back() != '\n') out += "\n";
  return out + "<<ENDRECORDS>>\n";
}

std::string docs_block(std::string_view docs_excerpt) {
  std::string out = "Source documents:\n";
  if (docs_excerpt.empty()) return out + "(none)\n";
  out += docs_excerpt;
  if (docs_excerpt.back() != '\n') out += "\n";
  return out;
}

std::string tail_for(const ThinkingStep& step, int total) {
  std::vector<std::string> markers;
  for (const auto& id : step.expected_sections) markers.push_back("<<SECTION:" + id + ">>");
  std::string t = "Output format: for every required section write its marker on a line, then its text, then a line "
                  "<<END>>. Required sections: " +
                  join(markers, ", ") + ".";
  if (std::find(step.expected_sections.begin(), step.expected_sections.end(), "chart_data") !=
      step.expected_sections.end()) {
    t += " The chart_data section must be a single JSON object with keys sentiment_distribution "
         "(positive, neutral, negative fractions), trend (list of [day, score]) and term_bars (list of "
         "[term, frequency]).";
  }
  t += "\nStep " + std::to_string(step.index) + " of " + std::to_string(total) + ": " + step.instruction;
  return t;
}

void check_budget(const RenderedStep& r, const PromptOptions& options) {
  const int estimate = count_whitespace_tokens(r.system_prompt) + count_whitespace_tokens(r.user_prompt());
  if (estimate > options.max_prompt_tokens) {
    throw Error(ErrorCode::BudgetExceeded, "step " + std::to_string(r.step.index) + " prompt is estimated at " +
                                               std::to_string(estimate) + " tokens, over the limit of " +
                                               std::to_string(options.max_prompt_tokens));
  }
}

}  // namespace

bool is_section_id(std::string_view id) {
  return std::find(kSectionIds.begin(), kSectionIds.end(), id) != kSectionIds.end();
}

RolePrompt RolePrompt::standard() {
  return {"You are a public opinion analysis expert with strong research and analytical capabilities and a deep "
          "understanding of the market sales field and related events.",
          "Conduct sentiment and content analysis to provide positive and negative evaluations of public opinion.",
          "Interpret public opinion information in the correct context and pay attention to data collection and "
          "analysis details to ensure information accuracy.",
          "You must produce reports based on user input requirements."};
}

std::string render_role_prompt(const RolePrompt& role) {
  const std::array<const std::string*, 4> clauses = {&role.dramaturgical, &role.goal_oriented, &role.normative,
                                                     &role.communicative};
  static constexpr std::array<const char*, 4> names = {"dramaturgical", "goal_oriented", "normative",
                                                       "communicative"};
  std::string out;
  for (size_t i = 0; i < clauses.size(); ++i) {
    if (trim(*clauses[i]).empty()) {
      throw Error(ErrorCode::EmptyClause, std::string("role prompt clause '") + names[i] + "' is empty");
    }
    if (i) out += "\n";
    out += std::to_string(i + 1) + ". " + trim(*clauses[i]);
  }
  return out;
}

const std::vector<ThinkingStep>& thinking_steps() {
  static const std::vector<ThinkingStep> steps = {
      {1, "Please summarize reports on keywords and synonyms.", ids({"introduction"})},
      {2,
       "Compare, dissect, and analyze these emotional pieces of information, summarizing public opinion, and give an "
       "overall evaluation of the current sentiment state.",
       ids({"summary"})},
      {3, "Analyze and output the causes and potential impacts of the current sentiment state.",
       ids({"cause_analysis"})},
      {4, "Provide risk warnings and improvement suggestions based on the current public sentiment.",
       ids({"risk_assessment", "policy_suggestions"})},
      {5,
       "Separately analyze the causes and trends of the current emotions, adding corresponding titles at the "
       "beginning of paragraphs.",
       ids({"cause_analysis"})},
      {6, "Complete conclusions, associated words, and other elements.", ids({"associated_words", "conclusion"})},
      {7,
       "Produce the emotion distribution graph data as JSON in the chart_data section; do not call any image "
       "generation service.",
       ids({"chart_data"})},
      {8, kStep8,
       ids({"introduction", "summary", "cause_analysis", "risk_assessment", "policy_suggestions", "associated_words",
            "conclusion", "chart_data"})},
  };
  return steps;
}

const std::vector<ThinkingStep>& url_thinking_steps() {
  static const std::vector<ThinkingStep> steps = {
      {1, thinking_steps()[0].instruction, ids({"introduction"})},
      {2, thinking_steps()[1].instruction, ids({"summary"})},
      {6, "Complete conclusions and other elements for this single document.", ids({"conclusion"})},
      {8, kStep8, ids({"introduction", "summary", "conclusion"})},
  };
  return steps;
}

std::string corrective_instruction(std::span<const std::string> missing) {
  return "Your previous answer omitted the required sections " + join(missing, ", ") +
         ". Answer again and emit every required section between its markers.";
}

std::string RenderedStep::user_prompt(const SectionEnvelope& prior) const {
  std::string middle;
  for (const auto& [id, text] : prior) {
    middle += "<<PRIOR:" + id + ">>\n" + text + "\n<<ENDPRIOR>>\n";
  }
  if (!middle.empty()) middle = "Sections written so far:\n" + middle;
  return head + middle + tail;
}

DocExcerpt excerpt_documents(std::span<const ScoredDocument> docs, size_t max_docs, size_t max_chars_per_doc) {
  std::vector<const ScoredDocument*> order;
  for (const auto& d : docs) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    const double sa = std::fabs(a->sentiment.score), sb = std::fabs(b->sentiment.score);
    if (sa != sb) return sa > sb;
    return a->url < b->url;
  });
  std::set<std::string> seen;
  std::deque<const ScoredDocument*> positive, other;
  for (const auto* d : order) {
    if (!seen.insert(d->text).second) continue;
    (d->sentiment.score > 0.0 ? positive : other).push_back(d);
  }
  order.clear();
  bool take_positive = !positive.empty() && (other.empty() || std::fabs(positive.front()->sentiment.score) >=
                                                                   std::fabs(other.front()->sentiment.score));
  while (order.size() < max_docs && (!positive.empty() || !other.empty())) {
    auto& pool = (take_positive && !positive.empty()) || other.empty() ? positive : other;
    order.push_back(pool.front());
    pool.pop_front();
    take_positive = !take_positive;
  }
  DocExcerpt out;
  for (const auto* d : order) {
    out.text += "<<DOC url=\"" + attr_escape(d->url) + "\" source=\"" + attr_escape(d->source_id) +
                "\" confidence=\"" + std::string(to_string(d->timestamp_confidence)) + "\" score=\"" +
                fixed6(d->sentiment.score) + "\">>\n";
    out.text += cut(sanitize(d->text), max_chars_per_doc) + "\n<<ENDDOC>>\n";
  }
  out.docs = std::move(order);
  return out;
}

std::string excerpt_records(std::span<const DailyRecord> records, size_t max_chars) {
  if (max_chars < 200) throw Error(ErrorCode::BadArgument, "records excerpt budget must be at least 200 characters");
  std::vector<const DailyRecord*> newest_first;
  for (const auto& r : records) newest_first.push_back(&r);
  std::stable_sort(newest_first.begin(), newest_first.end(), [](const auto* a, const auto* b) { return a->day > b->day; });
  std::string out;
  for (const auto* r : newest_first) {
    std::string terms;
    for (size_t i = 0; i < r->top_terms.size() && i < 3; ++i) terms += (i ? "," : "") + r->top_terms[i].term;
    std::string line = r->day.to_string() + "|" + fixed6(r->combined.score) + "|" + fixed6(r->combined.polarity) +
                       "|" + fixed6(r->combined.subjectivity) + "|" + terms + "\n";
    if (out.size() + line.size() > max_chars) break;
    out += line;
  }
  return out;
}

std::vector<RenderedStep> render_thinking_steps(const AnalysisRequest& request, std::string_view records_excerpt,
                                                std::string_view docs_excerpt, const PromptOptions& options) {
  const std::string role = render_role_prompt(options.role);
  std::vector<RenderedStep> out;
  for (const auto& step : thinking_steps()) {
    RenderedStep r{step, role, request_header(request, step), tail_for(step, 8)};
    const bool wants_docs = step.index <= 6;
    const bool wants_records = step.index >= 2 && step.index <= 7;
    if (wants_records) r.head += records_block(records_excerpt);
    if (wants_docs) r.head += docs_block(docs_excerpt);
    check_budget(r, options);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RenderedStep> render_url_steps(const AnalysisRequest& request, std::string_view doc_excerpt,
                                           const PromptOptions& options) {
  const std::string role = render_role_prompt(options.role);
  std::vector<RenderedStep> out;
  for (const auto& step : url_thinking_steps()) {
    RenderedStep r{step, role, request_header(request, step), tail_for(step, 8)};
    if (step.index != 8) r.head += docs_block(doc_excerpt);
    check_budget(r, options);
    out.push_back(std::move(r));
  }
  return out;
}

SectionEnvelope parse_sections(std::string_view llm_output, std::span<const std::string> expected) {
  static constexpr std::string_view kOpen = "<<SECTION:";
  static constexpr std::string_view kEnd = "<<END>>";
  SectionEnvelope out;
  size_t pos = 0;
  while (true) {
    const size_t open = llm_output.find(kOpen, pos);
    if (open == std::string_view::npos) break;
    const size_t close = llm_output.find(">>", open + kOpen.size());
    if (close == std::string_view::npos) throw Error(ErrorCode::MalformedMarkers, "unterminated section marker");
    const std::string id(llm_output.substr(open + kOpen.size(), close - open - kOpen.size()));
    if (!is_section_id(id)) throw Error(ErrorCode::MalformedMarkers, "unknown section id '" + id + "'");
    if (std::find(expected.begin(), expected.end(), id) == expected.end()) {
      throw Error(ErrorCode::MalformedMarkers, "unexpected section '" + id + "'");
    }
    if (out.contains(id)) throw Error(ErrorCode::MalformedMarkers, "duplicate section '" + id + "'");
    const size_t body = close + 2;
    const size_t end = llm_output.find(kEnd, body);
    const size_t next = llm_output.find(kOpen, body);
    if (end == std::string_view::npos || (next != std::string_view::npos && next < end)) {
      throw Error(ErrorCode::MalformedMarkers, "section '" + id + "' has no closing <<END>>");
    }
    out[id] = trim(llm_output.substr(body, end - body));
    pos = end + kEnd.size();
  }
  std::vector<std::string> missing;
  for (const auto& id : expected) {
    if (!out.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingSection, "missing sections: " + join(missing, ", "));
  return out;
}

std::vector<std::string> missing_sections(std::string_view llm_output, std::span<const std::string> expected) {
  std::vector<std::string> missing;
  for (const auto& id : expected) {
    if (llm_output.find("<<SECTION:" + id + ">>") == std::string_view::npos) missing.push_back(id);
  }
  return missing;
}

std::string request_extraction_prompt(std::string_view message) {
  return "<<TASK:extract_request>>\nMessage: " + sanitize(message) +
         "\nReturn only a JSON object describing the analysis request, with keys keyword (string), synonyms "
         "(array of strings, optional), window (object with start and end as YYYY-MM-DD, optional) and kind "
         "(past, present or future).";
}

}  // namespace oracleloom
