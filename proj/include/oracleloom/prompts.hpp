#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oracleloom/daily_record.hpp"
#include "oracleloom/domain.hpp"
#include "oracleloom/sentiment.hpp"

namespace oracleloom {

// Section ids of a complete report, in presentation order.
inline constexpr std::array<std::string_view, 8> kSectionIds = {
    "introduction",     "summary",          "cause_analysis", "risk_assessment",
    "policy_suggestions", "associated_words", "conclusion",     "chart_data"};

inline constexpr std::array<std::string_view, 4> kUrlSectionIds = {"introduction", "summary", "conclusion",
                                                                   "chart_data"};

bool is_section_id(std::string_view id);

using SectionEnvelope = std::map<std::string, std::string>;

/// Four-clause system prompt framing the analyst persona.
struct RolePrompt {
  std::string dramaturgical;
  std::string goal_oriented;
  std::string normative;
  std::string communicative;

  static RolePrompt standard();
};

/// Numbered clauses in fixed order. Throws EmptyClause.
std::string render_role_prompt(const RolePrompt& role);

struct ThinkingStep {
  int index = 0;
  std::string instruction;
  std::vector<std::string> expected_sections;
};

/// The eight-step sequence for past/present/future reports.
const std::vector<ThinkingStep>& thinking_steps();
/// Steps 1, 2, 6, 8 re-targeted at the single-document section set.
const std::vector<ThinkingStep>& url_thinking_steps();

/// Closing sentence appended after a MissingSection reply.
std::string corrective_instruction(std::span<const std::string> missing);

/// One step's prompt. The user prompt is `head + prior sections + tail`; the
/// tail carries the output format and ends with the step instruction.
struct RenderedStep {
  ThinkingStep step;
  std::string system_prompt;
  std::string head;
  std::string tail;

  std::string user_prompt() const { return head + tail; }
  /// User prompt with earlier sections quoted as `<<PRIOR:id>>` blocks.
  std::string user_prompt(const SectionEnvelope& prior) const;
  /// system + user, the text whose size is budgeted.
  std::string full_text() const { return system_prompt + "\n\n" + user_prompt(); }
};

struct PromptOptions {
  RolePrompt role = RolePrompt::standard();
  /// Estimated (whitespace) token ceiling for one rendered prompt.
  int max_prompt_tokens = 8000;
};

/// Documents quoted to the model, in the order they appear in the prompt.
struct DocExcerpt {
  std::string text;
  std::vector<const ScoredDocument*> docs;
};

/// Ranks documents by |score| desc then url, drops repeated texts, and takes
/// up to `max_docs` alternating between the positive and the non-positive
/// ranking (starting with whichever leads). Quotes at most
/// `max_chars_per_doc` characters of each, cut at a word boundary.
DocExcerpt excerpt_documents(std::span<const ScoredDocument> docs, size_t max_docs, size_t max_chars_per_doc);

/// `day|score|polarity|subjectivity|top3` lines, newest first, stopping at
/// the first line that would push the text past `max_chars`. Throws
/// BadArgument when max_chars < 200.
std::string excerpt_records(std::span<const DailyRecord> records, size_t max_chars);

/// Eight prompts in step order, each carrying only the context its step
/// needs. Throws BudgetExceeded when a prompt is estimated over the ceiling.
std::vector<RenderedStep> render_thinking_steps(const AnalysisRequest& request, std::string_view records_excerpt,
                                                std::string_view docs_excerpt, const PromptOptions& options = {});

/// The condensed sequence for single-URL reports.
std::vector<RenderedStep> render_url_steps(const AnalysisRequest& request, std::string_view doc_excerpt,
                                           const PromptOptions& options = {});

/// Extracts `<<SECTION:id>> ... <<END>>` bodies (trimmed). Throws
/// MalformedMarkers on an unterminated, nested, duplicate, unknown or
/// unexpected section and MissingSection naming every absent expected id.
SectionEnvelope parse_sections(std::string_view llm_output, std::span<const std::string> expected);

/// Expected ids with no opening marker in the output.
std::vector<std::string> missing_sections(std::string_view llm_output, std::span<const std::string> expected);

/// Prompt for the chat fallback that asks the model for request JSON.
std::string request_extraction_prompt(std::string_view message);

}  // namespace oracleloom
