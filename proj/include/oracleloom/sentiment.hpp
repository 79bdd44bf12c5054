#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "oracleloom/daily_record.hpp"
#include "oracleloom/domain.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom {

struct LexiconEntry {
  std::string token;
  double polarity = 0.0;
  double subjectivity = 0.0;
  /// Multiplier applied to the following entry; 1.0 means the entry scores on its own.
  double intensity = 1.0;

  bool is_modifier() const { return intensity != 1.0; }
};

/// Read-only token -> entry table.
class Lexicon {
 public:
  Lexicon() = default;
  /// Validates each entry; throws BadLexicon on out-of-range values or a
  /// token that is empty, contains whitespace, or is not lowercase.
  explicit Lexicon(std::vector<LexiconEntry> entries);

  /// Tab-separated `token polarity subjectivity intensity`, `#` comments.
  static Lexicon load(const std::filesystem::path& path);
  static Lexicon parse(std::string_view tsv);

  const LexiconEntry* find(const std::string& token) const;
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::unordered_map<std::string, LexiconEntry> entries_;
};

using StopwordSet = std::unordered_set<std::string>;
StopwordSet load_stopwords(const std::filesystem::path& path);

/// Lowercases ASCII, splits on runs of characters that are neither
/// alphanumeric nor apostrophes, and trims apostrophes at token edges. Bytes
/// >= 0x80 are kept inside tokens; U+2019 is folded to an ASCII apostrophe.
std::vector<std::string> tokenize(std::string_view text);

bool is_negator(std::string_view token);

inline constexpr double kNegationMultiplier = -0.5;
inline constexpr int kNegationLookback = 2;

struct SentimentScore {
  double polarity = 0.0;
  double subjectivity = 0.0;
  double score = 0.0;
  int matched_terms = 0;
};

/// Mean polarity/subjectivity over lexicon spans. `score` is left at zero;
/// see score_text() for the weighted form. Throws EmptyLexicon.
SentimentScore score_document(std::string_view text, const Lexicon& lexicon);

/// w_p * polarity + w_s * subjectivity, evaluated in that order.
double combine_score(double polarity, double subjectivity, const ScoreWeights& w);

SentimentScore score_text(std::string_view text, const Lexicon& lexicon, const ScoreWeights& w);

enum class SentimentClass { Negative, Neutral, Positive };
std::string_view to_string(SentimentClass c);

struct Thresholds {
  double neg_max = -0.05;
  double pos_min = 0.05;
};

/// score < neg_max -> Negative, score > pos_min -> Positive, otherwise Neutral.
/// Throws BadThresholds unless neg_max < pos_min.
SentimentClass classify(double score, const Thresholds& t = {});

enum class TimestampConfidence { Published, Fetched };
std::string_view to_string(TimestampConfidence c);
TimestampConfidence timestamp_confidence_from_string(std::string_view s);

struct ScoredDocument {
  std::string url;
  std::string source_id;
  Timestamp published_at{};
  TimestampConfidence timestamp_confidence = TimestampConfidence::Published;
  std::string text;
  SentimentScore sentiment;

  Json to_json() const;
};

struct AggregateOptions {
  std::string keyword;
  /// Extra tokens excluded from top terms (keyword and synonym words are
  /// always excluded).
  std::vector<std::string> synonyms;
  const StopwordSet* stopwords = nullptr;
  int top_k = 10;
  Thresholds thresholds;
  Timestamp generated_at{};
};

/// Per-source means and the source-weighted combination for one day. Weights
/// are renormalized over the sources that have documents; if none of those
/// carries weight, they are averaged equally. Throws DayMismatch.
DailyRecord aggregate_daily(std::span<const ScoredDocument> docs, Date day, const SourceWeights& source_weights,
                            const AggregateOptions& options);

/// Top-k (term, frequency) pairs ordered by frequency desc, term asc, after
/// removing stopwords and `excluded` tokens.
std::vector<TermCount> top_terms(std::span<const ScoredDocument> docs, const StopwordSet& stopwords, int k,
                                 const std::unordered_set<std::string>& excluded = {});

/// Lowercased tokens of the keyword and synonyms, excluded from term counts.
std::unordered_set<std::string> keyword_tokens(std::string_view keyword, std::span<const std::string> synonyms);

}  // namespace oracleloom
