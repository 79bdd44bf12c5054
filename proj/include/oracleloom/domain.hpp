#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oracleloom/canonical_json.hpp"
#include "oracleloom/time.hpp"

namespace oracleloom {

using SourceWeights = std::map<std::string, double>;

/// Returns raw/sum(raw). Throws AllZero when no weight is positive and
/// InvalidRequest on a negative or non-finite weight.
SourceWeights normalize_weights(const SourceWeights& raw);

/// Polarity/subjectivity weights of the combined score. Always normalized so
/// that w_p + w_s == 1.
class ScoreWeights {
 public:
  ScoreWeights() : ScoreWeights(0.7, 0.3) {}
  ScoreWeights(double raw_polarity, double raw_subjectivity);

  double w_p() const { return w_p_; }
  double w_s() const { return w_s_; }

  Json to_json() const;
  static ScoreWeights from_json(const Json& j);

  bool operator==(const ScoreWeights&) const = default;

 private:
  double w_p_;
  double w_s_;
};

enum class SourceCategory { OfficialMedia, SearchEngine, SocialMedia };

std::string_view to_string(SourceCategory c);
SourceCategory source_category_from_string(std::string_view s);

struct SourceProfile {
  std::string id;
  SourceCategory category = SourceCategory::OfficialMedia;
  double default_weight = 1.0;
  std::string locale = "en-US";
};

/// Ordered set of source profiles with unique ids.
class SourceRegistry {
 public:
  SourceRegistry() = default;
  explicit SourceRegistry(std::vector<SourceProfile> profiles);

  const std::vector<SourceProfile>& profiles() const { return profiles_; }
  const SourceProfile* find(std::string_view id) const;
  bool empty() const { return profiles_.empty(); }

  /// Raw default weights keyed by source id.
  SourceWeights default_weights() const;

 private:
  std::vector<SourceProfile> profiles_;
};

enum class ReportKind { Past, Present, Future, Url };

std::string_view to_string(ReportKind k);
ReportKind report_kind_from_string(std::string_view s);

struct RequestFields {
  std::string keyword;
  std::vector<std::string> synonyms;
  DateRange window;
  ReportKind kind = ReportKind::Present;
  std::optional<std::string> url;
  SourceWeights source_weights;
  ScoreWeights score_weights;
  bool show_urls = true;
};

bool is_absolute_url(std::string_view url);

/// A validated analysis query. Immutable once constructed.
class AnalysisRequest {
 public:
  /// Validates every invariant; throws Error(BadDate / InvalidRequest / AllZero).
  static AnalysisRequest create(RequestFields fields);

  const std::string& keyword() const { return f_.keyword; }
  const std::vector<std::string>& synonyms() const { return f_.synonyms; }
  const DateRange& window() const { return f_.window; }
  ReportKind kind() const { return f_.kind; }
  const std::optional<std::string>& url() const { return f_.url; }
  const SourceWeights& source_weights() const { return f_.source_weights; }
  const ScoreWeights& score_weights() const { return f_.score_weights; }
  bool show_urls() const { return f_.show_urls; }
  const RequestFields& fields() const { return f_; }

  Json to_json() const;
  /// Missing optional members fall back to `defaults` (window, weights, show_urls).
  static AnalysisRequest from_json(const Json& j, const RequestFields& defaults);

  bool operator==(const AnalysisRequest& o) const;

 private:
  explicit AnalysisRequest(RequestFields f) : f_(std::move(f)) {}
  RequestFields f_;
};

/// Days covered by the default window, ending today.
inline constexpr int kDefaultWindowDays = 14;

DateRange default_window(Date today);

/// Rule-based chat query parser. Deterministic for a given message, registry,
/// and `today`.
///
/// * "predict" / "trend" select Future; "report" / "analysis" select Present,
///   or Past when an explicit window ends before today. A message containing an
///   absolute http(s) URL selects Url.
/// * keyword: the longest quoted phrase, else the phrase after the last
///   "on"/"of" up to a date clause or punctuation, leading articles dropped.
/// * dates: "from <date>" [ "to|until <date>" ], "since <date>"; ISO dates and
///   "October 1, 2019" / "1 October 2019" forms.
AnalysisRequest parse_query(std::string_view message, const SourceRegistry& registry, Date today,
                            const ScoreWeights& score_weights = {}, bool show_urls = true);

}  // namespace oracleloom
