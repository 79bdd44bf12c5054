#include "oracleloom/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "oracleloom/error.hpp"

namespace oracleloom {

namespace {

bool is_token_byte(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

double parse_real(std::string_view field, size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::BadLexicon, "line " + std::to_string(line_no) + ": '" + std::string(field) +
                                           "' is not a number");
  }
  return v;
}

std::string read_file(const std::filesystem::path& path, ErrorCode missing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(missing, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Lexicon::Lexicon(std::vector<LexiconEntry> entries) {
  for (auto& e : entries) {
    const bool bad_token = e.token.empty() || std::any_of(e.token.begin(), e.token.end(), [](unsigned char c) {
                             return std::isspace(c) || std::isupper(c);
                           });
    if (bad_token) throw Error(ErrorCode::BadLexicon, "invalid lexicon token '" + e.token + "'");
    if (!(e.polarity >= -1.0 && e.polarity <= 1.0) || !(e.subjectivity >= 0.0 && e.subjectivity <= 1.0) ||
        !(e.intensity > 0.0) || !std::isfinite(e.intensity)) {
      throw Error(ErrorCode::BadLexicon, "lexicon entry '" + e.token + "' has out-of-range values");
    }
    std::string key = e.token;
    entries_.insert_or_assign(std::move(key), std::move(e));
  }
}

Lexicon Lexicon::parse(std::string_view tsv) {
  std::vector<LexiconEntry> entries;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= tsv.size()) {
    size_t nl = tsv.find('\n', pos);
    std::string_view line = tsv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? tsv.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw Error(ErrorCode::BadLexicon, "line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    entries.push_back({std::string(fields[0]), parse_real(fields[1], line_no), parse_real(fields[2], line_no),
                       parse_real(fields[3], line_no)});
  }
  return Lexicon(std::move(entries));
}

Lexicon Lexicon::load(const std::filesystem::path& path) { return parse(read_file(path, ErrorCode::BadLexicon)); }

const LexiconEntry* Lexicon::find(const std::string& token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  StopwordSet out;
  std::istringstream in(read_file(path, ErrorCode::BadLexicon));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    for (auto& t : tokenize(line)) out.insert(std::move(t));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::string folded;
  folded.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    // U+2019 RIGHT SINGLE QUOTATION MARK -> '
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 && static_cast<unsigned char>(text[i + 2]) == 0x99) {
      folded.push_back('\'');
      i += 2;
      continue;
    }
    folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
  }

  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < folded.size()) {
    while (i < folded.size() && !is_token_byte(static_cast<unsigned char>(folded[i]))) ++i;
    size_t j = i;
    while (j < folded.size() && is_token_byte(static_cast<unsigned char>(folded[j]))) ++j;
    size_t b = i, e = j;
    while (b < e && folded[b] == '\'') ++b;
    while (e > b && folded[e - 1] == '\'') --e;
    if (e > b) tokens.emplace_back(folded.substr(b, e - b));
    i = j;
  }
  return tokens;
}

bool is_negator(std::string_view token) {
  return token == "not" || token == "no" || token == "never" || token == "cannot" ||
         (token.size() >= 3 && token.substr(token.size() - 3) == "n't");
}

SentimentScore score_document(std::string_view text, const Lexicon& lexicon) {
  if (lexicon.empty()) throw Error(ErrorCode::EmptyLexicon, "lexicon has no entries");
  const auto tokens = tokenize(text);
  double sum_p = 0.0;
  double sum_s = 0.0;
  int spans = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const LexiconEntry* entry = lexicon.find(tokens[i]);
    if (entry == nullptr || entry->is_modifier()) continue;
    double p = entry->polarity;
    double s = entry->subjectivity;
    bool negated = false;
    for (size_t back = 1; back <= kNegationLookback && back <= i; ++back) {
      if (is_negator(tokens[i - back])) negated = true;
    }
    if (negated) p *= kNegationMultiplier;
    if (i > 0) {
      const LexiconEntry* prev = lexicon.find(tokens[i - 1]);
      if (prev != nullptr && prev->is_modifier()) {
        p *= prev->intensity;
        s *= prev->intensity;
      }
    }
    sum_p += std::clamp(p, -1.0, 1.0);
    sum_s += std::clamp(s, 0.0, 1.0);
    ++spans;
  }
  SentimentScore out;
  if (spans > 0) {
    out.polarity = std::clamp(sum_p / spans, -1.0, 1.0);
    out.subjectivity = std::clamp(sum_s / spans, 0.0, 1.0);
    out.matched_terms = spans;
  }
  return out;
}

double combine_score(double polarity, double subjectivity, const ScoreWeights& w) {
  return w.w_p() * polarity + w.w_s() * subjectivity;
}

SentimentScore score_text(std::string_view text, const Lexicon& lexicon, const ScoreWeights& w) {
  SentimentScore s = score_document(text, lexicon);
  s.score = combine_score(s.polarity, s.subjectivity, w);
  return s;
}

std::string_view to_string(SentimentClass c) {
  switch (c) {
    case SentimentClass::Negative: return "negative";
    case SentimentClass::Neutral: return "neutral";
    case SentimentClass::Positive: return "positive";
  }
  return "neutral";
}

SentimentClass classify(double score, const Thresholds& t) {
  if (!(t.neg_max < t.pos_min)) throw Error(ErrorCode::BadThresholds, "neg_max must be below pos_min");
  if (score < t.neg_max) return SentimentClass::Negative;
  if (score > t.pos_min) return SentimentClass::Positive;
  return SentimentClass::Neutral;
}

std::string_view to_string(TimestampConfidence c) {
  return c == TimestampConfidence::Published ? "published" : "fetched";
}

TimestampConfidence timestamp_confidence_from_string(std::string_view s) {
  if (s == "published") return TimestampConfidence::Published;
  if (s == "fetched") return TimestampConfidence::Fetched;
  throw Error(ErrorCode::InvalidRequest, "unknown timestamp confidence '" + std::string(s) + "'");
}

Json ScoredDocument::to_json() const {
  return {
      {"url", url},
      {"source_id", source_id},
      {"published_at", format_rfc3339(published_at)},
      {"timestamp_confidence", std::string(to_string(timestamp_confidence))},
      {"polarity", sentiment.polarity},
      {"subjectivity", sentiment.subjectivity},
      {"score", sentiment.score},
      {"matched_terms", sentiment.matched_terms},
  };
}

std::unordered_set<std::string> keyword_tokens(std::string_view keyword, std::span<const std::string> synonyms) {
  std::unordered_set<std::string> out;
  for (auto& t : tokenize(keyword)) out.insert(std::move(t));
  for (const auto& s : synonyms) {
    for (auto& t : tokenize(s)) out.insert(std::move(t));
  }
  return out;
}

std::vector<TermCount> top_terms(std::span<const ScoredDocument> docs, const StopwordSet& stopwords, int k,
                                 const std::unordered_set<std::string>& excluded) {
  if (k < 1) throw Error(ErrorCode::BadArgument, "top_terms needs k >= 1");
  std::map<std::string, int> counts;
  for (const auto& d : docs) {
    for (auto& t : tokenize(d.text)) {
      if (stopwords.contains(t) || excluded.contains(t)) continue;
      ++counts[std::move(t)];
    }
  }
  std::vector<TermCount> all;
  all.reserve(counts.size());
  for (auto& [term, n] : counts) all.push_back({term, n});
  std::stable_sort(all.begin(), all.end(),
                   [](const TermCount& a, const TermCount& b) { return a.frequency > b.frequency; });
  if (all.size() > static_cast<size_t>(k)) all.resize(static_cast<size_t>(k));
  return all;
}

DailyRecord aggregate_daily(std::span<const ScoredDocument> docs, Date day, const SourceWeights& source_weights,
                            const AggregateOptions& options) {
  struct Acc {
    int n = 0;
    double p = 0, s = 0, c = 0;
    ClassCounts classes;
  };
  std::map<std::string, Acc> acc;
  for (const auto& d : docs) {
    if (day_of(d.published_at) != day) {
      throw Error(ErrorCode::DayMismatch, "document " + d.url + " is dated " + day_of(d.published_at).to_string() +
                                              ", not " + day.to_string());
    }
    auto& a = acc[d.source_id];
    ++a.n;
    a.p += d.sentiment.polarity;
    a.s += d.sentiment.subjectivity;
    a.c += d.sentiment.score;
    switch (classify(d.sentiment.score, options.thresholds)) {
      case SentimentClass::Positive: ++a.classes.positive; break;
      case SentimentClass::Neutral: ++a.classes.neutral; break;
      case SentimentClass::Negative: ++a.classes.negative; break;
    }
  }

  DailyRecord r;
  r.keyword = options.keyword;
  r.day = day;
  r.generated_at = options.generated_at;
  for (const auto& [id, a] : acc) {
    r.per_source[id] = {a.n, a.p / a.n, a.s / a.n, a.c / a.n, a.classes};
  }

  double total_weight = 0.0;
  for (const auto& [id, st] : r.per_source) {
    auto it = source_weights.find(id);
    if (it != source_weights.end()) total_weight += it->second;
  }
  for (const auto& [id, st] : r.per_source) {
    double w = 0.0;
    if (total_weight > 0.0) {
      auto it = source_weights.find(id);
      w = it == source_weights.end() ? 0.0 : it->second / total_weight;
    } else {
      w = 1.0 / static_cast<double>(r.per_source.size());
    }
    r.combined.polarity += w * st.polarity;
    r.combined.subjectivity += w * st.subjectivity;
    r.combined.score += w * st.score;
  }

  if (options.stopwords != nullptr) {
    r.top_terms = top_terms(docs, *options.stopwords, options.top_k, keyword_tokens(options.keyword, options.synonyms));
  } else {
    r.top_terms = top_terms(docs, StopwordSet{}, options.top_k, keyword_tokens(options.keyword, options.synonyms));
  }
  return r;
}

}  // namespace oracleloom
