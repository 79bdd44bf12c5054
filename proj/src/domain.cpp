#include "oracleloom/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_set>

#include "oracleloom/error.hpp"

namespace oracleloom {

SourceWeights normalize_weights(const SourceWeights& raw) {
  double total = 0.0;
  for (const auto& [id, w] : raw) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::InvalidRequest, "source weight for '" + id + "' must be a non-negative real");
    }
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::AllZero, "all source weights are zero");
  SourceWeights out;
  for (const auto& [id, w] : raw) out.emplace(id, w / total);
  return out;
}

ScoreWeights::ScoreWeights(double raw_polarity, double raw_subjectivity) {
  if (!std::isfinite(raw_polarity) || !std::isfinite(raw_subjectivity) || raw_polarity < 0.0 ||
      raw_subjectivity < 0.0) {
    throw Error(ErrorCode::InvalidRequest, "score weights must be non-negative reals");
  }
  const double total = raw_polarity + raw_subjectivity;
  if (!(total > 0.0)) throw Error(ErrorCode::AllZero, "score weights w_p and w_s are both zero");
  w_p_ = raw_polarity / total;
  w_s_ = raw_subjectivity / total;
}

Json ScoreWeights::to_json() const { return Json{{"w_p", w_p_}, {"w_s", w_s_}}; }

ScoreWeights ScoreWeights::from_json(const Json& j) {
  if (!j.is_object() || !j.contains("w_p") || !j.contains("w_s") || !j["w_p"].is_number() ||
      !j["w_s"].is_number()) {
    throw Error(ErrorCode::InvalidRequest, "score_weights needs numeric w_p and w_s");
  }
  return ScoreWeights(j["w_p"].get<double>(), j["w_s"].get<double>());
}

std::string_view to_string(SourceCategory c) {
  switch (c) {
    case SourceCategory::OfficialMedia: return "official_media";
    case SourceCategory::SearchEngine: return "search_engine";
    case SourceCategory::SocialMedia: return "social_media";
  }
  return "official_media";
}

SourceCategory source_category_from_string(std::string_view s) {
  if (s == "official_media") return SourceCategory::OfficialMedia;
  if (s == "search_engine") return SourceCategory::SearchEngine;
  if (s == "social_media") return SourceCategory::SocialMedia;
  throw Error(ErrorCode::BadConfig, "unknown source category '" + std::string(s) + "'");
}

SourceRegistry::SourceRegistry(std::vector<SourceProfile> profiles) : profiles_(std::move(profiles)) {
  std::set<std::string> seen;
  for (const auto& p : profiles_) {
    if (p.id.empty()) throw Error(ErrorCode::BadConfig, "source id must be non-empty");
    if (!seen.insert(p.id).second) throw Error(ErrorCode::BadConfig, "duplicate source id '" + p.id + "'");
    if (!(p.default_weight >= 0.0)) {
      throw Error(ErrorCode::BadConfig, "source '" + p.id + "' has a negative default weight");
    }
  }
}

const SourceProfile* SourceRegistry::find(std::string_view id) const {
  for (const auto& p : profiles_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

SourceWeights SourceRegistry::default_weights() const {
  SourceWeights out;
  for (const auto& p : profiles_) out.emplace(p.id, p.default_weight);
  return out;
}

std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::Past: return "past";
    case ReportKind::Present: return "present";
    case ReportKind::Future: return "future";
    case ReportKind::Url: return "url";
  }
  return "present";
}

ReportKind report_kind_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "past") return ReportKind::Past;
  if (lower == "present") return ReportKind::Present;
  if (lower == "future") return ReportKind::Future;
  if (lower == "url") return ReportKind::Url;
  throw Error(ErrorCode::InvalidRequest, "unknown report kind '" + std::string(s) + "'");
}

bool is_absolute_url(std::string_view url) {
  static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://[^\s/?#]+[^\s]*$)");
  return std::regex_match(url.begin(), url.end(), re);
}

AnalysisRequest AnalysisRequest::create(RequestFields f) {
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string{};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  f.keyword = trim(std::move(f.keyword));
  if (f.keyword.empty()) throw Error(ErrorCode::NoKeyword, "keyword must be non-empty");
  if (f.window.end < f.window.start) {
    throw Error(ErrorCode::BadDate, "window start " + f.window.start.to_string() + " is after end " +
                                        f.window.end.to_string());
  }
  if (f.kind == ReportKind::Url) {
    if (!f.url || !is_absolute_url(*f.url)) {
      throw Error(ErrorCode::InvalidRequest, "url reports need an absolute url");
    }
  } else if (f.url) {
    throw Error(ErrorCode::InvalidRequest, "url is only allowed for url reports");
  }
  if (!f.source_weights.empty()) normalize_weights(f.source_weights);  // validates
  std::vector<std::string> synonyms;
  for (auto& s : f.synonyms) {
    s = trim(std::move(s));
    if (!s.empty()) synonyms.push_back(std::move(s));
  }
  f.synonyms = std::move(synonyms);
  return AnalysisRequest(std::move(f));
}

Json AnalysisRequest::to_json() const {
  Json j;
  j["keyword"] = f_.keyword;
  j["synonyms"] = f_.synonyms;
  j["window"] = {{"start", f_.window.start.to_string()}, {"end", f_.window.end.to_string()}};
  j["kind"] = std::string(to_string(f_.kind));
  if (f_.url) j["url"] = *f_.url;
  Json sw = Json::object();
  for (const auto& [id, w] : f_.source_weights) sw[id] = w;
  j["source_weights"] = sw;
  j["score_weights"] = f_.score_weights.to_json();
  j["show_urls"] = f_.show_urls;
  return j;
}

AnalysisRequest AnalysisRequest::from_json(const Json& j, const RequestFields& defaults) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
  RequestFields f = defaults;
  try {
    f.keyword = j.value("keyword", std::string{});
    f.synonyms = j.value("synonyms", std::vector<std::string>{});
    if (j.contains("window")) {
      const auto& w = j.at("window");
      auto start = Date::parse(w.at("start").get<std::string>());
      auto end = Date::parse(w.at("end").get<std::string>());
      if (!start || !end) throw Error(ErrorCode::BadDate, "window dates must be YYYY-MM-DD calendar dates");
      f.window = {*start, *end};
    }
    if (j.contains("kind")) f.kind = report_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("url") && !j.at("url").is_null()) {
      f.url = j.at("url").get<std::string>();
    } else {
      f.url.reset();
    }
    if (j.contains("source_weights")) {
      f.source_weights.clear();
      for (const auto& [id, w] : j.at("source_weights").items()) f.source_weights[id] = w.get<double>();
    }
    if (j.contains("score_weights")) f.score_weights = ScoreWeights::from_json(j.at("score_weights"));
    if (j.contains("show_urls")) f.show_urls = j.at("show_urls").get<bool>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidRequest, std::string("malformed request: ") + e.what());
  }
  return create(std::move(f));
}

bool AnalysisRequest::operator==(const AnalysisRequest& o) const {
  return canonical_dump(to_json()) == canonical_dump(o.to_json());
}

DateRange default_window(Date today) { return {today - (kDefaultWindowDays - 1), today}; }

// ---------------------------------------------------------------------------
// parse_query

namespace {

struct Word {
  std::string text;   // original casing, surrounding punctuation stripped
  std::string lower;  // lowercased `text`
  bool ends_clause = false;
};

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_clause_punct(char c) { return c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?'; }

std::vector<Word> split_words(std::string_view message) {
  std::vector<Word> words;
  size_t i = 0;
  while (i < message.size()) {
    while (i < message.size() && std::isspace(static_cast<unsigned char>(message[i]))) ++i;
    size_t j = i;
    while (j < message.size() && !std::isspace(static_cast<unsigned char>(message[j]))) ++j;
    if (j == i) break;
    std::string_view raw = message.substr(i, j - i);
    i = j;
    Word w;
    size_t b = 0, e = raw.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(raw[b])) &&
           static_cast<unsigned char>(raw[b]) < 0x80) {
      ++b;
    }
    while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1])) &&
           static_cast<unsigned char>(raw[e - 1]) < 0x80) {
      if (is_clause_punct(raw[e - 1])) w.ends_clause = true;
      --e;
    }
    if (b == e) {
      if (!words.empty() && w.ends_clause) words.back().ends_clause = true;
      continue;
    }
    w.text = std::string(raw.substr(b, e - b));
    w.lower = to_lower(w.text);
    words.push_back(std::move(w));
  }
  return words;
}

std::optional<unsigned> month_number(std::string_view word) {
  static const char* kMonths[] = {"january", "february", "march",     "april",   "may",      "june",
                                  "july",    "august",   "september", "october", "november", "december"};
  std::string w(word);
  if (!w.empty() && w.back() == '.') w.pop_back();
  if (w.size() < 3) return std::nullopt;
  if (w == "sept") return 9u;
  for (unsigned m = 0; m < 12; ++m) {
    std::string_view full = kMonths[m];
    if (w == full || (w.size() == 3 && full.substr(0, 3) == w)) return m + 1;
  }
  return std::nullopt;
}

std::optional<int> day_number(std::string_view word) {
  static const std::regex re(R"(^(\d{1,2})(st|nd|rd|th)?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(word.begin(), word.end(), m, re)) return std::nullopt;
  return std::stoi(m[1].str());
}

bool looks_like_date(const Word& w) {
  return std::isdigit(static_cast<unsigned char>(w.lower[0])) || month_number(w.lower).has_value();
}

Date checked_date(int y, int m, int d, std::string_view phrase) {
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (m < 1 || m > 12 || d < 1 || !ymd.ok()) {
    throw Error(ErrorCode::BadDate, "'" + std::string(phrase) + "' is not a valid calendar date");
  }
  return Date{std::chrono::sys_days{ymd}};
}

/// Parses a date starting at words[i]; returns the date and number of words used.
std::pair<Date, size_t> parse_date_at(const std::vector<Word>& words, size_t i) {
  const std::string& first = words[i].lower;
  static const std::regex iso(R"(^(\d{4})-(\d{1,2})-(\d{1,2})$)");
  std::smatch m;
  if (std::regex_match(first, m, iso)) {
    return {checked_date(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), first), 1};
  }
  auto is_year = [](const std::string& s) {
    return s.size() == 4 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
  };
  if (i + 2 < words.size()) {
    // "October 1, 2019"
    if (auto month = month_number(first)) {
      if (auto day = day_number(words[i + 1].lower); day && is_year(words[i + 2].lower)) {
        return {checked_date(std::stoi(words[i + 2].lower), static_cast<int>(*month), *day,
                             first + " " + words[i + 1].lower + " " + words[i + 2].lower),
                3};
      }
    }
    // "1 October 2019"
    if (auto day = day_number(first)) {
      if (auto month = month_number(words[i + 1].lower); month && is_year(words[i + 2].lower)) {
        return {checked_date(std::stoi(words[i + 2].lower), static_cast<int>(*month), *day,
                             first + " " + words[i + 1].lower + " " + words[i + 2].lower),
                3};
      }
    }
  }
  throw Error(ErrorCode::BadDate, "cannot parse a date at '" + words[i].text + "'");
}

const std::unordered_set<std::string>& keyword_terminators() {
  static const std::unordered_set<std::string> kSet = {
      "from", "since", "until", "till", "to",   "between", "during", "for",
      "over", "with",  "using", "in",   "within", "starting", "please", "and"};
  return kSet;
}

std::string longest_quoted(std::string_view message) {
  std::string best;
  // ASCII double quotes and UTF-8 curly quotes (U+201C / U+201D).
  static const std::regex re("\"([^\"]+)\"|\xE2\x80\x9C(.+?)\xE2\x80\x9D");
  std::string msg(message);
  for (auto it = std::sregex_iterator(msg.begin(), msg.end(), re); it != std::sregex_iterator(); ++it) {
    std::string s = (*it)[1].matched ? (*it)[1].str() : (*it)[2].str();
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    s = s.substr(b, s.find_last_not_of(" \t") - b + 1);
    if (s.size() > best.size()) best = s;
  }
  return best;
}

}  // namespace

AnalysisRequest parse_query(std::string_view message, const SourceRegistry& registry, Date today,
                            const ScoreWeights& score_weights, bool show_urls) {
  if (message.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::NoKeyword, "empty message");
  }

  std::optional<std::string> url;
  std::string scrubbed(message);
  {
    static const std::regex url_re(R"(https?://[^\s"'<>]+)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(scrubbed, m, url_re)) {
      std::string u = m.str();
      while (!u.empty() && (is_clause_punct(u.back()) || u.back() == ')')) u.pop_back();
      url = u;
      scrubbed.replace(static_cast<size_t>(m.position()), static_cast<size_t>(m.length()), " , ");
    }
  }

  const auto words = split_words(scrubbed);

  ReportKind kind = ReportKind::Present;
  bool report_class = true;
  for (const auto& w : words) {
    static const std::unordered_set<std::string> future = {"predict",  "predicts", "prediction",
                                                           "forecast", "trend",    "trends"};
    static const std::unordered_set<std::string> present = {"report", "analysis", "analyse",
                                                            "analyze", "summary", "summarize"};
    if (future.contains(w.lower)) {
      kind = ReportKind::Future;
      report_class = false;
      break;
    }
    if (present.contains(w.lower)) break;
  }

  // Date clauses: "from|since <date> [to|until|till|through <date>]",
  // "between <date> and <date>".
  std::optional<Date> start, end;
  std::vector<bool> consumed(words.size(), false);
  for (size_t i = 0; i + 1 < words.size(); ++i) {
    const std::string& w = words[i].lower;
    const bool opener = w == "from" || w == "since" || w == "between";
    const bool closer = w == "to" || w == "until" || w == "till" || w == "through" ||
                        (w == "and" && start.has_value() && !end.has_value());
    if (!opener && !closer) continue;
    if (!looks_like_date(words[i + 1])) continue;
    if (closer && !start) continue;
    auto [date, used] = parse_date_at(words, i + 1);
    if (opener) {
      start = date;
    } else {
      end = date;
    }
    for (size_t k = i; k <= i + used; ++k) consumed[k] = true;
    i += used;
  }

  std::string keyword = longest_quoted(message);
  if (keyword.empty()) {
    for (size_t i = 0; i < words.size(); ++i) {
      if (consumed[i] || (words[i].lower != "on" && words[i].lower != "of")) continue;
      if (words[i].ends_clause) continue;
      std::vector<std::string> phrase;
      for (size_t k = i + 1; k < words.size(); ++k) {
        if (consumed[k] || keyword_terminators().contains(words[k].lower)) break;
        phrase.push_back(words[k].text);
        if (words[k].ends_clause) break;
      }
      static const std::unordered_set<std::string> articles = {"the", "a", "an"};
      while (!phrase.empty() && articles.contains(to_lower(phrase.front()))) phrase.erase(phrase.begin());
      if (phrase.empty()) continue;
      std::string candidate;
      for (const auto& p : phrase) {
        if (!candidate.empty()) candidate.push_back(' ');
        candidate += p;
      }
      keyword = candidate;
    }
  }
  if (keyword.empty() && url) {
    static const std::regex host_re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://([^/?#:]+))");
    std::smatch m;
    if (std::regex_search(*url, m, host_re)) keyword = m[1].str();
  }
  if (keyword.empty()) throw Error(ErrorCode::NoKeyword, "no keyword phrase found in message");

  DateRange window = default_window(today);
  bool explicit_end = false;
  if (start) {
    window.start = *start;
    window.end = end.value_or(today);
    explicit_end = end.has_value();
    if (window.end < window.start) {
      throw Error(ErrorCode::BadDate, "date range " + window.start.to_string() + " .. " +
                                          window.end.to_string() + " is reversed");
    }
  }

  if (url) {
    kind = ReportKind::Url;
  } else if (report_class && explicit_end && window.end < today) {
    kind = ReportKind::Past;
  }

  RequestFields f;
  f.keyword = keyword;
  f.window = window;
  f.kind = kind;
  f.url = url;
  f.source_weights = registry.default_weights();
  f.score_weights = score_weights;
  f.show_urls = show_urls;
  return AnalysisRequest::create(std::move(f));
}

}  // namespace oracleloom
