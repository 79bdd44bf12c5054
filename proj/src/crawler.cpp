#include "oracleloom/crawler.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_map>

#include "oracleloom/error.hpp"
#include "oracleloom/http_client.hpp"

namespace oracleloom {

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string read_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FixtureMissing, "fixture not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RawDocument> parse_document_lines(std::string_view text, const std::string& origin,
                                              std::optional<Timestamp> fetched_default) {
  std::vector<RawDocument> docs;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      docs.push_back(RawDocument::from_json(Json::parse(line), fetched_default));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::BadFixture, origin + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::BadFixture, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<RawDocument> parse_documents(std::string_view text, const std::string& origin,
                                         std::optional<Timestamp> fetched_default = std::nullopt) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') {
    std::vector<RawDocument> docs;
    try {
      for (const auto& item : Json::parse(text)) docs.push_back(RawDocument::from_json(item, fetched_default));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::BadFixture, origin + ": " + e.what());
    }
    return docs;
  }
  return parse_document_lines(text, origin, fetched_default);
}

bool time_url_less(const RawDocument& a, const RawDocument& b) {
  if (a.effective_time() != b.effective_time()) return a.effective_time() < b.effective_time();
  return a.url < b.url;
}

/// Keyword/window filter, ordering, and per-day quota shared by both modes.
std::vector<RawDocument> select(std::vector<RawDocument> docs, const SourceAdapterConfig& config,
                                const FetchQuery& query) {
  std::vector<RawDocument> kept;
  for (auto& d : docs) {
    d.source_id = config.source_id;
    if (!query.window.contains(day_of(d.effective_time()))) continue;
    if (!matches_keyword(d, query)) continue;
    kept.push_back(std::move(d));
  }
  std::stable_sort(kept.begin(), kept.end(), time_url_less);
  std::vector<RawDocument> out;
  std::map<Date, int> per_day;
  for (auto& d : kept) {
    int& n = per_day[day_of(d.effective_time())];
    if (n >= config.max_docs_per_day) continue;
    ++n;
    out.push_back(std::move(d));
  }
  return out;
}

std::string substitute(std::string tpl, std::string_view key, std::string_view value) {
  for (size_t pos = tpl.find(key); pos != std::string::npos; pos = tpl.find(key, pos + value.size())) {
    tpl.replace(pos, key.size(), value);
  }
  return tpl;
}

std::string credential_for(const SourceAdapterConfig& config) {
  if (config.credential_env.empty()) {
    throw Error(ErrorCode::LiveDisabled, "live source '" + config.source_id + "' has no credential configured");
  }
  const char* value = std::getenv(config.credential_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw Error(ErrorCode::LiveDisabled,
                "live source '" + config.source_id + "' needs environment variable " + config.credential_env);
  }
  return value;
}

[[noreturn]] void throw_status(const HttpResponse& res, const std::string& what) {
  const bool transient = res.status == 429 || res.status >= 500;
  int retry_after_ms = 0;
  if (auto it = res.headers.find("retry-after"); it != res.headers.end()) {
    retry_after_ms = std::atoi(it->second.c_str()) * 1000;
  }
  throw UpstreamFailure(what + " returned HTTP " + std::to_string(res.status), res.status, transient, retry_after_ms);
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string decode_entities(std::string_view s) {
  static const std::unordered_map<std::string, std::string> named = {
      {"nbsp", " "}, {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"},
      {"mdash", "\xE2\x80\x94"}, {"ndash", "\xE2\x80\x93"}, {"hellip", "\xE2\x80\xA6"},
      {"rsquo", "'"}, {"lsquo", "'"}, {"ldquo", "\xE2\x80\x9C"}, {"rdquo", "\xE2\x80\x9D"}};
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string name(s.substr(i + 1, semi - i - 1));
    if (!name.empty() && name[0] == '#') {
      unsigned long cp = 0;
      const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      char* end = nullptr;
      const std::string digits = name.substr(hex ? 2 : 1);
      cp = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
      if (digits.empty() || *end != '\0') {
        out.push_back('&');
        continue;
      }
      append_utf8(out, cp == 0xA0 ? 0x20 : cp);
      i = semi;
      continue;
    }
    auto it = named.find(lower_ascii(name));
    if (it == named.end()) {
      out.push_back('&');
      continue;
    }
    out += it->second;
    i = semi;
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    // U+00A0 NO-BREAK SPACE in UTF-8
    const bool nbsp = c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0;
    if (std::isspace(c) || nbsp) {
      if (nbsp) ++i;
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::optional<Timestamp> meta_published_time(std::string_view html) {
  static const std::regex re(
      R"re(<meta[^>]+property\s*=\s*["']article:published_time["'][^>]*content\s*=\s*["']([^"']+)["'])re",
      std::regex::icase);
  std::string s(html);
  std::smatch m;
  if (std::regex_search(s, m, re)) return parse_rfc3339(m[1].str());
  return std::nullopt;
}

}  // namespace

Json RawDocument::to_json() const {
  Json j = {{"url", url},
            {"source_id", source_id},
            {"title", title},
            {"body", body},
            {"fetched_at", format_rfc3339(fetched_at)}};
  if (published_at) j["published_at"] = format_rfc3339(*published_at);
  return j;
}

RawDocument RawDocument::from_json(const Json& j, std::optional<Timestamp> fetched_default) {
  if (!j.is_object()) throw Error(ErrorCode::BadFixture, "document must be a JSON object");
  RawDocument d;
  d.url = j.value("url", std::string{});
  if (!is_absolute_url(d.url)) throw Error(ErrorCode::BadFixture, "document url must be absolute: '" + d.url + "'");
  d.source_id = j.value("source_id", std::string{});
  d.title = j.value("title", std::string{});
  d.body = j.value("body", std::string{});
  if (d.title.empty() && d.body.empty()) throw Error(ErrorCode::BadFixture, "document " + d.url + " has no text");
  if (j.contains("published_at") && !j["published_at"].is_null()) {
    auto ts = parse_rfc3339(j["published_at"].get<std::string>());
    if (!ts) throw Error(ErrorCode::BadFixture, "bad published_at on " + d.url);
    d.published_at = *ts;
  }
  auto fetched = parse_rfc3339(j.value("fetched_at", std::string{}));
  if (!fetched && !j.contains("fetched_at")) fetched = fetched_default;
  if (!fetched) throw Error(ErrorCode::BadFixture, "document " + d.url + " needs an RFC 3339 fetched_at");
  d.fetched_at = *fetched;
  return d;
}

void SourceAdapterConfig::validate() const {
  if (source_id.empty()) throw Error(ErrorCode::BadConfig, "adapter needs a source_id");
  if (request_interval_ms < 100) {
    throw Error(ErrorCode::BadConfig, "source '" + source_id + "': request_interval_ms must be >= 100");
  }
  if (max_docs_per_day < 1) throw Error(ErrorCode::BadConfig, "source '" + source_id + "': max_docs_per_day < 1");
  if (mode == AdapterMode::Replay && fixture_path.empty()) {
    throw Error(ErrorCode::BadConfig, "replay source '" + source_id + "' needs fixture_path");
  }
  if (mode == AdapterMode::Live && endpoint.empty()) {
    throw Error(ErrorCode::BadConfig, "live source '" + source_id + "' needs an endpoint");
  }
}

bool matches_keyword(const RawDocument& doc, const FetchQuery& query) {
  const std::string haystack = lower_ascii(doc.title) + "\n" + lower_ascii(doc.body);
  auto hit = [&](std::string_view term) {
    const std::string needle = lower_ascii(term);
    return !needle.empty() && haystack.find(needle) != std::string::npos;
  };
  if (hit(query.keyword)) return true;
  return std::any_of(query.synonyms.begin(), query.synonyms.end(), hit);
}

std::vector<RawDocument> fetch(const SourceAdapterConfig& config, const FetchQuery& query, const Sleeper& sleep,
                               const Clock& clock) {
  config.validate();
  if (config.mode == AdapterMode::Replay) {
    return select(parse_documents(read_fixture(config.fixture_path), config.fixture_path.string()), config, query);
  }

  const std::string credential = credential_for(config);
  HttpOptions options;
  options.timeout = std::chrono::milliseconds{config.timeout_ms};
  options.headers["Authorization"] = "Bearer " + credential;
  options.headers["Accept"] = "application/json";

  std::vector<RawDocument> docs;
  bool first = true;
  for (Date day = query.window.start; day <= query.window.end; ++day) {
    if (!first) sleep(std::chrono::milliseconds{config.request_interval_ms});
    first = false;
    std::string url = substitute(config.endpoint, "{keyword}", url_encode(query.keyword));
    url = substitute(url, "{date}", day.to_string());
    const HttpResponse res = http_get(url, options);
    if (res.status < 200 || res.status >= 300) throw_status(res, "source '" + config.source_id + "'");
    for (auto& d : parse_documents(res.body, url, clock())) docs.push_back(std::move(d));
  }
  return select(std::move(docs), config, query);
}

std::vector<RawDocument> fetch_all(std::span<const SourceAdapterConfig> configs, const FetchQuery& query,
                                   const Sleeper& sleep, const Clock& clock) {
  std::vector<std::future<std::vector<RawDocument>>> jobs;
  jobs.reserve(configs.size());
  for (const auto& c : configs) {
    jobs.push_back(std::async(std::launch::async, [&c, &query, &sleep, &clock] { return fetch(c, query, sleep, clock); }));
  }
  std::vector<RawDocument> merged;
  std::exception_ptr failure;
  for (auto& j : jobs) {
    try {
      auto part = j.get();
      std::move(part.begin(), part.end(), std::back_inserter(merged));
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::stable_sort(merged.begin(), merged.end(), time_url_less);
  return merged;
}

std::string normalize_url(std::string_view url) {
  static const std::regex re(R"(^([A-Za-z][A-Za-z0-9+.\-]*)://([^/?#]*)([^?#]*)(\?[^#]*)?(#.*)?$)");
  std::string s(url);
  std::smatch m;
  if (!std::regex_match(s, m, re)) return s;
  std::string out = lower_ascii(m[1].str()) + "://" + lower_ascii(m[2].str()) + m[3].str();
  if (m[4].matched) {
    std::string query = m[4].str().substr(1);
    std::string kept;
    size_t pos = 0;
    while (pos <= query.size()) {
      size_t amp = query.find('&', pos);
      std::string param = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
      pos = amp == std::string::npos ? query.size() + 1 : amp + 1;
      if (param.empty() || lower_ascii(param).rfind("utm_", 0) == 0) continue;
      if (!kept.empty()) kept.push_back('&');
      kept += param;
    }
    if (!kept.empty()) out += "?" + kept;
  }
  return out;
}

std::vector<RawDocument> dedupe(std::span<const RawDocument> docs) {
  std::vector<RawDocument> out;
  std::unordered_map<std::string, size_t> slot;
  auto earlier = [](const RawDocument& a, const RawDocument& b) {
    if (!a.published_at) return false;
    return !b.published_at || *a.published_at < *b.published_at;
  };
  for (const auto& d : docs) {
    const std::string key = normalize_url(d.url);
    auto [it, inserted] = slot.try_emplace(key, out.size());
    if (inserted) {
      out.push_back(d);
    } else if (earlier(d, out[it->second])) {
      out[it->second] = d;
    }
  }
  return out;
}

std::pair<Timestamp, TimestampConfidence> assign_timestamp(const RawDocument& doc) {
  if (doc.published_at) return {*doc.published_at, TimestampConfidence::Published};
  return {doc.fetched_at, TimestampConfidence::Fetched};
}

std::string extract_visible_text(std::string_view html) {
  std::string text;
  size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      text.push_back(html[i++]);
      continue;
    }
    if (html.substr(i, 4) == "<!--") {
      size_t end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      text.push_back(' ');
      continue;
    }
    size_t close = html.find('>', i);
    if (close == std::string_view::npos) break;
    size_t n = i + 1;
    while (n < close && (std::isalnum(static_cast<unsigned char>(html[n])) || html[n] == '!')) ++n;
    const std::string name = lower_ascii(html.substr(i + 1, n - i - 1));
    i = close + 1;
    text.push_back(' ');
    if (name == "script" || name == "style" || name == "head" || name == "noscript" || name == "template") {
      const std::string closing = "</" + name;
      const std::string lowered = lower_ascii(html.substr(i));
      size_t end = lowered.find(closing);
      if (end == std::string::npos) {
        i = html.size();
      } else {
        size_t gt = html.find('>', i + end);
        i = gt == std::string_view::npos ? html.size() : gt + 1;
      }
    }
  }
  return collapse_whitespace(decode_entities(text));
}

std::optional<std::string> extract_title(std::string_view html) {
  const std::string lowered = lower_ascii(html);
  size_t open = lowered.find("<title");
  if (open == std::string::npos) return std::nullopt;
  size_t start = lowered.find('>', open);
  size_t end = lowered.find("</title", start);
  if (start == std::string::npos || end == std::string::npos) return std::nullopt;
  std::string title = collapse_whitespace(decode_entities(html.substr(start + 1, end - start - 1)));
  if (title.empty()) return std::nullopt;
  return title;
}

RawDocument fetch_url(const std::string& url, const SourceAdapterConfig& config, const Clock& clock) {
  if (!is_absolute_url(url)) throw Error(ErrorCode::BadArgument, "url must be absolute: " + url);
  config.validate();
  if (config.mode == AdapterMode::Replay) {
    const std::string wanted = normalize_url(url);
    for (auto& d : parse_documents(read_fixture(config.fixture_path), config.fixture_path.string())) {
      if (normalize_url(d.url) != wanted) continue;
      if (d.title.empty()) d.title = extract_title(d.body).value_or("");
      d.body = extract_visible_text(d.body);
      d.source_id = config.source_id;
      return d;
    }
    throw Error(ErrorCode::NotFound, "no fixture document for " + url);
  }

  HttpOptions options;
  options.timeout = std::chrono::milliseconds{config.timeout_ms};
  const HttpResponse res = http_get(url, options);
  if (res.status == 404 || res.status == 410) throw Error(ErrorCode::NotFound, url + " returned HTTP " + std::to_string(res.status));
  if (res.status < 200 || res.status >= 300) throw_status(res, url);
  RawDocument d;
  d.url = url;
  d.source_id = config.source_id;
  d.title = extract_title(res.body).value_or("");
  d.body = extract_visible_text(res.body);
  d.published_at = meta_published_time(res.body);
  d.fetched_at = clock();
  return d;
}

std::string corpus_snapshot_id(std::span<const SourceAdapterConfig> configs, const Clock& clock) {
  std::vector<const SourceAdapterConfig*> sorted;
  for (const auto& c : configs) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->source_id < b->source_id; });
  std::string material;
  for (const auto* c : sorted) {
    if (c->mode == AdapterMode::Replay) {
      std::string digest = "missing";
      try {
        digest = sha256_hex(read_fixture(c->fixture_path));
      } catch (const Error&) {
      }
      material += "replay:" + c->source_id + ":" + digest + ";";
    } else {
      material += "live:" + c->source_id + ":" + day_of(clock()).to_string() + ";";
    }
  }
  return sha256_hex(material, 16);
}

}  // namespace oracleloom
