#include "oracleloom/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "oracleloom/error.hpp"

namespace oracleloom {

namespace fs = std::filesystem;

namespace {

fs::path resolve_path(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

AdapterMode adapter_mode_from_string(const std::string& s) {
  if (s == "replay") return AdapterMode::Replay;
  if (s == "live") return AdapterMode::Live;
  throw Error(ErrorCode::BadConfig, "adapter mode must be 'replay' or 'live', got '" + s + "'");
}

void parse_listen(const std::string& listen, std::string& host, int& port) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error(ErrorCode::BadConfig, "listen must be host:port");
  host = listen.substr(0, colon);
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadConfig, "listen port is not a number: '" + listen + "'");
  }
}

SourceAdapterConfig default_adapter(const SourceProfile& p) {
  SourceAdapterConfig a;
  a.source_id = p.id;
  a.mode = AdapterMode::Replay;
  a.fixture_path = fs::path("data/fixtures/food_delivery") / (p.id + ".jsonl");
  return a;
}

}  // namespace

std::vector<SourceProfile> default_source_profiles() {
  return {{"bing_news", SourceCategory::OfficialMedia, 1.0, "en-US"},
          {"google_news", SourceCategory::OfficialMedia, 1.0, "en-US"},
          {"google_search", SourceCategory::SearchEngine, 0.8, "en-US"},
          {"twitter", SourceCategory::SocialMedia, 0.6, "en-US"},
          {"yahoo_hot", SourceCategory::SocialMedia, 0.6, "ja-JP"}};
}

ServiceConfig ServiceConfig::from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "config must be a JSON object");
  ServiceConfig c;
  try {
    if (j.contains("listen")) parse_listen(j.at("listen").get<std::string>(), c.listen_host, c.listen_port);
    c.data_dir = resolve_path(base_dir, j.value("data_dir", std::string("var")));
    c.lexicon_path = resolve_path(base_dir, j.value("lexicon", c.lexicon_path.string()));
    c.stopwords_path = resolve_path(base_dir, j.value("stopwords", c.stopwords_path.string()));
    c.default_provider = j.value("default_provider", c.default_provider);
    c.show_urls = j.value("show_urls", true);
    c.chat_llm_fallback = j.value("chat_llm_fallback", false);
    c.workers = j.value("workers", 4);
    if (j.contains("token_budget") && !j.at("token_budget").is_null()) {
      c.token_budget = j.at("token_budget").get<int64_t>();
    }
    if (j.contains("score_weights")) c.score_weights = ScoreWeights::from_json(j.at("score_weights"));
    c.daily_keywords = j.value("daily_keywords", std::vector<std::string>{});

    std::vector<SourceProfile> profiles;
    if (j.contains("sources")) {
      for (const auto& s : j.at("sources")) {
        SourceProfile p;
        p.id = s.at("id").get<std::string>();
        p.category = source_category_from_string(s.value("category", std::string("official_media")));
        p.default_weight = s.value("weight", 1.0);
        p.locale = s.value("locale", std::string("en-US"));
        SourceAdapterConfig a;
        a.source_id = p.id;
        a.mode = adapter_mode_from_string(s.value("mode", std::string("replay")));
        if (s.contains("fixture")) a.fixture_path = resolve_path(base_dir, s.at("fixture").get<std::string>());
        a.endpoint = s.value("endpoint", std::string{});
        a.credential_env = s.value("credential_env", std::string{});
        a.request_interval_ms = s.value("request_interval_ms", a.request_interval_ms);
        a.max_docs_per_day = s.value("max_docs_per_day", a.max_docs_per_day);
        a.timeout_ms = s.value("timeout_ms", a.timeout_ms);
        a.validate();
        profiles.push_back(std::move(p));
        c.adapters.push_back(std::move(a));
      }
    } else {
      profiles = default_source_profiles();
      for (const auto& p : profiles) {
        auto a = default_adapter(p);
        a.fixture_path = resolve_path(base_dir, a.fixture_path.string());
        c.adapters.push_back(std::move(a));
      }
    }
    c.registry = SourceRegistry(std::move(profiles));

    if (j.contains("providers")) {
      for (const auto& p : j.at("providers")) c.providers.push_back(ProviderConfig::from_json(p));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

ServiceConfig ServiceConfig::resolve(const std::optional<fs::path>& explicit_path) {
  if (explicit_path) return load(*explicit_path);
  if (const char* env = std::getenv("ORACLELOOM_CONFIG"); env != nullptr && *env != '\0') return load(env);
  return from_json(Json::object(), fs::path{});
}

Json ServiceConfig::to_json() const {
  Json sources = Json::array();
  for (const auto& a : adapters) {
    const SourceProfile* p = registry.find(a.source_id);
    Json s = {{"id", a.source_id},
              {"mode", a.mode == AdapterMode::Replay ? "replay" : "live"},
              {"request_interval_ms", a.request_interval_ms},
              {"max_docs_per_day", a.max_docs_per_day},
              {"timeout_ms", a.timeout_ms}};
    if (p) {
      s["category"] = std::string(to_string(p->category));
      s["weight"] = p->default_weight;
      s["locale"] = p->locale;
    }
    if (!a.fixture_path.empty()) s["fixture"] = a.fixture_path.string();
    if (!a.endpoint.empty()) s["endpoint"] = a.endpoint;
    if (!a.credential_env.empty()) s["credential_env"] = a.credential_env;
    sources.push_back(std::move(s));
  }
  Json providers_json = Json::array();
  for (const auto& p : providers) providers_json.push_back(p.to_json());
  Json j = {{"listen", listen_host + ":" + std::to_string(listen_port)},
            {"data_dir", data_dir.string()},
            {"sources", sources},
            {"providers", providers_json},
            {"default_provider", default_provider},
            {"score_weights", score_weights.to_json()},
            {"show_urls", show_urls},
            {"chat_llm_fallback", chat_llm_fallback},
            {"lexicon", lexicon_path.string()},
            {"stopwords", stopwords_path.string()},
            {"workers", workers},
            {"daily_keywords", daily_keywords}};
  j["token_budget"] = token_budget ? Json(*token_budget) : Json(nullptr);
  return j;
}

void ServiceConfig::use_fixture_dir(const fs::path& dir) {
  for (auto& a : adapters) {
    a.mode = AdapterMode::Replay;
    a.fixture_path = dir / (a.source_id + ".jsonl");
  }
}

void ServiceConfig::validate() const {
  if (listen_port < 0 || listen_port > 65535) throw Error(ErrorCode::BadConfig, "listen port out of range");
  if (workers < 1) throw Error(ErrorCode::BadConfig, "workers must be >= 1");
  std::set<std::string> ids = {"stub"};
  for (const auto& p : providers) ids.insert(p.id);
  if (!ids.contains(default_provider)) {
    throw Error(ErrorCode::BadConfig, "default provider '" + default_provider + "' is not configured");
  }
  for (const auto& a : adapters) {
    if (registry.find(a.source_id) == nullptr) {
      throw Error(ErrorCode::BadConfig, "adapter '" + a.source_id + "' has no source profile");
    }
  }
}

RequestFields ServiceConfig::request_defaults(Date today) const {
  RequestFields f;
  f.window = default_window(today);
  f.source_weights = registry.default_weights();
  f.score_weights = score_weights;
  f.show_urls = show_urls;
  return f;
}

}  // namespace oracleloom
