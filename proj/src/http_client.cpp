#include "oracleloom/http_client.hpp"

#include <httplib.h>

#include <cctype>
#include <regex>

#include "oracleloom/error.hpp"

namespace oracleloom {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string target;  // path + query
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^([A-Za-z][A-Za-z0-9+.\-]*://[^/?#]+)([^#]*))");
  std::smatch m;
  if (!std::regex_search(url, m, re)) throw Error(ErrorCode::BadArgument, "not an absolute URL: " + url);
  std::string target = m[2].str();
  if (target.empty() || target.front() != '/') target.insert(target.begin(), '/');
  return {m[1].str(), target};
}

httplib::Client make_client(const std::string& origin, const HttpOptions& options) {
  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);
  return client;
}

HttpResponse convert(const httplib::Result& res, const std::string& url) {
  if (!res) {
    if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
        res.error() == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::Timeout, "request to " + url + " timed out (" + httplib::to_string(res.error()) + ")");
    }
    throw UpstreamFailure("request to " + url + " failed: " + httplib::to_string(res.error()), 0, true);
  }
  HttpResponse out;
  out.status = res->status;
  out.body = res->body;
  for (const auto& [k, v] : res->headers) {
    std::string key = k;
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.headers[key] = v;
  }
  return out;
}

httplib::Headers to_headers(const HttpOptions& options) {
  httplib::Headers h;
  for (const auto& [k, v] : options.headers) h.emplace(k, v);
  return h;
}

}  // namespace

HttpResponse http_get(const std::string& url, const HttpOptions& options) {
  auto parts = split_url(url);
  auto client = make_client(parts.origin, options);
  return convert(client.Get(parts.target, to_headers(options)), url);
}

HttpResponse http_post(const std::string& url, const std::string& body, const std::string& content_type,
                       const HttpOptions& options) {
  auto parts = split_url(url);
  auto client = make_client(parts.origin, options);
  return convert(client.Post(parts.target, to_headers(options), body, content_type), url);
}

std::string url_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

}  // namespace oracleloom
