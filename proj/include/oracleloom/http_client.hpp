#pragma once

#include <chrono>
#include <map>
#include <string>

namespace oracleloom {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct HttpOptions {
  std::chrono::milliseconds timeout{60'000};
  std::map<std::string, std::string> headers;
};

/// Blocking GET / POST against an absolute http(s) URL, following redirects.
/// Transport failures throw UpstreamFailure(status 0, transient); a deadline
/// overrun throws Error(Timeout). Non-2xx responses are returned, not thrown.
HttpResponse http_get(const std::string& url, const HttpOptions& options = {});
HttpResponse http_post(const std::string& url, const std::string& body, const std::string& content_type,
                       const HttpOptions& options = {});

/// Percent-encodes everything outside the unreserved set.
std::string url_encode(std::string_view text);

}  // namespace oracleloom
