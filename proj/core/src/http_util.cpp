#include "http_util.hpp"

#include "selrag/error.hpp"

#include <httplib.h>

namespace selrag::detail {

HttpEndpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::invalid_config, "endpoint must be an http:// URL: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  // Built without TLS support.
  if (scheme != "http") {
    throw Error(ErrorCode::invalid_config, "unsupported endpoint scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    out.base_path = url.substr(path_start);
    while (!out.base_path.empty() && out.base_path.back() == '/') {
      out.base_path.pop_back();
    }
  }
  if (out.origin.size() <= scheme_end + 3) {
    throw Error(ErrorCode::invalid_config, "endpoint has no host: " + url);
  }
  return out;
}

std::optional<HttpResult> post_json(const HttpEndpoint& endpoint, const std::string& path,
                                    const nlohmann::json& body, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto response = client.Post(endpoint.base_path + path, body.dump(), "application/json");
  if (!response) {
    return std::nullopt;
  }
  return HttpResult{response->status, response->body};
}

} // namespace selrag::detail
