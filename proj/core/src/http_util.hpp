#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <optional>
#include <string>

namespace selrag::detail {

struct HttpEndpoint {
  std::string origin;    // http://host[:port]
  std::string base_path; // "" or "/prefix", never a trailing slash
};

/// Splits "http://host:8080/prefix/" into origin and base path. Throws
/// Error(invalid_config) for anything that is not plain http.
HttpEndpoint parse_endpoint(const std::string& url);

struct HttpResult {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body; nullopt on transport failure.
std::optional<HttpResult> post_json(const HttpEndpoint& endpoint, const std::string& path,
                                    const nlohmann::json& body, std::chrono::milliseconds timeout);

} // namespace selrag::detail
