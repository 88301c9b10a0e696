// Copyright 2026 The plforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON-over-HTTP transport shared by the external client adapters. HTTPS is
// available when the build defines CPPHTTPLIB_OPENSSL_SUPPORT.

#pragma once

#include <chrono>
#include <cstdlib>
#include <string>

#include "httplib.h"
#include "plforge/common.hpp"

namespace plforge {

// Transport or protocol failure talking to an external service.
class ClientError : public Error {
 public:
  using Error::Error;
};

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

inline Url parse_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos)
    throw ConfigError("URL without scheme: " + std::string(url));
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

// Base URL plus the name of the environment variable holding the bearer key.
struct HttpEndpoint {
  std::string base_url;
  std::string api_key_env;
  std::chrono::seconds timeout{60};

  json post(const std::string& route, const json& body) const {
    auto url = parse_url(base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key_env.empty()) {
      if (const char* key = std::getenv(api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    std::string path = url.path;
    if (!path.empty() && path.back() == '/') path.pop_back();
    path += route;
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw ClientError(base_url + route + ": " + httplib::to_string(res.error()));
    if (res->status / 100 != 2)
      throw ClientError(base_url + route + ": HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ClientError(base_url + route + ": response is not JSON: " + e.what());
    }
  }
};

inline std::string http_get(std::string_view full_url, std::chrono::seconds timeout = std::chrono::seconds(30)) {
  auto url = parse_url(full_url);
  httplib::Client client(url.origin);
  client.set_follow_location(true);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  auto res = client.Get(url.path);
  if (!res) throw ClientError(std::string(full_url) + ": " + httplib::to_string(res.error()));
  if (res->status / 100 != 2)
    throw ClientError(std::string(full_url) + ": HTTP " + std::to_string(res->status));
  return res->body;
}

}  // namespace plforge
