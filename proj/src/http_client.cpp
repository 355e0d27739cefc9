/*
 * Copyright 2026 the Murre authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "http_client.hpp"

#include "httplib.h"
#include "murre/errors.hpp"

namespace murre::http {

ParsedUrl parse_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InputError("not a URL (missing scheme): " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InputError("unsupported URL scheme \"" + scheme + "\" in " + url);
  }
  const std::size_t host_start = scheme_end + 3;
  if (host_start >= url.size()) throw InputError("empty host in URL: " + url);
  const std::size_t path_start = url.find('/', host_start);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.base = url;
    parsed.path = "/";
  } else {
    parsed.base = url.substr(0, path_start);
    parsed.path = url.substr(path_start);
  }
  return parsed;
}

nlohmann::json post_json(const std::string& url, const std::string& api_key, int timeout_sec,
                         const nlohmann::json& body) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.base);
  client.set_connection_timeout(timeout_sec, 0);
  client.set_read_timeout(timeout_sec, 0);
  client.set_write_timeout(timeout_sec, 0);

  httplib::Headers headers;
  if (!api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key);
  }

  auto res = client.Post(parsed.path, headers, body.dump(), "application/json");
  if (!res) {
    throw BackendError("POST " + url + ": transport error (" + httplib::to_string(res.error()) +
                       ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("POST " + url + ": HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError("POST " + url + ": response is not JSON (" + std::string(e.what()) + ")");
  }
}

void probe_reachable(const std::string& url, int timeout_sec) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.base);
  client.set_connection_timeout(timeout_sec, 0);
  client.set_read_timeout(timeout_sec, 0);
  auto res = client.Options(parsed.path);
  if (!res && res.error() != httplib::Error::Read) {
    throw BackendError("backend " + url + " is unreachable (" +
                       httplib::to_string(res.error()) + ")");
  }
}

}  // namespace murre::http
