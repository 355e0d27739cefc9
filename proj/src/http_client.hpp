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

#pragma once

#include <string>

#include "json.hpp"

namespace murre::http {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading slash, "/" when absent
};

// Splits an http(s) URL into the client base and request path.
// Throws InputError on anything that does not look like a URL.
ParsedUrl parse_url(const std::string& url);

// One POST of a JSON body, expecting a JSON response. Sends a bearer
// token when api_key is non-empty. Throws BackendError on transport
// failure, non-2xx status, or an unparseable body.
nlohmann::json post_json(const std::string& url, const std::string& api_key, int timeout_sec,
                         const nlohmann::json& body);

// Transport-level reachability check (any HTTP status counts as
// reachable). Throws BackendError when the host cannot be contacted.
void probe_reachable(const std::string& url, int timeout_sec);

}  // namespace murre::http
