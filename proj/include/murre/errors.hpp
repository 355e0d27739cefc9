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

#include <stdexcept>
#include <string>

namespace murre {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text or files (bad JSON, bad table string, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation precondition (empty text, zero vector, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Inconsistent data (duplicate tables, unresolved gold references, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A remote embedder or remover call failed.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace murre
