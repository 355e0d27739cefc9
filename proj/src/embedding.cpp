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

#include "murre/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>

#include "http_client.hpp"
#include "murre/errors.hpp"

namespace murre {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

EmbeddingVector reference_bow_embedding(std::string_view text) {
  if (text.empty()) throw InputError("embed_text: empty text");

  EmbeddingVector counts(kReferenceBowDim, 0.0);
  std::string token;
  bool any_token = false;
  auto flush = [&] {
    if (token.empty()) return;
    counts[fnv1a64(token) % kReferenceBowDim] += 1.0;
    any_token = true;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (!any_token) throw InputError("embed_text: text has no alphanumeric tokens");

  double sq = 0.0;
  for (double v : counts) sq += v * v;
  const double norm = std::sqrt(sq);
  for (double& v : counts) v /= norm;
  return counts;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw InputError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw InputError("cosine_similarity: zero vector");
  const double s = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(s, -1.0, 1.0);
}

double normalize_similarity(double s) {
  constexpr double kTol = 1e-6;
  if (!(s >= -1.0 - kTol && s <= 1.0 + kTol)) {
    throw InputError("normalize_similarity: cosine out of range: " + std::to_string(s));
  }
  s = std::clamp(s, -1.0, 1.0);
  return (s + 1.0) / 2.0;
}

std::string EmbedderSpec::identity() const {
  if (backend == EmbedderBackend::kReferenceBow) {
    return "ref-bow/" + std::to_string(kReferenceBowDim);
  }
  return "http/" + endpoint + "/" + model + "/q=" + query_prefix + "/d=" + doc_prefix;
}

Embedder::Embedder(EmbedderSpec spec) : spec_(std::move(spec)) {
  if (spec_.backend == EmbedderBackend::kHttp && spec_.endpoint.empty()) {
    throw InputError("http embedder requires an endpoint URL");
  }
}

Embedder::~Embedder() = default;

std::string Embedder::effective_text(const std::string& text, TextRole role) const {
  if (spec_.backend != EmbedderBackend::kHttp) return text;
  const std::string& prefix =
      role == TextRole::kQuery ? spec_.query_prefix : spec_.doc_prefix;
  return prefix.empty() ? text : prefix + text;
}

EmbeddingVector Embedder::embed(const std::string& text, TextRole role) const {
  if (text.empty()) throw InputError("embed_text: empty text");
  const std::string key = effective_text(text, role);
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  EmbeddingVector vec = compute(key);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = cache_.emplace(key, std::move(vec));
  return it->second;
}

EmbeddingVector Embedder::compute(const std::string& effective) const {
  backend_calls_.fetch_add(1);
  if (spec_.backend == EmbedderBackend::kReferenceBow) {
    return reference_bow_embedding(effective);
  }
  return compute_http_batch({effective}).front();
}

std::vector<EmbeddingVector> Embedder::compute_http_batch(
    const std::vector<std::string>& texts) const {
  nlohmann::json body = {{"model", spec_.model}, {"input", texts}};
  nlohmann::json reply = http::post_json(spec_.endpoint, spec_.api_key, spec_.timeout_sec, body);
  if (!reply.contains("data") || !reply.at("data").is_array() ||
      reply.at("data").size() != texts.size()) {
    throw BackendError("embedder " + spec_.endpoint + ": response lacks a data array of size " +
                       std::to_string(texts.size()));
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const nlohmann::json& item : reply.at("data")) {
    EmbeddingVector vec = item.at("embedding").get<EmbeddingVector>();
    std::size_t expected = spec_.dimension != 0 ? spec_.dimension : session_dim_.load();
    if (expected == 0) {
      session_dim_.store(vec.size());
    } else if (vec.size() != expected) {
      throw BackendError("embedder " + spec_.endpoint + ": dimension " +
                         std::to_string(vec.size()) + " does not match expected " +
                         std::to_string(expected));
    }
    for (double v : vec) {
      if (!std::isfinite(v)) {
        throw BackendError("embedder " + spec_.endpoint + ": non-finite vector entry");
      }
    }
    out.push_back(std::move(vec));
  }
  return out;
}

void Embedder::precompute_tables(const Corpus& corpus) const {
  std::vector<std::string> missing;
  {
    std::shared_lock lock(mutex_);
    for (const TableSchema& t : corpus.tables()) {
      std::string key = effective_text(serialize_table(t), TextRole::kDocument);
      if (!cache_.contains(key)) missing.push_back(std::move(key));
    }
  }
  if (missing.empty()) return;

  if (spec_.backend == EmbedderBackend::kHttp) {
    backend_calls_.fetch_add(1);  // one batched request
    std::vector<EmbeddingVector> vecs = compute_http_batch(missing);
    std::unique_lock lock(mutex_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      cache_.emplace(missing[i], std::move(vecs[i]));
    }
    return;
  }
  for (const std::string& key : missing) {
    backend_calls_.fetch_add(1);
    EmbeddingVector vec = reference_bow_embedding(key);
    std::unique_lock lock(mutex_);
    cache_.emplace(key, std::move(vec));
  }
}

double relevance_probability(const Embedder& embedder, const std::string& question,
                             const TableSchema& t) {
  const EmbeddingVector q = embedder.embed(question, TextRole::kQuery);
  const EmbeddingVector d = embedder.embed(serialize_table(t), TextRole::kDocument);
  return normalize_similarity(cosine_similarity(q, d));
}

std::vector<ScoredTable> rank_corpus(const Embedder& embedder, const std::string& question,
                                     const Corpus& corpus, std::size_t top_b) {
  if (corpus.empty()) throw InputError("rank_corpus: empty corpus");
  if (top_b == 0) throw InputError("rank_corpus: top_b must be positive");

  std::vector<ScoredTable> scored;
  scored.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    scored.push_back({i, relevance_probability(embedder, question, corpus.at(i))});
  }
  // stable on equal probabilities, so ties keep ascending corpus index
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredTable& a, const ScoredTable& b) {
    return a.probability > b.probability;
  });
  scored.resize(std::min(top_b, scored.size()));
  return scored;
}

}  // namespace murre
