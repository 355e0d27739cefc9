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

#include <atomic>
#include <cstddef>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "murre/schema.hpp"

namespace murre {

using EmbeddingVector = std::vector<double>;

enum class EmbedderBackend { kReferenceBow, kHttp };

// Texts may embed differently depending on whether they act as the query
// or as corpus content (SGPT-style encoders distinguish the two modes);
// the http backend can prepend a per-role prefix to emulate either.
enum class TextRole { kQuery, kDocument };

inline constexpr std::size_t kReferenceBowDim = 1024;

struct EmbedderSpec {
  EmbedderBackend backend = EmbedderBackend::kReferenceBow;

  // http backend only.
  std::string endpoint;  // full URL, e.g. http://host:8000/v1/embeddings
  std::string model;
  std::string api_key;        // sent as a bearer token when non-empty
  int timeout_sec = 30;
  std::size_t dimension = 0;  // 0 = take the backend's dimension as-is
  std::string query_prefix;
  std::string doc_prefix;

  // Stable cache identity; two specs with equal identity may share vectors.
  std::string identity() const;
};

// Deterministic bag-of-words embedding: lowercase, split on
// non-alphanumeric bytes, FNV-1a 64 hash of each token into one of 1024
// buckets, count, L2-normalize. Pure function; bit-identical across
// processes. Throws InputError when the text yields no tokens.
EmbeddingVector reference_bow_embedding(std::string_view text);

// FNV-1a 64 over the token bytes, exposed for tests and tooling.
std::uint64_t fnv1a64(std::string_view bytes);

// dot(a,b) / (|a||b|), clamped to [-1, 1] against floating-point
// overshoot. Throws InputError on dimension mismatch or a zero vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Norm(s) = (s + 1) / 2, mapping cosine similarity onto [0, 1]. Inputs
// outside [-1, 1] by more than 1e-6 are rejected; within that tolerance
// they are clamped first.
double normalize_similarity(double s);

// Embedding source with a per-instance cache keyed by exact (role-adjusted)
// text. Concurrent readers, exclusive insertion; results are independent
// of scheduling because embeddings are pure per backend.
class Embedder {
 public:
  explicit Embedder(EmbedderSpec spec);
  ~Embedder();

  Embedder(const Embedder&) = delete;
  Embedder& operator=(const Embedder&) = delete;

  const EmbedderSpec& spec() const { return spec_; }

  // Cached embedding of one text. Throws InputError on empty text,
  // BackendError on http failures.
  EmbeddingVector embed(const std::string& text, TextRole role = TextRole::kQuery) const;

  // Embeds serialize_table of every corpus table (one batched http call
  // when remote). Call once per corpus before ranking many questions.
  void precompute_tables(const Corpus& corpus) const;

  // Number of times the backend actually computed vectors (cache misses).
  long backend_calls() const { return backend_calls_.load(); }

 private:
  EmbeddingVector compute(const std::string& effective_text) const;
  std::vector<EmbeddingVector> compute_http_batch(const std::vector<std::string>& texts) const;
  std::string effective_text(const std::string& text, TextRole role) const;

  EmbedderSpec spec_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
  mutable std::atomic<long> backend_calls_{0};
  mutable std::atomic<std::size_t> session_dim_{0};  // pinned on first vector
};

// Norm(cos(Emb(question), Emb(serialize_table(t)))), the probability that
// table t is relevant to the question.
double relevance_probability(const Embedder& embedder, const std::string& question,
                             const TableSchema& t);

struct ScoredTable {
  std::size_t index = 0;  // position in the corpus
  double probability = 0.0;
};

// Scores every corpus table against the question and returns the top
// min(top_b, |corpus|) by descending probability, ties broken by
// ascending corpus index.
std::vector<ScoredTable> rank_corpus(const Embedder& embedder, const std::string& question,
                                     const Corpus& corpus, std::size_t top_b);

}  // namespace murre
