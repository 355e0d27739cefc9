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

#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "murre/embedding.hpp"
#include "murre/errors.hpp"
#include "oracles.hpp"

using namespace murre;

TEST_CASE("reference bow embedding basics") {
  // L2 normalization removes count scale for single-token texts
  CHECK(reference_bow_embedding("abc abc") == reference_bow_embedding("abc"));
  CHECK_THROWS_AS(reference_bow_embedding(""), InputError);
  CHECK_THROWS_AS(reference_bow_embedding("!!! ???"), InputError);

  // bag of words is order-invariant
  CHECK(cosine_similarity(reference_bow_embedding("employee name"),
                          reference_bow_embedding("name employee")) == doctest::Approx(1.0));

  // case-folding and splitting on non-alphanumerics
  CHECK(reference_bow_embedding("Make-ID, Model") == reference_bow_embedding("make id model"));

  // pure function: fresh computation matches bit for bit
  CHECK(reference_bow_embedding("a longer text with several tokens") ==
        reference_bow_embedding("a longer text with several tokens"));
}

TEST_CASE("cosine similarity") {
  const EmbeddingVector a = {1.0, 0.0};
  const EmbeddingVector b = {0.0, 1.0};
  const EmbeddingVector c = {1.0, 1.0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  CHECK(cosine_similarity(a, c) == doctest::Approx(0.70710678).epsilon(1e-9));
  CHECK_THROWS_AS(cosine_similarity(a, {1.0, 2.0, 3.0}), InputError);
  CHECK_THROWS_AS(cosine_similarity(a, {0.0, 0.0}), InputError);
}

TEST_CASE("cosine symmetry and scale invariance") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    EmbeddingVector a(8), b(8);
    for (int j = 0; j < 8; ++j) {
      a[j] = val(rng);
      b[j] = val(rng);
    }
    const double lambda = scale(rng);
    EmbeddingVector a_scaled = a;
    for (double& v : a_scaled) v *= lambda;
    CHECK(cosine_similarity(a, b) == doctest::Approx(cosine_similarity(b, a)).epsilon(1e-12));
    CHECK(cosine_similarity(a_scaled, b) ==
          doctest::Approx(cosine_similarity(a, b)).epsilon(1e-9));
    CHECK(cosine_similarity(a, b) >= -1.0);
    CHECK(cosine_similarity(a, b) <= 1.0);
  }
}

TEST_CASE("normalize_similarity endpoints and range") {
  CHECK(normalize_similarity(-1.0) == 0.0);
  CHECK(normalize_similarity(0.0) == 0.5);
  CHECK(normalize_similarity(1.0) == 1.0);
  CHECK(normalize_similarity(1.0 + 5e-7) == 1.0);  // clamp tolerance
  CHECK_THROWS_AS(normalize_similarity(1.1), InputError);
  CHECK_THROWS_AS(normalize_similarity(-1.00001), InputError);
}

TEST_CASE("normalization preserves the cosine ordering") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> s(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double s1 = s(rng);
    const double s2 = s(rng);
    if (s1 < s2) {
      CHECK(normalize_similarity(s1) < normalize_similarity(s2));
    }
  }
}

TEST_CASE("relevance probability") {
  Embedder embedder({});
  const TableSchema t{"d", "things", {"alpha", "bravo"}};
  // a question identical to the serialized table text
  CHECK(relevance_probability(embedder, "d.things(alpha, bravo)", t) == doctest::Approx(1.0));

  // disjoint token bags give cosine 0 and probability exactly 0.5 --
  // first verify the chosen tokens do not collide in the hash space
  const EmbeddingVector q = reference_bow_embedding("zulu yankee xray");
  const EmbeddingVector d = reference_bow_embedding(serialize_table(t));
  double dot = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) dot += q[i] * d[i];
  REQUIRE(dot == 0.0);
  CHECK(relevance_probability(embedder, "zulu yankee xray", t) == 0.5);
}

TEST_CASE("relevance probability singles out a token-sharing table") {
  // toy corpus: question shares tokens with exactly one table; a direct
  // cosine computation confirms that table's probability is strictly top
  Corpus corpus = Corpus::from_tables({
      {"d", "mango", {"ripeness", "grove"}},
      {"d", "kettle", {"steam", "handle"}},
      {"d", "anvil", {"mass", "ring"}},
  });
  Embedder embedder({});
  const std::string question = "how ripe is the mango in the grove";
  double best = -1.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double cos = cosine_similarity(reference_bow_embedding(question),
                                         reference_bow_embedding(serialize_table(corpus.at(i))));
    const double p = (cos + 1.0) / 2.0;
    CHECK(relevance_probability(embedder, question, corpus.at(i)) == doctest::Approx(p));
    if (p > best) {
      best = p;
      best_index = i;
    }
  }
  CHECK(corpus.at(best_index).table_name == "mango");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i != best_index) {
      CHECK(relevance_probability(embedder, question, corpus.at(i)) < best);
    }
  }
}

TEST_CASE("rank_corpus against a brute-force sort") {
  std::mt19937 rng(17);
  Embedder embedder({});
  for (int round = 0; round < 30; ++round) {
    Corpus corpus = oracle::random_corpus(rng, 20);
    const std::string question = oracle::random_question(rng, corpus);
    const std::size_t b = 1 + rng() % 6;
    auto got = rank_corpus(embedder, question, corpus, b);
    auto want = oracle::brute_rank(embedder, question, corpus, b);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].index == want[i].index);
      CHECK(got[i].probability == want[i].probability);
    }
  }
}

TEST_CASE("rank_corpus edge cases") {
  Embedder embedder({});
  Corpus corpus = Corpus::from_tables({
      {"a", "first", {"red", "green"}},
      {"b", "second", {"blue", "cyan"}},
      {"c", "third", {"red", "green"}},
  });

  SUBCASE("top_b larger than the corpus returns a full sort") {
    auto ranked = rank_corpus(embedder, "red green", corpus, 10);
    CHECK(ranked.size() == 3);
    CHECK(ranked[0].probability >= ranked[1].probability);
    CHECK(ranked[1].probability >= ranked[2].probability);
  }

  SUBCASE("identical content ties break toward the earlier corpus index") {
    Corpus dup = Corpus::from_tables({
        {"a", "west", {"red", "green"}},
        {"b", "west", {"red", "green"}},
    });
    // identical token bags -> identical probabilities
    auto ranked = rank_corpus(embedder, "red west", dup, 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].probability == ranked[1].probability);
    CHECK(ranked[0].index == 0);
    CHECK(ranked[1].index == 1);
  }

  SUBCASE("every omitted table scores at most the last included one") {
    auto top2 = rank_corpus(embedder, "red green blue", corpus, 2);
    auto full = rank_corpus(embedder, "red green blue", corpus, 3);
    REQUIRE(top2.size() == 2);
    CHECK(full[2].probability <= top2[1].probability);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(rank_corpus(embedder, "x", Corpus{}, 3), InputError);
    CHECK_THROWS_AS(rank_corpus(embedder, "x", corpus, 0), InputError);
  }
}

TEST_CASE("embedder cache avoids recomputation and is thread-safe") {
  Embedder embedder({});
  (void)embedder.embed("one two three");
  const long after_first = embedder.backend_calls();
  (void)embedder.embed("one two three");
  CHECK(embedder.backend_calls() == after_first);

  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 50; ++j) {
        (void)embedder.embed("shared text " + std::to_string(j % 5));
      }
    });
  }
  for (auto& t : threads) t.join();
  // 5 distinct texts at most 4 racing inserts each; far below 200 blind calls
  CHECK(embedder.backend_calls() <= after_first + 20);
}

TEST_CASE("http embedder backend") {
  httplib::Server server;
  std::atomic<int> requests{0};
  nlohmann::json last_body;
  std::mutex body_mutex;
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    nlohmann::json body = nlohmann::json::parse(req.body);
    {
      std::lock_guard lock(body_mutex);
      last_body = body;
    }
    nlohmann::json data = nlohmann::json::array();
    for (const auto& text : body.at("input")) {
      const double h = static_cast<double>(text.get<std::string>().size());
      data.push_back({{"embedding", {h, 1.0, 0.5}}});
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EmbedderSpec spec;
  spec.backend = EmbedderBackend::kHttp;
  spec.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
  spec.model = "test-model";
  spec.api_key = "sekrit";
  spec.query_prefix = "query: ";

  SUBCASE("single embed and cache") {
    Embedder embedder(spec);
    EmbeddingVector v = embedder.embed("hello", TextRole::kQuery);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == doctest::Approx(12.0));  // "query: hello" has 12 chars
    {
      std::lock_guard lock(body_mutex);
      CHECK(last_body.at("model") == "test-model");
      CHECK(last_body.at("input").at(0) == "query: hello");
    }
    (void)embedder.embed("hello", TextRole::kQuery);
    CHECK(requests.load() == 1);
  }

  SUBCASE("batched table precompute uses one request") {
    Embedder embedder(spec);
    Corpus corpus = Corpus::from_tables({
        {"d", "one", {"a"}},
        {"d", "two", {"b"}},
        {"d", "three", {"c"}},
    });
    embedder.precompute_tables(corpus);
    CHECK(requests.load() == 1);
    CHECK(embedder.backend_calls() == 1);
    (void)embedder.embed(serialize_table(corpus.at(0)), TextRole::kDocument);
    CHECK(requests.load() == 1);  // cache hit
  }

  SUBCASE("dimension mismatch is a backend error") {
    EmbedderSpec strict = spec;
    strict.dimension = 7;
    Embedder embedder(strict);
    CHECK_THROWS_AS(embedder.embed("hello"), BackendError);
  }

  SUBCASE("unreachable endpoint is a backend error") {
    EmbedderSpec dead = spec;
    dead.endpoint = "http://127.0.0.1:1/v1/embeddings";
    dead.timeout_sec = 1;
    Embedder embedder(dead);
    CHECK_THROWS_AS(embedder.embed("hello"), BackendError);
  }

  server.stop();
  server_thread.join();
}
