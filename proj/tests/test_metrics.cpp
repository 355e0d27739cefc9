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

#include <filesystem>
#include <random>

#include "doctest.h"
#include "murre/errors.hpp"
#include "murre/metrics.hpp"
#include "oracles.hpp"

using namespace murre;

namespace {

RankedRef rr(const std::string& table) { return {{"d", table}, 0.5}; }

TableRef gr(const std::string& table) { return {"d", table}; }

// Random ranked list + gold set over a small label pool.
void random_case(std::mt19937& rng, std::vector<RankedRef>& ranked,
                 std::vector<TableRef>& gold) {
  ranked.clear();
  gold.clear();
  std::vector<int> pool(12);
  for (int i = 0; i < 12; ++i) pool[i] = i;
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::size_t n_ranked = 1 + rng() % 10;
  for (std::size_t i = 0; i < n_ranked; ++i) {
    ranked.push_back(rr("t" + std::to_string(pool[i])));
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  const std::size_t n_gold = 1 + rng() % 4;
  for (std::size_t i = 0; i < n_gold; ++i) {
    gold.push_back(gr("t" + std::to_string(pool[i])));
  }
  std::sort(gold.begin(), gold.end());
  gold.erase(std::unique(gold.begin(), gold.end()), gold.end());
}

}  // namespace

TEST_CASE("recall_at_k definition") {
  const std::vector<RankedRef> top3 = {rr("A"), rr("C"), rr("D")};
  const std::vector<RankedRef> just_a = {rr("A")};
  CHECK(recall_at_k(top3, {gr("A"), gr("B")}, 3) == doctest::Approx(0.5));
  CHECK(recall_at_k(just_a, {gr("A")}, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(recall_at_k(top3, {}, 3), InputError);
}

TEST_CASE("complete_recall_at_k definition") {
  const std::vector<RankedRef> top3 = {rr("A"), rr("C"), rr("D")};
  const std::vector<RankedRef> b_then_a = {rr("B"), rr("A")};
  CHECK(complete_recall_at_k(top3, {gr("A"), gr("B")}, 3) == 0);
  CHECK(complete_recall_at_k(b_then_a, {gr("A"), gr("B")}, 2) == 1);
  CHECK_THROWS_AS(complete_recall_at_k(top3, {}, 3), InputError);
}

TEST_CASE("metrics agree with set-arithmetic oracles on random cases") {
  std::mt19937 rng(59);
  std::vector<RankedRef> ranked;
  std::vector<TableRef> gold;
  for (int i = 0; i < 1000; ++i) {
    random_case(rng, ranked, gold);
    const std::size_t k = 1 + rng() % 12;
    CHECK(recall_at_k(ranked, gold, k) == doctest::Approx(oracle::brute_recall(ranked, gold, k)));
    CHECK(complete_recall_at_k(ranked, gold, k) == oracle::brute_complete(ranked, gold, k));
    // complete recall 1 implies recall 1
    if (complete_recall_at_k(ranked, gold, k) == 1) {
      CHECK(recall_at_k(ranked, gold, k) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("both metrics are monotone in k") {
  std::mt19937 rng(61);
  std::vector<RankedRef> ranked;
  std::vector<TableRef> gold;
  for (int i = 0; i < 300; ++i) {
    random_case(rng, ranked, gold);
    for (std::size_t k = 1; k < 12; ++k) {
      CHECK(recall_at_k(ranked, gold, k) <= recall_at_k(ranked, gold, k + 1));
      CHECK(complete_recall_at_k(ranked, gold, k) <= complete_recall_at_k(ranked, gold, k + 1));
    }
  }
}

TEST_CASE("aggregate_metrics") {
  SUBCASE("means over questions") {
    RunRecord hit;
    hit.id = "a";
    hit.ranked = {rr("A"), rr("B")};
    hit.gold = {gr("A"), gr("B")};
    RunRecord miss;
    miss.id = "b";
    miss.ranked = {rr("C")};
    miss.gold = {gr("A")};
    MetricsReport report = aggregate_metrics({hit, miss}, {5}, 5, 3);
    CHECK(report.question_count == 2);
    CHECK(report.complete_recall[0] == doctest::Approx(0.5));
    CHECK(report.recall[0] == doctest::Approx(0.5));
    CHECK(report.by_gold_count[0].count == 1);  // one 1-gold question
    CHECK(report.by_gold_count[1].count == 1);  // one 2-gold question
    CHECK(report.by_gold_count[0].complete_recall == doctest::Approx(0.0));
    CHECK(report.by_gold_count[1].complete_recall == doctest::Approx(1.0));
  }

  SUBCASE("every gold at rank one gives all-ones") {
    std::vector<RunRecord> records;
    for (int i = 0; i < 4; ++i) {
      RunRecord r;
      r.id = std::to_string(i);
      r.ranked = {rr("G")};
      r.gold = {gr("G")};
      records.push_back(r);
    }
    MetricsReport report = aggregate_metrics(records, {3, 5}, 5, 3);
    for (double v : report.recall) CHECK(v == doctest::Approx(1.0));
    for (double v : report.complete_recall) CHECK(v == doctest::Approx(1.0));
  }

  SUBCASE("aggregate complete recall never exceeds aggregate recall") {
    std::mt19937 rng(67);
    std::vector<RunRecord> records;
    for (int i = 0; i < 50; ++i) {
      RunRecord r;
      r.id = std::to_string(i);
      std::vector<RankedRef> ranked;
      std::vector<TableRef> gold;
      random_case(rng, ranked, gold);
      r.ranked = ranked;
      r.gold = gold;
      records.push_back(r);
    }
    MetricsReport report = aggregate_metrics(records, {1, 3, 5, 10}, 5, 3);
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
      CHECK(report.complete_recall[i] <= report.recall[i] + 1e-12);
    }
  }

  SUBCASE("a record without gold is an error naming the id") {
    RunRecord r;
    r.id = "nolabel";
    r.ranked = {rr("A")};
    CHECK_THROWS_WITH_AS(aggregate_metrics({r}, {5}, 5, 3), doctest::Contains("nolabel"),
                         InputError);
  }

  SUBCASE("hop-stop distribution is cumulative") {
    RunRecord early;
    early.id = "a";
    early.ranked = {rr("A")};
    early.gold = {gr("A")};
    early.stopped_at_hop = 2;
    RunRecord never;
    never.id = "b";
    never.ranked = {rr("A")};
    never.gold = {gr("A")};
    never.stopped_at_hop = 0;
    MetricsReport report = aggregate_metrics({early, never}, {5}, 5, 3);
    REQUIRE(report.stopped_by_hop.size() == 3);
    CHECK(report.stopped_by_hop[0] == doctest::Approx(0.0));
    CHECK(report.stopped_by_hop[1] == doctest::Approx(0.5));
    CHECK(report.stopped_by_hop[2] == doctest::Approx(0.5));
    CHECK(report.never_stopped == doctest::Approx(0.5));
  }

  SUBCASE("bucket counts over the SpiderUnion-shaped labels") {
    auto questions = load_question_file(std::filesystem::path(MURRE_SOURCE_DIR) /
                                        "data/spider_shape_questions.jsonl");
    std::vector<RunRecord> records;
    for (const QuestionRecord& q : questions) {
      RunRecord r;
      r.id = q.id;
      r.gold = q.gold_tables;
      for (const TableRef& ref : q.gold_tables) r.ranked.push_back({ref, 1.0});
      records.push_back(std::move(r));
    }
    MetricsReport report = aggregate_metrics(records, {5}, 5, 3);
    CHECK(report.by_gold_count[0].count == 395);
    CHECK(report.by_gold_count[1].count == 214);
    CHECK(report.by_gold_count[2].count == 43);
    CHECK(report.by_gold_count[3].count == 6);
    CHECK(report.by_gold_count[0].count + report.by_gold_count[1].count +
              report.by_gold_count[2].count + report.by_gold_count[3].count ==
          report.question_count);
  }
}

TEST_CASE("call_budget") {
  RunParams params;
  params.beam_size = 5;
  params.max_hop = 3;
  CHECK(call_budget(params, 1, BudgetMethod::kMurre) == 26);
  CHECK(call_budget(params, 100, BudgetMethod::kCrush) == 200);
  CHECK(call_budget(params, 100, BudgetMethod::kSingleHop) == 100);

  RunParams tiny;
  tiny.beam_size = 1;
  tiny.max_hop = 1;
  CHECK(call_budget(tiny, 1, BudgetMethod::kMurre) == 2);
}
