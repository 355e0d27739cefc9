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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "murre/multihop.hpp"
#include "murre/schema.hpp"
#include "murre/scoring.hpp"

namespace murre {

struct RankedRef {
  TableRef ref;
  double score = 0.0;
};

std::vector<RankedRef> to_ranked_refs(const std::vector<RankedTable>& ranked);

// Trace mirror of multihop's per-hop records with corpus indices
// resolved to (db, table) names, so results files stand alone.
struct TraceCandidate {
  TableRef ref;
  double probability = 0.0;
};

struct TraceBeam {
  std::size_t beam = 0;
  std::string query_text;
  bool stopped = false;
  bool early_stop_ignored = false;
  std::string incident;
  std::vector<TraceCandidate> top;
};

struct TraceHop {
  std::size_t hop = 0;
  std::vector<TraceBeam> beams;
};

std::vector<TraceHop> resolve_trace(const std::vector<HopTrace>& trace, const Corpus& corpus);

// |gold ∩ top-k| / |gold|. Throws InputError on empty gold.
double recall_at_k(std::span<const RankedRef> ranked, const std::vector<TableRef>& gold,
                   std::size_t k);

// 1 iff gold ⊆ top-k.
int complete_recall_at_k(std::span<const RankedRef> ranked, const std::vector<TableRef>& gold,
                         std::size_t k);

// Everything one question run produces. wall_ms is diagnostic only and is
// never serialized, keeping results files byte-reproducible.
struct RunRecord {
  std::string id;
  std::vector<RankedRef> ranked;
  std::vector<TableRef> gold;
  std::size_t hops = 0;
  std::size_t stopped_at_hop = 0;  // 0 = beams still active at the end
  CallCounters calls;
  std::vector<TraceHop> trace;
  double wall_ms = 0.0;
};

struct MetricsReport {
  std::size_t question_count = 0;
  std::vector<std::size_t> ks;
  std::vector<double> recall;           // parallel to ks
  std::vector<double> complete_recall;  // parallel to ks

  // Complete recall at breakdown_k split by gold-table count (1, 2, 3, >=4).
  std::size_t breakdown_k = 5;
  struct Bucket {
    std::size_t count = 0;
    double complete_recall = 0.0;

    bool operator==(const Bucket&) const = default;
  };
  Bucket by_gold_count[4];

  // stopped_by_hop[h-1] = fraction of questions whose beams were all
  // stopped by hop h (cumulative); the remainder never stopped.
  std::vector<double> stopped_by_hop;
  double never_stopped = 0.0;

  long retrieval_calls = 0;
  long removal_calls = 0;

  bool operator==(const MetricsReport&) const = default;
};

// Means of per-question metrics for every k, the per-gold-count
// breakdown, the hop-stop distribution, and summed call counters. Every
// record must carry gold labels (error naming the id otherwise).
MetricsReport aggregate_metrics(const std::vector<RunRecord>& records,
                                const std::vector<std::size_t>& ks, std::size_t breakdown_k,
                                std::size_t max_hop);

enum class BudgetMethod { kMurre, kCrush, kSingleHop };

// Upper bound on backend operations (corpus rankings + removals) for
// n_questions questions.
long long call_budget(const RunParams& params, long long n_questions, BudgetMethod method);

// Four-decimal fixed formatting used everywhere a rate is printed.
std::string format_rate(double value);

std::string format_report(const MetricsReport& report);

}  // namespace murre
