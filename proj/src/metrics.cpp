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

#include "murre/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "murre/errors.hpp"

namespace murre {

std::vector<RankedRef> to_ranked_refs(const std::vector<RankedTable>& ranked) {
  std::vector<RankedRef> out;
  out.reserve(ranked.size());
  for (const RankedTable& r : ranked) out.push_back({ref_of(r.table), r.score});
  return out;
}

std::vector<TraceHop> resolve_trace(const std::vector<HopTrace>& trace, const Corpus& corpus) {
  std::vector<TraceHop> out;
  out.reserve(trace.size());
  for (const HopTrace& hop : trace) {
    TraceHop resolved;
    resolved.hop = hop.hop;
    for (const BeamTrace& beam : hop.beams) {
      TraceBeam tb;
      tb.beam = beam.beam;
      tb.query_text = beam.query_text;
      tb.stopped = beam.stopped;
      tb.early_stop_ignored = beam.early_stop_ignored;
      tb.incident = beam.incident;
      for (const ScoredTable& c : beam.candidates) {
        tb.top.push_back({ref_of(corpus.at(c.index)), c.probability});
      }
      resolved.beams.push_back(std::move(tb));
    }
    out.push_back(std::move(resolved));
  }
  return out;
}

double recall_at_k(std::span<const RankedRef> ranked, const std::vector<TableRef>& gold,
                   std::size_t k) {
  if (gold.empty()) throw InputError("recall_at_k: empty gold set");
  std::set<TableRef> gold_set(gold.begin(), gold.end());
  std::size_t hit = 0;
  const std::size_t upto = std::min(k, ranked.size());
  for (std::size_t i = 0; i < upto; ++i) {
    if (gold_set.erase(ranked[i].ref) > 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

int complete_recall_at_k(std::span<const RankedRef> ranked, const std::vector<TableRef>& gold,
                         std::size_t k) {
  if (gold.empty()) throw InputError("complete_recall_at_k: empty gold set");
  std::set<TableRef> gold_set(gold.begin(), gold.end());
  const std::size_t upto = std::min(k, ranked.size());
  for (std::size_t i = 0; i < upto && !gold_set.empty(); ++i) {
    gold_set.erase(ranked[i].ref);
  }
  return gold_set.empty() ? 1 : 0;
}

MetricsReport aggregate_metrics(const std::vector<RunRecord>& records,
                                const std::vector<std::size_t>& ks, std::size_t breakdown_k,
                                std::size_t max_hop) {
  MetricsReport report;
  report.ks = ks;
  report.breakdown_k = breakdown_k;
  report.question_count = records.size();
  report.recall.assign(ks.size(), 0.0);
  report.complete_recall.assign(ks.size(), 0.0);
  report.stopped_by_hop.assign(max_hop, 0.0);
  if (records.empty()) return report;

  double bucket_hits[4] = {0, 0, 0, 0};
  for (const RunRecord& rec : records) {
    if (rec.gold.empty()) {
      throw InputError("aggregate_metrics: question " + rec.id + " has no gold label");
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
      report.recall[i] += recall_at_k(rec.ranked, rec.gold, ks[i]);
      report.complete_recall[i] += complete_recall_at_k(rec.ranked, rec.gold, ks[i]);
    }
    const std::size_t bucket = std::min<std::size_t>(rec.gold.size(), 4) - 1;
    report.by_gold_count[bucket].count += 1;
    bucket_hits[bucket] += complete_recall_at_k(rec.ranked, rec.gold, breakdown_k);

    if (rec.stopped_at_hop > 0) {
      for (std::size_t h = rec.stopped_at_hop; h <= max_hop; ++h) {
        report.stopped_by_hop[h - 1] += 1.0;
      }
    }
    report.retrieval_calls += rec.calls.retrievals;
    report.removal_calls += rec.calls.removals;
  }

  const double n = static_cast<double>(records.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    report.recall[i] /= n;
    report.complete_recall[i] /= n;
  }
  for (int b = 0; b < 4; ++b) {
    if (report.by_gold_count[b].count > 0) {
      report.by_gold_count[b].complete_recall =
          bucket_hits[b] / static_cast<double>(report.by_gold_count[b].count);
    }
  }
  for (double& v : report.stopped_by_hop) v /= n;
  report.never_stopped =
      report.stopped_by_hop.empty() ? 1.0 : 1.0 - report.stopped_by_hop.back();
  return report;
}

long long call_budget(const RunParams& params, long long n_questions, BudgetMethod method) {
  const long long b = static_cast<long long>(params.beam_size);
  const long long h = static_cast<long long>(params.max_hop);
  switch (method) {
    case BudgetMethod::kMurre:
      return (1 + b + (h - 1) * b * 2) * n_questions;
    case BudgetMethod::kCrush:
      return 2 * n_questions;
    case BudgetMethod::kSingleHop:
      return n_questions;
  }
  throw InputError("call_budget: unknown method");
}

std::string format_rate(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  out << "questions: " << report.question_count << "\n";
  out << "k        recall   complete\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << report.ks[i];
    for (std::size_t pad = std::to_string(report.ks[i]).size(); pad < 9; ++pad) out << ' ';
    out << format_rate(report.recall[i]) << "   " << format_rate(report.complete_recall[i])
        << "\n";
  }
  out << "complete recall k=" << report.breakdown_k << " by #gold:";
  static const char* kBucketNames[4] = {"1", "2", "3", ">=4"};
  for (int b = 0; b < 4; ++b) {
    out << "  " << kBucketNames[b] << ": " << format_rate(report.by_gold_count[b].complete_recall)
        << " (" << report.by_gold_count[b].count << ")";
  }
  out << "\n";
  out << "stopped by hop:";
  for (std::size_t h = 0; h < report.stopped_by_hop.size(); ++h) {
    out << "  h" << (h + 1) << ": " << format_rate(report.stopped_by_hop[h]);
  }
  out << "  never: " << format_rate(report.never_stopped) << "\n";
  out << "backend calls: " << report.retrieval_calls << " retrievals, " << report.removal_calls
      << " removals\n";
  return out.str();
}

}  // namespace murre
