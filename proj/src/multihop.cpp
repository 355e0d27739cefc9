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

#include "murre/multihop.hpp"

#include <algorithm>
#include <set>

#include "murre/errors.hpp"

namespace murre {

namespace {

// Prune order: highest score first; on ties the shorter path wins (an
// early-stopped confident path beats an equal-scoring extension), then
// the lower corpus index of the last table.
bool prune_before(const RetrievalPath& a, const RetrievalPath& b) {
  const double sa = path_score(a);
  const double sb = path_score(b);
  if (sa != sb) return sa > sb;
  if (a.nodes.size() != b.nodes.size()) return a.nodes.size() < b.nodes.size();
  return a.nodes.back().table_index < b.nodes.back().table_index;
}

bool same_nodes(const RetrievalPath& a, const RetrievalPath& b) {
  return a.nodes == b.nodes;
}

std::vector<TableSchema> tables_on_path(const RetrievalPath& path, const Corpus& corpus) {
  std::vector<TableSchema> tables;
  tables.reserve(path.nodes.size());
  for (const PathNode& node : path.nodes) tables.push_back(corpus.at(node.table_index));
  return tables;
}

// Ranking that can skip tables already on the path (exclude_retrieved):
// rank deep enough, drop on-path indices, keep B.
std::vector<ScoredTable> rank_for_path(const Embedder& embedder, const std::string& query,
                                       const Corpus& corpus, const RetrievalPath& path,
                                       const RunParams& params) {
  if (!params.exclude_retrieved) {
    return rank_corpus(embedder, query, corpus, params.beam_size);
  }
  std::vector<ScoredTable> ranked =
      rank_corpus(embedder, query, corpus, params.beam_size + path.nodes.size());
  std::set<std::size_t> on_path;
  for (const PathNode& node : path.nodes) on_path.insert(node.table_index);
  std::vector<ScoredTable> kept;
  for (const ScoredTable& c : ranked) {
    if (on_path.contains(c.index)) continue;
    kept.push_back(c);
    if (kept.size() == params.beam_size) break;
  }
  return kept;
}

}  // namespace

double path_score(const RetrievalPath& path) {
  if (path.nodes.empty()) throw InputError("path_score: empty path");
  double score = 1.0;
  for (const PathNode& node : path.nodes) score *= node.probability;
  return score;
}

std::vector<RetrievalPath> first_hop(const QuestionRecord& question, const Corpus& corpus,
                                     const Embedder& embedder, const RunParams& params,
                                     HopTrace* trace, CallCounters* calls) {
  if (params.beam_size == 0) throw InputError("first_hop: beam size must be positive");
  std::vector<ScoredTable> ranked =
      rank_corpus(embedder, question.text, corpus, params.beam_size);
  if (calls != nullptr) ++calls->retrievals;

  std::vector<RetrievalPath> paths;
  paths.reserve(ranked.size());
  for (const ScoredTable& c : ranked) {
    paths.push_back({{{question.text, c.index, c.probability}}, false});
  }
  if (trace != nullptr) {
    trace->hop = 1;
    trace->beams.push_back({0, question.text, false, false, "", std::move(ranked)});
  }
  return paths;
}

std::vector<RetrievalPath> expand_hop(const QuestionRecord& question,
                                      const std::vector<RetrievalPath>& paths,
                                      const Corpus& corpus, Remover& remover,
                                      const Embedder& embedder, const RunParams& params,
                                      HopTrace* trace, CallCounters* calls,
                                      std::vector<std::string>* incidents) {
  if (std::none_of(paths.begin(), paths.end(),
                   [](const RetrievalPath& p) { return !p.stopped; })) {
    throw InputError("expand_hop: no active path");
  }

  std::vector<RetrievalPath> pool;
  for (std::size_t beam = 0; beam < paths.size(); ++beam) {
    const RetrievalPath& path = paths[beam];
    BeamTrace beam_trace;
    beam_trace.beam = beam;

    if (path.stopped) {
      pool.push_back(path);
      beam_trace.stopped = true;
      if (trace != nullptr) trace->beams.push_back(std::move(beam_trace));
      continue;
    }

    std::string next_query;
    bool stop = false;
    try {
      RemovalResult removal = remover.remove(question, tables_on_path(path, corpus));
      if (calls != nullptr && !removal.served_from_cache) ++calls->removals;
      if (removal.kind == RemovalKind::kEarlyStop) {
        if (params.no_early_stop) {
          // The ablation ignores the stop mark and keeps retrieving with
          // the query the beam last used.
          next_query = path.nodes.back().query_text;
          beam_trace.early_stop_ignored = true;
        } else {
          stop = true;
        }
      } else {
        next_query = removal.query_text;
      }
    } catch (const Error& e) {
      // Remover failure (transport exhausted, degenerate output, missing
      // labels): freeze this beam and record the incident.
      stop = true;
      beam_trace.incident = e.what();
      if (incidents != nullptr) {
        incidents->push_back("question " + question.id + " beam " + std::to_string(beam) + ": " +
                             e.what());
      }
    }

    if (stop) {
      RetrievalPath frozen = path;
      frozen.stopped = true;
      pool.push_back(std::move(frozen));
      beam_trace.stopped = true;
      if (trace != nullptr) trace->beams.push_back(std::move(beam_trace));
      continue;
    }

    std::vector<ScoredTable> ranked = rank_for_path(embedder, next_query, corpus, path, params);
    if (calls != nullptr) ++calls->retrievals;
    for (const ScoredTable& c : ranked) {
      RetrievalPath extended = path;
      extended.nodes.push_back({next_query, c.index, c.probability});
      pool.push_back(std::move(extended));
    }
    beam_trace.query_text = next_query;
    beam_trace.candidates = std::move(ranked);
    if (trace != nullptr) trace->beams.push_back(std::move(beam_trace));
  }

  // Merge duplicate candidates (identical node sequences) before pruning
  // so beam slots are not wasted on the same state.
  std::vector<RetrievalPath> unique;
  for (RetrievalPath& p : pool) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](const RetrievalPath& u) { return same_nodes(u, p); });
    if (!dup) unique.push_back(std::move(p));
  }

  std::stable_sort(unique.begin(), unique.end(), prune_before);
  if (unique.size() > params.beam_size) unique.resize(params.beam_size);
  return unique;
}

RunOutput run(const QuestionRecord& question, const Corpus& corpus, Remover& remover,
              const Embedder& embedder, const RunParams& params) {
  if (params.max_hop == 0) throw InputError("run: max hop must be positive");

  RunOutput out;
  HopTrace hop_trace;
  out.paths = first_hop(question, corpus, embedder, params, &hop_trace, &out.calls);
  out.trace.push_back(std::move(hop_trace));
  out.hops_executed = 1;

  for (std::size_t hop = 2; hop <= params.max_hop; ++hop) {
    const bool all_stopped = std::all_of(out.paths.begin(), out.paths.end(),
                                         [](const RetrievalPath& p) { return p.stopped; });
    if (all_stopped) break;

    HopTrace t;
    t.hop = hop;
    out.paths = expand_hop(question, out.paths, corpus, remover, embedder, params, &t,
                           &out.calls, &out.incidents);
    out.trace.push_back(std::move(t));
    out.hops_executed = hop;
  }

  const bool all_stopped = std::all_of(out.paths.begin(), out.paths.end(),
                                       [](const RetrievalPath& p) { return p.stopped; });
  out.stopped_at_hop = all_stopped ? out.hops_executed : 0;
  return out;
}

}  // namespace murre
