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
#include <string>
#include <vector>

#include "murre/embedding.hpp"
#include "murre/removal.hpp"
#include "murre/schema.hpp"

namespace murre {

// One retrieve step on a beam: the query used at that hop, the table it
// retrieved, and the table's relevance probability under that query.
struct PathNode {
  std::string query_text;
  std::size_t table_index = 0;  // position in the corpus
  double probability = 0.0;

  bool operator==(const PathNode&) const = default;
};

struct RetrievalPath {
  std::vector<PathNode> nodes;
  bool stopped = false;
};

// Product of the node probabilities. Throws InputError on an empty path.
double path_score(const RetrievalPath& path);

struct RunParams {
  std::size_t beam_size = 5;
  std::size_t max_hop = 3;
  std::size_t top_n = 20;
  bool no_removal = false;
  bool no_tabulation = false;
  bool no_early_stop = false;
  // Optional variant: skip candidates already on the path when extending.
  bool exclude_retrieved = false;
};

// Per-beam trace of one hop: the query that was ranked and its top-B
// candidates, or the stop that froze the beam.
struct BeamTrace {
  std::size_t beam = 0;
  std::string query_text;
  bool stopped = false;
  bool early_stop_ignored = false;  // no_early_stop ablation swallowed a stop mark
  std::string incident;             // non-empty when a remover failure stopped the beam
  std::vector<ScoredTable> candidates;
};

struct HopTrace {
  std::size_t hop = 0;
  std::vector<BeamTrace> beams;
};

struct CallCounters {
  long retrievals = 0;  // corpus rankings
  long removals = 0;    // removals computed (cache hits excluded)
};

struct RunOutput {
  std::vector<RetrievalPath> paths;
  std::vector<HopTrace> trace;
  std::size_t hops_executed = 0;
  // Smallest hop after which every beam was stopped; 0 when beams were
  // still active at the end.
  std::size_t stopped_at_hop = 0;
  CallCounters calls;
  std::vector<std::string> incidents;
};

// Hop 1: ranks the corpus with the original question text and opens one
// single-node path per top-B table. No removal happens before the first
// retrieval.
std::vector<RetrievalPath> first_hop(const QuestionRecord& question, const Corpus& corpus,
                                     const Embedder& embedder, const RunParams& params,
                                     HopTrace* trace = nullptr, CallCounters* calls = nullptr);

// One removal-then-retrieval round: stopped paths pass through, each
// active path is rewritten and extended by its top-B candidates, and the
// pooled BxB candidates plus stopped paths are pruned back to B by
// descending path score (ties: shorter path, then corpus index of the
// last table). Remover failures stop the affected beam.
std::vector<RetrievalPath> expand_hop(const QuestionRecord& question,
                                      const std::vector<RetrievalPath>& paths,
                                      const Corpus& corpus, Remover& remover,
                                      const Embedder& embedder, const RunParams& params,
                                      HopTrace* trace = nullptr, CallCounters* calls = nullptr,
                                      std::vector<std::string>* incidents = nullptr);

// The full multi-hop loop: first hop, then up to max_hop - 1 expansion
// rounds, ending early once every beam is stopped.
RunOutput run(const QuestionRecord& question, const Corpus& corpus, Remover& remover,
              const Embedder& embedder, const RunParams& params);

}  // namespace murre
