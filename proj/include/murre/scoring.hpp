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
#include <map>
#include <vector>

#include "murre/multihop.hpp"
#include "murre/schema.hpp"

namespace murre {

struct RankedTable {
  TableSchema table;
  std::size_t corpus_index = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based, no gaps
};

// Each table appearing on any path gets the maximum score over the paths
// containing it. Works on variable-length (early-stopped) paths. Throws
// InputError on an empty path set.
std::map<std::size_t, double> score_tables(const std::vector<RetrievalPath>& paths);

// Top min(n, |scores|) tables by descending score, ties broken by
// ascending corpus index; ranks assigned 1..K. Prefix-consistent in n.
std::vector<RankedTable> select_top_n(const std::map<std::size_t, double>& scores,
                                      const Corpus& corpus, std::size_t n);

}  // namespace murre
