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

#include "murre/scoring.hpp"

#include <algorithm>

#include "murre/errors.hpp"

namespace murre {

std::map<std::size_t, double> score_tables(const std::vector<RetrievalPath>& paths) {
  if (paths.empty()) throw InputError("score_tables: no paths");

  std::map<std::size_t, double> table_score;
  for (const RetrievalPath& path : paths) {
    const double score = path_score(path);
    for (const PathNode& node : path.nodes) {
      auto [it, inserted] = table_score.emplace(node.table_index, score);
      if (!inserted && score > it->second) it->second = score;
    }
  }
  return table_score;
}

std::vector<RankedTable> select_top_n(const std::map<std::size_t, double>& scores,
                                      const Corpus& corpus, std::size_t n) {
  std::vector<RankedTable> out;
  out.reserve(scores.size());
  for (const auto& [index, score] : scores) {
    out.push_back({corpus.at(index), index, score, 0});
  }
  // scores iterates by ascending index, so a stable sort on score alone
  // leaves ties in corpus order
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedTable& a, const RankedTable& b) { return a.score > b.score; });
  if (out.size() > n) out.resize(n);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

}  // namespace murre
