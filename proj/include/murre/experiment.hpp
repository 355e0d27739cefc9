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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "murre/embedding.hpp"
#include "murre/metrics.hpp"
#include "murre/multihop.hpp"
#include "murre/removal.hpp"
#include "murre/schema.hpp"

namespace murre {

struct ExperimentConfig {
  std::filesystem::path schema_path;
  std::filesystem::path questions_path;
  std::filesystem::path out_path;  // empty = no results file
  RunParams params;
  EmbedderSpec embedder;
  RemoverSpec remover;
  std::vector<std::size_t> ks = {3, 5, 10, 20};
  std::size_t breakdown_k = 5;
  std::size_t workers = 1;
  bool strict = false;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  MetricsReport report;
  bool labeled = true;  // false skips the report (unlabeled question set)
  std::size_t incident_count = 0;
  RemoverStats remover_stats;
  long embedder_backend_calls = 0;
};

// One results-file line per record. Scores serialize with the default
// shortest round-trip representation, so files are byte-reproducible.
std::string record_to_jsonl(const RunRecord& record);
RunRecord record_from_jsonl(const std::string& line);

void write_results_file(const std::filesystem::path& path,
                        const std::vector<RunRecord>& records);
std::vector<RunRecord> load_results_file(const std::filesystem::path& path);

// Runs every question through the multi-hop pipeline under a worker cap.
// Records keep question-file order regardless of completion order. Inputs
// are validated before any question runs. Per-question failures under
// non-strict mode yield a record with whatever partial ranking exists.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace murre
