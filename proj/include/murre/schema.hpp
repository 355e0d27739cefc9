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

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace murre {

// One database table, the unit of retrieval. Column names are stored
// verbatim (spaces and case preserved).
struct TableSchema {
  std::string db_name;
  std::string table_name;
  std::vector<std::string> columns;

  bool operator==(const TableSchema&) const = default;
};

// (db, table) pair used by gold labels and the corpus index.
struct TableRef {
  std::string db_name;
  std::string table_name;

  auto operator<=>(const TableRef&) const = default;
};

inline TableRef ref_of(const TableSchema& t) { return {t.db_name, t.table_name}; }

// Immutable, ordered table collection. Ordering is sorted by
// (db_name, table_name) so downstream tie-breaking does not depend on
// input file order. Safe to share across threads once built.
class Corpus {
 public:
  Corpus() = default;

  // Sorts, indexes, and validates (unique (db, table), non-empty columns).
  static Corpus from_tables(std::vector<TableSchema> tables);

  const std::vector<TableSchema>& tables() const { return tables_; }
  std::size_t size() const { return tables_.size(); }
  bool empty() const { return tables_.empty(); }
  const TableSchema& at(std::size_t i) const { return tables_.at(i); }

  std::optional<std::size_t> find(const TableRef& ref) const;

 private:
  std::vector<TableSchema> tables_;
  std::map<TableRef, std::size_t> index_;
};

struct QuestionRecord {
  std::string id;
  std::string text;
  // Sorted, de-duplicated. May be empty for unlabeled runs.
  std::vector<TableRef> gold_tables;
};

// Canonical text form: "<db>.<table>(<col1>, <col2>, ...)".
std::string serialize_table(const TableSchema& t);

// Inverse of serialize_table, with whitespace around separators
// normalized. Returns nullopt on grammar violations (missing dot,
// missing parentheses, empty column list).
std::optional<TableSchema> parse_table_string(std::string_view s);

// Same, but throws ParseError carrying the offending string.
TableSchema parse_table_string_or_throw(std::string_view s);

// "db.table" (dot convention, no columns). Throws ParseError.
TableRef parse_table_ref(std::string_view s);

// Loads a Spider-format tables.json file: array of objects with db_id,
// table_names_original, and column_names_original as [table_index, name]
// pairs (table_index -1 rows are skipped).
Corpus load_schema_file(const std::filesystem::path& path);

// JSONL, one {"id", "question", "gold_tables": ["db.table", ...]} per line.
std::vector<QuestionRecord> load_question_file(const std::filesystem::path& path);

// Question counts per number of gold tables. Unlabeled questions land in
// their own bucket so the buckets always sum to total.
struct GoldHistogram {
  long unlabeled = 0;
  long one = 0;
  long two = 0;
  long three = 0;
  long four_plus = 0;
  long total = 0;

  bool operator==(const GoldHistogram&) const = default;
};

// Verifies every gold reference resolves in the corpus (IntegrityError
// naming the question id otherwise) and buckets by gold-table count.
GoldHistogram corpus_stats(const Corpus& corpus, const std::vector<QuestionRecord>& questions);

}  // namespace murre
