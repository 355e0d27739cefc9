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

#include "murre/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "murre/errors.hpp"

namespace murre {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Corpus Corpus::from_tables(std::vector<TableSchema> tables) {
  std::sort(tables.begin(), tables.end(), [](const TableSchema& a, const TableSchema& b) {
    return ref_of(a) < ref_of(b);
  });
  Corpus corpus;
  corpus.tables_ = std::move(tables);
  for (std::size_t i = 0; i < corpus.tables_.size(); ++i) {
    const TableSchema& t = corpus.tables_[i];
    if (t.db_name.empty() || t.table_name.empty()) {
      throw IntegrityError("corpus: table with empty db or table name at position " +
                           std::to_string(i));
    }
    if (t.columns.empty()) {
      throw IntegrityError("corpus: table has zero columns: " + t.db_name + "." + t.table_name);
    }
    for (const std::string& c : t.columns) {
      if (c.empty()) {
        throw IntegrityError("corpus: empty column name in " + t.db_name + "." + t.table_name);
      }
    }
    auto [it, inserted] = corpus.index_.emplace(ref_of(t), i);
    if (!inserted) {
      throw IntegrityError("corpus: duplicate table " + t.db_name + "." + t.table_name);
    }
  }
  return corpus;
}

std::optional<std::size_t> Corpus::find(const TableRef& ref) const {
  auto it = index_.find(ref);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string serialize_table(const TableSchema& t) {
  std::string out = t.db_name;
  out += '.';
  out += t.table_name;
  out += '(';
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i > 0) out += ", ";
    out += t.columns[i];
  }
  out += ')';
  return out;
}

std::optional<TableSchema> parse_table_string(std::string_view s) {
  s = trim(s);
  const std::size_t dot = s.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const std::size_t open = s.find('(', dot + 1);
  if (open == std::string_view::npos) return std::nullopt;
  if (s.empty() || s.back() != ')') return std::nullopt;

  TableSchema t;
  t.db_name = std::string(trim(s.substr(0, dot)));
  t.table_name = std::string(trim(s.substr(dot + 1, open - dot - 1)));
  if (t.db_name.empty() || t.table_name.empty()) return std::nullopt;

  std::string_view cols = s.substr(open + 1, s.size() - open - 2);
  if (trim(cols).empty()) return std::nullopt;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = cols.find(',', start);
    std::string_view col =
        trim(comma == std::string_view::npos ? cols.substr(start) : cols.substr(start, comma - start));
    if (col.empty()) return std::nullopt;
    t.columns.emplace_back(col);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return t;
}

TableSchema parse_table_string_or_throw(std::string_view s) {
  auto t = parse_table_string(s);
  if (!t) throw ParseError("not a table string: \"" + std::string(s) + "\"");
  return *t;
}

TableRef parse_table_ref(std::string_view s) {
  s = trim(s);
  const std::size_t dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) {
    throw ParseError("not a db.table reference: \"" + std::string(s) + "\"");
  }
  return {std::string(trim(s.substr(0, dot))), std::string(trim(s.substr(dot + 1)))};
}

Corpus load_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open schema file: " + path.string());

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("schema file " + path.string() + ": malformed JSON at byte " +
                     std::to_string(e.byte) + " (" + e.what() + ")");
  }
  if (!doc.is_array()) {
    throw ParseError("schema file " + path.string() + ": expected a top-level array");
  }

  std::vector<TableSchema> tables;
  for (const json& db : doc) {
    if (!db.is_object() || !db.contains("db_id") || !db.contains("table_names_original") ||
        !db.contains("column_names_original")) {
      throw ParseError("schema file " + path.string() +
                       ": database entry missing db_id/table_names_original/column_names_original");
    }
    const std::string db_id = db.at("db_id").get<std::string>();
    const json& names = db.at("table_names_original");
    std::vector<TableSchema> db_tables;
    db_tables.reserve(names.size());
    for (const json& name : names) {
      db_tables.push_back({db_id, name.get<std::string>(), {}});
    }
    for (const json& col : db.at("column_names_original")) {
      if (!col.is_array() || col.size() != 2) {
        throw ParseError("schema file " + path.string() + ": column entry for " + db_id +
                         " is not a [table_index, name] pair");
      }
      const long long idx = col.at(0).get<long long>();
      if (idx == -1) continue;  // the synthetic "*" row
      if (idx < 0 || static_cast<std::size_t>(idx) >= db_tables.size()) {
        throw IntegrityError("schema file " + path.string() + ": column in " + db_id +
                             " references table index " + std::to_string(idx));
      }
      db_tables[static_cast<std::size_t>(idx)].columns.push_back(col.at(1).get<std::string>());
    }
    for (TableSchema& t : db_tables) {
      if (t.columns.empty()) {
        throw IntegrityError("schema file " + path.string() + ": table has zero columns: " +
                             t.db_name + "." + t.table_name);
      }
      tables.push_back(std::move(t));
    }
  }
  return Corpus::from_tables(std::move(tables));
}

std::vector<QuestionRecord> load_question_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open question file: " + path.string());

  std::vector<QuestionRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("question file " + path.string() + " line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    QuestionRecord q;
    if (!obj.contains("id") || !obj.contains("question")) {
      throw ParseError("question file " + path.string() + " line " + std::to_string(line_no) +
                       ": missing id or question");
    }
    q.id = obj.at("id").is_string() ? obj.at("id").get<std::string>() : obj.at("id").dump();
    if (!ids.insert(q.id).second) {
      // removal caching keys on the question id, so ids must be unique
      throw IntegrityError("question file " + path.string() + ": duplicate question id " + q.id);
    }
    q.text = obj.at("question").get<std::string>();
    if (trim(q.text).empty()) {
      throw ParseError("question file " + path.string() + " line " + std::to_string(line_no) +
                       ": empty question text (id " + q.id + ")");
    }
    if (obj.contains("gold_tables")) {
      for (const json& ref : obj.at("gold_tables")) {
        q.gold_tables.push_back(parse_table_ref(ref.get<std::string>()));
      }
      std::sort(q.gold_tables.begin(), q.gold_tables.end());
      q.gold_tables.erase(std::unique(q.gold_tables.begin(), q.gold_tables.end()),
                          q.gold_tables.end());
    }
    out.push_back(std::move(q));
  }
  return out;
}

GoldHistogram corpus_stats(const Corpus& corpus, const std::vector<QuestionRecord>& questions) {
  GoldHistogram h;
  for (const QuestionRecord& q : questions) {
    for (const TableRef& ref : q.gold_tables) {
      if (!corpus.find(ref)) {
        throw IntegrityError("question " + q.id + ": gold table " + ref.db_name + "." +
                             ref.table_name + " not in corpus");
      }
    }
    switch (q.gold_tables.size()) {
      case 0: ++h.unlabeled; break;
      case 1: ++h.one; break;
      case 2: ++h.two; break;
      case 3: ++h.three; break;
      default: ++h.four_plus; break;
    }
    ++h.total;
  }
  return h;
}

}  // namespace murre
