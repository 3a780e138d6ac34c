#include "sps/corpus.hpp"

#include <cctype>
#include <fstream>
#include <regex>
#include <stdexcept>

#include "json.hpp"

namespace sps {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  throw std::logic_error("bad Split");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split: " + s);
}

namespace {

std::string json_value_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

SqlQuery parse_sql(const json& j) {
  SqlQuery q;
  q.select_column = j.at("sel").get<int>();
  q.aggregator = aggregator_from_code(j.at("agg").get<int>());
  for (const auto& cond : j.at("conds")) {
    Condition c;
    c.column = cond.at(0).get<int>();
    c.op = condition_op_from_code(cond.at(1).get<int>());
    c.value = json_value_to_string(cond.at(2));
    q.conditions.push_back(std::move(c));
  }
  return q;
}

const std::regex kNumericPattern(
    R"(^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$)");

const char* kMonths =
    "(january|february|march|april|may|june|july|august|september|october|"
    "november|december)";

const std::regex kDateIso(R"(^\d{4}-\d{1,2}-\d{1,2}$)");
const std::regex kDateSlash(R"(^\d{1,2}/\d{1,2}/\d{4}$)");
const std::regex kDateDayMonth(std::string(R"(^\d{1,2} )") + kMonths + R"( \d{4}$)",
                               std::regex::icase);
const std::regex kDateMonthDay(std::string("^") + kMonths + R"( \d{1,2},? \d{4}$)",
                               std::regex::icase);

bool is_numeric_cell(const std::string& cell) {
  return std::regex_match(cell, kNumericPattern);
}

bool is_date_cell(const std::string& cell) {
  return std::regex_match(cell, kDateIso) || std::regex_match(cell, kDateSlash) ||
         std::regex_match(cell, kDateDayMonth) || std::regex_match(cell, kDateMonthDay);
}

bool is_blank(const std::string& cell) {
  for (char c : cell) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& questions_path,
                     const std::filesystem::path& tables_path) {
  Dataset ds;

  std::ifstream tables_in(tables_path);
  if (!tables_in) {
    throw std::runtime_error("cannot open tables file: " + tables_path.string());
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(tables_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      TableSchema schema;
      schema.table_id = j.at("id").get<std::string>();
      for (const auto& h : j.at("header")) schema.column_names.push_back(h.get<std::string>());
      for (const auto& t : j.at("types")) {
        schema.column_types.push_back(column_type_from_string(t.get<std::string>()));
      }
      if (j.contains("rows")) {
        for (const auto& row : j["rows"]) {
          std::vector<std::string> cells;
          for (const auto& cell : row) cells.push_back(json_value_to_string(cell));
          if (cells.size() != schema.column_names.size()) {
            throw std::runtime_error("row width mismatch");
          }
          schema.rows.push_back(std::move(cells));
        }
      }
      if (schema.column_names.size() != schema.column_types.size()) {
        throw std::runtime_error("header/types length mismatch");
      }
      ds.tables.emplace(schema.table_id, std::move(schema));
    } catch (const std::exception& e) {
      throw std::runtime_error(tables_path.string() + ":" + std::to_string(lineno) +
                               ": malformed table record: " + e.what());
    }
  }

  std::ifstream questions_in(questions_path);
  if (!questions_in) {
    throw std::runtime_error("cannot open questions file: " + questions_path.string());
  }
  lineno = 0;
  while (std::getline(questions_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    RawRecord rec;
    try {
      json j = json::parse(line);
      rec.id = j.contains("id") ? json_value_to_string(j["id"]) : std::to_string(lineno);
      rec.question_text = j.at("question").get<std::string>();
      rec.table_id = j.at("table_id").get<std::string>();
      rec.sql = parse_sql(j.at("sql"));
      rec.split = split_from_string(j.at("split").get<std::string>());
    } catch (const std::exception& e) {
      throw std::runtime_error(questions_path.string() + ":" + std::to_string(lineno) +
                               ": malformed question record: " + e.what());
    }
    auto it = ds.tables.find(rec.table_id);
    if (it == ds.tables.end()) {
      throw std::runtime_error(questions_path.string() + ":" + std::to_string(lineno) +
                               ": record references unknown table: " + rec.table_id);
    }
    const auto ncols = static_cast<int>(it->second.column_names.size());
    if (rec.sql.select_column < 0 || rec.sql.select_column >= ncols) {
      throw std::runtime_error(questions_path.string() + ":" + std::to_string(lineno) +
                               ": select column out of schema range");
    }
    for (const auto& c : rec.sql.conditions) {
      if (c.column < 0 || c.column >= ncols) {
        throw std::runtime_error(questions_path.string() + ":" + std::to_string(lineno) +
                                 ": condition column out of schema range");
      }
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

TableSchema infer_column_types(TableSchema schema, CleaningReport* report) {
  if (schema.rows.empty()) return schema;
  constexpr double kAgreement = 0.9;
  for (std::size_t col = 0; col < schema.column_types.size(); ++col) {
    std::size_t nonempty = 0, numeric = 0, date = 0;
    for (const auto& row : schema.rows) {
      const auto& cell = row[col];
      if (is_blank(cell)) continue;
      ++nonempty;
      if (is_numeric_cell(cell)) ++numeric;
      if (is_date_cell(cell)) ++date;
    }
    if (nonempty == 0) continue;
    const double n = static_cast<double>(nonempty);
    if (static_cast<double>(numeric) / n >= kAgreement) {
      if (schema.column_types[col] != ColumnType::Number && report) ++report->retyped_to_number;
      schema.column_types[col] = ColumnType::Number;
    } else if (static_cast<double>(date) / n >= kAgreement) {
      if (schema.column_types[col] != ColumnType::Date && report) ++report->retyped_to_date;
      schema.column_types[col] = ColumnType::Date;
    }
  }
  return schema;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto is_punct = [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  };
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word = text.substr(i, j - i);
    i = j;

    // Peel leading and trailing punctuation into single-character tokens.
    std::size_t lead = 0;
    while (lead < word.size() && is_punct(word[lead])) ++lead;
    std::size_t trail = word.size();
    while (trail > lead && is_punct(word[trail - 1])) --trail;

    auto push = [&tokens](std::string_view s) {
      std::string lower(s);
      for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(lower));
    };
    for (std::size_t p = 0; p < lead; ++p) push(word.substr(p, 1));
    if (trail > lead) push(word.substr(lead, trail - lead));
    for (std::size_t p = trail; p < word.size(); ++p) push(word.substr(p, 1));
  }
  return tokens;
}

std::pair<std::vector<Question>, CleaningReport> clean_questions(
    const std::vector<RawRecord>& records,
    const std::map<std::string, TableSchema>& tables,
    const CleaningConfig& config) {
  std::vector<Question> questions;
  CleaningReport report;
  report.input_count = records.size();

  for (const auto& rec : records) {
    auto tokens = tokenize(rec.question_text);
    // Rejection rules are checked in order: length first, then alphabetic
    // fraction, so a doubly-bad question is tallied once.
    if (tokens.size() < config.min_tokens) {
      ++report.rejected_too_short;
      continue;
    }
    std::size_t non_ws = 0, alpha = 0;
    for (char c : rec.question_text) {
      const auto uc = static_cast<unsigned char>(c);
      if (std::isspace(uc)) continue;
      ++non_ws;
      if (std::isalpha(uc)) ++alpha;
    }
    if (non_ws == 0 ||
        static_cast<double>(alpha) / static_cast<double>(non_ws) < config.min_alphabetic_fraction) {
      ++report.rejected_low_alphabetic;
      continue;
    }
    const auto& schema = tables.at(rec.table_id);
    Question q;
    q.id = rec.id;
    q.tokens = std::move(tokens);
    q.tmpl = extract_template(rec.sql, schema.column_types);
    q.split = rec.split;
    ++report.retained_per_split[static_cast<std::size_t>(q.split)];
    questions.push_back(std::move(q));
  }
  report.retained = questions.size();
  return {std::move(questions), report};
}

}  // namespace sps
