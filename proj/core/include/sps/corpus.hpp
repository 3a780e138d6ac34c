#ifndef SPS_CORPUS_HPP
#define SPS_CORPUS_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sps/sql_template.hpp"

namespace sps {

enum class Split : std::uint8_t { Train, Dev, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct TableSchema {
  std::string table_id;
  std::vector<std::string> column_names;
  std::vector<ColumnType> column_types;
  // Cell values, used only for column-type inference. May be empty.
  std::vector<std::vector<std::string>> rows;
};

struct RawRecord {
  std::string id;
  std::string question_text;
  SqlQuery sql;
  std::string table_id;
  Split split = Split::Train;
};

/// A cleaned, tokenized question carrying its extracted SQL template.
struct Question {
  std::string id;
  std::vector<std::string> tokens;
  ConstituentVector tmpl;
  Split split = Split::Train;
};

struct CleaningReport {
  std::size_t input_count = 0;
  std::size_t retained = 0;
  std::size_t rejected_too_short = 0;
  std::size_t rejected_low_alphabetic = 0;
  std::size_t retyped_to_number = 0;
  std::size_t retyped_to_date = 0;
  std::array<std::size_t, 3> retained_per_split{};  // indexed by Split
};

struct CleaningConfig {
  std::size_t min_tokens = 4;
  double min_alphabetic_fraction = 0.5;
};

struct Dataset {
  std::vector<RawRecord> records;
  std::map<std::string, TableSchema> tables;
};

/// Loads WikiSQL-format line-delimited JSON. Malformed lines and dangling
/// table references raise std::runtime_error naming the line / table id.
Dataset load_dataset(const std::filesystem::path& questions_path,
                     const std::filesystem::path& tables_path);

/// Retypes a column to Number (or Date) when at least 90% of its non-empty
/// cells match the numeric (or date) patterns. Idempotent; schemas without
/// rows are returned unchanged. Retyping counts, if wanted, go to `report`.
TableSchema infer_column_types(TableSchema schema, CleaningReport* report = nullptr);

/// Tokenizes, filters noisy questions, and attaches extracted templates.
/// Schemas must already be retyped.
std::pair<std::vector<Question>, CleaningReport> clean_questions(
    const std::vector<RawRecord>& records,
    const std::map<std::string, TableSchema>& tables,
    const CleaningConfig& config = {});

/// Lowercase, split on whitespace, peel leading/trailing ASCII punctuation
/// off words as separate tokens. "Who was it?" -> {"who","was","it","?"}.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace sps

#endif
