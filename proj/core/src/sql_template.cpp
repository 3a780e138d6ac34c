#include "sps/sql_template.hpp"

#include <stdexcept>

namespace sps {

Aggregator aggregator_from_code(int code) {
  if (code < 0 || code > 5) {
    throw std::out_of_range("aggregator code out of range: " + std::to_string(code));
  }
  return static_cast<Aggregator>(code);
}

ConditionOp condition_op_from_code(int code) {
  if (code < 0 || code > 2) {
    throw std::out_of_range("condition op code out of range: " + std::to_string(code));
  }
  return static_cast<ConditionOp>(code);
}

int to_code(Aggregator agg) { return static_cast<int>(agg); }
int to_code(ConditionOp op) { return static_cast<int>(op); }

std::string to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Text: return "text";
    case ColumnType::Number: return "number";
    case ColumnType::Date: return "date";
  }
  throw std::logic_error("bad ColumnType");
}

std::string to_string(Aggregator agg) {
  switch (agg) {
    case Aggregator::None: return "none";
    case Aggregator::Max: return "max";
    case Aggregator::Min: return "min";
    case Aggregator::Count: return "count";
    case Aggregator::Sum: return "sum";
    case Aggregator::Avg: return "avg";
  }
  throw std::logic_error("bad Aggregator");
}

std::string to_string(ConditionOp op) {
  switch (op) {
    case ConditionOp::Eq: return "=";
    case ConditionOp::Gt: return ">";
    case ConditionOp::Lt: return "<";
  }
  throw std::logic_error("bad ConditionOp");
}

ColumnType column_type_from_string(const std::string& s) {
  if (s == "text") return ColumnType::Text;
  if (s == "number" || s == "real") return ColumnType::Number;
  if (s == "date") return ColumnType::Date;
  throw std::invalid_argument("unknown column type: " + s);
}

std::string template_label(const ConstituentVector& v) {
  return to_string(v.select_type) + ":" + to_string(v.aggregator) + ":" +
         std::to_string(v.count_eq) + ":" + std::to_string(v.count_gt) + ":" +
         std::to_string(v.count_lt);
}

ConstituentVector extract_template(const SqlQuery& query,
                                   const std::vector<ColumnType>& column_types) {
  const auto ncols = static_cast<int>(column_types.size());
  if (query.select_column < 0 || query.select_column >= ncols) {
    throw std::out_of_range("select column " + std::to_string(query.select_column) +
                            " out of range for " + std::to_string(ncols) + " columns");
  }
  ConstituentVector out;
  out.select_type = column_types[static_cast<size_t>(query.select_column)];
  out.aggregator = query.aggregator;
  for (const auto& cond : query.conditions) {
    if (cond.column < 0 || cond.column >= ncols) {
      throw std::out_of_range("condition column " + std::to_string(cond.column) +
                              " out of range for " + std::to_string(ncols) + " columns");
    }
    switch (cond.op) {
      case ConditionOp::Eq: ++out.count_eq; break;
      case ConditionOp::Gt: ++out.count_gt; break;
      case ConditionOp::Lt: ++out.count_lt; break;
    }
  }
  return out;
}

int sqlsd(const ConstituentVector& a, const ConstituentVector& b) {
  int d = 0;
  d += a.select_type != b.select_type;
  d += a.aggregator != b.aggregator;
  d += a.count_eq != b.count_eq;
  d += a.count_gt != b.count_gt;
  d += a.count_lt != b.count_lt;
  return d;
}

}  // namespace sps
