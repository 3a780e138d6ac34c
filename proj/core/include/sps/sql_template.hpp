#ifndef SPS_SQL_TEMPLATE_HPP
#define SPS_SQL_TEMPLATE_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace sps {

/// Type of a table column after inference.
enum class ColumnType : std::uint8_t { Text, Number, Date };

/// Aggregation function of the SELECT clause. Integer codes in data files
/// follow the WikiSQL release: 0=None,1=Max,2=Min,3=Count,4=Sum,5=Avg.
enum class Aggregator : std::uint8_t { None, Max, Min, Count, Sum, Avg };

/// WHERE-condition comparison operator. Codes: 0=Eq,1=Gt,2=Lt.
enum class ConditionOp : std::uint8_t { Eq, Gt, Lt };

Aggregator aggregator_from_code(int code);
ConditionOp condition_op_from_code(int code);
int to_code(Aggregator agg);
int to_code(ConditionOp op);

std::string to_string(ColumnType t);
std::string to_string(Aggregator agg);
std::string to_string(ConditionOp op);
ColumnType column_type_from_string(const std::string& s);

struct Condition {
  int column = 0;
  ConditionOp op = ConditionOp::Eq;
  std::string value;
};

/// Restricted SQL dialect: one select column, no nesting, no joins.
struct SqlQuery {
  int select_column = 0;
  Aggregator aggregator = Aggregator::None;
  std::vector<Condition> conditions;
};

/// Canonical template identity of a query: the five compared constituents.
/// Condition values and column identities are deliberately abstracted away.
struct ConstituentVector {
  ColumnType select_type = ColumnType::Text;
  Aggregator aggregator = Aggregator::None;
  int count_eq = 0;
  int count_gt = 0;
  int count_lt = 0;

  friend bool operator==(const ConstituentVector&, const ConstituentVector&) = default;
  friend auto operator<=>(const ConstituentVector&, const ConstituentVector&) = default;
};

/// Readable label, e.g. "text:count:1:0:0". Used in reports and exports.
std::string template_label(const ConstituentVector& v);

/// Reads the template of a query against its (already retyped) schema
/// column types. Throws std::out_of_range on a bad column index.
ConstituentVector extract_template(const SqlQuery& query,
                                   const std::vector<ColumnType>& column_types);

/// SQL structure distance: the number of the five constituents whose values
/// differ. 0 means identical template; range is {0,...,5}.
int sqlsd(const ConstituentVector& a, const ConstituentVector& b);

inline bool same_template(const ConstituentVector& a, const ConstituentVector& b) {
  return sqlsd(a, b) == 0;
}

}  // namespace sps

#endif
