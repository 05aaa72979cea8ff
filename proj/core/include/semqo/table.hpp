#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace semqo {

/// Thrown for malformed input data (bad CSV/JSONL, bad plan files, bad
/// configs). Carries enough context to name the offending line or field.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { Number, Text, Date, AssetRef };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Text;
};

/// A cell is text or null; typed interpretation (numbers, dates, asset
/// paths) happens at the point of use. Asset-ref cells hold a path/URL
/// string that the engine itself never dereferences.
using Cell = std::optional<std::string>;

struct Row {
  std::uint64_t index = 0;  // stable 0-based ordinal from the source
  std::vector<Cell> cells;
};

enum class TableFormat { Csv, Jsonl };

class Table {
 public:
  Table() = default;
  explicit Table(std::vector<ColumnSpec> schema) : schema_(std::move(schema)) {}

  const std::vector<ColumnSpec>& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return schema_.size(); }

  // Returns npos when absent.
  std::size_t column_index(const std::string& name) const;
  bool has_column(const std::string& name) const;

  void add_column(ColumnSpec spec);
  void append_row(Row row);

  const Cell& cell(std::size_t row, const std::string& column) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<ColumnSpec> schema_;
  std::vector<Row> rows_;
};

struct SampleSpec {
  double ratio = 0.05;           // in (0, 1]
  std::uint64_t seed = 0;
  std::size_t minimum_rows = 5;  // >= 1
};

struct SchemaViolation {
  std::optional<std::uint64_t> row_index;  // absent for schema-level issues
  std::string column;
  std::string message;
};

Table load_table(std::istream& source, TableFormat format,
                 const std::vector<ColumnSpec>* schema = nullptr);
Table load_table_file(const std::string& path, TableFormat format,
                      const std::vector<ColumnSpec>* schema = nullptr);

/// Uniform sample without replacement (seeded shuffle, then prefix).
/// Sampled size = min(row_count, max(minimum_rows, ceil(ratio * row_count))).
/// Rows keep their original indices and relative order.
Table sample_records(const Table& table, const SampleSpec& spec);

std::vector<SchemaViolation> validate_schema(const Table& table);

std::string serialize_table_csv(const Table& table);
std::string serialize_table_jsonl(const Table& table);

}  // namespace semqo
