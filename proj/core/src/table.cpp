#include "semqo/table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace semqo {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Number: return "number";
    case ColumnKind::Text: return "text";
    case ColumnKind::Date: return "date";
    case ColumnKind::AssetRef: return "asset-ref";
  }
  return "text";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "number") return ColumnKind::Number;
  if (s == "text") return ColumnKind::Text;
  if (s == "date") return ColumnKind::Date;
  if (s == "asset-ref") return ColumnKind::AssetRef;
  throw InputError("unknown column kind: " + s);
}

std::size_t Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  return npos;
}

bool Table::has_column(const std::string& name) const {
  return column_index(name) != npos;
}

void Table::add_column(ColumnSpec spec) {
  schema_.push_back(std::move(spec));
  for (auto& row : rows_) row.cells.resize(schema_.size());
}

void Table::append_row(Row row) {
  row.cells.resize(schema_.size());
  rows_.push_back(std::move(row));
}

const Cell& Table::cell(std::size_t row, const std::string& column) const {
  static const Cell kNull;
  std::size_t c = column_index(column);
  if (row >= rows_.size() || c == npos || c >= rows_[row].cells.size()) {
    return kNull;
  }
  return rows_[row].cells[c];
}

namespace {

// RFC-4180 CSV reader: quoted fields, doubled quotes, CRLF tolerant.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  int c;
  while ((c = in.get()) != EOF) {
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) {
          throw InputError("line " + std::to_string(line) +
                           ": quote inside unquoted CSV field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        record.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(record));
        record.clear();
        field_started = false;
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
        break;
    }
  }
  if (in_quotes) {
    throw InputError("line " + std::to_string(line) +
                     ": unterminated quoted CSV field");
  }
  if (!record.empty() || field_started || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

Table load_csv(std::istream& in, const std::vector<ColumnSpec>* schema) {
  auto records = parse_csv(in);
  if (records.empty()) throw InputError("CSV input has no header row");
  const auto& header = records.front();

  std::vector<ColumnSpec> columns;
  std::unordered_set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second) {
      throw InputError("duplicate column in CSV header: " + name);
    }
    ColumnKind kind = ColumnKind::Text;
    if (schema) {
      for (const auto& spec : *schema) {
        if (spec.name == name) kind = spec.kind;
      }
    }
    columns.push_back({name, kind});
  }

  Table table(std::move(columns));
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw InputError("line " + std::to_string(r + 1) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(rec.size()));
    }
    Row row;
    row.index = r - 1;
    for (const auto& value : rec) row.cells.emplace_back(value);
    table.append_row(std::move(row));
  }
  return table;
}

Table load_jsonl(std::istream& in, const std::vector<ColumnSpec>* schema) {
  std::vector<nlohmann::json> objects;
  std::string line;
  std::size_t line_no = 0;
  std::vector<ColumnSpec> columns;
  std::unordered_set<std::string> seen;
  if (schema) {
    for (const auto& spec : *schema) {
      if (!seen.insert(spec.name).second) {
        throw InputError("duplicate column in schema: " + spec.name);
      }
      columns.push_back(spec);
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("line " + std::to_string(line_no) +
                       ": malformed JSONL record: " + e.what());
    }
    if (!obj.is_object()) {
      throw InputError("line " + std::to_string(line_no) +
                       ": JSONL record is not an object");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (seen.insert(it.key()).second) {
        columns.push_back({it.key(), ColumnKind::Text});
      }
    }
    objects.push_back(std::move(obj));
  }

  Table table(columns);
  std::uint64_t index = 0;
  for (const auto& obj : objects) {
    Row row;
    row.index = index++;
    for (const auto& col : columns) {
      auto it = obj.find(col.name);
      if (it == obj.end() || it->is_null()) {
        row.cells.emplace_back(std::nullopt);
      } else if (it->is_string()) {
        row.cells.emplace_back(it->get<std::string>());
      } else {
        row.cells.emplace_back(it->dump());
      }
    }
    table.append_row(std::move(row));
  }
  return table;
}

}  // namespace

Table load_table(std::istream& source, TableFormat format,
                 const std::vector<ColumnSpec>* schema) {
  return format == TableFormat::Csv ? load_csv(source, schema)
                                    : load_jsonl(source, schema);
}

Table load_table_file(const std::string& path, TableFormat format,
                      const std::vector<ColumnSpec>* schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open table file: " + path);
  return load_table(in, format, schema);
}

Table sample_records(const Table& table, const SampleSpec& spec) {
  if (table.row_count() == 0) {
    throw InputError("cannot sample from an empty table");
  }
  if (spec.ratio <= 0.0 || spec.ratio > 1.0) {
    throw InputError("sample ratio must be in (0, 1]");
  }
  if (spec.minimum_rows < 1) {
    throw InputError("minimum sample size must be >= 1");
  }
  const std::size_t n = table.row_count();
  std::size_t target = static_cast<std::size_t>(
      std::ceil(spec.ratio * static_cast<double>(n)));
  target = std::max(target, spec.minimum_rows);
  target = std::min(target, n);

  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(positions.begin(), positions.end(), rng);
  positions.resize(target);
  std::sort(positions.begin(), positions.end());  // keep source order

  Table sample(std::vector<ColumnSpec>(table.schema()));
  for (std::size_t pos : positions) sample.append_row(table.rows()[pos]);
  return sample;
}

std::vector<SchemaViolation> validate_schema(const Table& table) {
  std::vector<SchemaViolation> violations;
  std::unordered_set<std::string> seen;
  for (const auto& col : table.schema()) {
    if (!seen.insert(col.name).second) {
      violations.push_back({std::nullopt, col.name, "duplicate column name"});
    }
    if (col.name.empty()) {
      violations.push_back({std::nullopt, col.name, "empty column name"});
    }
  }
  for (const auto& row : table.rows()) {
    if (row.cells.size() != table.column_count()) {
      // Name the first column the row fails to cover.
      std::size_t at = std::min(row.cells.size(), table.column_count());
      std::string col = at < table.column_count() ? table.schema()[at].name : "";
      violations.push_back(
          {row.index, col,
           "row has " + std::to_string(row.cells.size()) + " cells, expected " +
               std::to_string(table.column_count())});
    }
    for (std::size_t c = 0;
         c < std::min(row.cells.size(), table.column_count()); ++c) {
      const auto& cell = row.cells[c];
      if (table.schema()[c].kind == ColumnKind::AssetRef && cell &&
          cell->empty()) {
        violations.push_back(
            {row.index, table.schema()[c].name, "empty asset-ref path"});
      }
    }
  }
  return violations;
}

namespace {

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

}  // namespace

std::string serialize_table_csv(const Table& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out << ',';
    out << csv_escape(table.schema()[c].name);
  }
  out << '\n';
  for (const auto& row : table.rows()) {
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      if (c) out << ',';
      if (c < row.cells.size() && row.cells[c]) out << csv_escape(*row.cells[c]);
    }
    out << '\n';
  }
  return out.str();
}

std::string serialize_table_jsonl(const Table& table) {
  std::ostringstream out;
  for (const auto& row : table.rows()) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < table.column_count(); ++c) {
      const auto& name = table.schema()[c].name;
      if (c < row.cells.size() && row.cells[c]) {
        obj[name] = *row.cells[c];
      } else {
        obj[name] = nullptr;
      }
    }
    out << obj.dump() << '\n';
  }
  return out.str();
}

}  // namespace semqo
