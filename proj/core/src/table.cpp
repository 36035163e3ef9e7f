#include "ledgerlens/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

std::string TableRecord::key() const { return metric + "|" + geo + "|" + period; }

std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() >= 3 && static_cast<unsigned char>(data[0]) == 0xEF &&
      static_cast<unsigned char>(data[1]) == 0xBB && static_cast<unsigned char>(data[2]) == 0xBF) {
    data.erase(0, 3);
  }

  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = data.size();
  while (i < n) {
    CsvRow row;
    row.line = line;
    std::string field;
    bool row_done = false;
    while (!row_done) {
      field.clear();
      if (i < n && data[i] == '"') {
        const std::size_t quote_line = line;
        ++i;
        bool closed = false;
        while (i < n) {
          if (data[i] == '"') {
            if (i + 1 < n && data[i + 1] == '"') {
              field.push_back('"');
              i += 2;
            } else {
              ++i;
              closed = true;
              break;
            }
          } else {
            if (data[i] == '\n') ++line;
            field.push_back(data[i++]);
          }
        }
        if (!closed) throw MalformedRow(quote_line, "unterminated quoted field");
        if (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
          throw MalformedRow(line, "unexpected character after closing quote");
        }
      } else {
        while (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
          if (data[i] == '"') throw MalformedRow(line, "quote inside unquoted field");
          field.push_back(data[i++]);
        }
      }
      row.fields.push_back(field);
      if (i < n && data[i] == ',') {
        ++i;
      } else {
        if (i < n && data[i] == '\r') ++i;
        if (i < n && data[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    const bool blank_line = row.fields.size() == 1 && row.fields.front().empty();
    if (!blank_line) rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::size_t column_of(const CsvRow& header, const std::string& name) {
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    if (trim(header.fields[i]) == name) return i;
  }
  throw MalformedRow(header.line, "missing column '" + name + "' in header");
}

double parse_value(const std::string& raw, std::size_t line) {
  auto text = trim(raw);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw MalformedRow(line, "value '" + std::string(text) + "' is not a number");
  }
  if (!std::isfinite(v)) throw MalformedRow(line, "value is not finite");
  return v;
}

}  // namespace

std::vector<TableRecord> parse_table(std::istream& in, const TableSchema& schema) {
  auto rows = read_csv(in);
  std::vector<TableRecord> records;
  if (rows.empty()) return records;

  const auto& header = rows.front();
  const std::size_t c_metric = column_of(header, schema.metric);
  const std::size_t c_geo = column_of(header, schema.geo);
  const std::size_t c_period = column_of(header, schema.period);
  const std::size_t c_value = column_of(header, schema.value);
  const std::size_t c_unit = column_of(header, schema.unit);

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.fields.size()) {
      throw MalformedRow(row.line, "expected " + std::to_string(header.fields.size()) +
                                       " fields, found " + std::to_string(row.fields.size()));
    }
    TableRecord rec;
    rec.metric = std::string(trim(row.fields[c_metric]));
    rec.geo = std::string(trim(row.fields[c_geo]));
    rec.period = std::string(trim(row.fields[c_period]));
    rec.unit = std::string(trim(row.fields[c_unit]));
    if (rec.metric.empty() || rec.geo.empty() || rec.period.empty()) {
      throw MalformedRow(row.line, "metric, geo and period must be non-empty");
    }
    rec.value = parse_value(row.fields[c_value], row.line);
    if (!seen.insert(rec.key()).second) {
      throw DuplicateKey("duplicate record (" + rec.metric + ", " + rec.geo + ", " + rec.period +
                         ") at line " + std::to_string(row.line));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TableRecord> ingest_table(const std::filesystem::path& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open table file " + path.string());
  return parse_table(in, schema);
}

std::string render_value(double value, const std::string& unit) {
  const auto num = format_fixed2(value);
  if (unit.empty()) return num;
  if (unit == "%") return num + "%";
  return num + " " + unit;
}

}  // namespace ledgerlens
