#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace ledgerlens {

struct TableRecord {
  std::string metric;
  std::string geo;
  std::string period;  // fiscal label, e.g. "FY23-Q3"
  double value = 0.0;
  std::string unit;  // "%", "$M", or empty for dimensionless

  // "metric|geo|period"
  std::string key() const;

  friend bool operator==(const TableRecord&, const TableRecord&) = default;
};

// Header names to read each field from.
struct TableSchema {
  std::string metric = "metric";
  std::string geo = "geo";
  std::string period = "period";
  std::string value = "value";
  std::string unit = "unit";
};

// RFC 4180 reader: header row, comma separator, double-quoted fields with ""
// escapes and embedded line breaks. Each row carries the physical line it
// starts on.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRow> read_csv(std::istream& in);

// Throws MalformedRow (with its line number) or DuplicateKey. An empty
// input yields no records.
std::vector<TableRecord> parse_table(std::istream& in, const TableSchema& schema = {});
std::vector<TableRecord> ingest_table(const std::filesystem::path& path,
                                      const TableSchema& schema = {});

// Unit-aware rendering of a value at two decimals: "3.50%", "12.00 $M", "7.25".
std::string render_value(double value, const std::string& unit);

}  // namespace ledgerlens
