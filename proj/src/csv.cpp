#include "sdc/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sdc {

namespace {

struct RawRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// Comma-separated records with double-quote escaping. Quoted fields may span
// lines; CRLF is accepted; a trailing newline is not a record.
std::vector<RawRecord> parse_records(std::istream& in) {
  std::string text(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);  // UTF-8 byte order mark

  std::vector<RawRecord> records;
  std::size_t line = 1;
  std::size_t pos = 0;
  const std::size_t end = text.size();
  while (pos < end) {
    RawRecord record;
    record.line = line;
    bool record_done = false;
    while (!record_done) {
      std::string field;
      if (pos < end && text[pos] == '"') {
        ++pos;  // opening quote
        bool closed = false;
        while (pos < end) {
          const char c = text[pos];
          if (c == '"') {
            if (pos + 1 < end && text[pos + 1] == '"') {
              field.push_back('"');
              pos += 2;
            } else {
              ++pos;
              closed = true;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
            ++pos;
          }
        }
        if (!closed)
          fail(errc::parse_error, "line " + std::to_string(record.line) +
                                      ": unterminated quoted field");
        if (pos < end && text[pos] != ',' && text[pos] != '\n' &&
            !(text[pos] == '\r' && pos + 1 < end && text[pos + 1] == '\n'))
          fail(errc::parse_error, "line " + std::to_string(line) +
                                      ": unexpected character after closing quote");
      } else {
        while (pos < end) {
          const char c = text[pos];
          if (c == ',' || c == '\n') break;
          if (c == '\r' && pos + 1 < end && text[pos + 1] == '\n') break;
          field.push_back(c);  // bare CR stays literal
          ++pos;
        }
      }
      record.fields.push_back(std::move(field));
      if (pos >= end) {
        record_done = true;
      } else if (text[pos] == ',') {
        ++pos;
      } else {
        if (text[pos] == '\r') ++pos;  // CRLF
        ++pos;                         // LF
        ++line;
        record_done = true;
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end && std::isfinite(out);
}

bool parse_index(const std::string& text, std::size_t& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

void require_rectangular(const std::vector<RawRecord>& records) {
  const std::size_t width = records.front().fields.size();
  for (const auto& record : records)
    if (record.fields.size() != width)
      fail(errc::parse_error, "line " + std::to_string(record.line) + ": record has " +
                                  std::to_string(record.fields.size()) +
                                  " fields, expected " + std::to_string(width));
}

std::string quoted_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::usage_error, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::usage_error, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

MicrodataTable load_table(std::istream& in, const TableSchema& schema) {
  const CategoryOrders& orders = schema.orders;
  for (const std::string& name : schema.numeric)
    if (orders.contains(name))
      fail(errc::usage_error, "column '" + name + "' declared both ordered and numeric");

  const std::vector<RawRecord> records = parse_records(in);
  if (records.empty()) fail(errc::empty_input, "table file is empty");
  require_rectangular(records);

  const std::vector<std::string>& header = records.front().fields;
  for (std::size_t a = 0; a < header.size(); ++a) {
    if (header[a].empty())
      fail(errc::schema_mismatch, "column " + std::to_string(a + 1) + " has an empty name");
    for (std::size_t b = a + 1; b < header.size(); ++b)
      if (header[a] == header[b])
        fail(errc::duplicate_header, "duplicate column name: " + header[a]);
  }

  const std::size_t n = records.size() - 1;
  std::vector<Column> columns;
  std::vector<std::string> cluster_labels;
  std::vector<std::size_t> record_map;

  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    std::vector<std::string> cells(n);
    for (std::size_t i = 0; i < n; ++i) cells[i] = records[i + 1].fields[c];

    if (name == "__cluster") {
      cluster_labels = std::move(cells);
      continue;
    }
    if (name == "__map") {
      record_map.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t target = 0;
        if (!parse_index(cells[i], target) || target < 1 || target > n)
          fail(errc::parse_error, "line " + std::to_string(records[i + 1].line) +
                                      ": __map entry '" + cells[i] +
                                      "' is not a record number in 1.." + std::to_string(n));
        record_map[i] = target - 1;
      }
      continue;
    }

    if (auto declared = orders.find(name); declared != orders.end()) {
      CategoricalDomain domain(declared->second);
      std::vector<std::size_t> codes(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto code = domain.find(cells[i]);
        if (!code)
          fail(errc::schema_mismatch, "line " + std::to_string(records[i + 1].line) +
                                          ": value '" + cells[i] +
                                          "' is not in the declared order for column '" +
                                          name + "'");
        codes[i] = *code;
      }
      columns.push_back(Column::categorical(name, std::move(domain), std::move(codes), true));
      continue;
    }

    const bool declared_numeric =
        std::find(schema.numeric.begin(), schema.numeric.end(), name) != schema.numeric.end();
    std::vector<double> numbers(n);
    bool all_numeric = n > 0;
    for (std::size_t i = 0; i < n && all_numeric; ++i) {
      all_numeric = parse_double(cells[i], numbers[i]);
      if (!all_numeric && declared_numeric)
        fail(errc::parse_error, "line " + std::to_string(records[i + 1].line) + ": cell '" +
                                    cells[i] + "' in numeric column '" + name +
                                    "' is not a finite number");
    }
    if (all_numeric || n == 0) {
      columns.push_back(Column::make_numeric(name, std::move(numbers)));
      continue;
    }

    // Unordered categorical: domain in order of first appearance.
    std::vector<std::string> labels;
    std::vector<std::size_t> codes(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto hit = std::find(labels.begin(), labels.end(), cells[i]);
      codes[i] = static_cast<std::size_t>(hit - labels.begin());
      if (hit == labels.end()) labels.push_back(cells[i]);
    }
    columns.push_back(Column::categorical(name, CategoricalDomain(std::move(labels)),
                                          std::move(codes), false));
  }

  if (columns.empty())
    fail(errc::schema_mismatch, "table has no data columns besides __cluster/__map");
  return MicrodataTable(std::move(columns), std::move(cluster_labels), std::move(record_map));
}

MicrodataTable load_table_file(const std::string& path, const TableSchema& schema) {
  std::ifstream in = open_input(path);
  try {
    return load_table(in, schema);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void save_table(const MicrodataTable& table, std::ostream& out) {
  std::vector<std::string> header;
  for (const auto& column : table.columns()) header.push_back(column.name);
  if (table.has_clusters()) header.push_back("__cluster");
  if (table.has_record_map()) header.push_back("__map");
  for (std::size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << quoted_if_needed(header[c]);
  out << "\n";

  for (std::size_t i = 0; i < table.record_count(); ++i) {
    bool first = true;
    for (const auto& column : table.columns()) {
      const std::string cell = column.is_categorical()
                                   ? column.domain->label(column.codes[i])
                                   : format_double(column.numeric[i]);
      out << (first ? "" : ",") << quoted_if_needed(cell);
      first = false;
    }
    if (table.has_clusters()) out << "," << quoted_if_needed(table.cluster_labels()[i]);
    if (table.has_record_map()) out << "," << (table.record_map()[i] + 1);
    out << "\n";
  }
}

void save_table_file(const MicrodataTable& table, const std::string& path) {
  std::ofstream out = open_output(path);
  save_table(table, out);
}

TransitionMatrix load_matrix(std::istream& in) {
  const std::vector<RawRecord> records = parse_records(in);
  if (records.empty()) fail(errc::empty_input, "matrix file is empty");
  require_rectangular(records);

  const std::vector<std::string>& header = records.front().fields;
  if (header.size() < 2)
    fail(errc::schema_mismatch, "matrix header needs a corner cell and category labels");
  std::vector<std::string> labels(header.begin() + 1, header.end());
  const std::size_t r = labels.size();
  if (records.size() - 1 != r)
    fail(errc::schema_mismatch, "matrix has " + std::to_string(records.size() - 1) +
                                    " rows for " + std::to_string(r) + " categories");

  std::vector<std::vector<double>> rows(r, std::vector<double>(r));
  for (std::size_t u = 0; u < r; ++u) {
    const RawRecord& record = records[u + 1];
    if (record.fields[0] != labels[u])
      fail(errc::schema_mismatch, "line " + std::to_string(record.line) + ": row label '" +
                                      record.fields[0] + "' does not match column label '" +
                                      labels[u] + "'");
    for (std::size_t v = 0; v < r; ++v)
      if (!parse_double(record.fields[v + 1], rows[u][v]))
        fail(errc::parse_error, "line " + std::to_string(record.line) + ": entry '" +
                                    record.fields[v + 1] + "' is not a finite number");
  }
  return TransitionMatrix(CategoricalDomain(std::move(labels)), std::move(rows));
}

TransitionMatrix load_matrix_file(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return load_matrix(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void save_matrix(const TransitionMatrix& matrix, std::ostream& out) {
  const CategoricalDomain& domain = matrix.domain();
  for (std::size_t v = 0; v < domain.size(); ++v)
    out << "," << quoted_if_needed(domain.label(v));
  out << "\n";
  for (std::size_t u = 0; u < domain.size(); ++u) {
    out << quoted_if_needed(domain.label(u));
    for (std::size_t v = 0; v < domain.size(); ++v)
      out << "," << format_double(matrix.prob(u, v));
    out << "\n";
  }
}

void save_matrix_file(const TransitionMatrix& matrix, const std::string& path) {
  std::ofstream out = open_output(path);
  save_matrix(matrix, out);
}

}  // namespace sdc
