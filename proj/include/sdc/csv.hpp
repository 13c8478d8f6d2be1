#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sdc/domain.hpp"

namespace sdc {

// Column name -> declared category order, from --order flags or the config
// file. Columns listed here are loaded as ordered categorical attributes and
// every cell must belong to the declared order.
using CategoryOrders = std::map<std::string, std::vector<std::string>>;

// Optional typing declarations for load_table. A column may appear in orders
// or in numeric, not both.
struct TableSchema {
  CategoryOrders orders;
  std::vector<std::string> numeric;  // these columns must parse as numbers
};

// Reads comma-separated microdata with a header row. Double quotes escape
// commas, quotes ("" inside a quoted field) and newlines; CRLF endings are
// accepted. Two column names are reserved: __cluster (per-record group label)
// and __map (1-based released-record number for each record, a bijection).
// Any other column becomes numeric when every cell parses as a number and its
// name is not in schema.orders, otherwise categorical; a non-numeric cell in
// a column declared numeric is a ParseError naming the line. Undeclared
// categorical domains list labels by first appearance.
MicrodataTable load_table(std::istream& in, const TableSchema& schema = {});
MicrodataTable load_table_file(const std::string& path, const TableSchema& schema = {});

// Writes a table back in the same dialect, including __cluster and __map
// columns when present. Numbers print in shortest round-trip form.
void save_table(const MicrodataTable& table, std::ostream& out);
void save_table_file(const MicrodataTable& table, const std::string& path);

// Reads a square transition matrix: header row "",label1,...,labelr and one
// row per category, first field the row label (same order as the header).
// Entries are validated by TransitionMatrix construction.
TransitionMatrix load_matrix(std::istream& in);
TransitionMatrix load_matrix_file(const std::string& path);

void save_matrix(const TransitionMatrix& matrix, std::ostream& out);
void save_matrix_file(const TransitionMatrix& matrix, const std::string& path);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace sdc
