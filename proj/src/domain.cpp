#include "sdc/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace sdc {

namespace {

std::string label_list(const std::vector<std::string>& labels, std::size_t limit = 8) {
  std::ostringstream out;
  for (std::size_t i = 0; i < labels.size() && i < limit; ++i) {
    if (i) out << ", ";
    out << labels[i];
  }
  if (labels.size() > limit) out << ", ...";
  return out.str();
}

}  // namespace

const char* errc_name(errc code) {
  switch (code) {
    case errc::negative_entry: return "negative_entry";
    case errc::row_sum_violation: return "row_sum_violation";
    case errc::unknown_category: return "unknown_category";
    case errc::empty_input: return "empty_input";
    case errc::domain_mismatch: return "domain_mismatch";
    case errc::domain_too_small: return "domain_too_small";
    case errc::singular_matrix: return "singular_matrix";
    case errc::unreachable_reported_value: return "unreachable_reported_value";
    case errc::negative_epsilon: return "negative_epsilon";
    case errc::t_below_one: return "t_below_one";
    case errc::no_cluster_labels: return "no_cluster_labels";
    case errc::non_categorical_sensitive: return "non_categorical_sensitive";
    case errc::length_mismatch: return "length_mismatch";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::unordered_categorical: return "unordered_categorical";
    case errc::unknown_criterion: return "unknown_criterion";
    case errc::alpha_range_violation: return "alpha_range_violation";
    case errc::parse_error: return "parse_error";
    case errc::schema_mismatch: return "schema_mismatch";
    case errc::duplicate_header: return "duplicate_header";
    case errc::usage_error: return "usage_error";
  }
  return "unknown";
}

CategoricalDomain::CategoricalDomain(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.empty()) fail(errc::empty_input, "domain needs at least one category");
  std::set<std::string_view> seen;
  for (const auto& label : labels_) {
    if (!seen.insert(label).second)
      fail(errc::duplicate_header, "duplicate category label: " + label);
  }
}

std::optional<std::size_t> CategoricalDomain::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

std::size_t CategoricalDomain::index_of(std::string_view label) const {
  if (auto index = find(label)) return *index;
  fail(errc::unknown_category,
       "category '" + std::string(label) + "' is not in the domain {" +
           label_list(labels_) + "}");
}

TransitionMatrix::TransitionMatrix(CategoricalDomain domain,
                                   std::vector<std::vector<double>> rows)
    : domain_(std::move(domain)) {
  const std::size_t r = domain_.size();
  if (rows.size() != r)
    fail(errc::shape_mismatch, "matrix has " + std::to_string(rows.size()) +
                                   " rows, domain has " + std::to_string(r) +
                                   " categories");
  entries_.resize(r * r);
  // Renormalizing a row whose sum is already within a few ulps of 1 would only
  // shuffle the last bit, so those rows are stored as given. That keeps
  // validation idempotent: feeding a validated matrix back in reproduces it.
  const double ulp_slack = 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(r);
  for (std::size_t u = 0; u < r; ++u) {
    if (rows[u].size() != r)
      fail(errc::shape_mismatch, "row " + std::to_string(u + 1) + " has " +
                                     std::to_string(rows[u].size()) +
                                     " entries, expected " + std::to_string(r));
    double sum = 0.0;
    for (double p : rows[u]) {
      if (!(p >= 0.0))
        fail(errc::negative_entry,
             "row " + std::to_string(u + 1) + " contains a negative or NaN entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      fail(errc::row_sum_violation,
           "row " + std::to_string(u + 1) + " sums to " + std::to_string(sum));
    const bool renormalize = std::abs(sum - 1.0) > ulp_slack;
    for (std::size_t v = 0; v < r; ++v)
      entries_[u * r + v] = renormalize ? rows[u][v] / sum : rows[u][v];
  }
}

std::span<const double> TransitionMatrix::row(std::size_t u) const {
  return std::span<const double>(entries_).subspan(u * size(), size());
}

std::vector<double> TransitionMatrix::column(std::size_t v) const {
  std::vector<double> out(size());
  for (std::size_t u = 0; u < size(); ++u) out[u] = prob(u, v);
  return out;
}

Distribution::Distribution(CategoricalDomain domain, std::vector<double> weights)
    : domain_(std::move(domain)), weights_(std::move(weights)) {
  if (weights_.size() != domain_.size())
    fail(errc::length_mismatch, "distribution has " + std::to_string(weights_.size()) +
                                    " weights for " + std::to_string(domain_.size()) +
                                    " categories");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) fail(errc::negative_entry, "distribution weight is negative or NaN");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kDistributionTol)
    fail(errc::row_sum_violation, "distribution weights sum to " + std::to_string(sum));
}

Distribution Distribution::uniform(CategoricalDomain domain) {
  std::vector<double> weights(domain.size(), 1.0 / static_cast<double>(domain.size()));
  return Distribution(std::move(domain), std::move(weights));
}

Column Column::categorical(std::string name, CategoricalDomain domain,
                           std::vector<std::size_t> codes, bool declared_order) {
  for (std::size_t code : codes)
    if (code >= domain.size())
      fail(errc::unknown_category, "code out of range in column " + name);
  Column column;
  column.name = std::move(name);
  column.kind = AttributeKind::categorical;
  column.domain = std::move(domain);
  column.declared_order = declared_order;
  column.codes = std::move(codes);
  return column;
}

Column Column::make_numeric(std::string name, std::vector<double> values) {
  Column column;
  column.name = std::move(name);
  column.kind = AttributeKind::numeric;
  column.numeric = std::move(values);
  return column;
}

std::vector<double> Column::ordinal_values() const {
  if (!is_categorical()) return numeric;
  if (!declared_order)
    fail(errc::unordered_categorical,
         "column '" + name + "' is categorical without a declared order; " +
             "rank operations need one (declare it with --order)");
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i)
    out[i] = static_cast<double>(codes[i]);
  return out;
}

std::string Column::cell_text(std::size_t row) const {
  if (is_categorical()) return domain->label(codes.at(row));
  std::ostringstream out;
  out.precision(17);
  out << numeric.at(row);
  return out.str();
}

MicrodataTable::MicrodataTable(std::vector<Column> columns,
                               std::vector<std::string> cluster_labels,
                               std::vector<std::size_t> record_map)
    : columns_(std::move(columns)),
      cluster_labels_(std::move(cluster_labels)),
      record_map_(std::move(record_map)) {
  if (columns_.empty()) fail(errc::empty_input, "table needs at least one column");
  record_count_ = columns_.front().size();
  std::set<std::string_view> names;
  for (const auto& column : columns_) {
    if (column.size() != record_count_)
      fail(errc::length_mismatch, "column '" + column.name + "' has " +
                                      std::to_string(column.size()) +
                                      " cells, expected " + std::to_string(record_count_));
    if (!names.insert(column.name).second)
      fail(errc::duplicate_header, "duplicate column name: " + column.name);
  }
  if (!cluster_labels_.empty() && cluster_labels_.size() != record_count_)
    fail(errc::length_mismatch, "cluster labels cover " +
                                    std::to_string(cluster_labels_.size()) + " of " +
                                    std::to_string(record_count_) + " records");
  if (!record_map_.empty()) {
    if (record_map_.size() != record_count_)
      fail(errc::length_mismatch, "record map covers " +
                                      std::to_string(record_map_.size()) + " of " +
                                      std::to_string(record_count_) + " records");
    std::vector<bool> hit(record_count_, false);
    for (std::size_t target : record_map_) {
      if (target >= record_count_ || hit[target])
        fail(errc::length_mismatch,
             "record map is not a bijection on 1.." + std::to_string(record_count_));
      hit[target] = true;
    }
  }
}

const Column& MicrodataTable::column(std::string_view name) const {
  if (auto index = find_column(name)) return columns_[*index];
  fail(errc::schema_mismatch, "table has no column named '" + std::string(name) + "'");
}

std::optional<std::size_t> MicrodataTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::map<std::string, std::vector<std::size_t>> MicrodataTable::cluster_partition() const {
  if (!has_clusters())
    fail(errc::no_cluster_labels, "table has no cluster labels");
  std::map<std::string, std::vector<std::size_t>> partition;
  for (std::size_t i = 0; i < cluster_labels_.size(); ++i)
    partition[cluster_labels_[i]].push_back(i);
  return partition;
}

MicrodataTable MicrodataTable::with_column(std::size_t index, Column replacement) const {
  std::vector<Column> columns = columns_;
  columns.at(index) = std::move(replacement);
  return MicrodataTable(std::move(columns), cluster_labels_, record_map_);
}

Distribution empirical_distribution(std::span<const std::string> values,
                                    const CategoricalDomain& domain) {
  if (values.empty()) fail(errc::empty_input, "no values to tally");
  std::vector<double> counts(domain.size(), 0.0);
  for (const auto& value : values) counts[domain.index_of(value)] += 1.0;
  for (double& c : counts) c /= static_cast<double>(values.size());
  return Distribution(domain, std::move(counts));
}

Distribution empirical_distribution(std::span<const std::size_t> codes,
                                    const CategoricalDomain& domain) {
  if (codes.empty()) fail(errc::empty_input, "no values to tally");
  std::vector<double> counts(domain.size(), 0.0);
  for (std::size_t code : codes) {
    if (code >= domain.size()) fail(errc::unknown_category, "code out of range");
    counts[code] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(codes.size());
  return Distribution(domain, std::move(counts));
}

}  // namespace sdc
