#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdc/errors.hpp"

namespace sdc {

// Tolerances shared across the library. Kept in one place so tests and
// documentation agree with the implementation.
inline constexpr double kRowSumTol = 1e-9;        // row-stochasticity slack
inline constexpr double kDistributionTol = 1e-9;  // probability vector slack
inline constexpr double kEstimateSumTol = 1e-6;   // raw estimate mass slack
inline constexpr double kSingularDetTol = 1e-12;  // |det| below this is singular
inline constexpr double kEntropyTol = 1e-9;       // entropy comparison slack

// Ordered list of distinct category labels. Labels match exactly and
// case-sensitively; a label's position doubles as its ordinal value when the
// column's order has been declared by the user.
class CategoricalDomain {
 public:
  explicit CategoricalDomain(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  std::optional<std::size_t> find(std::string_view label) const;
  // Like find(), but throws errc::unknown_category for absent labels.
  std::size_t index_of(std::string_view label) const;

  friend bool operator==(const CategoricalDomain&, const CategoricalDomain&) = default;

 private:
  std::vector<std::string> labels_;
};

// Square row-stochastic matrix over a categorical domain. Entry (u, v) is the
// probability that true category u gets reported as category v. Construction
// validates: entries non-negative, every row sums to 1 within kRowSumTol.
// Rows that pass but are off by more than a few ulps are renormalized so the
// stored matrix is exactly usable as a sampling table.
class TransitionMatrix {
 public:
  TransitionMatrix(CategoricalDomain domain, std::vector<std::vector<double>> rows);

  const CategoricalDomain& domain() const { return domain_; }
  std::size_t size() const { return domain_.size(); }

  double prob(std::size_t u, std::size_t v) const { return entries_[u * size() + v]; }
  std::span<const double> row(std::size_t u) const;
  std::vector<double> column(std::size_t v) const;

 private:
  CategoricalDomain domain_;
  std::vector<double> entries_;  // row-major, size r*r
};

// Probability vector aligned with a domain: non-negative weights summing to 1
// within kDistributionTol.
class Distribution {
 public:
  Distribution(CategoricalDomain domain, std::vector<double> weights);

  static Distribution uniform(CategoricalDomain domain);

  const CategoricalDomain& domain() const { return domain_; }
  std::size_t size() const { return weights_.size(); }
  double weight(std::size_t index) const { return weights_.at(index); }
  const std::vector<double>& weights() const { return weights_; }

 private:
  CategoricalDomain domain_;
  std::vector<double> weights_;
};

// Output of the unbiased frequency estimator. Components may be negative or
// sum away from 1; that is information, not an error, so this type skips the
// Distribution invariants and records whether the mass check passed.
struct RawEstimate {
  CategoricalDomain domain;
  std::vector<double> components;
  bool sums_to_one = false;  // |sum - 1| <= kEstimateSumTol
};

enum class AttributeKind { categorical, numeric };

// One attribute of a microdata table. Categorical cells are stored as codes
// into the domain; numeric cells as doubles. declared_order is set when the
// user supplied a total order for a categorical attribute, which is what
// permits rank-based treatment of it.
struct Column {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  std::optional<CategoricalDomain> domain;  // categorical only
  bool declared_order = false;
  std::vector<std::size_t> codes;   // categorical cells
  std::vector<double> numeric;      // numeric cells

  static Column categorical(std::string name, CategoricalDomain domain,
                            std::vector<std::size_t> codes, bool declared_order = false);
  static Column make_numeric(std::string name, std::vector<double> values);

  bool is_categorical() const { return kind == AttributeKind::categorical; }
  std::size_t size() const { return is_categorical() ? codes.size() : numeric.size(); }

  // The cell values on the attribute's ordinal scale: the numbers themselves
  // for numeric attributes, domain positions for ordered categorical ones.
  // Throws errc::unordered_categorical when no order was declared.
  std::vector<double> ordinal_values() const;

  std::string cell_text(std::size_t row) const;
};

// Rectangular microdata: equal-length columns, optional per-record cluster
// labels (for group-level audits) and an optional record map linking each
// record of this table to a record of a released counterpart.
class MicrodataTable {
 public:
  MicrodataTable(std::vector<Column> columns,
                 std::vector<std::string> cluster_labels = {},
                 std::vector<std::size_t> record_map = {});

  std::size_t record_count() const { return record_count_; }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t index) const { return columns_.at(index); }
  const Column& column(std::string_view name) const;               // throws schema_mismatch
  std::optional<std::size_t> find_column(std::string_view name) const;

  bool has_clusters() const { return !cluster_labels_.empty(); }
  const std::vector<std::string>& cluster_labels() const { return cluster_labels_; }
  // Cluster label -> record indices, ordered by label.
  std::map<std::string, std::vector<std::size_t>> cluster_partition() const;

  bool has_record_map() const { return !record_map_.empty(); }
  const std::vector<std::size_t>& record_map() const { return record_map_; }

  MicrodataTable with_column(std::size_t index, Column replacement) const;

 private:
  std::vector<Column> columns_;
  std::vector<std::string> cluster_labels_;
  std::vector<std::size_t> record_map_;  // 0-based, validated bijection
  std::size_t record_count_ = 0;
};

// Frequency distribution of a label sequence over a domain. Every value must
// belong to the domain; the input may not be empty.
Distribution empirical_distribution(std::span<const std::string> values,
                                    const CategoricalDomain& domain);

// Frequency distribution of a coded categorical column.
Distribution empirical_distribution(std::span<const std::size_t> codes,
                                    const CategoricalDomain& domain);

}  // namespace sdc
