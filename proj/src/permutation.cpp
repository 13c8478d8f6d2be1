#include "sdc/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sampling.hpp"

namespace sdc {

std::vector<std::size_t> rank(std::span<const double> values) {
  if (values.empty()) fail(errc::empty_input, "cannot rank an empty sequence");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t k = 0; k < order.size(); ++k) ranks[order[k]] = k + 1;
  return ranks;
}

std::vector<double> reverse_map(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail(errc::length_mismatch, "sequences differ in length: " + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()));
  if (x.empty()) return {};
  std::vector<double> sorted_x(x.begin(), x.end());
  std::sort(sorted_x.begin(), sorted_x.end());
  const std::vector<std::size_t> y_ranks = rank(y);
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = sorted_x[y_ranks[i] - 1];
  return z;
}

namespace {

// Schema agreement for table pairs that get compared record by record.
void require_same_shape(const MicrodataTable& original, const MicrodataTable& released) {
  if (original.record_count() != released.record_count())
    fail(errc::shape_mismatch,
         "tables differ in record count: " + std::to_string(original.record_count()) +
             " vs " + std::to_string(released.record_count()));
  if (original.column_count() != released.column_count())
    fail(errc::shape_mismatch,
         "tables differ in column count: " + std::to_string(original.column_count()) +
             " vs " + std::to_string(released.column_count()));
  for (std::size_t j = 0; j < original.column_count(); ++j) {
    const Column& a = original.column(j);
    const Column& b = released.column(j);
    if (a.name != b.name)
      fail(errc::shape_mismatch, "column " + std::to_string(j + 1) + " is named '" +
                                     a.name + "' in one table and '" + b.name +
                                     "' in the other");
    if (a.kind != b.kind)
      fail(errc::shape_mismatch, "column '" + a.name + "' differs in kind between tables");
    if (a.is_categorical() && !(*a.domain == *b.domain))
      fail(errc::shape_mismatch, "column '" + a.name + "' differs in domain between tables");
  }
}

std::vector<std::size_t> record_correspondence(const MicrodataTable& original,
                                               bool& identity_assumed) {
  if (original.has_record_map()) {
    identity_assumed = false;
    return original.record_map();
  }
  identity_assumed = true;
  std::vector<std::size_t> identity(original.record_count());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return identity;
}

std::size_t rank_gap(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

double population_variance(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / n;
}

std::size_t count_distinct_sorted(std::span<const double> sorted) {
  std::size_t distinct = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] != sorted[i - 1]) ++distinct;
  return distinct;
}

}  // namespace

Decomposition decompose(const MicrodataTable& original, const MicrodataTable& released) {
  require_same_shape(original, released);
  PermutationProfile profile;
  const std::vector<std::size_t> f = record_correspondence(original, profile.identity_map_assumed);
  const std::size_t n = original.record_count();
  std::vector<Column> z_columns;

  for (std::size_t j = 0; j < original.column_count(); ++j) {
    const Column& x_col = original.column(j);
    const std::vector<double> x = x_col.ordinal_values();
    const std::vector<double> y = released.column(j).ordinal_values();
    const std::vector<double> z = reverse_map(x, y);
    const std::vector<std::size_t> rx = rank(x);
    const std::vector<std::size_t> ry = rank(y);

    AttributeProfile attr;
    attr.attribute = x_col.name;
    attr.rank_distances.resize(n);
    attr.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      attr.rank_distances[i] = rank_gap(ry[f[i]], rx[i]);
    for (std::size_t k = 0; k < n; ++k) {
      attr.residuals[k] = y[k] - z[k];
      attr.max_abs_residual = std::max(attr.max_abs_residual, std::abs(attr.residuals[k]));
    }
    profile.attributes.push_back(std::move(attr));

    if (x_col.is_categorical()) {
      std::vector<std::size_t> codes(n);
      for (std::size_t k = 0; k < n; ++k)
        codes[k] = static_cast<std::size_t>(std::llround(z[k]));
      z_columns.push_back(Column::categorical(x_col.name, *x_col.domain, std::move(codes),
                                              x_col.declared_order));
    } else {
      z_columns.push_back(Column::make_numeric(x_col.name, z));
    }
  }
  // The stripped table lives in released-record order, so it inherits the
  // released table's cluster labels.
  MicrodataTable z_table(std::move(z_columns), released.cluster_labels());
  return Decomposition{std::move(z_table), std::move(profile)};
}

MicrodataTable pram_apply(const MicrodataTable& table, const std::string& attribute,
                          const TransitionMatrix& channel, std::uint64_t seed) {
  const auto found = table.find_column(attribute);
  if (!found)
    fail(errc::schema_mismatch, "table has no column named '" + attribute + "'");
  const std::size_t index = *found;
  const Column& column = table.column(index);
  if (!column.is_categorical())
    fail(errc::domain_mismatch,
         "attribute '" + attribute + "' is numeric; the channel is over categories");
  if (!(*column.domain == channel.domain()))
    fail(errc::domain_mismatch,
         "attribute '" + attribute + "' and the channel are over different domains");

  std::mt19937_64 gen(seed);
  std::vector<std::size_t> codes(column.codes.size());
  for (std::size_t i = 0; i < column.codes.size(); ++i) {
    const double draw = detail::uniform01(gen);
    codes[i] = detail::sample_row(channel.row(column.codes[i]), draw);
  }
  return table.with_column(index, Column::categorical(column.name, *column.domain,
                                                      std::move(codes), column.declared_order));
}

DiversityCriterion parse_criterion(const std::string& name) {
  if (name == "variance") return DiversityCriterion::variance;
  if (name == "distinct-count") return DiversityCriterion::distinct_count;
  if (name == "t-closeness") return DiversityCriterion::t_closeness;
  fail(errc::unknown_criterion,
       "unknown diversity criterion '" + name +
           "' (expected variance, distinct-count or t-closeness)");
}

DvfVerdict check_dvf_privacy(const MicrodataTable& original, const MicrodataTable& released,
                             std::span<const long long> d, std::span<const double> v,
                             DiversityCriterion criterion, double closeness_t) {
  require_same_shape(original, released);
  const std::size_t n = original.record_count();
  const std::size_t m = original.column_count();
  if (d.size() != m)
    fail(errc::length_mismatch, "d has " + std::to_string(d.size()) + " thresholds for " +
                                    std::to_string(m) + " attributes");
  if (v.size() != m)
    fail(errc::length_mismatch, "v has " + std::to_string(v.size()) + " thresholds for " +
                                    std::to_string(m) + " attributes");
  if (criterion == DiversityCriterion::t_closeness && !(closeness_t >= 1.0))
    fail(errc::t_below_one, "the t-closeness criterion needs t >= 1");

  DvfVerdict verdict;
  bool identity_assumed = false;
  const std::vector<std::size_t> f = record_correspondence(original, identity_assumed);

  struct AttributeChecks {
    std::vector<std::size_t> distance;
    std::vector<double> diversity;
    std::vector<bool> tie;
  };
  std::vector<AttributeChecks> per_attribute(m);

  for (std::size_t j = 0; j < m; ++j) {
    const std::vector<double> x = original.column(j).ordinal_values();
    const std::vector<double> y = released.column(j).ordinal_values();
    const std::vector<std::size_t> ry = rank(y);
    std::vector<double> sorted_y = y;
    std::sort(sorted_y.begin(), sorted_y.end());

    AttributeChecks& checks = per_attribute[j];
    checks.distance.resize(n);
    checks.diversity.resize(n);
    checks.tie.assign(n, false);

    for (std::size_t i = 0; i < n; ++i) {
      // The released value nearest to the original one; ties go to the
      // smaller value and are flagged.
      const auto next = std::lower_bound(sorted_y.begin(), sorted_y.end(), x[i]);
      double closest;
      bool tie = false;
      if (next == sorted_y.begin()) {
        closest = *next;
      } else if (next == sorted_y.end()) {
        closest = *(next - 1);
      } else {
        const double below = *(next - 1);
        const double above = *next;
        const double gap_below = x[i] - below;
        const double gap_above = above - x[i];
        if (gap_below < gap_above) {
          closest = below;
        } else if (gap_above < gap_below) {
          closest = above;
        } else {
          closest = below;
          tie = below != above;
        }
      }
      checks.tie[i] = tie;

      const std::size_t closest_rank =
          static_cast<std::size_t>(std::lower_bound(sorted_y.begin(), sorted_y.end(), closest) -
                                   sorted_y.begin()) +
          1;
      checks.distance[i] = rank_gap(ry[f[i]], closest_rank);

      // Window of released values within d_j ranks of the closest one.
      const long long reach = std::max(d[j], 0LL);
      const long long lo = std::max<long long>(1, static_cast<long long>(closest_rank) - reach);
      const long long hi = std::min<long long>(static_cast<long long>(n),
                                               static_cast<long long>(closest_rank) + reach);
      const std::span<const double> window(sorted_y.data() + (lo - 1),
                                           static_cast<std::size_t>(hi - lo + 1));
      switch (criterion) {
        case DiversityCriterion::variance:
          checks.diversity[i] = population_variance(window);
          break;
        case DiversityCriterion::distinct_count:
          checks.diversity[i] = static_cast<double>(count_distinct_sorted(window));
          break;
        case DiversityCriterion::t_closeness: {
          // Window counts and column counts over the column's distinct
          // values. A distinct value missing from the window makes the
          // max-ratio distance infinite, hence not t-close.
          double worst = 0.0;
          bool missing = false;
          std::size_t pos = 0;
          while (pos < sorted_y.size()) {
            std::size_t end = pos;
            while (end < sorted_y.size() && sorted_y[end] == sorted_y[pos]) ++end;
            const double column_share =
                static_cast<double>(end - pos) / static_cast<double>(n);
            const auto win_lo = std::lower_bound(window.begin(), window.end(), sorted_y[pos]);
            const auto win_hi = std::upper_bound(window.begin(), window.end(), sorted_y[pos]);
            const double window_share = static_cast<double>(win_hi - win_lo) /
                                        static_cast<double>(window.size());
            if (window_share == 0.0) {
              missing = true;
              break;
            }
            worst = std::max(worst, std::max(column_share / window_share,
                                             window_share / column_share));
            pos = end;
          }
          checks.diversity[i] = (!missing && worst <= closeness_t) ? 1.0 : 0.0;
          break;
        }
      }
    }
  }

  verdict.checks.reserve(n * m);
  std::vector<bool> failing(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const AttributeChecks& checks = per_attribute[j];
      DvfCheck check;
      check.record = i;
      check.attribute = j;
      check.rank_distance = checks.distance[i];
      check.distance_ok = static_cast<long long>(check.rank_distance) >= d[j];
      check.diversity = checks.diversity[i];
      check.diversity_ok = checks.diversity[i] > v[j];
      check.closest_tie = checks.tie[i];
      if (!check.distance_ok || !check.diversity_ok) failing[i] = true;
      verdict.checks.push_back(check);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (failing[i]) verdict.failing_records.push_back(i);
  verdict.satisfied = verdict.failing_records.empty();
  return verdict;
}

double power_mean(std::span<const double> p, double alpha) {
  if (p.empty()) fail(errc::empty_input, "power mean of an empty sequence");
  double max_entry = 0.0;
  double min_entry = std::numeric_limits<double>::infinity();
  for (double x : p) {
    if (!(x >= 0.0)) fail(errc::negative_entry, "power mean entries must be non-negative");
    max_entry = std::max(max_entry, x);
    min_entry = std::min(min_entry, x);
  }
  const double n = static_cast<double>(p.size());
  // The mean provably lies between the smallest and largest entry; rounding
  // in log/exp/pow may overshoot by an ulp, so the result is clamped back.
  const auto bounded = [&](double mean) {
    return std::min(std::max(mean, min_entry), max_entry);
  };
  if (alpha == 0.0) {
    // Geometric mean, the continuous extension at order zero.
    if (min_entry == 0.0) return 0.0;
    double log_sum = 0.0;
    for (double x : p) log_sum += std::log(x);
    return bounded(std::exp(log_sum / n));
  }
  if (alpha < 0.0 && min_entry == 0.0) return 0.0;
  if (max_entry == 0.0) return 0.0;
  // Factoring out the largest (or, for negative orders, smallest) entry keeps
  // every intermediate power in [0, 1] resp. [1, inf) and avoids overflow.
  const double scale = alpha > 0.0 ? max_entry : min_entry;
  double acc = 0.0;
  for (double x : p) acc += std::pow(x / scale, alpha);
  return bounded(scale * std::pow(acc / n, 1.0 / alpha));
}

RiskLossSummary risk_and_loss(const PermutationProfile& profile, double alpha_risk,
                              double alpha_loss) {
  if (!(alpha_risk < 1.0))
    fail(errc::alpha_range_violation, "the risk order must be below 1");
  if (!(alpha_loss > 1.0))
    fail(errc::alpha_range_violation, "the loss order must be above 1");
  RiskLossSummary summary{alpha_risk, alpha_loss, {}};
  for (const auto& attr : profile.attributes) {
    std::vector<double> distances(attr.rank_distances.begin(), attr.rank_distances.end());
    summary.attributes.push_back({attr.attribute,
                                  power_mean(distances, alpha_risk),
                                  power_mean(distances, alpha_loss)});
  }
  return summary;
}

}  // namespace sdc
