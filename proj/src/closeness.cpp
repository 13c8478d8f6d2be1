#include "sdc/closeness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdc/randomized_response.hpp"

namespace sdc {

double max_ratio_distance(const Distribution& f1, const Distribution& f2) {
  if (f1.domain() != f2.domain())
    fail(errc::domain_mismatch, "distributions are over different domains");
  double worst = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    const double p = f1.weight(i);
    const double q = f2.weight(i);
    if (p == 0.0 && q == 0.0) continue;
    if (p == 0.0 || q == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::max(p / q, q / p));
  }
  return worst;
}

double implied_dp_epsilon(double t) {
  if (!(t >= 1.0))
    fail(errc::t_below_one, "t must be at least 1; no pair of distributions is closer");
  return 2.0 * std::log(t);
}

namespace {

ClosenessReport build_report(const MicrodataTable& table, const std::string& sensitive,
                             std::optional<double> t) {
  const Column& column = table.column(sensitive);
  if (!column.is_categorical())
    fail(errc::non_categorical_sensitive,
         "sensitive column '" + sensitive + "' must be categorical");
  if (!table.has_clusters())
    fail(errc::no_cluster_labels,
         "cluster-level audits need a __cluster column in the table");

  const CategoricalDomain& domain = *column.domain;
  Distribution dataset = empirical_distribution(std::span<const std::size_t>(column.codes), domain);

  ClosenessReport report{sensitive, t.value_or(0.0), dataset,
                         entropy_bits(dataset.weights()), {}, 0.0, true, std::nullopt};
  for (const auto& [label, records] : table.cluster_partition()) {
    std::vector<std::size_t> codes;
    codes.reserve(records.size());
    for (std::size_t i : records) codes.push_back(column.codes[i]);
    Distribution cluster_dist = empirical_distribution(std::span<const std::size_t>(codes), domain);

    ClusterCloseness entry{label, records.size(), cluster_dist, 0.0, 0.0, 0.0, "", false, false};
    entry.distance = max_ratio_distance(cluster_dist, dataset);
    entry.entropy = entropy_bits(cluster_dist.weights());
    std::size_t best = 0;
    for (std::size_t i = 1; i < domain.size(); ++i)
      if (cluster_dist.weight(i) > cluster_dist.weight(best)) best = i;
    entry.max_probability = cluster_dist.weight(best);
    entry.max_probability_label = domain.label(best);
    entry.concentrated = entry.max_probability > 0.5;
    if (t) {
      entry.violates = entry.distance > *t;
      if (entry.violates) report.satisfies = false;
    }
    report.max_distance = std::max(report.max_distance, entry.distance);
    report.clusters.push_back(std::move(entry));
  }
  if (std::isfinite(report.max_distance))
    report.implied_epsilon = implied_dp_epsilon(report.max_distance);
  return report;
}

}  // namespace

ClosenessReport check_t_closeness(const MicrodataTable& table, const std::string& sensitive,
                                  double t) {
  if (!(t >= 1.0))
    fail(errc::t_below_one, "t must be at least 1; no pair of distributions is closer");
  return build_report(table, sensitive, t);
}

ClosenessReport cluster_deniability(const MicrodataTable& table, const std::string& sensitive) {
  return build_report(table, sensitive, std::nullopt);
}

}  // namespace sdc
