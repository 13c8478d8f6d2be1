#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdc/domain.hpp"

namespace sdc {

// Worst multiplicative gap between two distributions over the same domain:
// max over categories of max(p/q, q/p). Categories carrying no mass in either
// distribution contribute nothing; a category with mass on exactly one side
// makes the distance infinite. The distance is always >= 1 and equals 1 only
// for identical supports with identical masses.
double max_ratio_distance(const Distribution& f1, const Distribution& f2);

// The privacy budget that closeness at level t translates to: epsilon =
// 2 ln(t), the inverse of t = exp(epsilon/2). Throws errc::t_below_one for
// t < 1.
double implied_dp_epsilon(double t);

// One cluster's view against the dataset-wide distribution of the sensitive
// attribute.
struct ClusterCloseness {
  std::string cluster;
  std::size_t size = 0;
  Distribution distribution;
  double distance = 1.0;                // to the dataset distribution; may be +inf
  double entropy = 0.0;                 // bits, of the cluster distribution
  double max_probability = 0.0;
  std::string max_probability_label;
  bool concentrated = false;            // max_probability > 1/2
  bool violates = false;                // distance > t (closeness audits only)
};

struct ClosenessReport {
  std::string sensitive;
  double tested_t = 0.0;
  Distribution dataset_distribution;
  double dataset_entropy = 0.0;         // bits
  std::vector<ClusterCloseness> clusters;
  double max_distance = 1.0;            // the sharpest t the table satisfies; may be +inf
  bool satisfies = true;
  // 2 ln(max_distance): the privacy budget the sharpest satisfied closeness
  // level translates to. Absent when max_distance is infinite.
  std::optional<double> implied_epsilon;
};

// Audits whether every cluster's sensitive-attribute distribution stays
// within max-ratio distance t of the whole table's. Requires cluster labels,
// a categorical sensitive column and t >= 1 (no distribution pair is closer
// than 1).
ClosenessReport check_t_closeness(const MicrodataTable& table, const std::string& sensitive,
                                  double t);

// The same per-cluster picture without a threshold: distances, entropies and
// concentration flags, for gauging how much deniability cluster membership
// leaves. violates stays false and tested_t is reported as 0.
ClosenessReport cluster_deniability(const MicrodataTable& table, const std::string& sensitive);

}  // namespace sdc
