#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdc/domain.hpp"

namespace sdc {

// Tie policy used by rank(): equal values are ranked by first occurrence, so
// ranks are always a permutation of 1..n.
inline constexpr const char* kRankTieRule = "first-occurrence";

// 1-based competition-free ranks: position each value would take in a stable
// ascending sort. Throws errc::empty_input for an empty sequence.
std::vector<std::size_t> rank(std::span<const double> values);

// Reconstructs the permuted-data view of a release: z_i takes the i-th
// smallest original value, where i is the rank of the released value y_i.
// The output is a rearrangement of x (same multiset) whose ranks match y's.
std::vector<double> reverse_map(std::span<const double> x, std::span<const double> y);

// Rank displacement and residual noise for one attribute. rank_distances is
// indexed by original record: entry i is |rank_Y(f(i)) - rank_X(i)|, how far
// record i's value moved in rank space. residuals is indexed by released
// record: y_k minus the reverse-mapped value z_k, the part of the release
// that pure permutation cannot explain.
struct AttributeProfile {
  std::string attribute;
  std::vector<std::size_t> rank_distances;
  std::vector<double> residuals;
  double max_abs_residual = 0.0;
};

struct PermutationProfile {
  std::vector<AttributeProfile> attributes;
  // Original-to-released record correspondence used: the original table's
  // record map when it has one, otherwise the identity (flagged here).
  bool identity_map_assumed = false;
};

struct Decomposition {
  // Per attribute a permutation of the original values, aligned with the
  // released records: what the release would look like with its residual
  // noise stripped.
  MicrodataTable reverse_mapped;
  PermutationProfile profile;
};

// Splits a release into permutation plus residual noise, attribute by
// attribute. Tables must agree in record count and schema (names, kinds,
// domains); every attribute must carry an order (numeric, or categorical with
// a declared order).
Decomposition decompose(const MicrodataTable& original, const MicrodataTable& released);

// Applies a perturbation channel to one categorical attribute of a table,
// record by record. Same reproducibility contract as randomize(): one variate
// per record in record order from std::mt19937_64(seed).
MicrodataTable pram_apply(const MicrodataTable& table, const std::string& attribute,
                          const TransitionMatrix& channel, std::uint64_t seed);

enum class DiversityCriterion { variance, distinct_count, t_closeness };

DiversityCriterion parse_criterion(const std::string& name);  // errc::unknown_criterion

// One record-attribute check of the permutation-privacy guarantee.
struct DvfCheck {
  std::size_t record = 0;       // original record index, 0-based
  std::size_t attribute = 0;    // column index
  std::size_t rank_distance = 0;
  bool distance_ok = false;     // rank_distance >= d[attribute]
  double diversity = 0.0;       // of the rank window around the closest value
  bool diversity_ok = false;    // diversity > v[attribute]
  bool closest_tie = false;     // two released values equidistant; smaller taken
};

struct DvfVerdict {
  bool satisfied = true;
  std::vector<DvfCheck> checks;               // record-major, n * m entries
  std::vector<std::size_t> failing_records;   // 0-based, ascending, deduplicated
};

// Checks, for every original record and attribute: (1) the released value
// closest to the original one sits at least d_j ranks away from the record's
// own released value, and (2) the released values within d_j ranks of that
// closest value are diverse enough (criterion value > v_j). d and v give one
// threshold per attribute. closeness_t parameterizes the t-closeness
// criterion, where diversity is 1 when the window's distribution stays within
// max-ratio distance closeness_t of the attribute's released distribution and
// 0 otherwise.
DvfVerdict check_dvf_privacy(const MicrodataTable& original, const MicrodataTable& released,
                             std::span<const long long> d, std::span<const double> v,
                             DiversityCriterion criterion, double closeness_t = 1.0);

// Power mean of order alpha: (mean of p_i^alpha)^(1/alpha), continuously
// extended with the geometric mean at alpha = 0. Entries must be
// non-negative; the mean is 0 whenever a zero entry meets alpha <= 0. Orders
// below 1 weight small entries (risk reading: near-zero displacement
// anywhere dominates); orders above 1 weight large ones (loss reading: big
// displacement anywhere dominates).
double power_mean(std::span<const double> p, double alpha);

struct AttributeRiskLoss {
  std::string attribute;
  double risk = 0.0;   // power_mean(rank_distances, alpha_risk)
  double loss = 0.0;   // power_mean(rank_distances, alpha_loss)
};

struct RiskLossSummary {
  double alpha_risk = 0.0;
  double alpha_loss = 0.0;
  std::vector<AttributeRiskLoss> attributes;
};

// Condenses a profile's rank displacements into one re-identification-risk
// and one information-loss figure per attribute. Requires alpha_risk < 1 and
// alpha_loss > 1 so the two readings stay on their own sides of the
// arithmetic mean.
RiskLossSummary risk_and_loss(const PermutationProfile& profile, double alpha_risk,
                              double alpha_loss);

}  // namespace sdc
