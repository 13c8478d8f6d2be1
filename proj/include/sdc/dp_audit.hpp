#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdc/domain.hpp"
#include "sdc/randomized_response.hpp"

namespace sdc {

// Spread of one matrix column: its largest and smallest entries and their
// ratio. The ratio is 1 for an all-zero column (the reported value is never
// emitted, so it cannot distinguish anything) and +infinity when some inputs
// can emit the value and others cannot.
struct ColumnSpread {
  std::string reported;
  double max_entry = 0.0;
  double min_entry = 0.0;
  std::string max_label;     // true category attaining max_entry
  std::string min_label;     // true category attaining min_entry
  double ratio = 1.0;        // may be +infinity
};

struct DpAuditResult {
  double min_epsilon = 0.0;  // ln of the worst column ratio; may be +infinity
  ColumnSpread worst;        // the column attaining it
  std::vector<ColumnSpread> columns;
  // Set when a target epsilon was supplied.
  std::optional<double> tested_epsilon;
  std::optional<bool> satisfies;
};

// The smallest epsilon a perturbation channel honours: the log of the largest
// column max/min ratio. A channel with an infinite ratio provides no such
// guarantee at any finite epsilon.
DpAuditResult min_epsilon_rr(const TransitionMatrix& channel);

// Verdict for a specific target: satisfies iff min_epsilon <= epsilon + slack.
// The slack (1e-12) absorbs the rounding in computing ratios of stored
// doubles, so a channel constructed for epsilon audits as satisfying epsilon.
DpAuditResult check_epsilon_rr(const TransitionMatrix& channel, double epsilon);

inline constexpr double kEpsilonSlack = 1e-12;

// One reported value's deniability under a prior: the column ratio driving
// its distinguishing power, the posterior it induces, that posterior's
// entropy and its peak. Unreachable values (zero probability under the prior)
// keep their row with reachable=false and no posterior.
struct ValueDeniability {
  std::string reported;
  double ratio = 1.0;        // column max/min ratio; may be +infinity
  bool reachable = false;
  std::optional<Distribution> posterior;
  double entropy = 0.0;      // bits; 0 when unreachable
  double max_posterior = 0.0;
  std::string max_posterior_label;
};

struct DeniabilityTable {
  double min_epsilon = 0.0;  // the channel's epsilon floor, for context
  std::vector<ValueDeniability> values;
};

// How much deniability the channel's privacy level actually leaves: for each
// reported value, the quantities an attacker-facing assessment needs (ratio,
// posterior, entropy, peak posterior). A large epsilon with a still-flat
// posterior and a tiny epsilon with a peaked one are both visible here.
DeniabilityTable deniability_at_epsilon(const TransitionMatrix& channel,
                                        const Distribution& prior);

}  // namespace sdc
