#include "sdc/dp_audit.hpp"

#include <cmath>
#include <limits>

namespace sdc {

namespace {

ColumnSpread column_spread(const TransitionMatrix& channel, std::size_t v) {
  const std::size_t r = channel.size();
  ColumnSpread spread;
  spread.reported = channel.domain().label(v);
  std::size_t u_max = 0, u_min = 0;
  for (std::size_t u = 1; u < r; ++u) {
    if (channel.prob(u, v) > channel.prob(u_max, v)) u_max = u;
    if (channel.prob(u, v) < channel.prob(u_min, v)) u_min = u;
  }
  spread.max_entry = channel.prob(u_max, v);
  spread.min_entry = channel.prob(u_min, v);
  spread.max_label = channel.domain().label(u_max);
  spread.min_label = channel.domain().label(u_min);
  if (spread.max_entry == 0.0) {
    spread.ratio = 1.0;  // never emitted, indistinguishable by definition
  } else if (spread.min_entry == 0.0) {
    spread.ratio = std::numeric_limits<double>::infinity();
  } else {
    spread.ratio = spread.max_entry / spread.min_entry;
  }
  return spread;
}

}  // namespace

DpAuditResult min_epsilon_rr(const TransitionMatrix& channel) {
  DpAuditResult result;
  const std::size_t r = channel.size();
  result.columns.reserve(r);
  for (std::size_t v = 0; v < r; ++v) {
    ColumnSpread spread = column_spread(channel, v);
    if (v == 0 || spread.ratio > result.worst.ratio) result.worst = spread;
    result.columns.push_back(std::move(spread));
  }
  result.min_epsilon = std::log(result.worst.ratio);
  return result;
}

DpAuditResult check_epsilon_rr(const TransitionMatrix& channel, double epsilon) {
  if (!(epsilon >= 0.0)) fail(errc::negative_epsilon, "epsilon must be non-negative");
  DpAuditResult result = min_epsilon_rr(channel);
  result.tested_epsilon = epsilon;
  result.satisfies = result.min_epsilon <= epsilon + kEpsilonSlack;
  return result;
}

DeniabilityTable deniability_at_epsilon(const TransitionMatrix& channel,
                                        const Distribution& prior) {
  if (prior.domain() != channel.domain())
    fail(errc::domain_mismatch, "prior and channel are over different domains");
  const DpAuditResult audit = min_epsilon_rr(channel);
  const SecrecyReport secrecy = secrecy_report(channel, prior);

  DeniabilityTable table;
  table.min_epsilon = audit.min_epsilon;
  table.values.reserve(channel.size());
  for (std::size_t v = 0; v < channel.size(); ++v) {
    const ReportedValueView& view = secrecy.values[v];
    ValueDeniability entry;
    entry.reported = view.reported;
    entry.ratio = audit.columns[v].ratio;
    entry.reachable = view.reachable;
    entry.posterior = view.posterior;
    entry.entropy = view.entropy;
    entry.max_posterior = view.max_posterior;
    entry.max_posterior_label = view.max_posterior_label;
    table.values.push_back(std::move(entry));
  }
  return table;
}

}  // namespace sdc
