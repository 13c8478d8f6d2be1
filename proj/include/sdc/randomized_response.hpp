#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdc/domain.hpp"

namespace sdc {

// Classic symmetric design: stay probability p on the diagonal, the remaining
// mass (1-p)/(r-1) spread over the other categories. p must lie in [0, 1] and
// the domain needs at least two categories.
TransitionMatrix design_uniform_stay(const CategoricalDomain& domain, double p_stay);

// The design above with p chosen as e^eps / (e^eps + r - 1), the largest
// uniform-stay matrix that keeps the worst-case column ratio at e^eps.
TransitionMatrix design_for_epsilon(const CategoricalDomain& domain, double epsilon);

// Perturbs each value independently through the channel. Reproducible by
// contract: a fixed (values, channel, seed) triple yields identical output on
// every platform. One variate is consumed per record, in record order, from
// std::mt19937_64(seed) mapped to [0,1) as (gen() >> 11) * 2^-53, and the
// category is picked by walking the cumulative row.
std::vector<std::string> randomize(std::span<const std::string> values,
                                   const TransitionMatrix& channel,
                                   std::uint64_t seed);

// Distribution of the reported value when the true one follows prior:
// lambda_v = sum_u prior_u * P(u, v).
Distribution reported_distribution(const TransitionMatrix& channel,
                                   const Distribution& prior);

// Unbiased estimate of the true frequencies from observed reported ones,
// solving P^T x = lambda_hat. Components may be negative and need not sum to
// one; sums_to_one records the mass diagnostic. Throws errc::singular_matrix
// when the channel is not invertible (estimation is impossible then, which is
// exactly the perfect-secrecy regime).
RawEstimate estimate_true_proportions(const Distribution& lambda_hat,
                                      const TransitionMatrix& channel);

// Euclidean projection of a raw estimate onto the probability simplex. A raw
// estimate that already is a distribution passes through unchanged.
Distribution project_to_simplex(const RawEstimate& raw);

// Posterior over the true category given one reported value:
// Pr(X=u | Y=v) proportional to prior_u * P(u, v). Throws
// errc::unreachable_reported_value when the reported value has probability 0
// under the prior (no posterior exists).
Distribution posterior(const TransitionMatrix& channel, const Distribution& prior,
                       std::string_view reported);

// Shannon entropy of a probability vector in bits, with 0 log 0 = 0.
double entropy_bits(std::span<const double> weights);

// Deniability offered by one reported value: the entropy, in bits, of the
// posterior over true categories.
double deniability_entropy(const Distribution& posterior);

// Per reported value: its reach, posterior, entropy and the most likely true
// category. Unreachable values keep a row with reachable=false and no
// posterior rather than failing the whole report.
struct ReportedValueView {
  std::string reported;
  bool reachable = false;
  std::optional<Distribution> posterior;
  double entropy = 0.0;                 // bits; 0 when unreachable
  double max_posterior = 0.0;
  std::string max_posterior_label;
  bool misinformative = false;          // entropy exceeds the prior's by > 1e-9
};

struct SecrecyReport {
  double prior_entropy = 0.0;           // H(X) in bits
  double conditional_entropy = 0.0;     // H(X|Y): reach-weighted posterior entropy
  bool perfect_secrecy = false;         // H(X|Y) = H(X) within 1e-9
  std::vector<ReportedValueView> values;
};

// Full per-value deniability picture of a channel under a prior.
SecrecyReport secrecy_report(const TransitionMatrix& channel, const Distribution& prior);

}  // namespace sdc
