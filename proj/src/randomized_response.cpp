#include "sdc/randomized_response.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sampling.hpp"

namespace sdc {

namespace {

// Solves A x = b by Gaussian elimination with partial pivoting, tracking the
// determinant from the pivots. Throws errc::singular_matrix when |det(A)|
// falls below kSingularDetTol.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[pivot][k])) pivot = i;
    if (a[pivot][k] == 0.0)
      fail(errc::singular_matrix, "channel matrix is singular; the reported "
                                  "distribution does not determine the true one");
    if (pivot != k) {
      std::swap(a[pivot], a[k]);
      std::swap(b[pivot], b[k]);
      det = -det;
    }
    det *= a[k][k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = a[i][k] / a[k][k];
      if (factor == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i][j] -= factor * a[k][j];
      b[i] -= factor * b[k];
    }
  }
  if (std::abs(det) < kSingularDetTol)
    fail(errc::singular_matrix, "channel matrix is singular within tolerance "
                                "(|det| < 1e-12); estimation is ill-posed");
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t j = i + 1; j < n; ++j) sum -= a[i][j] * x[j];
    x[i] = sum / a[i][i];
  }
  return x;
}

Distribution posterior_by_index(const TransitionMatrix& channel, const Distribution& prior,
                                std::size_t v) {
  const std::size_t r = channel.size();
  std::vector<double> weights(r);
  double total = 0.0;
  for (std::size_t u = 0; u < r; ++u) {
    weights[u] = prior.weight(u) * channel.prob(u, v);
    total += weights[u];
  }
  if (total == 0.0)
    fail(errc::unreachable_reported_value,
         "reported value '" + channel.domain().label(v) +
             "' has probability zero under this prior");
  for (double& w : weights) w /= total;
  return Distribution(channel.domain(), std::move(weights));
}

}  // namespace

TransitionMatrix design_uniform_stay(const CategoricalDomain& domain, double p_stay) {
  if (domain.size() < 2)
    fail(errc::domain_too_small, "a perturbation design needs at least two categories");
  if (!(p_stay >= 0.0 && p_stay <= 1.0))
    fail(errc::negative_entry, "stay probability must lie in [0, 1]");
  const std::size_t r = domain.size();
  const double off = (1.0 - p_stay) / static_cast<double>(r - 1);
  std::vector<std::vector<double>> rows(r, std::vector<double>(r, off));
  for (std::size_t u = 0; u < r; ++u) rows[u][u] = p_stay;
  return TransitionMatrix(domain, std::move(rows));
}

TransitionMatrix design_for_epsilon(const CategoricalDomain& domain, double epsilon) {
  if (!(epsilon >= 0.0))
    fail(errc::negative_epsilon, "epsilon must be non-negative");
  if (domain.size() < 2)
    fail(errc::domain_too_small, "a perturbation design needs at least two categories");
  const double e = std::exp(epsilon);
  const double p = e / (e + static_cast<double>(domain.size()) - 1.0);
  return design_uniform_stay(domain, p);
}

std::vector<std::string> randomize(std::span<const std::string> values,
                                   const TransitionMatrix& channel,
                                   std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::string> out;
  out.reserve(values.size());
  for (const auto& value : values) {
    const std::size_t u = channel.domain().index_of(value);
    const double draw = detail::uniform01(gen);
    out.push_back(channel.domain().label(detail::sample_row(channel.row(u), draw)));
  }
  return out;
}

Distribution reported_distribution(const TransitionMatrix& channel,
                                   const Distribution& prior) {
  if (prior.domain() != channel.domain())
    fail(errc::domain_mismatch, "prior and channel are over different domains");
  const std::size_t r = channel.size();
  std::vector<double> lambda(r, 0.0);
  for (std::size_t v = 0; v < r; ++v)
    for (std::size_t u = 0; u < r; ++u)
      lambda[v] += prior.weight(u) * channel.prob(u, v);
  return Distribution(channel.domain(), std::move(lambda));
}

RawEstimate estimate_true_proportions(const Distribution& lambda_hat,
                                      const TransitionMatrix& channel) {
  if (lambda_hat.domain() != channel.domain())
    fail(errc::domain_mismatch, "observed distribution and channel are over different domains");
  const std::size_t r = channel.size();
  std::vector<std::vector<double>> transpose(r, std::vector<double>(r));
  for (std::size_t u = 0; u < r; ++u)
    for (std::size_t v = 0; v < r; ++v)
      transpose[v][u] = channel.prob(u, v);
  std::vector<double> x = solve_linear(std::move(transpose), lambda_hat.weights());
  const double mass = std::accumulate(x.begin(), x.end(), 0.0);
  RawEstimate raw{channel.domain(), std::move(x), std::abs(mass - 1.0) <= kEstimateSumTol};
  return raw;
}

Distribution project_to_simplex(const RawEstimate& raw) {
  const auto& w = raw.components;
  if (w.empty()) fail(errc::empty_input, "nothing to project");
  const double mass = std::accumulate(w.begin(), w.end(), 0.0);
  const bool feasible = std::all_of(w.begin(), w.end(), [](double x) { return x >= 0.0; });
  if (feasible && std::abs(mass - 1.0) <= kDistributionTol)
    return Distribution(raw.domain, w);

  // Sort-based projection: find the largest prefix of the descending sort
  // whose shifted values stay positive, then clip everything below the shift.
  std::vector<double> sorted = w;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> projected(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    projected[i] = std::max(w[i] - theta, 0.0);
  // Clipping can leave the total a few ulps off 1; close the gap exactly.
  const double total = std::accumulate(projected.begin(), projected.end(), 0.0);
  if (total > 0.0)
    for (double& p : projected) p /= total;
  return Distribution(raw.domain, std::move(projected));
}

Distribution posterior(const TransitionMatrix& channel, const Distribution& prior,
                       std::string_view reported) {
  if (prior.domain() != channel.domain())
    fail(errc::domain_mismatch, "prior and channel are over different domains");
  return posterior_by_index(channel, prior, channel.domain().index_of(reported));
}

double entropy_bits(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights)
    if (w > 0.0) h -= w * std::log2(w);
  return h;
}

double deniability_entropy(const Distribution& posterior) {
  return entropy_bits(posterior.weights());
}

SecrecyReport secrecy_report(const TransitionMatrix& channel, const Distribution& prior) {
  if (prior.domain() != channel.domain())
    fail(errc::domain_mismatch, "prior and channel are over different domains");
  const std::size_t r = channel.size();
  const Distribution lambda = reported_distribution(channel, prior);

  SecrecyReport report;
  report.prior_entropy = entropy_bits(prior.weights());
  report.values.reserve(r);
  for (std::size_t v = 0; v < r; ++v) {
    ReportedValueView view;
    view.reported = channel.domain().label(v);
    view.reachable = lambda.weight(v) > 0.0;
    if (view.reachable) {
      Distribution post = posterior_by_index(channel, prior, v);
      view.entropy = deniability_entropy(post);
      std::size_t best = 0;
      for (std::size_t u = 1; u < r; ++u)
        if (post.weight(u) > post.weight(best)) best = u;
      view.max_posterior = post.weight(best);
      view.max_posterior_label = channel.domain().label(best);
      view.misinformative = view.entropy > report.prior_entropy + kEntropyTol;
      report.conditional_entropy += lambda.weight(v) * view.entropy;
      view.posterior = std::move(post);
    }
    report.values.push_back(std::move(view));
  }
  // The reported value carries no information exactly when conditioning on it
  // costs no entropy.
  report.perfect_secrecy =
      std::abs(report.prior_entropy - report.conditional_entropy) <= kEntropyTol;
  return report;
}

}  // namespace sdc
