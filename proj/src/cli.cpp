#include "sdc/cli.hpp"

#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdc/closeness.hpp"
#include "sdc/csv.hpp"
#include "sdc/dp_audit.hpp"
#include "sdc/domain.hpp"
#include "sdc/permutation.hpp"
#include "sdc/randomized_response.hpp"

namespace sdc::cli {

namespace {

using json = nlohmann::ordered_json;

// Everything a subcommand may consume, collected from flags and --config.
// Flags win over config file entries; unset optionals fall back to defaults
// at the point of use, and the resolved value is echoed in the report.
struct Options {
  std::optional<std::string> config_path;
  std::optional<std::string> matrix_path;
  std::optional<std::string> table_path;
  std::optional<std::string> original_path;
  std::optional<std::string> out_path;
  std::optional<std::string> table_out;
  std::optional<std::string> matrix_out;
  std::optional<std::string> sensitive;
  std::optional<std::string> value;
  std::optional<std::string> criterion;
  std::optional<std::string> prior_spec;   // "uniform" or comma-separated weights
  std::optional<double> epsilon;
  std::optional<double> t;
  std::optional<double> p_stay;
  std::optional<std::uint64_t> seed;
  std::vector<double> alphas;              // exactly 2 when given
  std::vector<long long> d;
  std::vector<double> v;
  std::vector<std::string> labels;
  std::vector<double> lambda;
  std::vector<std::string> order_specs;    // COL=a,b,c as typed
  std::vector<std::string> numeric_columns;
  bool project = false;
};

// JSON has no infinity literal; audits produce it legitimately (identity
// channels, clusters missing a category). Serialize it as a string.
json real_json(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : "-inf";
}

json weights_json(const Distribution& dist) {
  json out = json::object();
  for (std::size_t i = 0; i < dist.size(); ++i)
    out[dist.domain().label(i)] = dist.weight(i);
  return out;
}

json matrix_json(const TransitionMatrix& matrix) {
  json rows = json::array();
  for (std::size_t u = 0; u < matrix.size(); ++u) {
    json row = json::array();
    for (std::size_t v = 0; v < matrix.size(); ++v) row.push_back(matrix.prob(u, v));
    rows.push_back(std::move(row));
  }
  return json{{"labels", matrix.domain().labels()}, {"rows", std::move(rows)}};
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

std::vector<double> parse_weight_list(const std::string& text) {
  std::vector<double> weights;
  std::stringstream stream(text);
  std::string piece;
  while (std::getline(stream, piece, ',')) {
    try {
      std::size_t used = 0;
      const double w = std::stod(piece, &used);
      if (used != piece.size()) throw std::invalid_argument(piece);
      weights.push_back(w);
    } catch (const std::exception&) {
      fail(errc::usage_error, "'" + piece + "' is not a number in '" + text + "'");
    }
  }
  if (weights.empty()) fail(errc::usage_error, "empty weight list");
  return weights;
}

Distribution resolve_prior(const Options& opts, const CategoricalDomain& domain) {
  if (!opts.prior_spec || *opts.prior_spec == "uniform")
    return Distribution::uniform(domain);
  return Distribution(domain, parse_weight_list(*opts.prior_spec));
}

CategoryOrders resolve_orders(const Options& opts) {
  CategoryOrders orders;
  for (const std::string& spec : opts.order_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      fail(errc::usage_error, "--order expects COL=a,b,c, got '" + spec + "'");
    std::vector<std::string> labels;
    std::stringstream stream(spec.substr(eq + 1));
    std::string piece;
    while (std::getline(stream, piece, ',')) labels.push_back(piece);
    orders[spec.substr(0, eq)] = std::move(labels);
  }
  return orders;
}

json orders_json(const CategoryOrders& orders) {
  json out = json::object();
  for (const auto& [column, labels] : orders) out[column] = labels;
  return out;
}

// Fills options the command line left unset from the config file. The file
// uses the flag names without dashes; --order's map form is {"COL": [...]}.
void merge_config(Options& opts) {
  if (!opts.config_path) return;
  std::ifstream in(*opts.config_path);
  if (!in) fail(errc::usage_error, "cannot open config '" + *opts.config_path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(errc::parse_error, std::string("config: ") + e.what());
  }

  const auto take_string = [&](const char* key, std::optional<std::string>& slot) {
    if (!slot && cfg.contains(key)) slot = cfg.at(key).get<std::string>();
  };
  const auto take_real = [&](const char* key, std::optional<double>& slot) {
    if (!slot && cfg.contains(key)) slot = cfg.at(key).get<double>();
  };
  take_string("matrix", opts.matrix_path);
  take_string("table", opts.table_path);
  take_string("original", opts.original_path);
  take_string("out", opts.out_path);
  take_string("table_out", opts.table_out);
  take_string("matrix_out", opts.matrix_out);
  take_string("sensitive", opts.sensitive);
  take_string("value", opts.value);
  take_string("criterion", opts.criterion);
  take_real("epsilon", opts.epsilon);
  take_real("t", opts.t);
  take_real("p_stay", opts.p_stay);
  if (!opts.seed && cfg.contains("seed")) opts.seed = cfg.at("seed").get<std::uint64_t>();
  if (opts.alphas.empty() && cfg.contains("alphas"))
    opts.alphas = cfg.at("alphas").get<std::vector<double>>();
  if (opts.d.empty() && cfg.contains("d"))
    opts.d = cfg.at("d").get<std::vector<long long>>();
  if (opts.v.empty() && cfg.contains("v"))
    opts.v = cfg.at("v").get<std::vector<double>>();
  if (opts.labels.empty() && cfg.contains("labels"))
    opts.labels = cfg.at("labels").get<std::vector<std::string>>();
  if (opts.lambda.empty() && cfg.contains("lambda"))
    opts.lambda = cfg.at("lambda").get<std::vector<double>>();
  if (opts.numeric_columns.empty() && cfg.contains("numeric"))
    opts.numeric_columns = cfg.at("numeric").get<std::vector<std::string>>();
  if (!opts.prior_spec && cfg.contains("prior")) {
    const json& prior = cfg.at("prior");
    if (prior.is_string()) {
      opts.prior_spec = prior.get<std::string>();
    } else {
      std::string spec;
      for (const auto& w : prior) {
        if (!spec.empty()) spec.push_back(',');
        spec += format_double(w.get<double>());
      }
      opts.prior_spec = spec;
    }
  }
  if (cfg.contains("order")) {
    // Flag-supplied orders win column by column.
    CategoryOrders from_flags = resolve_orders(opts);
    for (const auto& [column, labels] : cfg.at("order").items())
      if (!from_flags.contains(column))
        opts.order_specs.push_back(column + "=" +
                                   [&labels] {
                                     std::string joined;
                                     for (const auto& l : labels) {
                                       if (!joined.empty()) joined.push_back(',');
                                       joined += l.get<std::string>();
                                     }
                                     return joined;
                                   }());
  }
  if (!opts.project && cfg.contains("project")) opts.project = cfg.at("project").get<bool>();
}

std::string required(const std::optional<std::string>& slot, const char* flag) {
  if (!slot) fail(errc::usage_error, std::string("missing required ") + flag);
  return *slot;
}

// Per-invocation state shared by the handlers.
struct Invocation {
  Options opts;
  TableSchema schema;
  std::uint64_t seed = 0;
  json config = json::object();
  json results = json::object();
  json witnesses = json::array();
  int verdict = 0;  // 0 ok, 1 audited property violated
};

MicrodataTable load_table_opt(const Invocation& inv, const std::optional<std::string>& path,
                              const char* flag) {
  return load_table_file(required(path, flag), inv.schema);
}

json secrecy_json(const SecrecyReport& report) {
  json values = json::array();
  json misinformative = json::array();
  for (const auto& view : report.values) {
    json entry{{"reported", view.reported}, {"reachable", view.reachable}};
    if (view.reachable) {
      entry["posterior"] = weights_json(*view.posterior);
      entry["entropy_bits"] = view.entropy;
      entry["max_posterior"] = view.max_posterior;
      entry["max_posterior_label"] = view.max_posterior_label;
      entry["misinformative"] = view.misinformative;
      if (view.misinformative) misinformative.push_back(view.reported);
    }
    values.push_back(std::move(entry));
  }
  return json{{"prior_entropy_bits", report.prior_entropy},
              {"conditional_entropy_bits", report.conditional_entropy},
              {"perfect_secrecy", report.perfect_secrecy},
              {"misinformative_values", std::move(misinformative)},
              {"values", std::move(values)}};
}

json cluster_json(const ClusterCloseness& entry, bool with_verdict) {
  json out{{"cluster", entry.cluster},
           {"records", entry.size},
           {"distribution", weights_json(entry.distribution)},
           {"distance", real_json(entry.distance)},
           {"entropy_bits", entry.entropy},
           {"max_probability", entry.max_probability},
           {"max_probability_label", entry.max_probability_label},
           {"concentrated", entry.concentrated}};
  if (with_verdict) out["violates"] = entry.violates;
  return out;
}

void handle_rr_design(Invocation& inv) {
  if (inv.opts.labels.size() < 2)
    fail(errc::usage_error, "--labels needs at least two categories");
  if (inv.opts.p_stay && inv.opts.epsilon)
    fail(errc::usage_error, "give --p-stay or --epsilon, not both");
  if (!inv.opts.p_stay && !inv.opts.epsilon)
    fail(errc::usage_error, "give --p-stay or --epsilon");
  CategoricalDomain domain(inv.opts.labels);
  const TransitionMatrix matrix = inv.opts.p_stay
                                      ? design_uniform_stay(domain, *inv.opts.p_stay)
                                      : design_for_epsilon(domain, *inv.opts.epsilon);
  inv.config["labels"] = inv.opts.labels;
  if (inv.opts.p_stay) inv.config["p_stay"] = *inv.opts.p_stay;
  if (inv.opts.epsilon) inv.config["epsilon"] = *inv.opts.epsilon;
  inv.results["matrix"] = matrix_json(matrix);
  inv.results["min_epsilon"] = real_json(min_epsilon_rr(matrix).min_epsilon);
  if (inv.opts.matrix_out) {
    save_matrix_file(matrix, *inv.opts.matrix_out);
    inv.config["matrix_out"] = *inv.opts.matrix_out;
  }
}

void handle_rr_apply(Invocation& inv) {
  const TransitionMatrix matrix = load_matrix_file(required(inv.opts.matrix_path, "--matrix"));
  const MicrodataTable table = load_table_opt(inv, inv.opts.table_path, "--table");
  const std::string column_name = required(inv.opts.sensitive, "--sensitive");
  const Column& column = table.column(column_name);
  if (!column.is_categorical())
    fail(errc::non_categorical_sensitive, "column '" + column_name + "' is not categorical");

  std::vector<std::string> values;
  values.reserve(table.record_count());
  for (std::size_t i = 0; i < table.record_count(); ++i)
    values.push_back(column.domain->label(column.codes[i]));
  const std::vector<std::string> reported = randomize(values, matrix, inv.seed);

  inv.config["matrix"] = *inv.opts.matrix_path;
  inv.config["table"] = *inv.opts.table_path;
  inv.config["sensitive"] = column_name;
  inv.results["records"] = table.record_count();
  inv.results["input_distribution"] =
      weights_json(empirical_distribution(values, matrix.domain()));
  inv.results["reported_distribution"] =
      weights_json(empirical_distribution(reported, matrix.domain()));
  inv.results["reported_values"] = reported;

  if (inv.opts.table_out) {
    std::vector<std::size_t> codes(reported.size());
    for (std::size_t i = 0; i < reported.size(); ++i)
      codes[i] = matrix.domain().index_of(reported[i]);
    const std::size_t index = *table.find_column(column_name);
    save_table_file(table.with_column(index, Column::categorical(column_name, matrix.domain(),
                                                                 std::move(codes),
                                                                 column.declared_order)),
                    *inv.opts.table_out);
    inv.config["table_out"] = *inv.opts.table_out;
  }
}

// A stored channel is matched to the data by label. Reordering the matrix
// onto the column's own domain means a table whose categories happen to
// appear in a different order than the matrix file still gets exactly the
// channel that was written down, and the perturbed column keeps the table's
// domain (so it can be paired against the original downstream).
TransitionMatrix align_channel(const TransitionMatrix& matrix, const CategoricalDomain& domain) {
  if (matrix.size() != domain.size())
    fail(errc::domain_mismatch, "column and matrix have different category counts");
  std::vector<std::size_t> at(domain.size());
  for (std::size_t u = 0; u < domain.size(); ++u) {
    const std::optional<std::size_t> pos = matrix.domain().find(domain.label(u));
    if (!pos)
      fail(errc::domain_mismatch, "matrix has no row for category '" + domain.label(u) + "'");
    at[u] = *pos;
  }
  std::vector<std::vector<double>> rows(domain.size(), std::vector<double>(domain.size()));
  for (std::size_t u = 0; u < domain.size(); ++u)
    for (std::size_t v = 0; v < domain.size(); ++v)
      rows[u][v] = matrix.prob(at[u], at[v]);
  return TransitionMatrix(domain, std::move(rows));
}

void handle_pram_apply(Invocation& inv) {
  TransitionMatrix matrix = load_matrix_file(required(inv.opts.matrix_path, "--matrix"));
  const MicrodataTable table = load_table_opt(inv, inv.opts.table_path, "--table");
  const std::string column_name = required(inv.opts.sensitive, "--sensitive");
  {
    const Column& column = table.column(column_name);
    if (column.is_categorical() && !(*column.domain == matrix.domain()))
      matrix = align_channel(matrix, *column.domain);
  }
  const MicrodataTable perturbed = pram_apply(table, column_name, matrix, inv.seed);

  const Column& before = table.column(column_name);
  const Column& after = perturbed.column(column_name);
  inv.config["matrix"] = *inv.opts.matrix_path;
  inv.config["table"] = *inv.opts.table_path;
  inv.config["sensitive"] = column_name;
  inv.results["records"] = table.record_count();
  inv.results["input_distribution"] = weights_json(
      empirical_distribution(std::span<const std::size_t>(before.codes), *before.domain));
  inv.results["output_distribution"] = weights_json(
      empirical_distribution(std::span<const std::size_t>(after.codes), *after.domain));
  if (inv.opts.table_out) {
    save_table_file(perturbed, *inv.opts.table_out);
    inv.config["table_out"] = *inv.opts.table_out;
  }
}

void handle_estimate(Invocation& inv) {
  const TransitionMatrix matrix = load_matrix_file(required(inv.opts.matrix_path, "--matrix"));
  std::optional<Distribution> lambda_hat;
  if (!inv.opts.lambda.empty()) {
    lambda_hat = Distribution(matrix.domain(), inv.opts.lambda);
    inv.config["lambda"] = inv.opts.lambda;
  } else {
    const MicrodataTable table = load_table_opt(inv, inv.opts.table_path, "--table or --lambda");
    const std::string column_name = required(inv.opts.sensitive, "--sensitive");
    const Column& column = table.column(column_name);
    if (!column.is_categorical())
      fail(errc::non_categorical_sensitive, "column '" + column_name + "' is not categorical");
    // Tallied by label against the matrix domain, so the table's incidental
    // label order (or a sample that misses a category) still estimates fine.
    std::vector<std::string> values;
    values.reserve(table.record_count());
    for (std::size_t i = 0; i < table.record_count(); ++i)
      values.push_back(column.domain->label(column.codes[i]));
    lambda_hat = empirical_distribution(values, matrix.domain());
    inv.config["table"] = *inv.opts.table_path;
    inv.config["sensitive"] = column_name;
  }
  inv.config["matrix"] = *inv.opts.matrix_path;
  inv.config["project"] = inv.opts.project;

  const RawEstimate raw = estimate_true_proportions(*lambda_hat, matrix);
  json components = json::object();
  for (std::size_t u = 0; u < raw.components.size(); ++u)
    components[raw.domain.label(u)] = raw.components[u];
  inv.results["lambda_hat"] = weights_json(*lambda_hat);
  inv.results["estimate"] = std::move(components);
  inv.results["sums_to_one"] = raw.sums_to_one;
  if (inv.opts.project) inv.results["projected"] = weights_json(project_to_simplex(raw));
}

void handle_posterior(Invocation& inv) {
  const TransitionMatrix matrix = load_matrix_file(required(inv.opts.matrix_path, "--matrix"));
  const Distribution prior = resolve_prior(inv.opts, matrix.domain());
  const std::string value = required(inv.opts.value, "--value");
  const Distribution post = posterior(matrix, prior, value);

  inv.config["matrix"] = *inv.opts.matrix_path;
  inv.config["prior"] = inv.opts.prior_spec.value_or("uniform");
  inv.config["value"] = value;
  std::size_t best = 0;
  for (std::size_t u = 1; u < post.size(); ++u)
    if (post.weight(u) > post.weight(best)) best = u;
  inv.results["reported"] = value;
  inv.results["prior"] = weights_json(prior);
  inv.results["posterior"] = weights_json(post);
  inv.results["entropy_bits"] = deniability_entropy(post);
  inv.results["max_posterior"] = post.weight(best);
  inv.results["max_posterior_label"] = post.domain().label(best);
}

void handle_secrecy(Invocation& inv) {
  const TransitionMatrix matrix = load_matrix_file(required(inv.opts.matrix_path, "--matrix"));
  const Distribution prior = resolve_prior(inv.opts, matrix.domain());
  inv.config["matrix"] = *inv.opts.matrix_path;
  inv.config["prior"] = inv.opts.prior_spec.value_or("uniform");
  inv.results = secrecy_json(secrecy_report(matrix, prior));
}

void handle_audit_dp(Invocation& inv) {
  const TransitionMatrix matrix = load_matrix_file(required(inv.opts.matrix_path, "--matrix"));
  inv.config["matrix"] = *inv.opts.matrix_path;

  const DpAuditResult audit = inv.opts.epsilon ? check_epsilon_rr(matrix, *inv.opts.epsilon)
                                               : min_epsilon_rr(matrix);
  inv.results["min_epsilon"] = real_json(audit.min_epsilon);
  inv.results["worst_column"] = audit.worst.reported;
  inv.results["worst_pair"] = json{{"max_label", audit.worst.max_label},
                                   {"max_entry", audit.worst.max_entry},
                                   {"min_label", audit.worst.min_label},
                                   {"min_entry", audit.worst.min_entry},
                                   {"ratio", real_json(audit.worst.ratio)}};
  json columns = json::array();
  for (const auto& spread : audit.columns)
    columns.push_back(json{{"reported", spread.reported},
                           {"max_entry", spread.max_entry},
                           {"min_entry", spread.min_entry},
                           {"ratio", real_json(spread.ratio)}});
  inv.results["columns"] = std::move(columns);

  if (inv.opts.epsilon) {
    inv.config["epsilon"] = *inv.opts.epsilon;
    inv.results["epsilon"] = *inv.opts.epsilon;
    inv.results["satisfies"] = *audit.satisfies;
    if (!*audit.satisfies) {
      inv.verdict = 1;
      inv.witnesses.push_back(json{{"column", audit.worst.reported},
                                   {"ratio", real_json(audit.worst.ratio)},
                                   {"min_epsilon", real_json(audit.min_epsilon)},
                                   {"epsilon", *inv.opts.epsilon}});
    }
  }

  if (inv.opts.prior_spec) {
    // Optional deniability reading of the same channel.
    const Distribution prior = resolve_prior(inv.opts, matrix.domain());
    inv.config["prior"] = *inv.opts.prior_spec;
    json values = json::array();
    for (const auto& entry : deniability_at_epsilon(matrix, prior).values) {
      json row{{"reported", entry.reported},
               {"ratio", real_json(entry.ratio)},
               {"reachable", entry.reachable}};
      if (entry.reachable) {
        row["posterior"] = weights_json(*entry.posterior);
        row["entropy_bits"] = entry.entropy;
        row["max_posterior"] = entry.max_posterior;
        row["max_posterior_label"] = entry.max_posterior_label;
      }
      values.push_back(std::move(row));
    }
    inv.results["deniability"] = std::move(values);
  }
}

void handle_audit_closeness(Invocation& inv) {
  if (inv.opts.t && inv.opts.epsilon)
    fail(errc::usage_error, "give --t or --epsilon, not both (t = exp(epsilon/2))");
  const MicrodataTable table = load_table_opt(inv, inv.opts.table_path, "--table");
  const std::string sensitive = required(inv.opts.sensitive, "--sensitive");
  inv.config["table"] = *inv.opts.table_path;
  inv.config["sensitive"] = sensitive;

  std::optional<double> t = inv.opts.t;
  if (inv.opts.epsilon) {
    t = std::exp(*inv.opts.epsilon / 2.0);
    inv.config["epsilon"] = *inv.opts.epsilon;
  }
  if (t) inv.config["t"] = *t;

  const ClosenessReport report =
      t ? check_t_closeness(table, sensitive, *t) : cluster_deniability(table, sensitive);
  inv.results["dataset_distribution"] = weights_json(report.dataset_distribution);
  inv.results["dataset_entropy_bits"] = report.dataset_entropy;
  inv.results["max_distance"] = real_json(report.max_distance);
  if (report.implied_epsilon) inv.results["implied_epsilon"] = *report.implied_epsilon;
  json clusters = json::array();
  for (const auto& entry : report.clusters) clusters.push_back(cluster_json(entry, t.has_value()));
  inv.results["clusters"] = std::move(clusters);
  if (t) {
    inv.results["t"] = *t;
    inv.results["satisfies"] = report.satisfies;
    if (!report.satisfies) {
      inv.verdict = 1;
      for (const auto& entry : report.clusters)
        if (entry.violates)
          inv.witnesses.push_back(json{{"cluster", entry.cluster},
                                       {"distance", real_json(entry.distance)},
                                       {"t", *t}});
    }
  }
}

void handle_revmap(Invocation& inv) {
  const MicrodataTable original = load_table_opt(inv, inv.opts.original_path, "--original");
  const MicrodataTable released = load_table_opt(inv, inv.opts.table_path, "--table");
  std::string attribute;
  if (inv.opts.sensitive) {
    attribute = *inv.opts.sensitive;
  } else if (original.column_count() == 1) {
    attribute = original.column(std::size_t{0}).name;
  } else {
    fail(errc::usage_error, "--sensitive is required when the table has several columns");
  }
  inv.config["original"] = *inv.opts.original_path;
  inv.config["table"] = *inv.opts.table_path;
  inv.config["sensitive"] = attribute;

  const std::vector<double> x = original.column(attribute).ordinal_values();
  const std::vector<double> y = released.column(attribute).ordinal_values();
  const std::vector<double> z = reverse_map(x, y);
  json z_values = json::array();
  const Column& x_col = original.column(attribute);
  for (double value : z) {
    if (x_col.is_categorical())
      z_values.push_back(x_col.domain->label(static_cast<std::size_t>(std::llround(value))));
    else
      z_values.push_back(value);
  }
  inv.results["attribute"] = attribute;
  inv.results["records"] = z.size();
  inv.results["reverse_mapped"] = std::move(z_values);
}

void handle_decompose(Invocation& inv) {
  const MicrodataTable original = load_table_opt(inv, inv.opts.original_path, "--original");
  const MicrodataTable released = load_table_opt(inv, inv.opts.table_path, "--table");
  inv.config["original"] = *inv.opts.original_path;
  inv.config["table"] = *inv.opts.table_path;

  const Decomposition result = decompose(original, released);
  inv.results["records"] = original.record_count();
  inv.results["identity_map_assumed"] = result.profile.identity_map_assumed;
  json attributes = json::array();
  for (const auto& attr : result.profile.attributes) {
    double mean = 0.0;
    std::size_t max_distance = 0;
    for (std::size_t p : attr.rank_distances) {
      mean += static_cast<double>(p);
      max_distance = std::max(max_distance, p);
    }
    mean /= static_cast<double>(attr.rank_distances.size());
    json residuals = json::array();
    for (double r : attr.residuals) residuals.push_back(r);
    attributes.push_back(json{{"attribute", attr.attribute},
                              {"rank_distances", attr.rank_distances},
                              {"mean_rank_distance", mean},
                              {"max_rank_distance", max_distance},
                              {"residuals", std::move(residuals)},
                              {"max_abs_residual", attr.max_abs_residual}});
  }
  inv.results["attributes"] = std::move(attributes);
  if (inv.opts.table_out) {
    save_table_file(result.reverse_mapped, *inv.opts.table_out);
    inv.config["table_out"] = *inv.opts.table_out;
  }
}

void handle_check_dvf(Invocation& inv) {
  const MicrodataTable original = load_table_opt(inv, inv.opts.original_path, "--original");
  const MicrodataTable released = load_table_opt(inv, inv.opts.table_path, "--table");
  if (inv.opts.d.empty()) fail(errc::usage_error, "missing required --d");
  if (inv.opts.v.empty()) fail(errc::usage_error, "missing required --v");
  const DiversityCriterion criterion =
      parse_criterion(inv.opts.criterion.value_or("variance"));
  const double closeness_t = inv.opts.t.value_or(1.0);

  inv.config["original"] = *inv.opts.original_path;
  inv.config["table"] = *inv.opts.table_path;
  inv.config["d"] = inv.opts.d;
  inv.config["v"] = inv.opts.v;
  inv.config["criterion"] = inv.opts.criterion.value_or("variance");
  if (criterion == DiversityCriterion::t_closeness) inv.config["t"] = closeness_t;

  const DvfVerdict verdict =
      check_dvf_privacy(original, released, inv.opts.d, inv.opts.v, criterion, closeness_t);
  inv.results["records"] = original.record_count();
  inv.results["satisfied"] = verdict.satisfied;
  json failing = json::array();
  for (std::size_t record : verdict.failing_records) failing.push_back(record + 1);
  inv.results["failing_records"] = failing;

  if (!verdict.satisfied) {
    inv.verdict = 1;
    for (const auto& check : verdict.checks) {
      if (check.distance_ok && check.diversity_ok) continue;
      inv.witnesses.push_back(json{{"record", check.record + 1},
                                   {"attribute", original.column(check.attribute).name},
                                   {"rank_distance", check.rank_distance},
                                   {"required_distance", inv.opts.d[check.attribute]},
                                   {"distance_ok", check.distance_ok},
                                   {"diversity", check.diversity},
                                   {"required_diversity", inv.opts.v[check.attribute]},
                                   {"diversity_ok", check.diversity_ok},
                                   {"closest_tie", check.closest_tie}});
    }
  }
}

void handle_risk_loss(Invocation& inv) {
  const MicrodataTable original = load_table_opt(inv, inv.opts.original_path, "--original");
  const MicrodataTable released = load_table_opt(inv, inv.opts.table_path, "--table");
  double alpha_risk = -2.0, alpha_loss = 2.0;  // config defaults, echoed below
  if (!inv.opts.alphas.empty()) {
    if (inv.opts.alphas.size() != 2)
      fail(errc::usage_error, "--alphas expects exactly two values: RISK,LOSS");
    alpha_risk = inv.opts.alphas[0];
    alpha_loss = inv.opts.alphas[1];
  }
  inv.config["original"] = *inv.opts.original_path;
  inv.config["table"] = *inv.opts.table_path;
  inv.config["alphas"] = json::array({alpha_risk, alpha_loss});

  const Decomposition result = decompose(original, released);
  const RiskLossSummary summary = risk_and_loss(result.profile, alpha_risk, alpha_loss);
  inv.results["alpha_risk"] = summary.alpha_risk;
  inv.results["alpha_loss"] = summary.alpha_loss;
  inv.results["identity_map_assumed"] = result.profile.identity_map_assumed;
  json attributes = json::array();
  for (const auto& entry : summary.attributes)
    attributes.push_back(json{{"attribute", entry.attribute},
                              {"risk", real_json(entry.risk)},
                              {"loss", real_json(entry.loss)}});
  inv.results["attributes"] = std::move(attributes);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"statistical disclosure control audit toolkit", kToolName};
  app.require_subcommand(1);
  Options opts;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", opts.out_path, "write the JSON report here instead of stdout");
    cmd->add_option("--config", opts.config_path, "JSON file supplying any flag by name");
    cmd->add_option("--seed", opts.seed, "64-bit RNG seed (default 0)");
    cmd->add_option("--order", opts.order_specs,
                    "declared category order, COL=a,b,c (repeatable)");
    cmd->add_option("--numeric", opts.numeric_columns,
                    "columns that must parse as numbers")
        ->delimiter(',');
  };

  CLI::App* rr_design = app.add_subcommand("rr-design", "build a uniform-stay channel");
  rr_design->add_option("--labels", opts.labels, "category labels")->delimiter(',');
  rr_design->add_option("--p-stay", opts.p_stay, "diagonal stay probability");
  rr_design->add_option("--epsilon", opts.epsilon, "calibrate the stay probability to epsilon");
  rr_design->add_option("--matrix-out", opts.matrix_out, "write the channel as CSV");
  add_common(rr_design);

  CLI::App* rr_apply = app.add_subcommand("rr-apply", "randomize one column respondent-side");
  rr_apply->add_option("--matrix", opts.matrix_path, "channel CSV");
  rr_apply->add_option("--table", opts.table_path, "microdata CSV");
  rr_apply->add_option("--sensitive", opts.sensitive, "column to randomize");
  rr_apply->add_option("--table-out", opts.table_out, "write the perturbed table as CSV");
  add_common(rr_apply);

  CLI::App* pram = app.add_subcommand("pram-apply", "perturb one column controller-side");
  pram->add_option("--matrix", opts.matrix_path, "channel CSV");
  pram->add_option("--table", opts.table_path, "microdata CSV");
  pram->add_option("--sensitive", opts.sensitive, "column to perturb");
  pram->add_option("--table-out", opts.table_out, "write the perturbed table as CSV");
  add_common(pram);

  CLI::App* estimate = app.add_subcommand("estimate", "recover true proportions");
  estimate->add_option("--matrix", opts.matrix_path, "channel CSV");
  estimate->add_option("--table", opts.table_path, "reported microdata CSV");
  estimate->add_option("--sensitive", opts.sensitive, "reported column to tally");
  estimate->add_option("--lambda", opts.lambda, "reported distribution directly")
      ->delimiter(',');
  estimate->add_flag("--project", opts.project, "also project the estimate onto the simplex");
  add_common(estimate);

  CLI::App* post = app.add_subcommand("posterior", "posterior for one reported value");
  post->add_option("--matrix", opts.matrix_path, "channel CSV");
  post->add_option("--prior", opts.prior_spec, "'uniform' or comma-separated weights");
  post->add_option("--value", opts.value, "reported category");
  add_common(post);

  CLI::App* secrecy = app.add_subcommand("secrecy", "entropy picture of a channel");
  secrecy->add_option("--matrix", opts.matrix_path, "channel CSV");
  secrecy->add_option("--prior", opts.prior_spec, "'uniform' or comma-separated weights");
  add_common(secrecy);

  CLI::App* audit_dp = app.add_subcommand("audit-dp", "epsilon floor of a channel");
  audit_dp->add_option("--matrix", opts.matrix_path, "channel CSV");
  audit_dp->add_option("--epsilon", opts.epsilon, "target epsilon to check against");
  audit_dp->add_option("--prior", opts.prior_spec,
                       "add the per-value deniability table under this prior");
  add_common(audit_dp);

  CLI::App* closeness = app.add_subcommand("audit-closeness", "cluster-level closeness audit");
  closeness->add_option("--table", opts.table_path, "clustered microdata CSV");
  closeness->add_option("--sensitive", opts.sensitive, "sensitive categorical column");
  closeness->add_option("--t", opts.t, "closeness threshold (>= 1)");
  closeness->add_option("--epsilon", opts.epsilon, "threshold as exp(epsilon/2)");
  add_common(closeness);

  CLI::App* revmap = app.add_subcommand("revmap", "reverse-map one released attribute");
  revmap->add_option("--original", opts.original_path, "original microdata CSV");
  revmap->add_option("--table", opts.table_path, "released microdata CSV");
  revmap->add_option("--sensitive", opts.sensitive, "attribute to reverse-map");
  add_common(revmap);

  CLI::App* decomp = app.add_subcommand("decompose", "split a release into permutation + noise");
  decomp->add_option("--original", opts.original_path, "original microdata CSV");
  decomp->add_option("--table", opts.table_path, "released microdata CSV");
  decomp->add_option("--table-out", opts.table_out, "write the reverse-mapped table as CSV");
  add_common(decomp);

  CLI::App* dvf = app.add_subcommand("check-dvf", "per-record permutation privacy check");
  dvf->add_option("--original", opts.original_path, "original microdata CSV");
  dvf->add_option("--table", opts.table_path, "released microdata CSV");
  dvf->add_option("--d", opts.d, "per-attribute minimum rank distances")->delimiter(',');
  dvf->add_option("--v", opts.v, "per-attribute minimum diversities")->delimiter(',');
  dvf->add_option("--criterion", opts.criterion, "variance | distinct-count | t-closeness");
  dvf->add_option("--t", opts.t, "t for the t-closeness criterion");
  add_common(dvf);

  CLI::App* risk = app.add_subcommand("risk-loss", "power-mean risk and loss scores");
  risk->add_option("--original", opts.original_path, "original microdata CSV");
  risk->add_option("--table", opts.table_path, "released microdata CSV");
  risk->add_option("--alphas", opts.alphas, "RISK,LOSS orders (default -2,2)")->delimiter(',');
  add_common(risk);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back(kToolName);
  for (const auto& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << kToolName << ": " << e.what() << "\n";
    return 2;
  }

  try {
    merge_config(opts);

    Invocation inv;
    inv.opts = opts;
    inv.schema.orders = resolve_orders(opts);
    inv.schema.numeric = opts.numeric_columns;
    inv.seed = opts.seed.value_or(0);
    inv.config["seed"] = inv.seed;
    if (!inv.schema.orders.empty()) inv.config["order"] = orders_json(inv.schema.orders);
    if (!inv.schema.numeric.empty()) inv.config["numeric"] = inv.schema.numeric;

    CLI::App* active = app.get_subcommands().front();
    const std::string command = active->get_name();
    if (command == "rr-design") handle_rr_design(inv);
    else if (command == "rr-apply") handle_rr_apply(inv);
    else if (command == "pram-apply") handle_pram_apply(inv);
    else if (command == "estimate") handle_estimate(inv);
    else if (command == "posterior") handle_posterior(inv);
    else if (command == "secrecy") handle_secrecy(inv);
    else if (command == "audit-dp") handle_audit_dp(inv);
    else if (command == "audit-closeness") handle_audit_closeness(inv);
    else if (command == "revmap") handle_revmap(inv);
    else if (command == "decompose") handle_decompose(inv);
    else if (command == "check-dvf") handle_check_dvf(inv);
    else if (command == "risk-loss") handle_risk_loss(inv);
    else fail(errc::usage_error, "unknown command " + command);

    json report;
    report["command"] = command;
    report["version"] = kVersion;
    report["config"] = inv.config;
    report["results"] = inv.results;
    report["witnesses"] = inv.witnesses;
    report["timestamp"] = iso_timestamp();

    if (opts.out_path) {
      std::ofstream file(*opts.out_path);
      if (!file) fail(errc::usage_error, "cannot open '" + *opts.out_path + "' for writing");
      file << report.dump(2) << "\n";
    } else {
      out << report.dump(2) << "\n";
    }
    return inv.verdict;
  } catch (const Error& e) {
    err << kToolName << ": " << errc_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << kToolName << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sdc::cli
