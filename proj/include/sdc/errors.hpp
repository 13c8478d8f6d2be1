#pragma once

#include <stdexcept>
#include <string>

namespace sdc {

// Every failure mode the library reports. The CLI maps any of these to
// exit code 2; tests match on the code rather than the message text.
enum class errc {
  negative_entry,
  row_sum_violation,
  unknown_category,
  empty_input,
  domain_mismatch,
  domain_too_small,
  singular_matrix,
  unreachable_reported_value,
  negative_epsilon,
  t_below_one,
  no_cluster_labels,
  non_categorical_sensitive,
  length_mismatch,
  shape_mismatch,
  unordered_categorical,
  unknown_criterion,
  alpha_range_violation,
  parse_error,
  schema_mismatch,
  duplicate_header,
  usage_error,
};

const char* errc_name(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sdc
