#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patent {

enum class ErrorKind {
  config,
  schema,
  parse,
  domain,
  shape,
  usage,
  diverged,
  singular_design,
  absorbed_regressor,
  degenerate,
  undefined_metric,
  missing_covariate,
  coverage,
  integrity,
  transport,
  http_status,
  dimension_mismatch,
  not_ready,
  dependency,
  not_found,
  io,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports carries a machine-readable kind so the CLI
// and the HTTP layer can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace patent
