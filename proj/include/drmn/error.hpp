#pragma once

#include <stdexcept>
#include <string>

namespace drmn {

enum class Errc {
  shape,
  numeric_domain,
  format,
  validation,
  config,
  empty_input,
  domain,
  determinism,
  degenerate_score,
  io,
};

const char* errc_name(Errc code);

/// Base exception for every failure raised by the library. The code lets
/// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Dataset validation failures carry a finer-grained reason.
enum class ValidationCode {
  zero_norm_semantic,
  non_finite_value,
  negative_semantic,
  no_attributes,
  seen_unseen_overlap,
  class_out_of_range,
  label_count_mismatch,
  split_label_mismatch,
  split_ids_overlap,
  image_id_out_of_range,
  level_shape_mismatch,
  bad_ref_level,
  missing_field,
};

const char* validation_code_name(ValidationCode code);

class ValidationError : public Error {
 public:
  ValidationError(ValidationCode reason, const std::string& what)
      : Error(Errc::validation, what), reason_(reason) {}
  ValidationCode reason() const noexcept { return reason_; }

 private:
  ValidationCode reason_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace drmn
