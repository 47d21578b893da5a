#include "drmn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drmn/error.hpp"

namespace drmn {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::shape: return "shape";
    case Errc::numeric_domain: return "numeric-domain";
    case Errc::format: return "format";
    case Errc::validation: return "validation";
    case Errc::config: return "config";
    case Errc::empty_input: return "empty-input";
    case Errc::domain: return "domain";
    case Errc::determinism: return "determinism";
    case Errc::degenerate_score: return "degenerate-score";
    case Errc::io: return "io";
  }
  return "unknown";
}

const char* validation_code_name(ValidationCode code) {
  switch (code) {
    case ValidationCode::zero_norm_semantic: return "zero_norm_semantic";
    case ValidationCode::non_finite_value: return "non_finite_value";
    case ValidationCode::negative_semantic: return "negative_semantic";
    case ValidationCode::no_attributes: return "no_attributes";
    case ValidationCode::seen_unseen_overlap: return "seen_unseen_overlap";
    case ValidationCode::class_out_of_range: return "class_out_of_range";
    case ValidationCode::label_count_mismatch: return "label_count_mismatch";
    case ValidationCode::split_label_mismatch: return "split_label_mismatch";
    case ValidationCode::split_ids_overlap: return "split_ids_overlap";
    case ValidationCode::image_id_out_of_range: return "image_id_out_of_range";
    case ValidationCode::level_shape_mismatch: return "level_shape_mismatch";
    case ValidationCode::bad_ref_level: return "bad_ref_level";
    case ValidationCode::missing_field: return "missing_field";
  }
  return "unknown";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  for (auto e : shape_) {
    if (e == 0) fail(Errc::shape, "tensor extents must be positive, got " + shape_str(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_) {
    if (e == 0) fail(Errc::shape, "tensor extents must be positive, got " + shape_str(shape_));
  }
  if (data_.size() != shape_numel(shape_)) {
    fail(Errc::shape, "data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) fail(Errc::shape, "ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() != 2) fail(Errc::shape, "expected a matrix, got shape " + shape_str(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() != 2) fail(Errc::shape, "expected a matrix, got shape " + shape_str(shape_));
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    fail(Errc::shape, "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    fail(Errc::shape, std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
  }
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    fail(Errc::shape, std::string(what) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace drmn
