#pragma once

#include "drmn/tensor.hpp"

// Plain (non-recorded) dense matrix products used by kernels and inference.
namespace drmn::linalg {

/// A (n x k) * B (k x m)
Tensor matmul(const Tensor& a, const Tensor& b);
/// A (n x k) * B^T, B is (m x k)
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// A^T * B, A is (n x k), B is (n x m)
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

}  // namespace drmn::linalg
