#pragma once

#include <vector>

#include "drmn/autograd.hpp"
#include "drmn/numeric.hpp"

// Differentiable kernels recorded on a Tape. Matrices are row-major; a
// "blocked" matrix stacks `blocks` equally tall sub-matrices vertically,
// which is how per-image quantities travel through a batch.
namespace drmn::ops {

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
/// sum_i w_i * x_i over same-shaped inputs.
Var linear_combination(Tape& t, const std::vector<Var>& xs, const std::vector<double>& ws);

/// X (n x d) + b broadcast over rows; b has d elements.
Var add_row_bias(Tape& t, Var x, Var b);

/// A (n x k) * B (k x m).
Var matmul(Tape& t, Var a, Var b);
/// A (n x k) * B^T where B is (m x k).
Var matmul_nt(Tape& t, Var a, Var b);

Var softmax_rows(Tape& t, Var x);
Var layer_norm_rows(Tape& t, Var x, Var gain, Var bias, double eps = kLayerNormEps);
Var standardize_rows(Tape& t, Var x, double eps = kLayerNormEps);
Var sigmoid(Tape& t, Var x);
Var relu(Tape& t, Var x);
/// Each row divided by its Euclidean norm. A zero row raises degenerate_score.
Var l2_normalize_rows(Tape& t, Var x);

/// (blocks*r) x c  ->  (blocks*c) x r, transposing every block.
Var block_transpose(Tape& t, Var x, std::size_t blocks);
/// Block i of the result is W_i * V_i, with W (blocks*a) x r and V (blocks*r) x d.
Var block_matmul(Tape& t, Var w, Var v, std::size_t blocks);
/// Column means of every block: (blocks*r) x d  ->  blocks x d.
Var block_mean_rows(Tape& t, Var x, std::size_t blocks);
/// Row (i, a) = X_i + Y_a for X (b x d), Y (a x d); result (b*a) x d.
Var outer_add_rows(Tape& t, Var x, Var y);
/// Stacks `times` copies of X vertically.
Var tile_rows(Tape& t, Var x, std::size_t times);
/// n x d -> n x 1 row sums.
Var row_sum(Tape& t, Var x);
Var mean_all(Tape& t, Var x);
Var reshape(Tape& t, Var x, Shape shape);
Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end);
Var concat_cols(Tape& t, const std::vector<Var>& xs);

}  // namespace drmn::ops
