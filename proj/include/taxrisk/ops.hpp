#pragma once

#include <cstddef>
#include <vector>

#include "taxrisk/tensor.hpp"

namespace taxrisk {

// C = A * B                        [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// C = A * B^T                      [m,k] x [n,k] -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// C = A^T * B                      [k,m] x [k,n] -> [m,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Row-wise softmax with per-row max subtraction. Each output row sums to 1
// within 1e-12. Throws InvalidInputError on non-finite input.
Tensor softmax_rows(const Tensor& logits);

// Mean over rows of -ln(p[label]); probabilities are clamped to >= 1e-12
// before the log. Throws InvalidLabelError if a label is outside the class
// count and InvalidDistributionError if probs holds non-finite values.
double cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// Column-wise concatenation of matrices with equal row counts.
Tensor concat_cols(const std::vector<const Tensor*>& parts);

// Columns [begin, begin+count) of a matrix.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);

Tensor relu(const Tensor& x);
// dx = dy where x > 0 else 0.
Tensor relu_backward(const Tensor& dy, const Tensor& x);

}  // namespace taxrisk
