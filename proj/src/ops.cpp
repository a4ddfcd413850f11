#include "taxrisk/ops.hpp"

#include <algorithm>
#include <cmath>

#include "taxrisk/errors.hpp"

namespace taxrisk {

namespace {
void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be a matrix, got shape " + t.shape_str());
  }
}
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch " + a.shape_str() + " x " + b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt lhs");
  require_matrix(b, "matmul_nt rhs");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt shape mismatch " + a.shape_str() + " x " + b.shape_str() + "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c(i, j) = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn lhs");
  require_matrix(b, "matmul_tn rhs");
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn shape mismatch " + a.shape_str() + "^T x " + b.shape_str());
  }
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor c = Tensor::matrix(m, n);
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data() + p * m;
    const double* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose arg");
  Tensor t = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Tensor softmax_rows(const Tensor& logits) {
  if (!logits.all_finite()) {
    throw InvalidInputError("softmax input contains non-finite values");
  }
  const std::size_t rows = logits.rows(), cols = logits.cols();
  if (cols == 0) throw DimensionError("softmax over empty rows");
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* in = logits.data() + i * cols;
    double* o = out.data() + i * cols;
    double mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

double cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (!probs.all_finite()) {
    throw InvalidDistributionError("cross_entropy probabilities contain non-finite values");
  }
  if (probs.rows() != labels.size()) {
    throw DimensionError("cross_entropy rows " + std::to_string(probs.rows()) +
                         " vs labels " + std::to_string(labels.size()));
  }
  if (labels.empty()) throw InvalidInputError("cross_entropy on empty batch");
  const std::size_t classes = probs.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InvalidLabelError("label " + std::to_string(y) + " outside [0," +
                              std::to_string(classes) + ")");
    }
    const double p = std::max(probs(i, static_cast<std::size_t>(y)), 1e-12);
    total += -std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

Tensor concat_cols(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t rows = parts[0]->rows();
  std::size_t cols = 0;
  for (const Tensor* p : parts) {
    require_matrix(*p, "concat_cols part");
    if (p->rows() != rows) {
      throw DimensionError("concat_cols row mismatch " + std::to_string(p->rows()) +
                           " vs " + std::to_string(rows));
    }
    cols += p->cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t off = 0;
    for (const Tensor* p : parts) {
      const double* src = p->data() + i * p->cols();
      std::copy(src, src + p->cols(), out.data() + i * cols + off);
      off += p->cols();
    }
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_matrix(a, "slice_cols arg");
  if (begin + count > a.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + "," +
                         std::to_string(begin + count) + ") exceeds " + a.shape_str());
  }
  Tensor out = Tensor::matrix(a.rows(), count);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* src = a.data() + i * a.cols() + begin;
    std::copy(src, src + count, out.data() + i * count);
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& dy, const Tensor& x) {
  if (dy.size() != x.size()) throw DimensionError("relu_backward size mismatch");
  Tensor out(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) out[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return out;
}

}  // namespace taxrisk
