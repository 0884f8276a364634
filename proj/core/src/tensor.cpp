#include "genlab/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "genlab/errors.hpp"
#include "genlab/parallel.hpp"

namespace genlab {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor: " + std::to_string(data_.size()) + " values for shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("tensor: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Tensor Tensor::row_vector(std::span<const double> v) {
  return Tensor(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Tensor Tensor::column_vector(std::span<const double> v) {
  return Tensor(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::diagonal(std::span<const double> d) {
  Tensor t(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t(i, i) = d[i];
  return t;
}

std::vector<double> Tensor::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) throw DimensionError("item() on non-scalar " + shape_string());
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " by " + b.shape_string());
  }
  const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
  Tensor out(n, p);
  const double* bd = b.data().data();
  auto body = [&](std::size_t i) {
    double* o = out.row(i).data();
    const double* ar = a.row(i).data();
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = bd + k * p;
      for (std::size_t j = 0; j < p; ++j) o[j] += aik * br[j];
    }
  };
  parallel_for(0, n, n * m * p, body);
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(const Tensor& a, double s) {
  Tensor out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Tensor operator*(double s, const Tensor& a) { return a * s; }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require(begin <= end && end <= a.rows(), "slice_rows: range out of bounds");
  std::vector<double> v(a.data().begin() + static_cast<std::ptrdiff_t>(begin * a.cols()),
                        a.data().begin() + static_cast<std::ptrdiff_t>(end * a.cols()));
  return Tensor(end - begin, a.cols(), std::move(v));
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> idx) {
  Tensor out(idx.size(), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < a.rows(), "gather_rows: index out of range");
    std::copy(a.row(idx[i]).begin(), a.row(idx[i]).end(), out.row(i).begin());
  }
  return out;
}

Tensor column_means(const Tensor& a) {
  Tensor m(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(0, j) += a(i, j);
  if (a.rows() > 0) m = m * (1.0 / static_cast<double>(a.rows()));
  return m;
}

double trace(const Tensor& a) {
  require(a.rows() == a.cols(), "trace: matrix must be square");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace genlab
