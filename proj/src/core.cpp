#include "idivnmf/core.hpp"

#include <cmath>
#include <sstream>

namespace idivnmf {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

void require_same_shape(const NonnegMatrix& a, const NonnegMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                         " vs " + shape_str(b.rows(), b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(rows_, cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

NonnegMatrix::NonnegMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.cols() == 0) throw DimensionError("matrix must have at least one row and column");
  for (std::size_t i = 0; i < m_.rows(); ++i) {
    for (std::size_t j = 0; j < m_.cols(); ++j) {
      const double x = m_(i, j);
      if (!std::isfinite(x) || x < 0.0) {
        throw DomainError("entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") is negative or not finite");
      }
    }
  }
}

double NonnegMatrix::sum() const {
  double s = 0.0;
  for (double x : values()) s += x;
  return s;
}

std::vector<double> NonnegMatrix::row_sums() const {
  std::vector<double> out(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) out[i] += m_(i, j);
  return out;
}

std::vector<double> NonnegMatrix::col_sums() const {
  std::vector<double> out(cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) out[j] += m_(i, j);
  return out;
}

ProbMatrix::ProbMatrix(NonnegMatrix m, double tol) : m_(std::move(m)) {
  const double s = m_.sum();
  if (std::abs(s - 1.0) > tol) {
    std::ostringstream os;
    os.precision(17);
    os << "probability matrix sums to " << s;
    throw DomainError(os.str());
  }
}

FactorPair::FactorPair(NonnegMatrix qminus, NonnegMatrix qplus)
    : qminus_(std::move(qminus)), qplus_(std::move(qplus)) {
  const std::size_t k = qminus_.cols();
  if (qplus_.rows() != k) {
    throw DimensionError("factor inner sizes differ: " + std::to_string(k) + " vs " +
                         std::to_string(qplus_.rows()));
  }
  if (k > std::min(qminus_.rows(), qplus_.cols())) {
    throw DomainError("inner size " + std::to_string(k) + " exceeds min(m, n)");
  }
  if (std::abs(qminus_.sum() - 1.0) > kConstructedSumTol) {
    throw DomainError("qminus does not sum to one");
  }
  const auto rs = qplus_.row_sums();
  for (std::size_t l = 0; l < k; ++l) {
    if (std::abs(rs[l] - 1.0) > kConstructedSumTol) {
      throw DomainError("qplus row " + std::to_string(l) + " does not sum to one");
    }
  }
}

NonnegMatrix FactorPair::product() const { return multiply(qminus_, qplus_); }

LiftedTensor::LiftedTensor(std::size_t m, std::size_t k, std::size_t n, std::vector<double> data)
    : m_(m), k_(k), n_(n), data_(std::move(data)) {
  if (m_ == 0 || k_ == 0 || n_ == 0) throw DimensionError("tensor dimensions must be positive");
  if (data_.size() != m_ * k_ * n_) throw DimensionError("tensor data length does not match shape");
  for (double x : data_) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError("tensor entry is negative or not finite");
  }
}

LiftedTensor::LiftedTensor(std::size_t m, std::size_t k, std::size_t n)
    : LiftedTensor(m, k, n, std::vector<double>(m * k * n, 0.0)) {}

double LiftedTensor::sum() const {
  double s = 0.0;
  for (double x : data_) s += x;
  return s;
}

double xlogxy(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return std::numeric_limits<double>::infinity();
  return x * std::log(x / y);
}

ExtendedReal i_div_scalar(double p, double q) {
  if (!std::isfinite(p) || !std::isfinite(q) || p < 0.0 || q < 0.0) {
    throw DomainError("i_div_scalar: arguments must be finite and nonnegative");
  }
  if (p == q) return ExtendedReal(0.0);
  if (p == 0.0) return ExtendedReal(q);
  if (q == 0.0) return ExtendedReal::infinity();
  // Rounding can push a tiny true value below zero.
  return ExtendedReal(std::max(0.0, p * std::log(p / q) - p + q));
}

namespace {

ExtendedReal sum_divergence(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t idx = 0; idx < a.size(); ++idx) {
    const ExtendedReal d = i_div_scalar(a[idx], b[idx]);
    if (d.is_infinite()) return ExtendedReal::infinity();
    s += d.value();
  }
  return ExtendedReal(s);
}

}  // namespace

ExtendedReal i_div_matrix(const NonnegMatrix& m, const NonnegMatrix& n) {
  require_same_shape(m, n, "i_div_matrix");
  return sum_divergence(m.values(), n.values());
}

ExtendedReal i_div_tensor(const LiftedTensor& a, const LiftedTensor& b) {
  if (!a.same_shape(b)) throw DimensionError("i_div_tensor: shape mismatch");
  return sum_divergence(a.values(), b.values());
}

double hellinger_tensor(const LiftedTensor& a, const LiftedTensor& b) {
  if (!a.same_shape(b)) throw DimensionError("hellinger_tensor: shape mismatch");
  if (std::abs(a.sum() - 1.0) > kIngestedSumTol || std::abs(b.sum() - 1.0) > kIngestedSumTol) {
    throw DomainError("hellinger_tensor: arguments must be probability tensors");
  }
  double s = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t idx = 0; idx < av.size(); ++idx) {
    const double d = std::sqrt(av[idx]) - std::sqrt(bv[idx]);
    s += d * d;
  }
  return s;
}

ScaledProblem normalize_problem(const NonnegMatrix& v) {
  const double total = v.sum();
  if (total <= 0.0) {
    throw DegenerateInputError("input matrix is identically zero");
  }
  std::vector<double> p(v.values().begin(), v.values().end());
  for (double& x : p) x /= total;
  return ScaledProblem{ProbMatrix(NonnegMatrix(v.rows(), v.cols(), std::move(p))), total};
}

Factorization denormalize_solution(const FactorPair& pair, double total) {
  if (!(total > 0.0) || !std::isfinite(total)) throw DomainError("total must be positive and finite");
  std::vector<double> w(pair.qminus().values().begin(), pair.qminus().values().end());
  for (double& x : w) x *= total;
  return Factorization{NonnegMatrix(pair.rows(), pair.inner_size(), std::move(w)), pair.qplus()};
}

NonnegMatrix multiply(const NonnegMatrix& a, const NonnegMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      out(i, j) = s;
    }
  return NonnegMatrix(std::move(out));
}

}  // namespace idivnmf
