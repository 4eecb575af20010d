#pragma once

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace idivnmf {

// Error hierarchy. Every failure raised by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Negative, NaN or infinite input, or a violated type invariant.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// All-zero input matrix.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// (Q-Q+)(ij) == 0 against P(ij) > 0 inside an update step.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

/// Tolerance for sums of internally constructed probability objects.
inline constexpr double kConstructedSumTol = 1e-12;
/// Tolerance for sums of user-ingested probability data.
inline constexpr double kIngestedSumTol = 1e-9;

/// Dense row-major matrix of reals without sign constraints (gradients, scratch).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense matrix whose entries are all finite and >= 0, with at least one row
/// and one column. Immutable once constructed.
class NonnegMatrix {
 public:
  explicit NonnegMatrix(Matrix m);
  NonnegMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : NonnegMatrix(Matrix(rows, cols, std::move(data))) {}
  NonnegMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : NonnegMatrix(Matrix(rows)) {}

  std::size_t rows() const { return m_.rows(); }
  std::size_t cols() const { return m_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  std::span<const double> values() const { return m_.values(); }
  const Matrix& matrix() const { return m_; }

  double sum() const;
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;

  bool operator==(const NonnegMatrix&) const = default;

 private:
  Matrix m_;
};

/// Nonnegative matrix summing to one.
class ProbMatrix {
 public:
  /// Throws DomainError when |sum - 1| > tol.
  explicit ProbMatrix(NonnegMatrix m, double tol = kConstructedSumTol);

  std::size_t rows() const { return m_.rows(); }
  std::size_t cols() const { return m_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const NonnegMatrix& inner() const { return m_; }

 private:
  NonnegMatrix m_;
};

/// Normalized decision variables: qminus (m x k) summing to one and
/// row-stochastic qplus (k x n), 1 <= k <= min(m, n).
class FactorPair {
 public:
  FactorPair(NonnegMatrix qminus, NonnegMatrix qplus);

  const NonnegMatrix& qminus() const { return qminus_; }
  const NonnegMatrix& qplus() const { return qplus_; }
  std::size_t inner_size() const { return qminus_.cols(); }
  std::size_t rows() const { return qminus_.rows(); }
  std::size_t cols() const { return qplus_.cols(); }

  /// Collapsed matrix Q = qminus * qplus.
  NonnegMatrix product() const;

  bool operator==(const FactorPair&) const = default;

 private:
  NonnegMatrix qminus_;
  NonnegMatrix qplus_;
};

/// Nonnegative real or +infinity. Divergences take this type: +inf is a
/// legitimate value, not an error.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}
  static constexpr ExtendedReal infinity() {
    return ExtendedReal(std::numeric_limits<double>::infinity());
  }

  constexpr double value() const { return value_; }
  constexpr bool is_finite() const { return value_ < std::numeric_limits<double>::infinity(); }
  constexpr bool is_infinite() const { return !is_finite(); }

  friend constexpr bool operator==(ExtendedReal, ExtendedReal) = default;
  friend constexpr auto operator<=>(ExtendedReal a, ExtendedReal b) { return a.value_ <=> b.value_; }

 private:
  double value_ = 0.0;
};

/// Dense m x k x n nonnegative array indexed (i, l, j).
class LiftedTensor {
 public:
  LiftedTensor(std::size_t m, std::size_t k, std::size_t n, std::vector<double> data);
  /// Zero tensor.
  LiftedTensor(std::size_t m, std::size_t k, std::size_t n);

  std::size_t m() const { return m_; }
  std::size_t k() const { return k_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t i, std::size_t l, std::size_t j) const {
    return data_[(i * k_ + l) * n_ + j];
  }
  std::span<const double> values() const { return data_; }

  double sum() const;
  bool same_shape(const LiftedTensor& o) const { return m_ == o.m_ && k_ == o.k_ && n_ == o.n_; }

  bool operator==(const LiftedTensor&) const = default;

 private:
  std::size_t m_;
  std::size_t k_;
  std::size_t n_;
  std::vector<double> data_;
};

struct ScaledProblem {
  ProbMatrix p;
  double total;  // e'Ve
};

struct Factorization {
  NonnegMatrix w;
  NonnegMatrix h;
};

// I-divergence with 0/0 = 0, 0 log 0 = 0, p/0 = inf for p > 0.
ExtendedReal i_div_scalar(double p, double q);
ExtendedReal i_div_matrix(const NonnegMatrix& m, const NonnegMatrix& n);
ExtendedReal i_div_tensor(const LiftedTensor& a, const LiftedTensor& b);

/// Squared L2 distance between entrywise square roots of two probability
/// tensors. Bounded above by i_div_tensor(a, b).
double hellinger_tensor(const LiftedTensor& a, const LiftedTensor& b);

/// P = V / e'Ve. Throws DegenerateInputError for an all-zero V.
ScaledProblem normalize_problem(const NonnegMatrix& v);

/// W = total * qminus, H = qplus.
Factorization denormalize_solution(const FactorPair& pair, double total);

/// Plain product a * b.
NonnegMatrix multiply(const NonnegMatrix& a, const NonnegMatrix& b);

/// x log(x / y) with the divergence conventions; +inf when x > 0, y == 0.
double xlogxy(double x, double y);

}  // namespace idivnmf
