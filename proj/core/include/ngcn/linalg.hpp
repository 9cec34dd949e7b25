#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ngcn {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

/// Dense row-major matrix of doubles.
///
/// Weights W_k, factors U_k / V_k and gradients are all stored as
/// DenseMatrix. Graph data uses a feature-by-node layout, so a d x n matrix
/// holds one node per column.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);
  static DenseMatrix from_eigen(const Eigen::Ref<const RowMajorMatrix>& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  MatrixMap eigen() { return {data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)}; }
  ConstMatrixMap eigen() const {
    return {data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)};
  }

  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  // Aligned so Eigen takes the same vector path wherever the block lands;
  // with plain new[] alignment, reductions can round differently run to run.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

std::string shape_string(const DenseMatrix& m);

// Throws NumericError naming `what` if any entry is NaN or infinite.
void ensure_finite(const DenseMatrix& m, std::string_view what);
bool all_finite(const DenseMatrix& m) noexcept;

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T b and a b^T without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double alpha);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
// y += alpha * x
void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y);

double frobenius_norm(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
bool is_symmetric(const DenseMatrix& a, double tolerance);

// Kronecker product a ⊗ b.
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

/// Literal (u ⊗ v) g with the Kronecker product materialized. Meant for
/// small shapes only, as a reference for the factored path.
///
/// Vectors stack matrix rows, so for symmetric v the result equals the
/// row-stacked u G v with G reshaped to u.cols() x v.cols().
std::vector<double> kron_matvec_oracle(const DenseMatrix& u, const DenseMatrix& v,
                                       std::span<const double> g);

/// Lower-triangular Cholesky factor L with L L^T = x.
///
/// Only the lower triangle of `x` is read. Throws NumericError carrying the
/// zero-based index of the first non-positive pivot.
DenseMatrix cholesky_lower(const DenseMatrix& x);

/// (x + epsilon^damping_exponent * I)^{-1} for symmetric PSD x.
///
/// The damping is added before a Cholesky factorization; the returned
/// matrix is exactly symmetric. With the default exponent the damping term
/// is epsilon^{-1/2}.
DenseMatrix damped_spd_inverse(const DenseMatrix& x, double epsilon,
                               double damping_exponent = -0.5);

}  // namespace ngcn
