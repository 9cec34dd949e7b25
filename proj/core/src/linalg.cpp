#include "ngcn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "ngcn/error.hpp"

namespace ngcn {
namespace {

using ColMajorMatrix = Eigen::MatrixXd;

constexpr Eigen::Index kCholeskyBlock = 96;

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                        std::string_view op) {
  if (!a.same_shape(b)) {
    throw UsageError(std::string(op) + ": shape mismatch " + shape_string(a) +
                     " vs " + shape_string(b));
  }
}

// Unblocked factorization of the diagonal block starting at `offset`.
void factor_diagonal_block(Eigen::Ref<ColMajorMatrix> block,
                           Eigen::Index offset) {
  const Eigen::Index n = block.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = block(j, j);
    if (j > 0) pivot -= block.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NumericError("cholesky: non-positive pivot " +
                             std::to_string(pivot) + " at index " +
                             std::to_string(offset + j),
                         offset + j);
    }
    const double ljj = std::sqrt(pivot);
    block(j, j) = ljj;
    if (j + 1 < n) {
      auto below = block.col(j).tail(n - j - 1);
      if (j > 0) {
        below.noalias() -= block.bottomLeftCorner(n - j - 1, j) *
                           block.row(j).head(j).transpose();
      }
      below /= ljj;
    }
  }
}

// Right-looking blocked Cholesky on the lower triangle, in place.
void factor_in_place(ColMajorMatrix& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; k += kCholeskyBlock) {
    const Eigen::Index bs = std::min(kCholeskyBlock, n - k);
    factor_diagonal_block(a.block(k, k, bs, bs), k);
    const Eigen::Index rest = n - k - bs;
    if (rest == 0) break;
    auto l11 = a.block(k, k, bs, bs).triangularView<Eigen::Lower>();
    auto a21 = a.block(k + bs, k, rest, bs);
    l11.transpose().solveInPlace<Eigen::OnTheRight>(a21);
    a.block(k + bs, k + bs, rest, rest)
        .selfadjointView<Eigen::Lower>()
        .rankUpdate(a21, -1.0);
  }
  a.triangularView<Eigen::StrictlyUpper>().setZero();
}

constexpr Eigen::Index kRecursionLeaf = 64;

// L <- L^{-1} for lower-triangular L, recursing on 2x2 blocks:
// [A 0; B C]^{-1} = [A^{-1} 0; -C^{-1} B A^{-1}  C^{-1}].
void invert_lower_in_place(Eigen::Ref<ColMajorMatrix> l) {
  const Eigen::Index n = l.rows();
  if (n <= kRecursionLeaf) {
    ColMajorMatrix inv = ColMajorMatrix::Identity(n, n);
    l.triangularView<Eigen::Lower>().solveInPlace(inv);
    l.triangularView<Eigen::Lower>() = inv;
    return;
  }
  const Eigen::Index h = n / 2;
  auto a = l.topLeftCorner(h, h);
  auto b = l.bottomLeftCorner(n - h, h);
  auto c = l.bottomRightCorner(n - h, n - h);
  invert_lower_in_place(a);
  invert_lower_in_place(c);
  ColMajorMatrix t = b * a.triangularView<Eigen::Lower>();
  b.noalias() = -(c.triangularView<Eigen::Lower>() * t);
}

// Lower triangle of M^T M for lower-triangular M, in place (LAPACK lauum).
void lower_gram_in_place(Eigen::Ref<ColMajorMatrix> m) {
  const Eigen::Index n = m.rows();
  if (n <= kRecursionLeaf) {
    ColMajorMatrix full = m.triangularView<Eigen::Lower>();
    m.triangularView<Eigen::Lower>() = full.transpose() * full;
    return;
  }
  const Eigen::Index h = n / 2;
  auto a = m.topLeftCorner(h, h);
  auto b = m.bottomLeftCorner(n - h, h);
  auto c = m.bottomRightCorner(n - h, n - h);
  // [A 0; B C]^T [A 0; B C] = [A^T A + B^T B, .; C^T B, C^T C]
  lower_gram_in_place(a);
  a.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose());
  ColMajorMatrix t = c.triangularView<Eigen::Lower>().transpose() * b;
  b = t;
  lower_gram_in_place(c);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
  if (data_.size() != rows * cols) {
    throw UsageError("DenseMatrix: data length " +
                     std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw UsageError("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
  DenseMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

DenseMatrix DenseMatrix::from_eigen(const Eigen::Ref<const RowMajorMatrix>& m) {
  DenseMatrix out(static_cast<std::size_t>(m.rows()),
                  static_cast<std::size_t>(m.cols()));
  out.eigen() = m;
  return out;
}

std::string shape_string(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool all_finite(const DenseMatrix& m) noexcept {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

void ensure_finite(const DenseMatrix& m, std::string_view what) {
  if (!all_finite(m)) {
    throw NumericError(std::string(what) + ": non-finite entry in " +
                       shape_string(m) + " matrix");
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw UsageError("matmul: inner dimensions differ, " + shape_string(a) +
                     " x " + shape_string(b));
  }
  DenseMatrix out(a.rows(), b.cols());
  if (a.cols() > 0) out.eigen().noalias() = a.eigen() * b.eigen();
  ensure_finite(out, "matmul");
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw UsageError("matmul_tn: row counts differ, " + shape_string(a) +
                     "^T x " + shape_string(b));
  }
  DenseMatrix out(a.cols(), b.cols());
  if (a.rows() > 0) out.eigen().noalias() = a.eigen().transpose() * b.eigen();
  ensure_finite(out, "matmul_tn");
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw UsageError("matmul_nt: column counts differ, " + shape_string(a) +
                     " x " + shape_string(b) + "^T");
  }
  DenseMatrix out(a.rows(), b.rows());
  if (a.cols() > 0) out.eigen().noalias() = a.eigen() * b.eigen().transpose();
  ensure_finite(out, "matmul_nt");
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  out.eigen() = a.eigen().transpose();
  return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix out = a;
  out.eigen() += b.eigen();
  ensure_finite(out, "add");
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix out = a;
  out.eigen() -= b.eigen();
  ensure_finite(out, "subtract");
  return out;
}

DenseMatrix scale(const DenseMatrix& a, double alpha) {
  DenseMatrix out = a;
  out.eigen() *= alpha;
  ensure_finite(out, "scale");
  return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out = a;
  out.eigen().array() *= b.eigen().array();
  ensure_finite(out, "hadamard");
  return out;
}

void axpy(double alpha, const DenseMatrix& x, DenseMatrix& y) {
  require_same_shape(x, y, "axpy");
  y.eigen() += alpha * x.eigen();
}

double frobenius_norm(const DenseMatrix& a) { return a.eigen().norm(); }

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  if (a.empty()) return 0.0;
  return (a.eigen() - b.eigen()).cwiseAbs().maxCoeff();
}

bool is_symmetric(const DenseMatrix& a, double tolerance) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tolerance) return false;
    }
  }
  return true;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

std::vector<double> kron_matvec_oracle(const DenseMatrix& u, const DenseMatrix& v,
                                       std::span<const double> g) {
  if (g.size() != u.cols() * v.cols()) {
    throw UsageError("kron_matvec_oracle: vector length " + std::to_string(g.size()) +
                     " does not match " + shape_string(u) + " and " + shape_string(v));
  }
  const DenseMatrix k = kron(u, v);
  std::vector<double> out(k.rows(), 0.0);
  for (std::size_t r = 0; r < k.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < k.cols(); ++c) acc += k(r, c) * g[c];
    out[r] = acc;
  }
  return out;
}

DenseMatrix cholesky_lower(const DenseMatrix& x) {
  if (x.rows() != x.cols()) {
    throw UsageError("cholesky_lower: matrix is not square, " +
                     shape_string(x));
  }
  ColMajorMatrix work = x.eigen();
  factor_in_place(work);
  DenseMatrix out(x.rows(), x.cols());
  out.eigen() = work;
  return out;
}

DenseMatrix damped_spd_inverse(const DenseMatrix& x, double epsilon,
                               double damping_exponent) {
  if (x.rows() != x.cols()) {
    throw UsageError("damped_spd_inverse: matrix is not square, " +
                     shape_string(x));
  }
  if (!(epsilon > 0.0)) {
    throw UsageError("damped_spd_inverse: epsilon must be positive, got " +
                     std::to_string(epsilon));
  }
  if (!is_symmetric(x, 1e-10)) {
    throw UsageError("damped_spd_inverse: matrix is not symmetric");
  }
  const double damping = std::pow(epsilon, damping_exponent);
  const auto n = static_cast<Eigen::Index>(x.rows());

  ColMajorMatrix work = x.eigen();
  work.diagonal().array() += damping;
  factor_in_place(work);

  // inv = L^{-T} L^{-1}, formed from the triangular inverse as potri does.
  invert_lower_in_place(work);
  lower_gram_in_place(work);

  DenseMatrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) out(i, j) = out(j, i) = work(i, j);
  }
  ensure_finite(out, "damped_spd_inverse");
  return out;
}

}  // namespace ngcn
