#pragma once

// Dense complex matrices for finite sections and compressions.

#include <Eigen/Dense>
#include <cstdint>

#include "apdet/apop.hpp"

namespace apdet {

inline constexpr std::int64_t kDefaultSizeCap = 4096;

/// Window size cap; APDET_SIZE_CAP in the environment overrides the default.
std::int64_t size_cap();

class DenseMatrix {
 public:
  using Storage = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  DenseMatrix() = default;
  explicit DenseMatrix(std::int64_t dim);
  explicit DenseMatrix(Storage m);

  static DenseMatrix identity(std::int64_t dim);

  std::int64_t dim() const { return m_.rows(); }
  cplx operator()(std::int64_t i, std::int64_t j) const { return m_(i, j); }
  cplx& operator()(std::int64_t i, std::int64_t j) { return m_(i, j); }

  const Storage& storage() const { return m_; }
  Storage& storage() { return m_; }

  DenseMatrix operator*(const DenseMatrix& other) const;
  DenseMatrix operator+(const DenseMatrix& other) const;
  DenseMatrix operator-(const DenseMatrix& other) const;
  DenseMatrix operator*(cplx s) const;

  /// Leading principal submatrix of order size.
  DenseMatrix leading(std::int64_t size) const;

  double max_abs() const;
  double norm1() const;
  bool all_finite() const;

 private:
  Storage m_;
};

/// log|det| and the accumulated argument; value() = exp(log) unless zero.
struct LogDet {
  cplx log{};
  bool zero = false;

  cplx value() const { return zero ? cplx{} : std::exp(log); }
};

/// (P_{n1,n2} A P_{n1,n2}) with entries a_{j,k} = D_{j-k}(A)(j), j,k in [n1,n2).
DenseMatrix materialize(const APOperator& A, std::int64_t n1, std::int64_t n2);

/// Leading M x M block of T(A) = PAP.
DenseMatrix toeplitz_comp(const APOperator& A, std::int64_t M);

/// Leading M x M block of H(A) = PAJP, entries a_{j,-k-1}.
DenseMatrix hankel_comp(const APOperator& A, std::int64_t M);

/// Determinant by LU with partial pivoting; 0 when a pivot column vanishes.
cplx lu_det(const DenseMatrix& m);

/// Log-space determinant for large sections.
LogDet lu_logdet(const DenseMatrix& m);

cplx mat_trace(const DenseMatrix& m);

/// Scaling and squaring with a truncated Taylor series.
DenseMatrix mat_exp(const DenseMatrix& m, double tol);

}  // namespace apdet
