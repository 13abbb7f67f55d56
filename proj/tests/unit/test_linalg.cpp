#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "apdet/errors.hpp"
#include "apdet/linalg.hpp"
#include "doctest.h"

using namespace apdet;

namespace {

// Laplace expansion along the first row.
cplx cofactor_det(const std::vector<std::vector<cplx>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  cplx s{};
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<cplx>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<cplx> row;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != c) row.push_back(m[r][k]);
      }
      minor.push_back(row);
    }
    s += (c % 2 == 0 ? 1.0 : -1.0) * m[0][c] * cofactor_det(minor);
  }
  return s;
}

}  // namespace

TEST_CASE("LU determinant against cofactor expansion") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int dim = 1; dim <= 6; ++dim) {
    DenseMatrix m(dim);
    std::vector<std::vector<cplx>> v(dim, std::vector<cplx>(dim));
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) v[i][j] = m(i, j) = {n(rng), n(rng)};
    }
    const cplx want = cofactor_det(v);
    CHECK(std::abs(lu_det(m) - want) < 1e-12 * (1.0 + std::abs(want)));
    CHECK(std::abs(lu_logdet(m).value() - want) < 1e-11 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("singular matrices give exact zero") {
  DenseMatrix m(3);
  m(0, 0) = 1.0;
  m(1, 1) = 2.0;
  CHECK(lu_det(m) == cplx{});
  CHECK(lu_logdet(m).zero);
  CHECK(lu_logdet(m).value() == cplx{});
}

TEST_CASE("log determinant survives overflow of the plain product") {
  DenseMatrix m = DenseMatrix::identity(400) * cplx{-10.0, 0.0};
  const LogDet d = lu_logdet(m);
  CHECK(d.log.real() == doctest::Approx(400.0 * std::log(10.0)));
  CHECK(std::cos(d.log.imag()) == doctest::Approx(1.0));  // (-1)^400
}

TEST_CASE("matrix exponential of a rotation generator") {
  DenseMatrix m(2);
  m(0, 1) = -std::numbers::pi / 2;
  m(1, 0) = std::numbers::pi / 2;
  const DenseMatrix e = mat_exp(m, 1e-16);
  CHECK(std::abs(e(0, 1) + 1.0) < 1e-14);
  CHECK(std::abs(e(1, 0) - 1.0) < 1e-14);
  CHECK(std::abs(e(0, 0)) < 1e-14);
  const DenseMatrix big = mat_exp(DenseMatrix::identity(3) * cplx{20.0, 1.0}, 1e-15);
  CHECK(std::abs(big(2, 2) / std::exp(cplx{20.0, 1.0}) - 1.0) < 1e-12);
  CHECK(std::abs(mat_trace(DenseMatrix::identity(5)) - 5.0) == 0.0);
}

TEST_CASE("sections, Toeplitz and Hankel compressions") {
  const FreqGroup g = FreqGroup::trivial();
  APOperator A(g);
  A.add(1, g.zero(), 2.0);   // entry (j, j-1)
  A.add(-2, g.zero(), 3.0);  // entry (j, j+2)
  const DenseMatrix T = toeplitz_comp(A, 4);
  CHECK(T(1, 0) == cplx(2.0));
  CHECK(T(0, 2) == cplx(3.0));
  CHECK(T(0, 0) == cplx(0.0));
  // H(A)_{j,k} = a_{j,-k-1}: offset j+k+1
  const DenseMatrix H = hankel_comp(A, 3);
  CHECK(H(0, 0) == cplx(2.0));
  CHECK(H(1, 1) == cplx(0.0));
  CHECK(H(0, 1) == cplx(0.0));
  CHECK(materialize(A, 5, 8).dim() == 3);
  CHECK_THROWS_AS(materialize(A, 5, 5), DomainError);
}

TEST_CASE("size cap from the environment") {
  ::setenv("APDET_SIZE_CAP", "16", 1);
  CHECK(size_cap() == 16);
  const APOperator I = APOperator::identity(FreqGroup::trivial());
  CHECK_THROWS_AS(materialize(I, 0, 17), CapExceeded);
  ::unsetenv("APDET_SIZE_CAP");
  CHECK(size_cap() == kDefaultSizeCap);
}
