#pragma once

// Concrete operator families: block Laurent operators from matrix symbols
// and the shifted almost Mathieu operator.

#include <Eigen/Dense>
#include <cstdint>
#include <map>

#include "apdet/apop.hpp"
#include "apdet/limits.hpp"

namespace apdet {

using CMatrix = Eigen::MatrixXcd;

/// a(t) = sum_k a_k t^k with N x N coefficients and finite support.
struct MatrixSymbol {
  std::int64_t N = 1;
  std::map<std::int64_t, CMatrix> fourier;

  static MatrixSymbol scalar(const std::map<std::int64_t, cplx>& coeffs);

  /// Largest |k| in the support.
  std::int64_t band() const;
  /// Throws DimensionError on a coefficient of the wrong shape.
  void check() const;
};

CMatrix symbol_eval(const MatrixSymbol& a, cplx t);

inline constexpr int kDefaultCircleSamples = 4096;

/// Degree of t -> det a(t); samples are doubled until the count is stable.
std::int64_t winding_number(const MatrixSymbol& a, int samples = kDefaultCircleSamples);

/// exp((1/(2 pi N)) int log det a(e^{ix}) dx) with the logarithm tracked
/// continuously from its principal value at x = 0.
cplx log_det_G(const MatrixSymbol& a, int samples = kDefaultCircleSamples);

struct ScalarLogFactorization {
  ExpFactorization factorization;
  std::map<std::int64_t, cplx> log_coeffs;  // b_k, |k| <= K
  double residual = 0.0;                    // max |e^{b(t)} - a(t)| on the check grid
};

/// b = truncated Fourier series of the continuous log of a scalar symbol;
/// the factorization is the single factor L(b) over the trivial group.
ScalarLogFactorization scalar_log_factorize(const MatrixSymbol& a, int K, double tol = 1e-13);

/// Scalar operator with entries (j,k) -> (a_{J-K})_{s,t'}, j = NJ+s,
/// k = NK+t', over the group gr{[1/N]}.
APOperator block_to_apop(const MatrixSymbol& a, WeightSpec weight = {}, AlphaPair alpha = {},
                         SupportCaps caps = {});

/// U_1 + U_{-1} + b cos(2 pi (xi n + delta)) over gr{[xi]}, weight power(1).
APOperator build_mathieu(double b, double xi, double delta, AlphaPair alpha = {});

struct ShiftedFactorization {
  ExpFactorization factorization;  // A_1 = Log(-lambda) I, A_2 = log(I - M/lambda)
  double defect = 0.0;             // op_norm(e^{A_1} e^{A_2} - (M - lambda I))
  double bound = 0.0;
};

/// M - lambda I = e^{Log(-lambda) I} e^{log(I - M/lambda)}; requires
/// op_norm(M) < |lambda|. Log is the principal branch, so lambda > 0 gives
/// Log(-lambda) = log(lambda) + i pi.
ShiftedFactorization factorize_shifted_mathieu(const APOperator& M, cplx lambda, double tol = 1e-13);

}  // namespace apdet
