#pragma once

// Limit constants of finite-section determinants for A = e^{A_1}...e^{A_r}:
// the growth constant G = exp(M(a)), a = D(A_1 + ... + A_r), and the two
// operator-determinant constants Theta_1(tau), Theta_2(tau), evaluated on a
// ladder of truncations.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apdet/apop.hpp"
#include "apdet/fractal.hpp"
#include "apdet/linalg.hpp"

namespace apdet {

struct ExpFactorization {
  std::vector<APOperator> factors;
  APOperator product;  // e^{A_1} ... e^{A_r}
  APOperator inverse;  // e^{-A_r} ... e^{-A_1}
  APSeq diag_sum;      // D(A_1 + ... + A_r)
  double tol = 0.0;
  double budget_used = 0.0;
  /// op_norm(product * inverse - I).
  double inverse_defect = 0.0;

  /// Computes the cached product and inverse with op_exp / op_mul.
  static ExpFactorization build(std::vector<APOperator> factors, double tol = 1e-13,
                                double budget_cap = kDefaultBudgetCap);
};

struct Growth {
  cplx G;
  cplx log_G;  // M(a) itself, not a principal logarithm of G
};

Growth growth_G(const ExpFactorization& F);

struct LadderOptions {
  double tol = 1e-6;
  std::int64_t start = 64;
  std::int64_t cap = 1024;
  /// Factor exponentials are formed at pad_factor * M and the leading M x M
  /// block of the product enters the determinant.
  std::int64_t pad_factor = 2;
  double exp_tol = 1e-15;
  /// Evaluate even when a support frequency is numerically an integer.
  bool force = false;
};

struct LadderResult {
  cplx value{};
  std::vector<std::int64_t> sizes;
  std::vector<cplx> values;
  std::vector<double> deltas;  // |values[k] - values[k-1]|, k >= 1
  bool converged = false;
};

/// exp(F_a(tau)) det(T(U^tau A) e^{-T(U^tau A_r)} ... e^{-T(U^tau A_1)}).
LadderResult theta1(const ExpFactorization& F, const Character& tau, const LadderOptions& opts = {});

/// exp(-F_a(tau)) det(e^{T(U^tau A_1)} ... e^{T(U^tau A_r)} T(U^tau A^{-1})).
LadderResult theta2(const ExpFactorization& F, const Character& tau, const LadderOptions& opts = {});

/// Theta_2 through the reflected operators:
/// exp(-F_a(tau)) det(T(J U^tau A J) e^{-T(J U^tau A_r J)} ... e^{-T(J U^tau A_1 J)}).
LadderResult theta2_tilde(const ExpFactorization& F, const Character& tau,
                          const LadderOptions& opts = {});

/// Smallest ||xi(g)|| over nonzero support elements of D(A_1+...+A_r);
/// infinity when there are none.
double support_small_denominator(const ExpFactorization& F);

enum class Normalization { g_power, exp_trace };

struct Window {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
};

struct FlowRow {
  std::size_t n = 0;
  std::int64_t n1 = 0, n2 = 0, gap = 0;
  LogDet logdet;
  cplx log_norm{};
  cplx ratio{};
  std::optional<cplx> theta_prod;
  double residual = 0.0;
  std::string flag;  // "" or "singular"
};

/// det(P_{n1,n2} A P_{n1,n2}) divided by G^{n2-n1} (g_power) or by
/// exp(trace of the section of A_1+...+A_r) (exp_trace), row by row.
std::vector<FlowRow> ratio_flow(const ExpFactorization& F, const std::vector<Window>& windows,
                                Normalization norm, std::optional<cplx> theta_prod = std::nullopt,
                                unsigned threads = 1);

/// Windows [h1(n), h2(n)) along two fractal sequences; with compute_theta the
/// residual is taken against Theta_1(tau_1) Theta_2(tau_2) at their characters.
std::vector<FlowRow> ratio_flow(const ExpFactorization& F, const FractalSeq& h1, const FractalSeq& h2,
                                Normalization norm, bool compute_theta,
                                const LadderOptions& opts = {}, unsigned threads = 1);

struct SweepRow {
  std::int64_t n1 = 0, n2 = 0, gap = 0;
  LogDet logdet;
  cplx ratio{};
  cplx theta_prod{};
  double residual = 0.0;
  std::string flag;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::int64_t, double>> max_residual_by_gap;
};

/// Residuals ratio - Theta_1(tau_{n1}) Theta_2(tau_{n2}) over every
/// (n1, n1 + gap) with tau_m = char_of_shift(m).
SweepResult uniform_sweep(const ExpFactorization& F, const std::vector<std::int64_t>& gaps,
                          const std::vector<std::int64_t>& offsets, const LadderOptions& opts = {},
                          unsigned threads = 1);

/// Gaps min_gap, 2 min_gap, ... up to max_gap.
SweepResult uniform_sweep(const ExpFactorization& F, std::int64_t min_gap, std::int64_t max_gap,
                          const std::vector<std::int64_t>& offsets, const LadderOptions& opts = {},
                          unsigned threads = 1);

}  // namespace apdet
