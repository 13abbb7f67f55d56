#include <cmath>
#include <numbers>
#include <random>

#include "apdet/apop.hpp"
#include "apdet/errors.hpp"
#include "apdet/linalg.hpp"
#include "doctest.h"

using namespace apdet;

namespace {
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

APOperator random_op(std::mt19937_64& rng, const FreqGroup& g, int terms, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::uniform_int_distribution<std::int64_t> k(-2, 2);
  APOperator A(g, WeightSpec::power(1.0));
  for (int i = 0; i < terms; ++i) A.add(k(rng), g.element({k(rng)}, 0), {n(rng), n(rng)});
  return A;
}

double op_dist(const APOperator& a, const APOperator& b) { return op_norm(a - b); }
}  // namespace

TEST_CASE("twisted product of monomials") {
  const FreqGroup g({kGolden}, 1);
  ErrorBudget budget;
  // (e_xi U_2)(e_eta U_1) = e^{-2 pi i 2 eta} e_{xi+eta} U_3
  const APOperator A = APOperator::from_diagonal(APSeq::single(g, g.element({1}), 1.0), 2);
  const APOperator B = APOperator::from_diagonal(APSeq::single(g, g.element({2}), 1.0), 1);
  const APOperator P = op_mul(A, B, budget);
  REQUIRE(P.size() == 1);
  const cplx want = std::polar(1.0, -2.0 * std::numbers::pi * 2.0 * 2.0 * kGolden);
  CHECK(std::abs(P.coeff(3, g.element({3})) - want) < 1e-12);
}

TEST_CASE("product matches matrix multiplication of sections") {
  std::mt19937_64 rng(3);
  const FreqGroup g({kGolden}, 1);
  const APOperator A = random_op(rng, g, 6, 0.4), B = random_op(rng, g, 6, 0.4);
  ErrorBudget budget;
  const APOperator P = op_mul(A, B, budget, 0.0);
  const DenseMatrix full = materialize(A, -10, 40) * materialize(B, -10, 40);
  const DenseMatrix want = materialize(P, -5, 35);
  double worst = 0.0;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) worst = std::max(worst, std::abs(full(i + 5, j + 5) - want(i, j)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("associativity, submultiplicativity and the character homomorphism") {
  std::mt19937_64 rng(11);
  const FreqGroup g({kGolden}, 1);
  ErrorBudget budget(1.0);
  for (int t = 0; t < 5; ++t) {
    const APOperator A = random_op(rng, g, 5, 0.3), B = random_op(rng, g, 5, 0.3), C = random_op(rng, g, 5, 0.3);
    const APOperator l = op_mul(op_mul(A, B, budget, 0.0), C, budget, 0.0);
    const APOperator r = op_mul(A, op_mul(B, C, budget, 0.0), budget, 0.0);
    CHECK(op_dist(l, r) < 1e-13);
    CHECK(op_norm(op_mul(A, B, budget, 0.0)) <= op_norm(A) * op_norm(B) * (1.0 + 1e-12));
    const Character tau = char_of_shift(g, 7);
    CHECK(op_dist(apply_char(op_mul(A, B, budget, 0.0), tau),
                  op_mul(apply_char(A, tau), apply_char(B, tau), budget, 0.0)) < 1e-13);
    CHECK(op_dist(conjugate_shift(A, 7), apply_char(A, tau)) < 1e-12);
  }
}

TEST_CASE("conjugation shifts the window and tilde reflects it") {
  std::mt19937_64 rng(5);
  const FreqGroup g({kGolden}, 2);
  APOperator A(g);
  A.add(1, g.element({1}, 1), {0.5, 0.25});
  A.add(-2, g.element({-1}, 0), 0.75);
  A.add(0, g.zero(), 2.0);
  const DenseMatrix a = materialize(conjugate_shift(A, 9), 0, 12), b = materialize(A, 9, 21);
  CHECK((a - b).max_abs() < 1e-12);
  // (J A J)_{j,k} = A_{-j-1,-k-1}
  const DenseMatrix t = materialize(op_tilde(A), 0, 8), m = materialize(A, -8, 0);
  double worst = 0.0;
  for (int j = 0; j < 8; ++j) {
    for (int k = 0; k < 8; ++k) worst = std::max(worst, std::abs(t(j, k) - m(7 - j, 7 - k)));
  }
  CHECK(worst < 1e-12);
  CHECK(op_dist(op_tilde(op_tilde(A)), A) < 1e-15);
}

TEST_CASE("exponential and logarithm series") {
  const FreqGroup g({kGolden}, 1);
  ErrorBudget budget;
  // a scalar multiple of I exponentiates coefficientwise
  APOperator X(g);
  X.add(0, g.zero(), 0.3);
  const APOperator E = op_exp(X, 1e-14, budget);
  CHECK(std::abs(E.coeff(0, g.zero()) - std::exp(0.3)) < 1e-14);

  std::mt19937_64 rng(9);
  const APOperator A = random_op(rng, g, 5, 0.05);
  const APOperator EA = op_exp(A, 1e-13, budget), EmA = op_exp(-A, 1e-13, budget);
  CHECK(op_dist(op_mul(EA, EmA, budget), A.identity_like()) < 1e-12);

  const cplx lambda = 4.0;
  const APOperator L = log_shifted(A, lambda, 1e-14, budget);
  const APOperator back = op_exp(L, 1e-14, budget);
  CHECK(op_dist(back, A.identity_like() - A * (1.0 / lambda)) < 1e-12);
  CHECK_THROWS_AS(log_shifted(A, 0.5 * op_norm(A), 1e-12, budget), DomainError);
}

TEST_CASE("caps and budgets") {
  const FreqGroup g({kGolden}, 1);
  SupportCaps caps;
  caps.max_offset = 3;
  APOperator A(g, {}, {}, caps);
  A.add(2, g.zero(), 1.0);
  ErrorBudget budget;
  CHECK_THROWS_AS(op_mul(A, A, budget), CapExceeded);
  CHECK_THROWS_AS(A.add(4, g.zero(), 1.0), CapExceeded);
  ErrorBudget tiny(1e-20);
  APOperator B(g);
  B.add(0, g.zero(), 1.0);
  B.add(1, g.element({1}), 1e-16);
  CHECK_THROWS_AS(prune(B, 1e-14, tiny), BudgetExhausted);
  CHECK_THROWS_AS(A.add(0, g.zero(), std::nan("")), NonFiniteError);
  CHECK(diagonal_weight({0.5, 0.5}, -3) == doctest::Approx(2.0));
}
