#include <cmath>

#include "apdet/errors.hpp"
#include "apdet/limits.hpp"
#include "apdet/models.hpp"
#include "doctest.h"

using namespace apdet;

namespace {
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
}

TEST_CASE("constant symbol: G is the constant and the constants are 1") {
  APOperator X = APOperator::identity(FreqGroup::trivial()) * cplx{std::log(3.0), 0.0};
  const ExpFactorization F = ExpFactorization::build({X});
  CHECK(std::abs(growth_G(F).G - 3.0) < 1e-12);
  const Character t = Character::trivial(F.product.group());
  CHECK(std::abs(theta1(F, t).value - 1.0) < 1e-10);
  CHECK(std::abs(theta2(F, t).value - 1.0) < 1e-10);
  const auto rows = ratio_flow(F, {{0, 10}, {3, 20}}, Normalization::g_power);
  CHECK(std::abs(rows[1].ratio - 1.0) < 1e-10);
}

TEST_CASE("tridiagonal operator: ratio flow against the determinant recurrence") {
  // D_n = -5 D_{n-1} - D_{n-2}; D_n / r1^n -> (D_1 - r2)/(r1 - r2)
  const double r1 = -(5.0 + std::sqrt(21.0)) / 2.0, r2 = -(5.0 - std::sqrt(21.0)) / 2.0;
  const double limit = (-5.0 - r2) / (r1 - r2);
  const auto sym = MatrixSymbol::scalar({{-1, 1.0}, {0, -5.0}, {1, 1.0}});
  const auto sl = scalar_log_factorize(sym, 48);
  const ExpFactorization& F = sl.factorization;
  CHECK(std::abs(growth_G(F).G - r1) < 1e-9);
  const auto rows = ratio_flow(F, {{0, 60}}, Normalization::g_power);
  CHECK(std::abs(rows[0].ratio - limit) < 1e-9);
  const Character t = Character::trivial(F.product.group());
  const cplx prod = theta1(F, t).value * theta2(F, t).value;
  CHECK(std::abs(prod - limit) < 1e-8);
  const auto s = uniform_sweep(F, std::vector<std::int64_t>{16, 32}, {0, 1, 2});
  REQUIRE(s.max_residual_by_gap.size() == 2);
  CHECK(s.max_residual_by_gap[1].second < 1e-8);
}

TEST_CASE("exp-trace normalization differs by the F_a factors") {
  const APOperator M = build_mathieu(1.0, kGolden, 0.1);
  const auto sf = factorize_shifted_mathieu(M, 5.0);
  const ExpFactorization& F = sf.factorization;
  const auto g = ratio_flow(F, {{3, 40}}, Normalization::g_power);
  const auto e = ratio_flow(F, {{3, 40}}, Normalization::exp_trace);
  const cplx shift = std::exp(window_sum(F.diag_sum, 3, 40) - 37.0 * growth_G(F).log_G);
  CHECK(std::abs(g[0].ratio - e[0].ratio * shift) < 1e-10 * std::abs(g[0].ratio));
}

TEST_CASE("ladder refuses near-integer frequencies unless forced") {
  const FreqGroup g({1e-16}, 1);
  APOperator X(g);
  X.add(0, g.generator(0), 0.1);
  X.add(1, g.zero(), 0.1);
  const ExpFactorization F = ExpFactorization::build({X});
  CHECK(support_small_denominator(F) < 1e-14);
  CHECK_THROWS_AS(theta1(F, Character::trivial(g)), DomainError);
  LadderOptions o;
  o.force = true;
  o.cap = 128;
  CHECK_NOTHROW(theta1(F, Character::trivial(g), o));
}

TEST_CASE("singular sections are flagged") {
  APOperator S(FreqGroup::trivial());
  S.add(1, S.group().zero(), 1.0);
  ExpFactorization F;
  F.product = S;
  F.diag_sum = APSeq(S.group());
  const auto rows = ratio_flow(F, {{0, 5}}, Normalization::g_power);
  CHECK(rows[0].flag == "singular");
  CHECK(rows[0].ratio == cplx{});
  CHECK_THROWS_AS(ratio_flow(F, {{4, 4}}, Normalization::g_power), DomainError);
}
