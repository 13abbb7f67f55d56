#include "apdet/limits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "apdet/errors.hpp"
#include "apdet/parallel.hpp"

namespace apdet {

namespace {

enum class ThetaForm { first, second, second_tilde };

// Product of dense factors whose leading block approximates the operator
// whose determinant defines the constant.
DenseMatrix theta_matrix(const ExpFactorization& F, const Character& tau, ThetaForm form,
                         std::int64_t size, double exp_tol) {
  const auto T = [&](const APOperator& X) { return toeplitz_comp(X, size); };
  const auto U = [&](const APOperator& X) { return apply_char(X, tau); };
  switch (form) {
    case ThetaForm::first: {
      DenseMatrix P = T(U(F.product));
      for (auto it = F.factors.rbegin(); it != F.factors.rend(); ++it) {
        P = P * mat_exp(T(U(*it)) * cplx{-1.0, 0.0}, exp_tol);
      }
      return P;
    }
    case ThetaForm::second: {
      DenseMatrix P = DenseMatrix::identity(size);
      for (const auto& f : F.factors) P = P * mat_exp(T(U(f)), exp_tol);
      return P * T(U(F.inverse));
    }
    case ThetaForm::second_tilde: {
      DenseMatrix P = T(op_tilde(U(F.product)));
      for (auto it = F.factors.rbegin(); it != F.factors.rend(); ++it) {
        P = P * mat_exp(T(op_tilde(U(*it))) * cplx{-1.0, 0.0}, exp_tol);
      }
      return P;
    }
  }
  throw DomainError("unknown theta form");
}

LadderResult run_ladder(const ExpFactorization& F, const Character& tau, ThetaForm form,
                        const LadderOptions& opts) {
  if (!(opts.tol > 0.0) || opts.start < 1 || opts.cap < opts.start || opts.pad_factor < 1) {
    throw DomainError("theta ladder: invalid options");
  }
  check_character(F.product.group(), tau);
  if (!opts.force && support_small_denominator(F) < 1e-14) {
    throw DomainError("theta: a support frequency is numerically an integer (compatibility audit ~ 0); "
                      "rerun with force to evaluate anyway");
  }
  const cplx f = f_tau(F.diag_sum, tau);
  const cplx prefactor = std::exp(form == ThetaForm::first ? f : -f);

  LadderResult r;
  for (std::int64_t M = opts.start; M <= opts.cap; M *= 2) {
    const DenseMatrix P = theta_matrix(F, tau, form, opts.pad_factor * M, opts.exp_tol);
    const cplx v = prefactor * lu_det(P.leading(M));
    r.sizes.push_back(M);
    r.values.push_back(v);
    r.value = v;
    if (r.values.size() >= 2) {
      const double d = std::abs(v - r.values[r.values.size() - 2]);
      r.deltas.push_back(d);
      if (d < opts.tol) {
        r.converged = true;
        break;
      }
    }
  }
  return r;
}

// Characters agree exactly (as stored values); used to share ladder results.
struct CharacterKey {
  std::vector<std::pair<double, double>> u;
  std::int64_t c;
  auto operator<=>(const CharacterKey&) const = default;
};

CharacterKey key_of(const Character& t) {
  CharacterKey k{{}, t.c};
  for (const auto& v : t.u) k.u.emplace_back(v.real(), v.imag());
  return k;
}

}  // namespace

ExpFactorization ExpFactorization::build(std::vector<APOperator> factors, double tol,
                                         double budget_cap) {
  if (factors.empty()) throw DomainError("ExpFactorization: needs at least one factor");
  for (const auto& f : factors) {
    if (!f.same_algebra(factors.front())) throw DimensionError("ExpFactorization: factors from different algebras");
  }
  ErrorBudget budget(budget_cap);
  ExpFactorization F;
  F.tol = tol;
  F.product = factors.front().identity_like();
  F.inverse = F.product;
  APOperator sum = factors.front().like();
  for (const auto& f : factors) {
    F.product = op_mul(F.product, op_exp(f, tol, budget), budget);
    sum = sum + f;
  }
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
    F.inverse = op_mul(F.inverse, op_exp(-*it, tol, budget), budget);
  }
  F.diag_sum = diagonal(sum, 0);
  ErrorBudget check(std::numeric_limits<double>::infinity());
  F.inverse_defect = op_norm(op_mul(F.product, F.inverse, check, 0.0) - F.product.identity_like());
  F.budget_used = budget.accumulated();
  F.factors = std::move(factors);
  return F;
}

Growth growth_G(const ExpFactorization& F) {
  const cplx m = seq_mean(F.diag_sum);
  return {std::exp(m), m};
}

double support_small_denominator(const ExpFactorization& F) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [g, c] : F.diag_sum.coeffs()) {
    if (g.is_zero()) continue;
    best = std::min(best, torus_distance(eval_frequency(F.diag_sum.group(), g)));
  }
  return best;
}

LadderResult theta1(const ExpFactorization& F, const Character& tau, const LadderOptions& opts) {
  return run_ladder(F, tau, ThetaForm::first, opts);
}

LadderResult theta2(const ExpFactorization& F, const Character& tau, const LadderOptions& opts) {
  return run_ladder(F, tau, ThetaForm::second, opts);
}

LadderResult theta2_tilde(const ExpFactorization& F, const Character& tau, const LadderOptions& opts) {
  return run_ladder(F, tau, ThetaForm::second_tilde, opts);
}

std::vector<FlowRow> ratio_flow(const ExpFactorization& F, const std::vector<Window>& windows,
                                Normalization norm, std::optional<cplx> theta_prod, unsigned threads) {
  const Growth g = growth_G(F);
  for (const auto& w : windows) {
    if (w.n2 <= w.n1) throw DomainError("ratio_flow: requires h2(n) > h1(n)");
    if (w.n2 - w.n1 > size_cap()) throw CapExceeded("ratio_flow: window exceeds size cap");
  }
  std::vector<FlowRow> rows(windows.size());
  parallel_for(windows.size(), threads, [&](std::size_t i) {
    const Window& w = windows[i];
    FlowRow& row = rows[i];
    row.n = i;
    row.n1 = w.n1;
    row.n2 = w.n2;
    row.gap = w.n2 - w.n1;
    row.logdet = lu_logdet(materialize(F.product, w.n1, w.n2));
    row.log_norm = norm == Normalization::g_power ? static_cast<double>(row.gap) * g.log_G
                                                  : window_sum(F.diag_sum, w.n1, w.n2);
    if (row.logdet.zero) {
      row.ratio = 0.0;
      row.flag = "singular";
    } else {
      row.ratio = std::exp(row.logdet.log - row.log_norm);
    }
    row.theta_prod = theta_prod;
    if (theta_prod) row.residual = std::abs(row.ratio - *theta_prod);
  });
  return rows;
}

std::vector<FlowRow> ratio_flow(const ExpFactorization& F, const FractalSeq& h1, const FractalSeq& h2,
                                Normalization norm, bool compute_theta, const LadderOptions& opts,
                                unsigned threads) {
  const std::size_t n = std::min(h1.values.size(), h2.values.size());
  std::vector<Window> windows;
  for (std::size_t i = 0; i < n; ++i) windows.push_back({h1.values[i], h2.values[i]});
  std::optional<cplx> prod;
  if (compute_theta) {
    const LadderResult t1 = theta1(F, h1.tau, opts);
    const LadderResult t2 = theta2(F, h2.tau, opts);
    prod = t1.value * t2.value;
    // exp-trace rows converge to det(B_1) det(B_2), i.e. without the F_a factors
    if (norm == Normalization::exp_trace) {
      *prod *= std::exp(-(f_tau(F.diag_sum, h1.tau) - f_tau(F.diag_sum, h2.tau)));
    }
  }
  return ratio_flow(F, windows, norm, prod, threads);
}

SweepResult uniform_sweep(const ExpFactorization& F, const std::vector<std::int64_t>& gaps,
                          const std::vector<std::int64_t>& offsets, const LadderOptions& opts,
                          unsigned threads) {
  const FreqGroup& group = F.product.group();
  std::map<CharacterKey, LadderResult> t1_cache, t2_cache;
  auto theta_at = [&](std::map<CharacterKey, LadderResult>& cache, std::int64_t m, bool first) {
    const Character tau = char_of_shift(group, m);
    const CharacterKey key = key_of(tau);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, first ? theta1(F, tau, opts) : theta2(F, tau, opts)).first;
    return it->second;
  };

  std::vector<Window> windows;
  std::vector<cplx> prods;
  std::vector<std::string> flags;
  for (auto gap : gaps) {
    if (gap < 1) throw DomainError("uniform_sweep: gaps must be >= 1");
    if (gap > size_cap()) throw CapExceeded("uniform_sweep: gap exceeds size cap");
    for (auto n1 : offsets) {
      windows.push_back({n1, n1 + gap});
      const LadderResult a = theta_at(t1_cache, n1, true);
      const LadderResult b = theta_at(t2_cache, n1 + gap, false);
      prods.push_back(a.value * b.value);
      flags.push_back(a.converged && b.converged ? "" : "ladder");
    }
  }
  const auto flow = ratio_flow(F, windows, Normalization::g_power, std::nullopt, threads);
  SweepResult out;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    SweepRow row;
    row.n1 = flow[i].n1;
    row.n2 = flow[i].n2;
    row.gap = flow[i].gap;
    row.logdet = flow[i].logdet;
    row.ratio = flow[i].ratio;
    row.theta_prod = prods[i];
    row.residual = std::abs(row.ratio - row.theta_prod);
    row.flag = flow[i].flag.empty() ? flags[i] : flow[i].flag;
    if (out.max_residual_by_gap.empty() || out.max_residual_by_gap.back().first != row.gap) {
      out.max_residual_by_gap.emplace_back(row.gap, 0.0);
    }
    out.max_residual_by_gap.back().second = std::max(out.max_residual_by_gap.back().second, row.residual);
    out.rows.push_back(std::move(row));
  }
  return out;
}

SweepResult uniform_sweep(const ExpFactorization& F, std::int64_t min_gap, std::int64_t max_gap,
                          const std::vector<std::int64_t>& offsets, const LadderOptions& opts,
                          unsigned threads) {
  if (min_gap < 1 || max_gap < min_gap) throw DomainError("uniform_sweep: bad gap range");
  std::vector<std::int64_t> gaps;
  for (std::int64_t g = min_gap; g <= max_gap; g *= 2) gaps.push_back(g);
  return uniform_sweep(F, gaps, offsets, opts, threads);
}

}  // namespace apdet
