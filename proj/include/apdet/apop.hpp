#pragma once

// Band-dominated operators A = sum_k (a^{(k)} I) U_k with almost periodic
// diagonals, stored as sparse coefficients over (band offset, group element).
// U_k acts on l^2(Z) by (U_k x)_j = x_{j-k}, so the matrix entry (j, k) of A
// is a^{(j-k)}(j).

#include <cstdint>
#include <map>
#include <string>

#include "apdet/apseq.hpp"
#include "apdet/group.hpp"

namespace apdet {

inline constexpr double kDefaultPruneEps = 1e-14;
inline constexpr double kDefaultBudgetCap = 1e-9;

/// Exponents of the diagonal weight alpha(k) = (1+k)^first for k >= 0 and
/// (1+|k|)^second for k < 0.
struct AlphaPair {
  double first = 0.5;
  double second = 0.5;

  bool operator==(const AlphaPair&) const = default;
};

double diagonal_weight(const AlphaPair& alpha, std::int64_t k);

struct SupportCaps {
  std::int64_t max_offset = 512;
  std::int64_t max_alpha = 512;

  bool operator==(const SupportCaps&) const = default;
};

struct OpKey {
  std::int64_t offset = 0;
  GroupElement elem;

  auto operator<=>(const OpKey&) const = default;
  bool operator==(const OpKey&) const = default;
};

/// Total weighted-norm mass discarded by pruning during one computation.
class ErrorBudget {
 public:
  explicit ErrorBudget(double cap = kDefaultBudgetCap) : cap_(cap) {}

  double accumulated() const { return accumulated_; }
  double cap() const { return cap_; }
  double remaining() const { return cap_ - accumulated_; }

  /// Throws BudgetExhausted when the cap is crossed.
  void charge(double mass);

 private:
  double accumulated_ = 0.0;
  double cap_;
};

class APOperator {
 public:
  using Terms = std::map<OpKey, cplx>;

  APOperator() = default;
  explicit APOperator(FreqGroup group, WeightSpec weight = {}, AlphaPair alpha = {},
                      SupportCaps caps = {});

  static APOperator identity(FreqGroup group, WeightSpec weight = {}, AlphaPair alpha = {});
  /// U_k.
  static APOperator shift(FreqGroup group, std::int64_t k, WeightSpec weight = {},
                          AlphaPair alpha = {});
  /// (a I) U_k.
  static APOperator from_diagonal(const APSeq& a, std::int64_t k, WeightSpec weight = {},
                                  AlphaPair alpha = {});

  /// An empty operator in the same algebra.
  APOperator like() const { return APOperator(group_, weight_, alpha_, caps_); }
  APOperator identity_like() const;

  const FreqGroup& group() const { return group_; }
  const WeightSpec& weight() const { return weight_; }
  const AlphaPair& alpha() const { return alpha_; }
  const SupportCaps& caps() const { return caps_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Largest |k| over stored terms.
  std::int64_t bandwidth() const;

  cplx coeff(std::int64_t k, const GroupElement& g) const;
  void add(std::int64_t k, const GroupElement& g, cplx c);

  bool same_algebra(const APOperator& other) const;

  APOperator operator+(const APOperator& other) const;
  APOperator operator-(const APOperator& other) const;
  APOperator operator-() const;
  APOperator operator*(cplx s) const;

  bool operator==(const APOperator& other) const {
    return same_algebra(other) && terms_ == other.terms_;
  }

 private:
  FreqGroup group_;
  WeightSpec weight_;
  AlphaPair alpha_;
  SupportCaps caps_;
  Terms terms_;
};

/// Twisted convolution product; the output is pruned at eps and the removed
/// mass is charged to the budget.
APOperator op_mul(const APOperator& A, const APOperator& B, ErrorBudget& budget,
                  double eps = kDefaultPruneEps);

/// sum over terms of alpha(k) beta(g) |c|.
double op_norm(const APOperator& A);

/// U^tau: multiplies each coefficient by tau(g).
APOperator apply_char(const APOperator& A, const Character& tau);

/// U_{-m} A U_m.
APOperator conjugate_shift(const APOperator& A, std::int64_t m);

/// J A J with (J x)_j = x_{-j-1}.
APOperator op_tilde(const APOperator& A);

/// Truncated Taylor series with a tail bound below tol in the weighted norm.
APOperator op_exp(const APOperator& A, double tol, ErrorBudget& budget,
                  double eps = kDefaultPruneEps);

/// log(I - A/lambda) = -sum_m (A/lambda)^m / m; requires op_norm(A) < |lambda|.
APOperator log_shifted(const APOperator& A, cplx lambda, double tol, ErrorBudget& budget,
                       double eps = kDefaultPruneEps);

/// D_k(A), the diagonal at band offset k.
APSeq diagonal(const APOperator& A, std::int64_t k);

APOperator prune(const APOperator& A, double eps, ErrorBudget& budget);

}  // namespace apdet
