#include "apdet/apop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "apdet/errors.hpp"

namespace apdet {

namespace {

constexpr std::size_t kDenseBoxLimit = std::size_t{1} << 23;
constexpr int kMaxSeriesTerms = 4000;

cplx unit(double turns) { return turn_unit(turns); }

double term_mass(const APOperator& A, const OpKey& key, cplx c) {
  return diagonal_weight(A.alpha(), key.offset) * weight_value(A.weight(), A.group(), key.elem) *
         std::abs(c);
}

// Splits A into a kept part and the removed weighted mass. Terms below eps
// are removed smallest first while the removed total stays within cap.
std::pair<APOperator, double> split_small(const APOperator& A, double eps,
                                          double cap = std::numeric_limits<double>::infinity()) {
  std::vector<std::pair<double, const OpKey*>> small;
  for (const auto& [key, c] : A.terms()) {
    const double m = term_mass(A, key, c);
    if (m < eps) small.emplace_back(m, &key);
  }
  if (small.empty()) return {A, 0.0};
  std::sort(small.begin(), small.end(),
            [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && *a.second < *b.second); });
  double removed = 0.0;
  std::size_t n = 0;
  for (; n < small.size() && removed + small[n].first <= cap; ++n) removed += small[n].first;
  if (n == 0) return {A, 0.0};
  std::set<const OpKey*> drop;
  for (std::size_t i = 0; i < n; ++i) drop.insert(small[i].second);
  APOperator kept = A.like();
  for (const auto& [key, c] : A.terms()) {
    if (!drop.count(&key)) kept.add(key.offset, key.elem, c);
  }
  return {std::move(kept), removed};
}

void require_same(const APOperator& A, const APOperator& B, const char* what) {
  if (!A.same_algebra(B)) throw DimensionError(std::string(what) + ": operands from different algebras");
}

struct FlatTerm {
  std::int64_t offset;
  const GroupElement* elem;
  cplx c;
};

}  // namespace

double diagonal_weight(const AlphaPair& alpha, std::int64_t k) {
  if (k >= 0) return std::pow(1.0 + static_cast<double>(k), alpha.first);
  return std::pow(1.0 + static_cast<double>(-k), alpha.second);
}

void ErrorBudget::charge(double mass) {
  accumulated_ += mass;
  if (accumulated_ > cap_) {
    throw BudgetExhausted("error budget exhausted: accumulated " + std::to_string(accumulated_) +
                          " > cap " + std::to_string(cap_));
  }
}

APOperator::APOperator(FreqGroup group, WeightSpec weight, AlphaPair alpha, SupportCaps caps)
    : group_(std::move(group)), weight_(weight), alpha_(alpha), caps_(caps) {
  if (alpha_.first < 0 || alpha_.second < 0) throw DomainError("APOperator: alpha exponents must be >= 0");
}

APOperator APOperator::identity(FreqGroup group, WeightSpec weight, AlphaPair alpha) {
  APOperator A(std::move(group), weight, alpha);
  A.add(0, A.group_.zero(), 1.0);
  return A;
}

APOperator APOperator::shift(FreqGroup group, std::int64_t k, WeightSpec weight, AlphaPair alpha) {
  APOperator A(std::move(group), weight, alpha);
  A.add(k, A.group_.zero(), 1.0);
  return A;
}

APOperator APOperator::from_diagonal(const APSeq& a, std::int64_t k, WeightSpec weight,
                                     AlphaPair alpha) {
  APOperator A(a.group(), weight, alpha);
  for (const auto& [g, c] : a.coeffs()) A.add(k, g, c);
  return A;
}

APOperator APOperator::identity_like() const {
  APOperator I = like();
  I.add(0, group_.zero(), 1.0);
  return I;
}

std::int64_t APOperator::bandwidth() const {
  std::int64_t w = 0;
  for (const auto& [key, c] : terms_) w = std::max(w, key.offset < 0 ? -key.offset : key.offset);
  return w;
}

cplx APOperator::coeff(std::int64_t k, const GroupElement& g) const {
  auto it = terms_.find(OpKey{k, g});
  return it == terms_.end() ? cplx{} : it->second;
}

void APOperator::add(std::int64_t k, const GroupElement& g, cplx c) {
  group_.check(g);
  if (k > caps_.max_offset || k < -caps_.max_offset) {
    throw CapExceeded("band offset " + std::to_string(k) + " exceeds cap " +
                      std::to_string(caps_.max_offset));
  }
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
    throw NonFiniteError("APOperator: non-finite coefficient");
  }
  if (c == cplx{}) return;
  auto [it, inserted] = terms_.try_emplace(OpKey{k, g}, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx{}) terms_.erase(it);
  }
}

bool APOperator::same_algebra(const APOperator& other) const {
  return group_ == other.group_ && weight_.kind == other.weight_.kind &&
         weight_.omega == other.weight_.omega && alpha_ == other.alpha_;
}

APOperator APOperator::operator+(const APOperator& other) const {
  require_same(*this, other, "operator+");
  APOperator r = *this;
  for (const auto& [key, c] : other.terms_) r.add(key.offset, key.elem, c);
  return r;
}

APOperator APOperator::operator-(const APOperator& other) const { return *this + (-other); }

APOperator APOperator::operator-() const { return *this * cplx{-1.0, 0.0}; }

APOperator APOperator::operator*(cplx s) const {
  APOperator r = like();
  if (s == cplx{}) return r;
  for (const auto& [key, c] : terms_) r.add(key.offset, key.elem, c * s);
  return r;
}

APOperator op_mul(const APOperator& A, const APOperator& B, ErrorBudget& budget, double eps) {
  require_same(A, B, "op_mul");
  APOperator out = A.like();
  if (A.empty() || B.empty()) return out;

  const FreqGroup& group = A.group();
  const std::size_t n = group.rank();
  const std::int64_t N = group.modulus();

  // Distinct left offsets and distinct right elements index the phase table
  // exp(-2 pi i j xi(h)) of the rule (a I U_j)(b I U_k) = (a U_j b) I U_{j+k}.
  std::vector<std::int64_t> a_offsets;
  std::vector<FlatTerm> a_terms;
  std::vector<std::size_t> a_offset_idx;
  for (const auto& [key, c] : A.terms()) {
    if (a_offsets.empty() || a_offsets.back() != key.offset) a_offsets.push_back(key.offset);
    a_terms.push_back({key.offset, &key.elem, c});
    a_offset_idx.push_back(a_offsets.size() - 1);
  }
  std::map<GroupElement, std::size_t> b_elem_index;
  std::vector<const GroupElement*> b_elems;
  std::vector<FlatTerm> b_terms;
  std::vector<std::size_t> b_elem_idx;
  for (const auto& [key, c] : B.terms()) {
    auto [it, inserted] = b_elem_index.try_emplace(key.elem, b_elems.size());
    if (inserted) b_elems.push_back(&key.elem);
    b_terms.push_back({key.offset, &key.elem, c});
    b_elem_idx.push_back(it->second);
  }
  std::vector<cplx> phase(a_offsets.size() * b_elems.size());
  for (std::size_t i = 0; i < a_offsets.size(); ++i) {
    for (std::size_t j = 0; j < b_elems.size(); ++j) {
      phase[i * b_elems.size() + j] =
          a_offsets[i] == 0 ? cplx{1.0, 0.0} : unit(-eval_phase(group, *b_elems[j], a_offsets[i]));
    }
  }

  // Bounding box of the output support.
  auto range_of = [](const std::vector<FlatTerm>& ts, auto proj) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (const auto& t : ts) {
      lo = std::min(lo, proj(t));
      hi = std::max(hi, proj(t));
    }
    return std::pair{lo, hi};
  };
  const auto [ka_lo, ka_hi] = range_of(a_terms, [](const FlatTerm& t) { return t.offset; });
  const auto [kb_lo, kb_hi] = range_of(b_terms, [](const FlatTerm& t) { return t.offset; });
  const std::int64_t k_lo = ka_lo + kb_lo, k_hi = ka_hi + kb_hi;
  const auto& caps = A.caps();
  if (k_lo < -caps.max_offset || k_hi > caps.max_offset) {
    throw CapExceeded("op_mul: product band offset exceeds cap " + std::to_string(caps.max_offset));
  }
  std::vector<std::int64_t> al_lo(n), al_hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [a_lo, a_hi] = range_of(a_terms, [i](const FlatTerm& t) { return t.elem->alpha[i]; });
    const auto [b_lo, b_hi] = range_of(b_terms, [i](const FlatTerm& t) { return t.elem->alpha[i]; });
    al_lo[i] = a_lo + b_lo;
    al_hi[i] = a_hi + b_hi;
    if (al_lo[i] < -caps.max_alpha || al_hi[i] > caps.max_alpha) {
      throw CapExceeded("op_mul: product group coefficient exceeds cap " +
                        std::to_string(caps.max_alpha));
    }
  }

  // Row-major strides: offset, alpha_0, ..., alpha_{n-1}, rho. This matches
  // the lexicographic order of OpKey, so the output map is filled in order.
  std::vector<std::size_t> extent(n + 2);
  extent[0] = static_cast<std::size_t>(k_hi - k_lo + 1);
  for (std::size_t i = 0; i < n; ++i) extent[i + 1] = static_cast<std::size_t>(al_hi[i] - al_lo[i] + 1);
  extent[n + 1] = static_cast<std::size_t>(N);
  long double box = 1;
  for (auto e : extent) box *= static_cast<long double>(e);

  double removed = 0.0;
  auto emit = [&](std::int64_t k, const GroupElement& g, cplx c) {
    if (c == cplx{}) return;
    const double m = diagonal_weight(A.alpha(), k) * weight_value(A.weight(), group, g) * std::abs(c);
    if (m < eps) {
      removed += m;
      return;
    }
    out.add(k, g, c);
  };

  if (box <= static_cast<long double>(kDenseBoxLimit)) {
    std::vector<std::size_t> stride(n + 2);
    stride[n + 1] = 1;
    for (std::size_t i = n + 1; i-- > 0;) stride[i] = stride[i + 1] * extent[i + 1];
    std::vector<cplx> acc(static_cast<std::size_t>(box));
    for (std::size_t s = 0; s < a_terms.size(); ++s) {
      const FlatTerm& ta = a_terms[s];
      const cplx* prow = &phase[a_offset_idx[s] * b_elems.size()];
      for (std::size_t t = 0; t < b_terms.size(); ++t) {
        const FlatTerm& tb = b_terms[t];
        std::size_t idx = static_cast<std::size_t>(ta.offset + tb.offset - k_lo) * stride[0];
        for (std::size_t i = 0; i < n; ++i) {
          idx += static_cast<std::size_t>(ta.elem->alpha[i] + tb.elem->alpha[i] - al_lo[i]) * stride[i + 1];
        }
        std::int64_t r = ta.elem->rho + tb.elem->rho;
        if (r >= N) r -= N;
        acc[idx + static_cast<std::size_t>(r)] += ta.c * tb.c * prow[b_elem_idx[t]];
      }
    }
    GroupElement g;
    g.alpha.resize(n);
    for (std::size_t idx = 0; idx < acc.size(); ++idx) {
      if (acc[idx] == cplx{}) continue;
      std::size_t rem = idx;
      const std::int64_t k = k_lo + static_cast<std::int64_t>(rem / stride[0]);
      rem %= stride[0];
      for (std::size_t i = 0; i < n; ++i) {
        g.alpha[i] = al_lo[i] + static_cast<std::int64_t>(rem / stride[i + 1]);
        rem %= stride[i + 1];
      }
      g.rho = static_cast<std::int64_t>(rem);
      emit(k, g, acc[idx]);
    }
  } else {
    std::map<OpKey, cplx> acc;
    for (std::size_t s = 0; s < a_terms.size(); ++s) {
      const FlatTerm& ta = a_terms[s];
      const cplx* prow = &phase[a_offset_idx[s] * b_elems.size()];
      for (std::size_t t = 0; t < b_terms.size(); ++t) {
        const FlatTerm& tb = b_terms[t];
        OpKey key{ta.offset + tb.offset, group.add(*ta.elem, *tb.elem)};
        acc[key] += ta.c * tb.c * prow[b_elem_idx[t]];
      }
    }
    for (const auto& [key, c] : acc) emit(key.offset, key.elem, c);
  }
  if (removed > 0.0) budget.charge(removed);
  return out;
}

double op_norm(const APOperator& A) {
  double s = 0.0;
  for (const auto& [key, c] : A.terms()) s += term_mass(A, key, c);
  return s;
}

APOperator apply_char(const APOperator& A, const Character& tau) {
  check_character(A.group(), tau);
  APOperator r = A.like();
  for (const auto& [key, c] : A.terms()) r.add(key.offset, key.elem, c * char_eval(tau, key.elem));
  return r;
}

APOperator conjugate_shift(const APOperator& A, std::int64_t m) {
  if (m == 0) return A;
  APOperator r = A.like();
  for (const auto& [key, c] : A.terms()) {
    r.add(key.offset, key.elem, c * unit(eval_phase(A.group(), key.elem, m)));
  }
  return r;
}

APOperator op_tilde(const APOperator& A) {
  APOperator r = A.like();
  for (const auto& [key, c] : A.terms()) {
    const cplx ph = key.elem.is_zero() ? cplx{1.0, 0.0} : unit(-eval_frequency(A.group(), key.elem));
    r.add(-key.offset, A.group().negate(key.elem), c * ph);
  }
  return r;
}

APOperator op_exp(const APOperator& A, double tol, ErrorBudget& budget, double eps) {
  if (!(tol > 0.0)) throw DomainError("op_exp: tol must be > 0");
  const double x = op_norm(A);
  APOperator result = A.identity_like();
  APOperator term = result;
  ErrorBudget scratch(std::numeric_limits<double>::infinity());
  const double propagate = std::exp(x);
  for (int m = 1; m <= kMaxSeriesTerms; ++m) {
    term = op_mul(term, A, scratch, 0.0) * cplx{1.0 / m, 0.0};
    // A term pruned at step m would have fed every later term of the series.
    auto [kept, removed] = split_small(term, eps, tol / (4.0 * propagate * m * m));
    if (removed > 0.0) budget.charge(removed * propagate);
    term = std::move(kept);
    result = result + term;
    if (term.empty()) return result;
    const double tn = op_norm(term);
    if (m + 1 > 2.0 * x && tn * x / (m + 1 - x) < tol) return result;
  }
  throw DomainError("op_exp: series did not reach the requested tolerance");
}

APOperator log_shifted(const APOperator& A, cplx lambda, double tol, ErrorBudget& budget,
                       double eps) {
  if (!(tol > 0.0)) throw DomainError("log_shifted: tol must be > 0");
  if (lambda == cplx{}) throw DomainError("log_shifted: lambda must be nonzero");
  const double ratio = op_norm(A) / std::abs(lambda);
  if (!(ratio < 1.0)) {
    throw DomainError("log_shifted: requires op_norm(A) < |lambda| (norm " +
                      std::to_string(op_norm(A)) + ", |lambda| " + std::to_string(std::abs(lambda)) +
                      ")");
  }
  APOperator result = A.like();
  if (A.empty()) return result;
  const APOperator X = A * (1.0 / lambda);
  APOperator power = X;
  ErrorBudget scratch(std::numeric_limits<double>::infinity());
  for (int m = 1; m <= kMaxSeriesTerms; ++m) {
    if (m > 1) {
      power = op_mul(power, X, scratch, 0.0);
      auto [kept, removed] = split_small(power, eps, tol * (1.0 - ratio) / (4.0 * m));
      if (removed > 0.0) budget.charge(removed / (m * (1.0 - ratio)));
      power = std::move(kept);
    }
    if (power.empty()) return result;
    result = result - power * cplx{1.0 / m, 0.0};
    const double tail = op_norm(power) * ratio / ((m + 1) * (1.0 - ratio));
    if (tail < tol) return result;
  }
  throw DomainError("log_shifted: series did not reach the requested tolerance");
}

APSeq diagonal(const APOperator& A, std::int64_t k) {
  APSeq a(A.group());
  auto it = A.terms().lower_bound(OpKey{k, {}});
  for (; it != A.terms().end() && it->first.offset == k; ++it) a.add(it->first.elem, it->second);
  return a;
}

APOperator prune(const APOperator& A, double eps, ErrorBudget& budget) {
  if (eps < 0.0) throw DomainError("prune: eps must be >= 0");
  auto [kept, removed] = split_small(A, eps);
  if (removed > 0.0) budget.charge(removed);
  return kept;
}

}  // namespace apdet
