#pragma once

// Almost periodic sequences with finite Fourier support over a frequency group.

#include <cstdint>
#include <map>

#include "apdet/group.hpp"

namespace apdet {

/// a(k) = sum_g a_g exp(2 pi i k xi(g)) with finitely many nonzero a_g.
/// Frequencies are keyed by group element, never by floating point value.
class APSeq {
 public:
  using Coeffs = std::map<GroupElement, cplx>;

  APSeq() = default;
  explicit APSeq(FreqGroup group) : group_(std::move(group)) {}
  APSeq(FreqGroup group, const Coeffs& coeffs);

  static APSeq constant(FreqGroup group, cplx c);
  static APSeq single(FreqGroup group, const GroupElement& g, cplx c);

  const FreqGroup& group() const { return group_; }
  const Coeffs& coeffs() const { return coeffs_; }
  bool empty() const { return coeffs_.empty(); }
  std::size_t size() const { return coeffs_.size(); }

  cplx coeff(const GroupElement& g) const;

  /// Adds c to the coefficient at g; drops the entry if it becomes exactly 0.
  void add(const GroupElement& g, cplx c);

  APSeq operator+(const APSeq& other) const;
  APSeq operator*(cplx s) const;

  bool operator==(const APSeq& other) const {
    return group_ == other.group_ && coeffs_ == other.coeffs_;
  }

 private:
  FreqGroup group_;
  Coeffs coeffs_;
};

cplx seq_eval(const APSeq& a, std::int64_t k);

/// The Bohr mean, i.e. the coefficient at the zero element.
cplx seq_mean(const APSeq& a);

/// (U_m a)(k) = a(k - m).
APSeq seq_shift(const APSeq& a, std::int64_t m);

double seq_norm(const APSeq& a, const WeightSpec& w);

/// (1/K) sum_{k<K} a(k) exp(-2 pi i k xi).
cplx fourier_estimate(const APSeq& a, double xi, std::int64_t K);

/// sum_{k=n1}^{n2-1} a(k) by compensated direct summation.
cplx window_sum(const APSeq& a, std::int64_t n1, std::int64_t n2);

/// Same sum through the geometric series identity for every frequency.
cplx window_sum_closed(const APSeq& a, std::int64_t n1, std::int64_t n2);

/// F_a(tau) = sum_{g != 0} a_g tau(g) / (1 - exp(2 pi i xi(g))).
cplx f_tau(const APSeq& a, const Character& tau);

/// sum_{g != 0} |a_g| / |1 - exp(2 pi i xi(g))|, the Lipschitz constant of
/// f_tau in the sup distance of characters over the support.
double f_tau_sensitivity(const APSeq& a);

}  // namespace apdet
