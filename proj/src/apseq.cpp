#include "apdet/apseq.hpp"

#include <cmath>
#include <numbers>

#include "apdet/errors.hpp"

namespace apdet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cplx unit(double turns) { return turn_unit(turns); }

// Neumaier summation for each component.
struct CompensatedSum {
  double re = 0, im = 0, cre = 0, cim = 0;

  static void step(double& s, double& c, double x) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  void add(cplx z) {
    step(re, cre, z.real());
    step(im, cim, z.imag());
  }
  cplx value() const { return {re + cre, im + cim}; }
};

// 1 - exp(2 pi i xi(g)) for a nonzero element; rejects integer frequencies.
cplx small_denominator(const FreqGroup& group, const GroupElement& g) {
  const double x = eval_frequency(group, g);
  if (torus_distance(x) == 0.0) {
    throw DomainError("nonzero group element " + g.to_string() +
                      " has integer frequency; generators are not independent");
  }
  return 1.0 - unit(x);
}

}  // namespace

APSeq::APSeq(FreqGroup group, const Coeffs& coeffs) : group_(std::move(group)) {
  for (const auto& [g, c] : coeffs) add(g, c);
}

APSeq APSeq::constant(FreqGroup group, cplx c) {
  APSeq a(std::move(group));
  a.add(a.group_.zero(), c);
  return a;
}

APSeq APSeq::single(FreqGroup group, const GroupElement& g, cplx c) {
  APSeq a(std::move(group));
  a.add(g, c);
  return a;
}

cplx APSeq::coeff(const GroupElement& g) const {
  auto it = coeffs_.find(g);
  return it == coeffs_.end() ? cplx{} : it->second;
}

void APSeq::add(const GroupElement& g, cplx c) {
  group_.check(g);
  if (c == cplx{}) return;
  auto [it, inserted] = coeffs_.try_emplace(g, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx{}) coeffs_.erase(it);
  }
}

APSeq APSeq::operator+(const APSeq& other) const {
  if (!(group_ == other.group_)) throw DimensionError("APSeq: group mismatch");
  APSeq r = *this;
  for (const auto& [g, c] : other.coeffs_) r.add(g, c);
  return r;
}

APSeq APSeq::operator*(cplx s) const {
  APSeq r(group_);
  for (const auto& [g, c] : coeffs_) r.add(g, c * s);
  return r;
}

cplx seq_eval(const APSeq& a, std::int64_t k) {
  cplx s{};
  for (const auto& [g, c] : a.coeffs()) s += c * unit(eval_phase(a.group(), g, k));
  return s;
}

cplx seq_mean(const APSeq& a) { return a.coeff(a.group().zero()); }

APSeq seq_shift(const APSeq& a, std::int64_t m) {
  APSeq r(a.group());
  for (const auto& [g, c] : a.coeffs()) {
    r.add(g, m == 0 ? c : c * unit(-eval_phase(a.group(), g, m)));
  }
  return r;
}

double seq_norm(const APSeq& a, const WeightSpec& w) {
  double s = 0.0;
  for (const auto& [g, c] : a.coeffs()) s += weight_value(w, a.group(), g) * std::abs(c);
  return s;
}

cplx fourier_estimate(const APSeq& a, double xi, std::int64_t K) {
  if (K < 1) throw DomainError("fourier_estimate: K must be >= 1");
  CompensatedSum s;
  for (std::int64_t k = 0; k < K; ++k) s.add(seq_eval(a, k) * unit(-frac_mul(k, xi)));
  return s.value() / static_cast<double>(K);
}

cplx window_sum(const APSeq& a, std::int64_t n1, std::int64_t n2) {
  if (n2 <= n1) throw DomainError("window_sum: empty window");
  CompensatedSum s;
  for (const auto& [g, c] : a.coeffs()) {
    if (g.is_zero()) {
      s.add(c * static_cast<double>(n2 - n1));
      continue;
    }
    CompensatedSum phases;
    for (std::int64_t k = n1; k < n2; ++k) phases.add(unit(eval_phase(a.group(), g, k)));
    s.add(c * phases.value());
  }
  return s.value();
}

cplx window_sum_closed(const APSeq& a, std::int64_t n1, std::int64_t n2) {
  if (n2 <= n1) throw DomainError("window_sum_closed: empty window");
  cplx s{};
  for (const auto& [g, c] : a.coeffs()) {
    if (g.is_zero()) {
      s += c * static_cast<double>(n2 - n1);
      continue;
    }
    const cplx den = small_denominator(a.group(), g);
    s += c * (unit(eval_phase(a.group(), g, n1)) - unit(eval_phase(a.group(), g, n2))) / den;
  }
  return s;
}

cplx f_tau(const APSeq& a, const Character& tau) {
  check_character(a.group(), tau);
  cplx s{};
  for (const auto& [g, c] : a.coeffs()) {
    if (g.is_zero()) continue;
    s += c * char_eval(tau, g) / small_denominator(a.group(), g);
  }
  return s;
}

double f_tau_sensitivity(const APSeq& a) {
  double s = 0.0;
  for (const auto& [g, c] : a.coeffs()) {
    if (g.is_zero()) continue;
    s += std::abs(c) / std::abs(small_denominator(a.group(), g));
  }
  return s;
}

}  // namespace apdet
