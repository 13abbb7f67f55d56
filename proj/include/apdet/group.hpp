#pragma once

// Finitely generated frequency groups Xi = gr{[xi_1],...,[xi_n],[1/N]} of R/Z,
// their elements, characters and weights.

#include <compare>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace apdet {

using cplx = std::complex<double>;

inline constexpr std::int64_t kDefaultCoefficientCap = 1'000'000;

/// Element of Z^n x Z_N as an integer coefficient vector plus a residue.
struct GroupElement {
  std::vector<std::int64_t> alpha;
  std::int64_t rho = 0;

  auto operator<=>(const GroupElement&) const = default;
  bool operator==(const GroupElement&) const = default;

  bool is_zero() const;
  std::int64_t max_abs_alpha() const;
  std::string to_string() const;
};

/// The group generated by n binary64 frequencies in (0,1) and [1/N].
/// The caller asserts that {xi_1, ..., xi_n, 1} are rationally independent.
class FreqGroup {
 public:
  FreqGroup() = default;
  FreqGroup(std::vector<double> xi, std::int64_t modulus,
            std::int64_t coefficient_cap = kDefaultCoefficientCap);

  static FreqGroup trivial() { return FreqGroup({}, 1); }
  static FreqGroup cyclic(std::int64_t modulus) { return FreqGroup({}, modulus); }

  std::size_t rank() const { return xi_.size(); }
  std::int64_t modulus() const { return modulus_; }
  std::int64_t coefficient_cap() const { return cap_; }
  const std::vector<double>& xi() const { return xi_; }

  GroupElement zero() const;
  GroupElement generator(std::size_t i) const;
  GroupElement residue(std::int64_t r) const;
  GroupElement element(std::vector<std::int64_t> alpha, std::int64_t rho = 0) const;

  GroupElement add(const GroupElement& a, const GroupElement& b) const;
  GroupElement negate(const GroupElement& a) const;
  GroupElement scale(const GroupElement& a, std::int64_t k) const;

  /// Throws DimensionError unless g has the right shape and a valid residue,
  /// CapExceeded if a coefficient exceeds the cap.
  void check(const GroupElement& g) const;
  bool conforms(const GroupElement& g) const;

  bool operator==(const FreqGroup& other) const {
    return xi_ == other.xi_ && modulus_ == other.modulus_;
  }

 private:
  std::int64_t checked(std::int64_t v) const;

  std::vector<double> xi_;
  std::int64_t modulus_ = 1;
  std::int64_t cap_ = kDefaultCoefficientCap;
};

/// frac(m * x) computed with an fma-corrected product.
double frac_mul(std::int64_t m, double x);

/// Fractional part in [0,1).
double frac(double x);

/// Returns frac(sum alpha_i xi_i + rho/N) in [0,1).
double eval_frequency(const FreqGroup& group, const GroupElement& g);

/// frac(k * eval_frequency(group, g)) computed without forming the product of
/// a rounded frequency with k.
double eval_phase(const FreqGroup& group, const GroupElement& g, std::int64_t k);

/// exp(2 pi i turns); exact at multiples of a quarter turn.
cplx turn_unit(double turns);

/// Distance from x to the nearest integer.
double torus_distance(double x);

struct Rational {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

/// Least N with gr{[p_i/q_i]} = gr{[1/N]}, i.e. lcm of the denominators.
std::int64_t canonicalize_rationals(std::span<const Rational> fractions);

/// A point of T^n x T_N identified with a homomorphism Xi -> T.
/// u[i] is the image of [xi_i]; [1/N] maps to exp(2 pi i c / N).
struct Character {
  std::vector<cplx> u;
  std::int64_t c = 0;
  std::int64_t modulus = 1;

  static Character trivial(const FreqGroup& group);
  Character conj() const;
  std::string to_string() const;
};

void check_character(const FreqGroup& group, const Character& tau);

cplx char_eval(const Character& tau, const GroupElement& g);

/// tau_m(xi) = exp(2 pi i m xi).
Character char_of_shift(const FreqGroup& group, std::int64_t m);

/// Max over generators of |u_i - u'_i|, plus 2 when the residues differ.
double character_distance(const Character& a, const Character& b);

struct WeightSpec {
  enum class Kind { constant, power, rational_denominator };
  Kind kind = Kind::constant;
  double omega = 0.0;

  static WeightSpec constant() { return {}; }
  static WeightSpec power(double omega) { return {Kind::power, omega}; }
  static WeightSpec rational_denominator() { return {Kind::rational_denominator, 0.0}; }

  std::string to_string() const;
};

double weight_value(const WeightSpec& w, const FreqGroup& group, const GroupElement& g);

using WeightFunction = std::function<double(const GroupElement&)>;

struct AdmissibilityReport {
  bool admissible = true;
  std::optional<GroupElement> witness_a;
  std::optional<GroupElement> witness_b;
  std::string reason;
};

/// Exhaustive check of 1 <= beta(a+b) <= beta(a) beta(b) over all elements
/// with max|alpha| <= sample_cap (and every residue).
AdmissibilityReport admissibility_check(const WeightFunction& beta, const FreqGroup& group,
                                        std::int64_t sample_cap);
AdmissibilityReport admissibility_check(const WeightSpec& w, const FreqGroup& group,
                                        std::int64_t sample_cap);

struct CompatibilityAudit {
  double c_est = 0.0;
  GroupElement argmin;
};

/// min over nonzero g with max|alpha| <= search_cap of beta(g) * ||xi(g)||.
/// An upper bound for the compatibility constant; evidence, not proof.
CompatibilityAudit compatibility_audit(const FreqGroup& group, const WeightSpec& w,
                                       std::int64_t search_cap, unsigned threads = 1);

/// beta(k g)^{1/k} for k = 1..K.
std::vector<double> grs_profile(const WeightSpec& w, const FreqGroup& group,
                                const GroupElement& g, int K);

/// Enumerates all elements with max|alpha_i| <= cap (all residues) in a
/// fixed order.
void for_each_element(const FreqGroup& group, std::int64_t cap,
                      const std::function<void(const GroupElement&)>& fn);

}  // namespace apdet
