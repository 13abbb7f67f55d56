#include "apdet/group.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "apdet/errors.hpp"

namespace apdet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::int64_t mod_pos(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace

bool GroupElement::is_zero() const {
  return rho == 0 && std::all_of(alpha.begin(), alpha.end(), [](auto a) { return a == 0; });
}

std::int64_t GroupElement::max_abs_alpha() const {
  std::int64_t m = 0;
  for (auto a : alpha) m = std::max(m, a < 0 ? -a : a);
  return m;
}

std::string GroupElement::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < alpha.size(); ++i) os << (i ? " " : "") << alpha[i];
  os << (alpha.empty() ? "" : "; ") << rho << ')';
  return os.str();
}

FreqGroup::FreqGroup(std::vector<double> xi, std::int64_t modulus, std::int64_t coefficient_cap)
    : xi_(std::move(xi)), modulus_(modulus), cap_(coefficient_cap) {
  if (modulus_ < 1) throw DomainError("FreqGroup: modulus must be >= 1");
  if (cap_ < 1) throw DomainError("FreqGroup: coefficient cap must be >= 1");
  for (double x : xi_) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("FreqGroup: generators must lie in (0,1)");
  }
}

GroupElement FreqGroup::zero() const { return {std::vector<std::int64_t>(rank(), 0), 0}; }

GroupElement FreqGroup::generator(std::size_t i) const {
  if (i >= rank()) throw DimensionError("FreqGroup::generator: index out of range");
  GroupElement g = zero();
  g.alpha[i] = 1;
  return g;
}

GroupElement FreqGroup::residue(std::int64_t r) const {
  GroupElement g = zero();
  g.rho = mod_pos(r, modulus_);
  return g;
}

GroupElement FreqGroup::element(std::vector<std::int64_t> alpha, std::int64_t rho) const {
  GroupElement g{std::move(alpha), mod_pos(rho, modulus_)};
  check(g);
  return g;
}

std::int64_t FreqGroup::checked(std::int64_t v) const {
  if (v > cap_ || v < -cap_) {
    throw CapExceeded("group element coefficient " + std::to_string(v) + " exceeds cap " +
                      std::to_string(cap_));
  }
  return v;
}

GroupElement FreqGroup::add(const GroupElement& a, const GroupElement& b) const {
  check(a);
  check(b);
  GroupElement r;
  r.alpha.resize(rank());
  for (std::size_t i = 0; i < rank(); ++i) r.alpha[i] = checked(a.alpha[i] + b.alpha[i]);
  r.rho = (a.rho + b.rho) % modulus_;
  return r;
}

GroupElement FreqGroup::negate(const GroupElement& a) const {
  check(a);
  GroupElement r;
  r.alpha.resize(rank());
  for (std::size_t i = 0; i < rank(); ++i) r.alpha[i] = -a.alpha[i];
  r.rho = mod_pos(-a.rho, modulus_);
  return r;
}

GroupElement FreqGroup::scale(const GroupElement& a, std::int64_t k) const {
  check(a);
  GroupElement r;
  r.alpha.resize(rank());
  for (std::size_t i = 0; i < rank(); ++i) {
    std::int64_t v = 0;
    if (__builtin_mul_overflow(a.alpha[i], k, &v)) throw CapExceeded("group element overflow");
    r.alpha[i] = checked(v);
  }
  r.rho = mod_pos(static_cast<std::int64_t>((static_cast<__int128>(a.rho) * k) % modulus_),
                  modulus_);
  return r;
}

bool FreqGroup::conforms(const GroupElement& g) const {
  if (g.alpha.size() != rank() || g.rho < 0 || g.rho >= modulus_) return false;
  return std::all_of(g.alpha.begin(), g.alpha.end(),
                     [this](auto a) { return a <= cap_ && a >= -cap_; });
}

void FreqGroup::check(const GroupElement& g) const {
  if (g.alpha.size() != rank()) {
    throw DimensionError("group element has " + std::to_string(g.alpha.size()) +
                         " coefficients, group rank is " + std::to_string(rank()));
  }
  if (g.rho < 0 || g.rho >= modulus_) throw DimensionError("group element residue out of range");
  for (auto a : g.alpha) checked(a);
}

double frac(double x) {
  double f = x - std::floor(x);
  // x slightly below an integer can round to 1.0
  return f >= 1.0 ? 0.0 : f;
}

double frac_mul(std::int64_t m, double x) {
  const double md = static_cast<double>(m);
  const double p = md * x;
  const double e = std::fma(md, x, -p);
  return frac(frac(p) + e);
}

double eval_frequency(const FreqGroup& group, const GroupElement& g) {
  group.check(g);
  double s = static_cast<double>(g.rho) / static_cast<double>(group.modulus());
  for (std::size_t i = 0; i < group.rank(); ++i) s += frac_mul(g.alpha[i], group.xi()[i]);
  return frac(s);
}

double eval_phase(const FreqGroup& group, const GroupElement& g, std::int64_t k) {
  group.check(g);
  const std::int64_t n = group.modulus();
  double s = static_cast<double>((static_cast<__int128>(mod_pos(k, n)) * g.rho) % n) /
             static_cast<double>(n);
  for (std::size_t i = 0; i < group.rank(); ++i) {
    std::int64_t km = 0;
    if (__builtin_mul_overflow(k, g.alpha[i], &km)) throw CapExceeded("phase index overflow");
    s += frac_mul(km, group.xi()[i]);
  }
  return frac(s);
}

double torus_distance(double x) {
  const double f = frac(x);
  return std::min(f, 1.0 - f);
}

std::int64_t canonicalize_rationals(std::span<const Rational> fractions) {
  std::int64_t n = 1;
  for (const auto& r : fractions) {
    if (r.q == 0) throw DomainError("canonicalize_rationals: zero denominator");
    n = std::lcm(n, r.q < 0 ? -r.q : r.q);
  }
  return n;
}

Character Character::trivial(const FreqGroup& group) {
  return {std::vector<cplx>(group.rank(), cplx{1.0, 0.0}), 0, group.modulus()};
}

Character Character::conj() const {
  Character r = *this;
  for (auto& v : r.u) v = std::conj(v);
  r.c = (modulus - c) % modulus;
  return r;
}

std::string Character::to_string() const {
  std::ostringstream os;
  os.precision(6);
  os << "u=[";
  for (std::size_t i = 0; i < u.size(); ++i) {
    os << (i ? " " : "") << std::arg(u[i]) / kTwoPi;
  }
  os << "]turns;c=" << c << "/" << modulus;
  return os.str();
}

void check_character(const FreqGroup& group, const Character& tau) {
  if (tau.u.size() != group.rank() || tau.modulus != group.modulus()) {
    throw DimensionError("character does not conform to group");
  }
  if (tau.c < 0 || tau.c >= tau.modulus) throw DimensionError("character residue out of range");
  for (const auto& v : tau.u) {
    if (std::abs(std::abs(v) - 1.0) >= 1e-12) throw DomainError("character value not unimodular");
  }
}

cplx turn_unit(double turns) {
  const double f = frac(turns);
  const double q = 4.0 * f;
  if (q == std::floor(q)) {
    static constexpr cplx kQuarter[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    return kQuarter[static_cast<int>(q) & 3];
  }
  return std::polar(1.0, kTwoPi * f);
}

cplx char_eval(const Character& tau, const GroupElement& g) {
  if (g.alpha.size() != tau.u.size()) throw DimensionError("char_eval: dimension mismatch");
  if (g.rho < 0 || g.rho >= tau.modulus) throw DimensionError("char_eval: residue out of range");
  const std::int64_t n = tau.modulus;
  double turns = static_cast<double>((static_cast<__int128>(g.rho) * tau.c) % n) /
                 static_cast<double>(n);
  for (std::size_t i = 0; i < tau.u.size(); ++i) {
    if (g.alpha[i] == 0) continue;
    turns += frac_mul(g.alpha[i], std::arg(tau.u[i]) / kTwoPi);
  }
  return turn_unit(turns);
}

Character char_of_shift(const FreqGroup& group, std::int64_t m) {
  Character tau;
  tau.modulus = group.modulus();
  tau.c = mod_pos(m, group.modulus());
  tau.u.reserve(group.rank());
  for (double x : group.xi()) tau.u.push_back(turn_unit(frac_mul(m, x)));
  return tau;
}

double character_distance(const Character& a, const Character& b) {
  if (a.u.size() != b.u.size() || a.modulus != b.modulus) {
    throw DimensionError("character_distance: dimension mismatch");
  }
  double d = a.c == b.c ? 0.0 : 2.0;
  for (std::size_t i = 0; i < a.u.size(); ++i) d = std::max(d, std::abs(a.u[i] - b.u[i]));
  return d;
}

std::string WeightSpec::to_string() const {
  switch (kind) {
    case Kind::constant:
      return "constant";
    case Kind::power: {
      std::ostringstream os;
      os << "power(" << omega << ")";
      return os.str();
    }
    case Kind::rational_denominator:
      return "rational-denominator";
  }
  return "?";
}

double weight_value(const WeightSpec& w, const FreqGroup& group, const GroupElement& g) {
  group.check(g);
  switch (w.kind) {
    case WeightSpec::Kind::constant:
      return 1.0;
    case WeightSpec::Kind::power:
      if (group.rank() == 0) return 1.0;
      return std::pow(1.0 + static_cast<double>(g.max_abs_alpha()), w.omega);
    case WeightSpec::Kind::rational_denominator: {
      if (group.rank() != 0) {
        throw DomainError("rational-denominator weight requires a group without irrational generators");
      }
      return static_cast<double>(group.modulus() / std::gcd(g.rho, group.modulus()));
    }
  }
  return 1.0;
}

void for_each_element(const FreqGroup& group, std::int64_t cap,
                      const std::function<void(const GroupElement&)>& fn) {
  GroupElement g = group.zero();
  const std::size_t n = group.rank();
  std::fill(g.alpha.begin(), g.alpha.end(), -cap);
  while (true) {
    for (std::int64_t r = 0; r < group.modulus(); ++r) {
      g.rho = r;
      fn(g);
    }
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (g.alpha[i] < cap) {
        ++g.alpha[i];
        break;
      }
      g.alpha[i] = -cap;
    }
    if (i == n) return;
  }
}

AdmissibilityReport admissibility_check(const WeightFunction& beta, const FreqGroup& group,
                                        std::int64_t sample_cap) {
  std::vector<GroupElement> elems;
  for_each_element(group, sample_cap, [&](const GroupElement& g) { elems.push_back(g); });
  std::vector<double> values(elems.size());
  for (std::size_t i = 0; i < elems.size(); ++i) values[i] = beta(elems[i]);

  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (values[i] < 1.0) return {false, elems[i], std::nullopt, "beta < 1"};
  }
  for (std::size_t i = 0; i < elems.size(); ++i) {
    for (std::size_t j = 0; j < elems.size(); ++j) {
      const GroupElement s = group.add(elems[i], elems[j]);
      const double bs = beta(s);
      if (bs < 1.0) return {false, elems[i], elems[j], "beta(a+b) < 1"};
      if (bs > values[i] * values[j] * (1.0 + 1e-14)) {
        return {false, elems[i], elems[j], "beta(a+b) > beta(a) beta(b)"};
      }
    }
  }
  return {};
}

AdmissibilityReport admissibility_check(const WeightSpec& w, const FreqGroup& group,
                                        std::int64_t sample_cap) {
  return admissibility_check([&](const GroupElement& g) { return weight_value(w, group, g); },
                             group, sample_cap);
}

CompatibilityAudit compatibility_audit(const FreqGroup& group, const WeightSpec& w,
                                       std::int64_t search_cap, unsigned threads) {
  if (search_cap < 1) throw DomainError("compatibility_audit: search cap must be >= 1");
  const double log_size = static_cast<double>(group.rank()) * std::log2(2.0 * search_cap + 1.0) +
                          std::log2(static_cast<double>(group.modulus()));
  if (log_size > 34.0) {
    throw CapExceeded("compatibility_audit: search space of 2^" + std::to_string(log_size) +
                      " elements is too large");
  }
  if (group.rank() == 0 && group.modulus() == 1) return {0.0, group.zero()};

  const auto value_of = [&](const GroupElement& g) {
    return weight_value(w, group, g) * torus_distance(eval_frequency(group, g));
  };

  if (group.rank() == 0) {
    CompatibilityAudit best{std::numeric_limits<double>::infinity(), group.zero()};
    for (std::int64_t r = 1; r < group.modulus(); ++r) {
      const GroupElement g = group.residue(r);
      const double v = value_of(g);
      if (v < best.c_est) best = {v, g};
    }
    return best;
  }

  // Partition on the first coordinate; merge by min with a deterministic tie rule.
  const std::int64_t span = 2 * search_cap + 1;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(span)));
  std::vector<CompatibilityAudit> partial(threads, {std::numeric_limits<double>::infinity(), {}});
  auto worker = [&](unsigned t) {
    GroupElement g = group.zero();
    const std::size_t n = group.rank();
    for (std::int64_t a0 = -search_cap + t; a0 <= search_cap; a0 += threads) {
      g.alpha[0] = a0;
      for (std::size_t i = 1; i < n; ++i) g.alpha[i] = -search_cap;
      while (true) {
        for (std::int64_t r = 0; r < group.modulus(); ++r) {
          g.rho = r;
          if (g.is_zero()) continue;
          const double v = value_of(g);
          if (v < partial[t].c_est || (v == partial[t].c_est && g < partial[t].argmin)) {
            partial[t] = {v, g};
          }
        }
        std::size_t i = 1;
        for (; i < n; ++i) {
          if (g.alpha[i] < search_cap) {
            ++g.alpha[i];
            break;
          }
          g.alpha[i] = -search_cap;
        }
        if (i >= n) break;
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  CompatibilityAudit best = partial[0];
  for (const auto& p : partial) {
    if (p.c_est < best.c_est || (p.c_est == best.c_est && p.argmin < best.argmin)) best = p;
  }
  return best;
}

std::vector<double> grs_profile(const WeightSpec& w, const FreqGroup& group,
                                const GroupElement& g, int K) {
  if (K < 1) throw DomainError("grs_profile: K must be >= 1");
  std::vector<double> out;
  out.reserve(K);
  for (int k = 1; k <= K; ++k) {
    out.push_back(std::pow(weight_value(w, group, group.scale(g, k)), 1.0 / k));
  }
  return out;
}

}  // namespace apdet
