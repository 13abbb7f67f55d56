#include "apdet/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>

#include "apdet/errors.hpp"

namespace apdet {

namespace {


std::int64_t mod_pos(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

// Length (in turns) of the shortest arc containing every phase.
double arc_width(std::vector<double> turns) {
  if (turns.size() < 2) return 0.0;
  std::sort(turns.begin(), turns.end());
  double max_gap = 1.0 - (turns.back() - turns.front());
  for (std::size_t i = 1; i < turns.size(); ++i) max_gap = std::max(max_gap, turns[i] - turns[i - 1]);
  return std::max(0.0, 1.0 - max_gap);
}

std::vector<double> phases_of(const std::vector<std::int64_t>& h, double xi) {
  std::vector<double> out;
  out.reserve(h.size());
  for (auto v : h) out.push_back(frac_mul(v, xi));
  return out;
}

cplx normalized_mean(const std::vector<double>& turns) {
  cplx s{};
  for (double t : turns) s += turn_unit(t);
  if (std::abs(s) == 0.0) return {1.0, 0.0};
  return s / std::abs(s);
}

std::vector<std::int64_t> tail_of(const std::vector<std::int64_t>& h, double fraction) {
  std::size_t n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(h.size())));
  n = std::clamp<std::size_t>(n, std::min<std::size_t>(2, h.size()), h.size());
  return {h.end() - static_cast<std::ptrdiff_t>(n), h.end()};
}

std::vector<double> tail_certificate(const FreqGroup& group, const std::vector<std::int64_t>& h) {
  const auto tail = tail_of(h, 0.25);
  std::vector<double> cert;
  for (double xi : group.xi()) cert.push_back(arc_width(phases_of(tail, xi)));
  return cert;
}

}  // namespace

double chord_diameter(const std::vector<double>& turns) {
  double d = 0.0;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    for (std::size_t j = i + 1; j < turns.size(); ++j) {
      d = std::max(d, 2.0 * std::sin(std::numbers::pi * torus_distance(turns[i] - turns[j])));
    }
  }
  return d;
}

std::vector<std::int64_t> cf_denominators(double x, int m) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("cf_denominators: x must lie in (0,1)");
  if (m < 1 || m > 40) throw DomainError("cf_denominators: m must be in [1, 40]");
  // Exact Euclid on the binary64 value x = num / den.
  int exp = 0;
  const double mant = std::frexp(x, &exp);
  const int shift = 53 - exp;
  if (shift > 120) throw DomainError("cf_denominators: x too small");
  unsigned __int128 num = static_cast<unsigned __int128>(std::ldexp(mant, 53));
  unsigned __int128 den = static_cast<unsigned __int128>(1) << shift;

  std::vector<std::int64_t> out;
  // convergent recurrences with a_0 = 0
  std::int64_t p0 = 1, q0 = 0, p1 = 0, q1 = 1;
  unsigned __int128 n = den, d = num;
  while (static_cast<int>(out.size()) < m && d != 0) {
    const unsigned __int128 a128 = n / d;
    const unsigned __int128 r = n % d;
    if (a128 > static_cast<unsigned __int128>(std::int64_t{1} << 53)) break;
    const auto a = static_cast<std::int64_t>(a128);
    std::int64_t p = 0, q = 0;
    if (__builtin_mul_overflow(a, p1, &p) || __builtin_add_overflow(p, p0, &p) ||
        __builtin_mul_overflow(a, q1, &q) || __builtin_add_overflow(q, q0, &q) ||
        q > (std::int64_t{1} << 53)) {
      break;
    }
    out.push_back(q);
    p0 = p1;
    q0 = q1;
    p1 = p;
    q1 = q;
    const long double err =
        std::fabs(static_cast<long double>(x) - static_cast<long double>(p) / static_cast<long double>(q));
    if (err <= 2.0L * std::numeric_limits<double>::epsilon() * static_cast<long double>(x)) break;
    n = d;
    d = r;
  }
  return out;
}

FractalSeq arithmetic_fractal(const FreqGroup& group, std::int64_t k0, std::size_t length,
                              std::optional<std::int64_t> step) {
  if (group.rank() != 0 && step.value_or(group.modulus()) != 0) {
    throw DomainError("arithmetic_fractal: requires a group without irrational generators");
  }
  const std::int64_t s = step.value_or(group.modulus());
  if (s % group.modulus() != 0) throw DomainError("arithmetic_fractal: step must be a multiple of N");
  FractalSeq f;
  f.values.reserve(length);
  for (std::size_t j = 0; j < length; ++j) f.values.push_back(k0 + static_cast<std::int64_t>(j) * s);
  f.tau = char_of_shift(group, k0);
  f.certificate.assign(group.rank(), 0.0);
  return f;
}

FractalSeq constant_fractal(const FreqGroup& group, std::int64_t k0, std::size_t length) {
  return arithmetic_fractal(group, k0, length, 0);
}

FractalSeq fractal_from_cf(const FreqGroup& group, std::int64_t residue, std::int64_t k0,
                           std::size_t length) {
  if (group.rank() == 0) return arithmetic_fractal(group, k0 + residue, length);
  if (group.rank() != 1) throw DomainError("fractal_from_cf: requires exactly one irrational generator");
  if (length < 4) throw DomainError("fractal_from_cf: length must be >= 4");
  const std::int64_t N = group.modulus();
  const std::int64_t c = mod_pos(residue, N);
  const auto q = cf_denominators(group.xi()[0], 40);
  FractalSeq f;
  for (auto d : q) {
    if (mod_pos(d, N) != c) continue;
    const std::int64_t v = k0 + d;
    if (!f.values.empty() && v <= f.values.back()) continue;
    f.values.push_back(v);
    if (f.values.size() == length) break;
  }
  if (f.values.size() < length) {
    throw DomainError("fractal_from_cf: only " + std::to_string(f.values.size()) +
                      " convergent denominators congruent to " + std::to_string(c) + " mod " +
                      std::to_string(N));
  }
  f.tau.modulus = N;
  f.tau.c = mod_pos(k0 + c, N);
  f.tau.u = {turn_unit(frac_mul(k0, group.xi()[0]))};
  f.certificate = tail_certificate(group, f.values);
  return f;
}

FractalSeq extract_fractal(const FreqGroup& group, const std::vector<std::int64_t>& candidate,
                           double delta) {
  if (candidate.size() < 16) throw DomainError("extract_fractal: candidate needs >= 16 entries");
  if (!(delta > 0.0)) throw DomainError("extract_fractal: delta must be > 0");
  const std::int64_t N = group.modulus();

  // Residue class first; it is exact.
  std::map<std::int64_t, std::size_t> counts;
  for (auto v : candidate) ++counts[mod_pos(v, N)];
  std::int64_t best_residue = 0;
  std::size_t best_count = 0;
  for (const auto& [r, cnt] : counts) {
    if (cnt > best_count) {
      best_count = cnt;
      best_residue = r;
    }
  }
  std::vector<std::int64_t> kept;
  for (auto v : candidate) {
    if (mod_pos(v, N) == best_residue) kept.push_back(v);
  }

  FractalSeq f;
  double width = delta;
  for (double xi : group.xi()) {
    const auto ph = phases_of(kept, xi);
    std::vector<std::size_t> order(ph.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ph[a] < ph[b]; });
    // Largest circular window of the given width; two pointers over the
    // sorted phases unrolled once around the circle.
    const std::size_t n = order.size();
    std::size_t best_start = 0, best_len = 0, hi = 0;
    for (std::size_t lo = 0; lo < n; ++lo) {
      if (hi < lo) hi = lo;
      while (hi + 1 < lo + n) {
        const std::size_t nxt = hi + 1;
        const double t = ph[order[nxt % n]] + (nxt >= n ? 1.0 : 0.0);
        if (t - ph[order[lo]] > width) break;
        hi = nxt;
      }
      if (hi - lo + 1 > best_len) {
        best_len = hi - lo + 1;
        best_start = lo;
      }
    }
    std::vector<bool> keep(n, false);
    for (std::size_t k = 0; k < best_len; ++k) keep[order[(best_start + k) % n]] = true;
    std::vector<std::int64_t> next;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) next.push_back(kept[i]);
    }
    kept = std::move(next);
    width *= 0.5;
  }
  if (kept.size() < 4) {
    throw DomainError("extract_fractal: only " + std::to_string(kept.size()) + " entries survive");
  }
  f.values = kept;
  f.tau.modulus = N;
  f.tau.c = best_residue;
  for (double xi : group.xi()) {
    const auto ph = phases_of(kept, xi);
    f.tau.u.push_back(normalized_mean(ph));
    f.certificate.push_back(arc_width(ph));
  }
  return f;
}

FractalVerdict verify_fractal(const FreqGroup& group, const std::vector<std::int64_t>& h,
                              double tail_fraction, std::optional<double> tolerance) {
  if (h.size() < 2) throw DomainError("verify_fractal: need at least two entries");
  const auto tail = tail_of(h, tail_fraction);
  FractalVerdict v;
  const std::int64_t N = group.modulus();
  v.tau.modulus = N;
  v.tau.c = mod_pos(tail.back(), N);
  for (auto t : tail) {
    if (mod_pos(t, N) != v.tau.c) v.fractal = false;
  }
  const std::size_t half = tail.size() / 2;
  const std::vector<std::int64_t> first(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<std::int64_t> second(tail.begin() + static_cast<std::ptrdiff_t>(half), tail.end());
  for (double xi : group.xi()) {
    const auto ph = phases_of(tail, xi);
    v.diameters.push_back(chord_diameter(ph));
    v.arc_widths.push_back(arc_width(ph));
    v.first_half.push_back(chord_diameter(phases_of(first, xi)));
    v.second_half.push_back(chord_diameter(phases_of(second, xi)));
    v.tau.u.push_back(normalized_mean(ph));
    if (tolerance) {
      if (v.arc_widths.back() > *tolerance) v.fractal = false;
    } else {
      const double d1 = v.first_half.back(), d2 = v.second_half.back();
      const bool settled = d1 <= 1e-14 && d2 <= 1e-14;
      if (!settled && !(d2 < d1)) v.fractal = false;
    }
  }
  return v;
}

}  // namespace apdet
