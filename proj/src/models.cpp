#include "apdet/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "apdet/errors.hpp"

namespace apdet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxCircleSamples = 1 << 20;

std::int64_t mod_pos(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

cplx circle_point(int i, int S) { return std::polar(1.0, kTwoPi * static_cast<double>(i) / S); }

std::vector<cplx> det_samples(const MatrixSymbol& a, int S) {
  std::vector<cplx> d(static_cast<std::size_t>(S));
  for (int i = 0; i < S; ++i) d[i] = symbol_eval(a, circle_point(i, S)).determinant();
  return d;
}

// Continuous logarithm along the sampled circle, starting at the principal
// value; the last entry is the value after one full turn.
std::vector<cplx> unwrapped_log(const std::vector<cplx>& d) {
  double min_abs = std::numeric_limits<double>::infinity();
  for (const auto& v : d) min_abs = std::min(min_abs, std::abs(v));
  if (!(min_abs > 1e-10)) {
    throw DomainError("symbol determinant vanishes on the circle (min |det a| = " +
                      std::to_string(min_abs) + ")");
  }
  std::vector<cplx> L(d.size() + 1);
  L[0] = std::log(d[0]);
  for (std::size_t i = 1; i <= d.size(); ++i) {
    const cplx p = std::log(d[i % d.size()]);
    const double turns = std::round((L[i - 1].imag() + std::arg(d[i % d.size()] / d[i - 1]) - p.imag()) / kTwoPi);
    L[i] = p + cplx{0.0, kTwoPi * turns};
  }
  return L;
}

std::int64_t winding_at(const MatrixSymbol& a, int S) {
  const auto L = unwrapped_log(det_samples(a, S));
  return std::llround((L.back() - L.front()).imag() / kTwoPi);
}

}  // namespace

MatrixSymbol MatrixSymbol::scalar(const std::map<std::int64_t, cplx>& coeffs) {
  MatrixSymbol a;
  for (const auto& [k, c] : coeffs) a.fourier[k] = CMatrix::Constant(1, 1, c);
  return a;
}

std::int64_t MatrixSymbol::band() const {
  std::int64_t b = 0;
  for (const auto& [k, m] : fourier) b = std::max(b, k < 0 ? -k : k);
  return b;
}

void MatrixSymbol::check() const {
  if (N < 1) throw DimensionError("MatrixSymbol: block size must be >= 1");
  for (const auto& [k, m] : fourier) {
    if (m.rows() != N || m.cols() != N) {
      throw DimensionError("MatrixSymbol: coefficient " + std::to_string(k) + " is not " +
                           std::to_string(N) + "x" + std::to_string(N));
    }
  }
}

CMatrix symbol_eval(const MatrixSymbol& a, cplx t) {
  a.check();
  if (std::abs(std::abs(t) - 1.0) > 1e-12) throw DomainError("symbol_eval: |t| must be 1");
  CMatrix s = CMatrix::Zero(a.N, a.N);
  for (const auto& [k, m] : a.fourier) s += m * std::pow(t, static_cast<int>(k));
  return s;
}

std::int64_t winding_number(const MatrixSymbol& a, int samples) {
  if (samples < 8) throw DomainError("winding_number: need at least 8 samples");
  std::int64_t prev = winding_at(a, samples);
  for (int S = samples * 2; S <= kMaxCircleSamples; S *= 2) {
    const std::int64_t w = winding_at(a, S);
    if (w == prev) return w;
    prev = w;
  }
  throw DomainError("winding_number: count did not stabilize under sample doubling");
}

cplx log_det_G(const MatrixSymbol& a, int samples) {
  const std::int64_t w = winding_number(a, samples);
  if (w != 0) throw DomainError("log_det_G: winding number is " + std::to_string(w) + ", not 0");
  auto mean_log = [&](int S) {
    const auto L = unwrapped_log(det_samples(a, S));
    // compensated sum
    cplx s{}, comp{};
    for (int i = 0; i < S; ++i) {
      const cplx y = L[i] - comp;
      const cplx t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    return s / static_cast<double>(S);
  };
  cplx prev = mean_log(samples);
  for (int S = samples * 2; S <= kMaxCircleSamples; S *= 2) {
    const cplx cur = mean_log(S);
    if (std::abs(cur - prev) <= 1e-13 * (1.0 + std::abs(cur))) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  return std::exp(prev / static_cast<double>(a.N));
}

ScalarLogFactorization scalar_log_factorize(const MatrixSymbol& a, int K, double tol) {
  a.check();
  if (a.N != 1) throw DimensionError("scalar_log_factorize: requires a scalar symbol");
  if (K < 1) throw DomainError("scalar_log_factorize: K must be >= 1");
  const std::int64_t w = winding_number(a);
  if (w != 0) throw DomainError("scalar_log_factorize: winding number is " + std::to_string(w));

  int S = 4096;
  while (S < 8 * K) S *= 2;
  const auto L = unwrapped_log(det_samples(a, S));
  ScalarLogFactorization out;
  double bmax = 0.0;
  std::map<std::int64_t, cplx> raw;
  for (int k = -K; k <= K; ++k) {
    cplx s{};
    for (int i = 0; i < S; ++i) s += L[i] * std::conj(std::pow(circle_point(i, S), k));
    raw[k] = s / static_cast<double>(S);
    bmax = std::max(bmax, std::abs(raw[k]));
  }
  for (const auto& [k, c] : raw) {
    if (std::abs(c) > 1e-17 * bmax) out.log_coeffs[k] = c;
  }

  // Reconstruction on a grid offset from the sampling grid.
  const int C = 2 * S;
  for (int i = 0; i < C; ++i) {
    const cplx t = std::polar(1.0, kTwoPi * (i + 0.5) / C);
    cplx b{};
    for (const auto& [k, c] : out.log_coeffs) b += c * std::pow(t, static_cast<int>(k));
    out.residual = std::max(out.residual, std::abs(std::exp(b) - symbol_eval(a, t)(0, 0)));
  }

  SupportCaps caps;
  caps.max_offset = std::max<std::int64_t>(4096, 64 * K);
  APOperator B(FreqGroup::trivial(), WeightSpec::constant(), AlphaPair{}, caps);
  for (const auto& [k, c] : out.log_coeffs) B.add(k, B.group().zero(), c);
  out.factorization = ExpFactorization::build({B}, tol);
  return out;
}

APOperator block_to_apop(const MatrixSymbol& a, WeightSpec weight, AlphaPair alpha, SupportCaps caps) {
  a.check();
  const std::int64_t N = a.N;
  APOperator A(FreqGroup::cyclic(N), weight, alpha, caps);
  if (a.fourier.empty()) return A;
  const std::int64_t kmin = a.fourier.begin()->first;
  const std::int64_t kmax = a.fourier.rbegin()->first;
  std::vector<cplx> diag(static_cast<std::size_t>(N));
  for (std::int64_t d = N * kmin - (N - 1); d <= N * kmax + (N - 1); ++d) {
    double dmax = 0.0;
    for (std::int64_t s = 0; s < N; ++s) {
      const std::int64_t t = mod_pos(s - d, N);
      const std::int64_t K = (d - s + t) / N;
      auto it = a.fourier.find(K);
      diag[s] = it == a.fourier.end() ? cplx{} : it->second(s, t);
      dmax = std::max(dmax, std::abs(diag[s]));
    }
    if (dmax == 0.0) continue;
    // exact DFT: diag(j) = sum_rho c_rho exp(2 pi i rho j / N)
    for (std::int64_t rho = 0; rho < N; ++rho) {
      cplx c{};
      for (std::int64_t s = 0; s < N; ++s) {
        c += diag[s] * turn_unit(-static_cast<double>(mod_pos(rho * s, N)) / N);
      }
      c /= static_cast<double>(N);
      if (std::abs(c) > 1e-15 * dmax) A.add(d, A.group().residue(rho), c);
    }
  }
  return A;
}

APOperator build_mathieu(double b, double xi, double delta, AlphaPair alpha) {
  if (!(xi > 0.0 && xi < 1.0)) throw DomainError("build_mathieu: xi must lie in (0,1)");
  const FreqGroup group({xi}, 1);
  APOperator M(group, WeightSpec::power(1.0), alpha);
  M.add(1, group.zero(), 1.0);
  M.add(-1, group.zero(), 1.0);
  if (b != 0.0) {
    const cplx ph = turn_unit(delta);
    M.add(0, group.generator(0), 0.5 * b * ph);
    M.add(0, group.negate(group.generator(0)), 0.5 * b * std::conj(ph));
  }
  return M;
}

ShiftedFactorization factorize_shifted_mathieu(const APOperator& M, cplx lambda, double tol) {
  const double norm = op_norm(M);
  if (!(norm < std::abs(lambda))) {
    throw DomainError("factorize_shifted_mathieu: requires op_norm(M) < |lambda| (norm " +
                      std::to_string(norm) + ", |lambda| " + std::to_string(std::abs(lambda)) + ")");
  }
  ErrorBudget budget;
  const APOperator A1 = M.identity_like() * std::log(cplx{} - lambda);
  const APOperator A2 = log_shifted(M, lambda, tol, budget);
  ShiftedFactorization out;
  out.factorization = ExpFactorization::build({A1, A2}, tol);
  out.factorization.budget_used += budget.accumulated();
  out.defect = op_norm(out.factorization.product - (M - M.identity_like() * lambda));
  // log_shifted and op_exp truncations, magnified by |lambda| e^{|A_2|}
  out.bound = 10.0 * std::abs(lambda) * std::exp(op_norm(A2)) *
                  (2.0 * tol + out.factorization.budget_used) +
              1e-12 * std::abs(lambda);
  if (!(out.defect <= out.bound)) {
    throw DomainError("factorize_shifted_mathieu: product defect " + std::to_string(out.defect) +
                      " exceeds " + std::to_string(out.bound));
  }
  return out;
}

}  // namespace apdet
