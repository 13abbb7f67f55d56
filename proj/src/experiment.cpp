#include "apdet/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

#include "apdet/errors.hpp"
#include "apdet/fractal.hpp"
#include "apdet/limits.hpp"
#include "apdet/models.hpp"

#ifndef APDET_VERSION
#define APDET_VERSION "0.0.0"
#endif

namespace apdet {

using nlohmann::json;

const char* version() { return APDET_VERSION; }

namespace {

// ---- config parsing ------------------------------------------------------

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw DomainError(where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "golden") return (std::sqrt(5.0) - 1.0) / 2.0;
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

double num_or(const json& j, const char* key, double dflt, const std::string& where) {
  return j.contains(key) ? num(j.at(key), where + "." + key) : dflt;
}

std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<std::int64_t>();
}

std::int64_t int_or(const json& j, const char* key, std::int64_t dflt, const std::string& where) {
  return j.contains(key) ? integer(j.at(key), where + "." + key) : dflt;
}

std::vector<std::int64_t> int_list(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of integers");
  std::vector<std::int64_t> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(integer(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

cplx complex_of(const json& j, const std::string& where) {
  if (j.is_array()) {
    if (j.size() != 2) bad(where, "complex values are [re, im]");
    return {num(j[0], where), num(j[1], where)};
  }
  return {num(j, where), 0.0};
}

FreqGroup parse_group(const json& j, const std::string& where) {
  std::vector<double> xi;
  if (j.contains("xi")) {
    const json& x = j.at("xi");
    if (!x.is_array()) bad(where + ".xi", "expected an array");
    for (const auto& v : x) {
      const double f = num(v, where + ".xi");
      if (!(f > 0.0 && f < 1.0)) bad(where + ".xi", "frequencies must lie in (0,1)");
      xi.push_back(f);
    }
  }
  const std::int64_t N = int_or(j, "modulus", 1, where);
  if (N < 1) bad(where + ".modulus", "must be >= 1");
  return FreqGroup(xi, N);
}

WeightSpec parse_weight(const json& j, const std::string& where) {
  const std::string kind = j.value("kind", std::string("constant"));
  if (kind == "constant") return WeightSpec::constant();
  if (kind == "power") {
    const double omega = num_or(j, "omega", 1.0, where);
    if (omega < 0.0) bad(where + ".omega", "must be >= 0");
    return WeightSpec::power(omega);
  }
  if (kind == "rational_denominator") return WeightSpec::rational_denominator();
  bad(where + ".kind", "unknown weight kind '" + kind + "'");
}

AlphaPair parse_alpha(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where, "expected [alpha1, alpha2]");
  AlphaPair a{num(j[0], where), num(j[1], where)};
  if (a.first < 0.0 || a.second < 0.0) bad(where, "exponents must be >= 0");
  return a;
}

GroupElement parse_element(const FreqGroup& g, const json& t, const std::string& where) {
  std::vector<std::int64_t> alpha = t.contains("alpha") ? int_list(t.at("alpha"), where + ".alpha")
                                                        : std::vector<std::int64_t>(g.rank(), 0);
  if (alpha.size() != g.rank()) bad(where + ".alpha", "length must equal the group rank");
  const std::int64_t rho = int_or(t, "rho", 0, where);
  if (rho < 0 || rho >= g.modulus()) bad(where + ".rho", "must lie in [0, modulus)");
  return g.element(alpha, rho);
}

APSeq parse_seq(const FreqGroup& g, const json& j, const std::string& where) {
  const json& terms = field(j, "terms", where);
  if (!terms.is_array()) bad(where + ".terms", "expected an array");
  APSeq a(g);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string w = where + ".terms[" + std::to_string(i) + "]";
    a.add(parse_element(g, terms[i], w), complex_of(field(terms[i], "c", w), w + ".c"));
  }
  return a;
}

MatrixSymbol parse_symbol(const json& j, const std::string& where) {
  MatrixSymbol a;
  a.N = int_or(j, "N", 1, where);
  if (a.N < 1) bad(where + ".N", "must be >= 1");
  const json& coeffs = field(j, "coeffs", where);
  if (!coeffs.is_array()) bad(where + ".coeffs", "expected an array");
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const std::string w = where + ".coeffs[" + std::to_string(i) + "]";
    const std::int64_t k = integer(field(coeffs[i], "k", w), w + ".k");
    const json& m = field(coeffs[i], "matrix", w);
    CMatrix M = CMatrix::Zero(a.N, a.N);
    if (a.N == 1 && !m.is_array()) {
      M(0, 0) = complex_of(m, w + ".matrix");
    } else if (a.N == 1 && m.is_array() && m.size() == 2 && !m[0].is_array()) {
      M(0, 0) = complex_of(m, w + ".matrix");
    } else {
      if (!m.is_array() || static_cast<std::int64_t>(m.size()) != a.N) bad(w + ".matrix", "expected N rows");
      for (std::int64_t r = 0; r < a.N; ++r) {
        if (!m[r].is_array() || static_cast<std::int64_t>(m[r].size()) != a.N) {
          bad(w + ".matrix", "expected N entries per row");
        }
        for (std::int64_t c = 0; c < a.N; ++c) M(r, c) = complex_of(m[r][c], w + ".matrix");
      }
    }
    if (a.fourier.count(k)) a.fourier[k] += M;
    else a.fourier[k] = M;
  }
  return a;
}

LadderOptions parse_ladder(const json& config, bool force) {
  LadderOptions o;
  if (config.contains("ladder")) {
    const json& j = config.at("ladder");
    o.tol = num_or(j, "tol", o.tol, "ladder");
    o.start = int_or(j, "start", o.start, "ladder");
    o.cap = int_or(j, "cap", o.cap, "ladder");
    o.pad_factor = int_or(j, "pad_factor", o.pad_factor, "ladder");
    o.exp_tol = num_or(j, "exp_tol", o.exp_tol, "ladder");
    if (o.start < 1 || o.cap < o.start) bad("ladder", "need 1 <= start <= cap");
    if (o.pad_factor < 1) bad("ladder.pad_factor", "must be >= 1");
  }
  o.force = force;
  return o;
}

// An operator description, parsed without doing any heavy computation.
struct OperatorSpec {
  std::string type;
  json raw;
  FreqGroup group;
  WeightSpec weight;
  AlphaPair alpha;
  double tol = 1e-13;
  std::vector<APOperator> factors;  // "factors"
  APOperator mathieu;               // "mathieu"
  cplx lambda{};
  MatrixSymbol symbol;              // "scalar_symbol"
  int K = 64;
  std::vector<MatrixSymbol> blocks; // "block"
};

OperatorSpec parse_operator(const json& j, const std::string& where) {
  OperatorSpec s;
  s.raw = j;
  s.type = j.value("type", std::string());
  s.tol = num_or(j, "tol", s.tol, where);
  if (j.contains("alpha")) s.alpha = parse_alpha(j.at("alpha"), where + ".alpha");
  if (s.type == "factors") {
    s.group = parse_group(field(j, "group", where), where + ".group");
    if (j.contains("weight")) s.weight = parse_weight(j.at("weight"), where + ".weight");
    const json& fs = field(j, "factors", where);
    if (!fs.is_array() || fs.empty()) bad(where + ".factors", "expected a nonempty array");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const std::string w = where + ".factors[" + std::to_string(i) + "]";
      if (!fs[i].is_array()) bad(w, "expected an array of terms");
      APOperator A(s.group, s.weight, s.alpha);
      for (std::size_t t = 0; t < fs[i].size(); ++t) {
        const std::string wt = w + "[" + std::to_string(t) + "]";
        A.add(integer(field(fs[i][t], "offset", wt), wt + ".offset"), parse_element(s.group, fs[i][t], wt),
              complex_of(field(fs[i][t], "c", wt), wt + ".c"));
      }
      s.factors.push_back(A);
    }
  } else if (s.type == "mathieu") {
    const double xi = num(field(j, "xi", where), where + ".xi");
    if (!(xi > 0.0 && xi < 1.0)) bad(where + ".xi", "must lie in (0,1)");
    s.mathieu = build_mathieu(num(field(j, "b", where), where + ".b"), xi,
                              num_or(j, "delta", 0.0, where), s.alpha);
    s.group = s.mathieu.group();
    s.weight = s.mathieu.weight();
    s.lambda = complex_of(field(j, "lambda", where), where + ".lambda");
  } else if (s.type == "scalar_symbol") {
    s.symbol = parse_symbol(field(j, "symbol", where), where + ".symbol");
    if (s.symbol.N != 1) bad(where + ".symbol.N", "must be 1");
    s.K = static_cast<int>(int_or(j, "K", 64, where));
    if (s.K < 1) bad(where + ".K", "must be >= 1");
    s.group = FreqGroup::trivial();
  } else if (s.type == "block") {
    const json& fs = field(j, "factors", where);
    if (!fs.is_array() || fs.empty()) bad(where + ".factors", "expected a nonempty array");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      s.blocks.push_back(parse_symbol(fs[i], where + ".factors[" + std::to_string(i) + "]"));
      if (s.blocks.back().N != s.blocks.front().N) bad(where + ".factors", "block sizes differ");
    }
    s.group = FreqGroup::cyclic(s.blocks.front().N);
  } else {
    bad(where + ".type", "expected one of factors, mathieu, scalar_symbol, block");
  }
  if (!(s.tol > 0.0)) bad(where + ".tol", "must be > 0");
  return s;
}

struct BuiltOperator {
  ExpFactorization F;
  std::vector<std::string> notes;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(cplx v) { return fmt(v.real()) + (v.imag() < 0 ? "" : "+") + fmt(v.imag()) + "i"; }

BuiltOperator build_operator(const OperatorSpec& s) {
  BuiltOperator b;
  if (s.type == "factors") {
    b.F = ExpFactorization::build(s.factors, s.tol);
  } else if (s.type == "mathieu") {
    auto sf = factorize_shifted_mathieu(s.mathieu, s.lambda, s.tol);
    b.F = std::move(sf.factorization);
    b.notes.push_back("op_norm(M): " + fmt(op_norm(s.mathieu)));
    b.notes.push_back("factorization_defect: " + fmt(sf.defect) + " (bound " + fmt(sf.bound) + ")");
  } else if (s.type == "scalar_symbol") {
    auto sl = scalar_log_factorize(s.symbol, s.K, s.tol);
    b.F = std::move(sl.factorization);
    b.notes.push_back("log_reconstruction_residual: " + fmt(sl.residual));
  } else {
    std::vector<APOperator> fs;
    for (const auto& m : s.blocks) fs.push_back(block_to_apop(m, WeightSpec::constant(), s.alpha));
    b.F = ExpFactorization::build(fs, s.tol);
  }
  const Growth g = growth_G(b.F);
  b.notes.push_back("G: " + fmt(g.G));
  b.notes.push_back("error_budget_used: " + fmt(b.F.budget_used));
  b.notes.push_back("inverse_defect: " + fmt(b.F.inverse_defect));
  return b;
}

FractalSeq parse_fractal(const FreqGroup& g, const json& j, const std::string& where) {
  const std::string type = j.value("type", std::string());
  const std::size_t L = static_cast<std::size_t>(int_or(j, "length", 12, where));
  const std::int64_t k0 = int_or(j, "k0", 0, where);
  if (type == "constant") return constant_fractal(g, k0, L);
  if (type == "cf") return fractal_from_cf(g, int_or(j, "residue", 0, where), k0, L);
  if (type == "arithmetic") {
    if (j.contains("step")) return arithmetic_fractal(g, k0, L, integer(j.at("step"), where + ".step"));
    return arithmetic_fractal(g, k0, L);
  }
  if (type == "explicit") {
    FractalSeq f;
    f.values = int_list(field(j, "values", where), where + ".values");
    const auto v = verify_fractal(g, f.values, 0.25);
    f.tau = v.tau;
    f.certificate = v.arc_widths;
    return f;
  }
  bad(where + ".type", "expected one of constant, cf, arithmetic, explicit");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
  return s.empty() ? "none" : s;
}

Normalization parse_norm(const json& config) {
  const std::string n = config.value("normalization", std::string("g_power"));
  if (n == "g_power") return Normalization::g_power;
  if (n == "exp_trace") return Normalization::exp_trace;
  bad("normalization", "expected g_power or exp_trace");
}

// ---- runners --------------------------------------------------------------

const std::vector<std::string> kRatioColumns = {"n1",       "n2",       "gap",           "logdet_re",
                                                "logdet_im", "ratio_re", "ratio_im",      "theta_prod_re",
                                                "theta_prod_im", "residual_abs", "flag"};

std::vector<std::string> ratio_row(std::int64_t n1, std::int64_t n2, const LogDet& ld, cplx ratio,
                                   std::optional<cplx> theta, double residual, std::string flag) {
  if (!std::isfinite(ratio.real()) || !std::isfinite(ratio.imag()) || !std::isfinite(residual)) {
    ratio = 0.0;
    residual = 0.0;
    flag = "nonfinite";
  }
  cplx log = ld.zero ? cplx{} : ld.log;
  if (!std::isfinite(log.real()) || !std::isfinite(log.imag())) log = 0.0;
  const cplx t = theta.value_or(cplx{});
  return {std::to_string(n1), std::to_string(n2), std::to_string(n2 - n1), fmt(log.real()),
          fmt(log.imag()),    fmt(ratio.real()),  fmt(ratio.imag()),       fmt(t.real()),
          fmt(t.imag()),      fmt(residual),      flag};
}

// Rows in chunks, so a failure keeps everything computed before it.
void flow_rows(ExperimentResult& res, const ExpFactorization& F, const std::vector<Window>& windows,
               Normalization norm, std::optional<cplx> theta, const std::string& extra_flag,
               unsigned threads) {
  const std::size_t chunk = std::max<std::size_t>(8, 4 * threads);
  for (std::size_t s = 0; s < windows.size(); s += chunk) {
    const std::vector<Window> part(windows.begin() + s, windows.begin() + std::min(windows.size(), s + chunk));
    const auto rows = ratio_flow(F, part, norm, theta, threads);
    for (const auto& r : rows) {
      res.rows.push_back(ratio_row(r.n1, r.n2, r.logdet, r.ratio, theta, theta ? r.residual : 0.0,
                                   r.flag.empty() ? extra_flag : r.flag));
    }
  }
}

void run_trace(ExperimentResult& res, const json& c, const RunOptions&) {
  const FreqGroup g = parse_group(field(c, "group", ""), "group");
  const APSeq a = parse_seq(g, field(c, "sequence", ""), "sequence");
  const FractalSeq h1 = parse_fractal(g, field(c, "h1", ""), "h1");
  const FractalSeq h2 = parse_fractal(g, field(c, "h2", ""), "h2");
  res.header.push_back("certificate_h1: " + join(h1.certificate));
  res.header.push_back("certificate_h2: " + join(h2.certificate));
  res.header.push_back("tau1: " + h1.tau.to_string());
  res.header.push_back("tau2: " + h2.tau.to_string());
  res.columns = {"n", "h1", "h2", "sum_re", "sum_im", "predicted_re", "predicted_im", "residual_abs"};
  const cplx f1 = f_tau(a, h1.tau), f2 = f_tau(a, h2.tau), mean = seq_mean(a);
  const std::size_t n = std::min(h1.values.size(), h2.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t a1 = h1.values[i], a2 = h2.values[i];
    const cplx sum = window_sum(a, a1, a2);
    const cplx pred = static_cast<double>(a2 - a1) * mean + f1 - f2;
    res.rows.push_back({std::to_string(i), std::to_string(a1), std::to_string(a2), fmt(sum.real()),
                        fmt(sum.imag()), fmt(pred.real()), fmt(pred.imag()), fmt(std::abs(sum - pred))});
  }
}

// Theta_1(tau1) Theta_2(tau2); flags when a ladder stops at its cap.
std::pair<cplx, bool> theta_product(const ExpFactorization& F, const Character& t1, const Character& t2,
                                    const LadderOptions& o, std::vector<std::string>& header) {
  const auto a = theta1(F, t1, o);
  const auto b = theta2(F, t2, o);
  header.push_back("theta1: " + fmt(a.value) + " at M=" + std::to_string(a.sizes.back()) +
                   (a.converged ? "" : " (not converged)"));
  header.push_back("theta2: " + fmt(b.value) + " at M=" + std::to_string(b.sizes.back()) +
                   (b.converged ? "" : " (not converged)"));
  return {a.value * b.value, a.converged && b.converged};
}

void run_ratio_like(ExperimentResult& res, const json& c, const RunOptions& opts, const OperatorSpec& spec) {
  const BuiltOperator op = build_operator(spec);
  res.header.insert(res.header.end(), op.notes.begin(), op.notes.end());
  const FreqGroup& g = op.F.product.group();
  json h1j = c.contains("h1") ? c.at("h1") : json{{"type", "constant"}, {"k0", 0}, {"length", 12}};
  json h2j = c.contains("h2") ? c.at("h2") : json{{"type", "cf"}, {"residue", 0}, {"length", 12}};
  const FractalSeq h1 = parse_fractal(g, h1j, "h1");
  const FractalSeq h2 = parse_fractal(g, h2j, "h2");
  res.header.push_back("certificate_h1: " + join(h1.certificate));
  res.header.push_back("certificate_h2: " + join(h2.certificate));
  res.header.push_back("tau1: " + h1.tau.to_string());
  res.header.push_back("tau2: " + h2.tau.to_string());
  const Normalization norm = parse_norm(c);
  const LadderOptions lo = parse_ladder(c, opts.force);
  res.columns = kRatioColumns;

  std::optional<cplx> theta;
  std::string flag;
  if (c.value("theta", true)) {
    auto [p, ok] = theta_product(op.F, h1.tau, h2.tau, lo, res.header);
    if (norm == Normalization::exp_trace) p *= std::exp(-(f_tau(op.F.diag_sum, h1.tau) - f_tau(op.F.diag_sum, h2.tau)));
    theta = p;
    if (!ok) {
      flag = "ladder";
      res.status = 2;
      res.failure = "theta ladder reached its cap without converging";
    }
  }
  std::vector<Window> windows;
  for (std::size_t i = 0; i < std::min(h1.values.size(), h2.values.size()); ++i) {
    windows.push_back({h1.values[i], h2.values[i]});
  }
  flow_rows(res, op.F, windows, norm, theta, flag, opts.threads);
}

void run_uniform(ExperimentResult& res, const json& c, const RunOptions& opts) {
  const OperatorSpec spec = parse_operator(field(c, "operator", ""), "operator");
  const BuiltOperator op = build_operator(spec);
  res.header.insert(res.header.end(), op.notes.begin(), op.notes.end());
  std::vector<std::int64_t> gaps, offsets;
  if (c.contains("gaps")) {
    gaps = int_list(c.at("gaps"), "gaps");
  } else {
    const std::int64_t lo = integer(field(c, "min_gap", ""), "min_gap"), hi = integer(field(c, "max_gap", ""), "max_gap");
    if (lo < 1 || hi < lo) bad("min_gap", "need 1 <= min_gap <= max_gap");
    for (std::int64_t x = lo; x <= hi; x *= 2) gaps.push_back(x);
  }
  if (c.contains("offsets")) {
    offsets = int_list(c.at("offsets"), "offsets");
  } else {
    const auto r = int_list(field(c, "offset_range", ""), "offset_range");
    if (r.size() != 2 || r[1] < r[0]) bad("offset_range", "expected [first, last]");
    for (std::int64_t x = r[0]; x <= r[1]; ++x) offsets.push_back(x);
  }
  const LadderOptions lo = parse_ladder(c, opts.force);
  res.columns = kRatioColumns;
  const SweepResult sw = uniform_sweep(op.F, gaps, offsets, lo, opts.threads);
  for (const auto& [gap, r] : sw.max_residual_by_gap) {
    res.header.push_back("max_residual gap=" + std::to_string(gap) + ": " + fmt(r));
  }
  for (const auto& r : sw.rows) {
    res.rows.push_back(ratio_row(r.n1, r.n2, r.logdet, r.ratio, r.theta_prod, r.residual, r.flag));
    if (r.flag == "ladder") {
      res.status = 2;
      res.failure = "theta ladder reached its cap without converging";
    }
  }
}

Character parse_character(const FreqGroup& g, const json& j, const std::string& where) {
  if (j.contains("shift")) return char_of_shift(g, integer(j.at("shift"), where + ".shift"));
  Character t;
  t.modulus = g.modulus();
  t.c = int_or(j, "c", 0, where);
  if (j.contains("u")) {
    for (const auto& v : j.at("u")) t.u.push_back(complex_of(v, where + ".u"));
  } else if (j.contains("turns")) {
    for (const auto& v : j.at("turns")) t.u.push_back(std::polar(1.0, 2.0 * std::numbers::pi * num(v, where)));
  }
  check_character(g, t);
  return t;
}

void run_theta(ExperimentResult& res, const json& c, const RunOptions& opts) {
  const OperatorSpec spec = parse_operator(field(c, "operator", ""), "operator");
  const BuiltOperator op = build_operator(spec);
  res.header.insert(res.header.end(), op.notes.begin(), op.notes.end());
  const FreqGroup& g = op.F.product.group();
  const LadderOptions lo = parse_ladder(c, opts.force);
  std::vector<std::string> forms = {"theta1", "theta2"};
  if (c.contains("forms")) forms = c.at("forms").get<std::vector<std::string>>();
  json chars = c.value("characters", json::array({json{{"shift", 0}}}));
  res.columns = {"tau_desc", "M", "value_re", "value_im", "delta", "converged"};
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const Character tau = parse_character(g, chars[i], "characters[" + std::to_string(i) + "]");
    for (const auto& form : forms) {
      LadderResult r;
      if (form == "theta1") r = theta1(op.F, tau, lo);
      else if (form == "theta2") r = theta2(op.F, tau, lo);
      else if (form == "theta2_tilde") r = theta2_tilde(op.F, tau, lo);
      else bad("forms", "unknown form '" + form + "'");
      for (std::size_t k = 0; k < r.sizes.size(); ++k) {
        res.rows.push_back({form + " " + tau.to_string(), std::to_string(r.sizes[k]), fmt(r.values[k].real()),
                            fmt(r.values[k].imag()), k == 0 ? "" : fmt(r.deltas[k - 1]),
                            k + 1 == r.sizes.size() && r.converged ? "1" : "0"});
      }
      if (!r.converged) {
        res.status = 2;
        res.failure = "theta ladder reached its cap without converging";
      }
    }
  }
}

void run_szego_block(ExperimentResult& res, const json& c, const RunOptions& opts) {
  const LadderOptions lo = parse_ladder(c, opts.force);
  std::vector<std::int64_t> k1s = c.contains("k1") ? int_list(c.at("k1"), "k1") : std::vector<std::int64_t>{0};
  std::vector<std::int64_t> k2s = c.contains("k2") ? int_list(c.at("k2"), "k2") : std::vector<std::int64_t>{0};
  const std::vector<std::int64_t> ms = int_list(field(c, "m", ""), "m");
  res.columns = kRatioColumns;

  std::optional<ExpFactorization> F;
  APOperator A;
  cplx G;
  std::int64_t N = 1;
  if (c.contains("factors")) {
    OperatorSpec spec = parse_operator(json{{"type", "block"}, {"factors", c.at("factors")}}, "factors");
    N = spec.blocks.front().N;
    BuiltOperator op = build_operator(spec);
    res.header.insert(res.header.end(), op.notes.begin(), op.notes.end());
    F = std::move(op.F);
    A = F->product;
    G = growth_G(*F).G;
  } else {
    const MatrixSymbol a = parse_symbol(field(c, "symbol", ""), "symbol");
    N = a.N;
    A = block_to_apop(a);
    G = log_det_G(a);
    res.header.push_back("winding_number: " + std::to_string(winding_number(a)));
    res.header.push_back("G: " + fmt(G));
  }
  // ratio_flow needs a factorization; with a bare symbol the identity
  // factor list is never used beyond its product.
  ExpFactorization bare;
  if (!F) {
    bare.product = A;
    bare.diag_sum = APSeq::constant(A.group(), std::log(G));
  }
  const ExpFactorization& use = F ? *F : bare;

  for (auto k1 : k1s) {
    for (auto k2 : k2s) {
      std::optional<cplx> theta;
      std::string flag = F ? "" : "no-theta";
      if (F) {
        auto [p, ok] = theta_product(*F, char_of_shift(A.group(), k1), char_of_shift(A.group(), k2), lo, res.header);
        theta = p;
        if (!ok) {
          flag = "ladder";
          res.status = 2;
          res.failure = "theta ladder reached its cap without converging";
        }
      }
      std::vector<Window> windows;
      for (auto m : ms) windows.push_back({k1, m * N + k2});
      flow_rows(res, use, windows, Normalization::g_power, theta, flag, opts.threads);
    }
  }
}

void run_audit(ExperimentResult& res, const json& c, const RunOptions& opts) {
  const FreqGroup g = parse_group(field(c, "group", ""), "group");
  const WeightSpec w = c.contains("weight") ? parse_weight(c.at("weight"), "weight") : WeightSpec::power(1.0);
  const std::int64_t Q = integer(field(c, "Q", ""), "Q");
  if (Q < 1) bad("Q", "must be >= 1");
  res.header.push_back("weight: " + w.to_string());
  res.columns = {"Q", "C_est", "argmin_alpha", "argmin_rho"};
  const CompatibilityAudit a = compatibility_audit(g, w, Q, opts.threads);
  std::string alpha;
  for (std::size_t i = 0; i < a.argmin.alpha.size(); ++i) alpha += (i ? ";" : "") + std::to_string(a.argmin.alpha[i]);
  res.rows.push_back({std::to_string(Q), fmt(a.c_est), alpha, std::to_string(a.argmin.rho)});
}

void collect_tolerances(const json& j, const std::string& path, std::vector<Finding>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const std::string p = path.empty() ? k : path + "." + k;
      const bool is_tol = k == "tol" || (k.size() > 4 && k.substr(k.size() - 4) == "_tol");
      if (is_tol && !(it->is_number() && it->get<double>() > 0.0)) {
        out.push_back({Finding::Severity::error, p + ": tolerances must be numbers > 0"});
      }
      collect_tolerances(*it, p, out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) collect_tolerances(j[i], path + "[" + std::to_string(i) + "]", out);
  }
}

void check_alpha(const json& j, const std::string& where, std::vector<Finding>& out) {
  if (!j.contains("alpha")) return;
  const AlphaPair a = parse_alpha(j.at("alpha"), where + ".alpha");
  if (std::abs(a.first + a.second - 1.0) > 1e-12) {
    out.push_back({Finding::Severity::warning,
                   where + ".alpha: alpha1 + alpha2 = " + fmt(a.first + a.second) +
                       " != 1; the exponential-factorization results assume alpha1 + alpha2 = 1"});
  }
}

void check_compatibility(const FreqGroup& g, const WeightSpec& w, const std::string& where,
                         std::vector<Finding>& out) {
  if (g.rank() == 0 || g.rank() > 2) return;
  const CompatibilityAudit a = compatibility_audit(g, w, g.rank() == 1 ? 10000 : 100);
  if (a.c_est < 1e-3) {
    out.push_back({Finding::Severity::warning, where + ": compatibility audit estimate " + fmt(a.c_est) +
                                                   " is small (weight " + w.to_string() + ")"});
  }
}

}  // namespace

bool has_errors(const std::vector<Finding>& findings) {
  for (const auto& f : findings) {
    if (f.severity == Finding::Severity::error) return true;
  }
  return false;
}

std::vector<Finding> validate(const std::string& kind, const json& c) {
  std::vector<Finding> out;
  auto error = [&](const std::string& m) { out.push_back({Finding::Severity::error, m}); };
  if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end()) {
    error("unknown experiment kind '" + kind + "'");
    return out;
  }
  if (!c.is_object()) {
    error("configuration must be a JSON object");
    return out;
  }
  if (c.contains("kind") && c.at("kind") != kind) error("config kind does not match the command");
  collect_tolerances(c, "", out);
  try {
    auto operator_checks = [&](const json& oj) {
      const OperatorSpec s = parse_operator(oj, "operator");
      check_alpha(oj, "operator", out);
      if (s.type == "mathieu") {
        const double n = op_norm(s.mathieu);
        if (!(n < std::abs(s.lambda))) {
          error("operator.lambda: |lambda| = " + fmt(std::abs(s.lambda)) + " <= op_norm(M) = " + fmt(n) +
                "; the logarithm series needs |lambda| > ||M||");
        }
      }
      check_compatibility(s.group, s.weight, "operator", out);
      return s;
    };
    if (kind == "trace") {
      const FreqGroup g = parse_group(field(c, "group", ""), "group");
      parse_seq(g, field(c, "sequence", ""), "sequence");
      parse_fractal(g, field(c, "h1", ""), "h1");
      parse_fractal(g, field(c, "h2", ""), "h2");
    } else if (kind == "ratio" || kind == "uniform" || kind == "theta") {
      const OperatorSpec s = operator_checks(field(c, "operator", ""));
      parse_ladder(c, false);
      if (kind == "ratio") {
        parse_norm(c);
        if (c.contains("h1")) parse_fractal(s.group, c.at("h1"), "h1");
        if (c.contains("h2")) parse_fractal(s.group, c.at("h2"), "h2");
      }
      if (kind == "uniform" && !c.contains("gaps") && !(c.contains("min_gap") && c.contains("max_gap"))) {
        error("uniform: needs 'gaps' or 'min_gap' and 'max_gap'");
      }
      if (kind == "uniform" && !c.contains("offsets") && !c.contains("offset_range")) {
        error("uniform: needs 'offsets' or 'offset_range'");
      }
    } else if (kind == "mathieu") {
      json oj = c;
      oj["type"] = "mathieu";
      const OperatorSpec s = operator_checks(oj);
      parse_ladder(c, false);
      parse_norm(c);
      if (c.contains("h1")) parse_fractal(s.group, c.at("h1"), "h1");
      if (c.contains("h2")) parse_fractal(s.group, c.at("h2"), "h2");
    } else if (kind == "szego-block") {
      if (c.contains("factors")) {
        parse_operator(json{{"type", "block"}, {"factors", c.at("factors")}}, "factors");
      } else {
        parse_symbol(field(c, "symbol", ""), "symbol");
      }
      for (auto m : int_list(field(c, "m", ""), "m")) {
        if (m < 1) error("m: block counts must be >= 1");
      }
      parse_ladder(c, false);
    } else if (kind == "audit-weight") {
      const FreqGroup g = parse_group(field(c, "group", ""), "group");
      if (c.contains("weight")) parse_weight(c.at("weight"), "weight");
      if (integer(field(c, "Q", ""), "Q") < 1) error("Q: must be >= 1");
      (void)g;
    }
  } catch (const std::exception& e) {
    error(e.what());
  }
  return out;
}

std::uint64_t config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentResult run_experiment(const std::string& kind, const json& c, const RunOptions& opts) {
  ExperimentResult res;
  res.kind = kind;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  res.header.push_back("apdet " + std::string(version()));
  res.header.push_back("kind: " + kind);
  res.header.push_back("config_fnv1a: " + std::string(hash));
  try {
    if (kind == "trace") run_trace(res, c, opts);
    else if (kind == "ratio") run_ratio_like(res, c, opts, parse_operator(field(c, "operator", ""), "operator"));
    else if (kind == "mathieu") {
      json oj = c;
      oj["type"] = "mathieu";
      run_ratio_like(res, c, opts, parse_operator(oj, "mathieu"));
    } else if (kind == "uniform") run_uniform(res, c, opts);
    else if (kind == "theta") run_theta(res, c, opts);
    else if (kind == "szego-block") run_szego_block(res, c, opts);
    else if (kind == "audit-weight") run_audit(res, c, opts);
    else bad("kind", "unknown experiment kind '" + kind + "'");
  } catch (const DimensionError&) {
    throw;
  } catch (const Error& e) {
    res.status = 2;
    res.failure = e.what();
  }
  if (res.status != 0) res.header.push_back("failure: " + res.failure);
  return res;
}

void write_csv(const ExperimentResult& result, std::ostream& out, bool timestamp) {
  for (const auto& h : result.header) out << "# " << h << "\n";
  if (timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "# generated: " << buf << "\n";
  }
  auto cell = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (std::size_t i = 0; i < result.columns.size(); ++i) out << (i ? "," : "") << cell(result.columns[i]);
  out << "\n";
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell(row[i]);
    out << "\n";
  }
}

}  // namespace apdet
