#include "apdet/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

#include "apdet/errors.hpp"

namespace apdet {

namespace {


void check_window(std::int64_t size, const char* what) {
  if (size < 1) throw DomainError(std::string(what) + ": empty window");
  if (size > size_cap()) {
    throw CapExceeded(std::string(what) + ": window of order " + std::to_string(size) +
                      " exceeds size cap " + std::to_string(size_cap()));
  }
}

// exp(2 pi i j xi(g)) for j in [n1, n2).
std::vector<cplx> row_phases(const FreqGroup& group, const GroupElement& g, std::int64_t n1,
                             std::int64_t n2) {
  std::vector<cplx> out(static_cast<std::size_t>(n2 - n1), cplx{1.0, 0.0});
  if (g.is_zero()) return out;
  for (std::int64_t j = n1; j < n2; ++j) {
    out[static_cast<std::size_t>(j - n1)] = turn_unit(eval_phase(group, g, j));
  }
  return out;
}

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite entries");
}

}  // namespace

std::int64_t size_cap() {
  if (const char* env = std::getenv("APDET_SIZE_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return kDefaultSizeCap;
}

DenseMatrix::DenseMatrix(std::int64_t dim) : m_(Storage::Zero(dim, dim)) {}

DenseMatrix::DenseMatrix(Storage m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DimensionError("DenseMatrix must be square");
}

DenseMatrix DenseMatrix::identity(std::int64_t dim) { return DenseMatrix(Storage::Identity(dim, dim)); }

DenseMatrix DenseMatrix::operator*(const DenseMatrix& other) const {
  if (dim() != other.dim()) throw DimensionError("DenseMatrix product: order mismatch");
  Storage r(dim(), dim());
  r.noalias() = m_ * other.m_;
  return DenseMatrix(std::move(r));
}

DenseMatrix DenseMatrix::operator+(const DenseMatrix& other) const {
  if (dim() != other.dim()) throw DimensionError("DenseMatrix sum: order mismatch");
  return DenseMatrix(Storage(m_ + other.m_));
}

DenseMatrix DenseMatrix::operator-(const DenseMatrix& other) const {
  if (dim() != other.dim()) throw DimensionError("DenseMatrix difference: order mismatch");
  return DenseMatrix(Storage(m_ - other.m_));
}

DenseMatrix DenseMatrix::operator*(cplx s) const { return DenseMatrix(Storage(m_ * s)); }

DenseMatrix DenseMatrix::leading(std::int64_t size) const {
  if (size < 1 || size > dim()) throw DimensionError("DenseMatrix::leading: bad order");
  return DenseMatrix(Storage(m_.topLeftCorner(size, size)));
}

double DenseMatrix::max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

double DenseMatrix::norm1() const {
  return m_.size() == 0 ? 0.0 : m_.cwiseAbs().colwise().sum().maxCoeff();
}

bool DenseMatrix::all_finite() const { return m_.allFinite(); }

DenseMatrix materialize(const APOperator& A, std::int64_t n1, std::int64_t n2) {
  if (n2 <= n1) throw DomainError("materialize: requires n2 > n1");
  check_window(n2 - n1, "materialize");
  const std::int64_t M = n2 - n1;
  DenseMatrix out(M);
  auto& s = out.storage();
  std::map<GroupElement, std::vector<cplx>> phases;
  for (const auto& [key, c] : A.terms()) {
    const std::int64_t d = key.offset;
    if (d >= M || d <= -M) continue;
    auto it = phases.find(key.elem);
    if (it == phases.end()) it = phases.emplace(key.elem, row_phases(A.group(), key.elem, n1, n2)).first;
    const auto& ph = it->second;
    // rows j with column k = j - d inside the window
    const std::int64_t r_lo = std::max<std::int64_t>(0, d);
    const std::int64_t r_hi = std::min<std::int64_t>(M, M + d);
    for (std::int64_t r = r_lo; r < r_hi; ++r) s(r, r - d) += c * ph[static_cast<std::size_t>(r)];
  }
  return out;
}

DenseMatrix toeplitz_comp(const APOperator& A, std::int64_t M) {
  if (M < 1) throw DomainError("toeplitz_comp: M must be >= 1");
  return materialize(A, 0, M);
}

DenseMatrix hankel_comp(const APOperator& A, std::int64_t M) {
  if (M < 1) throw DomainError("hankel_comp: M must be >= 1");
  check_window(M, "hankel_comp");
  DenseMatrix out(M);
  auto& s = out.storage();
  std::map<GroupElement, std::vector<cplx>> phases;
  for (const auto& [key, c] : A.terms()) {
    // entry (j, k) = a^{(j+k+1)}(j), so only positive offsets contribute
    const std::int64_t d = key.offset;
    if (d < 1 || d > 2 * M - 1) continue;
    auto it = phases.find(key.elem);
    if (it == phases.end()) it = phases.emplace(key.elem, row_phases(A.group(), key.elem, 0, M)).first;
    const auto& ph = it->second;
    for (std::int64_t j = 0; j < M; ++j) {
      const std::int64_t k = d - 1 - j;
      if (k < 0 || k >= M) continue;
      s(j, k) += c * ph[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

LogDet lu_logdet(const DenseMatrix& m) {
  require_finite(m, "lu_logdet");
  if (m.dim() == 0) return {};
  Eigen::PartialPivLU<DenseMatrix::Storage> lu(m.storage());
  const auto& f = lu.matrixLU();
  LogDet out;
  double log_abs = 0.0;
  double arg = lu.permutationP().determinant() < 0 ? std::numbers::pi : 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const cplx p = f(i, i);
    if (p == cplx{}) {
      out.zero = true;
      return out;
    }
    log_abs += std::log(std::abs(p));
    arg += std::arg(p);
  }
  out.log = {log_abs, arg};
  return out;
}

cplx lu_det(const DenseMatrix& m) {
  require_finite(m, "lu_det");
  if (m.dim() == 0) return 1.0;
  Eigen::PartialPivLU<DenseMatrix::Storage> lu(m.storage());
  const auto& f = lu.matrixLU();
  cplx det = lu.permutationP().determinant() < 0 ? -1.0 : 1.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) det *= f(i, i);
  return det;
}

cplx mat_trace(const DenseMatrix& m) { return m.storage().trace(); }

DenseMatrix mat_exp(const DenseMatrix& m, double tol) {
  if (!(tol > 0.0)) throw DomainError("mat_exp: tol must be > 0");
  require_finite(m, "mat_exp");
  const std::int64_t n = m.dim();
  const double nu = m.norm1();
  int s = 0;
  if (nu > 0.5) s = static_cast<int>(std::ceil(std::log2(nu / 0.5)));
  const DenseMatrix X = m * cplx{std::ldexp(1.0, -s), 0.0};
  const double x = X.norm1();
  const double local_tol = std::ldexp(tol, -s);

  DenseMatrix result = DenseMatrix::identity(n);
  DenseMatrix term = result;
  for (int k = 1; k < 200; ++k) {
    term = term * X * cplx{1.0 / k, 0.0};
    result = result + term;
    // remaining terms are bounded by a geometric series with ratio x/(k+1)
    if (term.norm1() * x / (k + 1 - x) < local_tol) break;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  require_finite(result, "mat_exp");
  return result;
}

}  // namespace apdet
