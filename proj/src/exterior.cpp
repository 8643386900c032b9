#include "pconvex/exterior.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "pconvex/errors.hpp"

namespace pconvex {
namespace {

struct BasisTable {
  // masks[p] in lexicographic order of the sorted index lists
  std::array<std::vector<std::uint32_t>, kMaxDim + 1> masks;
  std::vector<int> rank_of;  // indexed by mask
};

void enumerate(int n, int p, int start, std::uint32_t acc, std::vector<std::uint32_t>& out) {
  if (p == 0) {
    out.push_back(acc);
    return;
  }
  for (int i = start; i <= n - p + 1; ++i) enumerate(n, p - 1, i + 1, acc | (1u << (i - 1)), out);
}

const BasisTable& table(int n) {
  static const std::array<BasisTable, kMaxDim + 1> tables = [] {
    std::array<BasisTable, kMaxDim + 1> t;
    for (int n = 0; n <= kMaxDim; ++n) {
      t[n].rank_of.assign(std::size_t{1} << n, -1);
      for (int p = 0; p <= n; ++p) {
        enumerate(n, p, 1, 0u, t[n].masks[p]);
        for (std::size_t r = 0; r < t[n].masks[p].size(); ++r)
          t[n].rank_of[t[n].masks[p][r]] = static_cast<int>(r);
      }
    }
    return t;
  }();
  if (n < 0 || n > kMaxDim) throw ShapeError("dimension " + std::to_string(n) + " out of range");
  return tables[n];
}

// Number of indices in mask strictly below index bit b.
inline int below(std::uint32_t mask, int b) { return std::popcount(mask & ((1u << b) - 1u)); }

inline double parity(int k) { return (k & 1) ? -1.0 : 1.0; }

void require_same_dim(const PointForm& a, const PointForm& b, const char* op) {
  if (a.dim() != b.dim() || a.degree() != b.degree())
    throw ShapeError(std::string(op) + ": forms of different dimension or degree");
}

}  // namespace

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::uint32_t to_mask(const MultiIndex& index) {
  std::uint32_t m = 0;
  for (int i : index) m |= 1u << (i - 1);
  return m;
}

MultiIndex from_mask(std::uint32_t mask) {
  MultiIndex out;
  for (int b = 0; b < 32; ++b)
    if (mask & (1u << b)) out.push_back(b + 1);
  return out;
}

std::span<const std::uint32_t> basis_masks(int n, int p) {
  const auto& t = table(n);
  if (p < 0 || p > n) throw ShapeError("degree " + std::to_string(p) + " out of range for n = " + std::to_string(n));
  return t.masks[p];
}

int mask_rank(std::uint32_t mask, int n) { return table(n).rank_of.at(mask); }

int rank(const MultiIndex& index, int n) {
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 1 || index[k] > n) throw ShapeError("multi-index entry out of range");
    if (k > 0 && index[k] <= index[k - 1]) throw ShapeError("multi-index not strictly increasing");
  }
  return mask_rank(to_mask(index), n);
}

MultiIndex unrank(int r, int n, int p) {
  auto masks = basis_masks(n, p);
  if (r < 0 || static_cast<std::size_t>(r) >= masks.size()) throw ShapeError("rank out of range");
  return from_mask(masks[r]);
}

// ---------------------------------------------------------------------------

PointForm::PointForm(int n, int p) : n_(n), p_(p) {
  if (n < 0 || n > kMaxDim) throw ShapeError("dimension out of range");
  if (p < 0 || p > n) throw ShapeError("degree " + std::to_string(p) + " exceeds dimension " + std::to_string(n));
  coeffs_.assign(static_cast<std::size_t>(binomial(n, p)), 0.0);
}

PointForm::PointForm(int n, int p, std::vector<double> coeffs) : PointForm(n, p) {
  if (coeffs.size() != coeffs_.size()) throw ShapeError("coefficient count does not match C(n,p)");
  coeffs_ = std::move(coeffs);
}

PointForm PointForm::basis(int n, const MultiIndex& index, double value) {
  PointForm g(n, static_cast<int>(index.size()));
  g[rank(index, n)] = value;
  return g;
}

PointForm PointForm::scalar(int n, double value) {
  PointForm g(n, 0);
  g[0] = value;
  return g;
}

PointForm PointForm::covector(std::span<const double> tau) {
  const int n = static_cast<int>(tau.size());
  PointForm g(n, 1);
  for (int i = 0; i < n; ++i) g[i] = tau[i];
  return g;
}

double PointForm::coeff(const MultiIndex& index) const {
  if (static_cast<int>(index.size()) != p_) throw ShapeError("multi-index length differs from degree");
  return coeffs_[rank(index, n_)];
}

double PointForm::norm2() const {
  return std::inner_product(coeffs_.begin(), coeffs_.end(), coeffs_.begin(), 0.0);
}

double PointForm::norm() const { return std::sqrt(norm2()); }

PointForm& PointForm::operator+=(const PointForm& other) {
  require_same_dim(*this, other, "operator+");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

PointForm& PointForm::operator-=(const PointForm& other) {
  require_same_dim(*this, other, "operator-");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

PointForm& PointForm::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

PointForm operator+(PointForm a, const PointForm& b) { return a += b; }
PointForm operator-(PointForm a, const PointForm& b) { return a -= b; }
PointForm operator*(double s, PointForm a) { return a *= s; }

double dot(const PointForm& a, const PointForm& b) {
  require_same_dim(a, b, "dot");
  return std::inner_product(a.coeffs().begin(), a.coeffs().end(), b.coeffs().begin(), 0.0);
}

// ---------------------------------------------------------------------------

QuadraticForm::QuadraticForm(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ShapeError("quadratic form must be square");
  if (m.rows() > kMaxDim) throw ShapeError("dimension out of range");
  m_ = 0.5 * (m + m.transpose());
}

QuadraticForm QuadraticForm::identity(int n, double scale) {
  return QuadraticForm(scale * Eigen::MatrixXd::Identity(n, n));
}

QuadraticForm QuadraticForm::diagonal(std::span<const double> d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return QuadraticForm(m);
}

QuadraticForm QuadraticForm::outer(std::span<const double> tau) {
  Eigen::Map<const Eigen::VectorXd> t(tau.data(), static_cast<Eigen::Index>(tau.size()));
  return QuadraticForm(t * t.transpose());
}

// ---------------------------------------------------------------------------

PointForm wedge(const PointForm& a, const PointForm& b) {
  const int n = a.dim();
  if (b.dim() != n) throw ShapeError("wedge: dimension mismatch");
  const int k = a.degree(), l = b.degree();
  if (k + l > n) throw ShapeError("wedge: degree " + std::to_string(k + l) + " exceeds dimension");
  PointForm out(n, k + l);
  auto ma = basis_masks(n, k);
  auto mb = basis_masks(n, l);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      if (b[j] == 0.0 || (ma[i] & mb[j])) continue;
      // inversions: pairs (x in A, y in B) with x > y
      int inv = 0;
      for (std::uint32_t rest = mb[j]; rest; rest &= rest - 1) {
        const int y = std::countr_zero(rest);
        inv += std::popcount(ma[i] >> (y + 1));
      }
      out[mask_rank(ma[i] | mb[j], n)] += parity(inv) * a[i] * b[j];
    }
  }
  return out;
}

PointForm interior_product(std::span<const double> v, const PointForm& g) {
  const int n = g.dim();
  if (static_cast<int>(v.size()) != n) throw ShapeError("interior_product: dimension mismatch");
  if (g.degree() == 0) throw ShapeError("interior_product: degree-0 form");
  const int p = g.degree();
  PointForm out(n, p - 1);
  auto masks = basis_masks(n, p);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    if (g[r] == 0.0) continue;
    for (std::uint32_t rest = masks[r]; rest; rest &= rest - 1) {
      const int j = std::countr_zero(rest);
      const std::uint32_t K = masks[r] & ~(1u << j);
      out[mask_rank(K, n)] += parity(below(masks[r], j)) * v[j] * g[r];
    }
  }
  return out;
}

PointForm apply_F(const QuadraticForm& theta, const PointForm& g) {
  const int n = g.dim();
  if (theta.dim() != n) throw ShapeError("apply_F: dimension mismatch");
  const int p = g.degree();
  PointForm out(n, p);
  if (p == 0) return out;
  auto masks = basis_masks(n, p);
  const auto& m = theta.matrix();
  for (std::size_t r = 0; r < masks.size(); ++r) {
    if (g[r] == 0.0) continue;
    const std::uint32_t J = masks[r];
    for (std::uint32_t rest = J; rest; rest &= rest - 1) {
      const int j = std::countr_zero(rest);
      const std::uint32_t K = J & ~(1u << j);
      const double s1 = parity(below(J, j)) * g[r];  // (e_j -| g) on w^K
      for (int k = 0; k < n; ++k) {
        if (K & (1u << k)) continue;
        const double s2 = parity(below(K, k));  // w^k ^ w^K
        out[mask_rank(K | (1u << k), n)] += m(j, k) * s1 * s2;
      }
    }
  }
  return out;
}

Eigen::MatrixXd F_matrix(const QuadraticForm& theta, int p) {
  const int n = theta.dim();
  const auto N = static_cast<Eigen::Index>(binomial(n, p));
  Eigen::MatrixXd out(N, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    PointForm e(n, p);
    e[c] = 1.0;
    out.col(c) = apply_F(theta, e).vec();
  }
  return out;
}

EigenSummaryF eigen_F(const QuadraticForm& theta, int p) {
  const int n = theta.dim();
  if (p < 1 || p > n) throw ShapeError("eigen_F: degree out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta.matrix());
  if (es.info() != Eigen::Success) throw Error("eigen_F: eigensolver did not converge");
  EigenSummaryF out;
  out.p = p;
  out.base_values = es.eigenvalues();
  out.base_vectors = es.eigenvectors();
  for (std::uint32_t J : basis_masks(n, p)) {
    double s = 0.0;
    for (std::uint32_t rest = J; rest; rest &= rest - 1) s += out.base_values[std::countr_zero(rest)];
    out.values.push_back(s);
  }
  std::sort(out.values.begin(), out.values.end());
  return out;
}

namespace {

struct FSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double cutoff = 0.0;
};

FSpectrum f_spectrum(const QuadraticForm& theta, int p, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F_matrix(theta, p));
  if (es.info() != Eigen::Success) throw Error("pinv_F: eigensolver did not converge");
  FSpectrum s{es.eigenvalues(), es.eigenvectors(), 0.0};
  s.cutoff = tol * (s.values.size() ? s.values.cwiseAbs().maxCoeff() : 0.0);
  return s;
}

}  // namespace

double kernel_component(const QuadraticForm& theta, const PointForm& f, double tol) {
  if (theta.dim() != f.dim()) throw ShapeError("kernel_component: dimension mismatch");
  if (f.degree() == 0) return 0.0;
  auto s = f_spectrum(theta, f.degree(), tol);
  const Eigen::VectorXd c = s.vectors.transpose() * f.vec();
  double k2 = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (std::abs(s.values[i]) <= s.cutoff) k2 += c[i] * c[i];
  return std::sqrt(k2);
}

PointForm pinv_F(const QuadraticForm& theta, const PointForm& f, double tol) {
  if (theta.dim() != f.dim()) throw ShapeError("pinv_F: dimension mismatch");
  if (f.degree() < 1) throw ShapeError("pinv_F: degree must be at least 1");
  auto s = f_spectrum(theta, f.degree(), tol);
  const Eigen::VectorXd c = s.vectors.transpose() * f.vec();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(c.size());
  double k2 = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(s.values[i]) <= s.cutoff)
      k2 += c[i] * c[i];
    else
      y[i] = c[i] / s.values[i];
  }
  const double fn = f.norm();
  if (std::sqrt(k2) > tol * fn)
    throw MembershipError("pinv_F: form has a component of norm " + std::to_string(std::sqrt(k2)) +
                              " in Ker F_theta",
                          std::sqrt(k2));
  const Eigen::VectorXd x = s.vectors * y;
  return PointForm(f.dim(), f.degree(), std::vector<double>(x.data(), x.data() + x.size()));
}

Lemma11Record lemma11_verify(const QuadraticForm& theta, std::span<const double> tau,
                             const PointForm& xi, const std::optional<PointForm>& f, double slack) {
  const int n = theta.dim();
  const int p = xi.degree() + 1;
  if (static_cast<int>(tau.size()) != n || xi.dim() != n) throw ShapeError("lemma11_verify: dimension mismatch");
  if (p > n) throw ShapeError("lemma11_verify: xi has degree n");

  // theta - tau (x) tau must be p-positive semi-definite
  const QuadraticForm rest = theta - QuadraticForm::outer(tau);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rest.matrix(), Eigen::EigenvaluesOnly);
  const double trace_p = es.eigenvalues().head(p).sum();
  if (trace_p < -1e-8)
    throw PreconditionError("lemma11_verify: theta - tau (x) tau is not p-positive semi-definite (min p-trace " +
                            std::to_string(trace_p) + ")");

  Lemma11Record rec;
  const PointForm tx = wedge(PointForm::covector(tau), xi);
  const double txn = tx.norm();
  rec.membership_residual = txn > 0.0 ? kernel_component(theta, tx) / txn : 0.0;
  rec.membership_ok = rec.membership_residual <= kDefaultPinvTol;

  const PointForm inv_tx = pinv_F(theta, tx);
  rec.self_lhs = dot(inv_tx, tx);
  rec.self_rhs = xi.norm2();
  rec.self_ineq_ok = rec.self_rhs - rec.self_lhs >= -slack;

  const PointForm ff = f ? *f : tx;
  const PointForm inv_f = pinv_F(theta, ff);
  rec.cross_lhs = dot(inv_f, tx);
  rec.cross_rhs = std::sqrt(std::max(0.0, dot(inv_f, ff))) * xi.norm();
  rec.cross_ineq_ok = rec.cross_rhs - rec.cross_lhs >= -slack;
  return rec;
}

InverseBoundRecord inverse_bound_check(const QuadraticForm& theta, const PointForm& g, double slack) {
  const int p = g.degree();
  if (p < 1) throw ShapeError("inverse_bound_check: degree must be at least 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta.matrix(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues()[0] <= 1e-8)
    throw PreconditionError("inverse_bound_check: theta is not strictly positive definite");
  InverseBoundRecord rec;
  rec.lhs = dot(pinv_F(theta, g), g);
  const QuadraticForm inv(theta.matrix().inverse());
  rec.rhs = dot(apply_F(inv, g), g) / (static_cast<double>(p) * p);
  rec.holds = rec.lhs <= rec.rhs + slack;
  return rec;
}

}  // namespace pconvex
