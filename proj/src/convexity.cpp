#include "pconvex/convexity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pconvex/errors.hpp"

namespace pconvex {
namespace {

void require_degree(int n, int p, int max_p) {
  if (p < 1 || p > max_p)
    throw ShapeError("degree " + std::to_string(p) + " out of range [1, " + std::to_string(max_p) +
                     "] for n = " + std::to_string(n));
}

ConvexityReport report_from(const Eigen::MatrixXd& m, int p, Mode mode, const Tolerances& tol, double shift = 0.0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw Error("eigensolver failed on a symmetric form");
  ConvexityReport rep;
  rep.p = p;
  rep.min_p_trace = es.eigenvalues().head(p).sum() + shift;
  rep.verdict = classify(rep.min_p_trace, tol);
  rep.ok = mode == Mode::strict ? rep.verdict == Verdict::strict : rep.verdict != Verdict::fail;
  rep.witness = es.eigenvectors().leftCols(p);
  return rep;
}

void summarize(FieldRegionReport& out, const Tolerances& tol) {
  out.worst = 0;
  for (std::size_t k = 1; k < out.reports.size(); ++k)
    if (out.reports[k].min_p_trace < out.reports[out.worst].min_p_trace) out.worst = k;
  out.min_p_trace = out.reports.empty() ? 0.0 : out.reports[out.worst].min_p_trace;
  out.verdict = out.reports.empty() ? Verdict::fail : classify(out.min_p_trace, tol);
}

// Sign of sorting the index list whose only out-of-place entry is `moved`,
// sitting where `from` used to be in the sorted set `mask`.
double move_sign(std::uint32_t mask, int from, int moved) {
  const int lo = std::min(from, moved), hi = std::max(from, moved);
  const std::uint32_t between = mask & (((1u << hi) - 1u) & ~((1u << (lo + 1)) - 1u));
  return (std::popcount(between) & 1) ? -1.0 : 1.0;
}

int pair_rank(int i, int j, int n) { return mask_rank((1u << i) | (1u << j), n); }

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::strict:
      return "strict";
    case Verdict::semi:
      return "semi";
    default:
      return "fail";
  }
}

double min_p_trace(const QuadraticForm& theta, int p) {
  require_degree(theta.dim(), p, theta.dim());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().head(p).sum();
}

Verdict classify(double m, const Tolerances& tol) {
  if (m > tol.strict_tol) return Verdict::strict;
  if (m >= -tol.semi_tol) return Verdict::semi;
  return Verdict::fail;
}

ConvexityReport is_p_positive(const QuadraticForm& theta, int p, Mode mode, const Tolerances& tol) {
  require_degree(theta.dim(), p, theta.dim());
  return report_from(theta.matrix(), p, mode, tol);
}

FieldRegionReport field_p_psh_report(const Field& phi, std::span<const Eigen::VectorXd> samples, int p,
                                     const Tolerances& tol) {
  require_degree(phi.dim(), p, phi.dim());
  FieldRegionReport out;
  out.p = p;
  for (const auto& x : samples) {
    const Jet2 j = phi.jet({x.data(), static_cast<std::size_t>(x.size())});
    out.points.push_back(x);
    out.reports.push_back(report_from(j.hess, p, Mode::semi, tol));
  }
  summarize(out, tol);
  return out;
}

Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& normal) {
  const int n = static_cast<int>(normal.size());
  Eigen::MatrixXd a(n, n);
  a.col(0) = normal.normalized();
  // Complete with the coordinate axes least aligned with the normal.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return std::abs(normal[x]) < std::abs(normal[y]); });
  for (int k = 1; k < n; ++k) a.col(k) = Eigen::VectorXd::Unit(n, order[k - 1]);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - 1);
}

FieldRegionReport boundary_p_convexity(const Field& r, std::span<const Eigen::VectorXd> boundary_samples, int p,
                                       double grad_tol, const Tolerances& tol) {
  const int n = r.dim();
  if (n < 2) throw ShapeError("boundary convexity needs n >= 2");
  require_degree(n, p, n - 1);
  FieldRegionReport out;
  out.p = p;
  for (const auto& x : boundary_samples) {
    const Jet2 j = r.jet({x.data(), static_cast<std::size_t>(x.size())});
    const double gn = j.grad.norm();
    if (gn <= grad_tol) throw DegenerateGradient("|grad r| = " + std::to_string(gn) + " at a boundary sample");
    const Eigen::MatrixXd t = tangent_basis(j.grad);
    ConvexityReport rep = report_from(t.transpose() * j.hess * t, p, Mode::semi, tol);
    rep.witness = t * rep.witness;
    out.points.push_back(x);
    out.reports.push_back(std::move(rep));
  }
  summarize(out, tol);
  return out;
}

// ---------------------------------------------------------------------------

CurvatureOperator::CurvatureOperator(int n, const Eigen::MatrixXd& m) : n_(n) {
  const long d = binomial(n, 2);
  if (m.rows() != d || m.cols() != d) throw ShapeError("curvature operator must be C(n,2) x C(n,2)");
  m_ = 0.5 * (m + m.transpose());
}

CurvatureOperator CurvatureOperator::flat(int n) {
  const long d = binomial(n, 2);
  return {n, Eigen::MatrixXd::Zero(d, d)};
}

CurvatureOperator CurvatureOperator::identity(int n, double c) {
  const long d = binomial(n, 2);
  return {n, c * Eigen::MatrixXd::Identity(d, d)};
}

double CurvatureOperator::smallest_eigenvalue() const {
  if (m_.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double CurvatureOperator::largest_eigenvalue() const {
  if (m_.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

std::vector<PointForm> xi_forms(const PointForm& g) {
  const int n = g.dim(), p = g.degree();
  require_degree(n, p, n);
  std::vector<PointForm> out;
  for (std::uint32_t I : basis_masks(n, p)) {
    PointForm xi(n, 2);
    for (int ia = 0; ia < n; ++ia) {
      if (!(I & (1u << ia))) continue;
      for (int i = 0; i < n; ++i) {
        if (i == ia || (I & (1u << i))) continue;  // repeated index: coefficient vanishes
        const std::uint32_t J = (I & ~(1u << ia)) | (1u << i);
        const double c = move_sign(I, ia, i) * g[mask_rank(J, n)];
        // c w^i ^ w^{i_a}
        xi[pair_rank(i, ia, n)] += i < ia ? c : -c;
      }
    }
    out.push_back(std::move(xi));
  }
  return out;
}

double curvature_term(const CurvatureOperator& R, const PointForm& g) {
  if (R.dim() != g.dim()) throw ShapeError("curvature operator and form have different dimensions");
  if (g.dim() < 2) return 0.0;
  double s = 0.0;
  for (const auto& xi : xi_forms(g)) s += xi.vec().dot(R.matrix() * xi.vec());
  return s;
}

CurvatureBounds curvature_bounds_check(const CurvatureOperator& R, const PointForm& g, double slack) {
  const int n = g.dim(), p = g.degree();
  CurvatureBounds b;
  b.term = curvature_term(R, g);
  const double scale = static_cast<double>(p) * (n - p) * g.norm2();
  b.lower = scale * R.smallest_eigenvalue();
  b.upper = scale * R.largest_eigenvalue();
  const double band = slack * std::max(1.0, std::abs(b.upper) + std::abs(b.lower));
  b.holds = b.lower <= b.term + band && b.term <= b.upper + band;
  return b;
}

int signature_count(int n, int p) {
  require_degree(n, p, n);
  if (n > 8) throw ShapeError("signature_count is exhaustive and limited to n <= 8");
  const auto masks = basis_masks(n, p);
  std::vector<int> count(masks.size(), 0);
  for (std::uint32_t I : masks) {
    const MultiIndex idx = from_mask(I);
    for (int a = 0; a < p; ++a) {
      for (int i = 1; i <= n; ++i) {
        if (I & (1u << (i - 1))) continue;
        MultiIndex list = idx;
        list[a] = i;
        // signature by bubble count against the sorted list
        int inversions = 0;
        for (int s = 0; s < p; ++s)
          for (int t = s + 1; t < p; ++t) inversions += list[s] > list[t];
        const int sgn = (inversions & 1) ? -1 : 1;
        MultiIndex sorted = list;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t j = 0; j < masks.size(); ++j)
          if (from_mask(masks[j]) == sorted) count[j] += sgn * sgn;
      }
    }
  }
  for (int c : count)
    if (c != count.front()) throw Error("signature counts differ between multi-indices");
  const int expected = p * (n - p);
  if (count.front() != expected)
    throw Error("signature count " + std::to_string(count.front()) + " differs from p(n-p) = " +
                std::to_string(expected));
  return count.front();
}

ConvexityReport thm71_hypothesis(const QuadraticForm& theta_phi, double lambda_R, int p, Mode mode,
                                 const Tolerances& tol) {
  const int n = theta_phi.dim();
  require_degree(n, p, n);
  return report_from(theta_phi.matrix(), p, mode, tol, static_cast<double>(p) * (n - p) * lambda_R);
}

}  // namespace pconvex
