#include "pconvex/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseCholesky>

#include "pconvex/errors.hpp"
#include "pconvex/exterior.hpp"

namespace pconvex {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

// B_q = M_{q+1}^{1/2} d_q M_q^{-1/2}
SpMat scaled_coboundary(const CubicalComplex& cx, int q, const Eigen::VectorXd& mq, const Eigen::VectorXd& mq1) {
  SpMat d = cx.coboundary(q).cast<double>();
  return mq1.cwiseSqrt().asDiagonal() * d * mq.cwiseSqrt().cwiseInverse().asDiagonal();
}

struct CGLSResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
};

// Minimum-norm least-squares solution of B x = b, started from zero so the
// iterates stay in the row space of B.
CGLSResult cgls(const SpMat& B, const Eigen::VectorXd& b, double tol, int max_iter) {
  CGLSResult out;
  out.x = Eigen::VectorXd::Zero(B.cols());
  Eigen::VectorXd r = b;
  Eigen::VectorXd s = B.transpose() * r;
  const double s0 = s.norm();
  // |B^T r| cannot be resolved below roundoff in |B| |b|; a b that is already
  // orthogonal to the range stops here instead of chasing noise.
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(B.rows()), col_sum = Eigen::VectorXd::Zero(B.cols());
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpMat::InnerIterator it(B, k); it; ++it) {
      row_sum[it.row()] += std::abs(it.value());
      col_sum[it.col()] += std::abs(it.value());
    }
  const double norm_b = std::sqrt(row_sum.maxCoeff() * col_sum.maxCoeff());
  const double stop = std::max(tol * s0, 64.0 * std::numeric_limits<double>::epsilon() * norm_b * b.norm());
  if (s0 <= stop) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd p = s;
  double gamma = s.squaredNorm();
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd q = B * p;
    const double qq = q.squaredNorm();
    if (qq == 0.0) {
      out.converged = true;
      out.iterations = it;
      return out;
    }
    const double a = gamma / qq;
    out.x += a * p;
    r -= a * q;
    s = B.transpose() * r;
    const double gamma_new = s.squaredNorm();
    out.iterations = it;
    if (std::sqrt(gamma_new) <= stop) {
      out.converged = true;
      return out;
    }
    p = s + (gamma_new / gamma) * p;
    gamma = gamma_new;
  }
  return out;
}

void require_form_degree(const CubicalComplex& cx, const Cochain& f) {
  if (f.p < 1 || f.p > cx.dim()) throw ShapeError("right-hand side degree must be in [1, n]");
  if (f.values.size() != cx.count(f.p)) throw ShapeError("cochain length does not match the complex");
}

// sum over n-cells of h^n e^{-chi} <F_theta^{-1} f, f>, theta the Hessian of `hess_of`.
double inverse_form_integral(const CubicalComplex& cx, const Cochain& f, const Field& chi, const Field& hess_of) {
  const int n = cx.dim();
  const Eigen::MatrixXd fh = reconstruct_at_top_cells(cx, f);
  const double dv = std::pow(cx.h(), n);
  double total = 0.0;
  for (int k = 0; k < cx.count(n); ++k) {
    const Eigen::VectorXd x = cx.barycenter(n, k);
    PointForm fk(n, f.p);
    for (Eigen::Index j = 0; j < fh.cols(); ++j) fk[static_cast<int>(j)] = fh(k, j);
    if (fk.norm2() == 0.0) continue;
    const QuadraticForm theta(hess_of.jet(as_span(x)).hess);
    PointForm g;
    try {
      g = pinv_F(theta, fk);
    } catch (const MembershipError& e) {
      std::string where;
      for (int i = 0; i < n; ++i) where += (i ? "," : "") + std::to_string(x[i]);
      throw MembershipError(std::string(e.what()) + " at cell center (" + where + ")", e.orthogonal_norm());
    }
    total += dv * std::exp(-chi.value(as_span(x))) * dot(g, fk);
  }
  return total;
}

// sum over (p-1)-cells of u^2 M_chi factor(barycenter)
template <class Factor>
double weighted_norm2(const CubicalComplex& cx, const Cochain& u, const Field& chi, Factor factor) {
  const WeightedMass m = mass(cx, chi, u.p);
  double s = 0.0;
  for (int k = 0; k < cx.count(u.p); ++k) s += u.values[k] * u.values[k] * m.diag[k] * factor(cx.barycenter(u.p, k));
  return s;
}

double weighted_norm2(const CubicalComplex& cx, const Cochain& u, const Field& chi) {
  return weighted_norm2(cx, u, chi, [](const Eigen::VectorXd&) { return 1.0; });
}

// Checks a p-positivity condition at every n-cell center.
template <class Form>
void require_p_positive(const CubicalComplex& cx, int p, Form form, const char* what) {
  const int n = cx.dim();
  for (int k = 0; k < cx.count(n); ++k) {
    const Eigen::VectorXd x = cx.barycenter(n, k);
    const QuadraticForm q(form(x));
    const double scale = std::max(1.0, q.matrix().norm());
    if (min_p_trace(q, p) < -kSemiTol * scale)
      throw PreconditionError(std::string(what) + " fails p-positivity at a cell center");
  }
}

// max of omega over barycenters of cells where f is nonzero
double max_on_support(const CubicalComplex& cx, const Cochain& f, const Field& omega) {
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < cx.count(f.p); ++k)
    if (f.values[k] != 0.0) m = std::max(m, omega.value(as_span(cx.barycenter(f.p, k))));
  return m;
}

Eigen::MatrixXd outer_grad(const Jet2& j) { return j.grad * j.grad.transpose(); }

}  // namespace

MinimalSolution minimal_solution(const CubicalComplex& cx, const Cochain& f, const Field& phi,
                                 const SolveOptions& opts) {
  require_form_degree(cx, f);
  const int p = f.p, n = cx.dim();
  const Eigen::VectorXd mlo = mass(cx, phi, p - 1).diag, mp = mass(cx, phi, p).diag;
  const double fnorm = std::sqrt((f.values.array().square() * mp.array()).sum());

  MinimalSolution sol;
  sol.u = Cochain{p - 1, Eigen::VectorXd::Zero(cx.count(p - 1))};
  if (fnorm == 0.0) return sol;

  if (p < n) {
    const Eigen::VectorXd df = apply_d(cx, p, f.values);
    const Eigen::VectorXd mhi = mass(cx, phi, p + 1).diag;
    const double rel = std::sqrt((df.array().square() * mhi.array()).sum()) / fnorm;
    if (rel > opts.closed_tol) throw NotClosed("right-hand side is not closed", rel);
  }

  const SpMat B = scaled_coboundary(cx, p - 1, mlo, mp);
  const Eigen::VectorXd b = mp.cwiseSqrt().cwiseProduct(f.values);
  const CGLSResult z = cgls(B, b, opts.tol, opts.max_iter);
  sol.iterations = z.iterations;
  sol.u.values = mlo.cwiseSqrt().cwiseInverse().cwiseProduct(z.x);
  sol.residual = (B * z.x - b).norm() / b.norm();
  sol.harmonic_obstruction = sol.residual;
  if (!z.converged) throw NoConvergence("CGLS did not reach tolerance", z.iterations, sol.residual);
  if (sol.residual > opts.obstruction_tol)
    throw CohomologyObstruction("right-hand side has a harmonic component", sol.residual);
  return sol;
}

BoundReport make_report(std::string test, double lhs, double rhs, double constant, double h, double slack) {
  BoundReport r;
  r.test = std::move(test);
  r.lhs = lhs;
  r.rhs = rhs;
  r.constant = constant;
  r.h = h;
  r.slack = slack;
  r.vacuous = rhs == 0.0;
  r.ratio = r.vacuous ? 0.0 : lhs / (constant * rhs);
  r.pass = r.vacuous ? lhs == 0.0 : r.ratio <= 1.0 + slack;
  return r;
}

namespace {

// Shared by the plain estimate and the non-psh degeneration so that psi = 0
// reproduces the plain numbers exactly.
BoundReport constant_omega_report(std::string test, const CubicalComplex& cx, const Cochain& f, const Field& phi,
                                  const Field& psi, double alpha, const SolveOptions& opts, double slack) {
  const Field solve_weight = Field::combine(1.0, phi, -0.5, psi);
  const Field norm_weight = Field::combine(1.0, phi, -1.0, psi);
  const MinimalSolution sol = minimal_solution(cx, f, solve_weight, opts);
  const double lhs = weighted_norm2(cx, sol.u, norm_weight);
  const double rhs = inverse_form_integral(cx, f, norm_weight, phi);
  return make_report(std::move(test), lhs, rhs, 4.0 / ((2.0 - alpha) * (2.0 - alpha)), cx.h(), slack);
}

}  // namespace

BoundReport hormander_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const SolveOptions& opts,
                             double slack) {
  require_form_degree(cx, f);
  require_p_positive(cx, f.p, [&](const Eigen::VectorXd& x) { return phi.jet(as_span(x)).hess; }, "phi");
  const Field zero = Field::constant(cx.dim(), 0.0);
  return constant_omega_report("hormander", cx, f, phi, zero, 0.0, opts, slack);
}

BoundReport nonpsh_constant_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                   double alpha, const SolveOptions& opts, double slack) {
  require_form_degree(cx, f);
  if (!(alpha >= 0.0 && alpha < 2.0)) throw PreconditionError("alpha must lie in [0, 2)");
  require_p_positive(cx, f.p, [&](const Eigen::VectorXd& x) { return phi.jet(as_span(x)).hess; }, "phi");
  require_p_positive(
      cx, f.p,
      [&](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(alpha * alpha * phi.jet(as_span(x)).hess - outer_grad(psi.jet(as_span(x))));
      },
      "alpha^2 D^2 phi - dpsi (x) dpsi");
  return constant_omega_report("nonpsh_constant", cx, f, phi, psi, alpha, opts, slack);
}

BoundReport nonpsh_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                          const Field& omega, double alpha, const SolveOptions& opts, double slack) {
  require_form_degree(cx, f);
  if (!(alpha >= 0.0 && alpha < 2.0)) throw PreconditionError("alpha must lie in [0, 2)");
  require_p_positive(cx, f.p, [&](const Eigen::VectorXd& x) { return phi.jet(as_span(x)).hess; }, "phi");
  require_p_positive(
      cx, f.p,
      [&](const Eigen::VectorXd& x) {
        const double w = omega.value(as_span(x));
        return Eigen::MatrixXd(w * w * phi.jet(as_span(x)).hess - outer_grad(psi.jet(as_span(x))));
      },
      "w^2 D^2 phi - dpsi (x) dpsi");
  if (max_on_support(cx, f, omega) > alpha + 1e-12) throw PreconditionError("w exceeds alpha on supp f");

  const Field solve_weight = Field::combine(1.0, phi, -0.5, psi);
  const Field norm_weight = Field::combine(1.0, phi, -1.0, psi);
  const MinimalSolution sol = minimal_solution(cx, f, solve_weight, opts);
  const double lhs = weighted_norm2(cx, sol.u, norm_weight, [&](const Eigen::VectorXd& x) {
    const double w = omega.value(as_span(x));
    return 1.0 - 0.25 * w * w;
  });
  const double rhs = inverse_form_integral(cx, f, norm_weight, phi);
  return make_report("nonpsh", lhs, rhs, (2.0 + alpha) / (2.0 - alpha), cx.h(), slack);
}

BoundReport berndtsson_via_nonpsh(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                  double alpha, const SolveOptions& opts, double slack) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in [0, 1)");
  const Field phi1 = Field::combine(1.0, phi, 1.0, psi);
  const Field psi1 = Field::combine(1.0 + alpha, psi, 0.0, psi);
  BoundReport r = nonpsh_constant_report(cx, f, phi1, psi1, 1.0 + alpha, opts, slack);
  r.test = "berndtsson_via_nonpsh";
  return r;
}

BerndtssonReports berndtsson_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                    double alpha, std::uint64_t seed, int apriori_samples,
                                    const SolveOptions& opts, double slack) {
  require_form_degree(cx, f);
  if (!(alpha >= 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in [0, 1)");
  const int n = cx.dim(), p = f.p;
  require_p_positive(cx, p, [&](const Eigen::VectorXd& x) { return phi.jet(as_span(x)).hess; }, "phi");
  require_p_positive(
      cx, p,
      [&](const Eigen::VectorXd& x) {
        const Jet2 j = psi.jet(as_span(x));
        return Eigen::MatrixXd(j.hess - outer_grad(j));  // e^{psi} D^2(-e^{-psi})
      },
      "-exp(-psi)");

  BerndtssonReports out;
  const Field weight = Field::combine(1.0, phi, -alpha, psi);
  const MinimalSolution sol = minimal_solution(cx, f, weight, opts);
  const double lhs = weighted_norm2(cx, sol.u, weight);
  const double rhs = inverse_form_integral(cx, f, weight, psi);
  out.bound = make_report("berndtsson", lhs, rhs, 4.0 / ((1.0 - alpha) * (1.0 - alpha)), cx.h(), slack);

  // Sampled a priori estimate: for smooth compactly supported g,
  // |delta_{phi+s psi} g|^2_{phi+psi} + |dg|^2_{phi+psi} >= s^2 int <F_psi g,g> e^{-phi-psi}, s = (1-alpha)/2.
  const double sigma = 0.5 * (1.0 - alpha);
  const GridDomain& dom = cx.domain();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), coef(-1.0, 1.0);
  double worst_ratio = 0.0, worst_lhs = 0.0, worst_rhs = 0.0;
  const long dimp = binomial(n, p);
  int drawn = 0;
  for (int attempt = 0; drawn < apriori_samples && attempt < 50 * apriori_samples; ++attempt) {
    // bump inside the box, shrunk until it clears the domain boundary
    std::vector<double> c(n);
    double side = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      c[i] = dom.lo[i] + (0.25 + 0.5 * unit(rng)) * (dom.hi[i] - dom.lo[i]);
      side = std::min(side, dom.hi[i] - dom.lo[i]);
    }
    const double radius = (0.1 + 0.15 * unit(rng)) * side;
    const Field bump = bump_field(c, radius);
    std::vector<Field> g;
    for (long k = 0; k < dimp; ++k) {
      const double a = coef(rng);
      std::vector<double> tilt(n);
      for (auto& t : tilt) t = coef(rng) / side;
      g.emplace_back(
          n,
          [bump, a, tilt, n](std::span<const double> x) {
            Jet2 lin = Jet2::constant(n, a);
            for (int i = 0; i < n; ++i) lin = lin + tilt[i] * Jet2::variable(n, i, x[i]);
            return lin * bump.jet(x);
          },
          "g");
    }
    double lhs_s = 0.0, rhs_s = 0.0;
    try {
      for_each_node(g, p, dom, [&](const NodeForm& s) {
        const Jet2 jp = phi.jet(as_span(s.x)), js = psi.jet(as_span(s.x));
        const double w = std::exp(-jp.value - js.value) * s.dv;
        const Eigen::VectorXd grad_chi = jp.grad + sigma * js.grad;
        lhs_s += (node_delta(s, grad_chi).norm2() + node_d(s).norm2()) * w;
        rhs_s += sigma * sigma * dot(apply_F(QuadraticForm(js.hess), s.g), s.g) * w;
      });
    } catch (const SupportError&) {
      continue;
    }
    ++drawn;
    const double ratio = lhs_s > 0.0 ? rhs_s / lhs_s : 0.0;
    if (drawn == 1 || ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_lhs = rhs_s;
      worst_rhs = lhs_s;
    }
  }
  // lhs/rhs oriented so that ratio <= 1 is the estimate
  out.apriori = make_report("berndtsson_apriori_sampled", worst_lhs, worst_rhs, 1.0, dom.h, slack);
  return out;
}

BoundReport diameter_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, double D,
                            const SolveOptions& opts, double slack) {
  require_form_degree(cx, f);
  if (!(D > 0.0)) throw PreconditionError("diameter must be positive");
  require_p_positive(cx, f.p, [&](const Eigen::VectorXd& x) { return phi.jet(as_span(x)).hess; }, "phi");
  const MinimalSolution sol = minimal_solution(cx, f, phi, opts);
  const double lhs = std::sqrt(weighted_norm2(cx, sol.u, phi));
  const double rhs = std::sqrt(mass_dot(mass(cx, phi, f.p), f.values, f.values));
  return make_report("diameter", lhs, rhs, 2.0 * D / f.p, cx.h(), slack);
}

BoundReport minimal_estimate_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                    const Field& omega, double alpha, const SolveOptions& opts, double slack) {
  require_form_degree(cx, f);
  if (!(alpha >= 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in [0, 1)");
  require_p_positive(cx, f.p, [&](const Eigen::VectorXd& x) { return phi.jet(as_span(x)).hess; }, "phi");
  require_p_positive(
      cx, f.p,
      [&](const Eigen::VectorXd& x) {
        const double w = omega.value(as_span(x));
        if (w < 0.0 || w >= 1.0) throw PreconditionError("w must lie in [0, 1)");
        const Jet2 j = psi.jet(as_span(x));
        return Eigen::MatrixXd(w * w * j.hess - outer_grad(j));
      },
      "w^2 D^2 psi - dpsi (x) dpsi");
  if (max_on_support(cx, f, omega) > alpha + 1e-12) throw PreconditionError("w exceeds alpha on supp f");

  const MinimalSolution sol = minimal_solution(cx, f, phi, opts);
  const Field norm_weight = Field::combine(1.0, phi, -1.0, psi);
  const double lhs = weighted_norm2(cx, sol.u, norm_weight, [&](const Eigen::VectorXd& x) {
    const double w = omega.value(as_span(x));
    return 1.0 - w * w;
  });
  const double rhs = inverse_form_integral(cx, f, norm_weight, psi);
  return make_report("minimal_estimate", lhs, rhs, (1.0 + alpha) / (1.0 - alpha), cx.h(), slack);
}

// ---------------------------------------------------------------------------

MonotonicityRecord monotonicity_check(const CubicalComplex& inner, const CubicalComplex& outer, const Cochain& f,
                                      const Field& phi, const SolveOptions& opts, double rel_tol) {
  require_form_degree(outer, f);
  const std::vector<int> map = cell_map(inner, outer, f.p);
  Cochain fi{f.p, Eigen::VectorXd(inner.count(f.p))};
  for (std::size_t k = 0; k < map.size(); ++k) fi.values[static_cast<Eigen::Index>(k)] = f.values[map[k]];
  MonotonicityRecord rec;
  rec.first = weighted_norm2(inner, minimal_solution(inner, fi, phi, opts).u, phi);
  rec.second = weighted_norm2(outer, minimal_solution(outer, f, phi, opts).u, phi);
  rec.holds = rec.first <= rec.second * (1.0 + rel_tol);
  return rec;
}

MonotonicityRecord monotonicity_check(const CubicalComplex& cx, const Cochain& f, const Field& phi1,
                                      const Field& phi2, const SolveOptions& opts, double rel_tol) {
  require_form_degree(cx, f);
  for (int p = 0; p <= cx.dim(); ++p)
    for (int k = 0; k < cx.count(p); ++k) {
      const Eigen::VectorXd x = cx.barycenter(p, k);
      if (phi1.value(as_span(x)) > phi2.value(as_span(x))) throw PreconditionError("weights are not ordered");
    }
  MonotonicityRecord rec;
  rec.first = weighted_norm2(cx, minimal_solution(cx, f, phi1, opts).u, phi1);
  rec.second = weighted_norm2(cx, minimal_solution(cx, f, phi2, opts).u, phi2);
  rec.holds = rec.first * (1.0 + rel_tol) >= rec.second;
  return rec;
}

// ---------------------------------------------------------------------------

CohomologyResult cohomology_rank(const CubicalComplex& cx, int p, const Field& phi, int block) {
  const int n = cx.dim();
  if (p < 0 || p > n) throw ShapeError("cohomology degree out of range");
  const int N = cx.count(p);
  CohomologyResult res;
  if (N == 0) return res;

  const Eigen::VectorXd mp = mass(cx, phi, p).diag;
  SpMat S(N, N);
  if (p > 0) {
    const SpMat B = scaled_coboundary(cx, p - 1, mass(cx, phi, p - 1).diag, mp);
    S = S + SpMat(B * SpMat(B.transpose()));
  }
  if (p < n) {
    const SpMat B = scaled_coboundary(cx, p, mp, mass(cx, phi, p + 1).diag);
    S = S + SpMat(SpMat(B.transpose()) * B);
  }
  double norm = 0.0;  // max absolute row sum bounds the spectral radius
  for (int k = 0; k < S.outerSize(); ++k) {
    double row = 0.0;
    for (SpMat::InnerIterator it(S, k); it; ++it) row += std::abs(it.value());
    norm = std::max(norm, row);
  }
  res.threshold = 1e-8 * std::max(norm, std::numeric_limits<double>::min());

  const int k = std::min(block, N);
  Eigen::VectorXd mu;
  Eigen::MatrixXd V;
  if (N <= std::max(k, 200)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(S)};
    mu = es.eigenvalues().head(k);
    V = es.eigenvectors().leftCols(k);
  } else {
    // Shift-invert subspace iteration with Rayleigh-Ritz on S.
    Eigen::SparseMatrix<double> A = Eigen::SparseMatrix<double>(S);
    const double shift = 1e-10 * norm;
    Eigen::SparseMatrix<double> I(N, N);
    I.setIdentity();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A + shift * I);
    if (ldlt.info() != Eigen::Success) throw Error("factorization of the shifted Hodge Laplacian failed");
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd X(N, k);
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < N; ++r) X(r, c) = normal(rng);
    Eigen::VectorXd prev = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
    for (int it = 0; it < 500; ++it) {
      Eigen::MatrixXd Y = ldlt.solve(X);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
      X = qr.householderQ() * Eigen::MatrixXd::Identity(N, k);
      const Eigen::MatrixXd H = X.transpose() * (A * X);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
      X = X * es.eigenvectors();
      mu = es.eigenvalues();
      // Only the zero cluster and the first eigenvalue above it decide the
      // rank; the top of the block converges much more slowly.
      int watch = 0;
      while (watch < k && mu[watch] <= 1e-8 * norm) ++watch;
      watch = std::min(k, watch + 2);
      const Eigen::ArrayXd diff = (mu - prev).head(watch).cwiseAbs().array();
      if ((diff <= 1e-12 * norm + 1e-8 * mu.head(watch).cwiseAbs().array()).all()) break;
      prev = mu;
    }
    V = X;
  }
  res.eigenvalues = mu;
  int r = 0;
  while (r < mu.size() && mu[r] <= res.threshold) ++r;
  if (r == mu.size() && r < N) throw GapAmbiguous("zero cluster fills the eigenvalue block; enlarge it");
  if (r < mu.size() && mu[r] < 10.0 * std::max(r > 0 ? mu[r - 1] : 0.0, res.threshold))
    throw GapAmbiguous("no factor-10 gap above the near-zero eigenvalues");
  res.rank = r;
  res.harmonic = mp.cwiseSqrt().cwiseInverse().asDiagonal() * V.leftCols(r);
  return res;
}

HodgeParts hodge_decompose(const CubicalComplex& cx, const Cochain& c, const Field& phi, const SolveOptions& opts) {
  const int n = cx.dim(), p = c.p;
  if (p < 0 || p > n || c.values.size() != cx.count(p)) throw ShapeError("cochain does not match the complex");
  const Eigen::VectorXd mp = mass(cx, phi, p).diag;
  const Eigen::VectorXd sq = mp.cwiseSqrt();
  const Eigen::VectorXd ct = sq.cwiseProduct(c.values);
  HodgeParts parts;
  Eigen::VectorXd exact_t = Eigen::VectorXd::Zero(ct.size()), coexact_t = exact_t;
  if (p > 0) {
    const SpMat B = scaled_coboundary(cx, p - 1, mass(cx, phi, p - 1).diag, mp);
    exact_t = B * cgls(B, ct, opts.tol, opts.max_iter).x;
  }
  if (p < n) {
    const SpMat Bt = SpMat(scaled_coboundary(cx, p, mp, mass(cx, phi, p + 1).diag).transpose());
    coexact_t = Bt * cgls(Bt, ct, opts.tol, opts.max_iter).x;
  }
  const Eigen::VectorXd inv = sq.cwiseInverse();
  parts.exact = inv.cwiseProduct(exact_t);
  parts.coexact = inv.cwiseProduct(coexact_t);
  parts.harmonic = c.values - parts.exact - parts.coexact;
  return parts;
}

// ---------------------------------------------------------------------------

PrekopaReport prekopa_check(const Field& phi_joint, int x_dim, std::span<const Eigen::VectorXd> x_samples,
                            const Eigen::VectorXd& y_lo, const Eigen::VectorXd& y_hi, int y_nodes, double fd_step,
                            double tol) {
  const int m = static_cast<int>(y_lo.size()), N = x_dim + m;
  if (phi_joint.dim() != N || y_hi.size() != m || x_dim < 1 || m < 1) throw ShapeError("prekopa_check: dimensions");
  if (y_nodes < 3) throw PreconditionError("prekopa_check: need at least 3 quadrature nodes per axis");

  // tensor trapezoid nodes and weights in y
  std::vector<Eigen::VectorXd> ys;
  std::vector<double> wy;
  std::vector<char> on_edge;
  {
    std::vector<int> idx(m, 0);
    for (;;) {
      Eigen::VectorXd y(m);
      double w = 1.0;
      bool edge = false;
      for (int i = 0; i < m; ++i) {
        const double step = (y_hi[i] - y_lo[i]) / (y_nodes - 1);
        y[i] = y_lo[i] + step * idx[i];
        const bool end = idx[i] == 0 || idx[i] == y_nodes - 1;
        w *= end ? 0.5 * step : step;
        edge = edge || end;
      }
      ys.push_back(y);
      wy.push_back(w);
      on_edge.push_back(edge);
      int i = 0;
      while (i < m && ++idx[i] == y_nodes) idx[i++] = 0;
      if (i == m) break;
    }
  }
  double volume = 1.0;
  for (int i = 0; i < m; ++i) volume *= y_hi[i] - y_lo[i];

  Eigen::VectorXd z(N);
  auto marginal = [&](const Eigen::VectorXd& x, bool check_tail) {
    z.head(x_dim) = x;
    double total = 0.0, edge_max = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      z.tail(m) = ys[k];
      const double v = std::exp(-phi_joint.value(as_span(z)));
      total += wy[k] * v;
      if (on_edge[k]) edge_max = std::max(edge_max, v);
    }
    if (check_tail && edge_max > 1e-12 * total / volume)
      throw TailError("integrand is not negligible on the quadrature box boundary");
    return -std::log(total);
  };

  PrekopaReport rep;
  rep.convex_input = true;
  for (const auto& x : x_samples) {
    z.head(x_dim) = x;
    for (std::size_t k = 0; k < ys.size(); k += std::max<std::size_t>(1, ys.size() / 64)) {
      z.tail(m) = ys[k];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi_joint.jet(as_span(z)).hess, Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -tol) rep.convex_input = false;
    }
  }
  if (!rep.convex_input) {
    rep.skipped = true;
    return rep;
  }

  rep.worst = std::numeric_limits<double>::infinity();
  const double s = fd_step;
  for (const auto& x : x_samples) {
    const double f0 = marginal(x, true);
    rep.marginal.push_back(f0);
    Eigen::MatrixXd H(x_dim, x_dim);
    for (int i = 0; i < x_dim; ++i) {
      const Eigen::VectorXd ei = Eigen::VectorXd::Unit(x_dim, i) * s;
      H(i, i) = (marginal(x + ei, false) - 2.0 * f0 + marginal(x - ei, false)) / (s * s);
      for (int j = 0; j < i; ++j) {
        const Eigen::VectorXd ej = Eigen::VectorXd::Unit(x_dim, j) * s;
        H(i, j) = H(j, i) = (marginal(x + ei + ej, false) - marginal(x + ei - ej, false) -
                             marginal(x - ei + ej, false) + marginal(x - ei - ej, false)) /
                            (4.0 * s * s);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    rep.min_hessian_eig.push_back(es.eigenvalues()(0));
    rep.worst = std::min(rep.worst, es.eigenvalues()(0));
  }
  rep.pass = rep.worst >= -tol;
  return rep;
}

}  // namespace pconvex
