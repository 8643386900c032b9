#pragma once

// Weighted minimal solutions of du = f on cubical complexes, the L^2 bound
// reports built on them, harmonic spaces, and the marginal-convexity check.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pconvex/convexity.hpp"
#include "pconvex/discrete.hpp"
#include "pconvex/field.hpp"

namespace pconvex {

struct SolveOptions {
  double tol = 1e-12;             // CGLS stop: |B^T r| <= tol |B^T b|
  int max_iter = 100000;
  double closed_tol = 1e-8;       // |df|_M <= closed_tol |f|_M
  double obstruction_tol = 1e-6;  // relative harmonic part of f
};

struct MinimalSolution {
  Cochain u;
  int iterations = 0;
  double residual = 0.0;              // |du - f|_M / |f|_M
  double harmonic_obstruction = 0.0;  // same quantity before the obstruction test
};

/// The solution of du = f that is M_{p-1}-orthogonal to Ker d. Computed by
/// CGLS on M_p^{1/2} d M_{p-1}^{-1/2}, whose minimum-norm least-squares
/// solution is the weighted minimal solution; the least-squares residual of a
/// closed f is its harmonic part. Throws NotClosed, CohomologyObstruction,
/// NoConvergence.
MinimalSolution minimal_solution(const CubicalComplex& cx, const Cochain& f, const Field& phi,
                                 const SolveOptions& opts = {});

inline constexpr double kBoundSlack = 0.05;

struct BoundReport {
  std::string test;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 1.0;
  double ratio = 0.0;  // lhs / (constant * rhs)
  double h = 0.0;
  double slack = kBoundSlack;
  bool vacuous = false;  // rhs == 0
  bool pass = false;     // vacuous or ratio <= 1 + slack
};

BoundReport make_report(std::string test, double lhs, double rhs, double constant, double h,
                        double slack = kBoundSlack);

/// |u|^2_phi against int <F_phi^{-1} f, f> e^{-phi}, constant 1.
BoundReport hormander_report(const CubicalComplex& cx, const Cochain& f, const Field& phi,
                             const SolveOptions& opts = {}, double slack = kBoundSlack);

struct BerndtssonReports {
  BoundReport bound;     // |u|^2_{phi - alpha psi} vs 4/(1-alpha)^2 int <F_psi^{-1} f,f> e^{-phi+alpha psi}
  BoundReport apriori;   // sampled twisted a priori estimate, sigma = (1 - alpha)/2
};

/// u is minimal in weight phi - alpha psi, which is the twisted solution
/// e^{-(1+alpha)psi/4} v of the proof with v minimal in phi + (1-alpha)psi/2.
/// The a priori part draws `apriori_samples` random smooth compactly
/// supported p-forms on the node grid of the complex's box.
BerndtssonReports berndtsson_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                    double alpha, std::uint64_t seed = 1, int apriori_samples = 6,
                                    const SolveOptions& opts = {}, double slack = kBoundSlack);

/// |u|_phi <= (2D/p) |f|_phi for u minimal in phi (norms, not squares).
BoundReport diameter_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, double D,
                            const SolveOptions& opts = {}, double slack = kBoundSlack);

/// int (1 - w^2)|u_phi|^2 e^{-phi+psi} vs (1+alpha)/(1-alpha) int <F_psi^{-1} f,f> e^{-phi+psi}.
BoundReport minimal_estimate_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                    const Field& omega, double alpha, const SolveOptions& opts = {},
                                    double slack = kBoundSlack);

/// u0 minimal in phi - psi/2: int (1 - w^2/4)|u0|^2 e^{-phi+psi} vs
/// (2+alpha)/(2-alpha) int <F_phi^{-1} f,f> e^{-phi+psi}.
BoundReport nonpsh_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                          const Field& omega, double alpha, const SolveOptions& opts = {},
                          double slack = kBoundSlack);

/// Constant-w variant: |u0|^2_{phi-psi} vs 4/(2-alpha)^2 int <F_phi^{-1} f,f> e^{-phi+psi}.
BoundReport nonpsh_constant_report(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                   double alpha, const SolveOptions& opts = {}, double slack = kBoundSlack);

/// The route phi1 = phi + psi, psi1 = (1+alpha) psi through the constant-w
/// report with constant 1 + alpha; the bound is 4/(1-alpha)^2.
BoundReport berndtsson_via_nonpsh(const CubicalComplex& cx, const Cochain& f, const Field& phi, const Field& psi,
                                  double alpha, const SolveOptions& opts = {}, double slack = kBoundSlack);

struct MonotonicityRecord {
  double first = 0.0;   // weighted norm^2 of the first minimal solution
  double second = 0.0;  // weighted norm^2 of the second
  bool holds = false;
};

/// Nested domains: inner is a subcomplex of outer on the same grid; f lives on
/// outer and is restricted. Checks |u_inner|^2 <= |u_outer|^2.
MonotonicityRecord monotonicity_check(const CubicalComplex& inner, const CubicalComplex& outer, const Cochain& f,
                                      const Field& phi, const SolveOptions& opts = {}, double rel_tol = 1e-8);

/// Ordered weights phi1 <= phi2 on the barycenters: checks
/// |u_1|^2_{phi1} >= |u_2|^2_{phi2}.
MonotonicityRecord monotonicity_check(const CubicalComplex& cx, const Cochain& f, const Field& phi1,
                                      const Field& phi2, const SolveOptions& opts = {}, double rel_tol = 1e-8);

struct CohomologyResult {
  int rank = 0;
  Eigen::VectorXd eigenvalues;  // smallest eigenvalues of the symmetrized Hodge Laplacian
  Eigen::MatrixXd harmonic;     // columns: M-orthonormal harmonic cochains
  double threshold = 0.0;
};

/// Dimension of the kernel of d delta_phi + delta_phi d on p-cochains by
/// shift-invert subspace iteration on the 30 smallest eigenvalues. Throws
/// GapAmbiguous without a factor-10 gap above the zero cluster.
CohomologyResult cohomology_rank(const CubicalComplex& cx, int p, const Field& phi, int block = 30);

struct HodgeParts {
  Eigen::VectorXd exact, coexact, harmonic;
};

/// c = d a + delta_phi b + harmonic, parts pairwise M_p-orthogonal.
HodgeParts hodge_decompose(const CubicalComplex& cx, const Cochain& c, const Field& phi,
                           const SolveOptions& opts = {});

struct PrekopaReport {
  bool convex_input = false;  // sampled Hessian of the joint function is PSD
  bool skipped = false;
  std::vector<double> marginal;          // phi~ at each x sample
  std::vector<double> min_hessian_eig;   // smallest eigenvalue of the FD Hessian of phi~
  double worst = 0.0;
  bool pass = false;
};

/// phi~(x) = -log int exp(-phi(x, y)) dy by tensor trapezoid quadrature over
/// [y_lo, y_hi] with y_nodes per axis; the Hessian of phi~ by central
/// differences with step fd_step. x occupies the first x_dim coordinates.
/// Throws TailError when the integrand on the box boundary exceeds 1e-12 of
/// its mean.
PrekopaReport prekopa_check(const Field& phi_joint, int x_dim, std::span<const Eigen::VectorXd> x_samples,
                            const Eigen::VectorXd& y_lo, const Eigen::VectorXd& y_hi, int y_nodes,
                            double fd_step = 1e-3, double tol = 1e-6);

}  // namespace pconvex
