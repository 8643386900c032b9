#pragma once

// p-positivity of symmetric forms, p-plurisubharmonicity of fields on sample
// sets, boundary p-convexity through a defining function, and the curvature
// term of the Bochner formula on p-forms.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pconvex/exterior.hpp"
#include "pconvex/field.hpp"
#include "pconvex/fieldexpr.hpp"

namespace pconvex {

enum class Verdict { fail = 0, semi = 1, strict = 2 };
enum class Mode { strict, semi };

const char* to_string(Verdict v);

inline constexpr double kStrictTol = 1e-8;
inline constexpr double kSemiTol = 1e-8;

struct Tolerances {
  double strict_tol = kStrictTol;
  double semi_tol = kSemiTol;
};

struct ConvexityReport {
  int p = 0;
  double min_p_trace = 0.0;
  Verdict verdict = Verdict::fail;
  /// Whether the verdict satisfies the requested mode.
  bool ok = false;
  /// Columns span the p-plane attaining the minimum trace.
  Eigen::MatrixXd witness;
};

struct FieldRegionReport {
  int p = 0;
  std::vector<Eigen::VectorXd> points;
  std::vector<ConvexityReport> reports;
  std::size_t worst = 0;
  double min_p_trace = 0.0;
  Verdict verdict = Verdict::fail;
};

/// Sum of the p smallest eigenvalues.
double min_p_trace(const QuadraticForm& theta, int p);

Verdict classify(double min_trace, const Tolerances& tol = {});

ConvexityReport is_p_positive(const QuadraticForm& theta, int p, Mode mode = Mode::strict,
                              const Tolerances& tol = {});

FieldRegionReport field_p_psh_report(const Field& phi, std::span<const Eigen::VectorXd> samples, int p,
                                     const Tolerances& tol = {});
inline FieldRegionReport field_p_psh_report(const ScalarFieldExpr& phi, std::span<const Eigen::VectorXd> samples,
                                            int p, const Tolerances& tol = {}) {
  return field_p_psh_report(phi.as_field(), samples, p, tol);
}

/// Orthonormal basis (columns) of the hyperplane orthogonal to a nonzero normal.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& normal);

/// Minimum p-trace of D^2 r restricted to the tangent space {v : <v, grad r> = 0}.
/// Requires p <= n - 1; throws DegenerateGradient where |grad r| <= grad_tol.
FieldRegionReport boundary_p_convexity(const Field& r, std::span<const Eigen::VectorXd> boundary_samples, int p,
                                       double grad_tol = 1e-10, const Tolerances& tol = {});
inline FieldRegionReport boundary_p_convexity(const ScalarFieldExpr& r,
                                              std::span<const Eigen::VectorXd> boundary_samples, int p,
                                              double grad_tol = 1e-10, const Tolerances& tol = {}) {
  return boundary_p_convexity(r.as_field(), boundary_samples, p, grad_tol, tol);
}

/// Self-adjoint operator on 2-forms in the lexicographic basis w^{ij}, i < j.
class CurvatureOperator {
 public:
  CurvatureOperator() = default;
  CurvatureOperator(int n, const Eigen::MatrixXd& m);

  static CurvatureOperator flat(int n);
  static CurvatureOperator identity(int n, double c = 1.0);

  int dim() const noexcept { return n_; }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double smallest_eigenvalue() const;
  double largest_eigenvalue() const;

 private:
  int n_ = 0;
  Eigen::MatrixXd m_;
};

/// The 2-forms sum_a sum_i g_{i1..(i)_a..ip} w^i ^ w^{i_a}, one per increasing
/// (i1 < ... < ip), in lexicographic order.
std::vector<PointForm> xi_forms(const PointForm& g);

/// sum over increasing multi-indices of <R xi, xi>.
double curvature_term(const CurvatureOperator& R, const PointForm& g);

struct CurvatureBounds {
  double term = 0.0;
  double lower = 0.0;  // p(n-p) * smallest eigenvalue * |g|^2
  double upper = 0.0;  // p(n-p) * largest eigenvalue * |g|^2
  bool holds = false;
};

CurvatureBounds curvature_bounds_check(const CurvatureOperator& R, const PointForm& g, double slack = 1e-10);

/// For each increasing J, counts the (I, a, i) with i not in I for which the
/// index list I with i_a replaced by i is a permutation of J. Every count is
/// checked to be equal; the common value is returned.
int signature_count(int n, int p);

/// p-positivity of F_phi + p(n-p) lambda Id on p-forms.
ConvexityReport thm71_hypothesis(const QuadraticForm& theta_phi, double lambda_R, int p,
                                 Mode mode = Mode::strict, const Tolerances& tol = {});

}  // namespace pconvex
