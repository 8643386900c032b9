#pragma once

// Pointwise exterior algebra on R^n with the Euclidean metric.
//
// A p-form is stored by its coefficients g_J on the basis w^J, J a strictly
// increasing multi-index, ordered lexicographically. Internally a multi-index
// is a bitmask over {1..n}; n is limited to 12.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pconvex {

inline constexpr int kMaxDim = 12;

/// Strictly increasing list of 1-based indices.
using MultiIndex = std::vector<int>;

long binomial(int n, int k);

/// Lexicographic rank of a multi-index among all multi-indices of its length.
int rank(const MultiIndex& index, int n);
MultiIndex unrank(int r, int n, int p);

/// Bitmask (bit i-1 set for index i) <-> multi-index.
std::uint32_t to_mask(const MultiIndex& index);
MultiIndex from_mask(std::uint32_t mask);

/// Masks of all p-subsets of {1..n} in lexicographic order, and the inverse map.
std::span<const std::uint32_t> basis_masks(int n, int p);
int mask_rank(std::uint32_t mask, int n);

class PointForm {
 public:
  PointForm() = default;
  PointForm(int n, int p);
  PointForm(int n, int p, std::vector<double> coeffs);

  static PointForm basis(int n, const MultiIndex& index, double value = 1.0);
  static PointForm scalar(int n, double value);
  /// The 1-form tau_i w^i.
  static PointForm covector(std::span<const double> tau);

  int dim() const noexcept { return n_; }
  int degree() const noexcept { return p_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  double& operator[](std::size_t r) { return coeffs_[r]; }
  double operator[](std::size_t r) const { return coeffs_[r]; }
  double coeff(const MultiIndex& index) const;

  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<double> coeffs() noexcept { return coeffs_; }
  Eigen::Map<const Eigen::VectorXd> vec() const {
    return {coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size())};
  }

  double norm2() const;
  double norm() const;

  PointForm& operator+=(const PointForm& other);
  PointForm& operator-=(const PointForm& other);
  PointForm& operator*=(double s);

 private:
  int n_ = 0;
  int p_ = 0;
  std::vector<double> coeffs_;
};

PointForm operator+(PointForm a, const PointForm& b);
PointForm operator-(PointForm a, const PointForm& b);
PointForm operator*(double s, PointForm a);
double dot(const PointForm& a, const PointForm& b);

/// Symmetric n x n matrix; the input is symmetrized on construction.
class QuadraticForm {
 public:
  QuadraticForm() = default;
  explicit QuadraticForm(const Eigen::MatrixXd& m);

  static QuadraticForm identity(int n, double scale = 1.0);
  static QuadraticForm diagonal(std::span<const double> d);
  static QuadraticForm outer(std::span<const double> tau);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  QuadraticForm operator+(const QuadraticForm& o) const { return QuadraticForm(m_ + o.m_); }
  QuadraticForm operator-(const QuadraticForm& o) const { return QuadraticForm(m_ - o.m_); }
  QuadraticForm operator*(double s) const { return QuadraticForm(s * m_); }

 private:
  Eigen::MatrixXd m_;
};

PointForm wedge(const PointForm& a, const PointForm& b);
PointForm interior_product(std::span<const double> v, const PointForm& g);

/// F_theta g = theta_jk w^k ^ (e_j -| g).
PointForm apply_F(const QuadraticForm& theta, const PointForm& g);

/// Dense C(n,p) x C(n,p) matrix of apply_F in the lexicographic basis.
Eigen::MatrixXd F_matrix(const QuadraticForm& theta, int p);

struct EigenSummaryF {
  int p = 0;
  /// lambda_J over all |J| = p, ascending.
  std::vector<double> values;
  /// Eigenvalues of theta, ascending, and orthonormal eigenvectors as columns.
  Eigen::VectorXd base_values;
  Eigen::MatrixXd base_vectors;
};

EigenSummaryF eigen_F(const QuadraticForm& theta, int p);

inline constexpr double kDefaultPinvTol = 1e-9;

/// F_theta^{-1} restricted to Im F_theta. Throws MembershipError when the part
/// of f in Ker F_theta exceeds tol * |f|.
PointForm pinv_F(const QuadraticForm& theta, const PointForm& f, double tol = kDefaultPinvTol);

/// Norm of the component of f in Ker F_theta (kernel cut at tol * max |lambda_J|).
double kernel_component(const QuadraticForm& theta, const PointForm& f,
                        double tol = kDefaultPinvTol);

struct Lemma11Record {
  bool membership_ok = false;
  bool cross_ineq_ok = false;
  bool self_ineq_ok = false;
  double membership_residual = 0.0;  // |Ker part of tau^xi| / |tau^xi|
  double cross_lhs = 0.0;            // <F^{-1} f, tau^xi>
  double cross_rhs = 0.0;            // <F^{-1} f, f>^{1/2} |xi|
  double self_lhs = 0.0;             // <F^{-1}(tau^xi), tau^xi>
  double self_rhs = 0.0;             // |xi|^2
};

/// Checks the three conclusions of the rank-one image lemma for theta with
/// theta - tau (x) tau p-positive semi-definite. When f is absent, f = tau ^ xi.
Lemma11Record lemma11_verify(const QuadraticForm& theta, std::span<const double> tau,
                             const PointForm& xi, const std::optional<PointForm>& f = {},
                             double slack = 1e-10);

struct InverseBoundRecord {
  double lhs = 0.0;  // <F^{-1} g, g>
  double rhs = 0.0;  // (1/p^2) theta^{jk} g_jK g_kK
  bool holds = false;
};

InverseBoundRecord inverse_bound_check(const QuadraticForm& theta, const PointForm& g,
                                       double slack = 1e-12);

}  // namespace pconvex
