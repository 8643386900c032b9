#pragma once

// Cubical cochain complexes on gridded domains {r < 0} and the node-sampled
// check of the weighted Bochner-Kodaira (Kohn-Morrey-Hormander) identity.
//
// A p-cell is an axis subset M (|M| = p, bitmask) and an anchor vertex a in
// integer grid coordinates; it is the cube a + [0,1]^M scaled by h. Cochain
// values approximate integrals over cells.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pconvex/exterior.hpp"
#include "pconvex/field.hpp"

namespace pconvex {

struct GridDomain {
  Eigen::VectorXd lo, hi;
  double h = 0.0;
  std::optional<Field> r;  // domain is {r < 0} within the box; absent = whole box

  int dim() const { return static_cast<int>(lo.size()); }
  /// Cells per axis; throws unless (hi - lo) / h is an integer >= 2 on every axis.
  std::vector<int> counts() const;

  static GridDomain box(std::span<const double> lo, std::span<const double> hi, double h,
                        std::optional<Field> r = std::nullopt);
};

struct Cochain {
  int p = 0;
  Eigen::VectorXd values;
};

struct WeightedMass {
  int p = 0;
  Eigen::VectorXd diag;
};

using IntMatrix = Eigen::SparseMatrix<int, Eigen::RowMajor>;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class CubicalComplex {
 public:
  int dim() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  const GridDomain& domain() const noexcept { return dom_; }

  int count(int p) const { return static_cast<int>(masks_.at(p).size()); }
  std::uint32_t mask(int p, int k) const { return masks_[p][k]; }
  std::span<const int> anchor(int p, int k) const {
    return {anchors_[p].data() + static_cast<std::size_t>(k) * n_, static_cast<std::size_t>(n_)};
  }
  Eigen::VectorXd barycenter(int p, int k) const;
  /// Physical coordinates of the anchor vertex.
  Eigen::VectorXd anchor_point(int p, int k) const;

  /// Cell id or -1 when the cell is not in the complex (or off the grid).
  int find(std::uint32_t mask, std::span<const int> anchor) const;

  /// d_p : C^p -> C^{p+1}, for 0 <= p < n.
  const IntMatrix& coboundary(int p) const { return d_.at(p); }

  long euler_characteristic() const;

  friend CubicalComplex build_complex(const GridDomain& dom);

 private:
  long slot(std::uint32_t mask, std::span<const int> anchor) const;

  GridDomain dom_;
  int n_ = 0;
  double h_ = 0.0;
  std::vector<int> counts_;
  std::vector<std::vector<std::uint32_t>> masks_;  // per degree
  std::vector<std::vector<int>> anchors_;          // per degree, n ints per cell
  std::vector<std::vector<int>> index_;            // per axis mask, dense grid -> id
  std::vector<IntMatrix> d_;
};

/// Includes a cell when r(barycenter) < 0 and all its facets are included.
/// Verifies d_{p+1} d_p = 0 in integer arithmetic. Throws EmptyDomain.
CubicalComplex build_complex(const GridDomain& dom);

const IntMatrix& coboundary(const CubicalComplex& cx, int p);

/// exp(-phi(barycenter)) h^{n-2p} for every p-cell.
WeightedMass mass(const CubicalComplex& cx, const Field& phi, int p);

/// delta_phi = M_{p-1}^{-1} d_{p-1}^T M_p : C^p -> C^{p-1}.
SpMat weighted_adjoint(const CubicalComplex& cx, const Field& phi, int p);

/// Weighted inner product sum_s a_s b_s M_s.
double mass_dot(const WeightedMass& m, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// coeffs[I] is the coefficient of w^I (lexicographic order); the value on a
/// cell with axes M is coeffs[M](barycenter) * h^p.
Cochain sample_cochain(const CubicalComplex& cx, std::span<const Field> coeffs, int p);

Eigen::VectorXd apply_d(const CubicalComplex& cx, int p, const Eigen::VectorXd& c);

/// Per n-cell reconstruction of a p-cochain as point coefficients: the average
/// of the 2^{n-p} parallel faces, divided by h^p. Row k holds the form at the
/// center of n-cell k.
Eigen::MatrixXd reconstruct_at_top_cells(const CubicalComplex& cx, const Cochain& c);

/// Ids in `outer` of every p-cell of `inner`; both must share the grid.
std::vector<int> cell_map(const CubicalComplex& inner, const CubicalComplex& outer, int p);

/// CSV with header cell_id,x1..xn,value (anchor coordinates).
void write_cochain_csv(std::ostream& os, const CubicalComplex& cx, const Cochain& c);

/// C-infinity bump exp(1 - 1/(1 - s)), s = |x - center|^2 / radius^2, zero for s >= 1.
Field bump_field(std::span<const double> center, double radius, double amplitude = 1.0);

/// A smooth p-form at an interior node of a box grid with central-difference
/// partial derivatives Dg[j] = (g(x + h e_j) - g(x - h e_j)) / 2h.
struct NodeForm {
  Eigen::VectorXd x;
  PointForm g;
  std::vector<PointForm> Dg;
  double dv = 0.0;  // h^n
};

/// Visits every node strictly inside the box. Throws SupportError if g is
/// non-negligible (above 1e-12 of its maximum) on a node within 2h of the
/// complement of the domain.
void for_each_node(std::span<const Field> g, int p, const GridDomain& dom,
                   const std::function<void(const NodeForm&)>& visit);

/// dg = sum_j w^j ^ D_j g.
PointForm node_d(const NodeForm& s);
/// delta_chi g = -sum_j e_j -| D_j g + grad chi -| g.
PointForm node_delta(const NodeForm& s, const Eigen::VectorXd& grad_chi);

struct KMHRecord {
  double lhs = 0.0;               // |dg|^2_phi + |delta_phi g|^2_phi
  double rhs_gradient_term = 0.0;  // sum_j,I int |d_j g_I|^2 e^{-phi}
  double rhs_F_term = 0.0;         // int <F_phi g, g> e^{-phi}
  double residual = 0.0;           // |lhs - rhs| / (|lhs| + |rhs|)
  double h = 0.0;
};

/// Node-grid check of the identity for a compactly supported p-form given by
/// its coefficient fields. Derivatives of g are central differences; phi's
/// jets are exact; integrals are node sums times h^n. Throws SupportError if
/// g is nonzero on a node within 2h of the complement of the domain.
KMHRecord kmh_residual(std::span<const Field> g, int p, const Field& phi, const GridDomain& dom);

}  // namespace pconvex
