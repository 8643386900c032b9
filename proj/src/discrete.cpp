#include "pconvex/discrete.hpp"

#include <bit>
#include <cmath>
#include <ostream>
#include <string>

#include "pconvex/errors.hpp"
#include "pconvex/exterior.hpp"

namespace pconvex {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

// Odometer over anchors 0 <= a_i < extent_i; returns false after the last one.
bool next(std::vector<int>& a, const std::vector<int>& extent) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (++a[i] < extent[i]) return true;
    a[i] = 0;
  }
  return false;
}

}  // namespace

std::vector<int> GridDomain::counts() const {
  const int n = dim();
  if (n < 1 || n > kMaxDim) throw ShapeError("grid dimension out of range");
  if (hi.size() != n) throw ShapeError("grid box bounds differ in dimension");
  if (!(h > 0.0)) throw PreconditionError("grid spacing must be positive");
  std::vector<int> c(n);
  for (int i = 0; i < n; ++i) {
    const double m = (hi[i] - lo[i]) / h;
    const double rm = std::round(m);
    if (std::abs(m - rm) > 1e-9 * std::max(1.0, rm))
      throw PreconditionError("box side " + std::to_string(i + 1) + " is not a multiple of h");
    if (rm < 2) throw PreconditionError("grid needs at least 2 cells per axis");
    c[i] = static_cast<int>(rm);
  }
  return c;
}

GridDomain GridDomain::box(std::span<const double> lo, std::span<const double> hi, double h, std::optional<Field> r) {
  GridDomain d;
  d.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  d.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  d.h = h;
  d.r = std::move(r);
  if (d.r && d.r->dim() != d.dim()) throw ShapeError("defining function dimension differs from the box");
  d.counts();
  return d;
}

// ---------------------------------------------------------------------------

long CubicalComplex::slot(std::uint32_t mask, std::span<const int> a) const {
  long s = 0, stride = 1;
  for (int i = 0; i < n_; ++i) {
    const int extent = counts_[i] + ((mask >> i) & 1u ? 0 : 1);
    if (a[i] < 0 || a[i] >= extent) return -1;
    s += a[i] * stride;
    stride *= extent;
  }
  return s;
}

int CubicalComplex::find(std::uint32_t mask, std::span<const int> a) const {
  const long s = slot(mask, a);
  return s < 0 ? -1 : index_[mask][static_cast<std::size_t>(s)];
}

Eigen::VectorXd CubicalComplex::anchor_point(int p, int k) const {
  Eigen::VectorXd x(n_);
  const auto a = anchor(p, k);
  for (int i = 0; i < n_; ++i) x[i] = dom_.lo[i] + h_ * a[i];
  return x;
}

Eigen::VectorXd CubicalComplex::barycenter(int p, int k) const {
  Eigen::VectorXd x = anchor_point(p, k);
  const std::uint32_t m = mask(p, k);
  for (int i = 0; i < n_; ++i)
    if ((m >> i) & 1u) x[i] += 0.5 * h_;
  return x;
}

long CubicalComplex::euler_characteristic() const {
  long chi = 0;
  for (int p = 0; p <= n_; ++p) chi += (p % 2 ? -1L : 1L) * count(p);
  return chi;
}

CubicalComplex build_complex(const GridDomain& dom) {
  CubicalComplex cx;
  cx.dom_ = dom;
  cx.n_ = dom.dim();
  cx.h_ = dom.h;
  cx.counts_ = dom.counts();
  const int n = cx.n_;
  cx.masks_.assign(n + 1, {});
  cx.anchors_.assign(n + 1, {});
  cx.index_.assign(std::size_t{1} << n, {});

  for (int p = 0; p <= n; ++p) {
    for (std::uint32_t m : basis_masks(n, p)) {
      std::vector<int> extent(n);
      long total = 1;
      for (int i = 0; i < n; ++i) {
        extent[i] = cx.counts_[i] + ((m >> i) & 1u ? 0 : 1);
        total *= extent[i];
      }
      auto& idx = cx.index_[m];
      idx.assign(static_cast<std::size_t>(total), -1);
      std::vector<int> a(n, 0), face(n);
      do {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = dom.lo[i] + dom.h * (a[i] + ((m >> i) & 1u ? 0.5 : 0.0));
        if (dom.r && !(dom.r->value(as_span(x)) < 0.0)) continue;
        bool closed = true;
        for (int i = 0; i < n && closed; ++i) {
          if (!((m >> i) & 1u)) continue;
          const std::uint32_t fm = m & ~(1u << i);
          face = a;
          if (cx.find(fm, face) < 0) closed = false;
          face[i] += 1;
          if (closed && cx.find(fm, face) < 0) closed = false;
        }
        if (!closed) continue;
        idx[static_cast<std::size_t>(cx.slot(m, a))] = static_cast<int>(cx.masks_[p].size());
        cx.masks_[p].push_back(m);
        cx.anchors_[p].insert(cx.anchors_[p].end(), a.begin(), a.end());
      } while (next(a, extent));
    }
  }
  if (cx.count(0) == 0) throw EmptyDomain("no grid vertex lies in {r < 0}");

  for (int p = 0; p < n; ++p) {
    std::vector<Eigen::Triplet<int>> t;
    std::vector<int> face(n);
    for (int k = 0; k < cx.count(p + 1); ++k) {
      const std::uint32_t m = cx.mask(p + 1, k);
      const auto a = cx.anchor(p + 1, k);
      int pos = 0;
      for (int i = 0; i < n; ++i) {
        if (!((m >> i) & 1u)) continue;
        const int sign = (pos++ % 2) ? -1 : 1;
        const std::uint32_t fm = m & ~(1u << i);
        face.assign(a.begin(), a.end());
        t.emplace_back(k, cx.find(fm, face), -sign);
        face[i] += 1;
        t.emplace_back(k, cx.find(fm, face), sign);
      }
    }
    IntMatrix d(cx.count(p + 1), cx.count(p));
    d.setFromTriplets(t.begin(), t.end());
    cx.d_.push_back(std::move(d));
  }
  for (int p = 0; p + 1 < n; ++p) {
    IntMatrix dd = cx.d_[p + 1] * cx.d_[p];
    dd.prune(0);
    if (dd.nonZeros() != 0) throw Error("coboundary does not square to zero");
  }
  return cx;
}

const IntMatrix& coboundary(const CubicalComplex& cx, int p) {
  if (p < 0 || p >= cx.dim()) throw ShapeError("coboundary degree out of range");
  return cx.coboundary(p);
}

WeightedMass mass(const CubicalComplex& cx, const Field& phi, int p) {
  if (p < 0 || p > cx.dim()) throw ShapeError("mass degree out of range");
  WeightedMass m{p, Eigen::VectorXd(cx.count(p))};
  const double scale = std::pow(cx.h(), cx.dim() - 2 * p);
  for (int k = 0; k < cx.count(p); ++k) m.diag[k] = std::exp(-phi.value(as_span(cx.barycenter(p, k)))) * scale;
  return m;
}

double mass_dot(const WeightedMass& m, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a.array() * m.diag.array() * b.array()).sum();
}

SpMat weighted_adjoint(const CubicalComplex& cx, const Field& phi, int p) {
  if (p < 1 || p > cx.dim()) throw ShapeError("weighted adjoint needs 1 <= p <= n");
  const Eigen::VectorXd lower = mass(cx, phi, p - 1).diag, upper = mass(cx, phi, p).diag;
  SpMat dt = cx.coboundary(p - 1).cast<double>().transpose();
  return lower.cwiseInverse().asDiagonal() * dt * upper.asDiagonal();
}

Eigen::VectorXd apply_d(const CubicalComplex& cx, int p, const Eigen::VectorXd& c) {
  return cx.coboundary(p).cast<double>() * c;
}

Cochain sample_cochain(const CubicalComplex& cx, std::span<const Field> coeffs, int p) {
  const int n = cx.dim();
  if (p < 0 || p > n) throw ShapeError("cochain degree out of range");
  if (static_cast<long>(coeffs.size()) != binomial(n, p)) throw ShapeError("need C(n,p) coefficient fields");
  Cochain c{p, Eigen::VectorXd(cx.count(p))};
  const double hp = std::pow(cx.h(), p);
  for (int k = 0; k < cx.count(p); ++k)
    c.values[k] = coeffs[mask_rank(cx.mask(p, k), n)].value(as_span(cx.barycenter(p, k))) * hp;
  return c;
}

Eigen::MatrixXd reconstruct_at_top_cells(const CubicalComplex& cx, const Cochain& c) {
  const int n = cx.dim(), p = c.p;
  const auto masks = basis_masks(n, p);
  Eigen::MatrixXd out(cx.count(n), static_cast<Eigen::Index>(masks.size()));
  const double scale = 1.0 / (std::ldexp(1.0, n - p) * std::pow(cx.h(), p));
  std::vector<int> a(n);
  for (int k = 0; k < cx.count(n); ++k) {
    const auto base = cx.anchor(n, k);
    for (std::size_t r = 0; r < masks.size(); ++r) {
      const std::uint32_t m = masks[r];
      const std::uint32_t free = ~m & ((1u << n) - 1u);
      double s = 0.0;
      // all offsets in {0,1} along the axes outside m
      for (std::uint32_t sub = free;; sub = (sub - 1) & free) {
        for (int i = 0; i < n; ++i) a[i] = base[i] + static_cast<int>((sub >> i) & 1u);
        const int id = cx.find(m, a);
        if (id < 0) throw Error("top cell is missing a face");
        s += c.values[id];
        if (sub == 0) break;
      }
      out(k, static_cast<Eigen::Index>(r)) = s * scale;
    }
  }
  return out;
}

std::vector<int> cell_map(const CubicalComplex& inner, const CubicalComplex& outer, int p) {
  if (inner.dim() != outer.dim() || inner.h() != outer.h() || !inner.domain().lo.isApprox(outer.domain().lo) ||
      inner.domain().counts() != outer.domain().counts())
    throw ShapeError("cell_map: complexes are on different grids");
  std::vector<int> map(inner.count(p));
  for (int k = 0; k < inner.count(p); ++k) {
    map[k] = outer.find(inner.mask(p, k), inner.anchor(p, k));
    if (map[k] < 0) throw PreconditionError("cell_map: inner complex is not contained in the outer one");
  }
  return map;
}

void write_cochain_csv(std::ostream& os, const CubicalComplex& cx, const Cochain& c) {
  os << "cell_id";
  for (int i = 1; i <= cx.dim(); ++i) os << ",x" << i;
  os << ",value\n";
  os.precision(17);
  for (int k = 0; k < cx.count(c.p); ++k) {
    os << k;
    const Eigen::VectorXd x = cx.anchor_point(c.p, k);
    for (int i = 0; i < cx.dim(); ++i) os << ',' << x[i];
    os << ',' << c.values[k] << '\n';
  }
}

Field bump_field(std::span<const double> center, double radius, double amplitude) {
  const int n = static_cast<int>(center.size());
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(center.data(), n);
  const double r2 = radius * radius;
  auto s_of = [c, r2](std::span<const double> x) {
    return (Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - c).squaredNorm() / r2;
  };
  return Field(
      n,
      [=](std::span<const double> x) {
        const Eigen::VectorXd d =
            Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - c;
        Jet2 s{d.squaredNorm() / r2, 2.0 * d / r2, (2.0 / r2) * Eigen::MatrixXd::Identity(n, n)};
        if (s.value >= 1.0) return Jet2::constant(n, 0.0);
        const double t = 1.0 - s.value;
        const double f = amplitude * std::exp(1.0 - 1.0 / t);
        return chain(s, f, -f / (t * t), f * (1.0 / (t * t * t * t) - 2.0 / (t * t * t)));
      },
      "bump", [=](std::span<const double> x) {
        const double s = s_of(x);
        return s >= 1.0 ? 0.0 : amplitude * std::exp(1.0 - 1.0 / (1.0 - s));
      });
}

// ---------------------------------------------------------------------------

void for_each_node(std::span<const Field> g, int p, const GridDomain& dom,
                   const std::function<void(const NodeForm&)>& visit) {
  const int n = dom.dim();
  if (p < 0 || p > n) throw ShapeError("node form degree out of range");
  if (static_cast<long>(g.size()) != binomial(n, p)) throw ShapeError("need C(n,p) coefficient fields");
  const std::vector<int> cells = dom.counts();
  std::vector<int> extent(n);
  std::vector<long> stride(n);
  long total = 1;
  for (int i = 0; i < n; ++i) {
    extent[i] = cells[i] + 1;
    stride[i] = total;
    total *= extent[i];
  }
  const double h = dom.h;

  std::vector<PointForm> gv(static_cast<std::size_t>(total), PointForm(n, p));
  std::vector<char> outside(static_cast<std::size_t>(total), 0);
  std::vector<Eigen::VectorXd> node(static_cast<std::size_t>(total));
  std::vector<int> a(n, 0);
  double gmax = 0.0;
  long id = 0;
  do {
    Eigen::VectorXd x(n);
    bool edge = false;
    for (int i = 0; i < n; ++i) {
      x[i] = dom.lo[i] + h * a[i];
      edge = edge || a[i] == 0 || a[i] == cells[i];
    }
    node[id] = x;
    outside[id] = edge || (dom.r && !(dom.r->value(as_span(x)) < 0.0));
    for (std::size_t r = 0; r < g.size(); ++r) gv[id][r] = g[r].value(as_span(x));
    if (gv[id].size() > 0) gmax = std::max(gmax, gv[id].vec().cwiseAbs().maxCoeff());
    ++id;
  } while (next(a, extent));

  // Collar: nodes within two grid steps (in every axis) of the complement.
  const double negligible = 1e-12 * gmax;
  id = 0;
  do {
    if (outside[id]) {
      std::vector<int> off(n, 0), ext(n, 5);
      do {
        long nb = 0;
        bool valid = true;
        for (int i = 0; i < n; ++i) {
          const int c = a[i] + off[i] - 2;
          valid = valid && c >= 0 && c < extent[i];
          nb += c * stride[i];
        }
        if (valid && gv[nb].size() > 0 && gv[nb].vec().cwiseAbs().maxCoeff() > negligible)
          throw SupportError("g is nonzero within 2h of the domain boundary");
      } while (next(off, ext));
    }
    ++id;
  } while (next(a, extent));

  NodeForm s;
  s.dv = std::pow(h, n);
  s.Dg.assign(n, PointForm(n, p));
  id = 0;
  do {
    bool interior = true;
    for (int i = 0; i < n; ++i) interior = interior && a[i] > 0 && a[i] < cells[i];
    if (interior) {
      s.x = node[id];
      s.g = gv[id];
      for (int i = 0; i < n; ++i) {
        s.Dg[i] = gv[id + stride[i]] - gv[id - stride[i]];
        s.Dg[i] *= 0.5 / h;
      }
      visit(s);
    }
    ++id;
  } while (next(a, extent));
}

PointForm node_d(const NodeForm& s) {
  const int n = s.g.dim(), p = s.g.degree();
  if (p == n) return PointForm(n, n);
  PointForm dg(n, p + 1);
  std::vector<double> e(n, 0.0);
  for (int i = 0; i < n; ++i) {
    e.assign(n, 0.0);
    e[i] = 1.0;
    dg += wedge(PointForm::covector(e), s.Dg[i]);
  }
  return dg;
}

PointForm node_delta(const NodeForm& s, const Eigen::VectorXd& grad_chi) {
  const int n = s.g.dim(), p = s.g.degree();
  if (p == 0) return PointForm(n, 0);
  PointForm div = interior_product({grad_chi.data(), static_cast<std::size_t>(n)}, s.g);
  std::vector<double> e(n, 0.0);
  for (int i = 0; i < n; ++i) {
    e.assign(n, 0.0);
    e[i] = 1.0;
    div -= interior_product(e, s.Dg[i]);
  }
  return div;
}

KMHRecord kmh_residual(std::span<const Field> g, int p, const Field& phi, const GridDomain& dom) {
  KMHRecord rec;
  rec.h = dom.h;
  for_each_node(g, p, dom, [&](const NodeForm& s) {
    const Jet2 j = phi.jet(as_span(s.x));
    const double w = std::exp(-j.value) * s.dv;
    double grad2 = 0.0;
    for (const auto& D : s.Dg) grad2 += D.norm2();
    rec.lhs += (node_d(s).norm2() + node_delta(s, j.grad).norm2()) * w;
    rec.rhs_gradient_term += grad2 * w;
    if (p > 0) rec.rhs_F_term += dot(apply_F(QuadraticForm(j.hess), s.g), s.g) * w;
  });
  const double rhs = rec.rhs_gradient_term + rec.rhs_F_term;
  const double denom = std::abs(rec.lhs) + std::abs(rhs);
  rec.residual = denom > 0.0 ? std::abs(rec.lhs - rhs) / denom : 0.0;
  return rec;
}

}  // namespace pconvex
