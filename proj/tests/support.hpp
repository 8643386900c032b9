#pragma once

// Test-side helpers: random inputs, brute-force index arithmetic that does not
// share code with the library, and the standard cochain battery.

#include <algorithm>
#include <cmath>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pconvex/discrete.hpp"
#include "pconvex/exterior.hpp"
#include "pconvex/fieldexpr.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::MatrixXd random_symmetric(Rng& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = uniform(rng);
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_psd(Rng& rng, int n, int rank = -1) {
  if (rank < 0) rank = n;
  Eigen::MatrixXd b(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) b(i, j) = uniform(rng);
  return b * b.transpose();
}

inline Eigen::MatrixXd random_pd(Rng& rng, int n) {
  return random_psd(rng, n) + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

inline std::vector<double> random_vector(Rng& rng, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng);
  return v;
}

inline pconvex::PointForm random_form(Rng& rng, int n, int p) {
  pconvex::PointForm g(n, p);
  for (std::size_t r = 0; r < g.size(); ++r) g[r] = uniform(rng);
  return g;
}

/// All increasing p-subsets of {1..n}, lexicographic, built recursively.
inline std::vector<std::vector<int>> subsets(int n, int p) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == p) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i <= n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  return out;
}

/// Sign of the permutation sorting `idx` (0 if an index repeats); sorts it in place.
inline int sort_sign(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j) {
      if (idx[j] == idx[j + 1]) return 0;
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
    }
  for (std::size_t j = 0; j + 1 < idx.size(); ++j)
    if (idx[j] == idx[j + 1]) return 0;
  return sign;
}

/// Coefficient g_{i1...ip} for an arbitrary (unsorted) index list.
inline double coeff_any(const pconvex::PointForm& g, std::vector<int> idx) {
  const int s = sort_sign(idx);
  if (s == 0) return 0.0;
  const auto all = subsets(g.dim(), g.degree());
  const auto it = std::find(all.begin(), all.end(), idx);
  return s * g[static_cast<std::size_t>(it - all.begin())];
}

/// theta_jk g_{jK} g_{kK} summed over increasing K of length p-1.
inline double quadratic_identity_rhs(const Eigen::MatrixXd& theta, const pconvex::PointForm& g) {
  const int n = g.dim(), p = g.degree();
  double s = 0.0;
  for (const auto& K : subsets(n, p - 1))
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k) {
        std::vector<int> jK{j}, kK{k};
        jK.insert(jK.end(), K.begin(), K.end());
        kK.insert(kK.end(), K.begin(), K.end());
        s += theta(j - 1, k - 1) * coeff_any(g, jK) * coeff_any(g, kK);
      }
  return s;
}

inline std::span<const double> span_of(const Eigen::VectorXd& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

/// d of the vertex samples of a scalar field: an exactly closed 1-cochain.
inline pconvex::Cochain exact_one_cochain(const pconvex::CubicalComplex& cx, const pconvex::Field& u) {
  Eigen::VectorXd v(cx.count(0));
  for (int k = 0; k < cx.count(0); ++k) v[k] = u.value(span_of(cx.barycenter(0, k)));
  return pconvex::Cochain{1, pconvex::apply_d(cx, 0, v)};
}

inline pconvex::CubicalComplex unit_square(double h) {
  const double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
  return pconvex::build_complex(pconvex::GridDomain::box(lo, hi, h));
}

inline pconvex::Field expr(std::string_view src, int n) { return pconvex::ScalarFieldExpr::parse(src, n).as_field(); }

}  // namespace testing
