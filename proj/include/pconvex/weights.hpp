#pragma once

// Weight constructions: C^2 monotone reparametrizations of an exhaustion
// (convexification and integrability growth), the cubic hinge family, the
// Diederich-Fornaess exponent search and the quadratic diameter weight.

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pconvex/convexity.hpp"
#include "pconvex/field.hpp"
#include "pconvex/fieldexpr.hpp"

namespace pconvex {

/// A C^2 map of the real line given by value, first and second derivative.
struct ScalarMap {
  std::string name;
  std::function<std::array<double, 3>(double)> eval;

  std::array<double, 3> operator()(double t) const { return eval(t); }
};

ScalarMap identity_map();
/// t -> t + g(t).
ScalarMap plus_identity(const ScalarMap& g);

/// Smallest second derivative and smallest first derivative over a uniform
/// sample of [lo, hi].
struct MapShape {
  double min_d1 = 0.0;
  double min_d2 = 0.0;
  bool convex_nondecreasing(double tol = 1e-12) const { return min_d1 >= -tol && min_d2 >= -tol; }
};
MapShape sample_shape(const ScalarMap& m, double lo, double hi, int samples = 1001);

/// base followed by modifiers[0], then modifiers[1], ...
class PiecewiseWeight {
 public:
  PiecewiseWeight() = default;
  explicit PiecewiseWeight(Field base, std::vector<ScalarMap> modifiers = {});

  PiecewiseWeight then(ScalarMap m) const;

  int dim() const { return base_.dim(); }
  const Field& base() const noexcept { return base_; }
  const std::vector<ScalarMap>& modifiers() const noexcept { return modifiers_; }

  Jet2 jet(std::span<const double> x) const;
  double value(std::span<const double> x) const;
  Field as_field() const;

 private:
  Field base_;
  std::vector<ScalarMap> modifiers_;
};

/// chi_nu(t) = nu * max(t, 0)^3.
ScalarMap chi_family(int nu);

/// Convex non-decreasing C^2 map that is affine with slope slopes[0] below
/// knots[0], ramps its slope from slopes[k] to slopes[k+1] across
/// [knots[k], knots[k+1]] with a triangular second derivative, and is affine
/// with slope slopes.back() above knots.back(). Requires
/// slopes.size() == knots.size() and nondecreasing slopes; value(knots[0]) = offset.
ScalarMap slope_spline(std::string name, std::vector<double> knots, std::vector<double> slopes, double offset = 0.0);

struct ConvexifyResult {
  PiecewiseWeight weight;  // kappa o phi
  std::vector<double> knots;
  std::vector<double> slopes;   // kappa' at the knots
  std::vector<double> sigma;    // per-shell lower bound on kappa'
  double min_margin = 0.0;      // min over samples of min_p_trace(D^2 (kappa o phi)) + p omega
  bool first_shell_exempt = false;
};

/// Builds kappa o phi with min_p_trace(D^2(kappa o phi)) + p * omega > 0 at
/// every sample. Shells are {phi < c_0}, [c_0, c_1), ..., [c_m, inf). With
/// exempt_first_shell the shell {phi < c_0} is neither checked nor required
/// to be strictly convex.
ConvexifyResult convexify(const PiecewiseWeight& phi, const Field& omega, int p, std::span<const double> sublevels,
                          std::span<const Eigen::VectorXd> samples, bool exempt_first_shell = false);

struct IntegrabilityResult {
  PiecewiseWeight weight;          // phi + gamma o phi
  ScalarMap gamma;
  std::vector<double> gamma_at;    // gamma(c + nu), nu = 1..N
  std::vector<double> targets;     // nu + log I_nu (or -inf for empty shells)
  double tail_bound = 0.0;         // sum_nu exp(-gamma(c + nu)) I_nu
};

/// sublevel_integrals[k] is the integral of |eta|^2 over {phi < c + k + 2},
/// i.e. the shell index nu = k + 1. gamma vanishes below c and satisfies
/// gamma(c + nu) >= nu + log I_nu + margin.
IntegrabilityResult integrability_modifier(const PiecewiseWeight& phi, double c,
                                           std::span<const double> sublevel_integrals, double margin = 1.0);

struct DFEntry {
  double K = 0.0;
  double eta = 0.0;
  double min_p_trace = 0.0;
};

struct DFResult {
  bool feasible = false;
  double K = 0.0;
  double eta = 0.0;
  double min_p_trace_over_grid = 0.0;
  std::vector<std::pair<Eigen::VectorXd, double>> samples;  // at the chosen pair
  std::vector<DFEntry> table;                                // every grid pair
  bool degenerate = false;                                   // chosen eta == 1
};

/// Grid search over (K, eta) for rho = -(-r exp(-K phi))^eta strictly p-psh at
/// the samples. Among feasible pairs the largest eta wins, ties broken by the
/// smallest K; with no feasible pair the best min p-trace is reported with
/// feasible = false.
DFResult df_search(const ScalarFieldExpr& r, const ScalarFieldExpr& phi, std::span<const Eigen::VectorXd> samples,
                   int p, std::span<const double> K_grid, std::span<const double> eta_grid,
                   const Tolerances& tol = {});

/// Lattice points of the box with r < -delta plus a four times finer lattice
/// restricted to the collar -delta < r < 0.
std::vector<Eigen::VectorXd> domain_samples(const Field& r, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                            int per_axis, double delta);

/// psi = p |x - center|^2 / (2 D^2).
ScalarFieldExpr corollary42_weight(int p, double D, std::span<const double> center);

}  // namespace pconvex
