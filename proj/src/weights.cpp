#include "pconvex/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pconvex/errors.hpp"

namespace pconvex {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

Jet2 apply_map(const ScalarMap& m, const Jet2& a) {
  const auto [v, d1, d2] = m(a.value);
  return chain(a, v, d1, d2);
}

}  // namespace

ScalarMap identity_map() {
  return {"id", [](double t) { return std::array<double, 3>{t, 1.0, 0.0}; }};
}

ScalarMap plus_identity(const ScalarMap& g) {
  return {"id + " + g.name, [g](double t) {
            const auto [v, d1, d2] = g(t);
            return std::array<double, 3>{t + v, 1.0 + d1, d2};
          }};
}

MapShape sample_shape(const ScalarMap& m, double lo, double hi, int samples) {
  MapShape s{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int k = 0; k < samples; ++k) {
    const double t = lo + (hi - lo) * k / std::max(1, samples - 1);
    const auto v = m(t);
    s.min_d1 = std::min(s.min_d1, v[1]);
    s.min_d2 = std::min(s.min_d2, v[2]);
  }
  return s;
}

// ---------------------------------------------------------------------------

PiecewiseWeight::PiecewiseWeight(Field base, std::vector<ScalarMap> modifiers)
    : base_(std::move(base)), modifiers_(std::move(modifiers)) {}

PiecewiseWeight PiecewiseWeight::then(ScalarMap m) const {
  auto mods = modifiers_;
  mods.push_back(std::move(m));
  return PiecewiseWeight(base_, std::move(mods));
}

Jet2 PiecewiseWeight::jet(std::span<const double> x) const {
  Jet2 j = base_.jet(x);
  for (const auto& m : modifiers_) j = apply_map(m, j);
  return j;
}

double PiecewiseWeight::value(std::span<const double> x) const {
  double v = base_.value(x);
  for (const auto& m : modifiers_) v = m(v)[0];
  return v;
}

Field PiecewiseWeight::as_field() const {
  std::string label = base_.label();
  for (const auto& m : modifiers_) label = m.name + "(" + label + ")";
  const PiecewiseWeight self = *this;
  return Field(
      dim(), [self](std::span<const double> x) { return self.jet(x); }, label,
      [self](std::span<const double> x) { return self.value(x); });
}

ScalarMap chi_family(int nu) {
  if (nu < 1) throw PreconditionError("chi_family: nu must be at least 1");
  const double c = nu;
  return {"chi_" + std::to_string(nu), [c](double t) {
            if (t <= 0.0) return std::array<double, 3>{0.0, 0.0, 0.0};
            return std::array<double, 3>{c * t * t * t, 3.0 * c * t * t, 6.0 * c * t};
          }};
}

ScalarMap slope_spline(std::string name, std::vector<double> knots, std::vector<double> slopes, double offset) {
  if (knots.empty() || knots.size() != slopes.size()) throw ShapeError("slope_spline: knots and slopes differ in size");
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (!(knots[k] > knots[k - 1])) throw PreconditionError("slope_spline: knots must increase");
    if (slopes[k] < slopes[k - 1]) throw PreconditionError("slope_spline: slopes must be nondecreasing");
  }
  // Value at each knot; across an interval the slope ramp integrates to
  // h * (s_prev + s_next) / 2.
  std::vector<double> base(knots.size(), offset);
  for (std::size_t k = 1; k < knots.size(); ++k)
    base[k] = base[k - 1] + (knots[k] - knots[k - 1]) * 0.5 * (slopes[k - 1] + slopes[k]);

  return {std::move(name), [knots = std::move(knots), slopes = std::move(slopes), base](double t) {
            if (t <= knots.front()) return std::array<double, 3>{base.front() + slopes.front() * (t - knots.front()),
                                                                 slopes.front(), 0.0};
            if (t >= knots.back())
              return std::array<double, 3>{base.back() + slopes.back() * (t - knots.back()), slopes.back(), 0.0};
            const std::size_t k =
                static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), t) - knots.begin()) - 1;
            const double h = knots[k + 1] - knots[k], half = 0.5 * h, u = t - knots[k];
            const double delta = slopes[k + 1] - slopes[k];
            const double H = 2.0 * delta / h;  // peak of the triangular second derivative
            double d2, ramp, integral;
            if (u <= half) {
              d2 = H * u / half;
              ramp = H * u * u / (2.0 * half);
              integral = H * u * u * u / (6.0 * half);
            } else {
              const double w = h - u;
              d2 = H * w / half;
              ramp = delta - H * w * w / (2.0 * half);
              integral = H * half * half / 6.0 + delta * (u - half) - H * (half * half * half - w * w * w) / (6.0 * half);
            }
            return std::array<double, 3>{base[k] + slopes[k] * u + integral, slopes[k] + ramp, d2};
          }};
}

// ---------------------------------------------------------------------------

ConvexifyResult convexify(const PiecewiseWeight& phi, const Field& omega, int p, std::span<const double> sublevels,
                          std::span<const Eigen::VectorXd> samples, bool exempt_first_shell) {
  const int n = phi.dim();
  if (p < 1 || p > n) throw ShapeError("convexify: degree out of range");
  if (sublevels.empty()) throw PreconditionError("convexify: at least one sublevel is required");
  for (std::size_t k = 1; k < sublevels.size(); ++k)
    if (!(sublevels[k] > sublevels[k - 1])) throw PreconditionError("convexify: sublevels must increase");

  const std::size_t m = sublevels.size();
  // shell 0 = {phi < c_0}, shell k = [c_{k-1}, c_k), shell m = [c_{m-1}, inf)
  std::vector<double> sigma(m + 1, 0.0);
  std::vector<Jet2> jets;
  std::vector<std::size_t> shell_of;
  std::vector<double> omega_at;
  for (const auto& x : samples) {
    const Jet2 j = phi.jet(as_span(x));
    const std::size_t s =
        static_cast<std::size_t>(std::upper_bound(sublevels.begin(), sublevels.end(), j.value) - sublevels.begin());
    const double w = omega.value(as_span(x));
    jets.push_back(j);
    shell_of.push_back(s);
    omega_at.push_back(w);
    if (exempt_first_shell && s == 0) continue;
    const double lambda = min_p_trace(QuadraticForm(j.hess), p);
    if (lambda <= 0.0)
      throw PreconditionError("convexify: phi is not strictly p-psh at a sample (min p-trace " + std::to_string(lambda) +
                              ")");
    sigma[s] = std::max(sigma[s], -p * w / lambda);
  }

  auto target = [&](std::size_t s) {
    if (exempt_first_shell && s == 0) return 1.0;
    return std::max(1.0, 1.1 * sigma[s]);
  };
  // slopes[k] = kappa'(c_k); the ramp over shell k + 1 lifts it to slopes[k + 1].
  std::vector<double> slopes(m);
  slopes[0] = std::max(target(0), target(1));
  for (std::size_t k = 1; k < m; ++k) slopes[k] = std::max(slopes[k - 1], target(k + 1));

  ConvexifyResult res;
  res.knots.assign(sublevels.begin(), sublevels.end());
  res.slopes = slopes;
  res.sigma = sigma;
  res.first_shell_exempt = exempt_first_shell;
  const ScalarMap kappa = slope_spline("kappa", res.knots, slopes);
  res.weight = phi.then(kappa);

  res.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < jets.size(); ++k) {
    if (exempt_first_shell && shell_of[k] == 0) continue;
    const Jet2 j = apply_map(kappa, jets[k]);
    res.min_margin = std::min(res.min_margin, min_p_trace(QuadraticForm(j.hess), p) + p * omega_at[k]);
  }
  return res;
}

IntegrabilityResult integrability_modifier(const PiecewiseWeight& phi, double c,
                                           std::span<const double> sublevel_integrals, double margin) {
  IntegrabilityResult res;
  const std::size_t N = sublevel_integrals.size();
  // knots c, c+1, ..., c+N; gamma(c) = 0 and gamma' = 0 below c.
  std::vector<double> knots(N + 1), slopes(N + 1, 0.0);
  knots[0] = c;
  double value = 0.0;
  for (std::size_t k = 1; k <= N; ++k) {
    knots[k] = c + static_cast<double>(k);
    const double I = sublevel_integrals[k - 1];
    if (I < 0.0 || !std::isfinite(I)) throw PreconditionError("integrability_modifier: integrals must be finite and >= 0");
    const double goal = I > 0.0 ? static_cast<double>(k) + std::log(I) : -std::numeric_limits<double>::infinity();
    res.targets.push_back(goal);
    // gamma(c + k) = value + (s_{k-1} + s_k) / 2
    double s = slopes[k - 1];
    if (std::isfinite(goal)) s = std::max(s, 2.0 * (goal + margin - value) - slopes[k - 1]);
    slopes[k] = s;
    value += 0.5 * (slopes[k - 1] + slopes[k]);
    res.gamma_at.push_back(value);
    res.tail_bound += std::exp(-value) * I;
  }
  if (N == 0) {
    res.gamma = {"gamma", [](double) { return std::array<double, 3>{0.0, 0.0, 0.0}; }};
  } else {
    res.gamma = slope_spline("gamma", knots, slopes);
  }
  res.weight = phi.then(plus_identity(res.gamma));
  return res;
}

// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> domain_samples(const Field& r, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                            int per_axis, double delta) {
  const int n = r.dim();
  if (lo.size() != n || hi.size() != n) throw ShapeError("domain_samples: box dimension mismatch");
  if (per_axis < 2) throw PreconditionError("domain_samples: need at least 2 points per axis");
  std::vector<Eigen::VectorXd> out;
  auto sweep = [&](int m, auto keep) {
    std::vector<int> idx(n, 0);
    for (;;) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * (idx[i] + 0.5) / m;
      const double v = r.value(as_span(x));
      if (keep(v)) out.push_back(x);
      int i = 0;
      while (i < n && ++idx[i] == m) idx[i++] = 0;
      if (i == n) break;
    }
  };
  sweep(per_axis, [&](double v) { return v < -delta; });
  sweep(4 * per_axis, [&](double v) { return v >= -delta && v < 0.0; });
  return out;
}

DFResult df_search(const ScalarFieldExpr& r, const ScalarFieldExpr& phi, std::span<const Eigen::VectorXd> samples,
                   int p, std::span<const double> K_grid, std::span<const double> eta_grid, const Tolerances& tol) {
  const int n = r.dim();
  if (phi.dim() != n) throw ShapeError("df_search: r and phi differ in dimension");
  if (p < 1 || p > n) throw ShapeError("df_search: degree out of range");
  if (samples.empty()) throw PreconditionError("df_search: no samples");
  for (const auto& x : samples) {
    if (r.eval(as_span(x)) >= 0.0) throw PreconditionError("df_search: a sample lies outside {r < 0}");
    const Jet2 j = phi.eval_jet2(as_span(x));
    if (classify(min_p_trace(QuadraticForm(j.hess), p), tol) != Verdict::strict)
      throw PreconditionError("df_search: phi is not strictly p-psh at a sample");
  }

  // rho = -(-r e^{-K phi})^eta is evaluated from the jets of r and phi so that
  // one pass over the samples serves the whole grid.
  std::vector<Jet2> rj, pj;
  for (const auto& x : samples) {
    rj.push_back(r.eval_jet2(as_span(x)));
    pj.push_back(phi.eval_jet2(as_span(x)));
  }
  auto rho_trace = [&](std::size_t k, double K, double eta) {
    // log(-rho) = eta * (log(-r) - K phi); rho = -exp(u)
    const Jet2 lr = chain(Jet2::constant(n, 0.0) - rj[k], std::log(-rj[k].value), -1.0 / rj[k].value,
                          -1.0 / (rj[k].value * rj[k].value));
    const Jet2 u = eta * (lr - K * pj[k]);
    const double e = std::exp(u.value);
    const Jet2 rho = chain(u, -e, -e, -e);
    return min_p_trace(QuadraticForm(rho.hess), p);
  };

  DFResult res;
  const DFEntry* best = nullptr;
  const DFEntry* best_any = nullptr;
  res.table.reserve(K_grid.size() * eta_grid.size());
  for (double K : K_grid) {
    for (double eta : eta_grid) {
      if (!(K > 0.0) || !(eta > 0.0 && eta <= 1.0)) throw PreconditionError("df_search: need K > 0 and 0 < eta <= 1");
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < samples.size(); ++k) m = std::min(m, rho_trace(k, K, eta));
      res.table.push_back({K, eta, m});
    }
  }
  for (const auto& e : res.table) {
    if (!best_any || e.min_p_trace > best_any->min_p_trace) best_any = &e;
    if (classify(e.min_p_trace, tol) != Verdict::strict) continue;
    if (!best || e.eta > best->eta || (e.eta == best->eta && e.K < best->K)) best = &e;
  }
  const DFEntry& chosen = best ? *best : *best_any;
  res.feasible = best != nullptr;
  res.K = chosen.K;
  res.eta = chosen.eta;
  res.min_p_trace_over_grid = chosen.min_p_trace;
  res.degenerate = chosen.eta == 1.0;
  // Report the chosen pair through the composed expression itself.
  const ScalarFieldExpr rho = compose_df(r, phi, res.K, res.eta);
  for (const auto& x : samples)
    res.samples.emplace_back(x, min_p_trace(QuadraticForm(rho.eval_jet2(as_span(x)).hess), p));
  return res;
}

ScalarFieldExpr corollary42_weight(int p, double D, std::span<const double> center) {
  if (!(D > 0.0)) throw PreconditionError("corollary42_weight: D must be positive");
  if (p < 1) throw PreconditionError("corollary42_weight: p must be positive");
  const int n = static_cast<int>(center.size());
  if (n < 1) throw ShapeError("corollary42_weight: empty center");
  using E = ScalarFieldExpr;
  using Op = E::Op;
  E::NodePtr sum;
  for (int i = 0; i < n; ++i) {
    E::NodePtr d = center[i] == 0.0 ? E::var(i) : E::binary(Op::Sub, E::var(i), E::num(center[i]));
    E::NodePtr sq = E::binary(Op::Pow, d, E::num(2.0));
    sum = sum ? E::binary(Op::Add, sum, sq) : sq;
  }
  return E(E::binary(Op::Mul, E::num(p / (2.0 * D * D)), sum), n);
}

}  // namespace pconvex
