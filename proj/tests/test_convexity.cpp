#include "doctest.h"

#include "pconvex/convexity.hpp"
#include "pconvex/errors.hpp"
#include "support.hpp"

using namespace pconvex;
using testing::Rng;

namespace {

// xi_I by literal expansion; 2-forms returned as dense antisymmetric matrices.
std::vector<Eigen::MatrixXd> xi_oracle(const PointForm& g) {
  const int n = g.dim(), p = g.degree();
  std::vector<Eigen::MatrixXd> out;
  for (const auto& I : testing::subsets(n, p)) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < p; ++a)
      for (int i = 1; i <= n; ++i) {
        auto idx = I;
        idx[a] = i;
        const double c = testing::coeff_any(g, idx);
        m(i - 1, I[a] - 1) += c;
        m(I[a] - 1, i - 1) -= c;
      }
    out.push_back(m);
  }
  return out;
}

Eigen::VectorXd upper(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v(n * (n - 1) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) v[k++] = m(i, j);
  return v;
}

}  // namespace

TEST_CASE("min p-trace and verdicts") {
  const double d[] = {-1, 2, 3};
  const auto t = QuadraticForm::diagonal(d);
  CHECK(min_p_trace(t, 1) == doctest::Approx(-1));
  CHECK(min_p_trace(t, 2) == doctest::Approx(1));
  CHECK(min_p_trace(t, 3) == doctest::Approx(4));
  CHECK(is_p_positive(t, 1).verdict == Verdict::fail);
  CHECK(is_p_positive(t, 2).verdict == Verdict::strict);
  CHECK(is_p_positive(QuadraticForm::identity(4), 2).ok);
  const double z[] = {-1, 1};
  const auto semi = is_p_positive(QuadraticForm::diagonal(z), 2, Mode::semi);
  CHECK(semi.verdict == Verdict::semi);
  CHECK(semi.ok);
  CHECK_FALSE(is_p_positive(QuadraticForm::diagonal(z), 2, Mode::strict).ok);

  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 6;
    const QuadraticForm th(testing::random_symmetric(rng, n));
    for (int p = 1; p < n; ++p) {
      if (min_p_trace(th, p) >= 0.0) CHECK(min_p_trace(th, p + 1) >= 0.0);
      const auto rep = is_p_positive(th, p);
      // witness spans a p-plane whose trace is the minimum
      const Eigen::MatrixXd W = rep.witness;
      REQUIRE(W.cols() == p);
      CHECK((W.transpose() * W - Eigen::MatrixXd::Identity(p, p)).norm() <= 1e-10);
      CHECK((W.transpose() * th.matrix() * W).trace() == doctest::Approx(rep.min_p_trace).epsilon(1e-10));
    }
    CHECK(min_p_trace(th, n) == doctest::Approx(th.matrix().trace()));
  }
}

TEST_CASE("p-psh reports on fields") {
  std::vector<Eigen::VectorXd> pts;
  Rng rng(22);
  for (int i = 0; i < 20; ++i) pts.push_back(Eigen::Vector2d(testing::uniform(rng), testing::uniform(rng)));
  for (int p = 1; p <= 2; ++p) {
    const auto r = field_p_psh_report(ScalarFieldExpr::parse("x1^2 + x2^2", 2), pts, p);
    CHECK(r.verdict == Verdict::strict);
    CHECK(r.min_p_trace == doctest::Approx(2.0 * p));
  }
  CHECK(field_p_psh_report(ScalarFieldExpr::parse("x1^2 - x2^2", 2), pts, 2).verdict == Verdict::semi);
  const auto bad = field_p_psh_report(ScalarFieldExpr::parse("x1^2 - 3*x2^2", 2), pts, 2);
  CHECK(bad.verdict == Verdict::fail);
  CHECK(bad.min_p_trace == doctest::Approx(-4.0));

  // mixed verdicts: the global verdict is the worst sample
  const auto mixed = field_p_psh_report(ScalarFieldExpr::parse("x1^4 + x2^2", 2), pts, 1);
  CHECK(mixed.verdict != Verdict::fail);
  std::vector<Eigen::VectorXd> with_zero = pts;
  with_zero.push_back(Eigen::Vector2d(0.0, 0.3));
  const auto at0 = field_p_psh_report(ScalarFieldExpr::parse("x1^4 + x2^2", 2), with_zero, 1);
  CHECK(at0.verdict == Verdict::semi);
  CHECK(at0.worst == with_zero.size() - 1);

  CHECK_THROWS_AS(field_p_psh_report(ScalarFieldExpr::parse("log(x1)", 2), with_zero, 1), DomainError);
}

TEST_CASE("boundary p-convexity") {
  Rng rng(23);
  for (int n = 2; n <= 4; ++n) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd x(n);
      for (int k = 0; k < n; ++k) x[k] = std::normal_distribution<double>()(rng);
      pts.push_back(x.normalized());
    }
    std::string src = "x1^2";
    for (int k = 2; k <= n; ++k) src += " + x" + std::to_string(k) + "^2";
    const auto sphere = ScalarFieldExpr::parse(src + " - 1", n);
    for (int p = 1; p < n; ++p) {
      const auto r = boundary_p_convexity(sphere, pts, p);
      CHECK(r.verdict == Verdict::strict);
      for (const auto& rep : r.reports) CHECK(std::abs(rep.min_p_trace - 2.0 * p) <= 1e-10);
      for (const auto& rep : r.reports) {
        // witness directions are tangential
        const auto& x = r.points[&rep - r.reports.data()];
        CHECK((rep.witness.transpose() * x).norm() <= 1e-10);
      }
    }
    const auto half = ScalarFieldExpr::parse("x" + std::to_string(n), n);
    CHECK(boundary_p_convexity(half, pts, 1).verdict == Verdict::semi);
  }

  // Torus (|x|^2 + R^2 - a^2)^2 - 4 R^2 (x1^2 + x2^2), R = 1.2, a = 0.5, at the
  // inner equator (0.7, 0, 0): tangential Hessian diag(-4.8, 6.72).
  const auto torus = ScalarFieldExpr::parse("(x1^2 + x2^2 + x3^2 + 1.19)^2 - 5.76*(x1^2 + x2^2)", 3);
  const std::vector<Eigen::VectorXd> inner{Eigen::Vector3d(0.7, 0, 0)};
  const auto p1 = boundary_p_convexity(torus, inner, 1);
  CHECK(p1.verdict == Verdict::fail);
  CHECK(p1.min_p_trace == doctest::Approx(-4.8));
  const auto p2 = boundary_p_convexity(torus, inner, 2);
  CHECK(p2.verdict == Verdict::strict);
  CHECK(p2.min_p_trace == doctest::Approx(1.92));

  const std::vector<Eigen::VectorXd> origin{Eigen::Vector2d(0, 0)};
  CHECK_THROWS_AS(boundary_p_convexity(ScalarFieldExpr::parse("x1^2 + x2^2 - 1", 2), origin, 1), DegenerateGradient);
}

TEST_CASE("xi forms") {
  // n = 2, p = 1, g = w1: xi_1 = 0, xi_2 = g_1 w1^w2
  const auto xi = xi_forms(PointForm::basis(2, {1}));
  REQUIRE(xi.size() == 2);
  CHECK(xi[0].norm() == 0.0);
  CHECK(xi[1].coeff({1, 2}) == 1.0);
  for (const auto& x : xi_forms(PointForm(4, 2))) CHECK(x.norm() == 0.0);

  Rng rng(24);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + t % 5, p = 1 + t % n;
    const auto g = testing::random_form(rng, n, p);
    const auto got = xi_forms(g);
    const auto want = xi_oracle(g);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      const Eigen::VectorXd w = upper(want[k]);
      for (Eigen::Index r = 0; r < w.size(); ++r) CHECK(got[k][r] == doctest::Approx(w[r]).epsilon(1e-12));
    }
    double s = 0.0;
    for (const auto& x : got) s += x.norm2();
    CHECK(s == doctest::Approx(p * (n - p) * g.norm2()).epsilon(1e-10));
  }
}

TEST_CASE("curvature term bounds") {
  CHECK(curvature_term(CurvatureOperator::flat(4), PointForm::basis(4, {1, 3})) == 0.0);
  Rng rng(25);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 5, p = 1 + t % n;
    auto g = testing::random_form(rng, n, p);
    const double c = testing::uniform(rng, -2, 2);
    CHECK(curvature_term(CurvatureOperator::identity(n, c), g) ==
          doctest::Approx(c * p * (n - p) * g.norm2()).epsilon(1e-10));
    const int m = n * (n - 1) / 2;
    const CurvatureOperator R(n, testing::random_symmetric(rng, m));
    const auto b = curvature_bounds_check(R, g);
    CHECK(b.holds);
    CHECK(b.lower <= b.term + 1e-10);
    CHECK(b.term <= b.upper + 1e-10);

    // oracle: sum of <R xi, xi> from the literal expansion
    double want = 0.0;
    for (const auto& x : xi_oracle(g)) {
      const Eigen::VectorXd v = upper(x);
      want += v.dot(R.matrix() * v);
    }
    CHECK(b.term == doctest::Approx(want).epsilon(1e-10));
  }
  auto g = PointForm::basis(5, {2, 4});
  CHECK(curvature_term(CurvatureOperator::identity(5), g) == doctest::Approx(6.0));
}

TEST_CASE("signature count") {
  CHECK(signature_count(4, 2) == 4);
  CHECK(signature_count(3, 3) == 0);
  for (int n = 1; n <= 7; ++n)
    for (int p = 1; p <= n; ++p) CHECK(signature_count(n, p) == p * (n - p));
}

TEST_CASE("curvature-shifted hypothesis") {
  Rng rng(26);
  const QuadraticForm th(testing::random_symmetric(rng, 4));
  for (int p = 1; p <= 4; ++p) {
    const auto a = thm71_hypothesis(th, 0.0, p), b = is_p_positive(th, p);
    CHECK(a.verdict == b.verdict);
    CHECK(a.min_p_trace == b.min_p_trace);
  }
  const int n = 5;
  for (int p = 1; p < n; ++p) {
    const auto r = thm71_hypothesis(QuadraticForm::identity(n), -1.0 / (2.0 * (n - p)), p);
    CHECK(r.min_p_trace == doctest::Approx(p / 2.0));
    CHECK(r.verdict == Verdict::strict);
  }
  CHECK(thm71_hypothesis(QuadraticForm(Eigen::MatrixXd::Zero(3, 3)), -0.1, 1).verdict == Verdict::fail);
}
