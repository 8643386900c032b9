#include "doctest.h"

#include "pconvex/errors.hpp"
#include "pconvex/exterior.hpp"
#include "support.hpp"

using namespace pconvex;
using testing::Rng;

TEST_CASE("multi-index rank round trip") {
  for (int n = 1; n <= 8; ++n)
    for (int p = 0; p <= n; ++p) {
      const auto all = testing::subsets(n, p);
      REQUIRE(static_cast<long>(all.size()) == binomial(n, p));
      for (std::size_t r = 0; r < all.size(); ++r) {
        CHECK(rank(all[r], n) == static_cast<int>(r));
        CHECK(unrank(static_cast<int>(r), n, p) == all[r]);
      }
    }
  CHECK_THROWS_AS(rank({2, 1}, 3), ShapeError);
  CHECK_THROWS_AS(rank({1, 4}, 3), ShapeError);
}

TEST_CASE("degree above n is rejected") { CHECK_THROWS_AS(PointForm(2, 3), ShapeError); }

TEST_CASE("wedge") {
  const int n = 3;
  auto w1 = PointForm::basis(n, {1}), w2 = PointForm::basis(n, {2}), w3 = PointForm::basis(n, {3});
  CHECK(wedge(w1, w2).coeff({1, 2}) == 1.0);

  // (w1 + w2) ^ (w1 ^ w3) = w2 ^ w1 ^ w3 = -w123
  const auto g = wedge(w1 + w2, PointForm::basis(n, {1, 3}));
  CHECK(g.coeff({1, 2, 3}) == -1.0);

  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    auto a = testing::random_form(rng, 4, 1);
    CHECK(wedge(a, a).norm() <= 1e-15);
    auto b = testing::random_form(rng, 5, 2), c = testing::random_form(rng, 5, 3);
    auto bc = wedge(b, c), cb = wedge(c, b);
    CHECK((bc - cb).norm() <= 1e-12);  // (-1)^{kl} = +1
    auto d = testing::random_form(rng, 5, 1), e = testing::random_form(rng, 5, 1);
    CHECK((wedge(d, e) + wedge(e, d)).norm() <= 1e-12);
  }

  // brute-force expansion oracle
  for (int t = 0; t < 20; ++t) {
    const int k = 2, l = 2, m = 5;
    auto a = testing::random_form(rng, m, k), b = testing::random_form(rng, m, l);
    const auto out = wedge(a, b);
    const auto A = testing::subsets(m, k), B = testing::subsets(m, l), C = testing::subsets(m, k + l);
    std::vector<double> expect(C.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i)
      for (std::size_t j = 0; j < B.size(); ++j) {
        std::vector<int> idx = A[i];
        idx.insert(idx.end(), B[j].begin(), B[j].end());
        const int s = testing::sort_sign(idx);
        if (s == 0) continue;
        const auto pos = std::find(C.begin(), C.end(), idx) - C.begin();
        expect[pos] += s * a[i] * b[j];
      }
    for (std::size_t r = 0; r < C.size(); ++r) CHECK(out[r] == doctest::Approx(expect[r]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(wedge(PointForm(3, 2), PointForm(3, 2)), ShapeError);
  CHECK_THROWS_AS(wedge(PointForm(3, 1), PointForm(4, 1)), ShapeError);
}

TEST_CASE("interior product") {
  const double e1[] = {1, 0, 0}, e3[] = {0, 0, 1};
  const auto w12 = PointForm::basis(3, {1, 2});
  const auto a = interior_product(e1, w12);
  CHECK(a.coeff({2}) == 1.0);
  CHECK(a.norm() == 1.0);
  CHECK(interior_product(e3, w12).norm() == 0.0);
  CHECK_THROWS_AS(interior_product(e1, PointForm::scalar(3, 1.0)), ShapeError);

  // adjoint of v-flat wedge
  Rng rng(12);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 5, p = 1 + t % n;
    const auto v = testing::random_vector(rng, n);
    const auto g = testing::random_form(rng, n, p);
    const auto h = testing::random_form(rng, n, p - 1);
    worst = std::max(worst, std::abs(dot(interior_product(v, g), h) - dot(g, wedge(PointForm::covector(v), h))));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("F_theta identity, self-adjointness, spectrum") {
  const double d123[] = {1, 2, 3};
  const auto t = QuadraticForm::diagonal(d123);
  CHECK(apply_F(t, PointForm::basis(3, {1, 2})).coeff({1, 2}) == doctest::Approx(3.0));
  auto g = PointForm::basis(3, {1, 3}, 2.0);
  CHECK((apply_F(QuadraticForm::identity(3), g) - 2.0 * g).norm() <= 1e-15);

  const auto s = eigen_F(t, 2);
  REQUIRE(s.values.size() == 3);
  CHECK(s.values[0] == doctest::Approx(3));
  CHECK(s.values[1] == doctest::Approx(4));
  CHECK(s.values[2] == doctest::Approx(5));
  for (double v : eigen_F(QuadraticForm::identity(4), 3).values) CHECK(v == doctest::Approx(3));
  const double dm[] = {-1, 2};
  const auto one = eigen_F(QuadraticForm::diagonal(dm), 2).values;
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(1));

  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5, p = 1 + trial % n;
    const QuadraticForm th(testing::random_symmetric(rng, n));
    const auto a = testing::random_form(rng, n, p), b = testing::random_form(rng, n, p);
    CHECK(dot(apply_F(th, a), a) == doctest::Approx(testing::quadratic_identity_rhs(th.matrix(), a)).epsilon(1e-10));
    CHECK(std::abs(dot(apply_F(th, a), b) - dot(a, apply_F(th, b))) <= 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F_matrix(th, p), Eigen::EigenvaluesOnly);
    const auto ev = eigen_F(th, p);
    REQUIRE(ev.values.size() == static_cast<std::size_t>(es.eigenvalues().size()));
    for (std::size_t i = 0; i < ev.values.size(); ++i) CHECK(std::abs(ev.values[i] - es.eigenvalues()[i]) <= 1e-10);
    double low = 0.0;
    for (int i = 0; i < p; ++i) low += ev.base_values[i];
    CHECK(ev.values.front() == doctest::Approx(low));

    // linear in theta
    const QuadraticForm th2(testing::random_symmetric(rng, n));
    CHECK((apply_F(th + th2 * 2.0, a) - apply_F(th, a) - 2.0 * apply_F(th2, a)).norm() <= 1e-12);
  }
}

TEST_CASE("F of a rank-one form is tau ^ (X_tau -| .)") {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + t % 3, p = 1 + t % n;
    const auto tau = testing::random_vector(rng, n);
    const auto g = testing::random_form(rng, n, p);
    const auto lhs = apply_F(QuadraticForm::outer(tau), g);
    const auto rhs = wedge(PointForm::covector(tau), interior_product(tau, g));
    CHECK((lhs - rhs).norm() <= 1e-12);
  }
}

TEST_CASE("pseudo-inverse of F") {
  const double d[] = {0, 0, 1};
  const auto t = QuadraticForm::diagonal(d);
  const auto x = pinv_F(t, PointForm::basis(3, {3}));
  CHECK(x.coeff({3}) == doctest::Approx(1.0));
  CHECK(x.coeff({1}) == 0.0);
  CHECK_THROWS_AS(pinv_F(t, PointForm::basis(3, {1})), MembershipError);

  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4, p = 1 + trial % n;
    const QuadraticForm pd(testing::random_pd(rng, n));
    const auto f = testing::random_form(rng, n, p);
    CHECK((apply_F(pd, pinv_F(pd, f)) - f).norm() <= 1e-10 * f.norm());

    // singular theta: pinv o F is the identity on (Ker F)^perp
    const QuadraticForm sing(testing::random_psd(rng, n, n - 1));
    const auto g = testing::random_form(rng, n, p);
    const auto Fg = apply_F(sing, g);
    const auto back = pinv_F(sing, Fg);
    CHECK((apply_F(sing, back) - Fg).norm() <= 1e-9 * std::max(1.0, Fg.norm()));
    CHECK(kernel_component(sing, back) <= 1e-9 * std::max(1.0, back.norm()));
  }
}

TEST_CASE("rank-one image lemma") {
  // equality case theta = tau (x) tau
  const double tau[] = {1, 0};
  const auto rec = lemma11_verify(QuadraticForm::outer(tau), tau, PointForm::basis(2, {2}));
  CHECK(rec.membership_ok);
  CHECK(rec.self_lhs == doctest::Approx(1.0));
  CHECK(rec.self_rhs == doctest::Approx(1.0));

  const auto zero = lemma11_verify(QuadraticForm::outer(tau), tau, PointForm(2, 1));
  CHECK(zero.self_lhs == 0.0);
  CHECK(zero.cross_lhs == 0.0);
  CHECK((zero.self_ineq_ok && zero.cross_ineq_ok));

  const double big[] = {2, 0};
  CHECK_THROWS_AS(lemma11_verify(QuadraticForm::outer(tau), big, PointForm::basis(2, {2})), PreconditionError);

  Rng rng(16);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 4, p = 1 + t % n;
    const auto tv = testing::random_vector(rng, n);
    const QuadraticForm th = QuadraticForm::outer(tv) + QuadraticForm(testing::random_psd(rng, n, 1 + t % n));
    const auto xi = testing::random_form(rng, n, p - 1);
    const auto f = apply_F(th, testing::random_form(rng, n, p));
    const auto r = lemma11_verify(th, tv, xi, f);
    CHECK(r.membership_ok);
    CHECK(r.self_ineq_ok);
    CHECK(r.cross_ineq_ok);
  }
}

TEST_CASE("inverse bound") {
  Rng rng(17);
  for (int p = 1; p <= 4; ++p) {
    auto g = testing::random_form(rng, 4, p);
    g *= 1.0 / g.norm();
    const auto r = inverse_bound_check(QuadraticForm::identity(4), g);
    CHECK(r.lhs == doctest::Approx(1.0 / p).epsilon(1e-12));
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-12);
  }
  // diag(1, 100), p = 2, g = w12: lhs = 1/101, rhs = (1/4) * (1 + 1/100)
  const double d[] = {1, 100};
  const auto r = inverse_bound_check(QuadraticForm::diagonal(d), PointForm::basis(2, {1, 2}));
  CHECK(r.lhs == doctest::Approx(1.0 / 101));
  CHECK(r.rhs == doctest::Approx(0.25 * 1.01));
  CHECK(r.holds);

  const double bad[] = {1, 0};
  CHECK_THROWS_AS(inverse_bound_check(QuadraticForm::diagonal(bad), PointForm::basis(2, {1})), PreconditionError);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 4, p = 1 + t % n;
    const auto rec = inverse_bound_check(QuadraticForm(testing::random_pd(rng, n)), testing::random_form(rng, n, p));
    CHECK(rec.holds);
  }
}
