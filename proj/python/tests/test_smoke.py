import math

import numpy as np
import pytest

import pconvex


def test_min_p_trace_and_verdict():
    theta = np.diag([-1.0, 2.0, 3.0])
    assert pconvex.min_p_trace(theta, 1) == pytest.approx(-1.0)
    assert pconvex.min_p_trace(theta, 2) == pytest.approx(1.0)
    assert pconvex.p_positivity(theta, 1)[0] == "fail"
    assert pconvex.p_positivity(theta, 2)[0] == "strict"


def test_F_matrix_spectrum_is_subset_sums():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4))
    theta = a + a.T
    lam = np.linalg.eigvalsh(theta)
    sums = sorted(lam[i] + lam[j] for i in range(4) for j in range(i + 1, 4))
    got = np.linalg.eigvalsh(pconvex.F_matrix(theta, 2))
    assert got.shape == (pconvex.binomial(4, 2),)
    np.testing.assert_allclose(got, sums, atol=1e-12)


def test_expr_jet():
    e = pconvex.Expr("x1^2*x2 + exp(x2)", 2)
    v, g, h = e.jet(np.array([1.0, 0.0]))
    assert v == pytest.approx(1.0)
    np.testing.assert_allclose(g, [0.0, 2.0])
    np.testing.assert_allclose(h, [[0.0, 2.0], [2.0, 1.0]])
    with pytest.raises(pconvex.SyntaxError):
        pconvex.Expr("x1 +", 2)


def test_complex_and_solver():
    cx = pconvex.Complex([0.0, 0.0], [1.0, 1.0], 0.125)
    assert (cx.count(0), cx.count(1), cx.count(2)) == (81, 144, 64)
    assert cx.euler_characteristic() == 1
    rng = np.random.default_rng(1)
    f = cx.d(0, rng.standard_normal(cx.count(0)))
    u, residual, iterations = pconvex.minimal_solution(cx, 1, f, "x1^2 + x2^2")
    assert residual < 1e-10
    assert iterations > 0
    np.testing.assert_allclose(cx.d(0, u), f, atol=1e-9)
    assert pconvex.hormander_ratio(cx, 1, f, "x1^2 + x2^2") <= 1.05
    with pytest.raises(pconvex.NotClosed):
        pconvex.minimal_solution(cx, 1, rng.standard_normal(cx.count(1)), "0")


def test_annulus_cohomology():
    r = "(x1^2 + x2^2 - 0.25)*(x1^2 + x2^2 - 1)"
    cx = pconvex.Complex([-1.05, -1.05], [1.05, 1.05], 0.15, r)
    assert cx.euler_characteristic() == 0
    assert [pconvex.cohomology_rank(cx, q, "x1^2") for q in range(3)] == [1, 1, 0]


def test_run_config():
    text = """
[run]
task = algebra-battery
seed = 3

[task]
cases = 20
n_max = 4
"""
    task, ok, records = pconvex.run_config(text)
    assert task == "algebra-battery"
    assert ok
    assert all(r["pass"] for r in records)
    with pytest.raises(pconvex.ConfigError, match="line 3"):
        pconvex.run_config("[run]\ntask = algebra-battery\nnope = 1\n")


def test_builtins_listing():
    text = pconvex.builtins()
    assert "cor42" in text and "df(" in text
    assert math.isfinite(len(text))
