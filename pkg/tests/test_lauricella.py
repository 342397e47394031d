import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isl import garnier as G
from isl import lauricella as L
from isl.errors import PreconditionError, RepresentationError


def _mp(z):
    return mpmath.mpc(z.real, z.imag)


def _c(z):
    return complex(z)


def _disk_point(rng, r):
    rho = r * math.sqrt(rng.uniform())
    return rho * complex(math.cos(phi := rng.uniform(0, 2 * math.pi)), math.sin(phi))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_n1_matches_gauss(seed):
    rng = np.random.default_rng(seed)
    a, b = complex(*rng.uniform(-2, 2, 2)), complex(*rng.uniform(-2, 2, 2))
    c = complex(rng.uniform(0.3, 3), rng.uniform(-1, 1))
    x = _disk_point(rng, 0.7)
    got = L.fd_value(L.LauricellaParams(a, (b,), c), [x]).value
    ref = _c(mpmath.hyp2f1(_mp(a), _mp(b), _mp(c), _mp(x)))
    assert abs(got - ref) < 1e-10 * max(1.0, abs(ref))


def test_n2_matches_appell():
    rng = np.random.default_rng(1)
    for _ in range(5):
        a, b1, b2 = (complex(*rng.uniform(-1.5, 1.5, 2)) for _ in range(3))
        c = complex(rng.uniform(0.5, 3), rng.uniform(-0.5, 0.5))
        x, y = _disk_point(rng, 0.6), _disk_point(rng, 0.6)
        got = L.fd_value(L.LauricellaParams(a, (b1, b2), c), [x, y]).value
        ref = _c(mpmath.appellf1(_mp(a), _mp(b1), _mp(b2), _mp(c), _mp(x), _mp(y)))
        assert abs(got - ref) < 1e-10 * max(1.0, abs(ref))


def test_integral_continues_beyond_unit_disk():
    p = L.LauricellaParams(0.7, (0.3 + 0.2j,), 1.9 - 0.1j)
    for x in (-2.0, 1.5 + 0.8j, -0.5 - 3j):
        got = L.fd_value(p, [x]).value
        assert got == L.fd_integral(p, [x])
        ref = _c(mpmath.hyp2f1(_mp(p.alpha), _mp(p.betas[0]), _mp(p.gamma), _mp(complex(x))))
        assert abs(got - ref) < 1e-9 * max(1.0, abs(ref))


def test_series_integral_cross_check():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = complex(rng.uniform(0.2, 1.5), rng.uniform(-0.5, 0.5))
        c = a + complex(rng.uniform(0.3, 1.5), rng.uniform(-0.5, 0.5))
        betas = tuple(complex(*rng.uniform(-1, 1, 2)) for _ in range(3))
        x = [_disk_point(rng, 0.6) for _ in range(3)]
        p = L.LauricellaParams(a, betas, c)
        s, i = L.fd_series(p, x), L.fd_integral(p, x)
        assert abs(s - i) < 1e-8 * max(1.0, abs(s))


def test_terminating_series_is_the_polynomial():
    b = (0.3 + 0.1j, -1.2)
    g = 2.5 - 0.5j
    p = L.LauricellaParams(-2, b, g)
    assert p.terminating_degree == 2
    x = np.array([1.7 - 0.4j, -2.2])
    expected = 0
    for m in itertools.product(range(3), repeat=2):
        if sum(m) > 2:
            continue
        k = sum(m)
        coef = math.prod(-2 + j for j in range(k)) / np.prod([g + j for j in range(k)])
        for bi, mi, xi in zip(b, m, x):
            coef *= np.prod([bi + j for j in range(mi)]) * xi**mi / math.factorial(mi)
        expected += coef
    assert abs(L.fd_value(p, x).value - expected) < 1e-13


def test_representation_errors():
    with pytest.raises(RepresentationError):
        L.LauricellaParams(0.5, (0.2,), -1)
    with pytest.raises(RepresentationError):
        L.fd_series(L.LauricellaParams(0.5, (0.2,), 1.5), [1.2])
    with pytest.raises(RepresentationError, match="Re\\(alpha\\)"):
        L.fd_integral(L.LauricellaParams(-0.5, (0.2,), 1.5), [0.2])
    with pytest.raises(RepresentationError, match="cut"):
        L.fd_integral(L.LauricellaParams(0.5, (0.2,), 1.5), [2.0])


def test_gradient_and_hessian_against_differences():
    p = L.LauricellaParams(0.6 + 0.2j, (0.4, -0.7 + 0.3j), 1.8)
    x = np.array([0.2 - 0.1j, -0.3 + 0.25j])
    r = L.fd_value(p, x, hessian=True)
    h = 1e-5
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (L.fd_value(p, x + e).value - L.fd_value(p, x - e).value) / (2 * h)
        assert abs(fd - r.grad[j]) < 1e-9
    np.testing.assert_allclose(r.hess, L.fd_hessian_by_differences(p, x), atol=1e-7)


def test_ed_residual_interior_points():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a, b1, b2 = (complex(*rng.uniform(-1.5, 1.5, 2)) for _ in range(3))
        c = complex(rng.uniform(0.5, 3), rng.uniform(-1, 1))
        p = L.LauricellaParams(a, (b1, b2), c)
        x = [_disk_point(rng, 0.6), _disk_point(rng, 0.6)]
        assert L.ed_residual(p, x, L.fd_value(p, x, hessian=True)) < 1e-6


def test_ed_residual_detects_wrong_function():
    p = L.LauricellaParams(0.5, (0.3, 0.2), 1.4)
    x = [0.2, 0.1]
    r = L.fd_value(p, x, hessian=True)
    assert L.ed_residual(p, x, (r.value * 1.01, r.grad, r.hess)) > 1e-4


def test_kappa_zero_normalisation():
    th = (0.3, 0.5, 1.7)
    s = sum(th) - 1
    assert L.normalize_kappa_zero(G.ThetaParams(th, s)).theta_inf == s
    assert L.normalize_kappa_zero(G.ThetaParams(th, -s)).theta_inf == s
    with pytest.raises(PreconditionError):
        L.normalize_kappa_zero(G.ThetaParams(th, s + 0.1))
    p = L.riccati_params(G.ThetaParams((0.2, 0.3, 0.4, 0.9), 0.8))
    assert (p.alpha, *p.betas, p.gamma) == pytest.approx((0.1, 0.2, 0.3, 0.9))


def test_riccati_q_gives_u_for_n1():
    th = G.ThetaParams((0.3, 0.45 + 0.1j, 1.7), 0.3 + 0.45 + 0.1j + 1.7 - 1)
    a = 0.2 + 0.1j
    q = L.riccati_q(np.array([a]), th)
    assert abs(L.riccati_u(a, th) - (a - (a - 1) * q[0])) < 1e-15
    # n = 1: F_1 = u_1
    assert abs(G.F_from_q([a], q)[0] - L.riccati_u(a, th)) < 1e-13


def test_prop1_on_one_slice():
    th = G.ThetaParams((2.3, 1.7 - 0.2j, -3.4, 7.5 - 0.2j), 2.3 + 1.7 - 0.2j - 3.4 + 7.5 - 0.2j - 1)
    rng = np.random.default_rng(5)
    s0 = rng.uniform(-0.4, 0.4, 2) + 1j * rng.uniform(-0.4, 0.4, 2)
    a0 = s0 / (s0 - 1)
    d = rng.normal(size=2) + 1j * rng.normal(size=2)
    d /= np.linalg.norm(d)
    f = L.riccati_f(L.normalize_kappa_zero(th))
    region = lambda z: np.abs(L.s_of_a(a0 + z * d)).max() <= L.SERIES_RADIUS
    starts = [complex(*rng.uniform(-0.6, 0.6, 2)) for _ in range(8)]
    zeros = L.find_f_zeros(f, a0, d, starts, region=region)
    assert zeros
    verdicts = L.prop1_check(a0, d, th, f, zeros=zeros[:2])
    for v in verdicts:
        assert v.f_order == 1 and v.F_orders == (-1, -1) and v.passed
