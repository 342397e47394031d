import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isl import garnier as G
from isl import schlesinger as S
from isl._jet import Jet
from isl.errors import DegreeCollapse, DomainError, PreconditionError
from isl.fuchsian import random_family

from conftest import commuting_family


def _state(n, seed, **kw):
    kw.setdefault("centered", True)
    return S.SchlesingerState.from_family(random_family(n, np.random.default_rng(seed), **kw))


def _admissible(n, rng):
    """Random (a, u, v) with all points well separated."""
    while True:
        a = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
        u = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
        pts = np.concatenate([a, [0, 1], u])
        d = np.abs(pts[:, None] - pts[None, :])
        d[np.diag_indices(len(pts))] = np.inf
        if d.min() > 0.1:
            return a, u, rng.normal(size=n) + 1j * rng.normal(size=n)


def test_zero_upper_right_entries():
    b, f = G.coefficients_from([0.3, 0, 1], [0, 0, 0])
    assert b == 0 and f == (0,)


def test_n1_coefficients_by_expansion():
    a1 = 0.4 + 0.7j
    b1, b2 = 0.3 - 0.1j, -0.8 + 0.25j
    b3 = -(b1 + b2)
    b, f = G.coefficients_from([a1, 0, 1], [b1, b2, b3])
    # b1 z (z - 1) + b2 (z - a1)(z - 1) + b3 z (z - a1)
    poly = b1 * np.array([1, -1, 0]) + b2 * np.array([1, -(a1 + 1), a1]) + b3 * np.array([1, -a1, 0])
    assert abs(poly[0]) < 1e-15
    assert abs(b - (b1 * a1 + b3)) < 1e-15
    assert abs(b - poly[1]) < 1e-15 and abs(f[0] - poly[2]) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 3])
def test_coefficients_match_interpolation_and_subset_sums(n):
    st_ = _state(n, 30 + n)
    b, f = G.pn_coefficients(st_)
    poly = G.pn_polynomial(st_)
    scale = np.abs(poly).max()
    np.testing.assert_allclose(np.concatenate([[b], f]), poly, atol=1e-12 * scale)
    vb, vf = G.viete_coefficients(list(st_.positions), list(st_.residues[:, 0, 1]))
    np.testing.assert_allclose(np.concatenate([[vb], vf]), poly, atol=1e-12 * scale)


def test_coefficients_accept_jets():
    st_ = _state(2, 1)
    a, B = S.jet_inputs(st_.positions, st_.residues, np.array([1, 0.5j, 0, 0]))
    b, f = G.coefficients_from(a, [B[i, 0, 1] for i in range(4)])
    assert isinstance(b, Jet)
    b0, f0 = G.pn_coefficients(st_)
    assert abs(b.v - b0) < 1e-14 and abs(f[1].v - f0[1]) < 1e-14


def test_pn_requires_normalisation():
    st_ = _state(1, 0)
    res = st_.residues.copy()
    res[0, 0, 1] += 0.5
    with pytest.raises(PreconditionError):
        G.pn_coefficients(S.SchlesingerState(st_.positions, res))


def test_roots_examples():
    r = G.u_roots(1.0, [0.0, -1.0])
    assert sorted(r.u.real.round(12)) == [-1.0, 1.0] and not r.collisions
    r = G.u_roots(1.0, [0.0, 0.0])
    np.testing.assert_allclose(r.u, 0, atol=1e-14)
    assert r.collisions == ((0, 1),)
    with pytest.raises(DegreeCollapse):
        G.u_roots(0.0, [1.0, 2.0])


def test_random_cubic_residual():
    rng = np.random.default_rng(2)
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    r = G.u_roots(c[0], c[1:])
    scale = np.abs(c).max()
    assert np.abs(np.polyval(c, r.u)).max() < 1e-9 * scale * (1 + np.abs(r.u).max()) ** 3


def test_root_continuity_matching():
    r = G.u_roots(1.0, [-3.0, 2.0], previous_u=[2.01, 0.99])
    np.testing.assert_allclose(r.u, [2.0, 1.0], atol=1e-12)


def test_v_vanishes_for_diagonal_residues():
    # b_i^{11} = -beta_i means diag(-beta, beta)
    st_ = S.SchlesingerState.from_family(commuting_family([-0.2, -0.3, -0.5 + 0j], [0.4 + 0.3j, 0, 1]))
    np.testing.assert_allclose(G.v_values(st_, [2.0 + 1j]), 0, atol=1e-15)


def test_v_n1_direct_sum():
    st_ = _state(1, 3)
    u = 1.7 - 0.4j
    beta = [np.sqrt(-np.linalg.det(r) + 0j) for r in st_.residues]
    beta = [b if b.real >= 0 else -b for b in beta]
    expected = sum((st_.residues[i, 0, 0] + beta[i]) / (u - st_.positions[i]) for i in range(3))
    assert abs(G.v_values(st_, [u])[0] - expected) < 1e-14
    with pytest.raises(DomainError):
        G.v_values(st_, [0.0])


def test_symmetric_examples():
    st_ = _state(1, 4)
    b, f = G.pn_coefficients(st_)
    assert abs(G.symmetric_F(st_)[0] - G.u_roots(b, f).u[0]) < 1e-12 * (1 + abs(f[0] / b))
    np.testing.assert_allclose(G.symmetric_from_coefficients(1.0, [-3.0, 2.0]), [3.0, 2.0])
    np.testing.assert_allclose(sorted(G.u_roots(1.0, [-3.0, 2.0]).u.real), [1.0, 2.0])


def test_theorem2_bounds_and_checks():
    assert G.theorem2_verdict_bound(2) == -2
    assert G.theorem2_verdict_bound(3) == -4
    assert G.theorem2_bound(2, 0.3) == -1
    assert G.theorem2_bound(2, 0.0) == -2
    assert G.theorem2_bound(3, 0.0) == -4
    ev = lambda o: S.PoleEvent(0j, "F1", o, 0.0)
    out = G.theorem2_check([ev(-1), ev(-3), ev(None)], 2, 0.4, True)
    assert [v["pass"] for v in out] == [True, False, None]
    assert G.theorem2_check([ev(-4)], 3, 0.0, True)[0]["pass"] is True
    with pytest.raises(PreconditionError):
        G.theorem2_check([ev(-1)], 2, 0.4, None)
    with pytest.raises(PreconditionError):
        G.theorem2_check([ev(-1)], 2, 0.4, False)


def test_b_zero_simple_examples():
    assert G.b_zero_is_simple(lambda z: z, 0j, 0.1)[0] is True
    ok, est = G.b_zero_is_simple(lambda z: z * z, 0j, 0.1)
    assert ok is False and est.order == 2


def test_b_constant_theta_inf_zero():
    st_ = _state(2, 9, beta_inf=0.5)
    traj = S.integrate_flow(st_, S.DeformationPath(st_.moving, ([0.2j, 0.3],)), 1e-10).trajectory
    assert G.theta_inf_zero_b_constant(traj) < 1e-8
    assert G.theta_inf_zero_b_constant(S.Trajectory.single(st_)) == 0
    with pytest.raises(PreconditionError):
        G.theta_inf_zero_b_constant(S.Trajectory.single(_state(2, 9)))


def test_spq_examples():
    rng = np.random.default_rng(5)
    a, u, v = _admissible(2, rng)
    s, q, p = G.to_spq(a, u, 0 * v)
    assert np.all(p == 0)
    np.testing.assert_allclose(s, a / (a - 1))
    # q against the explicit product
    pts = np.concatenate([a, [0, 1]])
    for i in range(2):
        qi = a[i] * np.prod(a[i] - u) / np.prod(a[i] - np.delete(pts, i))
        assert abs(q[i] - qi) < 1e-14 * max(1, abs(qi))
    # u_1 = a_1 kills M_1; to_spq itself rejects the inadmissible point
    M, _ = G.m_functions([0.4 + 0.2j], [0.4 + 0.2j])
    assert M[0] == 0
    with pytest.raises(DomainError):
        G.to_spq([0.4 + 0.2j], [0.4 + 0.2j], [1.0])


def test_p_summation_order_is_irrelevant():
    rng = np.random.default_rng(6)
    a, u, v = _admissible(2, rng)
    _, _, p = G.to_spq(a, u, v)
    _, _, p_rev = G.to_spq(a, u[::-1], v[::-1])
    np.testing.assert_allclose(p, p_rev, rtol=1e-13)


def test_v_from_qp_examples():
    assert np.all(G.v_from_qp([2.0], [0.5], [1.0], [0.0]) == 0)
    assert abs(G.v_from_qp([2.0], [0.5], [3.0], [0.5])[0] - 1.5 / 1.5) < 1e-15


def test_F_from_q_examples():
    a = np.array([0.3 + 0.4j, -0.7 + 0.2j])
    pts = np.concatenate([a, [0, 1]])
    Q = np.array([np.prod(a[i] - np.delete(pts, i)) for i in range(2)])
    np.testing.assert_allclose(G.F_from_q(a, a**3 / Q), 0, atol=1e-13)
    a1, q1 = 0.6 - 0.3j, 0.25 + 0.1j
    assert abs(G.F_from_q([a1], [q1])[0] - (a1 - (a1 - 1) * q1)) < 1e-14
    with pytest.raises(DomainError):
        G.F_from_q([0.0], [1.0])


def test_F_from_q_generic_matches():
    rng = np.random.default_rng(8)
    a, u, v = _admissible(3, rng)
    _, q, _ = G.to_spq(a, u, v)
    np.testing.assert_allclose(G.F_from_q_generic(list(a), list(q)), G.F_from_q(a, q), rtol=1e-10)


def test_garnier_trace_along_flow(tmp_path):
    st_ = _state(2, 12)
    traj = S.integrate_flow(st_, S.DeformationPath(st_.moving, ([0.3, 0.1j],)), 1e-10).trajectory
    gt = G.garnier_trace(traj)
    for k in range(len(traj)):
        np.testing.assert_allclose(G.elementary_symmetric(gt.u[k]), gt.F[k], rtol=1e-9)
    gt.write_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().startswith("arc,re_u1")


def test_quantity_names():
    st_ = _state(2, 13)
    a, B = list(st_.positions), st_.residues
    b, f = G.pn_coefficients(st_)
    assert abs(G.quantity("b")(a, B) - b) < 1e-14
    assert abs(G.quantity("f2")(a, B) - f[1]) < 1e-14
    assert abs(G.quantity("F1")(a, B) - G.symmetric_F(st_)[0]) < 1e-12
    assert G.quantity("B3_21")(a, B) == B[2, 1, 0]
    with pytest.raises(ValueError):
        G.quantity("nonsense")


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_viete_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    b, f = c[0], c[1:]
    if abs(b) <= 1e-6 * np.abs(f).max():
        return
    r = G.u_roots(b, f)
    F = G.symmetric_from_coefficients(b, f)
    assert np.abs(G.elementary_symmetric(r.u) - F).max() < 1e-9 * max(1.0, np.abs(F).max())


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
def test_v_qp_roundtrip(seed, n):
    a, u, v = _admissible(n, np.random.default_rng(seed))
    _, q, p = G.to_spq(a, u, v)
    back = G.v_from_qp(u, a, q, p)
    assert np.abs(back - v).max() < 1e-9 * max(1.0, np.abs(v).max())
    F = G.F_from_q(a, q)
    assert np.abs(F - G.elementary_symmetric(u)).max() < 1e-8 * max(1.0, np.abs(F).max())
