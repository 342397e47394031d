import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isl.errors import DomainError, GeometryError, PreconditionError
from isl.fuchsian import (
    Arc,
    FuchsianFamily,
    Line,
    MonodromyRep,
    angular_order,
    basepoint_clearance,
    coefficient_matrix,
    default_basepoint,
    is_irreducible,
    is_resonant,
    local_trace_defects,
    monodromy,
    random_family,
    standard_loops,
    transport,
    winding_number,
)

from conftest import commuting_family, diag


def test_coefficient_single_term():
    fam = FuchsianFamily([0.0], [diag(0.3)])
    np.testing.assert_allclose(coefficient_matrix(fam, 2.0), diag(0.15), atol=1e-15)


def test_coefficient_zero_residues():
    fam = FuchsianFamily([0.0, 1.0], np.zeros((2, 2, 2)))
    assert np.all(coefficient_matrix(fam, 0.3 + 0.7j) == 0)


def test_coefficient_two_points_by_hand():
    b1 = np.array([[0.2, 0.5], [0.1, -0.2]], dtype=complex)
    b2 = np.array([[-0.1j, 0.3], [0.0, 0.1j]], dtype=complex)
    b2[0, 1] = -0.5
    b2[1, 0] = -0.1
    fam = FuchsianFamily([0.0, 1.0], [b1, b2], residue_at_infinity=-(b1 + b2))
    np.testing.assert_allclose(coefficient_matrix(fam, 0.5), 2 * (b1 - b2), atol=1e-15)


def test_validation_errors():
    with pytest.raises(GeometryError):
        FuchsianFamily([0.0, 0.0], [diag(0.1), diag(0.2)])
    with pytest.raises(PreconditionError, match="trace-free"):
        FuchsianFamily([0.0, 1.0], [np.eye(2), -np.eye(2)])
    off = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(PreconditionError, match="diagonal"):
        FuchsianFamily([0.0, 1.0], [off, diag(0.2)])


def test_transport_zero_family_is_identity():
    fam = FuchsianFamily([0.0, 1.0], np.zeros((2, 2, 2)))
    y = transport(fam, [2j, -1 + 1j, -2.0, -2 - 2j, 3 - 1j])
    np.testing.assert_allclose(y, np.eye(2), atol=1e-14)


def test_transport_circle_about_diagonal_point():
    theta = 0.23 + 0.05j
    fam = FuchsianFamily([0.0], [diag(theta)])
    y = transport(fam, [Arc(0j, 1.0, 0.0, 2 * math.pi)], tol=1e-12)
    expected = np.diag([np.exp(2j * np.pi * theta), np.exp(-2j * np.pi * theta)])
    np.testing.assert_allclose(y, expected, atol=1e-10)


def test_transport_rejects_path_through_pole():
    fam = FuchsianFamily([0.0], [diag(0.2)])
    with pytest.raises(GeometryError):
        transport(fam, [-1.0, 1.0])


def test_hypergeometric_loop_trace():
    # residues at 0 and 1 only: the loop about 0 has trace 2 cos(2 pi beta_1)
    b1 = np.array([[0.1, 0.4], [0.3, -0.1]], dtype=complex)
    b2 = np.array([[0.25, -0.4], [-0.3, -0.25]], dtype=complex)
    fam = FuchsianFamily([0.0, 1.0], [b1, b2])
    rep = monodromy(fam, tol=1e-11)
    beta = fam.betas[0]
    assert abs(np.trace(rep.generators[0]) - 2 * np.cos(2 * np.pi * beta)) < 1e-9


def test_monodromy_commuting_generators():
    t1, t2 = 0.17, -0.31 + 0.02j
    fam = commuting_family([t1, t2], [0.0, 1.0])
    rep = monodromy(fam, tol=1e-11)
    for g, t in zip(rep.generators, (t1, t2)):
        np.testing.assert_allclose(g, np.diag([np.exp(2j * np.pi * t), np.exp(-2j * np.pi * t)]), atol=1e-9)
    g0, g1 = rep.generators
    np.testing.assert_allclose(g0 @ g1, g1 @ g0, atol=1e-9)


def test_monodromy_zero_family():
    fam = FuchsianFamily([0.3 + 0.4j, 0.0, 1.0], np.zeros((3, 2, 2)))
    rep = monodromy(fam)
    for g in rep.generators:
        np.testing.assert_allclose(g, np.eye(2), atol=1e-13)
    assert is_irreducible(rep) is False


@pytest.mark.parametrize("seed", range(5))
def test_group_relation_random_three_points(seed):
    fam = random_family(1, np.random.default_rng(seed), centered=True)
    tol = 1e-10
    rep = monodromy(fam, tol=tol)
    # relative to the conditioning of the product
    scale = np.prod([np.linalg.norm(g, 2) for g in rep.generators]) * np.linalg.norm(rep.at_infinity, 2)
    assert rep.relation_residual / scale < 10 * tol


def _rep(gens):
    return MonodromyRep(0j, tuple(np.asarray(g, dtype=complex) for g in gens), tuple(range(len(gens))), np.eye(2), 0.0)


def test_irreducibility_examples():
    assert is_irreducible(_rep([np.diag([2, 0.5]), np.diag([3, 1 / 3])])) is False
    assert is_irreducible(_rep([np.eye(2), np.eye(2)])) is False
    assert is_irreducible(_rep([[[1, 1], [0, 1]], [[1, 0], [1, 1]]])) is True
    # shared eigenvector e_1 but non-diagonal
    assert is_irreducible(_rep([[[2, 1], [0, 0.5]], [[3, -1], [0, 1 / 3]]])) is False


def test_resonant_defect_is_untestable():
    fam = commuting_family([0.5, -0.5 + 0.2], [0.0, 1.0])
    rep = monodromy(fam)
    d = local_trace_defects(rep, fam)
    assert math.isnan(d[0])
    assert math.isfinite(d[1])
    assert is_resonant(0.5) and is_resonant(1.0) and not is_resonant(0.3)


def test_winding_numbers_of_standard_loops():
    fam = random_family(2, np.random.default_rng(3))
    for loop in standard_loops(fam):
        verts = loop.vertices
        for i, a in enumerate(fam.points):
            assert winding_number(verts, a) == (1 if i == loop.target else 0)
    with pytest.raises(DomainError):
        winding_number([0, 1, 1j, 0], 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 3))
def test_transport_determinant_is_one(seed, n):
    rng = np.random.default_rng(seed)
    fam = random_family(n, rng, centered=True)
    end = complex(*rng.uniform(-3, 3, 2))
    path = [Line(5j, -4 + 4j), Line(-4 + 4j, -4 - 4j), Line(-4 - 4j, end)]
    tol = 1e-10
    try:
        y = transport(fam, path, tol)
    except GeometryError:
        return
    det = np.linalg.det(y)
    assert abs(det - 1) < 10 * tol * max(1.0, np.abs(y).max() ** 2)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_reversed_loop_gives_inverse(seed):
    fam = random_family(1, np.random.default_rng(seed), centered=True)
    loop = standard_loops(fam)[0]
    fwd = transport(fam, list(loop.pieces), 1e-11)
    back = transport(fam, list(loop.reversed().pieces), 1e-11)
    err = np.abs(back @ fwd - np.eye(2)).max()
    assert err < 1e-8 * max(1.0, np.abs(fwd).max() ** 2)


def test_angular_order_and_segment_clearance():
    pts = np.array([0.5 - 1j, 0j, 1 + 0j])
    assert angular_order(pts, -10j) == angular_order(pts + 0.01, -10j)
    assert angular_order(pts, -10j) != angular_order(np.array([-0.5 - 1j, 0j, 1 + 0j]), -10j)
    # from -10i the segment to 1 passes 0.5 - 1j at distance 4 / sqrt(101)
    assert basepoint_clearance([pts], -10j) == pytest.approx(4 / math.sqrt(101))
    bp = default_basepoint([pts])
    assert basepoint_clearance([pts], bp) >= basepoint_clearance([pts], -10j)


def test_keep_order_basepoint():
    pts = [np.array([0.5 - 1j, 0j, 1 + 0j]), np.array([0.6 - 1j, 0j, 1 + 0j])]
    bp = default_basepoint(pts, keep_order=True)
    assert angular_order(pts[0], bp) == angular_order(pts[1], bp)
    # a point circling 0 is seen on both sides of it from every direction
    ring = [np.array([0.5 * np.exp(1j * k * math.pi / 2), 0j, 1 + 0j]) for k in range(4)]
    with pytest.raises(GeometryError):
        default_basepoint(ring, keep_order=True)


def test_invariant_noise_tracks_cancellation():
    big = np.array([[1e6, 1e6 - 1], [-(1e6 + 1), -1e6]], dtype=complex)  # trace 0, entries 1e6
    rep = MonodromyRep(0j, (big, np.eye(2, dtype=complex)), (0, 1), np.eye(2, dtype=complex), 0.0)
    noise = rep.invariant_noise(1e-12)
    assert noise["tr0"] == pytest.approx(2e-6, rel=1e-5)
    assert noise["tr1"] == pytest.approx(2e-12 / 3)
