"""Rank-2 Fuchsian systems ``dY/dz = B(z) Y`` and their numerical monodromy.

Transport uses the adaptive DP5(4) kernel on complex state. Standard loops
leave a basepoint on the circle ``|z| = 2 max|a_i| + 2``, run straight to a
small circle around one singular point, go once around it counterclockwise
and come back the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, GeometryError, IntegrationError, PreconditionError

_MAX_STEPS = 2_000_000


def _as_residues(residues) -> np.ndarray:
    arr = np.array(residues, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (2, 2):
        raise ValueError(f"residues must have shape (m, 2, 2), got {arr.shape}")
    return arr


def sqrt_branch(x: complex) -> complex:
    """Principal square root normalised to ``Re >= 0`` (``Im >= 0`` on the cut)."""
    r = complex(np.sqrt(complex(x)))
    if r.real < 0 or (r.real == 0 and r.imag < 0):
        r = -r
    return r


@dataclass(frozen=True)
class FuchsianFamily:
    """Singular points, trace-free residues and the diagonal residue at infinity.

    ``residue_at_infinity`` is ``-sum(residues)`` and must be diagonal,
    ``diag(beta_inf, -beta_inf)``.
    """

    points: np.ndarray
    residues: np.ndarray
    residue_at_infinity: np.ndarray = field(default=None)
    atol: float = 1e-12

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.complex128).reshape(-1)
        res = _as_residues(self.residues)
        if res.shape[0] != pts.shape[0]:
            raise ValueError("one residue per singular point is required")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("singular points must be finite")
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i] == pts[j]:
                    raise GeometryError(f"singular points {i} and {j} coincide")
        scale = max(1.0, float(np.abs(res).max(initial=0.0)))
        tr = res[:, 0, 0] + res[:, 1, 1]
        if np.any(np.abs(tr) > self.atol * scale):
            bad = int(np.argmax(np.abs(tr)))
            raise PreconditionError(f"residue {bad} is not trace-free (trace {tr[bad]:.3e})")
        total = res.sum(axis=0)
        if self.residue_at_infinity is None:
            binf = -total
        else:
            binf = np.array(self.residue_at_infinity, dtype=np.complex128)
            if np.abs(total + binf).max() > self.atol * scale:
                raise PreconditionError("sum of residues differs from -residue_at_infinity")
        if abs(binf[0, 1]) > self.atol * scale or abs(binf[1, 0]) > self.atol * scale:
            raise PreconditionError("residue at infinity must be diagonal")
        binf = np.diag([binf[0, 0], -binf[0, 0]]).astype(np.complex128)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "residues", res)
        object.__setattr__(self, "residue_at_infinity", binf)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def betas(self) -> np.ndarray:
        """Local exponents ``beta_i`` with ``beta_i**2 = -det(B_i)``, ``Re >= 0``."""
        return np.array([sqrt_branch(-np.linalg.det(b)) for b in self.residues])

    @property
    def beta_inf(self) -> complex:
        return complex(self.residue_at_infinity[0, 0])

    def min_separation(self) -> float:
        pts = self.points
        if len(pts) < 2:
            return 1.0
        d = np.abs(pts[:, None] - pts[None, :])
        d[np.diag_indices(len(pts))] = np.inf
        return float(d.min())

    def loop_radius(self) -> float:
        return 0.5 * self.min_separation()

    def clearance(self) -> float:
        return self.loop_radius() / 4.0


def coefficient_matrix(family: FuchsianFamily, z: complex) -> np.ndarray:
    """Return ``B(z) = sum_i B_i / (z - a_i)``."""
    d = z - family.points
    if np.any(d == 0):
        i = int(np.flatnonzero(d == 0)[0])
        raise DomainError(f"z coincides with singular point a[{i}] = {family.points[i]}")
    return np.tensordot(1.0 / d, family.residues, axes=1)


# --- paths ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    start: complex
    end: complex

    def point(self, s):
        return self.start + s * (self.end - self.start)

    def distance_to(self, a: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(a - self.start)
        s = ((a - self.start) * d.conjugate()).real / abs(d) ** 2
        s = min(1.0, max(0.0, s))
        return abs(a - self.point(s))

    def reversed(self):
        return Line(self.end, self.start)

    def kernel_args(self):
        return 0, complex(self.start), complex(self.end), 0j


@dataclass(frozen=True)
class Arc:
    """``center + radius * exp(i(phi0 + s * sweep))`` for ``s`` in [0, 1]."""

    center: complex
    radius: float
    phi0: float
    sweep: float

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)

    def point(self, s):
        return self.center + self.radius * np.exp(1j * (self.phi0 + s * self.sweep))

    def distance_to(self, a: complex) -> float:
        # conservative: distance to the full circle
        return abs(abs(a - self.center) - self.radius)

    def reversed(self):
        return Arc(self.center, self.radius, self.phi0 + self.sweep, -self.sweep)

    def kernel_args(self):
        return 1, complex(self.center), complex(self.radius), complex(self.phi0, self.sweep)


def _as_pieces(path):
    if len(path) and isinstance(path[0], (Line, Arc)):
        return list(path)
    verts = [complex(v) for v in path]
    return [Line(verts[k], verts[k + 1]) for k in range(len(verts) - 1)]


def _check_clearance(pieces, points, clearance):
    for piece in pieces:
        for i, a in enumerate(points):
            d = piece.distance_to(a)
            if d < clearance:
                raise GeometryError(
                    f"path passes within {d:.3e} of singular point a[{i}] = {a} "
                    f"(clearance {clearance:.3e})"
                )


def _transport_pieces(family: FuchsianFamily, pieces, tol: float) -> np.ndarray:
    y = np.array([1, 0, 0, 1], dtype=np.complex128)
    for piece in pieces:
        kind, p0, p1, p2 = piece.kernel_args()
        status, s, y_new, _, _, _, _ = _kernels.integrate_transport(
            family.points, family.residues, kind, p0, p1, p2, y, tol, _MAX_STEPS
        )
        if status != _kernels.OK:
            raise IntegrationError(f"transport stopped at s={s:.6g} on {piece} (status {status})", status, s)
        y = y_new
    return y.reshape(2, 2)


def transport(family: FuchsianFamily, path, tol: float = 1e-10, clearance: float | None = None) -> np.ndarray:
    """Continue the fundamental matrix ``Y(start) = I`` along ``path``.

    ``path`` is a polygonal chain of complex vertices, or a list of
    :class:`Line`/:class:`Arc` pieces. Returns ``Y(end)``.
    """
    pieces = _as_pieces(path)
    if clearance is None:
        clearance = family.clearance()
    _check_clearance(pieces, family.points, clearance)
    return _transport_pieces(family, pieces, tol)


# --- loops and monodromy -------------------------------------------------------------


def winding_number(vertices, z: complex) -> int:
    """Discrete winding number of the closed chain ``vertices`` about ``z``."""
    v = np.asarray(vertices, dtype=np.complex128) - z
    if np.any(v == 0):
        raise DomainError("point lies on the chain")
    ang = np.angle(v[1:] / v[:-1])
    return int(round(ang.sum() / (2 * math.pi)))


@dataclass(frozen=True)
class Loop:
    basepoint: complex
    target: int
    pieces: tuple

    @property
    def vertices(self) -> np.ndarray:
        out = [self.pieces[0].start]
        for p in self.pieces:
            if isinstance(p, Arc):
                out.extend(p.point(np.linspace(0, 1, 129)[1:]))
            else:
                out.append(p.end)
        return np.array(out)

    def reversed(self) -> "Loop":
        return Loop(self.basepoint, self.target, tuple(p.reversed() for p in reversed(self.pieces)))


def default_basepoint(point_sets, n_angles: int = 720, keep_order: bool = False) -> complex:
    """Basepoint on ``|z| = 2 max|a| + 2`` maximising the loop-segment clearance.

    ``point_sets`` is a sequence of point configurations sharing the basepoint
    (one configuration, or every state of a trajectory). With ``keep_order``
    only basepoints that see the same :func:`angular_order` in every
    configuration are candidates; GeometryError if there are none.
    """
    sets = np.array([np.asarray(p_, dtype=np.complex128) for p_ in point_sets])  # (k, m)
    radius = 2.0 * float(np.abs(sets).max()) + 2.0
    # offset keeps the search off symmetric directions
    phi = -0.5 * math.pi + 0.0137 + 2 * math.pi * np.arange(n_angles) / n_angles
    cand = radius * np.exp(1j * phi)
    worst = _segment_clearances(sets, cand)
    if keep_order:
        ang = np.angle((sets[None] - cand[:, None, None]) / (-cand[:, None, None]))
        order = np.argsort(ang, axis=-1, kind="stable")
        stable = (order == order[:, :1]).all(axis=(1, 2))
        if not stable.any():
            raise GeometryError("no basepoint keeps the loop system fixed over these configurations")
        worst = np.where(stable, worst, -np.inf)
    k = int(np.argmax(worst))
    return complex(cand[k])


def _segment_clearances(sets: np.ndarray, basepoints: np.ndarray) -> np.ndarray:
    """Per basepoint, the least distance from a point to another point's approach segment, over all sets."""
    p = basepoints[:, None, None, None]  # (A, 1, 1, 1)
    a = sets[None, :, :, None]  # segment ends (A, k, m, 1)
    b = sets[None, :, None, :]  # other points (A, k, 1, m)
    d = a - p
    s = ((b - p) * d.conj()).real / (np.abs(d) ** 2)
    s = np.clip(s, 0.0, 1.0)
    dist = np.abs(b - (p + s * d))
    m = sets.shape[1]
    dist[..., np.arange(m), np.arange(m)] = np.inf
    return dist.reshape(len(basepoints), -1).min(axis=1)


def basepoint_clearance(point_sets, basepoint: complex) -> float:
    """Least distance between a singular point and the approach segment of another, over all configurations."""
    sets = np.array([np.asarray(p_, dtype=np.complex128) for p_ in point_sets])
    return float(_segment_clearances(sets, np.array([complex(basepoint)]))[0])


def angular_order(points, basepoint: complex) -> tuple:
    """Point indices sorted by direction as seen from ``basepoint``.

    Along a deformation the straight-segment loops keep their homotopy class
    exactly while this order is unchanged: a point crossing another's
    approach segment swaps two neighbours.
    """
    return _loop_order(np.asarray(points, dtype=np.complex128), basepoint)


def standard_loops(family: FuchsianFamily, basepoint: complex | None = None) -> list[Loop]:
    """Segment-circle-segment loops, one per finite singular point."""
    if basepoint is None:
        basepoint = default_basepoint([family.points])
    r = family.loop_radius()
    loops = []
    for i, a in enumerate(family.points):
        if abs(basepoint - a) <= r:
            raise GeometryError("basepoint lies inside a loop circle")
        psi = float(np.angle(basepoint - a))
        touch = a + r * np.exp(1j * psi)
        pieces = (Line(basepoint, touch), Arc(a, r, psi, 2 * math.pi), Line(touch, basepoint))
        loops.append(Loop(complex(basepoint), i, pieces))
    return loops


@dataclass(frozen=True)
class MonodromyRep:
    """Monodromy generators at ``basepoint``.

    ``generators[i]`` belongs to the loop around ``points[i]``. ``order`` lists
    point indices in the sequence whose product equals the continuation along
    the big counterclockwise circle through the basepoint; ``at_infinity`` is
    the inverse of that continuation so that
    ``at_infinity @ G[order[-1]] @ ... @ G[order[0]] = I``.
    """

    basepoint: complex
    generators: tuple
    order: tuple
    at_infinity: np.ndarray
    relation_residual: float

    @property
    def relative_relation_residual(self) -> float:
        """``relation_residual`` over ``max(1, prod max|G_i| * max|G_inf|)``, the size of the product."""
        scale = float(np.prod([np.abs(g).max() for g in self.generators]) * np.abs(self.at_infinity).max())
        return self.relation_residual / max(1.0, scale)

    def word(self, indices) -> np.ndarray:
        """Product ``G[indices[-1]] ... G[indices[0]]`` (loops traversed left to right)."""
        out = np.eye(2, dtype=np.complex128)
        for i in indices:
            out = self.generators[i] @ out
        return out

    def traces(self) -> np.ndarray:
        return np.array([np.trace(g) for g in self.generators])

    def invariants(self) -> dict:
        """Conjugation invariants ``tr G_i`` and ``tr G_i G_j`` (``i < j``)."""
        m = len(self.generators)
        out = {}
        for i in range(m):
            out[f"tr{i}"] = complex(np.trace(self.generators[i]))
        for i in range(m):
            for j in range(i + 1, m):
                out[f"tr{i}{j}"] = complex(np.trace(self.generators[i] @ self.generators[j]))
        return out

    def invariant_noise(self, tol: float) -> dict:
        """Relative error floor of each invariant for generators accurate to ``tol`` entrywise (relative).

        Traces much smaller than the entries they sum lose digits to cancellation.
        """
        size = [float(np.abs(g).max()) for g in self.generators]
        inv = self.invariants()
        eps = 2 * max(tol, 1e-16)
        out = {}
        m = len(size)
        for i in range(m):
            out[f"tr{i}"] = eps * size[i] / (1 + abs(inv[f"tr{i}"]))
        for i in range(m):
            for j in range(i + 1, m):
                out[f"tr{i}{j}"] = eps * size[i] * size[j] / (1 + abs(inv[f"tr{i}{j}"]))
        return out


def _loop_order(points, basepoint):
    # directions seen from the basepoint, measured from the inward radial direction
    ang = np.angle((points - basepoint) / (-basepoint))
    return tuple(int(i) for i in np.argsort(ang, kind="stable"))


def monodromy(
    family: FuchsianFamily, basepoint: complex | None = None, tol: float = 1e-10, clearance: float | None = None
) -> MonodromyRep:
    """Monodromy generators from the standard loops based at ``basepoint``.

    ``clearance`` (default :meth:`FuchsianFamily.clearance`) is the least
    allowed distance between a loop and the other singular points.
    """
    if basepoint is None:
        basepoint = default_basepoint([family.points])
    if np.any(family.points == basepoint):
        raise DomainError("basepoint coincides with a singular point")
    loops = standard_loops(family, basepoint)
    if clearance is None:
        clearance = family.clearance()
    gens = []
    for loop in loops:
        _check_clearance(loop.pieces, np.delete(family.points, loop.target), clearance)
        approach, circle, _ = loop.pieces
        # the return leg retraces the approach exactly, so conjugate instead of integrating it
        t = _transport_pieces(family, [approach], tol)
        c = _transport_pieces(family, [circle], 0.1 * tol)
        gens.append(np.linalg.solve(t, c @ t))
    radius = abs(basepoint)
    big = _transport_pieces(family, [Arc(0j, radius, float(np.angle(basepoint)), 2 * math.pi)], tol)
    order = _loop_order(family.points, basepoint)
    at_inf = np.linalg.inv(big)
    prod = np.eye(2, dtype=np.complex128)
    for i in order:
        prod = gens[i] @ prod
    residual = float(np.abs(at_inf @ prod - np.eye(2)).max())
    return MonodromyRep(complex(basepoint), tuple(gens), order, at_inf, residual)


def local_trace_defects(rep: MonodromyRep, family: FuchsianFamily) -> np.ndarray:
    """``|tr G_i - 2 cos(2 pi beta_i)|``; NaN where ``2 beta_i`` is an integer."""
    out = []
    for g, beta in zip(rep.generators, family.betas):
        if is_resonant(beta):
            out.append(np.nan)
        else:
            out.append(abs(np.trace(g) - 2 * np.cos(2 * np.pi * beta)))
    return np.array(out)


def is_resonant(beta: complex, tol: float = 1e-9) -> bool:
    two = 2 * complex(beta)
    return abs(two.imag) < tol and abs(two.real - round(two.real)) < tol


def _eigendirections(g: np.ndarray, tol: float):
    """Eigen-directions of ``g``; ``None`` when ill-determined, ``[]`` when scalar."""
    scale = max(np.abs(g).max(), 1e-300)
    lam_mean = 0.5 * np.trace(g)
    nil = g - lam_mean * np.eye(2)
    size = np.abs(nil).max() / scale
    if size < tol:
        return []
    evals = np.linalg.eigvals(g)
    gap = abs(evals[0] - evals[1]) / scale
    if gap > math.sqrt(tol):
        dirs = []
        for lam in evals:
            _, _, vh = np.linalg.svd(g - lam * np.eye(2))
            dirs.append(vh[-1].conj())
        return dirs
    # eigenvalues merge: a single (Jordan) direction, reliable only if the nilpotent part is large
    if size < 1e3 * tol:
        return None
    _, _, vh = np.linalg.svd(nil)
    return [vh[-1].conj()]


def _deviation(g: np.ndarray, v: np.ndarray) -> float:
    w = g @ v
    nw = np.linalg.norm(w)
    if nw == 0:
        return 0.0
    return abs(v[0] * w[1] - v[1] * w[0]) / (np.linalg.norm(v) * nw)


def is_irreducible(rep: MonodromyRep, tol: float = 1e-6):
    """True if the generators share no invariant line, False if they do.

    Returns ``None`` (indeterminate) when an eigen-direction cannot be
    resolved at the requested angular tolerance.
    """
    gens = list(rep.generators)
    candidates = None
    for g in gens:
        dirs = _eigendirections(g, tol)
        if dirs is None:
            return None
        if dirs:
            candidates = dirs
            break
    if candidates is None:
        return False
    for v in candidates:
        if all(_deviation(g, v) < tol for g in gens):
            return False
    return True


def random_points(n: int, rng: np.random.Generator, min_distance: float = 0.3) -> np.ndarray:
    """``n`` moving points followed by the fixed points 0 and 1, pairwise separated."""
    for _ in range(10_000):
        a = rng.uniform(-1.0, 2.0, n) + 1j * rng.uniform(-1.5, 1.5, n)
        pts = np.concatenate([a, [0.0, 1.0]])
        d = np.abs(pts[:, None] - pts[None, :])
        d[np.diag_indices(n + 2)] = np.inf
        if d.min() >= min_distance:
            return pts.astype(np.complex128)
    raise GeometryError("could not place points with the requested separation")


def random_residues(
    m: int,
    rng: np.random.Generator,
    beta_inf: complex | None = None,
    scale: float = 1.0,
    centered: bool = False,
) -> np.ndarray:
    """Trace-free residues with entries from the unit square, summing to a diagonal matrix.

    Entries are drawn from ``[0, 1] + i[0, 1]`` (shifted to be centred on the
    origin when ``centered``) and multiplied by ``scale``. The last residue
    absorbs the off-diagonal correction; when ``beta_inf`` is given its
    diagonal is also adjusted so that ``sum B_i = diag(-beta_inf, beta_inf)``.
    """
    lo = -0.5 if centered else 0.0
    res = scale * (rng.uniform(lo, lo + 1.0, (m, 2, 2)) + 1j * rng.uniform(lo, lo + 1.0, (m, 2, 2)))
    half_tr = 0.5 * (res[:, 0, 0] + res[:, 1, 1])
    res[:, 0, 0] -= half_tr
    res[:, 1, 1] -= half_tr
    rest = res[:-1].sum(axis=0)
    res[-1, 0, 1] = -rest[0, 1]
    res[-1, 1, 0] = -rest[1, 0]
    if beta_inf is not None:
        res[-1, 0, 0] = -beta_inf - rest[0, 0]
        res[-1, 1, 1] = -res[-1, 0, 0]
    return res


def random_family(
    n: int,
    rng: np.random.Generator,
    beta_inf: complex | None = None,
    scale: float = 1.0,
    centered: bool = False,
) -> FuchsianFamily:
    pts = random_points(n, rng)
    return FuchsianFamily(pts, random_residues(n + 2, rng, beta_inf, scale, centered))
