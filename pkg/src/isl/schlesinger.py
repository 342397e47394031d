"""Schlesinger isomonodromic flow for rank-2 residues at ``a_1..a_n, 0, 1``.

The moving points are ``positions[:n]``; ``positions[n] = 0`` and
``positions[n + 1] = 1`` never move. Paths in configuration space are
piecewise linear; complex lines through a state (:class:`SliceFlow`) are
used to locate and measure singular points of quantities built from the
residues.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._jet import Jet
from .errors import GeometryError, IntegrationError, PreconditionError
from .fuchsian import FuchsianFamily, angular_order, basepoint_clearance, default_basepoint, monodromy, sqrt_branch
from .poles import OrderEstimate, ladder_order, pole_order_on_slice

_MAX_STEPS = 2_000_000
DEFAULT_BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class SchlesingerState:
    positions: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.complex128).reshape(-1)
        res = np.array(self.residues, dtype=np.complex128)
        if res.shape != (len(pos), 2, 2):
            raise ValueError("residues must have shape (n + 2, 2, 2)")
        if len(pos) < 3 or pos[-2] != 0 or pos[-1] != 1:
            raise GeometryError("positions must end with the fixed points 0 and 1")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "residues", res)

    @classmethod
    def from_family(cls, family: FuchsianFamily) -> "SchlesingerState":
        return cls(family.points, family.residues)

    @classmethod
    def from_flat(cls, positions, y) -> "SchlesingerState":
        m = len(positions)
        return cls(positions, np.asarray(y[: 4 * m]).reshape(m, 2, 2))

    @property
    def n(self) -> int:
        return len(self.positions) - 2

    @property
    def moving(self) -> np.ndarray:
        return self.positions[: self.n]

    def family(self) -> FuchsianFamily:
        return FuchsianFamily(self.positions, self.residues)

    def residue_sum(self) -> np.ndarray:
        return self.residues.sum(axis=0)

    @property
    def beta_inf(self) -> complex:
        return complex(-self.residue_sum()[0, 0])

    def flat(self) -> np.ndarray:
        m = len(self.positions)
        y = np.zeros(4 * m + 1, dtype=np.complex128)
        y[: 4 * m] = self.residues.reshape(-1)
        return y

    def scale(self) -> float:
        return float(np.abs(self.residues).max())

    def min_separation(self) -> float:
        p = self.positions
        d = np.abs(p[:, None] - p[None, :])
        d[np.diag_indices(len(p))] = np.inf
        return float(d.min())


def _full_direction(direction, n: int) -> np.ndarray:
    d = np.asarray(direction, dtype=np.complex128).reshape(-1)
    if len(d) == n:
        return np.concatenate([d, [0.0, 0.0]])
    if len(d) == n + 2:
        if d[-2] != 0 or d[-1] != 0:
            raise GeometryError("the fixed points 0 and 1 cannot move")
        return d
    raise ValueError(f"direction must have {n} entries")


def _commutators(res: np.ndarray) -> np.ndarray:
    prod = np.einsum("iab,jbc->ijac", res, res)
    return prod - np.einsum("jab,ibc->ijac", res, res)


def _weights(pos, d):
    diff = pos[:, None] - pos[None, :]
    dd = d[:, None] - d[None, :]
    np.fill_diagonal(diff, 1.0)
    w = dd / diff
    np.fill_diagonal(w, 0.0)
    return w


def schlesinger_rhs(state: SchlesingerState, direction, min_distance: float = 0.0) -> np.ndarray:
    """Contract the Schlesinger 1-form with the tangent ``direction``.

    ``dB_i = -sum_{j != i} [B_i, B_j] d(a_i - a_j) / (a_i - a_j)``; the
    residues at 0 and 1 are included and carry zero displacement.
    """
    d = _full_direction(direction, state.n)
    if state.min_separation() <= min_distance:
        raise GeometryError(f"points collide (separation {state.min_separation():.3e})")
    w = _weights(state.positions, d)
    return -np.einsum("ijab,ij->iab", _commutators(state.residues), w)


def flow_jets(positions, residues, direction):
    """First and second derivatives of the residues along ``a + zeta * direction``."""
    pos = np.asarray(positions, dtype=np.complex128)
    res = np.asarray(residues, dtype=np.complex128)
    d = np.asarray(direction, dtype=np.complex128)
    w = _weights(pos, d)
    comm = _commutators(res)
    d1 = -np.einsum("ijab,ij->iab", comm, w)
    dcomm = (
        np.einsum("iab,jbc->ijac", d1, res)
        - np.einsum("jab,ibc->ijac", res, d1)
        + np.einsum("iab,jbc->ijac", res, d1)
        - np.einsum("jab,ibc->ijac", d1, res)
    )
    d2 = -np.einsum("ijab,ij->iab", dcomm, w) + np.einsum("ijab,ij->iab", comm, w * w)
    return d1, d2


def jet_inputs(positions, residues, direction):
    """Positions and residues as :class:`Jet` objects along ``direction``."""
    d1, d2 = flow_jets(positions, residues, direction)
    a = [Jet(complex(p), complex(q), 0j) for p, q in zip(positions, direction)]
    m = len(positions)
    B = np.empty((m, 2, 2), dtype=object)
    for i in range(m):
        for r in range(2):
            for c in range(2):
                B[i, r, c] = Jet(complex(residues[i, r, c]), complex(d1[i, r, c]), complex(d2[i, r, c]))
    return a, B


# --- paths and trajectories -----------------------------------------------------------


def _segment_min_distance(p0, dp, q0, dq) -> float:
    r0 = p0 - q0
    dr = dp - dq
    if dr == 0:
        return abs(r0)
    s = -(r0 * dr.conjugate()).real / abs(dr) ** 2
    s = min(1.0, max(0.0, s))
    return abs(r0 + s * dr)


@dataclass(frozen=True)
class DeformationPath:
    """Piecewise-linear path ``start -> start + d_1 -> start + d_1 + d_2 ...`` of the moving points."""

    start: np.ndarray
    segments: tuple
    clearance: float | None = None

    def __post_init__(self):
        start = np.array(self.start, dtype=np.complex128).reshape(-1)
        segs = tuple(np.array(s, dtype=np.complex128).reshape(-1) for s in self.segments)
        for s in segs:
            if s.shape != start.shape:
                raise ValueError("every displacement needs one entry per moving point")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "segments", segs)
        full0 = np.concatenate([start, [0.0, 1.0]])
        d = np.abs(full0[:, None] - full0[None, :])
        d[np.diag_indices(len(full0))] = np.inf
        if d.min() == 0:
            raise GeometryError("start configuration has coinciding points")
        delta = self.clearance if self.clearance is not None else 1e-3 * float(d.min())
        object.__setattr__(self, "clearance", delta)
        pos = full0
        for k, seg in enumerate(segs):
            dfull = np.concatenate([seg, [0.0, 0.0]])
            for i, j in itertools.combinations(range(len(pos)), 2):
                dist = _segment_min_distance(pos[i], dfull[i], pos[j], dfull[j])
                if dist < delta:
                    raise GeometryError(
                        f"segment {k}: points {i} and {j} come within {dist:.3e} (clearance {delta:.3e})"
                    )
            pos = pos + dfull

    @property
    def n(self) -> int:
        return len(self.start)

    def vertices(self) -> list:
        out = [self.start]
        for s in self.segments:
            out.append(out[-1] + s)
        return out

    def segment_lengths(self) -> np.ndarray:
        return np.array([float(np.linalg.norm(s)) for s in self.segments])

    @property
    def length(self) -> float:
        return float(self.segment_lengths().sum())

    @classmethod
    def line(cls, start, end, clearance=None):
        start = np.asarray(start, dtype=np.complex128)
        return cls(start, (np.asarray(end, dtype=np.complex128) - start,), clearance)


@dataclass
class Trajectory:
    """Recorded states: ``arc`` (cumulative path length), positions, residues, quadrature slot."""

    arc: np.ndarray
    positions: np.ndarray
    residues: np.ndarray
    quadrature: np.ndarray

    def __len__(self) -> int:
        return len(self.arc)

    @property
    def n(self) -> int:
        return self.positions.shape[1] - 2

    def state(self, k: int) -> SchlesingerState:
        return SchlesingerState(self.positions[k], self.residues[k])

    def states(self):
        for k in range(len(self)):
            yield self.state(k)

    def last(self) -> SchlesingerState:
        return self.state(len(self) - 1)

    @classmethod
    def single(cls, state: SchlesingerState) -> "Trajectory":
        return cls(np.zeros(1), state.positions[None].copy(), state.residues[None].copy(), np.zeros(1, complex))

    def write_csv(self, path) -> None:
        n = self.n
        m = n + 2
        header = ["arc"]
        for i in range(n):
            header += [f"re_a{i + 1}", f"im_a{i + 1}"]
        for i in range(m):
            for r, c in ((0, 0), (0, 1), (1, 0), (1, 1)):
                header += [f"re_B{i + 1}_{r + 1}{c + 1}", f"im_B{i + 1}_{r + 1}{c + 1}"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self)):
                row = [repr(float(self.arc[k]))]
                for i in range(n):
                    z = self.positions[k, i]
                    row += [repr(z.real), repr(z.imag)]
                for z in self.residues[k].reshape(-1):
                    row += [repr(z.real), repr(z.imag)]
                w.writerow(row)


@dataclass(frozen=True)
class PoleEvent:
    """A singular point met on a slice: ``order`` is zeros minus poles inside the circle."""

    slice_parameter: complex
    quantity: str
    order: int | None
    residual: float
    radius: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def determinate(self) -> bool:
        return self.order is not None

    @property
    def is_pole(self) -> bool:
        return self.order is not None and self.order <= -1

    def to_dict(self) -> dict:
        out = {
            "slice_parameter": [float(np.real(self.slice_parameter)), float(np.imag(self.slice_parameter))],
            "quantity": self.quantity,
            "order": self.order,
            "residual": float(self.residual),
            "radius": float(self.radius),
        }
        out.update(self.extra)
        return out


def event_from_estimate(quantity, center, radius, est: OrderEstimate, **extra) -> PoleEvent:
    return PoleEvent(
        complex(center),
        quantity,
        est.order if est.determinate else None,
        est.residual,
        float(radius),
        dict(extra),
    )


@dataclass
class FlowResult:
    trajectory: Trajectory
    events: list
    completed: bool
    status: int = _kernels.OK


def _run_segment(pos0, dfull, y0, s1, tol, blow_limit, record):
    return _kernels.integrate_schlesinger(pos0, dfull, y0, s1, tol, _MAX_STEPS, blow_limit, record)


def integrate_flow(
    state0: SchlesingerState,
    path: DeformationPath,
    tol: float = 1e-10,
    blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
    refine: bool = True,
) -> FlowResult:
    """Integrate the Schlesinger flow along ``path``.

    Integration stops when ``max |B_i|`` exceeds ``blowup_factor`` times the
    initial scale or the step size underflows. The blowup is then bracketed
    by bisection to ``1e-3 * path.length`` and each residue's pole order is
    estimated on a circle ten times the bracket around it.
    """
    if path.n != state0.n:
        raise ValueError("path dimension differs from the number of moving points")
    if np.abs(state0.moving - path.start).max() > 1e-12 * max(1.0, np.abs(path.start).max()):
        raise GeometryError("path does not start at the state's configuration")
    blow_limit = blowup_factor * max(1.0, state0.scale())
    m = state0.n + 2
    arcs = [np.zeros(1)]
    positions = [state0.positions[None].copy()]
    ys = [state0.flat()[None]]
    pos = state0.positions.copy()
    y = state0.flat()
    offset = 0.0
    total = path.length
    for seg, seg_len in zip(path.segments, path.segment_lengths()):
        if seg_len == 0:
            continue
        dfull = np.concatenate([seg, [0.0, 0.0]])
        status, s_end, y_end, ts, yrec, _, _ = _run_segment(pos, dfull, y, 1.0, tol, blow_limit, True)
        arcs.append(offset + ts[1:] * seg_len)
        positions.append(pos[None, :] + ts[1:, None] * dfull[None, :])
        ys.append(yrec[1:])
        if status != _kernels.OK:
            traj = _assemble(arcs, positions, ys, m)
            events = []
            if refine:
                events = _refine_blowup(pos, dfull, y, ts, yrec, status, seg_len, total, tol, blow_limit, offset)
            return FlowResult(traj, events, False, status)
        pos = pos + dfull
        y = y_end
        offset += seg_len
    return FlowResult(_assemble(arcs, positions, ys, m), [], True)


def _assemble(arcs, positions, ys, m):
    arc = np.concatenate(arcs)
    pos = np.concatenate(positions)
    y = np.concatenate(ys)
    return Trajectory(arc, pos, y[:, : 4 * m].reshape(-1, m, 2, 2), y[:, 4 * m].copy())


def _refine_blowup(pos0, dfull, y0, ts, yrec, status, seg_len, total, tol, blow_limit, offset):
    # last state safely below the threshold, and the parameter where trouble started
    if status == _kernels.BLOWUP and len(ts) >= 2:
        lo, y_lo = float(ts[-2]), yrec[-2].copy()
    else:
        lo, y_lo = float(ts[-1]), yrec[-1].copy()
    hi = float(ts[-1]) if status == _kernels.BLOWUP else min(1.0, float(ts[-1]) + 1e-3 * total / seg_len)
    if hi <= lo:
        hi = min(1.0, lo + 1e-3 * total / seg_len)
    target = 1e-3 * total / seg_len
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        st, _, y_mid, _, _, _, _ = _run_segment(pos0 + lo * dfull, (mid - lo) * dfull, y_lo, 1.0, tol, blow_limit, False)
        if st == _kernels.OK:
            lo, y_lo = mid, y_mid
        else:
            hi = mid
    # the threshold can trip well before the pole, so the bracket is never narrower than the target
    width = max(hi - lo, target)
    center = lo + 0.5 * width
    radius = 10.0 * width
    anchor = SchlesingerState.from_flat(pos0 + lo * dfull, y_lo)
    flow = SliceFlow(anchor, dfull, tol=tol, zeta0=lo, origin=pos0)
    sampler = flow.circle(center, radius)
    events = []
    m = len(pos0)
    for i in range(m):
        ests = []
        for r, c in ((0, 0), (0, 1), (1, 0), (1, 1)):
            q = entry_quantity(i, r, c)
            ests.append(pole_order_on_slice(sampler.evaluator(q), center, radius, start_angle=sampler.start_angle))
        det = [e for e in ests if e.determinate]
        worst = min(det, key=lambda e: e.order) if det else max(ests, key=lambda e: e.residual)
        events.append(
            PoleEvent(
                complex(center),
                f"B{i + 1}",
                worst.order if len(det) == 4 else None,
                worst.residual,
                radius * seg_len,
                {"arc": offset + center * seg_len, "entry_orders": [e.order if e.determinate else None for e in ests]},
            )
        )
    return events


# --- reports ------------------------------------------------------------------------


def _continue_beta(beta_sq, ref):
    r = sqrt_branch(beta_sq)
    return r if abs(r - ref) <= abs(-r - ref) else -r


@dataclass(frozen=True)
class ConservationReport:
    sum_deviation: float
    beta_deviation: float
    per_beta: tuple


def conservation_report(trajectory: Trajectory) -> ConservationReport:
    """Max drift of ``sum B_i + B_inf`` and of each local exponent along the trajectory."""
    res = trajectory.residues
    sums = res.sum(axis=1)
    binf0 = -sums[0, 0, 0]
    target = np.diag([-binf0, binf0])
    sum_dev = float(np.abs(sums - target[None]).max())
    dets = res[:, :, 0, 0] * res[:, :, 1, 1] - res[:, :, 0, 1] * res[:, :, 1, 0]
    per = []
    for i in range(res.shape[1]):
        b0 = sqrt_branch(-dets[0, i])
        dev = max(abs(_continue_beta(-q, b0) - b0) for q in dets[:, i])
        per.append(float(dev))
    return ConservationReport(sum_dev, max(per), tuple(per))


@dataclass(frozen=True)
class IsomonodromyReport:
    drift: float
    relative_drift: float
    basepoint: complex
    sample_arcs: tuple
    invariants: tuple
    relation_residuals: tuple
    noise_floor: float


def sample_indices(trajectory: Trajectory, spacing: float = 0.5) -> list:
    """Endpoints plus ``ceil(length / spacing)`` interior states, nearest in arc length."""
    if len(trajectory) == 1:
        return [0]
    length = float(trajectory.arc[-1])
    k = math.ceil(length / spacing)
    targets = np.linspace(0.0, length, k + 2)
    idx = sorted({int(np.argmin(np.abs(trajectory.arc - t))) for t in targets} | {0, len(trajectory) - 1})
    return idx


def isomonodromy_check(
    trajectory: Trajectory, tol: float = 1e-10, basepoint=None, loop_tol: float | None = None
) -> IsomonodromyReport:
    """Drift of ``tr G_i`` and ``tr G_i G_j`` over sampled states, at a common basepoint.

    Loops are integrated at ``loop_tol`` (default ``tol / 100``) so that the
    measured drift reflects the trajectory rather than the loop quadrature;
    invariants of size ~1e3 are common and amplify loop errors accordingly.
    ``relative_drift`` divides each difference by ``1 + |reference|``;
    ``noise_floor`` estimates the relative error of the invariants themselves
    from the loop tolerance and the generator sizes; a drift below it is not
    resolved.

    The default basepoint sees the singular points in one angular order over
    the whole trajectory, so the loops at every state are continuations of the
    initial ones. GeometryError if no such basepoint exists or if a given
    ``basepoint`` violates this.
    """
    idx = sample_indices(trajectory)
    if basepoint is None:
        basepoint = default_basepoint(trajectory.positions, keep_order=True)
    if loop_tol is None:
        loop_tol = tol / 100
    order0 = angular_order(trajectory.positions[0], basepoint)
    for k in range(1, len(trajectory)):
        if angular_order(trajectory.positions[k], basepoint) != order0:
            raise GeometryError(
                f"a singular point crosses a loop segment near arc {trajectory.arc[k]:.4g}; "
                "the loop system is not continued along the trajectory"
            )
    # a moving point may pass close to a fixed approach segment; that only costs steps
    seg_clear = basepoint_clearance(trajectory.positions, basepoint)
    invs = []
    rel = []
    floor = []
    for k in idx:
        fam = trajectory.state(k).family()
        rep = monodromy(fam, basepoint, loop_tol, clearance=min(fam.clearance(), 0.5 * seg_clear))
        invs.append(rep.invariants())
        rel.append(rep.relation_residual)
        floor.append(max(rep.invariant_noise(loop_tol).values()))
    ref = invs[0]
    drift = 0.0
    rdrift = 0.0
    for inv in invs[1:]:
        for key, val in inv.items():
            diff = abs(val - ref[key])
            drift = max(drift, diff)
            rdrift = max(rdrift, diff / (1 + abs(ref[key])))
    return IsomonodromyReport(
        float(drift),
        float(rdrift),
        complex(basepoint),
        tuple(float(trajectory.arc[k]) for k in idx),
        tuple(invs),
        tuple(rel),
        float(max(floor)),
    )


def b_values(trajectory: Trajectory) -> np.ndarray:
    """``b = sum_i b_i^{12} a_i`` over all finite points, per recorded state."""
    return np.einsum("ki,ki->k", trajectory.residues[:, :, 0, 1], trajectory.positions)


def _require_diagonal_sum(trajectory: Trajectory, atol: float = 1e-8):
    s = trajectory.residues[0].sum(axis=0)
    scale = max(1.0, float(np.abs(trajectory.residues[0]).max()))
    if abs(s[0, 1]) > atol * scale or abs(s[1, 0]) > atol * scale:
        raise PreconditionError("sum of residues is not diagonal")


def lemma1_residual(trajectory: Trajectory) -> float:
    """Largest per-unit-length defect of ``db = (2 theta + 1) sum b_i^{12} da_i``.

    The right side is accumulated by the integrator alongside the flow, so
    each step compares ``Delta b`` with the integrator's own quadrature of
    the 1-form; the defect is divided by ``max(1, path length)``. See
    :func:`lemma1_step_residuals` for the raw per-step values.
    """
    _require_diagonal_sum(trajectory)
    if len(trajectory) < 2:
        return 0.0
    b = b_values(trajectory)
    c = trajectory.quadrature
    drift = np.abs((b - b[0]) - (c - c[0]))
    return float(drift.max() / max(1.0, float(trajectory.arc[-1])))


def lemma1_step_residuals(trajectory: Trajectory) -> np.ndarray:
    """``|Delta b - Delta(quadrature)| / Delta arc`` for each recorded step."""
    _require_diagonal_sum(trajectory)
    b = b_values(trajectory)
    c = trajectory.quadrature
    da = np.diff(trajectory.arc)
    keep = da > 0
    return np.abs(np.diff(b) - np.diff(c))[keep] / da[keep]


def theorem1_bound(n_points: int) -> int:
    """Lower bound on residue pole orders at a Theta point for ``n_points`` singular points.

    ``n_points`` counts every singular point including infinity; the bound is
    ``2 - n_points``, improved by one when ``n_points`` is odd.
    """
    return 2 - n_points + (1 if n_points % 2 else 0)


def theorem1_check(events, n: int) -> list:
    """Verdict per event: ``{"event", "bound", "pass"}``; indeterminate events get ``pass=None``.

    ``n`` is the number of moving points, so the family has ``n + 3`` singular points.
    """
    bound = theorem1_bound(n + 3)
    out = []
    for ev in events:
        ok = None if ev.order is None else ev.order >= bound
        out.append({"event": ev, "bound": bound, "pass": ok})
    return out


# --- complex slices -----------------------------------------------------------------


def entry_quantity(i: int, r: int, c: int):
    def q(a, B):
        return B[i][r][c]

    q.__name__ = f"B{i + 1}_{r + 1}{c + 1}"
    return q


class SliceFlow:
    """The solution on the complex line ``a(zeta) = origin + zeta * direction``.

    States are reached by straight-line continuation from the nearest
    previously visited parameter, so every value is the analytic
    continuation along an explicit route from the anchor ``zeta0``.
    """

    def __init__(
        self,
        state: SchlesingerState,
        direction,
        tol: float = 1e-10,
        zeta0: complex = 0j,
        origin=None,
        blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
    ):
        self.n = state.n
        self.direction = _full_direction(direction, self.n)
        self.tol = tol
        if origin is None:
            origin = state.positions - zeta0 * self.direction
        self.origin = np.asarray(origin, dtype=np.complex128)
        self.blow_limit = blowup_factor * max(1.0, state.scale())
        self._zetas = [complex(zeta0)]
        self._ys = [state.flat()]

    def positions(self, zeta: complex) -> np.ndarray:
        return self.origin + zeta * self.direction

    def branch_points(self) -> list:
        """Parameters where two of ``a_1..a_n, 0, 1`` collide on this line."""
        out = []
        m = len(self.origin)
        for i, j in itertools.combinations(range(m), 2):
            dd = self.direction[i] - self.direction[j]
            if dd != 0:
                out.append(complex((self.origin[j] - self.origin[i]) / dd))
        return out

    def branch_distance(self, zeta: complex) -> float:
        bps = self.branch_points()
        return min((abs(zeta - b) for b in bps), default=math.inf)

    def _advance(self, z0, y0, z1):
        dz = z1 - z0
        if dz == 0:
            return y0.copy()
        y = y0.copy()
        y[-1] = 0.0
        status, s, y_end, _, _, _, _ = _run_segment(
            self.positions(z0), dz * self.direction, y, 1.0, self.tol, self.blow_limit, False
        )
        if status != _kernels.OK:
            raise IntegrationError(f"slice continuation {z0} -> {z1} stopped at s={s:.4g}", status, s)
        return y_end

    def nearest(self, zeta: complex):
        z = np.asarray(self._zetas)
        k = int(np.argmin(np.abs(z - zeta)))
        return self._zetas[k], self._ys[k]

    def flat_at(self, zeta: complex, via=None) -> np.ndarray:
        """Flat state at ``zeta``, continuing from ``via`` (a visited parameter) or the nearest one."""
        if via is None:
            z0, y0 = self.nearest(zeta)
        else:
            z0, y0 = self.nearest(via)
        if z0 == zeta:
            return y0
        y = self._advance(z0, y0, zeta)
        self._zetas.append(complex(zeta))
        self._ys.append(y)
        return y

    def state(self, zeta: complex, via=None) -> SchlesingerState:
        return SchlesingerState.from_flat(self.positions(zeta), self.flat_at(zeta, via))

    def value(self, quantity, zeta: complex, via=None) -> complex:
        st = self.state(zeta, via)
        return complex(quantity(st.positions, st.residues))

    def jet(self, quantity, zeta: complex, via=None) -> Jet:
        st = self.state(zeta, via)
        a, B = jet_inputs(st.positions, st.residues, self.direction)
        return Jet.lift(quantity(a, B))

    def circle(self, center: complex, radius: float, anchor=None) -> "CircleSampler":
        return CircleSampler(self, center, radius, anchor)


class CircleSampler:
    """States near one circle of a slice, reached radially from an anchor then node to node."""

    def __init__(self, flow: SliceFlow, center: complex, radius: float, anchor=None):
        self.flow = flow
        self.center = complex(center)
        self.radius = float(radius)
        if anchor is None:
            zs = np.asarray(flow._zetas)
            dist = np.abs(zs - center)
            outside = dist > 1.2 * radius
            if outside.any():
                k = int(np.flatnonzero(outside)[np.argmin(dist[outside])])
            else:
                k = int(np.argmax(dist))
            anchor = flow._zetas[k]
        self.anchor = complex(anchor)
        off = self.anchor - self.center
        self.start_angle = float(np.angle(off)) if off != 0 else 0.0
        first = self.center + self.radius * np.exp(1j * self.start_angle)
        y_first = flow._advance(*flow.nearest(self.anchor), first)
        self._zetas = [complex(first)]
        self._ys = [y_first]

    def flat_at(self, zeta: complex) -> np.ndarray:
        z = np.asarray(self._zetas)
        k = int(np.argmin(np.abs(z - zeta)))
        if self._zetas[k] == zeta:
            return self._ys[k]
        y = self.flow._advance(self._zetas[k], self._ys[k], zeta)
        self._zetas.append(complex(zeta))
        self._ys.append(y)
        return y

    def state(self, zeta: complex) -> SchlesingerState:
        return SchlesingerState.from_flat(self.flow.positions(zeta), self.flat_at(zeta))

    def evaluator(self, quantity):
        def f(zeta):
            st = self.state(zeta)
            return quantity(st.positions, st.residues)

        return f

    def order(self, quantity, tol: float = 1e-8) -> OrderEstimate:
        return pole_order_on_slice(self.evaluator(quantity), self.center, self.radius, tol, self.start_angle)


@dataclass(frozen=True)
class SingularPoint:
    """A parameter where a quantity has a zero or a pole, located by Newton on ``g / g'``."""

    zeta: complex
    converged: bool
    iterations: int
    last_step: float


def locate_singularity(
    flow: SliceFlow,
    quantity,
    zeta_start: complex,
    max_step: float = 0.25,
    max_iter: int = 60,
    step_tol: float = 1e-11,
    stop_radius: float = 1e-4,
    target: str = "any",
) -> SingularPoint:
    """Newton iteration for a zero or pole of ``g``.

    ``target="any"`` iterates on ``h = g / g'``, whose zeros are the zeros
    and poles of ``g``; ``"poles"`` applies Newton to ``1/g`` (step
    ``-g/g'``), which is repelled by zeros; ``"zeros"`` applies it to ``g``.
    Steps are capped at ``max_step`` and halved when the straight-line
    continuation runs into a blowup. Iteration ends once the step is below
    ``step_tol`` or, approaching a pole, below ``stop_radius`` (the final
    Newton estimate is then returned without integrating closer).
    """
    z = complex(zeta_start)
    via = None
    last = math.inf
    for it in range(1, max_iter + 1):
        try:
            j = flow.jet(quantity, z, via=via)
        except (IntegrationError, ZeroDivisionError):
            return SingularPoint(z, False, it, last)
        via = z
        g, g1, g2 = j.v, j.d1, j.d2
        if g == 0:
            return SingularPoint(z, True, it, 0.0)
        if g1 == 0:
            return SingularPoint(z, False, it, last)
        h = g / g1
        hp = 1.0 - g * g2 / (g1 * g1)
        # exact for g = c (zeta - zeta*)^m whatever m; used for the final location
        step_any = h / hp if hp != 0 else h
        if target == "poles":
            step = -h
        elif target == "zeros":
            step = h
        else:
            step = step_any
        if abs(step) > max_step:
            step *= max_step / abs(step)
        last = abs(step)
        if last < step_tol * (1 + abs(z)):
            return SingularPoint(z - step_any if abs(step_any) < 10 * last else z - step, True, it, last)
        near_pole = abs(g) > 1e3 * max(1.0, abs(g1) * 1e-3)
        if near_pole and last < stop_radius:
            return SingularPoint(z - step_any if abs(step_any) < 10 * last else z - step, True, it, last)
        nxt = z - step
        if flow.branch_distance(nxt) < 1e-3:
            return SingularPoint(nxt, False, it, last)
        for _ in range(30):
            try:
                flow.flat_at(nxt, via=z)
                break
            except IntegrationError:
                step *= 0.5
                nxt = z - step
                if abs(step) < stop_radius and abs(step_any) < 10 * abs(step):
                    # cannot integrate closer: the pole lies within a few steps
                    return SingularPoint(z - step_any, True, it, abs(step))
                if abs(step) < step_tol:
                    return SingularPoint(z, False, it, abs(step))
        z = nxt
    return SingularPoint(z, False, max_iter, last)


@dataclass(frozen=True)
class SlicePoint:
    """A located singular point with per-quantity ladder estimates (see :func:`~isl.poles.ladder_order`)."""

    zeta: complex
    radius: float
    orders: dict
    estimates: dict

    def order(self, name: str):
        return self.orders.get(name)


def hunt_singularities(flow: SliceFlow, quantity, starts, merge_radius: float = 1e-2, target: str = "any") -> list:
    """Newton hunts from each start; converged points closer than ``merge_radius`` are merged."""
    found = []
    for z0 in starts:
        sp = locate_singularity(flow, quantity, z0, target=target)
        if not sp.converged:
            continue
        if any(abs(sp.zeta - f.zeta) < merge_radius for f in found):
            continue
        found.append(sp)
    return found


def measure_point(
    flow: SliceFlow,
    zeta: complex,
    quantities: dict,
    radius: float | None = None,
    neighbours=(),
    max_radius: float = 0.02,
    levels: int = 3,
    tol: float = 1e-8,
) -> SlicePoint:
    """Local orders of each named quantity at ``zeta``.

    The outer radius defaults to the smallest of ``max_radius`` and 0.3
    times the distance to the nearest branch point or listed neighbour;
    circles shrink by a factor 4 per level and all quantities share the
    continued states on each circle.
    """
    if radius is None:
        d = flow.branch_distance(zeta)
        for nb in neighbours:
            if nb != zeta:
                d = min(d, abs(nb - zeta))
        radius = min(max_radius, 0.3 * d)
    samplers = {}

    def sampler(r):
        if r not in samplers:
            samplers[r] = flow.circle(zeta, r)
        return samplers[r]

    est = {}
    orders = {}
    for name, q in quantities.items():

        def for_radius(r, q=q):
            s = sampler(r)
            return s.evaluator(q), s.start_angle

        lad = ladder_order(for_radius, zeta, radius, levels=levels, tol=tol)
        est[name] = lad
        orders[name] = lad.order
    return SlicePoint(complex(zeta), float(radius), orders, est)


def slice_event(point: SlicePoint, name: str, **extra) -> PoleEvent:
    lad = point.estimates[name]
    return PoleEvent(point.zeta, name, point.orders[name], lad.residual, lad.radii[-1], dict(extra))


def residue_orders(point: SlicePoint, m: int) -> dict:
    """Order of each residue matrix ``B_i`` (worst entry); None if any entry is indeterminate."""
    out = {}
    for i in range(m):
        vals = [point.orders.get(f"B{i + 1}_{r}{c}") for r, c in ("11", "12", "21", "22")]
        out[f"B{i + 1}"] = None if any(v is None for v in vals) else min(vals)
    return out


def residue_quantities(m: int) -> dict:
    return {
        f"B{i + 1}_{r + 1}{c + 1}": entry_quantity(i, r, c)
        for i in range(m)
        for r, c in ((0, 0), (0, 1), (1, 0), (1, 1))
    }
