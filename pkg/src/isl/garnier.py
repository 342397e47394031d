"""From Schlesinger residues to Garnier data, and the (a, u, v) -> (s, q, p) change of variables.

With ``b_i`` the upper-right entries of the residues, the upper-right entry
of ``z (z - 1) prod (z - a_i) B(z)`` is the degree-``n`` polynomial
``P_n(z) = b z^n + f_1 z^{n-1} + ... + f_n``. Its roots are the ``u_k``, and
``F_k = sigma_k(u) = (-1)^k f_k / b``.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegreeCollapse, DomainError, PreconditionError
from .fuchsian import FuchsianFamily, sqrt_branch
from .poles import pole_order_on_slice
from .schlesinger import PoleEvent, SchlesingerState, Trajectory

NORMALIZATION_ATOL = 1e-10
COLLAPSE_RATIO = 1e-12


@dataclass(frozen=True)
class ThetaParams:
    """Garnier parameters ``theta_1..theta_{n+2}`` (the last two at 0 and 1) and ``theta_inf``."""

    thetas: tuple
    theta_inf: complex

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(complex(t) for t in self.thetas))
        object.__setattr__(self, "theta_inf", complex(self.theta_inf))
        if len(self.thetas) < 3:
            raise ValueError("need theta_1..theta_{n+2} with n >= 1")

    @property
    def n(self) -> int:
        return len(self.thetas) - 2

    @property
    def kappa(self) -> complex:
        return 0.25 * ((sum(self.thetas) - 1) ** 2 - self.theta_inf**2)

    @classmethod
    def from_family(cls, family: FuchsianFamily) -> "ThetaParams":
        return cls(tuple(2 * b for b in family.betas), 2 * family.beta_inf - 1)

    @classmethod
    def from_state(cls, state: SchlesingerState) -> "ThetaParams":
        return cls.from_family(state.family())


# --- coefficients -------------------------------------------------------------------


def _poly_mul_linear(coeffs, root):
    """Multiply a coefficient list (highest degree first) by ``(z - root)``."""
    out = list(coeffs) + [0]
    for k in range(len(coeffs)):
        out[k + 1] = out[k + 1] - root * coeffs[k]
    return out


def coefficients_from(a, b):
    """``(b, f_1..f_n)`` from positions ``a`` and upper-right entries ``b`` of all ``n + 2`` residues.

    Works with any scalar type supporting ``+``, ``-`` and ``*`` (complex
    numbers or :class:`~isl._jet.Jet`), by assembling
    ``sum_i b_i prod_{j != i} (z - a_j)``. The leading coefficient
    ``sum_i b_i`` vanishes under the normalisation and is dropped.
    """
    m = len(a)
    total = None
    for i in range(m):
        poly = [1]
        for j in range(m):
            if j != i:
                poly = _poly_mul_linear(poly, a[j])
        term = [b[i] * c for c in poly]
        total = term if total is None else [x + y for x, y in zip(total, term)]
    return total[1], tuple(total[2:])


def viete_coefficients(a, b):
    """The same coefficients from the subset sums ``f_k = (-1)^k sum_{|I|=k+1} (sum_I b) prod_I a``."""
    m = len(a)
    n = m - 2
    bb = complex(sum(b[i] * a[i] for i in range(m)))
    fs = []
    for k in range(1, n + 1):
        acc = 0j
        for idx in itertools.combinations(range(m), k + 1):
            acc += sum(b[i] for i in idx) * math.prod(a[i] for i in idx)
        fs.append((-1) ** k * acc)
    return bb, tuple(fs)


def _upper_right(state: SchlesingerState):
    b = state.residues[:, 0, 1]
    scale = max(1.0, float(np.abs(b).max()))
    if abs(b.sum()) > NORMALIZATION_ATOL * scale:
        raise PreconditionError(f"sum of upper-right residue entries is {abs(b.sum()):.3e}, not 0")
    return b


def pn_coefficients(state: SchlesingerState):
    """``(b, (f_1..f_n))``: coefficients of ``z^n..z^0`` of ``P_n(z, a)``."""
    b = _upper_right(state)
    lead, fs = coefficients_from(list(state.positions), list(b))
    return complex(lead), np.array(fs, dtype=np.complex128)


def pn_polynomial(state: SchlesingerState) -> np.ndarray:
    """Coefficients of ``P_n`` (highest degree first), obtained by interpolating ``z(z-1) prod(z - a_i) B(z)_{12}``.

    Independent of :func:`pn_coefficients`; used to cross-check it.
    """
    a = state.positions
    n = state.n
    b = state.residues[:, 0, 1]
    nodes = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1)) * (2 * np.abs(a).max() + 1)
    vals = np.array([sum(b[i] * np.prod(z - np.delete(a, i)) for i in range(len(a))) for z in nodes])
    V = np.vander(nodes, n + 1)
    return np.linalg.solve(V, vals)


# --- roots --------------------------------------------------------------------------


@dataclass(frozen=True)
class RootSet:
    """Roots of ``P_n`` with diagnostics.

    ``collisions`` lists index pairs closer than the collision tolerance;
    ``ambiguous`` is set when continuity matching against ``previous_u``
    had two candidates within ``1e-10`` of each other (the caller should
    take a smaller step).
    """

    u: np.ndarray
    collisions: tuple
    ambiguous: bool = False


def u_roots(b, f, previous_u=None, collision_tol: float = 1e-7) -> RootSet:
    """Roots of ``b z^n + f_1 z^{n-1} + ... + f_n`` via companion-matrix eigenvalues."""
    f = np.atleast_1d(np.asarray(f, dtype=np.complex128))
    norm = max(float(np.abs(f).max()) if len(f) else 0.0, abs(b))
    if norm == 0 or abs(b) <= COLLAPSE_RATIO * norm:
        raise DegreeCollapse(f"leading coefficient |b|={abs(b):.3e} against |f|={norm:.3e}")
    u = np.roots(np.concatenate([[b], f])).astype(np.complex128)
    if len(u) < len(f):
        # trailing zero coefficients make np.roots drop roots at 0
        u = np.concatenate([u, np.zeros(len(f) - len(u), dtype=np.complex128)])
    ambiguous = False
    if previous_u is not None:
        prev = np.asarray(previous_u, dtype=np.complex128)
        cost = np.abs(prev[:, None] - u[None, :])
        rows, cols = linear_sum_assignment(cost)
        u = u[cols[np.argsort(rows)]]
        for k in range(len(prev)):
            srt = np.sort(cost[k])
            if len(srt) > 1 and srt[1] - srt[0] < 1e-10:
                ambiguous = True
    scale = 1.0 + float(np.abs(u).max())
    coll = tuple(
        (i, j) for i, j in itertools.combinations(range(len(u)), 2) if abs(u[i] - u[j]) < collision_tol * scale
    )
    return RootSet(u, coll, ambiguous)


def v_values(state: SchlesingerState, u, near: float = 1e-8) -> np.ndarray:
    """``v_j = sum_i (b_i^{11} + beta_i) / (u_j - a_i)`` over all ``n + 2`` finite points."""
    u = np.atleast_1d(np.asarray(u, dtype=np.complex128))
    a = state.positions
    res = state.residues
    beta = np.array([sqrt_branch(-np.linalg.det(r)) for r in res])
    dist = np.abs(u[:, None] - a[None, :])
    if dist.min() == 0:
        j, i = np.unravel_index(np.argmin(dist), dist.shape)
        raise DomainError(f"u_{j + 1} coincides with a_{i + 1}")
    if dist.min() < near:
        j, i = np.unravel_index(np.argmin(dist), dist.shape)
        warnings.warn(f"u_{j + 1} is within {dist.min():.3e} of a_{i + 1}", RuntimeWarning, stacklevel=2)
    return ((res[:, 0, 0] + beta)[None, :] / (u[:, None] - a[None, :])).sum(axis=1)


def symmetric_from_coefficients(b, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.complex128)
    norm = max(float(np.abs(f).max()) if len(f) else 0.0, abs(b))
    if b == 0 or abs(b) <= COLLAPSE_RATIO * norm:
        raise DegreeCollapse("b(a) vanishes: the symmetric functions have a pole here")
    signs = np.array([(-1) ** k for k in range(1, len(f) + 1)])
    return signs * f / b


def symmetric_F(state: SchlesingerState) -> np.ndarray:
    """``F_k = (-1)^k f_k / b`` for ``k = 1..n``."""
    b, f = pn_coefficients(state)
    return symmetric_from_coefficients(b, f)


def elementary_symmetric(u) -> np.ndarray:
    """``sigma_1..sigma_n`` of the given values."""
    c = np.poly(np.asarray(u, dtype=np.complex128))
    return np.array([(-1) ** k * c[k] for k in range(1, len(c))])


@dataclass(frozen=True)
class GarnierData:
    b: complex
    f: np.ndarray
    u: np.ndarray
    v: np.ndarray
    F: np.ndarray
    collisions: tuple = ()
    ambiguous: bool = False


def garnier_data(state: SchlesingerState, previous_u=None) -> GarnierData:
    b, f = pn_coefficients(state)
    roots = u_roots(b, f, previous_u)
    return GarnierData(
        b, f, roots.u, v_values(state, roots.u), symmetric_from_coefficients(b, f), roots.collisions, roots.ambiguous
    )


@dataclass
class GarnierTrace:
    arc: np.ndarray
    b: np.ndarray
    u: np.ndarray
    v: np.ndarray
    F: np.ndarray
    flags: list

    def write_csv(self, path) -> None:
        n = self.u.shape[1]
        header = ["arc"]
        for name in ("u", "v", "F"):
            for k in range(n):
                header += [f"re_{name}{k + 1}", f"im_{name}{k + 1}"]
        header += ["re_b", "im_b"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self.arc)):
                row = [repr(float(self.arc[k]))]
                for arr in (self.u, self.v, self.F):
                    for z in arr[k]:
                        row += [repr(float(z.real)), repr(float(z.imag))]
                row += [repr(float(self.b[k].real)), repr(float(self.b[k].imag))]
                w.writerow(row)


def garnier_trace(trajectory: Trajectory) -> GarnierTrace:
    """Garnier data along a trajectory, roots continued by nearest-neighbour matching.

    States where ``b`` collapses are stored as NaN and listed in ``flags``.
    """
    n = trajectory.n
    K = len(trajectory)
    bs = np.full(K, np.nan, dtype=np.complex128)
    us = np.full((K, n), np.nan, dtype=np.complex128)
    vs = np.full((K, n), np.nan, dtype=np.complex128)
    Fs = np.full((K, n), np.nan, dtype=np.complex128)
    flags = []
    prev = None
    for k in range(K):
        st = trajectory.state(k)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                g = garnier_data(st, prev)
        except (DegreeCollapse, DomainError) as exc:
            flags.append({"index": k, "arc": float(trajectory.arc[k]), "flag": str(exc)})
            continue
        bs[k], us[k], vs[k], Fs[k] = g.b, g.u, g.v, g.F
        if g.collisions or g.ambiguous:
            flags.append({"index": k, "arc": float(trajectory.arc[k]), "flag": "root collision or ambiguous match"})
        prev = g.u
    return GarnierTrace(trajectory.arc.copy(), bs, us, vs, Fs, flags)


# --- slice quantities ---------------------------------------------------------------


def b_quantity(a, B):
    return sum(B[i][0][1] * a[i] for i in range(len(a)))


def f_quantity(k: int):
    def q(a, B):
        return coefficients_from(list(a), [B[i][0][1] for i in range(len(a))])[1][k - 1]

    q.__name__ = f"f{k}"
    return q


def F_quantity(k: int):
    """``F_k = (-1)^k f_k / b``; for ``n = 1``, ``F_1`` is the root ``u``."""

    def q(a, B):
        lead, fs = coefficients_from(list(a), [B[i][0][1] for i in range(len(a))])
        return (-1) ** k * fs[k - 1] / lead

    q.__name__ = f"F{k}"
    return q


def quantity(name: str):
    """Slice quantity by name: ``b``, ``f<k>``, ``F<k>``, ``u`` (``n = 1``) or ``B<i>_<rc>``."""
    from .schlesinger import entry_quantity

    if name == "b":
        return b_quantity
    if name == "u":
        return F_quantity(1)
    if name[0] in "fF" and name[1:].isdigit():
        k = int(name[1:])
        return f_quantity(k) if name[0] == "f" else F_quantity(k)
    if name.startswith("B") and "_" in name:
        i, rc = name[1:].split("_")
        return entry_quantity(int(i) - 1, int(rc[0]) - 1, int(rc[1]) - 1)
    raise ValueError(f"unknown quantity {name!r}")


# --- theorem checks -----------------------------------------------------------------


def theorem2_bound(n: int, theta_inf: complex, atol: float = 1e-10) -> int:
    """Case-specific bound: ``-(n + 1)`` if ``theta_inf = 0``, else ``-n``; plus one for even ``n``."""
    base = -(n + 1) if abs(theta_inf) <= atol else -n
    return base + (1 if n % 2 == 0 else 0)


def theorem2_verdict_bound(n: int) -> int:
    """Bound used for pass/fail: ``-(n + 1)``, plus one for even ``n`` (``-2`` at ``n = 2``).

    It holds in both cases. The stricter ``theta_inf != 0`` bound may fail on
    an exceptional subset that slices cannot detect, so it is only reported.
    """
    return -(n + 1) + (1 if n % 2 == 0 else 0)


def theorem2_check(events, n: int, theta_inf: complex, irreducible) -> list:
    """Verdict per event (``pass`` is None for indeterminate orders).

    Refuses to run unless irreducibility has been confirmed.
    """
    if irreducible is not True:
        raise PreconditionError("monodromy is not confirmed irreducible")
    bound = theorem2_verdict_bound(n)
    strict = theorem2_bound(n, theta_inf)
    out = []
    for ev in events:
        if ev.order is None:
            out.append({"event": ev, "bound": bound, "strict_bound": strict, "pass": None, "strict_pass": None})
        else:
            out.append(
                {
                    "event": ev,
                    "bound": bound,
                    "strict_bound": strict,
                    "pass": ev.order >= bound,
                    "strict_pass": ev.order >= strict,
                }
            )
    return out


def b_zero_is_simple(evaluator, center: complex, radius: float, tol: float = 1e-8, start_angle: float = 0.0):
    """``(is_simple, estimate)``: the argument-principle count of ``b`` on the circle equals +1."""
    est = pole_order_on_slice(evaluator, center, radius, tol, start_angle)
    return (est.determinate and est.order == 1), est


def theta_inf_zero_b_constant(trajectory: Trajectory, atol: float = 1e-8) -> float:
    """``max |b - b(start)|`` along a trajectory with ``theta_inf = 2 beta_inf - 1 = 0``."""
    binf = -trajectory.residues[0].sum(axis=0)[0, 0]
    theta_inf = 2 * binf - 1
    if abs(theta_inf) > atol:
        raise PreconditionError(f"theta_inf = {theta_inf:.6g}, not 0")
    from .schlesinger import b_values

    b = b_values(trajectory)
    return float(np.abs(b - b[0]).max())


def event_bound_record(check: dict) -> dict:
    ev: PoleEvent = check["event"]
    rec = ev.to_dict()
    rec.update({k: v for k, v in check.items() if k != "event"})
    return rec


# --- symplectic transform -----------------------------------------------------------


def _check_admissible(a, u):
    n = len(a)
    pts = list(a) + [0.0, 1.0]
    for i, j in itertools.combinations(range(n + 2), 2):
        if pts[i] == pts[j]:
            raise DomainError(f"a_{i + 1} and a_{j + 1} coincide")
    for i, j in itertools.combinations(range(len(u)), 2):
        if u[i] == u[j]:
            raise DomainError(f"u_{i + 1} and u_{j + 1} coincide")
    for k in range(len(u)):
        for i in range(n + 2):
            if u[k] == pts[i]:
                raise DomainError(f"u_{k + 1} coincides with a_{i + 1}")


def m_functions(a, u):
    """``(M_i, M^{k,i})`` of the change of variables; ``Mki[k, i]``."""
    a = np.asarray(a, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    n = len(a)
    pts = np.concatenate([a, [0.0, 1.0]])
    M = np.empty(n, dtype=np.complex128)
    for i in range(n):
        M[i] = -np.prod(a[i] - u) / np.prod(a[i] - np.delete(pts, i))
    Mki = np.empty((n, n), dtype=np.complex128)
    for k in range(n):
        den_u = np.prod(u[k] - np.delete(u, k))
        for i in range(n):
            # the factor (u_k - a_i) is left out rather than divided out
            Mki[k, i] = u[k] * (u[k] - 1) * np.prod(u[k] - np.delete(a, i)) / den_u
    return M, Mki


def to_spq(a, u, v, theta: ThetaParams | None = None):
    """``(s, q, p)`` with ``s_i = a_i/(a_i - 1)``, ``q_i = -a_i M_i`` and ``p_i = (1 - a_i) sum_k M^{k,i} v_k / (u_k (u_k - 1))``.

    ``theta`` is accepted for symmetry with the parameter-carrying callers;
    the transform itself does not depend on it.
    """
    a = np.asarray(a, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    _check_admissible(a, u)
    M, Mki = m_functions(a, u)
    s = a / (a - 1)
    q = -a * M
    w = v / (u * (u - 1))
    p = (1 - a) * (Mki * w[:, None]).sum(axis=0)
    return s, q, p


def v_from_qp(u, a, q, p, near: float = 1e-14) -> np.ndarray:
    """``v_i = sum_k q_k p_k / (u_i - a_k)``."""
    u = np.asarray(u, dtype=np.complex128)
    a = np.asarray(a, dtype=np.complex128)
    diff = u[:, None] - a[None, :]
    scale = 1.0 + max(float(np.abs(u).max()), float(np.abs(a).max()))
    if np.abs(diff).min() <= near * scale:
        i, k = np.unravel_index(np.argmin(np.abs(diff)), diff.shape)
        raise DomainError(f"u_{i + 1} is too close to a_{k + 1}")
    return ((np.asarray(q) * np.asarray(p))[None, :] / diff).sum(axis=1)


def F_from_q(a, q, cond_limit: float = 1e12) -> np.ndarray:
    """Solve ``a_i^n - F_1 a_i^{n-1} + ... + (-1)^n F_n = (Q_i(a) / a_i) q_i`` for ``F``.

    ``Q_i(a) = prod_{j != i} (a_i - a_j)`` over all ``n + 2`` points. Rows are
    scaled to unit max-norm before a pivoted LU solve; a condition estimate
    above ``cond_limit`` triggers a warning.
    """
    a = np.asarray(a, dtype=np.complex128)
    q = np.asarray(q, dtype=np.complex128)
    n = len(a)
    if np.any(a == 0):
        raise DomainError("a_i must be nonzero")
    pts = np.concatenate([a, [0.0, 1.0]])
    Q = np.array([np.prod(a[i] - np.delete(pts, i)) for i in range(n)])
    rhs = Q / a * q - a**n
    # unknowns x_k = (-1)^k F_k, k = 1..n, multiplying a_i^{n-k}
    V = np.vander(a, n + 1)[:, 1:]
    row = np.abs(V).max(axis=1)
    Vs = V / row[:, None]
    cond = np.linalg.cond(Vs)
    if cond > cond_limit:
        warnings.warn(f"Vandermonde system is ill-conditioned (cond {cond:.3e})", RuntimeWarning, stacklevel=2)
    x = np.linalg.solve(Vs, rhs / row)
    signs = np.array([(-1) ** k for k in range(1, n + 1)])
    return signs * x


def F_from_q_generic(a, q):
    """:func:`F_from_q` for generic scalars (e.g. jets), by Cramer-free elimination on ``n <= 4``."""
    n = len(a)
    pts = list(a) + [0.0, 1.0]
    rows = []
    for i in range(n):
        Qi = 1
        for j in range(n + 2):
            if j != i:
                Qi = Qi * (a[i] - pts[j])
        rhs = Qi / a[i] * q[i] - _power(a[i], n)
        rows.append([_power(a[i], n - k) for k in range(1, n + 1)] + [rhs])
    x = _gauss_solve(rows)
    return [(-1) ** k * x[k - 1] for k in range(1, n + 1)]


def _power(x, k):
    out = 1
    for _ in range(k):
        out = out * x
    return out


def _gauss_solve(rows):
    """Gaussian elimination without pivoting on an augmented matrix of generic scalars."""
    n = len(rows)
    rows = [list(r) for r in rows]
    for c in range(n):
        piv = rows[c][c]
        for r in range(c + 1, n):
            fac = rows[r][c] / piv
            rows[r] = [x - fac * y for x, y in zip(rows[r], rows[c])]
    x = [0] * n
    for r in range(n - 1, -1, -1):
        acc = rows[r][n]
        for c in range(r + 1, n):
            acc = acc - rows[r][c] * x[c]
        x[r] = acc / rows[r][r]
    return x
