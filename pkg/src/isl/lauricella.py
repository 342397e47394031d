"""Lauricella ``F_D`` with derivatives, the ``E_D`` residual and the kappa = 0 Riccati solutions.

``F_D(alpha; beta_1..beta_n; gamma; x) = sum_m (alpha)_{|m|} prod (beta_i)_{m_i}
/ ((gamma)_{|m|} prod m_i!) prod x_i^{m_i}``, evaluated either by grouping
the series into shells of total degree ``d`` or from the Euler integral
``Gamma(gamma) / (Gamma(alpha) Gamma(gamma - alpha)) int_0^1 t^{alpha-1}
(1-t)^{gamma-alpha-1} prod (1 - x_i t)^{-beta_i} dt``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import loggamma

from .errors import DomainError, PreconditionError, RepresentationError
from .garnier import F_from_q, ThetaParams
from .poles import ladder_order

SERIES_RADIUS = 0.7
MAX_SHELLS = 4096


@dataclass(frozen=True)
class LauricellaParams:
    alpha: complex
    betas: tuple
    gamma: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "betas", tuple(complex(b) for b in self.betas))
        object.__setattr__(self, "gamma", complex(self.gamma))
        if _nonpositive_integer(self.gamma):
            raise RepresentationError(f"gamma = {self.gamma} is a nonpositive integer")

    @property
    def n(self) -> int:
        return len(self.betas)

    def shifted(self, k: int, raise_idx=()) -> "LauricellaParams":
        """Parameters ``(alpha + k; beta + sum e_i over raise_idx; gamma + k)``."""
        b = list(self.betas)
        for i in raise_idx:
            b[i] += 1
        return LauricellaParams(self.alpha + k, tuple(b), self.gamma + k)

    @property
    def terminating_degree(self) -> int | None:
        """``N`` when ``alpha = -N``, so the series is a polynomial of total degree ``N``."""
        return _nonpositive_integer(self.alpha, value=True)


def _nonpositive_integer(z: complex, value: bool = False, atol: float = 1e-14):
    z = complex(z)
    hit = abs(z.imag) <= atol and z.real <= atol and abs(z.real - round(z.real)) <= atol
    if value:
        return int(-round(z.real)) if hit else None
    return hit


@dataclass(frozen=True)
class FDValue:
    """``value``, gradient ``grad[i]`` and Hessian ``hess[i, j]`` (when requested) of ``F_D``."""

    value: complex
    grad: np.ndarray
    hess: np.ndarray | None
    method: str


# --- series -------------------------------------------------------------------------


def _shell_sum(p: LauricellaParams, x: np.ndarray, tol: float) -> tuple[complex, int]:
    """Sum over shells ``d`` of ``(alpha)_d/(gamma)_d * [t^d] prod_i (1 - x_i t)^{-beta_i}``."""
    N = p.terminating_degree
    D = N if N is not None else 64
    while True:
        polys = []
        for b, xi in zip(p.betas, x):
            c = np.empty(D + 1, dtype=np.complex128)
            c[0] = 1.0
            for k in range(1, D + 1):
                c[k] = c[k - 1] * (b + k - 1) * xi / k
            polys.append(c)
        S = polys[0]
        for c in polys[1:]:
            S = np.convolve(S, c)[: D + 1]
        R = np.empty(D + 1, dtype=np.complex128)
        R[0] = 1.0
        for d in range(1, D + 1):
            R[d] = R[d - 1] * (p.alpha + d - 1) / (p.gamma + d - 1)
        terms = R * S
        total = complex(terms.sum())
        if N is not None:
            return total, D
        tail = float(np.abs(terms[-8:]).max())
        if tail <= tol * max(abs(total), 1e-300) or D >= MAX_SHELLS:
            if tail > tol * max(abs(total), 1e-300):
                raise RepresentationError(f"series did not converge within {D} shells (tail {tail:.2e})")
            return total, D
        D *= 2


def fd_series(params: LauricellaParams, x, tol: float = 1e-15) -> complex:
    """Series value; requires ``max |x_i| < 1`` unless ``alpha`` is a nonpositive integer."""
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if len(x) != params.n:
        raise ValueError("x must have one entry per beta")
    if params.terminating_degree is None and np.abs(x).max() >= 1:
        raise RepresentationError("series needs max |x_i| < 1")
    return _shell_sum(params, x, tol)[0]


# --- Euler integral -----------------------------------------------------------------


def _check_integral(params: LauricellaParams, x: np.ndarray):
    if params.alpha.real <= 0:
        raise RepresentationError(f"integral needs Re(alpha) > 0, got alpha = {params.alpha}")
    c = params.gamma - params.alpha
    if c.real <= 0:
        raise RepresentationError(f"integral needs Re(gamma - alpha) > 0, got {c}")
    for i, xi in enumerate(x):
        if abs(xi.imag) <= 1e-15 and xi.real >= 1:
            raise RepresentationError(f"x_{i + 1} = {xi} lies on the cut [1, inf)")


def _euler_integral(alpha, c, x, betas, weight, epsrel):
    """``int_0^1 t^{alpha-1} (1-t)^{c-1} prod (1 - x_i t)^{-beta_i} weight(t) dt`` with graded endpoints."""
    pa = min(alpha.real, 1.0)
    pc = min(c.real, 1.0)

    def g(t):
        return np.exp(-sum(b * np.log(1 - xi * t) for b, xi in zip(betas, x))) * weight(t)

    def left(tau):
        # t = tau**(1/pa)
        if tau == 0:
            return 0j
        t = tau ** (1 / pa)
        return np.exp((alpha / pa - 1) * np.log(tau)) / pa * (1 - t) ** (c - 1) * g(t)

    def right(sig):
        # 1 - t = sig**(1/pc)
        if sig == 0:
            return 0j
        w = sig ** (1 / pc)
        t = 1 - w
        return np.exp((c / pc - 1) * np.log(sig)) / pc * t ** (alpha - 1) * g(t)

    opts = dict(epsabs=0.0, epsrel=epsrel, limit=400, complex_func=True)
    with warnings.catch_warnings():
        # quad warns when epsrel is below what it can certify; judge by its error estimate instead
        warnings.simplefilter("ignore", IntegrationWarning)
        a, ea = quad(left, 0.0, 0.5**pa, **opts)
        b, eb = quad(right, 0.0, 0.5**pc, **opts)
    total = complex(a + b)
    err = abs(ea) + abs(eb)
    if err > max(1e-8, 1e3 * epsrel) * max(abs(total), 1e-300):
        warnings.warn(f"Euler integral error estimate {err:.2e} for value {abs(total):.2e}", RuntimeWarning, stacklevel=3)
    return total


def fd_integral(params: LauricellaParams, x, tol: float = 1e-13, weight=None) -> complex:
    """Euler-integral value (principal branches, ``x`` off the cuts ``[1, inf)``)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    _check_integral(params, x)
    c = params.gamma - params.alpha
    pref = np.exp(loggamma(params.gamma) - loggamma(params.alpha) - loggamma(c))
    w = weight if weight is not None else (lambda t: 1.0)
    return complex(pref * _euler_integral(params.alpha, c, x, params.betas, w, tol))


# --- public evaluator ---------------------------------------------------------------


def _select(params: LauricellaParams, x: np.ndarray, method: str) -> str:
    if method != "auto":
        return method
    if params.terminating_degree is not None or np.abs(x).max() <= SERIES_RADIUS:
        return "series"
    return "integral"


def _raw(params, x, method, tol):
    if method == "series":
        return fd_series(params, x, min(tol, 1e-15))
    if method == "integral":
        return fd_integral(params, x, tol)
    raise ValueError(f"unknown method {method!r}")


def fd_value(params: LauricellaParams, x, tol: float = 1e-13, method: str = "auto", hessian: bool = False) -> FDValue:
    """The branch of ``F_D`` holomorphic at 0 with ``F_D(0) = 1``, with its partial derivatives.

    Derivatives use ``d_i F_D = alpha beta_i / gamma * F_D(alpha + 1; beta + e_i; gamma + 1)``
    applied once (gradient) or twice (Hessian). ``method`` is ``series``,
    ``integral`` or ``auto`` (series for ``max |x_i| <= 0.7`` or a
    terminating series, integral otherwise).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    if len(x) != params.n:
        raise ValueError("x must have one entry per beta")
    method = _select(params, x, method)
    a, g = params.alpha, params.gamma
    val = _raw(params, x, method, tol)
    n = params.n
    grad = np.zeros(n, dtype=np.complex128)
    c1 = a / g
    for i in range(n):
        coef = c1 * params.betas[i]
        if coef != 0:
            grad[i] = coef * _raw(params.shifted(1, (i,)), x, method, tol)
    hess = None
    if hessian:
        hess = np.zeros((n, n), dtype=np.complex128)
        c2 = a * (a + 1) / (g * (g + 1))
        for i in range(n):
            for j in range(i, n):
                coef = c2 * params.betas[i] * (params.betas[j] + (1 if i == j else 0))
                if coef != 0:
                    hess[i, j] = hess[j, i] = coef * _raw(params.shifted(2, (i, j)), x, method, tol)
    return FDValue(val, grad, hess, method)


def fd_hessian_by_differences(params: LauricellaParams, x, h: float = 1e-4, **kw) -> np.ndarray:
    """Hessian from central differences of the exact gradient, step ``h * max(1, |x_j|)``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    n = len(x)
    H = np.empty((n, n), dtype=np.complex128)
    for j in range(n):
        step = h * max(1.0, abs(x[j]))
        e = np.zeros(n)
        e[j] = step
        gp = fd_value(params, x + e, **kw).grad
        gm = fd_value(params, x - e, **kw).grad
        H[:, j] = (gp - gm) / (2 * step)
    return 0.5 * (H + H.T)


def ed_residual(params: LauricellaParams, x, jet) -> float:
    """Largest absolute residual of the ``E_D`` system at ``x``.

    ``jet`` is an :class:`FDValue` with Hessian or a tuple ``(u, grad, hess)``.
    The sums ``sum_j a_j d_i d_j u`` and ``sum_j a_j d_j u`` in the diagonal
    equations run over ``j != i``.
    """
    if isinstance(jet, FDValue):
        u, g, H = jet.value, jet.grad, jet.hess
    else:
        u, g, H = jet
    g = np.asarray(g, dtype=np.complex128)
    H = np.asarray(H, dtype=np.complex128)
    x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
    a, c = params.alpha, params.gamma
    n = len(x)
    worst = 0.0
    for i in range(n):
        bi = params.betas[i]
        mixed = sum(x[j] * H[i, j] for j in range(n) if j != i)
        first = sum(x[j] * g[j] for j in range(n) if j != i)
        r = (
            x[i] * (1 - x[i]) * H[i, i]
            + (1 - x[i]) * mixed
            + (c - (a + bi + 1) * x[i]) * g[i]
            - bi * first
            - a * bi * u
        )
        worst = max(worst, abs(r))
    for i in range(n):
        for j in range(i + 1, n):
            r = (x[i] - x[j]) * H[i, j] + params.betas[i] * g[j] - params.betas[j] * g[i]
            worst = max(worst, abs(r))
    return float(worst)


# --- kappa = 0 solutions ------------------------------------------------------------


def normalize_kappa_zero(theta: ThetaParams, atol: float = 1e-10) -> ThetaParams:
    """Check ``sum theta_i - 1 = +-theta_inf`` and return the parameters with ``theta_inf = sum theta_i - 1``."""
    s = sum(theta.thetas) - 1
    if abs(s) <= atol:
        raise PreconditionError("sum theta_i - 1 vanishes")
    if abs(s - theta.theta_inf) <= atol * max(1.0, abs(s)):
        return theta
    if abs(s + theta.theta_inf) <= atol * max(1.0, abs(s)):
        return ThetaParams(theta.thetas, -theta.theta_inf)
    raise PreconditionError(f"kappa = {theta.kappa:.6g} is not 0")


def riccati_params(theta: ThetaParams) -> LauricellaParams:
    """``E_D(1 - theta_{n+2}; theta_1..theta_n; theta_1 + ... + theta_{n+1})``."""
    th = theta.thetas
    n = theta.n
    return LauricellaParams(1 - th[n + 1], tuple(th[:n]), sum(th[: n + 1]))


def riccati_f(theta: ThetaParams, tol: float = 1e-13, method: str = "auto"):
    """Evaluator ``s -> (f, grad f)`` for the principal ``F_D`` solution of the linearising system."""
    p = riccati_params(theta)

    def f(s):
        r = fd_value(p, s, tol, method)
        return r.value, r.grad

    return f


def s_of_a(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    return a / (a - 1)


def riccati_q(a, theta: ThetaParams, f_evaluator=None, zero_atol: float = 0.0) -> np.ndarray:
    """``q_i = s_i (s_i - 1) / (sum theta - 1) * (theta_i / (s_i - 1) + d_{s_i} f / f)`` at ``s = s(a)``."""
    theta = normalize_kappa_zero(theta)
    if f_evaluator is None:
        f_evaluator = riccati_f(theta)
    s = s_of_a(a)
    f, grad = f_evaluator(s)
    if abs(f) <= zero_atol:
        raise DomainError(f"f vanishes at s = {s}: q has a pole here")
    th = np.array(theta.thetas[: theta.n])
    return s * (s - 1) / (sum(theta.thetas) - 1) * (th / (s - 1) + np.asarray(grad) / f)


def riccati_u(a: complex, theta: ThetaParams, f_evaluator=None) -> complex:
    """``n = 1`` solution ``u = a - (a - 1) q`` of the sixth Painleve equation."""
    q = riccati_q(np.array([a]), theta, f_evaluator)
    return complex(a - (a - 1) * q[0])


@dataclass(frozen=True)
class Prop1Verdict:
    zeta: complex
    f_order: int | None
    F_orders: tuple
    passed: bool | None

    def to_dict(self) -> dict:
        return {
            "slice_parameter": [float(self.zeta.real), float(self.zeta.imag)],
            "f_zero_order": self.f_order,
            "F_orders": list(self.F_orders),
            "pass": self.passed,
        }


def _f_on_slice(f_evaluator, a0, d):
    def fz(zeta):
        a = a0 + zeta * d
        s = s_of_a(a)
        val, grad = f_evaluator(s)
        ds = -d / (a - 1) ** 2
        return complex(val), complex(np.dot(grad, ds))

    return fz


def find_f_zeros(f_evaluator, a0, direction, starts, max_iter: int = 50, region=None) -> list:
    """Newton zeros of ``zeta -> f(s(a0 + zeta d))``, deduplicated."""
    a0 = np.asarray(a0, dtype=np.complex128)
    d = np.asarray(direction, dtype=np.complex128)
    fz = _f_on_slice(f_evaluator, a0, d)
    found = []
    for z in starts:
        z = complex(z)
        ok = False
        for _ in range(max_iter):
            try:
                v, dv = fz(z)
            except (RepresentationError, DomainError, ZeroDivisionError):
                break
            if dv == 0:
                break
            step = v / dv
            if abs(step) > 0.5:
                step *= 0.5 / abs(step)
            z -= step
            if region is not None and not region(z):
                break
            if abs(step) < 1e-13 * (1 + abs(z)):
                ok = True
                break
        if ok and all(abs(z - w) > 1e-6 for w in found):
            found.append(z)
    return found


def prop1_check(
    a0,
    direction,
    theta: ThetaParams,
    f_evaluator=None,
    starts=None,
    zeros=None,
    radius: float | None = None,
    tol: float = 1e-8,
) -> list:
    """Verdicts at zeros of ``f`` on the slice ``a = a0 + zeta * direction``.

    ``zeros`` may be supplied; otherwise they are located by Newton from
    ``starts``. At each zero the order of ``f`` and of every ``F_k`` (from
    :func:`F_from_q` applied to :func:`riccati_q`) is measured on a circle;
    an indeterminate order yields ``passed = None``. Orders come from
    :func:`~isl.poles.ladder_order`, so a nearby zero of ``F_k`` does not
    masquerade as a regular point.
    """
    theta = normalize_kappa_zero(theta)
    if f_evaluator is None:
        f_evaluator = riccati_f(theta)
    a0 = np.asarray(a0, dtype=np.complex128)
    d = np.asarray(direction, dtype=np.complex128)
    fz = _f_on_slice(f_evaluator, a0, d)
    if zeros is None:
        zeros = find_f_zeros(f_evaluator, a0, d, starts if starts is not None else [])
    n = theta.n
    verdicts = []
    for z in zeros:
        others = [abs(z - w) for w in zeros if w != z]
        if radius is None:
            r = 0.3 * min(others) if others else 0.05
            r = min(r, 0.05, 0.3 * _slice_singular_distance(a0, d, z))
        else:
            r = radius
        f_est = ladder_order(lambda rr: (lambda t: fz(t)[0], 0.0), z, r, tol=tol)
        orders = []
        for k in range(n):

            def Fk(t, k=k):
                a = a0 + t * d
                q = riccati_q(a, theta, f_evaluator)
                return F_from_q(a, q)[k]

            orders.append(ladder_order(lambda rr, Fk=Fk: (Fk, 0.0), z, r, tol=tol).order)
        f_order = f_est.order
        if f_order is None or any(o is None for o in orders):
            passed = None
        else:
            passed = f_order == 1 and all(o == -1 for o in orders)
        verdicts.append(Prop1Verdict(complex(z), f_order, tuple(orders), passed))
    return verdicts


def _slice_singular_distance(a0, d, z) -> float:
    """Distance in ``zeta`` to the nearest point where some ``a_i`` hits 0, 1 or another ``a_j``."""
    pts = []
    n = len(a0)
    for i in range(n):
        if d[i] != 0:
            pts += [-a0[i] / d[i], (1 - a0[i]) / d[i]]
        for j in range(i + 1, n):
            dd = d[i] - d[j]
            if dd != 0:
                pts.append((a0[j] - a0[i]) / dd)
    return min((abs(z - p) for p in pts), default=math.inf)
