"""The sixth Painleve equation: residuals, parameters from Garnier data, pole classification.

``u'' = (1/2)(1/u + 1/(u-1) + 1/(u-t)) u'^2 - (1/t + 1/(t-1) + 1/(u-t)) u'
+ u(u-1)(u-t) / (t^2 (t-1)^2) * (alpha + beta t/u^2 + gamma (t-1)/(u-1)^2 + delta t(t-1)/(u-t)^2)``
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._jet import Jet
from .errors import DomainError, IntegrationError
from .garnier import ThetaParams
from .poles import OrderEstimate, pole_order_on_slice

SINGULAR_DISTANCE = 1e-8


@dataclass(frozen=True)
class PviParams:
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def as_tuple(self) -> tuple:
        return (self.alpha, self.beta, self.gamma, self.delta)


def params_from_theta(theta: ThetaParams) -> PviParams:
    """``alpha = theta_inf^2/2``, ``beta = -theta_2^2/2`` (point 0), ``gamma = theta_3^2/2`` (point 1),
    ``delta = (1 - theta_1^2)/2`` (the moving point ``t``)."""
    if theta.n != 1:
        raise ValueError(f"the Painleve VI dictionary needs n = 1, got n = {theta.n}")
    t1, t2, t3 = theta.thetas
    ti = theta.theta_inf
    return PviParams(ti * ti / 2, -t2 * t2 / 2, t3 * t3 / 2, (1 - t1 * t1) / 2)


def pvi_rhs(u, du, t, params: PviParams):
    """Right side of the equation for ``u''``."""
    a, b, g, d = params.as_tuple()
    return (
        0.5 * (1 / u + 1 / (u - 1) + 1 / (u - t)) * du * du
        - (1 / t + 1 / (t - 1) + 1 / (u - t)) * du
        + u * (u - 1) * (u - t) / (t * t * (t - 1) * (t - 1))
        * (a + b * t / (u * u) + g * (t - 1) / ((u - 1) * (u - 1)) + d * t * (t - 1) / ((u - t) * (u - t)))
    )


def _check_domain(u, t):
    t = complex(t)
    if min(abs(t), abs(t - 1)) < SINGULAR_DISTANCE:
        raise DomainError(f"t = {t} is a fixed singular point")
    dists = {"0": abs(u), "1": abs(u - 1), "t": abs(u - t)}
    if min(dists.values()) < SINGULAR_DISTANCE * max(1.0, abs(t)):
        detail = ", ".join(f"|u - {k}| = {v:.3e}" for k, v in dists.items())
        raise DomainError(f"u is on a singular locus of the equation ({detail})")


def pvi_residual(u, t: complex, params: PviParams, h: float | None = None) -> complex:
    """``u'' - RHS`` at ``t``.

    ``u`` is either a callable (derivatives by complex central differences
    with step ``h = 1e-5 * max(1, |t|)``), a :class:`~isl._jet.Jet`, or a
    tuple ``(u, u', u'')``.
    """
    t = complex(t)
    if callable(u):
        if h is None:
            h = 1e-5 * max(1.0, abs(t))
        u0 = complex(u(t))
        up = complex(u(t + h))
        um = complex(u(t - h))
        du = (up - um) / (2 * h)
        d2u = (up - 2 * u0 + um) / (h * h)
    elif isinstance(u, Jet):
        u0, du, d2u = complex(u.v), complex(u.d1), complex(u.d2)
    else:
        u0, du, d2u = (complex(x) for x in u)
    _check_domain(u0, t)
    return d2u - pvi_rhs(u0, du, t, params)


@dataclass(frozen=True)
class PoleClassification:
    """``order`` is the pole order of ``u`` (positive), or None when the estimate is indeterminate.

    ``consistent`` says whether the order is allowed: 1 when ``alpha != 0``,
    at most 2 when ``alpha = 0``.
    """

    order: int | None
    consistent: bool | None
    estimate: OrderEstimate

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "consistent": self.consistent,
            "residual": float(self.estimate.residual),
            "nodes": self.estimate.nodes,
        }


def classify_pole(
    u,
    center: complex,
    radius: float,
    params: PviParams,
    tol: float = 1e-8,
    start_angle: float = 0.0,
    alpha_atol: float = 1e-12,
) -> PoleClassification:
    """Argument-principle pole order of ``u`` about ``center`` and its consistency verdict."""
    est = pole_order_on_slice(u, center, radius, tol, start_angle)
    if not est.determinate or est.order >= 0:
        return PoleClassification(None if not est.determinate else -est.order, None, est)
    order = -est.order
    limit = 2 if abs(params.alpha) <= alpha_atol else 1
    return PoleClassification(order, order <= limit, est)


@dataclass
class PviSolution:
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    status: int

    def write_csv(self, path, params: PviParams) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_t", "im_t", "re_u", "im_u", "abs_residual"])
            for k in range(len(self.t)):
                res = abs(pvi_residual((self.u[k], self.du[k], _second(self, k, params)), self.t[k], params))
                w.writerow([repr(self.t[k].real), repr(self.t[k].imag), repr(self.u[k].real), repr(self.u[k].imag), repr(res)])


def _second(sol, k, params):
    return pvi_rhs(sol.u[k], sol.du[k], sol.t[k], params)


def integrate_pvi(
    t0: complex,
    u0: complex,
    du0: complex,
    t1: complex,
    params: PviParams,
    tol: float = 1e-10,
    blow_limit: float = 1e8,
    max_steps: int = 1_000_000,
) -> PviSolution:
    """Integrate the equation along the segment ``t0 -> t1`` with the package's DP5(4) stepper.

    A convenience for exploration. Integration stops, with a nonzero
    ``status``, if ``|u|`` or ``|u'|`` exceeds ``blow_limit``.
    """
    par = np.array([t0, t1 - t0, *params.as_tuple()], dtype=np.complex128)
    y0 = np.array([u0, du0], dtype=np.complex128)
    status, s, y, ts, ys, _, _ = _kernels.integrate_pvi(par, y0, tol, max_steps, blow_limit, True)
    if status == _kernels.UNDERFLOW and len(ts) < 2:
        raise IntegrationError("step size underflow at the start", status, s)
    return PviSolution(t0 + ts * (t1 - t0), ys[:, 0].copy(), ys[:, 1].copy(), int(status))


def schlesinger_u_jet(state) -> Jet:
    """``(u, du/dt, d2u/dt2)`` at an ``n = 1`` Schlesinger state, ``t = a_1``.

    ``u`` is the root of ``P_1(z) = b z + f_1``; derivatives follow the flow
    exactly (second-order jets of the residues), not by differencing.
    """
    from .garnier import F_quantity
    from .schlesinger import jet_inputs

    if state.n != 1:
        raise ValueError("n = 1 state required")
    a, B = jet_inputs(state.positions, state.residues, np.array([1.0, 0.0, 0.0], dtype=np.complex128))
    return Jet.lift(F_quantity(1)(a, B))


def trajectory_residuals(trajectory, params: PviParams | None = None) -> np.ndarray:
    """``|pvi_residual|`` of the Garnier root at each state of an ``n = 1`` trajectory."""
    if params is None:
        params = params_from_theta(ThetaParams.from_state(trajectory.state(0)))
    out = np.empty(len(trajectory))
    for k in range(len(trajectory)):
        st = trajectory.state(k)
        out[k] = abs(pvi_residual(schlesinger_u_jet(st), st.positions[0], params))
    return out
