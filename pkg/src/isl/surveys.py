"""Slice surveys: hunt singular points on complex lines and turn local orders into verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import garnier, pvi
from .fuchsian import is_irreducible, monodromy
from .schlesinger import (
    PoleEvent,
    SchlesingerState,
    SliceFlow,
    entry_quantity,
    hunt_singularities,
    measure_point,
    residue_orders,
    residue_quantities,
    slice_event,
    theorem1_check,
)


def random_direction(n: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    return d / np.linalg.norm(d)


@dataclass
class SliceSurvey:
    """Located points on one slice with their local orders."""

    direction: np.ndarray
    points: list
    flow: SliceFlow = field(repr=False)
    crowded: list = field(default_factory=list)

    def events(self, name: str) -> list:
        return [slice_event(p, name, crowded=c) for p, c in zip(self.points, self.crowded)]


def crowded_flags(zetas, distance: float) -> list:
    """True where another located point lies within ``distance``.

    Several nearby events hint that more than one polar component passes
    close to the slice there; a single slice then certifies one of them only.
    """
    z = np.asarray(zetas, dtype=np.complex128)
    if len(z) < 2:
        return [False] * len(z)
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return [bool(v) for v in d.min(axis=1) < distance]


def survey_slice(
    state: SchlesingerState,
    direction,
    hunt: dict,
    measure: dict,
    rng: np.random.Generator,
    starts_per_quantity: int = 8,
    box: float = 1.5,
    tol: float = 1e-11,
    merge_radius: float = 1e-2,
    crowd_distance: float = 0.1,
) -> SliceSurvey:
    """Hunt poles of each quantity in ``hunt`` from random starts in ``[-box, box]^2``, then measure ``measure``.

    Points within ``crowd_distance`` of another are flagged in ``crowded``.
    """
    flow = SliceFlow(state, direction, tol=tol)
    found = []
    for q in hunt.values():
        starts = [complex(*rng.uniform(-box, box, 2)) for _ in range(starts_per_quantity)]
        found += hunt_singularities(flow, q, starts, merge_radius, target="poles")
    uniq = []
    for sp in found:
        if all(abs(sp.zeta - z) > merge_radius for z in uniq):
            uniq.append(sp.zeta)
    points = [measure_point(flow, z, measure, neighbours=uniq) for z in uniq]
    return SliceSurvey(np.asarray(direction), points, flow, crowded_flags(uniq, crowd_distance))


def n1_pole_classes(state: SchlesingerState, rng, starts: int = 16, box: float = 1.5, tol: float = 1e-11):
    """Poles of ``u`` on the ``t = a_1`` line and their classification against the P_VI pole statement.

    Hunts target poles of ``u`` and of the residue entry ``B_1^{12}``
    (Theta-points). Returns ``(records, params)`` with one record per pole:
    ``{"zeta", "t", "order", "consistent", "residual", "crowded"}``; orders are positive.
    """
    if state.n != 1:
        raise ValueError("n = 1 state required")
    params = pvi.params_from_theta(garnier.ThetaParams.from_state(state))
    u = garnier.quantity("u")
    sv = survey_slice(
        state,
        [1.0],
        {"u": u, "B1_12": entry_quantity(0, 0, 1)},
        {"u": u},
        rng,
        starts_per_quantity=starts,
        box=box,
        tol=tol,
    )
    limit = 2 if abs(params.alpha) <= 1e-12 else 1
    out = []
    for p, crowded in zip(sv.points, sv.crowded):
        o = p.orders["u"]
        if o is not None and o >= 0:
            continue
        order = None if o is None else -o
        out.append(
            {
                "zeta": p.zeta,
                "t": complex(state.positions[0] + p.zeta),
                "order": order,
                "consistent": None if order is None else order <= limit,
                "residual": p.estimates["u"].residual,
                "crowded": crowded,
            }
        )
    return out, params


@dataclass
class Theorem2Survey:
    events: list
    verdicts: list
    residue_verdicts: list
    irreducible: bool | None
    n_slices: int


def theorem2_survey(
    state: SchlesingerState,
    rng,
    n_slices: int = 2,
    starts: int = 8,
    box: float = 1.5,
    tol: float = 1e-11,
    loop_tol: float = 1e-10,
) -> Theorem2Survey:
    """Pole orders of ``F_1..F_n`` (and residue orders at Theta-points) on random slices through ``state``.

    Irreducibility of the monodromy is checked first; the Theorem 2 verdicts
    are only produced when it is confirmed.
    """
    n = state.n
    irr = is_irreducible(monodromy(state.family(), tol=loop_tol))
    theta = garnier.ThetaParams.from_state(state)
    Fq = {f"F{k}": garnier.F_quantity(k) for k in range(1, n + 1)}
    m = n + 2
    measure = dict(Fq)
    measure["b"] = garnier.b_quantity
    measure.update(residue_quantities(m))
    hunt = dict(Fq)
    hunt["B1_12"] = entry_quantity(0, 0, 1)
    events = []
    res_events = []
    used = 0
    for s in range(n_slices):
        d = random_direction(n, rng)
        sv = survey_slice(state, d, hunt, measure, rng, starts, box, tol)
        if sv.points:
            used += 1
        for p, crowded in zip(sv.points, sv.crowded):
            for k in range(1, n + 1):
                o = p.orders[f"F{k}"]
                if o is None or o < 0:
                    events.append(slice_event(p, f"F{k}", slice=s, direction=_c(d), crowded=crowded))
            ro = residue_orders(p, m)
            if any(v is not None and v < 0 for v in ro.values()):
                for name, v in ro.items():
                    res_events.append(
                        PoleEvent(p.zeta, name, v, p.estimates[f"{name}_12"].residual, p.estimates[f"{name}_12"].radii[-1], {"slice": s, "crowded": crowded})
                    )
    verdicts = garnier.theorem2_check(events, n, theta.theta_inf, irr) if irr is True else []
    return Theorem2Survey(events, verdicts, theorem1_check(res_events, n), irr, used)


def _c(arr):
    return [[float(z.real), float(z.imag)] for z in np.atleast_1d(arr)]


def pvi_slice_residuals(state: SchlesingerState, samples: int = 8, radius: float = 0.2) -> np.ndarray:
    """P_VI residuals of the n = 1 Garnier root at points ``t = a_1 + radius * e^{i phi}``."""
    flow = SliceFlow(state, [1.0], tol=1e-12)
    params = pvi.params_from_theta(garnier.ThetaParams.from_state(state))
    out = []
    for k in range(samples):
        z = radius * complex(math.cos(2 * math.pi * k / samples), math.sin(2 * math.pi * k / samples))
        st = flow.state(z)
        out.append(abs(pvi.pvi_residual(pvi.schlesinger_u_jet(st), st.positions[0], params)))
    return np.asarray(out)
