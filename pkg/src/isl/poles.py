"""Argument-principle order estimates for meromorphic functions of one variable."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INDETERMINATE_RESIDUAL = 0.1


@dataclass(frozen=True)
class OrderEstimate:
    """Zeros minus poles enclosed by a circle, as read from ``(1/2 pi i) oint F'/F``."""

    order: int
    residual: float
    raw: complex
    nodes: int
    converged: bool

    @property
    def determinate(self) -> bool:
        return self.converged and self.residual <= INDETERMINATE_RESIDUAL


def pole_order_on_slice(
    evaluator,
    center: complex,
    radius: float,
    tol: float = 1e-8,
    start_angle: float = 0.0,
    min_nodes: int = 32,
    max_nodes: int = 4096,
) -> OrderEstimate:
    """Argument-principle count of ``evaluator`` on ``|zeta - center| = radius``.

    ``F'`` comes from central differences along the tangent with step
    ``radius * 1e-4``; the contour integral uses the trapezoid rule, doubling
    the node count until successive values agree within ``tol``. Nodes are
    visited counterclockwise from ``start_angle`` so stateful evaluators can
    continue from their previous node.
    """
    h = radius * 1e-4
    cache: dict[int, complex] = {}

    def integrand(k_num: int, k_den: int) -> complex:
        # node angle start_angle + 2 pi k_num / k_den, reduced to a canonical key
        g = math.gcd(k_num, k_den)
        key = (k_num // g, k_den // g)
        if key in cache:
            return cache[key]
        phi = start_angle + 2 * math.pi * key[0] / key[1]
        e = complex(math.cos(phi), math.sin(phi))
        z = center + radius * e
        tangent = 1j * e
        f0 = complex(evaluator(z))
        fp = complex(evaluator(z + h * tangent))
        fm = complex(evaluator(z - h * tangent))
        dfdz = (fp - fm) / (2 * h * tangent)
        # dz = i r e dphi
        val = dfdz / f0 * (1j * radius * e)
        cache[key] = val
        return val

    def total(n: int) -> complex:
        acc = 0j
        for k in range(n):
            acc += integrand(k, n)
        return acc / n / 1j  # (1/2 pi i) * sum * (2 pi / n)

    n = min_nodes
    prev = total(n)
    converged = False
    while n < max_nodes:
        n *= 2
        cur = total(n)
        if abs(cur - prev) < tol:
            prev = cur
            converged = True
            break
        prev = cur
    order = int(round(prev.real))
    residual = abs(prev - order)
    return OrderEstimate(order, float(residual), complex(prev), n, converged)


def winding_order(values) -> int:
    """Winding number of closed samples ``values`` around zero (discrete phase sum)."""
    v = np.asarray(values, dtype=np.complex128)
    v = np.append(v, v[0])
    return int(round(np.angle(v[1:] / v[:-1]).sum() / (2 * math.pi)))


@dataclass(frozen=True)
class LadderEstimate:
    """Orders on shrinking concentric circles; ``order`` is set when the two smallest agree."""

    order: int | None
    radii: tuple
    estimates: tuple

    @property
    def residual(self) -> float:
        return max((e.residual for e in self.estimates[-2:]), default=math.inf)


def ladder_order(evaluator_for_radius, center: complex, radius: float, levels: int = 3, shrink: float = 4.0, tol: float = 1e-8):
    """Local order at ``center`` from circles of radius ``radius / shrink**k``, ``k < levels``.

    A zero or pole near (but not at) the center contaminates the larger
    circles only, so the verdict comes from the two smallest circles.
    ``evaluator_for_radius(r)`` returns ``(evaluator, start_angle)`` for the
    circle of radius ``r``; evaluation errors on a circle make that level
    indeterminate.
    """
    radii = tuple(radius / shrink**k for k in range(levels))
    ests = []
    for r in radii:
        try:
            f, start = evaluator_for_radius(r)
            ests.append(pole_order_on_slice(f, center, r, tol, start))
        except (ArithmeticError, ValueError, RuntimeError):
            ests.append(OrderEstimate(0, math.inf, complex("nan"), 0, False))
    last = ests[-2:]
    ok = len(last) == 2 and all(e.determinate for e in last) and last[0].order == last[1].order
    return LadderEstimate(last[-1].order if ok else None, radii, tuple(ests))
