"""Second-order Taylor jets ``(f, f', f'')`` in one complex variable.

Small enough to push through the Vieta sums and the Garnier formulas so
that slice derivatives come out analytically instead of by differencing.
"""

from __future__ import annotations


class Jet:
    __slots__ = ("v", "d1", "d2")

    def __init__(self, v, d1=0j, d2=0j):
        self.v = v
        self.d1 = d1
        self.d2 = d2

    @staticmethod
    def lift(x):
        return x if isinstance(x, Jet) else Jet(x, 0j, 0j)

    def __add__(self, other):
        o = Jet.lift(other)
        return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-Jet.lift(other))

    def __rsub__(self, other):
        return Jet.lift(other) - self

    def __mul__(self, other):
        o = Jet.lift(other)
        return Jet(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2 * self.d1 * o.d1 + self.v * o.d2,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1.0 / self.v
        d1 = -self.d1 * inv * inv
        d2 = (2 * self.d1 * self.d1 * inv - self.d2) * inv * inv
        return Jet(inv, d1, d2)

    def __truediv__(self, other):
        return self * Jet.lift(other).reciprocal()

    def __rtruediv__(self, other):
        return Jet.lift(other) * self.reciprocal()

    def __repr__(self):
        return f"Jet({self.v!r}, {self.d1!r}, {self.d2!r})"


def value(x):
    return x.v if isinstance(x, Jet) else x
