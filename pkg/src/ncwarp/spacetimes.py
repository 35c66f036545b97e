"""Named metric families obtained from the deformed flat line element."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .algebra import DiagonalAlgebraSpec
from .deformation import DeformationMatrix, DeformedMetric, LinearForm, _num, warp_line_element
from .errors import FamilyParameterError


@dataclass(frozen=True)
class UltraStaticMetric:
    """``ds^2 = dt^2 - sum_i exp(L_i . x) (dx^i)^2`` with x^0-free exponents."""

    exponents: tuple  # LinearForm per spatial index, over (x^0, ..., x^n)

    @property
    def d(self) -> int:
        return len(self.exponents) + 1

    def h(self, x: Sequence) -> list:
        return [math.exp(float(L(x))) for L in self.exponents]

    def as_deformed(self) -> DeformedMetric:
        return DeformedMetric((1,) + (-1,) * len(self.exponents), (LinearForm.zero(self.d),) + self.exponents)

    def as_dict(self) -> dict:
        return {"family": "ultrastatic", **self.as_deformed().as_dict()}


@dataclass(frozen=True)
class FRWMetric:
    """``diag(1, -e^{Ht}, -e^{Ht}, -e^{Ht})``."""

    H: object
    n: int = 3

    def component(self, mu: int, t: float) -> float:
        return 1.0 if mu == 0 else -math.exp(float(self.H) * t)

    def as_deformed(self) -> DeformedMetric:
        d = self.n + 1
        spatial = LinearForm((self.H,) + (0,) * self.n)
        return DeformedMetric((1,) + (-1,) * self.n, (LinearForm.zero(d),) + (spatial,) * self.n)

    def as_dict(self) -> dict:
        return {"family": "frw", "H": float(self.H), **self.as_deformed().as_dict()}


@dataclass(frozen=True)
class FRWRealization:
    """Algebra and deformation parameters whose warped line element is FRW."""

    spec: DiagonalAlgebraSpec
    theta: DeformationMatrix
    metric: FRWMetric
    b: tuple  # the dropped a_0 Theta_{0i} terms


@dataclass(frozen=True)
class DeformedFRWMetric:
    """``g00 = exp(-2 b.x)``, ``g_ij = -a(t)^2 delta_ij``.

    ``hubble_exponent`` is ``-2 a^i Theta_{i0}``: the factor relating the
    pre-existing scale factor to the deformed one, ``a^2 = e^{hubble_exponent t} atilde^2``.
    """

    b: tuple
    hubble_exponent: object = 0
    atilde: object = None  # formal symbol or sympy expression in t; None means a generic a(t)

    @property
    def n(self) -> int:
        return len(self.b)

    def scale_factor_squared(self, atilde_value: float, t: float) -> float:
        return math.exp(float(self.hubble_exponent) * t) * atilde_value**2

    def as_dict(self) -> dict:
        return {
            "family": "deformed-frw",
            "b": [float(v) for v in self.b],
            "hubble_exponent": float(self.hubble_exponent),
            "g00_exponent": [0.0] + [-2.0 * float(v) for v in self.b],
        }


def _theta(theta) -> DeformationMatrix:
    return theta if isinstance(theta, DeformationMatrix) else DeformationMatrix(theta)


def ultrastatic_from_deformation(spec: DiagonalAlgebraSpec, theta) -> UltraStaticMetric:
    theta = _theta(theta)
    if theta.has_time_space():
        raise FamilyParameterError("ultra-static family needs Theta_{0j} = 0 for every j")
    metric = warp_line_element(spec, theta)
    return UltraStaticMetric(metric.exponents[1:])


def frw_from_deformation(H, theta=1, n: int = 3) -> FRWRealization:
    """Realise ``diag(1, -e^{Ht}, ...)`` with ``Theta_{0i} = theta`` and ``a^i = H / (2 theta)``.

    The time row of the warped metric carries ``-2 a^0 Theta_{0i} x^i``; that
    term is the ``b`` vector of the deformed family and is set to zero here.
    """
    H = _num(H)
    theta = _num(theta)
    if theta == 0:
        raise FamilyParameterError("theta must be nonzero to realise a Hubble exponent")
    if H == 0:
        # flat limit: no deformation needed
        spec = DiagonalAlgebraSpec((1,) * (n + 1))
        return FRWRealization(spec, DeformationMatrix.zeros(n + 1), FRWMetric(H, n), (0,) * n)
    if isinstance(H, float) or isinstance(theta, float):
        a_i = float(H) / (2 * float(theta))
    else:
        a_i = Fraction(H) / (2 * Fraction(theta))
    spec = DiagonalAlgebraSpec((1,) + (a_i,) * n)
    Th = DeformationMatrix.time_space([theta] * n)
    b = tuple(spec.a[0] * Th.entries[0][i] for i in range(1, n + 1))
    return FRWRealization(spec, Th, FRWMetric(H, n), b)


def frw_round_trip(real: FRWRealization) -> DeformedMetric:
    """Warped line element of the realising parameters with the time-row term dropped."""
    g = warp_line_element(real.spec, real.theta)
    return DeformedMetric(g.signs, (LinearForm.zero(g.d),) + g.exponents[1:])


def b_from_theta(Theta, n: int = 3, direction: Sequence | None = None) -> tuple:
    """``b_i = (1/2) Theta e_i``; ``direction`` defaults to the first axis."""
    e = direction if direction is not None else (1,) + (0,) * (n - 1)
    half = Fraction(1, 2) if isinstance(_num(Theta), (int, Fraction)) else 0.5
    return tuple(half * _num(Theta) * _num(c) for c in e)


def deformed_frw(spec: DiagonalAlgebraSpec, theta, atilde=None) -> DeformedFRWMetric:
    theta = _theta(theta)
    if theta.has_space_space():
        raise FamilyParameterError("deformed FRW family needs Theta_{ij} = 0")
    if spec.d != theta.d:
        raise FamilyParameterError("dimension mismatch between algebra and deformation")
    n = theta.d - 1
    b = tuple(spec.a[0] * theta.entries[0][i] for i in range(1, n + 1))
    exponents = {-2 * spec.a[i] * theta.entries[i][0] for i in range(1, n + 1)}
    if len(exponents) != 1:
        raise FamilyParameterError("spatial components scale differently; no single scale factor")
    return DeformedFRWMetric(b, exponents.pop(), atilde)


def frw_as_deformed_family(H, n: int = 3) -> DeformedFRWMetric:
    return DeformedFRWMetric((0,) * n, _num(H), 1)
