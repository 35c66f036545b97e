"""Structure constants of coordinate/differential commutators.

An algebra is fixed by constants ``C[mu][nu][sigma]`` with

    [x^mu, dx^nu] = sum_sigma C[mu][nu][sigma] dx^sigma

where every constant is purely imaginary.  Only the imaginary parts are
stored, so the "real part exactly zero" invariant holds by construction.
Integer and :class:`fractions.Fraction` inputs keep every check exact; float
inputs are compared against an absolute tolerance of ``1e-12``.
"""

from __future__ import annotations

import itertools
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AsymmetricConstantsError, FaithfulnessError

FLOAT_TOLERANCE = 1e-12


def is_exact(value) -> bool:
    return isinstance(value, (numbers.Rational,)) and not isinstance(value, bool)


def _as_scalar(value):
    """Normalise a real scalar, keeping rationals exact."""
    if isinstance(value, bool):
        raise TypeError("booleans are not algebra parameters")
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Rational):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


@dataclass(frozen=True)
class StructureConstants:
    """Imaginary parts of ``C[mu][nu][sigma]``; ``C = 1j * imag``."""

    d: int
    imag: tuple

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        shape_ok = len(self.imag) == self.d and all(
            len(row) == self.d and all(len(col) == self.d for col in row) for row in self.imag
        )
        if not shape_ok:
            raise ValueError(f"structure constants must have shape ({self.d},{self.d},{self.d})")

    @classmethod
    def from_imag(cls, values) -> "StructureConstants":
        arr = values.tolist() if isinstance(values, np.ndarray) else values
        d = len(arr)
        imag = tuple(tuple(tuple(_as_scalar(c) for c in col) for col in row) for row in arr)
        return cls(d, imag)

    @classmethod
    def from_complex(cls, values) -> "StructureConstants":
        """Build from complex entries; any nonzero real part is rejected."""
        arr = np.asarray(values, dtype=complex)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise ValueError("expected a cubic d x d x d array")
        if np.any(arr.real != 0):
            raise ValueError("structure constants must be purely imaginary")
        return cls.from_imag(arr.imag)

    @classmethod
    def zeros(cls, d: int) -> "StructureConstants":
        return cls(d, tuple(tuple((0,) * d for _ in range(d)) for _ in range(d)))

    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self._flat())

    @property
    def entries(self) -> np.ndarray:
        """Dense complex array ``C[mu, nu, sigma]``."""
        return 1j * np.array([[[float(c) for c in col] for col in row] for row in self.imag])

    def _flat(self):
        for row in self.imag:
            for col in row:
                yield from col

    def __getitem__(self, index):
        mu, nu, sigma = index
        return 1j * complex(self.imag[mu][nu][sigma])

    def replace(self, mu: int, nu: int, sigma: int, imag_value) -> "StructureConstants":
        nested = [[list(col) for col in row] for row in self.imag]
        nested[mu][nu][sigma] = _as_scalar(imag_value)
        return StructureConstants.from_imag(nested)

    def bracket(self, mu: int, nu: int):
        """Nonzero ``(sigma, imag C[mu][nu][sigma])`` pairs."""
        return [(s, c) for s, c in enumerate(self.imag[mu][nu]) if c != 0]


@dataclass(frozen=True)
class DiagonalAlgebraSpec:
    """Scale vector ``a`` of the diagonal algebra ``[x^mu, dx^nu] = i a^mu delta^{mu nu} dx^nu``."""

    a: tuple

    def __init__(self, a: Sequence):
        object.__setattr__(self, "a", tuple(_as_scalar(v) for v in a))
        if not self.a:
            raise ValueError("scale vector must be non-empty")
        zeros = [i for i, v in enumerate(self.a) if v == 0]
        if zeros:
            raise FaithfulnessError(
                f"scale vector component(s) {zeros} vanish; the representation would not be faithful"
            )

    @property
    def d(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class Extended2DAlgebraSpec:
    a: object = 1
    e: object = 0
    f: object = 0
    h: object = 1
    r: object = 0
    s: object = 0

    def __post_init__(self):
        for name in ("a", "e", "f", "h", "r", "s"):
            object.__setattr__(self, name, _as_scalar(getattr(self, name)))

    def as_tuple(self):
        return (self.a, self.e, self.f, self.h, self.r, self.s)


@dataclass(frozen=True)
class JacobiReport:
    """Outcome of the Jacobi-type consistency check.

    ``components`` maps ``(mu, nu, lam, kappa)`` to the nonzero sums
    ``sum_sigma (C^{mu nu}_sigma C^{lam sigma}_kappa - C^{lam nu}_sigma C^{mu sigma}_kappa)``.
    Those sums are real because every constant is imaginary.
    """

    residual: object
    exact: bool
    components: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        if self.exact:
            return self.residual == 0
        return float(self.residual) <= FLOAT_TOLERANCE

    def as_dict(self) -> dict:
        return {
            "residual": _jsonable(self.residual),
            "exact": self.exact,
            "consistent": self.consistent,
            "violations": [
                {"indices": list(k), "value": _jsonable(v)} for k, v in sorted(self.components.items())
            ],
        }


def _jsonable(value):
    if isinstance(value, Fraction) and value.denominator != 1:
        return str(value)
    if isinstance(value, numbers.Integral):
        return int(value)
    return float(value)


def make_diagonal(spec: DiagonalAlgebraSpec) -> StructureConstants:
    d = spec.d
    nested = [[[0] * d for _ in range(d)] for _ in range(d)]
    for mu, a_mu in enumerate(spec.a):
        nested[mu][mu][mu] = a_mu
    return StructureConstants.from_imag(nested)


def make_extended2d(spec: Extended2DAlgebraSpec) -> StructureConstants:
    a, e, f, h, r, s = spec.as_tuple()
    return StructureConstants.from_imag(
        [
            [[a, e], [r, f]],
            [[r, f], [s, h]],
        ]
    )


def check_symmetry(C: StructureConstants) -> bool:
    d = C.d
    return all(
        C.imag[mu][nu][sigma] == C.imag[nu][mu][sigma]
        for mu, nu, sigma in itertools.product(range(d), repeat=3)
    )


def check_jacobi(C: StructureConstants) -> JacobiReport:
    if not check_symmetry(C):
        raise AsymmetricConstantsError("structure constants are not symmetric in their first two indices")
    d, c = C.d, C.imag
    exact = C.exact
    scale = 1
    if exact:
        # integer arithmetic over a common denominator; sums are divided by scale^2 at the end
        scale = math.lcm(*(Fraction(v).denominator for v in C._flat()))
        c = tuple(tuple(tuple(int(v * scale) for v in col) for col in row) for row in c)
    components = {}
    worst = 0
    for mu, nu, lam, kappa in itertools.product(range(d), repeat=4):
        # i*i = -1 turns the sum of imaginary products into a real number
        total = -sum(
            c[mu][nu][s] * c[lam][s][kappa] - c[lam][nu][s] * c[mu][s][kappa] for s in range(d)
        )
        if total != 0:
            if exact:
                total = Fraction(total, scale * scale)
            components[(mu, nu, lam, kappa)] = total
            worst = max(worst, abs(total))
    return JacobiReport(residual=worst, exact=exact, components=components)


def extended_constraints(spec: Extended2DAlgebraSpec):
    a, e, f, h, r, s = spec.as_tuple()
    return (
        e * s - r * f,
        f * (a - f) + e * (h - r),
        r * (r - h) + s * (f - a),
    )


def is_diagonal(C: StructureConstants) -> bool:
    d = C.d
    return all(
        C.imag[mu][nu][sigma] == 0
        for mu, nu, sigma in itertools.product(range(d), repeat=3)
        if not (mu == nu == sigma)
    )


def eigen_weights(C: StructureConstants, nu: int):
    """Return ``w`` with ``[x^mu, dx^nu] = i w[mu] dx^nu`` for every ``mu``, or None.

    A differential with such weights transforms by a scalar under every
    coordinate translation; that is the class on which warped convolutions
    have a closed form.
    """
    weights = []
    for mu in range(C.d):
        row = C.imag[mu][nu]
        if any(v != 0 for s, v in enumerate(row) if s != nu):
            return None
        weights.append(row[nu])
    return tuple(weights)
