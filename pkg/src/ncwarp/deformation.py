"""Warped-convolution deformation for exponential-linear adjoint actions.

The oscillatory integral defining the deformation is never evaluated here.
For the algebras handled by this package every differential ``dx^nu`` is an
eigen-operator of the translations generated by the coordinates,

    U(p) dX^nu U(p)^-1 = exp(-p . w_nu) dX^nu,    [x^mu, dx^nu] = i w_nu[mu] dx^nu,

so the deformation collapses to a spectral substitution: the scalar
prefactor ``exp(-lambda . Theta x)`` becomes ``exp(-lambda . Theta X)``.
"""

from __future__ import annotations

import cmath
import math
import numbers
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import DiagonalAlgebraSpec, StructureConstants, eigen_weights, make_diagonal
from .errors import NonSkewError, UnsupportedClassError
from .ncalc import Generator, NCExpression, RewriteContext, commutator, dx, normal_form, to_float


def _num(v):
    if isinstance(v, bool):
        raise TypeError("boolean matrix entry")
    if isinstance(v, numbers.Integral):
        return int(v)
    if isinstance(v, numbers.Rational):
        from fractions import Fraction

        return Fraction(v)
    if isinstance(v, str):
        from fractions import Fraction

        return Fraction(v)
    return float(v)


@dataclass(frozen=True)
class DeformationMatrix:
    """Skew-symmetric ``Theta``; ``Theta + Theta^T == 0`` is checked exactly."""

    entries: tuple

    def __init__(self, entries):
        rows = entries.tolist() if isinstance(entries, np.ndarray) else entries
        rows = tuple(tuple(_num(v) for v in row) for row in rows)
        d = len(rows)
        if any(len(r) != d for r in rows):
            raise ValueError("deformation matrix must be square")
        for mu in range(d):
            for nu in range(d):
                if rows[mu][nu] + rows[nu][mu] != 0:
                    raise NonSkewError(
                        f"Theta[{mu}][{nu}] + Theta[{nu}][{mu}] = {rows[mu][nu] + rows[nu][mu]} != 0"
                    )
        object.__setattr__(self, "entries", rows)

    @classmethod
    def zeros(cls, d: int) -> "DeformationMatrix":
        return cls([[0] * d for _ in range(d)])

    @classmethod
    def from_upper(cls, d: int, values: dict) -> "DeformationMatrix":
        """Build from ``{(mu, nu): value}`` with ``mu < nu``; the lower half is mirrored."""
        rows = [[0] * d for _ in range(d)]
        for (mu, nu), v in values.items():
            rows[mu][nu] = _num(v)
            rows[nu][mu] = -_num(v)
        return cls(rows)

    @classmethod
    def time_space(cls, row: Sequence) -> "DeformationMatrix":
        """``Theta_{0j} = row[j-1]``, all space-space entries zero."""
        d = len(row) + 1
        return cls.from_upper(d, {(0, j): v for j, v in enumerate(row, start=1)})

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])

    def row(self, mu: int) -> tuple:
        return self.entries[mu]

    def apply(self, x: Sequence) -> tuple:
        """``(Theta x)_mu = sum_nu Theta_{mu nu} x^nu``."""
        return tuple(sum(t * xi for t, xi in zip(row, x)) for row in self.entries)

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.entries for v in row)

    def has_space_space(self) -> bool:
        return any(self.entries[i][j] != 0 for i in range(1, self.d) for j in range(1, self.d))

    def has_time_space(self) -> bool:
        return any(self.entries[0][j] != 0 for j in range(1, self.d))


@dataclass(frozen=True)
class LinearForm:
    """``L . x = sum_mu L_mu x^mu``."""

    coeffs: tuple

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", tuple(_num(c) for c in coeffs))

    @classmethod
    def zero(cls, d: int) -> "LinearForm":
        return cls((0,) * d)

    @property
    def d(self) -> int:
        return len(self.coeffs)

    def __call__(self, x) -> float:
        return sum(c * xi for c, xi in zip(self.coeffs, x))

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return LinearForm(tuple(-c for c in self.coeffs))

    def scale(self, k) -> "LinearForm":
        return LinearForm(tuple(k * c for c in self.coeffs))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def support(self) -> tuple:
        return tuple(i for i, c in enumerate(self.coeffs) if c != 0)

    def as_list(self) -> list:
        return [_jsonable(c) for c in self.coeffs]


def _jsonable(v):
    from fractions import Fraction

    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return v


@dataclass(frozen=True)
class ScaledDifferential:
    """``exp(constant + form . x) * (dX^index)^power``."""

    index: int
    constant: object
    form: LinearForm
    power: int = 1

    def prefactor(self, x=None) -> float:
        value = float(self.constant)
        if x is not None:
            value += float(self.form(x))
        elif not self.form.is_zero():
            raise ValueError("prefactor depends on x; pass a point")
        return math.exp(value)

    def at(self, x) -> "ScaledDifferential":
        """Evaluate the linear form at the point ``x``, folding it into the constant."""
        return ScaledDifferential(self.index, self.constant + self.form(x), LinearForm.zero(self.form.d), self.power)

    def __mul__(self, other: "ScaledDifferential") -> "ScaledDifferential":
        if other.index != self.index:
            raise UnsupportedClassError("only powers of a single differential combine into one scaled term")
        return ScaledDifferential(
            self.index, self.constant + other.constant, self.form + other.form, self.power + other.power
        )

    def __pow__(self, k: int) -> "ScaledDifferential":
        return ScaledDifferential(self.index, self.constant * k, self.form.scale(k), self.power * k)


@dataclass(frozen=True)
class DeformedOperator:
    """``coeff * exp(exponent . X) * word`` with the exponential of coordinate generators on the left."""

    exponent: LinearForm
    word: tuple
    coeff: complex = 1.0

    def __str__(self):
        exp_text = " + ".join(f"{_fmt(c)}*X{i}" for i, c in enumerate(self.exponent.coeffs) if c != 0)
        parts = []
        if self.coeff != 1:
            parts.append(f"({self.coeff:g})")
        if exp_text:
            parts.append(f"exp({exp_text})")
        parts.append("*".join(str(g).replace("dx", "dX").replace("x", "X") for g in self.word) or "1")
        return "*".join(parts)


def _fmt(c):
    return str(c)


# ---------------------------------------------------------------------------


def _check_dims(spec: DiagonalAlgebraSpec, theta: DeformationMatrix):
    if spec.d != theta.d:
        raise ValueError(f"algebra dimension {spec.d} != deformation dimension {theta.d}")


def adjoint_action(
    mu: int, theta: DeformationMatrix, spec: DiagonalAlgebraSpec, x: Sequence | None = None
) -> ScaledDifferential:
    """``alpha_{Theta x}(dX^mu) = exp(-a^mu (Theta x)_mu) dX^mu``.

    With ``x=None`` the prefactor is returned as a formal linear form in ``x``;
    otherwise it is evaluated at the point.
    """
    if not isinstance(theta, DeformationMatrix):
        theta = DeformationMatrix(theta)
    _check_dims(spec, theta)
    form = LinearForm(tuple(-spec.a[mu] * t for t in theta.row(mu)))
    sd = ScaledDifferential(mu, 0, form)
    return sd if x is None else sd.at(x)


@dataclass(frozen=True)
class BCHSeries:
    order: int
    partial_sums: tuple
    closed_form: float

    @property
    def value(self) -> float:
        return self.partial_sums[-1]

    @property
    def residual(self) -> float:
        return abs(self.value - self.closed_form)


def bch_series(
    mu: int, theta: DeformationMatrix, spec: DiagonalAlgebraSpec, x: Sequence, order: int = 20
) -> BCHSeries:
    """Adjoint action as the nested-commutator series, truncated at ``order``.

    Each term ``(i^k / k!) ad_{p.X}^k (dX^mu)`` with ``p = Theta x`` is built
    by the rewriting engine, so the series is an independent route to the
    closed-form prefactor.
    """
    if not isinstance(theta, DeformationMatrix):
        theta = DeformationMatrix(theta)
    _check_dims(spec, theta)
    ctx = RewriteContext(make_diagonal(spec), exact=False)
    p = [float(v) for v in theta.apply(x)]
    generator = NCExpression({(Generator("x", nu),): p[nu] for nu in range(spec.d) if p[nu] != 0})
    target = (Generator("dx", mu),)
    current = dx(mu)
    total = 0.0
    partial = []
    for k in range(order + 1):
        total += (1j**k / math.factorial(k) * to_float(current.coefficient(target))).real
        partial.append(total)
        current = commutator(generator, current, ctx)
    closed = adjoint_action(mu, theta, spec, x).prefactor()
    return BCHSeries(order, tuple(partial), closed)


def spectral_substitution(sd: ScaledDifferential) -> DeformedOperator:
    """Replace the scalar ``x`` in an exponential-linear prefactor by the generators ``X``."""
    if not isinstance(sd, ScaledDifferential):
        raise UnsupportedClassError(
            f"{type(sd).__name__} has no exponential-linear adjoint action; closed form does not apply"
        )
    return DeformedOperator(
        exponent=sd.form,
        word=(Generator("dx", sd.index),) * sd.power,
        coeff=cmath.exp(float(sd.constant)),
    )


@dataclass(frozen=True)
class DeformedMetric:
    """Diagonal metric ``g_mumu = sign_mu * exp(exponent_mu . x)``."""

    signs: tuple
    exponents: tuple

    @property
    def d(self) -> int:
        return len(self.signs)

    def component(self, mu: int, x: Sequence) -> float:
        return self.signs[mu] * math.exp(float(self.exponents[mu](x)))

    def matrix(self, x: Sequence) -> np.ndarray:
        return np.diag([self.component(mu, x) for mu in range(self.d)])

    def is_minkowski(self) -> bool:
        return all(L.is_zero() for L in self.exponents)

    def as_dict(self) -> dict:
        return {
            "signature": list(self.signs),
            "exponents": [L.as_list() for L in self.exponents],
        }


def minkowski_signs(d: int) -> tuple:
    return (1,) + (-1,) * (d - 1)


def deformed_square(mu: int, spec: DiagonalAlgebraSpec, theta: DeformationMatrix) -> DeformedOperator:
    """``(dX^mu)^2_Theta = exp(-2 a^mu (Theta X)_mu) (dX^mu)^2``."""
    sd = adjoint_action(mu, theta, spec) ** 2
    return spectral_substitution(sd)


def warp_line_element(spec: DiagonalAlgebraSpec, theta: DeformationMatrix) -> DeformedMetric:
    if not isinstance(theta, DeformationMatrix):
        theta = DeformationMatrix(theta)
    _check_dims(spec, theta)
    # off-diagonal products are not deformed: the flat metric has no such terms
    exponents = tuple(deformed_square(mu, spec, theta).exponent for mu in range(spec.d))
    return DeformedMetric(minkowski_signs(spec.d), exponents)


# ---------------------------------------------------------------------------
# general eigen-word deformation and the Rieffel product


def word_weight(word, C: StructureConstants, moyal: bool = False) -> tuple:
    """Total translation weight ``lambda`` with ``alpha_p(word) = exp(-lambda . p) word``."""
    d = C.d
    total = [0] * d
    for g in word:
        if g.kind == "x":
            if moyal:
                raise UnsupportedClassError("coordinates are not translation-invariant on a Moyal plane")
            continue
        w = eigen_weights(C, g.index)
        if w is None:
            raise UnsupportedClassError(
                f"dx{g.index} mixes with other differentials under translations; no closed-form deformation"
            )
        total = [t + wi for t, wi in zip(total, w)]
    return tuple(total)


class DeformedExpression:
    """Sum of :class:`DeformedOperator` terms over a fixed algebra."""

    def __init__(self, terms: dict, C: StructureConstants):
        self.C = C
        self.terms = {k: v for k, v in terms.items() if abs(v) > 0}

    def __mul__(self, other: "DeformedExpression") -> "DeformedExpression":
        out = {}
        for (e1, w1), c1 in self.terms.items():
            for (e2, w2), c2 in other.terms.items():
                # moving exp(L2 . X) left through w1: dx^rho f(X) = f(X - i w_rho) dx^rho
                lam = word_weight(w1, self.C)
                phase = cmath.exp(-1j * sum(float(l) * float(L) for l, L in zip(lam, e2)))
                key = (tuple(a + b for a, b in zip(e1, e2)), w1 + w2)
                out[key] = out.get(key, 0) + c1 * c2 * phase
        return DeformedExpression(out, self.C)

    def _rounded(self, digits: int) -> dict:
        # float exponents from different routes differ in the last bits
        out = {}
        for (e, w), c in self.terms.items():
            key = (tuple(round(float(v), digits) + 0.0 for v in e), w)
            out[key] = out.get(key, 0) + c
        return out

    def isclose(self, other: "DeformedExpression", tol: float = 1e-12) -> bool:
        mine, theirs = self._rounded(10), other._rounded(10)
        keys = set(mine) | set(theirs)
        return all(abs(mine.get(k, 0) - theirs.get(k, 0)) <= tol for k in keys)

    def operators(self) -> list:
        return [DeformedOperator(LinearForm(e), w, c) for (e, w), c in sorted(self.terms.items(), key=str)]


def deform(A: NCExpression, C: StructureConstants, theta: DeformationMatrix) -> DeformedExpression:
    """Warped convolution of ``A`` by spectral substitution, term by term."""
    terms = {}
    rows = theta.entries
    for word, coeff in A.items():
        lam = word_weight(word, C)
        exponent = tuple(-sum(lam[m] * rows[m][nu] for m in range(C.d)) for nu in range(C.d))
        key = (exponent, word)
        terms[key] = terms.get(key, 0) + to_float(coeff)
    return DeformedExpression(terms, C)


def rieffel_product(
    A: NCExpression, B: NCExpression, ctx: RewriteContext, theta: DeformationMatrix
) -> NCExpression:
    """Deformed product ``A x_Theta B`` for eigen-words, via delta collapse.

    With ``alpha_p(A) = exp(-lambda_A . p) A`` the y-integral localises the
    oscillatory kernel and leaves the factor ``exp(-i lambda_A . Theta lambda_B)``.
    For powers of one differential ``lambda_A . Theta lambda_B = 0`` and the
    product is undeformed.
    """
    if not isinstance(theta, DeformationMatrix):
        theta = DeformationMatrix(theta)
    moyal = bool(ctx._moyal)
    rows = theta.entries
    out = NCExpression({}, exact=False)
    for wa, ca in A.items():
        la = word_weight(wa, ctx.C, moyal)
        for wb, cb in B.items():
            lb = word_weight(wb, ctx.C, moyal)
            form = sum(
                float(la[m]) * float(rows[m][n]) * float(lb[n]) for m in range(ctx.d) for n in range(ctx.d)
            )
            factor = cmath.exp(-1j * form) * to_float(ca) * to_float(cb)
            out = out + NCExpression({wa + wb: factor})
    return normal_form(out, RewriteContext(ctx.C, ctx.omega, exact=False, max_length=ctx.max_length))
