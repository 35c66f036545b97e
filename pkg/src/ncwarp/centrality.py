"""Centrality of warped metrics on a time-space Moyal plane.

Metric entries ``s_mu exp(L_mu . x)`` are expanded as truncated power series
in normal order (``x^0`` to the left).  Only ``[x^0, x^j] = i Omega^{0j}`` is
nonzero among coordinates, so on such series

    [x^mu, f] = i sum_nu Omega^{mu nu} d_nu f,      Omega^{j0} = -Omega^{0j}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebra import DiagonalAlgebraSpec, StructureConstants, make_diagonal
from .deformation import DeformationMatrix, warp_line_element
from .errors import CentralityError
from .ncalc import to_exact, to_float


def _exact_ok(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


class SeriesExpression:
    """Truncated series ``sum_k c_k x^k`` over multi-indices of total degree <= order."""

    __slots__ = ("d", "order", "coeffs", "exact")

    def __init__(self, d: int, order: int, coeffs: dict, exact: bool = True):
        self.d = d
        self.order = order
        self.exact = exact
        self.coeffs = {k: v for k, v in coeffs.items() if v and sum(k) <= order}

    @classmethod
    def exp_linear(cls, L: Sequence, order: int, scale=1, exact: bool = True) -> "SeriesExpression":
        """``scale * exp(L . x)`` truncated at ``order``."""
        d = len(L)
        conv = to_exact if exact else to_float
        support = [j for j, c in enumerate(L) if c != 0]
        coeffs = {}
        for degs in _degrees(len(support), order):
            k = [0] * d
            value = Fraction(scale) if exact else complex(scale)
            for j, p in zip(support, degs):
                k[j] = p
                value = value * (Fraction(L[j]) if exact else L[j]) ** p / math.factorial(p)
            coeffs[tuple(k)] = conv(value)
        return cls(d, order, coeffs, exact)

    def __add__(self, other: "SeriesExpression") -> "SeriesExpression":
        order = min(self.order, other.order)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return SeriesExpression(self.d, order, out, self.exact and other.exact)

    def scale(self, c) -> "SeriesExpression":
        c = to_exact(c) if self.exact else to_float(c)
        return SeriesExpression(self.d, self.order, {k: v * c for k, v in self.coeffs.items()}, self.exact)

    def truncate(self, order: int) -> "SeriesExpression":
        return SeriesExpression(self.d, min(order, self.order), self.coeffs, self.exact)

    def derivative(self, j: int) -> "SeriesExpression":
        out = {}
        for k, v in self.coeffs.items():
            if k[j]:
                kk = list(k)
                kk[j] -= 1
                out[tuple(kk)] = v * k[j]
        return SeriesExpression(self.d, self.order - 1, out, self.exact)

    def is_zero(self) -> bool:
        return not self.coeffs

    def max_abs(self) -> float:
        return max((abs(to_float(v)) for v in self.coeffs.values()), default=0.0)

    def by_order(self) -> list:
        table = [0.0] * (self.order + 1)
        for k, v in self.coeffs.items():
            table[sum(k)] = max(table[sum(k)], abs(to_float(v)))
        return table

    def coefficient(self, k: Sequence[int]):
        return self.coeffs.get(tuple(k), 0)


def _degrees(m: int, order: int):
    """All m-tuples of non-negative integers with sum <= order."""
    if m == 0:
        yield ()
        return
    for first in range(order + 1):
        for rest in _degrees(m - 1, order - first):
            yield (first,) + rest


@dataclass(frozen=True)
class MoyalParams:
    """``Omega^{0j}``, j = 1..n."""

    omega: tuple

    def __init__(self, omega: Sequence):
        object.__setattr__(self, "omega", tuple(_num(v) for v in omega))
        if any(isinstance(v, float) and not math.isfinite(v) for v in self.omega):
            raise CentralityError("Omega must be finite")

    @property
    def n(self) -> int:
        return len(self.omega)

    def matrix_entry(self, mu: int, nu: int):
        if mu == 0 and nu > 0:
            return self.omega[nu - 1]
        if nu == 0 and mu > 0:
            return -self.omega[mu - 1]
        return 0


def _num(v):
    if isinstance(v, (int, Fraction)):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


def moyal_commutator(mu: int, f: SeriesExpression, omega: MoyalParams) -> SeriesExpression:
    """``[x^mu, f]`` for a normal-ordered series; the result is truncated one order lower."""
    out = SeriesExpression(f.d, f.order - 1, {}, f.exact)
    for nu in range(f.d):
        w = omega.matrix_entry(mu, nu)
        if w:
            out = out + f.derivative(nu).scale(1j * w if not f.exact else to_exact(w) * to_exact(1j))
    return out


@dataclass
class CentralityReport:
    components: dict  # (mu, nu, rho) -> SeriesExpression residual
    order: int
    max_residual: float = 0.0
    nonzero: list = field(default_factory=list)
    condition: str = ""

    @property
    def central(self) -> bool:
        return not self.nonzero

    def order0(self, key) -> object:
        return self.components[key].coefficient((0,) * self.components[key].d)

    def as_dict(self) -> dict:
        return {
            "order": self.order,
            "central": self.central,
            "max_residual": self.max_residual,
            "nonzero_components": [list(k) for k in self.nonzero],
            "residual_by_order": {
                ",".join(map(str, k)): self.components[k].by_order() for k in self.nonzero
            },
            "condition": self.condition,
        }


def _check_class(theta: DeformationMatrix):
    if theta.has_space_space():
        raise CentralityError("centrality is implemented for Theta_{ij} = 0 only")


def metric_series(spec: DiagonalAlgebraSpec, theta: DeformationMatrix, order: int, exact: bool) -> list:
    metric = warp_line_element(spec, theta)
    return [
        SeriesExpression.exp_linear(L.coeffs, order, s, exact) for s, L in zip(metric.signs, metric.exponents)
    ]


def centrality_residual(
    spec: DiagonalAlgebraSpec, theta, omega, order: int = 30, exact: bool | None = None
) -> CentralityReport:
    """All components of ``[x^mu, g_nr] + C^{mu k}_n g_{r k} + C^{mu k}_r g_{n k}``."""
    theta = theta if isinstance(theta, DeformationMatrix) else DeformationMatrix(theta)
    omega = omega if isinstance(omega, MoyalParams) else MoyalParams(omega)
    _check_class(theta)
    d = theta.d
    if omega.n != d - 1 or spec.d != d:
        raise CentralityError("dimension mismatch between algebra, deformation and Omega")
    if exact is None:
        exact = _exact_ok(*spec.a, *omega.omega, *[v for row in theta.entries for v in row])
    C: StructureConstants = make_diagonal(spec)
    g = metric_series(spec, theta, order, exact)
    conv = to_exact if exact else to_float
    zero = SeriesExpression(d, order, {}, exact)

    def entry(n, r):
        return g[n] if n == r else zero

    components = {}
    nonzero = []
    for mu, nu, rho in itertools.product(range(d), repeat=3):
        res = moyal_commutator(mu, entry(nu, rho), omega)
        for k in range(d):
            c1 = C.imag[mu][k][nu]
            if c1:
                res = res + entry(rho, k).scale(conv(1j) * conv(c1)).truncate(order - 1)
            c2 = C.imag[mu][k][rho]
            if c2:
                res = res + entry(nu, k).scale(conv(1j) * conv(c2)).truncate(order - 1)
        res = res.truncate(order - 1)
        components[(mu, nu, rho)] = res
        if not res.is_zero():
            nonzero.append((mu, nu, rho))
    worst = max((components[k].max_abs() for k in nonzero), default=0.0)
    cond = "[x^mu, g_nr] + C^{mu k}_n g_rk + C^{mu k}_r g_nk = 0"
    return CentralityReport(components, order, worst, nonzero, cond)


@dataclass(frozen=True)
class OmegaSolution:
    omega: object  # scalar Omega with Omega^{0j} = Omega e^j, or None
    vector: tuple
    n: int
    system: tuple  # (component, coefficients over Omega^{0j}, constant) rows at order 0
    consistent: bool  # whether every component vanishes for some Omega

    def as_dict(self) -> dict:
        def j(v):
            return float(v) if v is not None else None

        return {
            "n": self.n,
            "omega": j(self.omega),
            "omega_vector": [j(v) for v in self.vector],
            "full_system_consistent": self.consistent,
            "system": [
                {"component": list(comp), "coefficients": [float(c) for c in coeffs], "constant": float(const)}
                for comp, coeffs, const in self.system
            ],
        }


def _order0_system(spec, theta: DeformationMatrix, exact: bool) -> list:
    """Order-0 residual of every component as an affine function of ``Omega^{0j}``.

    The residual is linear in ``Omega``, so evaluating it at ``Omega = 0`` and
    at each unit vector recovers the coefficients exactly.
    """
    n = theta.d - 1
    unit = 1 if exact else 1.0
    base = centrality_residual(spec, theta, [0 * unit] * n, order=1, exact=exact)
    probes = []
    for j in range(n):
        vec = [0 * unit] * n
        vec[j] = unit
        probes.append(centrality_residual(spec, theta, vec, order=1, exact=exact))
    rows = []
    for key in base.components:
        const = _imag(base.order0(key))
        coeffs = tuple(_imag(p.order0(key)) - const for p in probes)
        if const or any(coeffs):
            rows.append((key, coeffs, const))
    return rows


def _imag(v):
    if not v:
        return 0
    if hasattr(v, "y"):
        return Fraction(int(v.y.numerator), int(v.y.denominator)) if hasattr(v.y, "numerator") else v.y
    return complex(v).imag


def solve_omega(spec: DiagonalAlgebraSpec, theta, exact: bool | None = None) -> OmegaSolution:
    """Omega for ``Theta_{0j} = Theta e_j`` with ``e = (1, ..., 1)``.

    The scalar is fixed by the time component ``(mu, nu, rho) = (0, 0, 0)``,
    the only one the uniform ansatz can satisfy for every ``n``.  The full
    order-0 system is returned alongside and ``consistent`` records whether
    all components can vanish at once.
    """
    theta = theta if isinstance(theta, DeformationMatrix) else DeformationMatrix(theta)
    _check_class(theta)
    n = theta.d - 1
    row = [theta.entries[0][j] for j in range(1, n + 1)]
    if all(v == 0 for v in row):
        raise CentralityError("Theta = 0: the condition degenerates and no finite Omega exists")
    if exact is None:
        exact = _exact_ok(*spec.a, *row)
    rows = _order0_system(spec, theta, exact)
    consistent = _solvable(rows, n)
    uniform = len(set(row)) == 1
    if not uniform:
        return OmegaSolution(None, (None,) * n, n, tuple(rows), consistent)
    (_, coeffs, const), = [r for r in rows if r[0] == (0, 0, 0)]
    # Omega^{0j} = Omega for every j: sum(coeffs) * Omega + const = 0
    total = sum(coeffs)
    if total == 0:
        raise CentralityError("time component does not constrain Omega")
    omega = -Fraction(const) / Fraction(total) if exact else -const / total
    return OmegaSolution(omega, (omega,) * n, n, tuple(rows), consistent)


def _solvable(rows, n: int) -> bool:
    import sympy

    if not rows:
        return True
    sym = sympy.symbols(f"w1:{n + 1}")
    eqs = [sum(sympy.nsimplify(c) * s for c, s in zip(coeffs, sym)) + sympy.nsimplify(const) for _, coeffs, const in rows]
    return bool(sympy.linsolve(eqs, sym))
