"""Curvature of diagonal metrics built from scale factors and exponentials.

Every metric entry handled here is a finite sum of terms

    c * a^p0 * adot^p1 * addot^p2 * ... * exp(L0 t + L1 x^1 + ... + Ln x^n)

with ``c`` and the ``L`` coefficients polynomials in a fixed set of named
parameters.  That class is closed under ``d/dt``, ``d/dx^i`` and products, so
Christoffel symbols, Ricci and Einstein tensors stay inside it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np
import sympy
from sympy import QQ
from sympy.polys.rings import ring

from .errors import GrammarError, RichardsonDisagreementError

MAX_DERIVATIVE = 6  # highest tracked derivative of the scale factor
FIELD_PARAMS = ("Lambda", "kappa", "rho", "P")


class MetricFunctionTerm(NamedTuple):
    coefficient: object
    a_powers: tuple
    exponent: tuple


class Grammar:
    """Parameter ring and coordinate count shared by all terms of one computation."""

    def __init__(self, n_space: int, params: Sequence[str] = ()):
        names = list(dict.fromkeys(list(params) + list(FIELD_PARAMS)))
        self.ring, *gens = ring(",".join(names), QQ)
        self.params = dict(zip(names, gens))
        self.n_space = n_space

    @property
    def d(self) -> int:
        return self.n_space + 1

    def coerce(self, value):
        if isinstance(value, str) and value in self.params:
            return self.params[value]
        if isinstance(value, float):
            value = Fraction(value)
        if isinstance(value, Fraction):
            return self.ring(QQ(value.numerator, value.denominator))
        if isinstance(value, sympy.Basic):
            return self.ring.from_expr(value)
        return self.ring(value)

    def zero(self) -> "TermSum":
        return TermSum(self, {})

    def term(self, coefficient=1, a_powers: Sequence[int] = (), exponent: Sequence = ()) -> "TermSum":
        ap = tuple(a_powers) + (0,) * (MAX_DERIVATIVE + 1 - len(a_powers))
        ex = tuple(self.coerce(v) for v in exponent) + (self.ring.zero,) * (self.d - len(exponent))
        return TermSum(self, {(ap, ex): self.coerce(coefficient)})

    def constant(self, c) -> "TermSum":
        return self.term(c)


class TermSum:
    """Finite sum of :class:`MetricFunctionTerm` keyed by (a-powers, exponent)."""

    __slots__ = ("g", "terms", "_compiled")

    def __init__(self, g: Grammar, terms: dict):
        self.g = g
        self.terms = {k: v for k, v in terms.items() if v}
        self._compiled = None

    def __iter__(self):
        for (ap, ex), c in self.terms.items():
            yield MetricFunctionTerm(c, ap, ex)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        if not isinstance(other, TermSum):
            other = self.g.constant(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, self.g.ring.zero) + v
        return TermSum(self.g, out)

    __radd__ = __add__

    def __neg__(self):
        return TermSum(self.g, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, TermSum) else -self.g.coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TermSum):
            c = self.g.coerce(other)
            return TermSum(self.g, {k: v * c for k, v in self.terms.items()})
        out = {}
        for (ap1, ex1), c1 in self.terms.items():
            for (ap2, ex2), c2 in other.terms.items():
                key = (
                    tuple(p + q for p, q in zip(ap1, ap2)),
                    tuple(p + q for p, q in zip(ex1, ex2)),
                )
                out[key] = out.get(key, self.g.ring.zero) + c1 * c2
        return TermSum(self.g, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TermSum):
            other = self.g.constant(other)
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def diff(self, k: int) -> "TermSum":
        """Partial derivative along coordinate ``k`` (0 is time)."""
        out = {}

        def add(key, c):
            out[key] = out.get(key, self.g.ring.zero) + c

        for (ap, ex), c in self.terms.items():
            if ex[k]:
                add((ap, ex), c * ex[k])
            if k == 0:
                for j, p in enumerate(ap):
                    if p == 0:
                        continue
                    if j == MAX_DERIVATIVE:
                        raise GrammarError("scale-factor derivative order exceeds the tracked range")
                    new = list(ap)
                    new[j] -= 1
                    new[j + 1] += 1
                    add((tuple(new), ex), c * p)
        return TermSum(self.g, out)

    def inverse(self) -> "TermSum":
        if len(self.terms) != 1:
            raise GrammarError("only single-term entries can be inverted inside the grammar")
        ((ap, ex), c), = self.terms.items()
        if not c.is_ground:
            raise GrammarError("entry coefficient depends on parameters; inverse leaves the grammar")
        return TermSum(self.g, {(tuple(-p for p in ap), tuple(-e for e in ex)): self.g.ring(1) / c})

    def subs(self, values: dict) -> "TermSum":
        """Substitute numbers for named parameters."""
        if not values:
            return self
        gens = [(self.g.params[k], self.g.coerce(v)) for k, v in values.items()]
        out = {}
        for (ap, ex), c in self.terms.items():
            key = (ap, tuple(e.subs(gens) if not e.is_ground else e for e in ex))
            out[key] = out.get(key, self.g.ring.zero) + c.subs(gens)
        return TermSum(self.g, out)

    def compile(self, params: dict | None = None) -> "CompiledTerms":
        params = params or {}
        pvals = tuple(float(params.get(n, 0.0)) for n in self.g.params)
        if self._compiled is not None and self._compiled[0] == pvals:
            return self._compiled[1]
        coeffs, apows, expos = [], [], []
        for (ap, ex), c in self.terms.items():
            coeffs.append(_poly_value(c, pvals))
            apows.append(ap)
            expos.append([_poly_value(e, pvals) for e in ex])
        compiled = CompiledTerms(
            np.array(coeffs, dtype=float),
            np.array(apows, dtype=float).reshape(len(coeffs), MAX_DERIVATIVE + 1),
            np.array(expos, dtype=float).reshape(len(coeffs), self.g.d),
        )
        self._compiled = (pvals, compiled)
        return compiled

    def evaluate(self, point: Sequence[float], a_values: Sequence[float], params: dict | None = None) -> float:
        return self.compile(params)(point, a_values)

    def to_sympy(self, coords: Sequence[sympy.Symbol], a_func=None, subs: dict | None = None):
        t = coords[0]
        a_func = a_func or sympy.Function("a")(t)
        derivs = [a_func] + [sympy.diff(a_func, t, j) for j in range(1, MAX_DERIVATIVE + 1)]
        expr = sympy.Integer(0)
        for (ap, ex), c in self.terms.items():
            mono = sympy.Mul(*[derivs[j] ** p for j, p in enumerate(ap) if p])
            expo = sum(e.as_expr() * x for e, x in zip(ex, coords))
            expr += c.as_expr() * mono * sympy.exp(expo)
        return expr.subs(subs) if subs else expr

    def max_a_derivative(self) -> int:
        return max((j for (ap, _), _c in self.terms.items() for j, p in enumerate(ap) if p), default=0)

    def __repr__(self):
        return f"TermSum({self.to_sympy(sympy.symbols(f't x1:{self.g.d}'))})"


def _poly_value(p, values) -> float:
    total = 0.0
    for monom, c in p.terms():
        v = float(c)
        for x, e in zip(values, monom):
            if e:
                v *= x**e
        total += v
    return total


class CompiledTerms:
    """Numeric form of a :class:`TermSum` at fixed parameter values."""

    def __init__(self, coeffs, apows, expos):
        self.coeffs, self.apows, self.expos = coeffs, apows, expos

    def __call__(self, point, a_values) -> float:
        if not len(self.coeffs):
            return 0.0
        a = np.asarray(a_values, dtype=float)
        used = self.apows != 0
        mono = np.prod(np.where(used, a ** np.where(used, self.apows, 0), 1.0), axis=1)
        return float(np.sum(self.coeffs * mono * np.exp(self.expos @ np.asarray(point, dtype=float))))


# ---------------------------------------------------------------------------
# metric families


@dataclass
class DiagonalMetric:
    grammar: Grammar
    entries: tuple  # TermSum per diagonal component
    params: dict = field(default_factory=dict)  # numeric values for evaluation
    label: str = ""

    @property
    def d(self) -> int:
        return len(self.entries)

    def inverse(self) -> tuple:
        return tuple(e.inverse() for e in self.entries)


def minkowski(n: int = 3) -> DiagonalMetric:
    g = Grammar(n)
    return DiagonalMetric(g, (g.constant(1),) + (g.constant(-1),) * n, label="minkowski")


def from_deformed(metric) -> DiagonalMetric:
    """Grammar form of a :class:`~ncwarp.deformation.DeformedMetric`."""
    g = Grammar(metric.d - 1)
    entries = tuple(g.term(s, (), L.coeffs) for s, L in zip(metric.signs, metric.exponents))
    return DiagonalMetric(g, entries, label="conformal")


def frw_metric(H=None, n: int = 3) -> DiagonalMetric:
    """Flat FRW; ``H=None`` keeps a generic scale factor ``a(t)``, otherwise ``a^2 = e^{Ht}``."""
    if H is None:
        g = Grammar(n)
        spatial = g.term(-1, (2,))
        return DiagonalMetric(g, (g.constant(1),) + (spatial,) * n, label="frw")
    g = Grammar(n, ("H",))
    spatial = g.term(-1, (), ("H",))
    return DiagonalMetric(g, (g.constant(1),) + (spatial,) * n, {"H": H}, label="frw-exp")


def b_names(n: int) -> tuple:
    return tuple(f"b{i}" for i in range(1, n + 1))


def deformed_frw_metric(b: Sequence | None = None, n: int = 3) -> DiagonalMetric:
    """``g00 = exp(-2 b.x)``, ``g_ij = -a(t)^2 delta_ij`` with symbolic ``b``."""
    if b is not None:
        n = len(b)
    names = b_names(n)
    g = Grammar(n, names)
    g00 = g.term(1, (), (0,) + tuple(-2 * g.params[k] for k in names))
    spatial = g.term(-1, (2,))
    params = {k: float(v) for k, v in zip(names, b)} if b is not None else {}
    return DiagonalMetric(g, (g00,) + (spatial,) * n, params, label="deformed-frw")


# ---------------------------------------------------------------------------
# curvature


@dataclass
class CurvatureReport:
    metric: DiagonalMetric
    christoffel: list  # [lam][mu][nu]
    ricci: list  # [mu][nu]
    ricci_scalar: TermSum
    einstein: list  # [mu][nu]

    def einstein_upper(self) -> list:
        ginv = self.metric.inverse()
        d = self.metric.d
        return [[ginv[m] * ginv[n] * self.einstein[m][n] for n in range(d)] for m in range(d)]

    def is_symmetric(self) -> bool:
        d = self.metric.d
        return all(self.einstein[m][n] == self.einstein[n][m] for m in range(d) for n in range(d))


def christoffel(metric: DiagonalMetric) -> list:
    """``Gamma^l_{mn} = 1/2 g^{ll} (d_m g_{nl} + d_n g_{ml} - d_l g_{mn})`` for diagonal ``g``."""
    d = metric.d
    ginv = metric.inverse()
    dg = [[metric.entries[m].diff(k) for k in range(d)] for m in range(d)]
    half = Fraction(1, 2)
    gamma = [[[metric.grammar.zero() for _ in range(d)] for _ in range(d)] for _ in range(d)]
    for lam, mu, nu in itertools.product(range(d), repeat=3):
        s = metric.grammar.zero()
        if nu == lam:
            s = s + dg[lam][mu]
        if mu == lam:
            s = s + dg[lam][nu]
        if mu == nu:
            s = s - dg[mu][lam]
        if not s.is_zero():
            gamma[lam][mu][nu] = ginv[lam] * s * half
    return gamma


def einstein_tensor(metric: DiagonalMetric) -> CurvatureReport:
    d = metric.d
    G = metric.grammar
    gamma = christoffel(metric)
    ricci = [[G.zero() for _ in range(d)] for _ in range(d)]
    for mu, nu in itertools.product(range(d), repeat=2):
        if nu < mu:
            ricci[mu][nu] = ricci[nu][mu]
            continue
        r = G.zero()
        for lam in range(d):
            r = r + gamma[lam][mu][nu].diff(lam) - gamma[lam][mu][lam].diff(nu)
            for sig in range(d):
                r = r + gamma[lam][lam][sig] * gamma[sig][mu][nu] - gamma[lam][nu][sig] * gamma[sig][mu][lam]
        ricci[mu][nu] = r
    ginv = metric.inverse()
    scalar = G.zero()
    for mu in range(d):
        scalar = scalar + ginv[mu] * ricci[mu][mu]
    einstein = [[G.zero() for _ in range(d)] for _ in range(d)]
    for mu, nu in itertools.product(range(d), repeat=2):
        e = ricci[mu][nu]
        if mu == nu:
            e = e - metric.entries[mu] * scalar * Fraction(1, 2)
        einstein[mu][nu] = e
    return CurvatureReport(metric, gamma, ricci, scalar, einstein)


# ---------------------------------------------------------------------------
# field equations


@dataclass
class FieldEquationResiduals:
    """Computed geometric side minus the closed forms quoted for the deformed FRW metric.

    ``e1`` compares ``G_00 + Lambda g_00`` with ``3 adot^2/a^2 + Lambda g_00``;
    ``momentum[i]`` compares ``G_0i`` with ``-2 (adot/a) b_i``;
    ``e2`` compares the spatially averaged pressure equation, normalised by
    ``-g_00/a^2``, with ``2 addot/a + adot^2/a^2 + (2/3) b^2 g_00 + Lambda g_00``.
    Matter terms cancel identically under ``T = (rho+P) u u - P g``.
    """

    e1: TermSum
    momentum: tuple
    e2: TermSum
    leading_order: dict
    samples: dict

    def as_dict(self) -> dict:
        coords = sympy.symbols(f"t x1:{self.e1.g.d}")
        return {
            "e1": {"zero": self.e1.is_zero(), "expression": str(self.e1.to_sympy(coords))},
            "momentum": [
                {"zero": m.is_zero(), "expression": str(m.to_sympy(coords))} for m in self.momentum
            ],
            "e2": {"zero": self.e2.is_zero(), "expression": str(sympy.simplify(self.e2.to_sympy(coords)))},
            "leading_order_in_b": self.leading_order,
            "samples": self.samples,
        }


def _fluid_T(metric: DiagonalMetric) -> list:
    """Perfect fluid at rest: ``T_00 = rho g_00``, ``T_ij = -P g_ij``."""
    G = metric.grammar
    rho, P = G.params["rho"], G.params["P"]
    d = metric.d
    T = [[G.zero() for _ in range(d)] for _ in range(d)]
    T[0][0] = metric.entries[0] * rho
    for i in range(1, d):
        T[i][i] = metric.entries[i] * (-P)
    return T


def verify_field_equations(
    metric: DiagonalMetric | None = None,
    report: CurvatureReport | None = None,
    sample_points: int = 8,
    seed: int = 0,
) -> FieldEquationResiduals:
    """Residuals of the deformed FRW field equations and their leading order in ``b``."""
    metric = metric or deformed_frw_metric()
    report = report or einstein_tensor(metric)
    G = metric.grammar
    n = metric.d - 1
    names = b_names(n)
    if not all(k in G.params for k in names):
        raise GrammarError("field-equation check needs the symbolic deformed FRW metric")
    Lam, kappa = G.params["Lambda"], G.params["kappa"]
    b = [G.params[k] for k in names]
    g00 = metric.entries[0]
    adot_over_a = G.term(1, (-1, 1))
    T = _fluid_T(metric)
    eq = [
        [report.einstein[m][v] + metric.entries[m] * Lam * (1 if m == v else 0) - T[m][v] * kappa for v in range(n + 1)]
        for m in range(n + 1)
    ]

    # (e1): the quoted density is the T_00 component, so the matter side is kappa T_00
    closed_e1 = G.term(3, (-2, 2)) + g00 * Lam - T[0][0] * kappa
    e1 = eq[0][0] - closed_e1
    momentum = tuple(eq[0][i] - (adot_over_a * (-2) * b[i - 1] - T[0][i] * kappa) for i in range(1, n + 1))

    norm = g00 * G.term(-1, (-2,))
    averaged = G.zero()
    for i in range(1, n + 1):
        averaged = averaged + eq[i][i]
    averaged = averaged * norm * Fraction(1, n)
    b2 = sum((bi * bi for bi in b), G.ring.zero)
    closed_e2 = (
        G.term(2, (-1, 0, 1))
        + G.term(1, (-2, 2))
        + g00 * (b2 * Fraction(2, 3))
        + g00 * Lam
        + g00 * kappa * G.params["P"]
    )
    e2 = averaged - closed_e2

    orders = {
        "e1": leading_order_in_b(e1, names),
        "momentum": max((leading_order_in_b(m, names) or 0) for m in momentum) or None,
        "e2": leading_order_in_b(e2, names),
    }
    samples = sample_residuals({"e1": e1, "e2": e2}, names, sample_points, seed)
    return FieldEquationResiduals(e1, momentum, e2, orders, samples)


def leading_order_in_b(expr: TermSum, names: Sequence[str], max_order: int = 6):
    """Lowest power of ``eps`` in ``expr`` after ``b -> eps b``; None if zero through ``max_order``."""
    if expr.is_zero():
        return None
    d = expr.g.d
    coords = sympy.symbols(f"t x1:{d}")
    eps = sympy.Symbol("eps")
    sym = expr.to_sympy(coords)
    scaled = sym.subs({sympy.Symbol(k): eps * sympy.Symbol(k) for k in names}, simultaneous=True)
    series = sympy.series(scaled, eps, 0, max_order + 1).removeO()
    for k in range(max_order + 1):
        if sympy.simplify(series.coeff(eps, k)) != 0:
            return k
    return None


def numeric_order(expr: TermSum, names: Sequence[str], point, a_values, b_dir, eps=(1e-2, 1e-3)) -> float:
    """Slope of ``log|residual|`` against ``log eps`` along ``b = eps * b_dir``."""
    vals = []
    for e in eps:
        params = {k: e * v for k, v in zip(names, b_dir)}
        params.update({"kappa": 8 * math.pi})
        vals.append(abs(expr.evaluate(point, a_values, params)))
    return math.log(vals[0] / vals[1]) / math.log(eps[0] / eps[1])


def sample_residuals(exprs: dict, names, count: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    for label, expr in exprs.items():
        worst = 0.0
        slopes = []
        for _ in range(count):
            point = [rng.uniform(0.5, 2.0)] + list(rng.uniform(-1, 1, len(names)))
            a_values = [rng.uniform(0.5, 2.0)] + list(rng.normal(size=MAX_DERIVATIVE))
            params = {k: rng.uniform(-0.2, 0.2) for k in names}
            params.update({"kappa": 8 * math.pi, "Lambda": 0.0, "rho": 1.0, "P": 0.0})
            worst = max(worst, abs(expr.evaluate(point, a_values, params)))
            if not expr.is_zero():
                direction = rng.uniform(0.5, 1.0, len(names))
                slopes.append(numeric_order(expr, names, point, a_values, direction))
        out[label] = {"max_abs": worst, "numeric_order": round(float(np.median(slopes)), 3) if slopes else None}
    return out


# ---------------------------------------------------------------------------
# scale factors and numeric evaluation


class ScaleFactor:
    """Numeric ``a(t)`` with derivatives, from a sympy expression in ``t``."""

    def __init__(self, expr, t: sympy.Symbol | None = None):
        self.t = t or sympy.Symbol("t")
        if isinstance(expr, str):
            from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

            expr = parse_expr(expr, local_dict={"t": self.t}, transformations=standard_transformations + (convert_xor,))
        self.expr = sympy.sympify(expr)
        derivs = [self.expr]
        for _ in range(MAX_DERIVATIVE):
            derivs.append(sympy.diff(derivs[-1], self.t))
        self._funcs = [sympy.lambdify(self.t, dv, "math") for dv in derivs]

    def values(self, t: float) -> list:
        return [float(f(t)) for f in self._funcs]

    def __call__(self, t: float) -> float:
        return float(self._funcs[0](t))


def metric_function(metric: DiagonalMetric, scale: ScaleFactor | None = None, params: dict | None = None) -> Callable:
    """``x -> g_{mu nu}(x)`` as a dense array, evaluated from the grammar entries."""
    params = {**metric.params, **(params or {})}
    parts = [e.compile(params) for e in metric.entries]
    owner = np.concatenate([np.full(len(p.coeffs), i) for i, p in enumerate(parts)])
    coeffs = np.concatenate([p.coeffs for p in parts])
    apows = np.concatenate([p.apows for p in parts])
    expos = np.concatenate([p.expos for p in parts])
    used = apows != 0
    safe = np.where(used, apows, 0)
    d = metric.d
    ones = np.ones(MAX_DERIVATIVE + 1)

    def g(x):
        x = np.asarray(x, dtype=float)
        a = np.asarray(scale.values(x[0])) if scale is not None and used.any() else ones
        vals = coeffs * np.prod(np.where(used, a**safe, 1.0), axis=1) * np.exp(expos @ x)
        return np.diag(np.bincount(owner, weights=vals, minlength=d))

    return g


def evaluate_tensor(tensor, x, scale: ScaleFactor | None, params: dict) -> np.ndarray:
    a_values = scale.values(x[0]) if scale is not None else [1.0] * (MAX_DERIVATIVE + 1)
    arr = np.asarray(tensor, dtype=object)
    out = np.zeros(arr.shape)
    for idx in np.ndindex(arr.shape):
        out[idx] = arr[idx].evaluate(x, a_values, params)
    return out


# ---------------------------------------------------------------------------
# finite-difference oracle


_WEIGHTS = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))


def _fd(f, x, k, h):
    x = np.asarray(x, dtype=float)
    acc = 0
    for s, w in _WEIGHTS:
        xs = x.copy()
        xs[k] += s * h
        acc = acc + w * f(xs)
    return acc / h


def _numeric_gamma(g, x, h):
    d = len(x)
    ginv = np.linalg.inv(g(x))
    dg = np.array([_fd(g, x, k, h) for k in range(d)])  # dg[k, m, n] = d_k g_mn
    lower = 0.5 * (np.einsum("mnl->lmn", dg) + np.einsum("nml->lmn", dg) - np.einsum("lmn->lmn", dg))
    # lower[l, m, n] = 1/2 (d_m g_nl + d_n g_ml - d_l g_mn)
    return np.einsum("ls,smn->lmn", ginv, lower)


def _numeric_einstein(g, x, h):
    d = len(x)
    gam = _numeric_gamma(g, x, h)
    dgam = np.array([_fd(lambda y: _numeric_gamma(g, y, h), x, k, h) for k in range(d)])  # dgam[k,l,m,n]
    ricci = (
        np.einsum("llmn->mn", dgam)
        - np.einsum("nlml->mn", dgam)
        + np.einsum("lls,smn->mn", gam, gam)
        - np.einsum("lns,sml->mn", gam, gam)
    )
    gx = g(x)
    scalar = np.einsum("mn,mn->", np.linalg.inv(gx), ricci)
    return ricci - 0.5 * scalar * gx


def numeric_curvature_oracle(g: Callable, x: Sequence[float], h: float = 1e-2, rtol: float = 1e-5) -> np.ndarray:
    """Einstein tensor at ``x`` from metric samples only.

    Fourth-order central differences, nested for derivatives of Christoffel
    symbols.  The result at ``h`` is compared with ``h/2``; a disagreement
    beyond ``rtol`` (relative to the tensor scale, absolute floor 1e-9)
    means the step is outside the trustworthy range.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    coarse = _numeric_einstein(g, x, h)
    fine = _numeric_einstein(g, x, h / 2)
    scale = max(np.max(np.abs(fine)), 1.0)
    if np.max(np.abs(coarse - fine)) > rtol * scale:
        raise RichardsonDisagreementError(
            f"step {h}: results at h and h/2 differ by {np.max(np.abs(coarse - fine)):.3e}"
        )
    # Richardson extrapolation for the fourth-order scheme
    return fine + (fine - coarse) / 15


def relative_error(symbolic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.max(np.abs(symbolic)), 1.0)
    return float(np.max(np.abs(symbolic - numeric)) / scale)


def bianchi_residual(report: CurvatureReport, x, scale: ScaleFactor | None, params: dict, h: float = 1e-3) -> np.ndarray:
    """``nabla_mu G^{mu nu}`` at ``x``: symbolic tensors, finite-difference divergence."""
    upper = report.einstein_upper()
    d = report.metric.d

    def Gup(y):
        return evaluate_tensor(upper, y, scale, params)

    gam = evaluate_tensor(report.christoffel, x, scale, params)
    div = sum(_fd(Gup, x, m, h)[m] for m in range(d))
    Gx = Gup(np.asarray(x, dtype=float))
    div = div + np.einsum("mml,ln->n", gam, Gx) + np.einsum("nml,ml->n", gam, Gx)
    return div
