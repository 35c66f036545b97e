"""Universal differential calculus over coordinate generators, as term rewriting.

Words are tuples of :class:`Generator`; an :class:`NCExpression` is a finite
linear combination of words.  :func:`normal_form` moves every coordinate to
the left of every differential with

    dx^nu x^mu  ->  x^mu dx^nu - sum_sigma C^{mu nu}_sigma dx^sigma

and sorts coordinates by index with

    x^nu x^mu  ->  x^mu x^nu - i Omega^{mu nu}          (nu > mu)

Differentials keep their relative order: no relation among them is imposed.

Coefficients live either in the Gaussian rationals (``exact=True``, backed by
:data:`sympy.polys.domains.QQ_I`) or in Python ``complex``.

Expression grammar (whitespace is ignored)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ['^' INT]
    atom   := NUMBER ['i'] | 'i' | 'x' INT | 'dx' INT | '(' expr ')'
    NUMBER := DIGITS ['.' DIGITS] [('e'|'E') ['+'|'-'] DIGITS] ['/' DIGITS]

so ``x0*dx1 + 2i*x1*x1*dx0`` and ``(1/2-3/4i)*dx0^2`` both parse.
:func:`format_expression` prints in the same grammar and round-trips.
"""

from __future__ import annotations

import numbers
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np
from sympy.polys.domains import QQ_I

from .algebra import StructureConstants, check_jacobi, check_symmetry
from .errors import (
    ExpressionSyntaxError,
    GradingError,
    InconsistentAlgebraError,
    WordLengthError,
)

DEFAULT_MAX_LENGTH = 16
DEFAULT_GRADE_CAP = 2

_GaussianRational = type(QQ_I(0, 1))


class Generator(NamedTuple):
    kind: str  # "x" or "dx"
    index: int

    def __str__(self):
        return f"{self.kind}{self.index}"


def _sort_key(g: Generator):
    return (0 if g.kind == "x" else 1, g.index)


# ---------------------------------------------------------------------------
# coefficient fields


def _fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(value)
    # gmpy2.mpq and friends
    return Fraction(int(value.numerator), int(value.denominator))


def to_exact(value):
    if isinstance(value, _GaussianRational):
        return value
    if isinstance(value, complex):
        return QQ_I(_fraction(value.real), _fraction(value.imag))
    return QQ_I.convert(_fraction(value))


def to_float(value) -> complex:
    if isinstance(value, _GaussianRational):
        return complex(float(value.x), float(value.y))
    return complex(value)


def _conjugate(value):
    if isinstance(value, _GaussianRational):
        return QQ_I(value.x, -value.y)
    return complex(value).conjugate()


def _is_zero(value) -> bool:
    # GaussianRational(0, 0) does not compare equal to the int 0
    return not value


# ---------------------------------------------------------------------------
# expressions


class NCExpression:
    """Immutable linear combination of words."""

    __slots__ = ("_terms", "exact", "_hash")

    def __init__(self, terms=None, exact: bool = False):
        coerce = to_exact if exact else to_float
        clean = {}
        for word, coeff in (terms or {}).items():
            word = tuple(Generator(*g) for g in word)
            c = coerce(coeff)
            if word in clean:
                c = clean[word] + c
            clean[word] = c
        self._terms = {w: c for w, c in clean.items() if not _is_zero(c)}
        self.exact = exact
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def scalar(cls, value, exact=False):
        return cls({(): value}, exact=exact)

    @classmethod
    def word(cls, *gens, coeff=1, exact=False):
        return cls({tuple(gens): coeff}, exact=exact)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def coefficient(self, word) -> object:
        return self._terms.get(tuple(word), 0)

    def is_zero(self) -> bool:
        return not self._terms

    def max_length(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def as_exact(self) -> "NCExpression":
        return self if self.exact else NCExpression(self._terms, exact=True)

    def as_float(self) -> "NCExpression":
        return NCExpression(self._terms, exact=False) if self.exact else self

    # arithmetic -------------------------------------------------------------
    def _promote(self, other):
        if isinstance(other, NCExpression):
            if self.exact and other.exact:
                return self, other, True
            return self.as_float(), other.as_float(), False
        return self, NCExpression.scalar(other, exact=self.exact and _exact_scalar(other)), None

    def __add__(self, other):
        a, b, exact = self._promote(other)
        exact = a.exact and b.exact
        terms = dict(a._terms)
        for w, c in b._terms.items():
            terms[w] = terms[w] + c if w in terms else c
        return NCExpression(terms, exact=exact)

    __radd__ = __add__

    def __neg__(self):
        return NCExpression({w: -c for w, c in self._terms.items()}, exact=self.exact)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, NCExpression):
            if self.exact and _exact_scalar(other):
                k = to_exact(other)
                return NCExpression({w: c * k for w, c in self._terms.items()}, exact=True)
            k = to_float(other)
            return NCExpression({w: to_float(c) * k for w, c in self._terms.items()}, exact=False)
        a, b, _ = self._promote(other)
        terms = {}
        for w1, c1 in a._terms.items():
            for w2, c2 in b._terms.items():
                w = w1 + w2
                c = c1 * c2
                terms[w] = terms[w] + c if w in terms else c
        return NCExpression(terms, exact=a.exact and b.exact)

    def __rmul__(self, other):
        # scalars commute with everything
        return self.__mul__(other)

    def __eq__(self, other):
        if not isinstance(other, NCExpression):
            if isinstance(other, (numbers.Number, _GaussianRational)):
                other = NCExpression.scalar(other, exact=self.exact)
            else:
                return NotImplemented
        if self.exact != other.exact:
            return self.as_float()._terms == other.as_float()._terms
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset((w, to_float(c)) for w, c in self._terms.items()))
        return self._hash

    def isclose(self, other: "NCExpression", tol: float = 1e-12) -> bool:
        diff = self.as_float() - other.as_float()
        return all(abs(c) <= tol for c in diff._terms.values())

    def __repr__(self):
        return f"NCExpression({format_expression(self)!r}, exact={self.exact})"

    def __str__(self):
        return format_expression(self)


def _exact_scalar(value) -> bool:
    return isinstance(value, (numbers.Rational, _GaussianRational)) and not isinstance(value, bool)


def x(mu: int, exact: bool = False) -> NCExpression:
    return NCExpression.word(Generator("x", mu), exact=exact)


def dx(mu: int, exact: bool = False) -> NCExpression:
    return NCExpression.word(Generator("dx", mu), exact=exact)


# ---------------------------------------------------------------------------
# rewrite context


@dataclass(frozen=True, eq=False)
class RewriteContext:
    """Read-only rewriting data: structure constants plus optional Moyal matrix.

    ``omega`` is the antisymmetric matrix with ``[x^mu, x^nu] = i omega[mu][nu]``.
    A length-``n`` vector is read as the time-space row ``Omega^{0j}``.
    """

    C: StructureConstants
    omega: object = None
    exact: bool | None = None
    max_length: int = DEFAULT_MAX_LENGTH
    grade_cap: int = DEFAULT_GRADE_CAP
    _brackets: dict = field(init=False, repr=False)
    _moyal: dict = field(init=False, repr=False)
    _memo: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not check_symmetry(self.C):
            raise InconsistentAlgebraError("structure constants are not symmetric in mu, nu")
        report = check_jacobi(self.C)
        if not report.consistent:
            raise InconsistentAlgebraError(
                f"structure constants violate the Jacobi conditions (residual {report.residual})"
            )
        if self.exact is None:
            object.__setattr__(self, "exact", self.C.exact)
        d = self.C.d
        brackets = {
            (mu, nu): tuple((s, self._imaginary(c)) for s, c in self.C.bracket(mu, nu))
            for mu in range(d)
            for nu in range(d)
        }
        moyal = {}
        if self.omega is not None:
            om = _omega_matrix(self.omega, d)
            for mu in range(d):
                for nu in range(d):
                    if om[mu][nu] != 0:
                        moyal[(mu, nu)] = self._imaginary(om[mu][nu])
        object.__setattr__(self, "_brackets", brackets)
        object.__setattr__(self, "_moyal", moyal)
        object.__setattr__(self, "_memo", {})

    def _imaginary(self, value):
        if self.exact:
            return QQ_I(0, 1) * to_exact(value)
        return 1j * float(value)

    @property
    def d(self) -> int:
        return self.C.d

    def bracket(self, mu: int, nu: int):
        """Pairs ``(sigma, C^{mu nu}_sigma)`` in the coefficient field."""
        return self._brackets[(mu, nu)]

    def coordinate_bracket(self, mu: int, nu: int):
        """``[x^mu, x^nu]`` as a scalar in the coefficient field."""
        return self._moyal.get((mu, nu), 0)

    def lift(self, e: NCExpression) -> NCExpression:
        return e.as_exact() if self.exact else e.as_float()


def _omega_matrix(omega, d):
    if isinstance(omega, np.ndarray):
        omega = omega.tolist()
    omega = list(omega)
    if omega and not isinstance(omega[0], (list, tuple)):
        if len(omega) != d - 1:
            raise ValueError(f"expected {d - 1} time-space Moyal entries, got {len(omega)}")
        full = [[0] * d for _ in range(d)]
        for j, w in enumerate(omega, start=1):
            full[0][j] = w
            full[j][0] = -w
        return full
    if len(omega) != d or any(len(r) != d for r in omega):
        raise ValueError("Moyal matrix has the wrong shape")
    for mu in range(d):
        for nu in range(d):
            if omega[mu][nu] + omega[nu][mu] != 0:
                raise ValueError("Moyal matrix must be antisymmetric")
    return omega


# ---------------------------------------------------------------------------
# normal form


def _redexes(word):
    out = []
    for i in range(len(word) - 1):
        left, right = word[i], word[i + 1]
        if left.kind == "dx" and right.kind == "x":
            out.append(i)
        elif left.kind == "x" and right.kind == "x" and left.index > right.index:
            out.append(i)
    return out


def _rewrite(word, i, ctx: RewriteContext):
    left, right = word[i], word[i + 1]
    prefix, suffix = word[:i], word[i + 2 :]
    one = to_exact(1) if ctx.exact else 1.0
    out = [(prefix + (right, left) + suffix, one)]
    mu, nu = right.index, left.index
    if left.kind == "dx":
        for sigma, c in ctx.bracket(mu, nu):
            out.append((prefix + (Generator("dx", sigma),) + suffix, -c))
    else:
        w = ctx.coordinate_bracket(mu, nu)
        if w:
            out.append((prefix + suffix, -w))
    return out


def is_normal(word) -> bool:
    return not _redexes(word)


def _normal_word(word, ctx: RewriteContext, pick):
    if pick is None and word in ctx._memo:
        return ctx._memo[word]
    red = _redexes(word)
    if not red:
        one = to_exact(1) if ctx.exact else 1.0
        result = {word: one}
    else:
        i = red[0] if pick is None else pick(red)
        result = {}
        for w, c in _rewrite(word, i, ctx):
            for w2, c2 in _normal_word(w, ctx, pick).items():
                v = c * c2
                result[w2] = result[w2] + v if w2 in result else v
        result = {w: c for w, c in result.items() if not _is_zero(c)}
    if pick is None:
        ctx._memo[word] = result
    return result


def normal_form(
    e: NCExpression,
    ctx: RewriteContext,
    rng: random.Random | None = None,
) -> NCExpression:
    """Canonical form of ``e``.

    Rewrites are applied to the leftmost redex unless ``rng`` is given, in
    which case each step picks a random redex; the result is the same either
    way when the context is consistent.
    """
    e = ctx.lift(e)
    if e.max_length() > ctx.max_length:
        raise WordLengthError(f"word length {e.max_length()} exceeds cap {ctx.max_length}")
    for w in e:
        for g in w:
            if g.index >= ctx.d:
                raise ValueError(f"generator {g} out of range for dimension {ctx.d}")
    pick: Callable | None = None if rng is None else rng.choice
    terms = {}
    for word, coeff in e.items():
        for w, c in _normal_word(word, ctx, pick).items():
            v = coeff * c
            terms[w] = terms[w] + v if w in terms else v
    return NCExpression(terms, exact=ctx.exact)


def multiply(A: NCExpression, B: NCExpression, ctx: RewriteContext) -> NCExpression:
    product = ctx.lift(A) * ctx.lift(B)
    if product.max_length() > ctx.max_length:
        raise WordLengthError(f"product word length {product.max_length()} exceeds cap {ctx.max_length}")
    return normal_form(product, ctx)


def commutator(A: NCExpression, B: NCExpression, ctx: RewriteContext) -> NCExpression:
    A, B = ctx.lift(A), ctx.lift(B)
    return normal_form(A * B - B * A, ctx)


# ---------------------------------------------------------------------------
# differential and involution


def degree(word) -> int:
    """Form degree: number of differentials in the word."""
    return sum(1 for g in word if g.kind == "dx")


def apply_d(e: NCExpression, ctx: RewriteContext) -> NCExpression:
    """Universal differential on words, with the graded Leibniz sign.

    ``d(x^mu) = dx^mu``, ``d(dx^mu) = 0`` and ``d(uv) = (du)v + (-1)^|u| u(dv)``.
    The result is not normalised; call :func:`normal_form` afterwards.
    """
    e = ctx.lift(e)
    terms = {}
    for word, coeff in e.items():
        if degree(word) >= ctx.grade_cap:
            raise GradingError(
                f"word {''.join(map(str, word))} already has degree {degree(word)} >= cap {ctx.grade_cap}"
            )
        seen_dx = 0
        for i, g in enumerate(word):
            if g.kind == "dx":
                seen_dx += 1
                continue
            w = word[:i] + (Generator("dx", g.index),) + word[i + 1 :]
            c = -coeff if seen_dx % 2 else coeff
            terms[w] = terms[w] + c if w in terms else c
    return NCExpression(terms, exact=ctx.exact)


def star(e: NCExpression) -> NCExpression:
    """Graded anti-automorphism: reverse each word and conjugate its coefficient."""
    return NCExpression({tuple(reversed(w)): _conjugate(c) for w, c in e.items()}, exact=e.exact)


# ---------------------------------------------------------------------------
# grammar

_TOKEN = re.compile(
    r"""
    (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?i?)
  | (?P<gen>dx\d+|x\d+)
  | (?P<imag>i)
  | (?P<op>[-+*^()])
  | (?P<ws>\s+)
  """,
    re.VERBOSE,
)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", pos))
    return tokens


def _parse_number(text, exact):
    imaginary = text.endswith("i")
    if imaginary:
        text = text[:-1]
    if "/" in text:
        num, den = text.split("/")
        if "." in num or "e" in num.lower():
            value = float(num) / int(den)
        else:
            value = Fraction(int(num), int(den))
    elif "." in text or "e" in text.lower():
        value = float(text)
    else:
        value = int(text)
    if not exact:
        value = float(value)
    if imaginary:
        return QQ_I(0, 1) * to_exact(value) if exact else 1j * value
    return to_exact(value) if exact else complex(value)


class _Parser:
    def __init__(self, text, exact):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.exact = exact

    def peek(self):
        return self.tokens[self.pos]

    def take(self, value=None):
        tok = self.tokens[self.pos]
        if value is not None and tok[1] != value:
            raise ExpressionSyntaxError(f"expected {value!r} at column {tok[2] + 1}, found {tok[1] or 'end'!r}")
        self.pos += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"unexpected {tok[1]!r} at column {tok[2] + 1}")
        return e

    def expr(self):
        sign = 1
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        e = self.term() if sign == 1 else -self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            e = e * self.factor()
        return e

    def factor(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, value, col = self.take()
            if kind != "num" or not value.isdigit():
                raise ExpressionSyntaxError(f"expected integer exponent at column {col + 1}")
            result = NCExpression.scalar(1, exact=self.exact)
            for _ in range(int(value)):
                result = result * base
            return result
        return base

    def atom(self):
        kind, value, col = self.take()
        if kind == "num":
            return NCExpression.scalar(_parse_number(value, self.exact), exact=self.exact)
        if kind == "imag":
            return NCExpression.scalar(QQ_I(0, 1) if self.exact else 1j, exact=self.exact)
        if kind == "gen":
            name = "dx" if value.startswith("dx") else "x"
            return NCExpression.word(Generator(name, int(value[len(name) :])), exact=self.exact)
        if value == "(":
            e = self.expr()
            self.take(")")
            return e
        raise ExpressionSyntaxError(f"unexpected {value or 'end'!r} at column {col + 1}")


def parse_expression(text: str, exact: bool = False) -> NCExpression:
    return _Parser(text, exact).parse()


def _format_real(v, exact):
    if exact:
        f = _fraction(v)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    v = float(v)
    if v == int(v) and abs(v) < 1e16:
        return f"{int(v)}.0"
    return repr(v)


def _format_coefficient(c, exact):
    """Return (sign, body) where body is printable without a leading sign."""
    if exact:
        re_, im_ = _fraction(c.x), _fraction(c.y)
    else:
        re_, im_ = c.real, c.imag
    if im_ == 0:
        return ("-" if re_ < 0 else "+"), _format_real(abs(re_), exact)
    if re_ == 0:
        body = "i" if abs(im_) == 1 else _format_real(abs(im_), exact) + "i"
        return ("-" if im_ < 0 else "+"), body
    inner_sign = "-" if im_ < 0 else "+"
    return "+", f"({_format_real(re_, exact)}{inner_sign}{_format_real(abs(im_), exact)}i)"


def _word_key(word):
    return (len(word), [_sort_key(g) for g in word])


def format_expression(e: NCExpression) -> str:
    if e.is_zero():
        return "0"
    pieces = []
    for word in sorted(e, key=_word_key):
        sign, body = _format_coefficient(e.coefficient(word), e.exact)
        unit = body in ("1", "1.0")
        if word:
            wtext = "*".join(str(g) for g in word)
            text = wtext if unit else f"{body}*{wtext}"
        else:
            text = body
        pieces.append((sign, text))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, text in pieces[1:]:
        out += f" {sign} {text}"
    return out


def jacobi_sum(A: NCExpression, B: NCExpression, D: NCExpression, ctx: RewriteContext) -> NCExpression:
    """``[A,[B,D]] + [B,[D,A]] + [D,[A,B]]``; zero for a consistent context."""
    return (
        commutator(A, commutator(B, D, ctx), ctx)
        + commutator(B, commutator(D, A, ctx), ctx)
        + commutator(D, commutator(A, B, ctx), ctx)
    )


def random_word(rng: random.Random, d: int, max_len: int = 8) -> tuple:
    n = rng.randint(0, max_len)
    return tuple(Generator(rng.choice(("x", "dx")), rng.randrange(d)) for _ in range(n))

