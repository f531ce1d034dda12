"""Exact coefficients: rational functions over QQ in the model parameters.

Parameters declared ``pm1`` (the sign epsilon of the 3D family) obey the single
rewrite ``s**2 -> 1``.  Every value is kept in a canonical form:

* numerator reduced so each sign symbol has exponent <= 1;
* denominator free of sign symbols (rationalized with the conjugate a - b*s);
* gcd(numerator, denominator) = 1 with sympy's sign/content normalization;
* constants are stored as plain ``mpq`` values (fast path, no polynomial gcd).

Equal values therefore compare and hash equal.
"""

from fractions import Fraction
from functools import lru_cache

from sympy import QQ
from sympy.polys.fields import FracField

from .errors import ContextError, DivisionByZero

_mpq = type(QQ(1))


def to_rational(value):
    """Coerce int/Fraction/mpq/str to an exact ``mpq``."""
    if isinstance(value, _mpq):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return QQ(value)
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, str):
        f = Fraction(value)
        return QQ(f.numerator, f.denominator)
    raise TypeError(f"cannot convert {value!r} to an exact rational")


def format_rational(q):
    q = to_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class ParamSpace:
    """The parameter field QQ(params) with sign symbols adjoined.

    Obtain instances through :func:`param_space`; they are interned so
    identity comparison is enough to detect a context mismatch.
    """

    def __init__(self, params, signs):
        self.params = params
        self.signs = signs
        self._index = {p: i for i, p in enumerate(params)}
        self._sign_idx = tuple(self._index[s] for s in params if s in signs)
        self._field = FracField(params, QQ) if params else None

    def __repr__(self):
        return f"ParamSpace(params={self.params!r}, signs={sorted(self.signs)!r})"

    def __reduce__(self):
        return (param_space, (self.params, self.signs))

    @property
    def field(self):
        return self._field

    def zero(self):
        return ParamScalar(self, QQ(0))

    def one(self):
        return ParamScalar(self, QQ(1))

    def const(self, value):
        return ParamScalar(self, to_rational(value))

    def symbol(self, name):
        try:
            i = self._index[name]
        except KeyError:
            raise ContextError(f"unknown parameter {name!r}") from None
        return ParamScalar(self, self._field.gens[i])

    def index(self, name):
        return self._index[name]

    # -- canonicalization -------------------------------------------------

    def _reduce_signs(self, poly):
        if not self._sign_idx:
            return poly
        if all(m[i] <= 1 for m in poly.keys() for i in self._sign_idx):
            return poly
        acc = {}
        for monom, coeff in poly.items():
            m = list(monom)
            for i in self._sign_idx:
                m[i] %= 2
            m = tuple(m)
            acc[m] = acc.get(m, 0) + coeff
        return poly.ring.from_dict({m: c for m, c in acc.items() if c})

    def _split(self, poly, i):
        """Write ``poly = a + b*s_i`` (poly already sign-reduced)."""
        ring = poly.ring
        a, b = {}, {}
        for monom, coeff in poly.items():
            if monom[i]:
                m = list(monom)
                m[i] = 0
                b[tuple(m)] = coeff
            else:
                a[monom] = coeff
        return ring.from_dict(a), ring.from_dict(b)

    def canonical(self, frac):
        """Normalize a FracElement into the stored representation."""
        numer, denom = frac.numer, frac.denom
        if self._sign_idx:
            numer = self._reduce_signs(numer)
            denom = self._reduce_signs(denom)
            changed = False
            for i in self._sign_idx:
                if denom.degree(i) <= 0:
                    continue
                a, b = self._split(denom, i)
                conj = a - b * denom.ring.gens[i]
                numer = self._reduce_signs(numer * conj)
                denom = self._reduce_signs(denom * conj)
                changed = True
                if not denom:
                    raise DivisionByZero("inverted a zero divisor of the sign algebra")
            if not denom:
                raise DivisionByZero("division by zero in the parameter field")
            if changed or numer != frac.numer or denom != frac.denom:
                frac = self._field.new(numer, denom)
                numer, denom = frac.numer, frac.denom
        if numer.is_ground and denom.is_ground:
            return QQ(numer.LC if numer else 0) / QQ(denom.LC)
        return frac


@lru_cache(maxsize=None)
def _space(params, signs):
    return ParamSpace(params, signs)


def param_space(params=(), signs=()):
    params = tuple(params)
    if len(set(params)) != len(params):
        raise ContextError(f"duplicate parameter names in {params!r}")
    signs = frozenset(signs)
    if not signs <= set(params):
        raise ContextError(f"sign symbols {sorted(signs - set(params))} are not parameters")
    return _space(params, signs)


class ParamScalar:
    """An immutable element of QQ(params)[s]/(s**2 - 1)."""

    __slots__ = ("space", "_v")

    def __init__(self, space, value):
        self.space = space
        self._v = value

    @classmethod
    def _from_frac(cls, space, frac):
        return cls(space, space.canonical(frac))

    # -- predicates -------------------------------------------------------

    @property
    def is_const(self):
        return isinstance(self._v, _mpq)

    def is_zero(self):
        return self.is_const and self._v == 0

    def is_one(self):
        return self.is_const and self._v == 1

    def __bool__(self):
        return not self.is_zero()

    def const_value(self):
        if not self.is_const:
            raise ValueError(f"{self} is not a constant")
        return self._v

    def free_params(self):
        if self.is_const:
            return frozenset()
        syms = self.space.params
        used = set()
        for poly in (self._v.numer, self._v.denom):
            for monom in poly.keys():
                used.update(syms[i] for i, e in enumerate(monom) if e)
        return frozenset(used)

    @property
    def numer_denom(self):
        """(numerator, denominator) as sympy PolyElements (or mpq pair)."""
        if self.is_const:
            return QQ(self._v.numerator), QQ(self._v.denominator)
        return self._v.numer, self._v.denom

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ParamScalar):
            if other.space is not self.space:
                raise ContextError("parameter spaces differ")
            return other
        return ParamScalar(self.space, to_rational(other))

    def _lift(self):
        if self.is_const:
            return self.space.field.ground_new(self._v)
        return self._v

    def __add__(self, other):
        other = self._coerce(other)
        if self.is_const and other.is_const:
            return ParamScalar(self.space, self._v + other._v)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return ParamScalar._from_frac(self.space, self._lift() + other._lift())

    __radd__ = __add__

    def __neg__(self):
        return ParamScalar(self.space, -self._v)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_const and other.is_const:
            return ParamScalar(self.space, self._v * other._v)
        if self.is_zero() or other.is_zero():
            return self.space.zero()
        if self.is_one():
            return other
        if other.is_one():
            return self
        if other.is_const:
            return ParamScalar._from_frac(self.space, self._v * other._v)
        if self.is_const:
            return ParamScalar._from_frac(self.space, other._v * self._v)
        return ParamScalar._from_frac(self.space, self._v * other._v)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise DivisionByZero("division by zero")
        if self.is_const:
            return ParamScalar(self.space, 1 / self._v)
        inv = self.space.field.new(self._v.denom, self._v.numer)
        return ParamScalar._from_frac(self.space, inv)

    def is_unit(self):
        try:
            self.inverse()
        except DivisionByZero:
            return False
        return True

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers")
        if n < 0:
            return self.inverse() ** (-n)
        result = self.space.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, ParamScalar):
            return self.space is other.space and self._v == other._v
        if isinstance(other, (int, Fraction, _mpq)) and not isinstance(other, bool):
            return self.is_const and self._v == to_rational(other)
        return NotImplemented

    def __hash__(self):
        return hash(self._v)

    def lift(self, space):
        """The same value in a larger parameter space (names must be kept)."""
        if space is self.space:
            return self
        missing = set(self.space.params) - set(space.params)
        if missing or not self.space.signs <= space.signs:
            raise ContextError(f"cannot lift into {space!r}")
        if self.is_const:
            return ParamScalar(space, self._v)
        return ParamScalar._from_frac(space, self._v.set_field(space.field))

    # -- substitution / evaluation ---------------------------------------

    def subs(self, name, value):
        """Exact substitution of a rational for one parameter."""
        if self.is_const:
            return self
        i = self.space.index(name)
        gen = self.space.field.ring.gens[i]
        value = to_rational(value)
        numer = self._v.numer.subs(gen, value)
        denom = self._v.denom.subs(gen, value)
        if not denom:
            raise DivisionByZero(f"denominator {self._v.denom.as_expr()} vanishes at {name}={value}")
        return ParamScalar._from_frac(self.space, self.space.field.new(numer, denom))

    def evaluate(self, values):
        """Float value under ``values`` (parameter name -> number)."""
        if self.is_const:
            return float(self._v)
        vals = []
        used = self.free_params()
        for p in self.space.params:
            if p in values:
                vals.append(float(values[p]))
            elif p in used:
                raise KeyError(f"parameter {p!r} has no value")
            else:
                vals.append(0.0)
        den = _eval_poly(self._v.denom, vals)
        if den == 0.0:
            raise DivisionByZero(
                f"denominator {self._v.denom.as_expr()} vanishes at the given parameters"
            )
        return _eval_poly(self._v.numer, vals) / den

    # -- printing ---------------------------------------------------------

    def to_str(self):
        """Text in the expression grammar; sums and quotients are parenthesized."""
        if self.is_const:
            return format_rational(self._v)
        numer, denom = self._v.numer, self._v.denom
        names = self.space.params
        if denom.is_ground:
            c = QQ(denom.LC)
            text = _format_poly(numer.quo_ground(c) if c != 1 else numer, names)
            return f"({text})" if len(numer) > 1 else text
        num = _format_poly(numer, names)
        den = _format_poly(denom, names)
        if len(numer) > 1:
            num = f"({num})"
        if len(denom) > 1 or "*" in den:
            den = f"({den})"
        return f"{num}/{den}"

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"ParamScalar({self.to_str()})"


def _eval_poly(poly, vals):
    total = 0.0
    for monom, coeff in poly.items():
        term = float(coeff)
        for v, e in zip(vals, monom):
            if e:
                term *= v ** e
        total += term
    return total


def _format_monomial(monom, names):
    parts = []
    for name, e in zip(names, monom):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def _format_poly(poly, names):
    if not poly:
        return "0"
    out = []
    for monom, coeff in poly.terms():
        coeff = QQ(coeff)
        mono = _format_monomial(monom, names)
        neg = coeff < 0
        mag = -coeff if neg else coeff
        if not mono:
            body = format_rational(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{format_rational(mag)}*{mono}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)
