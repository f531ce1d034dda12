"""Canonical exp-polynomials.

An :class:`ExpPoly` is a finite sum of terms ``c * x**m * exp(<f, x>)`` where
``c`` is a :class:`~solitonforge.scalar.ParamScalar`, ``m`` a multi-index over
the coordinates and ``f`` a vector of exact rationals.  Distinct ``(m, f)``
keys are linearly independent over the parameter field, so a canonical term
list is empty exactly when the function is identically zero.
"""

import math
from functools import lru_cache

from .errors import ContextError, DivisionByZero
from .scalar import ParamScalar, format_rational, param_space, to_rational


class Context:
    """Coordinate names plus the parameter space; interned via :func:`context`."""

    def __init__(self, coords, space):
        self.coords = coords
        self.space = space
        self.dim = len(coords)
        self._index = {c: i for i, c in enumerate(coords)}
        self.zero_mono = (0,) * self.dim
        self.zero_freq = (to_rational(0),) * self.dim

    @property
    def params(self):
        return self.space.params

    @property
    def signs(self):
        return self.space.signs

    def coord_index(self, name):
        return self._index[name]

    def __repr__(self):
        return f"Context(coords={self.coords!r}, params={self.params!r})"

    def __reduce__(self):
        return (context, (self.coords, self.params, self.signs))


@lru_cache(maxsize=None)
def _context(coords, params, signs):
    return Context(coords, param_space(params, signs))


def context(coords, params=(), signs=()):
    coords = tuple(coords)
    params = tuple(params)
    if len(set(coords)) != len(coords):
        raise ContextError(f"duplicate coordinate names in {coords!r}")
    clash = set(coords) & set(params)
    if clash:
        raise ContextError(f"names used as both coordinate and parameter: {sorted(clash)}")
    return _context(coords, params, frozenset(signs))


def _sort_key(key):
    mono, freq = key
    return (freq, sum(mono), mono)


class ExpPoly:
    __slots__ = ("ctx", "terms", "_map", "_hash")

    def __init__(self, ctx, mapping):
        # mapping: (mono, freq) -> nonzero ParamScalar; callers guarantee canonicity
        self.ctx = ctx
        self._map = mapping
        self.terms = tuple((k[0], k[1], mapping[k]) for k in sorted(mapping, key=_sort_key))
        self._hash = None

    @classmethod
    def from_terms(cls, ctx, items):
        """Build from ``(mono, freq, coeff)`` triples, combining duplicate keys."""
        acc = {}
        space = ctx.space
        for mono, freq, coeff in items:
            if not isinstance(coeff, ParamScalar):
                coeff = space.const(coeff)
            elif coeff.space is not space:
                raise ContextError("coefficient from a different parameter space")
            key = (tuple(mono), tuple(to_rational(f) for f in freq))
            if len(key[0]) != ctx.dim or len(key[1]) != ctx.dim:
                raise ContextError("term key length does not match the dimension")
            if key in acc:
                acc[key] = acc[key] + coeff
            else:
                acc[key] = coeff
        return cls(ctx, {k: v for k, v in acc.items() if not v.is_zero()})

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, ctx):
        return cls(ctx, {})

    @classmethod
    def const(cls, ctx, value):
        if not isinstance(value, ParamScalar):
            value = ctx.space.const(value)
        if value.is_zero():
            return cls(ctx, {})
        return cls(ctx, {(ctx.zero_mono, ctx.zero_freq): value})

    @classmethod
    def param(cls, ctx, name):
        return cls.const(ctx, ctx.space.symbol(name))

    @classmethod
    def coord(cls, ctx, which):
        i = which if isinstance(which, int) else ctx.coord_index(which)
        mono = tuple(1 if j == i else 0 for j in range(ctx.dim))
        return cls(ctx, {(mono, ctx.zero_freq): ctx.space.one()})

    @classmethod
    def exp(cls, ctx, freq):
        freq = tuple(to_rational(f) for f in freq)
        if len(freq) != ctx.dim:
            raise ContextError("frequency length does not match the dimension")
        return cls(ctx, {(ctx.zero_mono, freq): ctx.space.one()})

    @classmethod
    def term(cls, ctx, mono, freq, coeff=1):
        return cls.from_terms(ctx, [(mono, freq, coeff)])

    # -- basic protocol ---------------------------------------------------

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def keys(self):
        return [(m, f) for m, f, _ in self.terms]

    def coeff(self, mono, freq):
        key = (tuple(mono), tuple(to_rational(f) for f in freq))
        return self._map.get(key, self.ctx.space.zero())

    def is_zero(self):
        return not self._map

    def __bool__(self):
        return bool(self._map)

    def __eq__(self, other):
        if isinstance(other, ExpPoly):
            return self.ctx is other.ctx and self._map == other._map
        if isinstance(other, (int, ParamScalar)) and not isinstance(other, bool):
            return self == self._coerce(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.terms)
        return self._hash

    def frequencies(self):
        return {f for _, f, _ in self.terms}

    def degree(self):
        return max((sum(m) for m, _, _ in self.terms), default=0)

    def free_params(self):
        out = set()
        for _, _, c in self.terms:
            out |= c.free_params()
        return frozenset(out)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ExpPoly):
            if other.ctx is not self.ctx:
                raise ContextError("expressions live in different contexts")
            return other
        if isinstance(other, ParamScalar):
            if other.space is not self.ctx.space:
                raise ContextError("scalar from a different parameter space")
            return ExpPoly.const(self.ctx, other)
        return ExpPoly.const(self.ctx, to_rational(other))

    def __add__(self, other):
        other = self._coerce(other)
        if not other._map:
            return self
        if not self._map:
            return other
        acc = dict(self._map)
        for key, c in other._map.items():
            if key in acc:
                s = acc[key] + c
                if s.is_zero():
                    del acc[key]
                else:
                    acc[key] = s
            else:
                acc[key] = c
        return ExpPoly(self.ctx, acc)

    __radd__ = __add__

    def __neg__(self):
        return ExpPoly(self.ctx, {k: -c for k, c in self._map.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, s):
        if not isinstance(s, ParamScalar):
            s = self.ctx.space.const(s)
        elif s.space is not self.ctx.space:
            raise ContextError("scalar from a different parameter space")
        if s.is_zero():
            return ExpPoly(self.ctx, {})
        if s.is_one():
            return self
        return ExpPoly(self.ctx, {k: c * s for k, c in self._map.items()})

    def __mul__(self, other):
        if not isinstance(other, ExpPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if other.ctx is not self.ctx:
            raise ContextError("expressions live in different contexts")
        acc = {}
        for (m1, f1), c1 in self._map.items():
            for (m2, f2), c2 in other._map.items():
                key = (
                    tuple(a + b for a, b in zip(m1, m2)),
                    tuple(a + b for a, b in zip(f1, f2)),
                )
                c = c1 * c2
                if key in acc:
                    acc[key] = acc[key] + c
                else:
                    acc[key] = c
        return ExpPoly(self.ctx, {k: v for k, v in acc.items() if not v.is_zero()})

    __rmul__ = __mul__

    def is_unit(self):
        if len(self.terms) != 1:
            return False
        mono, _, c = self.terms[0]
        return not any(mono) and c.is_unit()

    def inverse(self):
        """Inverse of a unit ``c * exp(<f, x>)``."""
        if not self.is_unit():
            if not self._map:
                raise DivisionByZero("division by the zero expression")
            raise DivisionByZero(f"{self.to_str()} is not invertible in the exp-polynomial ring")
        mono, freq, c = self.terms[0]
        return ExpPoly(self.ctx, {(mono, tuple(-f for f in freq)): c.inverse()})

    def __truediv__(self, other):
        if isinstance(other, ExpPoly):
            return self * other.inverse()
        if not isinstance(other, ParamScalar):
            other = self.ctx.space.const(other)
        return self.scale(other.inverse())

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers")
        if n < 0:
            return self.inverse() ** (-n)
        result = ExpPoly.const(self.ctx, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def diff(self, i):
        if not 0 <= i < self.ctx.dim:
            raise IndexError(f"coordinate index {i} out of range for dimension {self.ctx.dim}")
        acc = {}
        for (mono, freq), c in self._map.items():
            if mono[i]:
                m = list(mono)
                m[i] -= 1
                key = (tuple(m), freq)
                val = c * mono[i]
                acc[key] = acc[key] + val if key in acc else val
            if freq[i]:
                key = (mono, freq)
                val = c * freq[i]
                acc[key] = acc[key] + val if key in acc else val
        return ExpPoly(self.ctx, {k: v for k, v in acc.items() if not v.is_zero()})

    # -- substitution / evaluation ---------------------------------------

    def subs_param(self, name, value):
        acc = {}
        for key, c in self._map.items():
            v = c.subs(name, value)
            if not v.is_zero():
                acc[key] = v
        return ExpPoly(self.ctx, acc)

    def map_coeffs(self, fn):
        acc = {}
        for key, c in self._map.items():
            v = fn(c)
            if not v.is_zero():
                acc[key] = v
        return ExpPoly(self.ctx, acc)

    def lift(self, ctx):
        """Re-home into a context with the same coordinates and more parameters."""
        if ctx is self.ctx:
            return self
        if ctx.coords != self.ctx.coords:
            raise ContextError("cannot lift across different coordinates")
        return ExpPoly(ctx, {k: c.lift(ctx.space) for k, c in self._map.items()})

    def eval(self, point, params=None):
        """IEEE double value at ``point``; ``params`` maps parameter names to numbers."""
        params = params or {}
        if len(point) != self.ctx.dim:
            raise ValueError(f"point has {len(point)} coordinates, expected {self.ctx.dim}")
        total = 0.0
        for mono, freq, c in self.terms:
            val = c.evaluate(params)
            for x, m in zip(point, mono):
                if m:
                    val *= x ** m
            arg = sum(float(f) * x for f, x in zip(freq, point) if f)
            total += val * math.exp(arg)
        return total

    # -- printing ---------------------------------------------------------

    def to_str(self):
        if not self.terms:
            return "0"
        names = self.ctx.coords
        out = []
        for mono, freq, c in self.terms:
            factors = []
            for name, e in zip(names, mono):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            if any(freq):
                factors.append(f"exp({format_linear(freq, names)})")
            body = "*".join(factors)
            ctext = c.to_str()
            if not body:
                text = ctext
            elif c.is_one():
                text = body
            elif c == -1:
                text = f"-{body}"
            else:
                text = f"{ctext}*{body}"
            if not out:
                out.append(text)
            elif text.startswith("-"):
                out.append(f" - {text[1:]}")
            else:
                out.append(f" + {text}")
        return "".join(out)

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"ExpPoly({self.to_str()})"


def format_linear(freq, names):
    """Render a rational linear form such as ``-x + 1/2*y``."""
    out = []
    for name, f in zip(names, freq):
        if not f:
            continue
        neg = f < 0
        mag = -f if neg else f
        body = name if mag == 1 else f"{format_rational(mag)}*{name}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out) or "0"
