"""Ricci-soliton residual, verification, ansatz solver and gradient test.

The solver replaces step-by-step PDE integration by coefficient matching: every
component of X is expanded in a finite basis of shapes ``x**m * exp(<f, x>)``,
the residual ``L_X g + rho - lambda*g`` is collected by term key in each tensor
slot, and the resulting affine system is reduced exactly over the parameter
field.  Solutions are therefore complete *within the ansatz* only.
"""

import logging
import random
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product

from .errors import DivisionByZero, NonAffineResidual, SolitonForgeError
from .expr import ExpPoly
from .geometry import (
    SymTensor,
    VectorField,
    curvature,
    exterior_derivative,
    lie_derivative_metric,
    lower,
)
from .scalar import ParamScalar, to_rational

log = logging.getLogger(__name__)

LAMBDA = "lambda"


class NonUnitPivot(SolitonForgeError):
    """Every candidate pivot of a row is a zero divisor of the sign algebra."""


# -- residual / verification ---------------------------------------------


def residual(m, X, lam, rho=None):
    """L_X g + rho - lam*g as a SymTensor."""
    if rho is None:
        rho = curvature(m).ricci
    if not hasattr(lam, "space"):
        lam = m.ctx.space.const(lam)
    g = SymTensor(m.metric)
    return lie_derivative_metric(m, X) + rho - g.scale(lam)


def verify(m, X, lam, rho=None):
    """(True, residual) when (g, X, lam) is a Ricci soliton identically."""
    res = residual(m, X, lam, rho)
    return res.is_zero(), res


def classify(lam, params=None):
    """'shrinking', 'steady' or 'expanding' according to the sign of lam."""
    params = params or {}
    value = lam
    exact = True
    for name in lam.free_params():
        if name not in params:
            raise KeyError(f"classification needs a value for {name!r}")
        try:
            q = to_rational(params[name])
        except TypeError:
            exact = False
            break
        value = value.subs(name, q)
    if exact:
        q = value.const_value()
        sign = (q > 0) - (q < 0)
    else:
        x = lam.evaluate(params)
        sign = (x > 0) - (x < 0)
    return {1: "shrinking", 0: "steady", -1: "expanding"}[sign]


# -- ansatz ---------------------------------------------------------------


@dataclass(frozen=True)
class Ansatz:
    """Shape functions per component; ``lam`` is None when lambda is unknown."""

    basis: tuple  # basis[k] = tuple of (mono, freq)
    lam: object = None

    def columns(self):
        cols = [(k, mono, freq) for k, comp in enumerate(self.basis) for mono, freq in comp]
        if self.lam is None:
            cols.append(LAMBDA)
        return cols

    def size(self):
        return sum(len(c) for c in self.basis)


def monomials(dim, degree):
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(dim), d):
            m = [0] * dim
            for i in combo:
                m[i] += 1
            out.append(tuple(m))
    return sorted(set(out), key=lambda m: (sum(m), m))


def metric_frequencies(m):
    return sorted({f for row in m.metric for e in row for f in e.frequencies()})


def ansatz_frequencies(m, freq_depth=2):
    zero = m.ctx.zero_freq
    base = {zero}
    for f in metric_frequencies(m):
        base.add(f)
        base.add(tuple(-a for a in f))
    freqs = {zero}
    for combo in combinations_with_replacement(sorted(base), freq_depth):
        freqs.add(tuple(sum(parts) for parts in zip(zero, *combo)))
    return sorted(freqs)


def default_ansatz(m, degree=2, freq_depth=2, lam=None):
    """All monomials of degree <= ``degree`` times exp(f) for the frequencies
    {0} U {+-f in g} and their sums of up to ``freq_depth`` terms."""
    monos = monomials(m.dim, degree)
    freqs = ansatz_frequencies(m, freq_depth)
    comp = tuple((mono, f) for f in freqs for mono in monos)
    return Ansatz(basis=tuple(comp for _ in range(m.dim)), lam=lam)


def shape(m, mono, freq, k):
    """The vector field with single component ``x**mono * exp(<freq, x>)`` in slot k."""
    comps = [ExpPoly.zero(m.ctx) for _ in range(m.dim)]
    comps[k] = ExpPoly.term(m.ctx, mono, freq)
    return VectorField(comps)


# -- linear system --------------------------------------------------------


@dataclass
class Row:
    slot: tuple  # (i, j), i <= j, 0-based
    key: tuple  # (mono, freq)
    coeffs: dict  # column index -> ParamScalar
    rhs: object  # ParamScalar

    def describe(self, m, columns):
        i, j = self.slot
        mono, freq = self.key
        shape_text = ExpPoly.term(m.ctx, mono, freq).to_str()
        return f"slot ({i + 1},{j + 1}), coefficient of {shape_text}"


@dataclass
class LinearSystem:
    model: object
    ansatz: Ansatz
    columns: list
    rows: list

    def unknown_count(self):
        return len(self.columns)

    def equation_text(self, row):
        parts = []
        for c in sorted(row.coeffs):
            parts.append(f"({row.coeffs[c].to_str()})*{column_name(self.model, self.columns[c])}")
        lhs = " + ".join(parts) if parts else "0"
        return f"{lhs} = {row.rhs.to_str()}"


def column_name(m, col):
    if col == LAMBDA:
        return LAMBDA
    k, mono, freq = col
    return f"c[{k + 1}; {ExpPoly.term(m.ctx, mono, freq).to_str()}]"


def assemble_system(m, ansatz, rho=None, check=True):
    """Collect the residual by (slot, key); each row is affine in the unknowns."""
    if ansatz.size() == 0 and ansatz.lam is not None:
        raise ValueError("empty ansatz")
    space = m.ctx.space
    if rho is None:
        rho = curvature(m).ricci
    columns = ansatz.columns()
    n = m.dim
    rows = {}

    def row_for(slot, key):
        r = rows.get((slot, key))
        if r is None:
            r = rows[(slot, key)] = Row(slot, key, {}, space.zero())
        return r

    for c, col in enumerate(columns):
        if col == LAMBDA:
            tensor = SymTensor(m.metric).scale(-1)
        else:
            k, mono, freq = col
            tensor = lie_derivative_metric(m, shape(m, mono, freq, k))
        for i in range(n):
            for j in range(i, n):
                for tmono, tfreq, coeff in tensor[i][j].terms:
                    r = row_for((i, j), (tmono, tfreq))
                    r.coeffs[c] = coeff
    constant = rho
    if ansatz.lam is not None:
        constant = rho - SymTensor(m.metric).scale(ansatz.lam)
    for i in range(n):
        for j in range(i, n):
            for tmono, tfreq, coeff in constant[i][j].terms:
                r = row_for((i, j), (tmono, tfreq))
                r.rhs = -coeff
    system = LinearSystem(m, ansatz, columns, [rows[k] for k in sorted(rows, key=_row_order)])
    if check:
        _check_affine(system, rho)
    return system


def _row_order(item):
    (i, j), (mono, freq) = item
    return (i, j, freq, sum(mono), mono)


def _check_affine(system, rho):
    """Compare the collected rows against a direct residual at random values."""
    m = system.model
    space = m.ctx.space
    rng = random.Random(20240611)
    values = [space.const(rng.randint(-5, 5)) for _ in system.columns]
    lam = system.ansatz.lam
    comps = [ExpPoly.zero(m.ctx) for _ in range(m.dim)]
    for c, col in enumerate(system.columns):
        if col == LAMBDA:
            lam = values[c]
        else:
            k, mono, freq = col
            comps[k] = comps[k] + ExpPoly.term(m.ctx, mono, freq, values[c])
    direct = residual(m, VectorField(comps), lam, rho)
    n = m.dim
    collected = [[[] for _ in range(n)] for _ in range(n)]
    for row in system.rows:
        val = -row.rhs
        for c, a in row.coeffs.items():
            val = val + a * values[c]
        collected[row.slot[0]][row.slot[1]].append((*row.key, val))
    for i in range(n):
        for j in range(i, n):
            if ExpPoly.from_terms(m.ctx, collected[i][j]) != direct[i][j]:
                raise NonAffineResidual(f"collected rows disagree with the residual in slot ({i + 1},{j + 1})")


# -- elimination ----------------------------------------------------------


@dataclass
class Infeasible:
    """``0 = rhs`` with rhs != 0 after reduction; ``source`` names the original row."""

    certificate_rhs: object
    source: Row
    source_text: str
    location: str

    feasible = False

    def certificate(self):
        return f"0 = {self.certificate_rhs.to_str()}"


@dataclass
class SolitonSolution:
    model: object
    ansatz: Ansatz
    particular: VectorField
    lam: object  # ParamScalar, or None when lambda is not determined
    homogeneous: list  # VectorField directions
    homogeneous_lam: list  # lambda component of each direction
    free_columns: list
    pivot_denominators: list = field(default_factory=list)
    rank: int = 0
    row_count: int = 0

    feasible = True

    @property
    def lambda_forced(self):
        return self.lam is not None and all(c.is_zero() for c in self.homogeneous_lam)

    @property
    def free_count(self):
        return len(self.homogeneous)

    def general(self, prefix="C"):
        """Model extended by constants ``C1..Cn`` and the general member of the family."""
        names = [f"{prefix}{i + 1}" for i in range(len(self.homogeneous))]
        taken = set(self.model.ctx.params) | set(self.model.ctx.coords)
        if taken & set(names):
            raise ValueError(f"constant names {sorted(taken & set(names))} already in use")
        ext = self.model.extend(names)
        ctx = ext.ctx
        comps = [c.lift(ctx) for c in self.particular.comps]
        for name, h in zip(names, self.homogeneous):
            sym = ctx.space.symbol(name)
            comps = [a + b.lift(ctx).scale(sym) for a, b in zip(comps, h.comps)]
        return ext, VectorField(comps)


def _field_from_vector(m, columns, vec):
    comps = [ExpPoly.zero(m.ctx) for _ in range(m.dim)]
    lam = m.ctx.space.zero()
    for c, val in vec.items():
        if val.is_zero():
            continue
        col = columns[c]
        if col == LAMBDA:
            lam = val
        else:
            k, mono, freq = col
            comps[k] = comps[k] + ExpPoly.term(m.ctx, mono, freq, val)
    return VectorField(comps), lam


class Eliminator:
    """Incremental Gauss-Jordan elimination over the parameter field.

    Rows are sparse dicts.  Every stored pivot row is normalized (pivot 1) and
    fully reduced: a pivot column appears in no other stored row.
    """

    def __init__(self, ncols):
        self.ncols = ncols
        self.pivots = {}  # pivot column -> [coeffs, rhs]
        self.occurs = {}  # column -> set of pivot columns whose row contains it
        self.denominators = []

    def _reduce(self, coeffs, rhs):
        coeffs = dict(coeffs)
        for p in [c for c in coeffs if c in self.pivots]:
            factor = coeffs.pop(p)
            prow, prhs = self.pivots[p]
            for c, a in prow.items():
                if c == p:
                    continue
                v = coeffs.get(c)
                v = -(factor * a) if v is None else v - factor * a
                if v.is_zero():
                    coeffs.pop(c, None)
                else:
                    coeffs[c] = v
            rhs = rhs - factor * prhs
        return coeffs, rhs

    def _choose(self, coeffs):
        cols = sorted(coeffs)
        for c in cols:
            if coeffs[c].is_const:
                return c
        for c in cols:
            if coeffs[c].is_unit():
                return c
        raise NonUnitPivot("no invertible pivot in row")

    def add(self, coeffs, rhs):
        """Insert a row; returns the reduced rhs when the row was inconsistent."""
        coeffs, rhs = self._reduce(coeffs, rhs)
        if not coeffs:
            return None if rhs.is_zero() else rhs
        p = self._choose(coeffs)
        pv = coeffs[p]
        if not pv.is_const:
            self.denominators.append(pv)
        inv = pv.inverse()
        coeffs = {c: (a * inv if c != p else a.space.one()) for c, a in coeffs.items()}
        rhs = rhs * inv
        # eliminate p from stored rows
        for q in list(self.occurs.get(p, ())):
            qrow, qrhs = self.pivots[q]
            factor = qrow.pop(p)
            for c, a in coeffs.items():
                if c == p:
                    continue
                v = qrow.get(c)
                v = -(factor * a) if v is None else v - factor * a
                if v.is_zero():
                    qrow.pop(c, None)
                    self.occurs.get(c, set()).discard(q)
                else:
                    qrow[c] = v
                    self.occurs.setdefault(c, set()).add(q)
            self.pivots[q][1] = qrhs - factor * rhs
        self.occurs.pop(p, None)
        self.pivots[p] = [coeffs, rhs]
        for c in coeffs:
            if c != p:
                self.occurs.setdefault(c, set()).add(p)
        return None


def solve(system):
    """Exact affine solution set of the assembled system, or :class:`Infeasible`."""
    m = system.model
    space = m.ctx.space
    elim = Eliminator(len(system.columns))
    for row in system.rows:
        bad = elim.add(row.coeffs, row.rhs)
        if bad is not None:
            return Infeasible(
                certificate_rhs=bad,
                source=row,
                source_text=system.equation_text(row),
                location=row.describe(m, system.columns),
            )
    columns = system.columns
    free = [c for c in range(len(columns)) if c not in elim.pivots]
    part = {p: rhs for p, (_, rhs) in elim.pivots.items()}
    particular, lam = _field_from_vector(m, columns, part)
    lam_pinned = system.ansatz.lam
    lam_col = columns.index(LAMBDA) if LAMBDA in columns else None
    homog, homog_lam = [], []
    for f in free:
        vec = {f: space.one()}
        for p, (coeffs, _) in elim.pivots.items():
            a = coeffs.get(f)
            if a is not None:
                vec[p] = -a
        h, hl = _field_from_vector(m, columns, vec)
        homog.append(h)
        homog_lam.append(hl)
    if lam_col is None:
        lam = lam_pinned
    elif lam_col not in elim.pivots:
        lam = None
    log.debug("solve: %d rows, %d unknowns, rank %d", len(system.rows), len(columns), len(elim.pivots))
    return SolitonSolution(
        model=m,
        ansatz=system.ansatz,
        particular=particular,
        lam=lam,
        homogeneous=homog,
        homogeneous_lam=homog_lam,
        free_columns=[columns[f] for f in free],
        pivot_denominators=_dedupe(elim.denominators),
        rank=len(elim.pivots),
        row_count=len(system.rows),
    )


def _dedupe(scalars):
    """Distinct monic irreducible factors whose vanishing would void a pivot."""
    found = {}
    for s in scalars:
        space = s.space
        for poly in s.numer_denom:
            if poly.is_ground:
                continue
            for factor, _ in poly.factor_list()[1]:
                factor = factor.monic()
                key = str(factor.as_expr())
                if key not in found:
                    found[key] = ParamScalar._from_frac(space, space.field.new(factor, space.field.ring.one))
    return [found[k] for k in sorted(found, key=lambda k: (len(k), k))]


def solve_soliton(m, degree=2, freq_depth=2, lam=None):
    ansatz = default_ansatz(m, degree, freq_depth, lam)
    return solve(assemble_system(m, ansatz))


# -- span utilities (used to compare solution families) -------------------


def _field_rows(fields):
    """Linear equations for sum_a c_a * fields[a] component-wise by key."""
    table = {}
    for a, f in enumerate(fields):
        for k, comp in enumerate(f.comps):
            for mono, freq, coeff in comp.terms:
                table.setdefault((k, mono, freq), {})[a] = coeff
    return table


def in_span(vec, basis):
    """Coefficients c with vec = sum c_i basis_i (verified with is_zero), or None."""
    ctx = vec.comps[0].ctx
    space = ctx.space
    table = _field_rows(list(basis))
    target = _field_rows([vec])
    keys = sorted(set(table) | set(target), key=lambda t: (t[0], t[2], sum(t[1]), t[1]))
    elim = Eliminator(len(basis))
    for key in keys:
        rhs = target.get(key, {}).get(0, space.zero())
        try:
            bad = elim.add(table.get(key, {}), rhs)
        except NonUnitPivot:
            return None
        if bad is not None:
            return None
    coeffs = [space.zero()] * len(basis)
    for p, (_, rhs) in elim.pivots.items():
        coeffs[p] = rhs
    combo = [ExpPoly.zero(ctx) for _ in vec.comps]
    for c, b in zip(coeffs, basis):
        combo = [x + y.scale(c) for x, y in zip(combo, b.comps)]
    if not all((x - y).is_zero() for x, y in zip(vec.comps, combo)):
        return None
    return coeffs


def affine_generators(X, names):
    """Split a field affine in the constants ``names`` into (base, [directions])."""
    zeroed = X
    for n in names:
        zeroed = zeroed.map(lambda e, n=n: e.subs_param(n, 0))
    dirs = []
    for n in names:
        one = X
        for other in names:
            one = one.map(lambda e, o=other, v=(1 if other == n else 0): e.subs_param(o, v))
        dirs.append(one - zeroed)
    return zeroed, dirs


def same_family(sol, X, names, lam):
    """Mutual containment of the affine family X(names) and the solver's solution set.

    Returns a dict of booleans: ``lambda``, ``family_in_solution``,
    ``solution_in_family`` and the dimensions compared.
    """
    ctx = sol.model.ctx
    base, dirs = affine_generators(X, names)
    base = base.map(lambda e: _drop_to(e, ctx))
    dirs = [d.map(lambda e: _drop_to(e, ctx)) for d in dirs]
    lam_ok = sol.lam is not None and lam is not None and sol.lam == _drop_scalar(lam, ctx.space)
    diff = VectorField([a - b for a, b in zip(base.comps, sol.particular.comps)])
    family_in = in_span(diff, sol.homogeneous) is not None and all(
        in_span(d, sol.homogeneous) is not None for d in dirs
    )
    solution_in = all(in_span(h, dirs) is not None for h in sol.homogeneous) and (
        in_span(VectorField([-c for c in diff.comps]), dirs) is not None
    )
    return {
        "lambda": lam_ok and sol.lambda_forced,
        "family_in_solution": family_in,
        "solution_in_family": solution_in,
        "family_dim": len(dirs),
        "solution_dim": sol.free_count,
    }


def _drop_scalar(c, space):
    if c.space is space:
        return c
    if c.is_const:
        return space.const(c.const_value())
    n, d = c.numer_denom
    return type(c)._from_frac(space, c.space.field.new(n, d).set_field(space.field))


def _drop_to(e, ctx):
    """Move an expression with no dependence on extra parameters into ``ctx``."""
    if e.ctx is ctx:
        return e
    extra = set(e.ctx.params) - set(ctx.params)
    if e.free_params() & extra:
        raise ValueError("expression still depends on constants outside the target context")
    return ExpPoly.from_terms(ctx, [(mono, freq, _drop_scalar(c, ctx.space)) for mono, freq, c in e.terms])


# -- gradient test --------------------------------------------------------


@dataclass(frozen=True)
class GradientVerdict:
    gradient: bool
    witness_index: tuple = None  # (i, j), 0-based
    witness: ExpPoly = None

    @property
    def tag(self):
        return "Gradient" if self.gradient else "NotGradient"


def gradient_check(m, X):
    """X is a gradient on R^n iff the 1-form X^flat is closed."""
    domega = exterior_derivative(lower(m, X))
    for i in range(m.dim):
        for j in range(i + 1, m.dim):
            w = domega[i][j]
            if not w.is_zero():
                return GradientVerdict(False, (i, j), w)
    return GradientVerdict(True)


__all__ = [
    "Ansatz",
    "GradientVerdict",
    "Infeasible",
    "LinearSystem",
    "NonUnitPivot",
    "SolitonSolution",
    "assemble_system",
    "classify",
    "default_ansatz",
    "gradient_check",
    "in_span",
    "residual",
    "same_family",
    "solve",
    "solve_soliton",
    "verify",
    "DivisionByZero",
]
