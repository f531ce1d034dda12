"""Levi-Civita connection, curvature and related operators on coordinate metrics.

Index conventions (0-based in code):

* ``gamma[k][i][j]`` is the Christoffel symbol with upper index ``k``, so that
  ``nabla_{d_i} d_j = sum_k gamma[k][i][j] d_k``.
* ``slices[i][j]`` is the matrix of ``R(d_i, d_j) = [nabla_i, nabla_j]``; its
  entry ``[l][k]`` is the ``d_l`` component of ``R(d_i, d_j) d_k`` (column k is
  the image of ``d_k``).
* ``ricci[j][k] = sum_i slices[i][j][i][k]``, i.e. rho(X, Y) = tr(Z -> R(Z, X) Y).
"""

from dataclasses import dataclass, field
from itertools import permutations

from .errors import AsymmetryDetected, ContextError, DivisionByZero, NonMonomialDeterminant
from .expr import ExpPoly, context


def _zeros(ctx, *shape):
    if len(shape) == 1:
        return [ExpPoly.zero(ctx) for _ in range(shape[0])]
    return [_zeros(ctx, *shape[1:]) for _ in range(shape[0])]


def _freeze(arr):
    if isinstance(arr, list):
        return tuple(_freeze(a) for a in arr)
    return arr


def _all_zero(arr):
    if isinstance(arr, ExpPoly):
        return arr.is_zero()
    return all(_all_zero(a) for a in arr)


class _Components:
    """Shared behaviour of the small tensor wrappers."""

    kind = "tensor"

    def is_zero(self):
        return _all_zero(self.comps)

    def __getitem__(self, idx):
        return self.comps[idx]

    def __len__(self):
        return len(self.comps)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.comps == other.comps

    def __hash__(self):
        return hash((self.kind, self.comps))

    def map(self, fn):
        def rec(a):
            return fn(a) if isinstance(a, ExpPoly) else tuple(rec(b) for b in a)

        return type(self)(rec(self.comps))

    def __add__(self, other):
        def rec(a, b):
            return a + b if isinstance(a, ExpPoly) else tuple(rec(x, y) for x, y in zip(a, b))

        return type(self)(rec(self.comps, other.comps))

    def __sub__(self, other):
        def rec(a, b):
            return a - b if isinstance(a, ExpPoly) else tuple(rec(x, y) for x, y in zip(a, b))

        return type(self)(rec(self.comps, other.comps))

    def __neg__(self):
        return self.map(lambda e: -e)

    def scale(self, s):
        return self.map(lambda e: e.scale(s))

    def eval(self, point, params):
        def rec(a):
            return a.eval(point, params) if isinstance(a, ExpPoly) else [rec(b) for b in a]

        return rec(self.comps)

    def __repr__(self):
        def rec(a):
            return a.to_str() if isinstance(a, ExpPoly) else [rec(b) for b in a]

        return f"{type(self).__name__}({rec(self.comps)!r})"


class VectorField(_Components):
    kind = "contravariant-1"

    def __init__(self, comps):
        self.comps = tuple(comps)


class OneForm(_Components):
    kind = "covariant-1"

    def __init__(self, comps):
        self.comps = tuple(comps)


class SymTensor(_Components):
    kind = "covariant-symmetric-2"

    def __init__(self, comps):
        self.comps = tuple(tuple(r) for r in comps)

    def asymmetric_entries(self):
        n = len(self.comps)
        return [(i, j) for i in range(n) for j in range(i + 1, n) if self.comps[i][j] != self.comps[j][i]]


class TwoForm(_Components):
    kind = "covariant-antisymmetric-2"

    def __init__(self, comps):
        self.comps = tuple(tuple(r) for r in comps)

    def nonzero_entries(self):
        n = len(self.comps)
        return [(i, j) for i in range(n) for j in range(i + 1, n) if not self.comps[i][j].is_zero()]


@dataclass(frozen=True, eq=False)
class SpaceModel:
    """A coordinate chart R^n with a symmetric metric of exp-polynomials.

    The chart is all of R^n (simply connected), which the gradient test relies on.
    """

    name: str
    ctx: object
    metric: tuple
    constraints: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    solitons: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.ctx.dim
        if len(self.metric) != n or any(len(r) != n for r in self.metric):
            raise ContextError("metric shape does not match the dimension")
        for i in range(n):
            for j in range(i):
                if self.metric[i][j] != self.metric[j][i]:
                    raise AsymmetryDetected(f"metric entry ({i + 1},{j + 1}) is not symmetric")

    @property
    def dim(self):
        return self.ctx.dim

    @property
    def coords(self):
        return self.ctx.coords

    @property
    def params(self):
        return self.ctx.params

    @property
    def g(self):
        return self.metric

    def known_solutions(self):
        return {name: (self.fields[name], lam) for name, lam in self.solitons.items()}

    def extend(self, params, constraint="const"):
        """Same model in a context with extra parameters appended."""
        params = [p for p in params if p not in self.ctx.params]
        if not params:
            return self
        ctx = context(self.ctx.coords, self.ctx.params + tuple(params), self.ctx.signs)
        constraints = dict(self.constraints)
        constraints.update({p: (constraint,) for p in params})
        return SpaceModel(
            name=self.name,
            ctx=ctx,
            metric=tuple(tuple(e.lift(ctx) for e in row) for row in self.metric),
            constraints=constraints,
            fields={k: v.map(lambda e: e.lift(ctx)) for k, v in self.fields.items()},
            scalars={k: v.lift(ctx) for k, v in self.scalars.items()},
            solitons={k: v.lift(ctx.space) for k, v in self.solitons.items()},
        )

    def pin(self, name, value):
        """Substitute a rational value for parameter ``name`` everywhere.

        Known solutions whose data cannot be evaluated at the value (a vanishing
        denominator) are dropped.
        """
        metric = tuple(tuple(e.subs_param(name, value) for e in row) for row in self.metric)
        fields, solitons, scalars = {}, {}, {}
        for fname, vf in self.fields.items():
            try:
                fields[fname] = vf.map(lambda e: e.subs_param(name, value))
            except DivisionByZero:
                continue
        for fname, lam in self.solitons.items():
            if fname not in fields:
                continue
            try:
                solitons[fname] = lam.subs(name, value)
            except DivisionByZero:
                fields.pop(fname)
        for sname, s in self.scalars.items():
            try:
                scalars[sname] = s.subs_param(name, value)
            except DivisionByZero:
                continue
        return SpaceModel(
            name=f"{self.name}[{name}={value}]",
            ctx=self.ctx,
            metric=metric,
            constraints=self.constraints,
            fields=fields,
            scalars=scalars,
            solitons=solitons,
        )


def _check_model_field(m, X):
    if any(c.ctx is not m.ctx for c in X.comps) or len(X.comps) != m.dim:
        raise ContextError("vector field does not belong to the model's context")


def determinant(matrix):
    n = len(matrix)
    ctx = matrix[0][0].ctx
    total = ExpPoly.zero(ctx)
    for perm in permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = ExpPoly.const(ctx, sign)
        for i, p in enumerate(perm):
            entry = matrix[i][p]
            if entry.is_zero():
                break
            term = term * entry
        else:
            total = total + term
    return total


def _minor(matrix, row, col):
    return [[matrix[i][j] for j in range(len(matrix)) if j != col] for i in range(len(matrix)) if i != row]


def inverse_metric(m):
    """Exact inverse via adjugate / det; requires det(g) to be a ring unit."""
    g = m.metric
    n = m.dim
    det = determinant(g)
    if not det.is_unit():
        raise NonMonomialDeterminant(
            f"det(g) = {det.to_str()} is not a single invertible exponential term"
        )
    inv_det = det.inverse()
    if n == 1:
        return ((inv_det,),)
    out = _zeros(m.ctx, n, n)
    for i in range(n):
        for j in range(n):
            cof = determinant(_minor(g, j, i))
            if (i + j) % 2:
                cof = -cof
            out[i][j] = cof * inv_det
    return _freeze(out)


def christoffel(m, ginv=None):
    """Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
    n = m.dim
    g = m.metric
    ginv = ginv if ginv is not None else inverse_metric(m)
    dg = [[[g[a][b].diff(c) for c in range(n)] for b in range(n)] for a in range(n)]
    # first kind: [ij, l]
    first = _zeros(m.ctx, n, n, n)
    for i in range(n):
        for j in range(i, n):
            for l in range(n):
                val = (dg[j][l][i] + dg[i][l][j] - dg[i][j][l]).scale(m.ctx.space.const("1/2"))
                first[i][j][l] = val
                first[j][i][l] = val
    gamma = _zeros(m.ctx, n, n, n)
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = ExpPoly.zero(m.ctx)
                for l in range(n):
                    if not ginv[k][l].is_zero() and not first[i][j][l].is_zero():
                        acc = acc + ginv[k][l] * first[i][j][l]
                gamma[k][i][j] = acc
                gamma[k][j][i] = acc
    return _freeze(gamma)


def riemann(m, gamma):
    """All curvature slices R(d_i, d_j) as matrices; see module docstring."""
    n = m.dim
    slices = _zeros(m.ctx, n, n, n, n)
    for i in range(n):
        for j in range(i + 1, n):
            mat = _zeros(m.ctx, n, n)
            for l in range(n):
                for k in range(n):
                    acc = gamma[l][j][k].diff(i) - gamma[l][i][k].diff(j)
                    for p in range(n):
                        if not gamma[p][j][k].is_zero():
                            acc = acc + gamma[l][i][p] * gamma[p][j][k]
                        if not gamma[p][i][k].is_zero():
                            acc = acc - gamma[l][j][p] * gamma[p][i][k]
                    mat[l][k] = acc
            slices[i][j] = mat
            slices[j][i] = [[-e for e in row] for row in mat]
    return _freeze(slices)


def ricci(m, slices):
    n = m.dim
    rho = _zeros(m.ctx, n, n)
    for j in range(n):
        for k in range(n):
            acc = ExpPoly.zero(m.ctx)
            for i in range(n):
                acc = acc + slices[i][j][i][k]
            rho[j][k] = acc
    out = SymTensor(rho)
    bad = out.asymmetric_entries()
    if bad:
        raise AsymmetryDetected(f"Ricci tensor asymmetric at entries {[(i + 1, j + 1) for i, j in bad]}")
    return out


def scalar_curvature(m, rho, ginv=None):
    ginv = ginv if ginv is not None else inverse_metric(m)
    n = m.dim
    acc = ExpPoly.zero(m.ctx)
    for j in range(n):
        for k in range(n):
            if not ginv[j][k].is_zero() and not rho[j][k].is_zero():
                acc = acc + ginv[j][k] * rho[j][k]
    return acc


def lie_derivative_metric(m, X):
    """(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k."""
    _check_model_field(m, X)
    n = m.dim
    g = m.metric
    dX = [[X[k].diff(i) for i in range(n)] for k in range(n)]
    out = _zeros(m.ctx, n, n)
    for i in range(n):
        for j in range(i, n):
            acc = ExpPoly.zero(m.ctx)
            for k in range(n):
                if not X[k].is_zero():
                    acc = acc + X[k] * g[i][j].diff(k)
                if not g[k][j].is_zero() and not dX[k][i].is_zero():
                    acc = acc + g[k][j] * dX[k][i]
                if not g[i][k].is_zero() and not dX[k][j].is_zero():
                    acc = acc + g[i][k] * dX[k][j]
            out[i][j] = acc
            out[j][i] = acc
    return SymTensor(out)


def lower(m, X):
    """The 1-form X^flat, omega_j = g_ij X^i."""
    _check_model_field(m, X)
    n = m.dim
    comps = []
    for j in range(n):
        acc = ExpPoly.zero(m.ctx)
        for i in range(n):
            if not m.metric[i][j].is_zero() and not X[i].is_zero():
                acc = acc + m.metric[i][j] * X[i]
        comps.append(acc)
    return OneForm(comps)


def exterior_derivative(omega):
    n = len(omega.comps)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        out[i][i] = ExpPoly.zero(omega.comps[0].ctx)
        for j in range(i + 1, n):
            val = omega[j].diff(i) - omega[i].diff(j)
            out[i][j] = val
            out[j][i] = -val
    return TwoForm(out)


def differential(f):
    """df of a scalar exp-polynomial as a OneForm."""
    return OneForm([f.diff(i) for i in range(f.ctx.dim)])


def grad(m, f, ginv=None):
    """grad f with components g^{ij} d_i f."""
    ginv = ginv if ginv is not None else inverse_metric(m)
    n = m.dim
    df = [f.diff(i) for i in range(n)]
    comps = []
    for j in range(n):
        acc = ExpPoly.zero(m.ctx)
        for i in range(n):
            if not ginv[i][j].is_zero() and not df[i].is_zero():
                acc = acc + ginv[i][j] * df[i]
        comps.append(acc)
    return VectorField(comps)


# -- consistency checks (symbolic; used by the invariant suite) -----------


def metric_covariant_derivative(m, gamma):
    """(nabla_k g)_ij = d_k g_ij - Gamma^p_ki g_pj - Gamma^p_kj g_ip; zero for Levi-Civita."""
    n = m.dim
    g = m.metric
    out = _zeros(m.ctx, n, n, n)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                acc = g[i][j].diff(k)
                for p in range(n):
                    acc = acc - gamma[p][k][i] * g[p][j] - gamma[p][k][j] * g[i][p]
                out[k][i][j] = acc
    return _freeze(out)


def torsion(gamma):
    n = len(gamma)
    return _freeze([[[gamma[k][i][j] - gamma[k][j][i] for j in range(n)] for i in range(n)] for k in range(n)])


def bianchi_first(slices):
    """R(d_i,d_j)d_k + R(d_j,d_k)d_i + R(d_k,d_i)d_j for all i, j, k, as component lists."""
    n = len(slices)
    out = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                out.append(
                    [slices[i][j][l][k] + slices[j][k][l][i] + slices[k][i][l][j] for l in range(n)]
                )
    return out


def curvature_antisymmetry(slices):
    n = len(slices)
    return [
        slices[i][j][l][k] + slices[j][i][l][k]
        for i in range(n)
        for j in range(n)
        for l in range(n)
        for k in range(n)
    ]


@dataclass(frozen=True)
class Curvature:
    """Everything the ``curvature`` report prints, computed once."""

    ginv: tuple
    gamma: tuple
    slices: tuple
    ricci: SymTensor
    scalar: ExpPoly


def curvature(m):
    ginv = inverse_metric(m)
    gamma = christoffel(m, ginv)
    slices = riemann(m, gamma)
    rho = ricci(m, slices)
    return Curvature(ginv, gamma, slices, rho, scalar_curvature(m, rho, ginv))
