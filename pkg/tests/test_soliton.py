import random

import pytest
import sympy as sp

from solitonforge import catalog
from solitonforge.errors import NonAffineResidual
from solitonforge.expr import ExpPoly
from solitonforge.geometry import VectorField, curvature, exterior_derivative, grad, lower
from solitonforge.parser import parse_expr, parse_scalar
from solitonforge.soliton import (
    LAMBDA,
    _check_affine,
    ansatz_frequencies,
    assemble_system,
    classify,
    default_ansatz,
    gradient_check,
    residual,
    solve,
    solve_soliton,
    verify,
)


@pytest.fixture(scope="module")
def gs3d_solution():
    return solve_soliton(catalog.get("gs3d").model)


@pytest.fixture(scope="module")
def typeB_solution():
    return solve_soliton(catalog.get("typeB").model)


def lam(m, text):
    return parse_scalar(text, m.ctx)


def test_residual_examples(gs3d, typeB):
    assert residual(gs3d, gs3d.fields["X3D"], lam(gs3d, "-2/mu")).is_zero()
    assert residual(typeB, typeB.fields["X4D"], lam(typeB, "-4/(3*mu)")).is_zero()
    zero = VectorField([ExpPoly.zero(gs3d.ctx)] * 3)
    assert residual(gs3d, zero, 0) == curvature(gs3d).ricci
    ok, res = verify(gs3d, gs3d.fields["X3D"], lam(gs3d, "-1/mu"))
    assert not ok and not res.is_zero()


def test_classify(gs3d):
    assert classify(lam(gs3d, "-2/mu"), {"mu": 1}) == "expanding"
    assert classify(lam(gs3d, "-2/mu"), {"mu": -1}) == "shrinking"
    assert classify(lam(gs3d, "0")) == "steady"
    assert classify(lam(gs3d, "-2/mu"), {"mu": 0.5}) == "expanding"
    with pytest.raises(KeyError):
        classify(lam(gs3d, "-2/mu"))


def test_default_ansatz_frequencies(gs3d, typeB, models):
    f3 = {tuple(int(a) for a in f) for f in ansatz_frequencies(gs3d)}
    assert f3 == {(0, 0, 0), (0, 0, 2), (0, 0, -2), (0, 0, 4), (0, 0, -4)}
    fb = {tuple(int(a) for a in f) for f in ansatz_frequencies(typeB)}
    assert {(0, 0, 0, 0), (1, 0, 0, 0), (-1, 0, 0, 0), (0, 1, 0, 0), (0, -1, 0, 0), (1, -1, 0, 0), (-1, 1, 0, 0)} <= fb
    assert {tuple(f) for f in ansatz_frequencies(models["flat3"])} == {(0, 0, 0)}
    a = default_ansatz(typeB)
    for comp in a.basis:
        assert len(set(comp)) == len(comp)
        for mono in ((0, 0, 1, 0), (0, 0, 0, 1), (0, 0, 0, 0)):
            assert (mono, (0, 0, 0, 0)) in comp


def test_constant_ansatz_row_reproduces_last_3d_equation(gs3d):
    system = assemble_system(gs3d, default_ansatz(gs3d, 0, 0))
    rows = [r for r in system.rows if r.slot == (2, 2)]
    assert len(rows) == 1
    (row,) = rows
    lam_col = system.columns.index(LAMBDA)
    # -mu*lambda = 2, i.e. 2*mu*d3X3 - 2 - lambda*mu = 0 with d3X3 = 0
    assert row.coeffs == {lam_col: -gs3d.ctx.space.symbol("mu")}
    assert row.rhs == 2


def test_flat_constant_ansatz_forces_steady(models):
    sol = solve(assemble_system(models["flat3"], default_ansatz(models["flat3"], 0, 0)))
    assert sol.lam == 0 and sol.lambda_forced
    assert sol.free_count == 3


def test_rows_are_unique_per_slot_and_key(gs3d):
    system = assemble_system(gs3d, default_ansatz(gs3d))
    keys = [(r.slot, r.key) for r in system.rows]
    assert len(keys) == len(set(keys))
    # brute force: every key of every column's contribution, plus the constant part
    expected = set()
    rho = curvature(gs3d).ricci
    from solitonforge.geometry import lie_derivative_metric
    from solitonforge.soliton import shape

    for col in system.columns:
        if col == LAMBDA:
            t = gs3d.metric
        else:
            t = lie_derivative_metric(gs3d, shape(gs3d, col[1], col[2], col[0])).comps
        for i in range(3):
            for j in range(i, 3):
                expected |= {((i, j), (mo, fr)) for mo, fr, _ in t[i][j].terms}
    for i in range(3):
        for j in range(i, 3):
            expected |= {((i, j), (mo, fr)) for mo, fr, _ in rho[i][j].terms}
    assert set(keys) == expected


def test_affine_guard_detects_corruption(gs3d):
    system = assemble_system(gs3d, default_ansatz(gs3d, 1, 0))
    row = system.rows[0]
    row.rhs = row.rhs + 1
    with pytest.raises(NonAffineResidual):
        _check_affine(system, curvature(gs3d).ricci)


def test_gs3d_solution_set(gs3d, gs3d_solution):
    sol = gs3d_solution
    assert sol.feasible and sol.lambda_forced
    assert sol.lam == lam(gs3d, "-2/mu")
    assert sol.free_count == 3
    assert any(d == gs3d.ctx.space.symbol("mu") for d in sol.pivot_denominators)


def test_typeB_solution_set(typeB, typeB_solution):
    sol = typeB_solution
    assert sol.feasible and sol.lambda_forced
    assert sol.lam == lam(typeB, "-4/(3*mu)")
    # d/du is a Killing field outside the X4D family, so the set is 4-dimensional
    assert sol.free_count == 4
    du = VectorField([ExpPoly.const(typeB.ctx, 1 if i == 2 else 0) for i in range(4)])
    from solitonforge.soliton import in_span

    assert in_span(du, sol.homogeneous) is not None


@pytest.mark.parametrize("fixture", ["gs3d_solution", "typeB_solution"])
def test_soundness_random_members(request, fixture):
    sol = request.getfixturevalue(fixture)
    m = sol.model
    rng = random.Random(2)
    for _ in range(4):
        comps = list(sol.particular.comps)
        for h in sol.homogeneous:
            c = m.ctx.space.const(f"{rng.randint(-9, 9)}/{rng.randint(1, 5)}")
            comps = [a + b.scale(c) for a, b in zip(comps, h.comps)]
        assert verify(m, VectorField(comps), sol.lam)[0]


@pytest.mark.parametrize("fixture", ["gs3d_solution", "typeB_solution"])
def test_general_member_verifies_symbolically(request, fixture):
    sol = request.getfixturevalue(fixture)
    ext, X = sol.general()
    assert verify(ext, X, sol.lam.lift(ext.ctx.space))[0]


def test_homogeneous_directions_independent(typeB_solution):
    from solitonforge.soliton import in_span

    hs = typeB_solution.homogeneous
    for i, h in enumerate(hs):
        assert in_span(h, hs[:i] + hs[i + 1 :]) is None


def test_mu_zero_is_infeasible(typeB):
    res = solve_soliton(typeB.pin("mu", 0))
    assert not res.feasible
    assert not res.certificate_rhs.is_zero()
    assert res.certificate().startswith("0 = ")


def test_completeness_against_sympy_construction(gs3d):
    """Tiny ansatz (degree <= 1, frequency 0) rebuilt directly in sympy."""
    x, y, t, eps, mu, L = sp.symbols("x y t eps mu lambda")
    coords = (x, y, t)
    basis = [sp.Integer(1), x, y, t]
    cs = sp.symbols("c0:12")
    X = [sum(cs[4 * k + b] * basis[b] for b in range(4)) for k in range(3)]
    g = sp.diag(eps * sp.exp(2 * t), eps * sp.exp(-2 * t), mu)
    rho = sp.diag(0, 0, -2)
    E = sp.Symbol("E")
    eqs = []
    for i in range(3):
        for j in range(i, 3):
            lie = sum(
                X[k] * sp.diff(g[i, j], coords[k]) + g[k, j] * sp.diff(X[k], coords[i]) + g[i, k] * sp.diff(X[k], coords[j])
                for k in range(3)
            )
            expr = sp.expand((lie + rho[i, j] - L * g[i, j]) * sp.exp(2 * t))
            expr = expr.subs(sp.exp(2 * t), E).subs(sp.exp(4 * t), E**2)
            eqs.extend(sp.Poly(expr, x, y, t, E).coeffs())
    unknowns = list(cs) + [L]
    (sol_sym,) = sp.linsolve(eqs, unknowns)
    free = set().union(*(s.free_symbols for s in sol_sym)) & set(unknowns)
    assert sol_sym[-1] == -2 / mu

    ours = solve(assemble_system(gs3d, default_ansatz(gs3d, 1, 0)))
    assert ours.lam == lam(gs3d, "-2/mu")
    assert ours.free_count == len(free) == 3

    def to_sympy(e):
        return sp.sympify(e.to_str().replace("^", "**"), locals={"x": x, "y": y, "t": t, "mu": mu, "eps": eps})

    # our particular solution and directions satisfy the independent equations
    def coeff_values(field, with_lam):
        vals = {L: to_sympy(ExpPoly.const(gs3d.ctx, ours.lam)) if with_lam else 0}
        for k, comp in enumerate(field.comps):
            p = sp.Poly(to_sympy(comp), x, y, t)
            for b, mono in enumerate(((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))):
                vals[cs[4 * k + b]] = p.coeff_monomial(mono)
        return vals

    for e in eqs:
        assert sp.simplify(e.subs(coeff_values(ours.particular, True))) == 0
    homog_eqs = [e - e.subs({c: 0 for c in cs}) for e in eqs]
    for h in ours.homogeneous:
        vals = coeff_values(h, False)
        for e in homog_eqs:
            assert sp.simplify(e.subs(vals)) == 0


def test_catalog_solutions_are_not_gradient(gs3d, typeB):
    v = gradient_check(gs3d, gs3d.fields["X3D"])
    assert not v.gradient and v.witness_index == (0, 2) and not v.witness.is_zero()
    v = gradient_check(typeB, typeB.fields["X4D"])
    assert not v.gradient and not v.witness.is_zero()


def test_gradient_check_against_mixed_partials(models):
    m = models["flat3"]
    xs = sp.symbols("x1 x2 x3")
    rng = random.Random(21)

    def to_sympy(e):
        return sp.sympify(e.to_str().replace("^", "**"), locals={str(s): s for s in xs})

    for _ in range(20):
        terms = [
            (tuple(rng.randint(0, 2) for _ in range(3)), tuple(rng.choice((-1, 0, 1)) for _ in range(3)), rng.randint(-4, 4))
            for _ in range(3)
        ]
        f = ExpPoly.from_terms(m.ctx, terms)
        X = grad(m, f)
        assert gradient_check(m, X).gradient
        # perturb by a non-closed form: c*x_a dx_b with a != b
        a, b = rng.sample(range(3), 2)
        comps = list(X.comps)
        comps[b] = comps[b] + ExpPoly.coord(m.ctx, a) * rng.choice((1, 2, -3))
        Y = VectorField(comps)
        Ys = [to_sympy(c) for c in Y.comps]
        closed = all(sp.expand(sp.diff(Ys[j], xs[i]) - sp.diff(Ys[i], xs[j])) == 0 for i in range(3) for j in range(3))
        assert not closed
        assert not gradient_check(m, Y).gradient


def test_gradient_of_quadratic_on_flat(models):
    m = models["flat3"]
    f = parse_expr("x1^2 + x2^2", m.ctx)
    assert gradient_check(m, grad(m, f)).tag == "Gradient"
    assert exterior_derivative(lower(m, grad(m, f))).is_zero()
