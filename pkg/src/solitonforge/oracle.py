"""Finite-difference witness for the symbolic connection and Ricci tensor.

Only numeric evaluations of g enter here: Christoffel symbols come from central
differences of g through the Koszul formula, and Ricci from central differences
of those numeric symbols.  Nothing in :mod:`solitonforge.geometry` beyond the
metric entries themselves is evaluated, so agreement is an independent check.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMetricAtPoint
from .geometry import christoffel, ricci, riemann, inverse_metric

DEFAULT_H = 1e-4
DEFAULT_REL = 1e-6
DEFAULT_ABS = 1e-9
PARAM_SETTINGS = ({"eps": 1, "mu": 1}, {"eps": -1, "mu": 2})


@dataclass
class NumericScene:
    model: object
    params: dict
    points: np.ndarray  # shape (n_points, dim)
    h: float = DEFAULT_H
    rel: float = DEFAULT_REL
    abs: float = DEFAULT_ABS
    seed: int = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.shape[1] != self.model.dim:
            raise ValueError("points do not match the model dimension")
        self.params = full_params(self.model, self.params)

    @classmethod
    def sample(cls, model, params, n, seed=0, **kw):
        """``n`` points uniform in [-1, 1]^dim from a seeded generator."""
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-1.0, 1.0, size=(n, model.dim))
        return cls(model, params, pts, seed=seed, **kw)

    def metric_at(self, x):
        g = np.array([[e.eval(x, self.params) for e in row] for row in self.model.metric])
        if not np.all(np.isfinite(g)):
            raise DegenerateMetricAtPoint(f"metric not finite at {list(x)}")
        return g


def full_params(model, params):
    """Fill parameters the caller did not name (free constants) with 0."""
    out = {}
    for p in model.params:
        if p in params:
            out[p] = float(params[p])
        elif p in ("eps", "mu"):
            raise KeyError(f"parameter {p!r} needs a value")
        else:
            out[p] = 0.0
    return out


def _metric_derivs(scene, x):
    """dg[c][a][b] = d_c g_ab by central differences."""
    n = scene.model.dim
    h = scene.h
    dg = np.empty((n, n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dg[c] = (scene.metric_at(x + e) - scene.metric_at(x - e)) / (2 * h)
    return dg


def _gamma_at(scene, x):
    g = scene.metric_at(x)
    n = len(g)
    det = np.linalg.det(g)
    if abs(det) < 1e-12 * max(1.0, np.abs(g).max()) ** n:
        raise DegenerateMetricAtPoint(f"metric is degenerate at {list(x)}")
    ginv = np.linalg.inv(g)
    dg = _metric_derivs(scene, x)
    # koszul[l][i][j] = d_i g_jl + d_j g_il - d_l g_ij
    koszul = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, koszul)


def fd_christoffel(scene):
    """Array (n_points, k, i, j) of numeric Gamma^k_ij."""
    return np.array([_gamma_at(scene, x) for x in scene.points])


def _ricci_at(scene, x):
    n = scene.model.dim
    h = scene.h
    G = _gamma_at(scene, x)
    dG = np.empty((n, n, n, n))  # dG[a] = d_a Gamma
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dG[a] = (_gamma_at(scene, x + e) - _gamma_at(scene, x - e)) / (2 * h)
    # rho_jk = d_i G^i_jk - d_j G^i_ik + G^i_im G^m_jk - G^i_jm G^m_ik
    return (
        np.einsum("iijk->jk", dG)
        - np.einsum("jiik->jk", dG)
        + np.einsum("iim,mjk->jk", G, G)
        - np.einsum("ijm,mik->jk", G, G)
    )


def fd_ricci(scene):
    """Array (n_points, j, k) of numeric Ricci components."""
    return np.array([_ricci_at(scene, x) for x in scene.points])


def symbolic_christoffel(scene, gamma=None):
    gamma = gamma or christoffel(scene.model)
    return np.array([[[[e.eval(x, scene.params) for e in row] for row in mat] for mat in gamma] for x in scene.points])


def symbolic_ricci(scene, rho=None):
    if rho is None:
        m = scene.model
        rho = ricci(m, riemann(m, christoffel(m, inverse_metric(m))))
    comps = rho.comps if hasattr(rho, "comps") else rho
    return np.array([[[e.eval(x, scene.params) for e in row] for row in comps] for x in scene.points])


@dataclass
class Comparison:
    name: str
    max_abs: float
    max_rel: float
    passed: bool
    worst_point: int = -1
    details: dict = field(default_factory=dict)


def compare(symbolic, numeric, rel=DEFAULT_REL, abs_tol=DEFAULT_ABS, name="tensor"):
    """Per point: pass iff max|num - sym| <= rel * max|sym| + abs_tol.

    ``max_rel`` reports max|num - sym| / max|sym| (0 when the tensor vanishes).
    """
    symbolic = np.asarray(symbolic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if symbolic.shape != numeric.shape:
        raise ValueError(f"shape mismatch {symbolic.shape} vs {numeric.shape}")
    npts = symbolic.shape[0]
    flat_s = symbolic.reshape(npts, -1)
    flat_n = numeric.reshape(npts, -1)
    err = np.abs(flat_n - flat_s).max(axis=1)
    scale = np.abs(flat_s).max(axis=1)
    ok = err <= rel * scale + abs_tol
    relerr = np.where(scale > 0, err / np.where(scale > 0, scale, 1.0), 0.0)
    worst = int(np.argmax(err - (rel * scale + abs_tol)))
    return Comparison(
        name=name,
        max_abs=float(err.max()),
        max_rel=float(relerr.max()),
        passed=bool(ok.all()),
        worst_point=worst,
    )


def run(model, params, n_points=100, seed=0, h=DEFAULT_H, rel=DEFAULT_REL, abs_tol=DEFAULT_ABS):
    """Compare symbolic and numeric Gamma and Ricci on seeded random points."""
    scene = NumericScene.sample(model, params, n_points, seed=seed, h=h, rel=rel, abs=abs_tol)
    gamma = christoffel(model)
    rho = ricci(model, riemann(model, gamma))
    cg = compare(symbolic_christoffel(scene, gamma), fd_christoffel(scene), rel, abs_tol, "christoffel")
    cr = compare(symbolic_ricci(scene, rho), fd_ricci(scene), rel, abs_tol, "ricci")
    return scene, [cg, cr]


def settings_for(model):
    """Parameter assignments exercised by default: the two (eps, mu) pairs, restricted to the model."""
    out = []
    for s in PARAM_SETTINGS:
        sub = {k: v for k, v in s.items() if k in model.params}
        if sub not in out:
            out.append(sub)
    return out
