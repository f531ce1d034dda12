"""Built-in models, loaded from the ``.model`` files shipped with the package.

The search path is the directories listed in ``SOLITON_FORGE_MODELS`` (os.pathsep
separated) followed by the bundled ``models/`` directory.  A file found earlier on
the path shadows a bundled one with the same id.
"""

import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import SolitonForgeError, UnknownEntry
from .geometry import curvature
from .parser import parse_model
from .soliton import verify

ENV_VAR = "SOLITON_FORGE_MODELS"
BUILTIN_IDS = ("gs3d", "typeB", "flat3", "flat4")

PROVENANCE = {
    "gs3d": (
        "Proper 3D generalized symmetric space of order 4; signature (eps, eps, sign mu) "
        "with eps = +-1 and mu != 0. Known soliton: three-parameter family X3D."
    ),
    "typeB": (
        "4D generalized symmetric space of type B (order 3), neutral signature (2,2). "
        "Cross terms dx*dv, dx*du etc. are symmetrized: c*dA*dB puts c/2 in g[A][B] and g[B][A]. "
        "Known soliton (mu != 0): three-parameter family X4D with lambda = -4/(3*mu)."
    ),
    "flat3": "Euclidean R^3; sanity model. Known soliton: X = 0, lambda = 0.",
    "flat4": "Euclidean R^4; sanity model. Known soliton: X = 0, lambda = 0.",
}


class SelfTestFailure(SolitonForgeError):
    """A shipped known solution does not verify."""


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    model: object
    path: str
    provenance: str
    solutions: dict = field(default_factory=dict)  # name -> (VectorField, lambda)

    @property
    def metric(self):
        return self.model.metric


def search_path():
    dirs = []
    extra = os.environ.get(ENV_VAR, "")
    for part in extra.split(os.pathsep):
        if part:
            dirs.append(Path(part))
    dirs.append(Path(str(resources.files("solitonforge") / "models")))
    return dirs


def locate(model_id):
    for d in search_path():
        candidate = d / f"{model_id}.model"
        if candidate.is_file():
            return candidate
    return None


def list_ids():
    ids = set()
    for d in search_path():
        if d.is_dir():
            ids.update(p.stem for p in d.glob("*.model"))
    return sorted(ids)


@lru_cache(maxsize=None)
def _load(path, mtime):
    text = Path(path).read_text()
    model = parse_model(text, name=Path(path).stem)
    rho = curvature(model).ricci
    solutions = model.known_solutions()
    for name, (X, lam) in solutions.items():
        ok, _ = verify(model, X, lam, rho)
        if not ok:
            raise SelfTestFailure(f"{path}: shipped soliton {name!r} does not verify")
    return model, solutions


def get(model_id):
    """Catalog entry for ``model_id``; raises :class:`UnknownEntry` if absent."""
    path = locate(model_id)
    if path is None:
        raise UnknownEntry(f"unknown model {model_id!r}; known: {', '.join(list_ids())}")
    model, solutions = _load(str(path), path.stat().st_mtime_ns)
    return CatalogEntry(
        id=model_id,
        model=model,
        path=str(path),
        provenance=PROVENANCE.get(model_id, "user model"),
        solutions=solutions,
    )


def known_solution(model_id):
    """The first shipped (VectorField, lambda) for ``model_id``."""
    entry = get(model_id)
    if not entry.solutions:
        raise UnknownEntry(f"model {model_id!r} ships no known soliton")
    return next(iter(entry.solutions.values()))


def load_model(source):
    """A model given either as a catalog id or as a path to a ``.model`` file."""
    p = Path(source)
    if p.suffix == ".model" or os.sep in source:
        if not p.is_file():
            raise UnknownEntry(f"model file {source!r} not found")
        return parse_model(p.read_text(), name=p.stem)
    return get(source).model
