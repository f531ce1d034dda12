import random

import pytest

from solitonforge import catalog
from solitonforge.expr import ExpPoly, context
from solitonforge.scalar import to_rational

MODEL_IDS = ("gs3d", "typeB", "flat3", "flat4")


@pytest.fixture(scope="session")
def gs3d():
    return catalog.get("gs3d").model


@pytest.fixture(scope="session")
def typeB():
    return catalog.get("typeB").model


@pytest.fixture(scope="session")
def models():
    return {mid: catalog.get(mid).model for mid in MODEL_IDS}


@pytest.fixture(scope="session")
def ctx2():
    return context(("x", "y"), ("eps", "mu"), ("eps",))


FREQS = (-2, -1, 0, 0, 0, "1/2", 1, 2)


def random_scalar(rng, space):
    """A small random element of the parameter field (possibly with a denominator)."""
    q = to_rational(f"{rng.randint(-6, 6)}/{rng.randint(1, 4)}")
    s = space.const(q)
    for p in space.params:
        if rng.random() < 0.35:
            s = s + space.symbol(p) * rng.randint(-3, 3)
    if "mu" in space.params and rng.random() < 0.2:
        s = s / (space.symbol("mu") + rng.choice([0, 1, 2]))
    return s


def random_exppoly(rng, ctx, max_terms=4, max_deg=2):
    terms = []
    for _ in range(rng.randint(0, max_terms)):
        mono = tuple(rng.randint(0, max_deg) for _ in range(ctx.dim))
        freq = tuple(rng.choice(FREQS) for _ in range(ctx.dim))
        terms.append((mono, freq, random_scalar(rng, ctx.space)))
    return ExpPoly.from_terms(ctx, terms)


@pytest.fixture
def rng():
    return random.Random(12345)
