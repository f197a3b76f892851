"""Reaction kinetics: the (F, G) pair and its partial derivatives."""

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BrusselatorParams:
    a: float = 0.0
    b: float = 1.0


@dataclass(frozen=True)
class KineticsModel:
    """Two-species reaction pair with analytic partial derivatives.

    All callables take (u, v) and must be vectorized over numpy arrays;
    the derivatives feed the Newton linearisation, so they have to be
    exact (see :func:`check_derivatives`).
    """

    F: Callable
    G: Callable
    F_u: Callable
    F_v: Callable
    G_u: Callable
    G_v: Callable
    name: str = "custom"


def brusselator(params=BrusselatorParams()):
    """Brusselator kinetics F = a - (b+1) u + u^2 v, G = b u - u^2 v."""
    a, b = params.a, params.b
    return KineticsModel(
        F=lambda u, v: a - (b + 1.0) * u + u * u * v,
        G=lambda u, v: b * u - u * u * v,
        F_u=lambda u, v: -(b + 1.0) + 2.0 * u * v,
        F_v=lambda u, v: u * u,
        G_u=lambda u, v: b - 2.0 * u * v,
        G_v=lambda u, v: -u * u,
        name="brusselator",
    )


def jacobian(model, u, v):
    """2x2 reaction Jacobian [[F_u, F_v], [G_u, G_v]] at (u, v)."""
    return np.array([[model.F_u(u, v), model.F_v(u, v)],
                     [model.G_u(u, v), model.G_v(u, v)]], dtype=float)


def check_derivatives(model, n_samples=100, box=(-2.0, 2.0), step=1e-6,
                      rtol=1e-5, seed=0):
    """Compare analytic derivatives with centered differences.

    Samples (u, v) uniformly from ``box`` squared and raises ``ValueError``
    naming the first offending derivative.  Relative tolerance with an
    absolute floor of 1.
    """
    rng = np.random.default_rng(seed)
    lo, hi = box
    u = rng.uniform(lo, hi, n_samples)
    v = rng.uniform(lo, hi, n_samples)
    pairs = [
        ("F_u", model.F_u, lambda a, b: (model.F(a + step, b) - model.F(a - step, b)) / (2 * step)),
        ("F_v", model.F_v, lambda a, b: (model.F(a, b + step) - model.F(a, b - step)) / (2 * step)),
        ("G_u", model.G_u, lambda a, b: (model.G(a + step, b) - model.G(a - step, b)) / (2 * step)),
        ("G_v", model.G_v, lambda a, b: (model.G(a, b + step) - model.G(a, b - step)) / (2 * step)),
    ]
    for label, analytic, numeric in pairs:
        exact = np.asarray(analytic(u, v), dtype=float)
        approx = np.asarray(numeric(u, v), dtype=float)
        err = np.abs(exact - approx) / np.maximum(1.0, np.abs(exact))
        if err.max() > rtol:
            i = int(np.argmax(err))
            raise ValueError(
                f"{model.name}: derivative {label} disagrees with finite "
                f"differences at (u, v)=({u[i]:.4f}, {v[i]:.4f}): "
                f"analytic {exact[i]:.6e}, numeric {approx[i]:.6e}")
    return True


def make_kinetics(F, G, F_u, F_v, G_u, G_v, name="custom", verify=True):
    """Register custom kinetics; derivative self-check on by default."""
    model = KineticsModel(F, G, F_u, F_v, G_u, G_v, name=name)
    if verify:
        check_derivatives(model)
    return model


PRESETS = {"brusselator": lambda a=0.0, b=1.0: brusselator(BrusselatorParams(a, b))}


def preset(name, **params):
    """Look up a kinetics preset by name."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown kinetics preset {name!r}; "
                         f"available: {sorted(PRESETS)}") from None
    return factory(**params)
