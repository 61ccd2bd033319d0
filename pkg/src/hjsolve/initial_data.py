"""Named initial data ``v0``.

Each factory returns an :class:`InitialData` holding a vectorised callable
``(N, d) -> (N,)`` and its Lipschitz constant with respect to
``||v0_x||_inf``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class InitialData:
    fn: Callable
    lip: float
    name: str
    # sup |v0|, None when unbounded on R^d
    bound: Optional[float] = None
    semiconcave: bool = False

    def __call__(self, x):
        return self.fn(np.asarray(x, float))


def constant(dim, c=0.0):
    return InitialData(lambda x: np.full(x.shape[:-1], float(c)), 0.0, "constant", abs(c), True)


def affine(dim, a=None, b=0.0):
    a = np.ones(dim) if a is None else np.asarray(a, float)
    return InitialData(lambda x: x @ a + b, float(np.abs(a).max()), "affine", None, True)


def neg_abs(dim):
    """``-||x||_1``; equals ``-|x|`` in one dimension."""
    return InitialData(lambda x: -np.abs(x).sum(axis=-1), 1.0, "neg_abs", None, True)


def neg_logcosh(dim, scale=1.0):
    """``-sum_j log cosh(x^j / scale) * scale``: smooth, concave, Lipschitz 1."""
    s = float(scale)
    return InitialData(lambda x: -s * np.log(np.cosh(x / s)).sum(axis=-1), 1.0, "neg_logcosh",
                       None, True)


def cosine(dim, amp=0.1, period=1.0):
    w = 2 * np.pi / period
    return InitialData(lambda x: amp * np.cos(w * x).sum(axis=-1), amp * w, "cosine",
                       abs(amp) * dim, True)


def random_fourier(dim, seed=0, modes=3, lip=1.0, period=1.0, mollify=0.0):
    """Random trigonometric polynomial, periodic with ``period``.

    Coefficients are scaled so that ``sum |c_k| |2 pi k / period|_inf = lip``,
    which bounds the sup-norm gradient.  ``mollify > 0`` damps mode ``k`` by
    ``exp(-(2 pi |k| mollify / period)^2 / 2)``, i.e. convolution with a
    Gaussian of width ``mollify``.
    """
    rng = np.random.default_rng(seed)
    ks = rng.integers(-modes, modes + 1, size=(4 * modes, dim))
    ks = ks[np.any(ks != 0, axis=1)]
    coef = rng.normal(size=ks.shape[0])
    phase = rng.uniform(0, 2 * np.pi, size=ks.shape[0])
    w = 2 * np.pi / period
    scale = np.sum(np.abs(coef) * w * np.abs(ks).max(axis=1))
    coef = coef * lip / scale
    damp = np.exp(-0.5 * (w * mollify) ** 2 * np.sum(ks**2, axis=1))
    coef = coef * damp

    def fn(x):
        return np.sin(w * (x @ ks.T) + phase) @ coef

    return InitialData(fn, float(lip), "random_fourier", float(np.abs(coef).sum()), False)


_REGISTRY = {
    "constant": constant,
    "affine": affine,
    "neg_abs": neg_abs,
    "neg_norm1": neg_abs,
    "neg_logcosh": neg_logcosh,
    "cosine": cosine,
    "random_fourier": random_fourier,
}


def get_initial(name, dim, **params) -> InitialData:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown initial data {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(dim, **params)
