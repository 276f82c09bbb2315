"""Right-hand side of the stability bound for weighted linear representations.

For weights with ``|w~'(u)| <= A u^(alpha-1)`` and a feature map ``phi``
with Lipschitz constant ``L`` and sup-norm ``S``, the bound reads::

    L (A/alpha) G{p alpha/(p-1)}^(1-1/p) W_p  +  S A (2 G{p(alpha-a)/(p-a)})^(1-a/p) W_p^a

with ``G{t} = max(Pers_t(D1), Pers_t(D2))`` and ``Pers_0`` the point count.
Degenerate exponents are resolved by their limits: for ``p = inf`` the
factors are ``G{alpha}`` and ``2 G{alpha-a}``; a vanishing outer exponent
turns ``G{t}^(c/t)`` into the largest persistence to the power ``c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..persistence import PersistenceDiagram
from ..representations import FeatureSpec, WeightSpec


def pers_sum(D: PersistenceDiagram, t: float) -> float:
    p = D.persistence
    if t == 0:
        return float(p.size)
    return float(np.sum(p ** t))


def G(D1: PersistenceDiagram, D2: PersistenceDiagram, t: float) -> float:
    return max(pers_sum(D1, t), pers_sum(D2, t))


def max_persistence(D1: PersistenceDiagram, D2: PersistenceDiagram) -> float:
    p = np.concatenate((D1.persistence, D2.persistence))
    return float(p.max()) if p.size else 0.0


@dataclass(frozen=True)
class BoundTerms:
    lipschitz_term: float
    sup_term: float

    @property
    def total(self) -> float:
        return self.lipschitz_term + self.sup_term


def stability_bound(D1: PersistenceDiagram, D2: PersistenceDiagram, w: WeightSpec, phi: FeatureSpec,
                    p: float, a: float, W: float) -> BoundTerms:
    """Both terms of the bound, given the already computed ``W = W_p(D1, D2)``."""
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    alpha, A = w.alpha, w.A
    top = max_persistence(D1, D2)
    if math.isinf(p):
        f1 = G(D1, D2, alpha)
    elif p == 1:
        f1 = top ** alpha
    else:
        f1 = G(D1, D2, p * alpha / (p - 1.0)) ** (1.0 - 1.0 / p)
    term1 = 0.0 if phi.lipschitz == 0 else phi.lipschitz * (A / alpha) * f1 * W
    if math.isinf(p):
        f2 = 2.0 * G(D1, D2, alpha - a)
    else:
        e = 1.0 - a / p
        if e == 0:
            f2 = top ** (alpha - a) if alpha > a else 1.0
        else:
            f2 = (2.0 * G(D1, D2, p * (alpha - a) / (p - a))) ** e
    term2 = phi.sup_norm * A * f2 * W ** a
    return BoundTerms(float(term1), float(term2))
