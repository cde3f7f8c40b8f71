"""Latent-label recovery from many causes, and the positivity violation it implies.

As the cause count m grows, the empirical cause frequency S(A)/m separates
by confounder value, so a midpoint threshold recovers U almost surely.  The
same separation means cause vectors concentrate on disjoint regions for the
two confounder values: positivity fails.  These helpers estimate the
misclassification rate of the midpoint rule and produce 2-d projections of
sampled cause vectors for scatter plots of the separation.

Only the cause-model fields of :class:`BinaryParams` (pi_u, p_a0, p_a1) are
read here; the outcome table and the params' own m are irrelevant because the
cause count under study is passed explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .binary_latent import BinaryParams

__all__ = [
    "ProjectionSample",
    "u_hat",
    "misclassification_rate",
    "projection_cloud",
    "hoeffding_envelope",
]


@dataclass(frozen=True)
class ProjectionSample:
    """One sampled cause vector mapped to scatter coordinates.

    x1 is the cause frequency S(a)/m (projection onto 1/m * ones); x2 is the
    projection onto the orthogonal half-positive/half-negative contrast,
    scaled by m^{-1/2}.  ``u`` is the true latent label, ``u_hat`` the
    midpoint-rule estimate.
    """

    u: int
    x1: float
    x2: float
    u_hat: int


def _threshold(params: BinaryParams) -> float:
    return 0.5 * (params.p_a0 + params.p_a1)


def u_hat(a, params: BinaryParams) -> int:
    """Midpoint-rule label estimate: 1 iff mean(a) exceeds (p_a0 + p_a1) / 2.

    Ties (exact equality) resolve to 0.
    """
    a = np.asarray(a)
    if a.ndim != 1 or a.shape[0] < 1:
        raise ValueError("a must be a nonempty 1-d bit vector")
    return int(float(a.mean()) > _threshold(params))


def misclassification_rate(params: BinaryParams, m: int, n: int, seed: int) -> float:
    """Monte-Carlo estimate of P(u_hat(A) != U) at cause count m.

    The rule depends on A only through S(A), so S is drawn directly as
    Binomial(m, p_a(U)), which is the generator's exact law for the count.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n) < params.pi_u
    s = rng.binomial(m, np.where(u, params.p_a1, params.p_a0))
    labels = (s / m) > _threshold(params)
    return float(np.mean(labels != u))


def projection_cloud(
    params: BinaryParams, m: int, n: int, seed: int
) -> list[ProjectionSample]:
    """Sample n cause vectors at cause count m and project to 2-d.

    Requires even m so the orthogonal contrast (+1 on the first half, -1 on
    the second, scaled by m^{-1/2}) is balanced.  The decision boundary of
    the midpoint rule is the vertical line x1 = (p_a0 + p_a1) / 2.
    """
    if m < 2 or m % 2 != 0:
        raise ValueError(f"m must be a positive even integer, got {m}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = (rng.random(n) < params.pi_u).astype(np.int64)
    p = np.where(u == 1, params.p_a1, params.p_a0)
    a = rng.random((n, m)) < p[:, None]
    x1 = a.mean(axis=1)
    half = m // 2
    x2 = (a[:, :half].sum(axis=1) - a[:, half:].sum(axis=1)) / math.sqrt(m)
    labels = (x1 > _threshold(params)).astype(np.int64)
    return [
        ProjectionSample(u=int(u[i]), x1=float(x1[i]), x2=float(x2[i]), u_hat=int(labels[i]))
        for i in range(n)
    ]


def hoeffding_envelope(m: int, p_a0: float, p_a1: float) -> float:
    """exp(-2 m ((p_a1 - p_a0)/2)^2): tail bound on the midpoint-rule error rate."""
    delta = abs(p_a1 - p_a0) / 2.0
    return math.exp(-2.0 * m * delta * delta)
