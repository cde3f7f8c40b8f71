"""All-binary latent-confounder model: exact probabilities and ignorance regions.

A binary confounder U drives m exchangeable binary causes A and a binary
outcome Y whose law depends on A only through the cause count S(A).  The
observable data pin the margins of the 2x2 conditional table P(U, Y | A=a)
but leave one cell free inside its Frechet bounds; sweeping that cell
traces out the interval of intervention probabilities compatible with the
data.  Everything here is closed-form arithmetic, no sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

__all__ = [
    "DegenerateMarginError",
    "BinaryParams",
    "JointTable",
    "IgnoranceInterval",
    "logistic_outcome_table",
    "demo_params",
    "intervention_prob",
    "posterior_u",
    "observational_prob",
    "frechet_bounds",
    "table_from_p11",
    "copula_density",
    "causal_from_table",
    "log_odds_ratio",
    "ignorance_region",
    "degenerate_ignorance",
]

_TOL = 1e-12


class DegenerateMarginError(ValueError):
    """A conditional margin sits at 0 or 1, so the requested quantity is undefined."""


def _check_prob(x: float, name: str) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


@dataclass(frozen=True)
class BinaryParams:
    """Structural parameters of the all-binary model.

    ``p_y[u, s]`` is the outcome probability given confounder value u and
    cause count s; the outcome depends on the cause vector only through
    S(a).  ``p_a0`` and ``p_a1`` must differ, otherwise the causes carry no
    information about U and the factorization degenerates.
    """

    pi_u: float
    p_a0: float
    p_a1: float
    m: int
    p_y: np.ndarray  # shape (2, m + 1)

    def __post_init__(self):
        object.__setattr__(self, "pi_u", _check_prob(self.pi_u, "pi_u"))
        object.__setattr__(self, "p_a0", _check_prob(self.p_a0, "p_a0"))
        object.__setattr__(self, "p_a1", _check_prob(self.p_a1, "p_a1"))
        object.__setattr__(self, "m", int(self.m))
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.p_a0 == self.p_a1:
            raise ValueError("p_a0 and p_a1 must differ (causes must respond to U)")
        p_y = np.array(self.p_y, dtype=float)
        if p_y.shape != (2, self.m + 1):
            raise ValueError(f"p_y must have shape (2, m+1) = (2, {self.m + 1}), got {p_y.shape}")
        if np.any(p_y < 0.0) or np.any(p_y > 1.0):
            raise ValueError("p_y entries must lie in [0, 1]")
        p_y.setflags(write=False)
        object.__setattr__(self, "p_y", p_y)


def logistic_outcome_table(m: int, slope: float = 0.5, shift: float = 2.0) -> np.ndarray:
    """Outcome table p_y[u, s] = logistic(slope * (s - m/2) + shift * u)."""
    s = np.arange(m + 1, dtype=float)
    return np.stack([expit(slope * (s - m / 2.0)), expit(slope * (s - m / 2.0) + shift)])


def demo_params(
    m: int = 6,
    pi_u: float = 0.3,
    p_a0: float = 0.1,
    p_a1: float | None = None,
    slope: float = 0.5,
    shift: float = 2.0,
) -> BinaryParams:
    """Canonical demonstration parameters.

    ``p_a1`` defaults to ``1 - p_a0``; that symmetry makes the confounder
    posterior collapse to the prior at the midpoint cause count s = m/2, so
    the ignorance interval there has zero width.
    """
    if p_a1 is None:
        p_a1 = 1.0 - p_a0
    return BinaryParams(
        pi_u=pi_u, p_a0=p_a0, p_a1=p_a1, m=m, p_y=logistic_outcome_table(m, slope, shift)
    )


def _check_s(params: BinaryParams, s: int) -> int:
    s = int(s)
    if not (0 <= s <= params.m):
        raise ValueError(f"cause count s={s} out of range 0..{params.m}")
    return s


def intervention_prob(params: BinaryParams, s: int) -> float:
    """P(Y=1 | do(A=a)) for any cause vector a with S(a) = s.

    Averages the conditional outcome distribution over the *marginal* law of
    the confounder: (1 - pi_u) p_y(0, s) + pi_u p_y(1, s).
    """
    s = _check_s(params, s)
    return float((1.0 - params.pi_u) * params.p_y[0, s] + params.pi_u * params.p_y[1, s])


def posterior_u(params: BinaryParams, s: int) -> float:
    """P(U=1 | A=a) for any cause vector a with S(a) = s.

    Exchangeability makes the posterior a function of s alone.  Computed in
    log space so large m does not underflow.
    """
    s = _check_s(params, s)
    r = params.m - s
    lw1 = xlogy(1.0, params.pi_u) + xlogy(s, params.p_a1) + xlogy(r, 1.0 - params.p_a1)
    lw0 = xlogy(1.0, 1.0 - params.pi_u) + xlogy(s, params.p_a0) + xlogy(r, 1.0 - params.p_a0)
    if np.isneginf(lw0) and np.isneginf(lw1):
        raise ValueError(
            f"cause count s={s} is impossible under both confounder values; "
            "the conditioning event has probability zero"
        )
    return float(np.exp(lw1 - np.logaddexp(lw0, lw1)))


def observational_prob(params: BinaryParams, s: int) -> float:
    """P(Y=1 | A=a) for any a with S(a) = s: the posterior-weighted outcome mean."""
    pu = posterior_u(params, s)
    return float((1.0 - pu) * params.p_y[0, s] + pu * params.p_y[1, s])


def frechet_bounds(pi_u_given_a: float, pi_y_given_a: float) -> tuple[float, float]:
    """Sharp bounds on the joint cell P(U=1, Y=1 | a) given its two margins.

    lo = max(0, pi_u_given_a + pi_y_given_a - 1), hi = min(pi_u_given_a,
    pi_y_given_a); lo <= hi for any margins.
    """
    pu = _check_prob(pi_u_given_a, "pi_u_given_a")
    py = _check_prob(pi_y_given_a, "pi_y_given_a")
    hi = min(pu, py)
    # (pu + py) - 1 can round one ulp above min(pu, py) when a margin is 1.
    lo = min(max(0.0, pu + py - 1.0), hi)
    return lo, hi


@dataclass(frozen=True)
class JointTable:
    """2x2 conditional table p_{uy|a} with its margins.

    Cells are ordered p00, p01, p10, p11 where the first index is u and the
    second is y.  Row margin: p10 + p11 = pi_u_given_a; column margin:
    p01 + p11 = pi_y_given_a.
    """

    p00: float
    p01: float
    p10: float
    p11: float
    pi_u_given_a: float
    pi_y_given_a: float

    def __post_init__(self):
        cells = (self.p00, self.p01, self.p10, self.p11)
        if min(cells) < -_TOL:
            raise ValueError(f"table cells must be nonnegative, got {cells}")
        if abs(sum(cells) - 1.0) > _TOL:
            raise ValueError(f"table cells must sum to 1, got {sum(cells)!r}")
        if abs(self.p10 + self.p11 - self.pi_u_given_a) > _TOL:
            raise ValueError("row margin p10 + p11 does not match pi_u_given_a")
        if abs(self.p01 + self.p11 - self.pi_y_given_a) > _TOL:
            raise ValueError("column margin p01 + p11 does not match pi_y_given_a")

    def cells(self) -> tuple[float, float, float, float]:
        return (self.p00, self.p01, self.p10, self.p11)


def table_from_p11(pi_u_given_a: float, pi_y_given_a: float, p11: float) -> JointTable:
    """Fill the table from its margins and the free cell p11.

    ``p11`` must lie inside the Frechet bounds; tiny negative cells from
    boundary rounding are clipped to zero.
    """
    pu = _check_prob(pi_u_given_a, "pi_u_given_a")
    py = _check_prob(pi_y_given_a, "pi_y_given_a")
    lo, hi = frechet_bounds(pu, py)
    if p11 < lo - _TOL:
        raise ValueError(f"p11={p11} below the Frechet lower bound max(0, pu+py-1)={lo}")
    if p11 > hi + _TOL:
        raise ValueError(f"p11={p11} above the Frechet upper bound min(pu, py)={hi}")

    def _clip(v: float) -> float:
        return 0.0 if -_TOL < v < 0.0 else v

    p11 = _clip(float(p11))
    p10 = _clip(pu - p11)
    p01 = _clip(py - p11)
    p00 = _clip(1.0 - pu - py + p11)
    return JointTable(p00, p01, p10, p11, pu, py)


def copula_density(table: JointTable) -> tuple[float, float, float, float]:
    """Cell-wise dependence densities c(u, y | a) = p_{uy|a} / (margin_u * margin_y).

    Returned in cell order (c00, c01, c10, c11).  All four equal 1 exactly
    when U and Y are conditionally independent.  Undefined when either
    margin is degenerate.
    """
    pu, py = table.pi_u_given_a, table.pi_y_given_a
    if not (0.0 < pu < 1.0) or not (0.0 < py < 1.0):
        raise DegenerateMarginError(
            "copula density is undefined for degenerate margins; "
            "see degenerate_ignorance for the limiting intervals"
        )
    return (
        table.p00 / ((1.0 - pu) * (1.0 - py)),
        table.p01 / ((1.0 - pu) * py),
        table.p10 / (pu * (1.0 - py)),
        table.p11 / (pu * py),
    )


def causal_from_table(pi_u: float, table: JointTable) -> float:
    """Intervention probability implied by a completed table.

    P(Y=1 | do(a)) = (1 - pi_u) p01 / (1 - pi_u_given_a) + pi_u p11 / pi_u_given_a.
    """
    pi_u = _check_prob(pi_u, "pi_u")
    pu = table.pi_u_given_a
    if not (0.0 < pu < 1.0):
        raise DegenerateMarginError(
            "pi_u_given_a is degenerate; use degenerate_ignorance for the limit interval"
        )
    return float((1.0 - pi_u) * table.p01 / (1.0 - pu) + pi_u * table.p11 / pu)


def log_odds_ratio(params: BinaryParams, s: int) -> float:
    """Log-odds ratio of the model-implied table at cause count s.

    log((p11/p10) / (p01/p00)); equals logit(p_y(1,s)) - logit(p_y(0,s))
    whenever all cells are positive.  Returns +-inf when exactly one
    diagonal product vanishes and nan when the table is doubly degenerate.
    """
    pu = posterior_u(params, s)
    p1, p0 = params.p_y[1, s], params.p_y[0, s]
    cells = np.array([(1 - pu) * (1 - p0), (1 - pu) * p0, pu * (1 - p1), pu * p1])
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(cells)
        return float(logs[3] + logs[0] - logs[2] - logs[1])


@dataclass(frozen=True)
class IgnoranceInterval:
    """Closed interval of intervention probabilities compatible with the data.

    Both the true causal parameter and the observational parameter always
    lie inside (up to floating-point slack).
    """

    lo: float
    hi: float
    point_true: float
    point_obs: float

    def __post_init__(self):
        if not (self.lo <= self.hi + _TOL):
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")
        if self.lo < -_TOL or self.hi > 1.0 + _TOL:
            raise ValueError(f"interval must lie within [0, 1]: [{self.lo}, {self.hi}]")
        for name in ("point_true", "point_obs"):
            v = getattr(self, name)
            if not (self.lo - _TOL <= v <= self.hi + _TOL):
                raise ValueError(f"{name}={v} falls outside [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def ignorance_region(params: BinaryParams, s: int) -> IgnoranceInterval:
    """Interval of P(Y=1 | do(a)) values compatible with the observable law.

    The causal parameter is affine in the free cell p11, so its extremes
    occur at the Frechet endpoints; only those two evaluations are needed.
    """
    pu = posterior_u(params, s)
    py = observational_prob(params, s)
    lo11, hi11 = frechet_bounds(pu, py)
    ends = [
        causal_from_table(params.pi_u, table_from_p11(pu, py, p11)) for p11 in (lo11, hi11)
    ]
    return IgnoranceInterval(
        lo=min(ends),
        hi=max(ends),
        point_true=intervention_prob(params, s),
        point_obs=py,
    )


def degenerate_ignorance(pi_u: float, pi_y_given_a: float, side: str) -> IgnoranceInterval:
    """Limiting ignorance interval when the confounder posterior degenerates.

    side="zero" is the limit pi_u_given_a -> 0, where the data say nothing
    about P(Y=1 | U=1, a) and the interval is
    (1 - pi_u) * pi_y_given_a + [0, pi_u]; side="one" is the mirror limit
    pi_u_given_a -> 1 with width 1 - pi_u.  The true causal parameter is not
    determined by these two inputs, so both reference points are set to the
    observational value, which always lies inside.
    """
    pi_u = _check_prob(pi_u, "pi_u")
    py = _check_prob(pi_y_given_a, "pi_y_given_a")
    if side == "zero":
        lo, width = (1.0 - pi_u) * py, pi_u
    elif side == "one":
        lo, width = pi_u * py, 1.0 - pi_u
    else:
        raise ValueError(f"side must be 'zero' or 'one', got {side!r}")
    return IgnoranceInterval(lo=lo, hi=lo + width, point_true=py, point_obs=py)
