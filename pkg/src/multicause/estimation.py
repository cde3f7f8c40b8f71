"""Simulation and penalized maximum-likelihood estimation for the binary model.

The generator draws (A, Y) rows from the all-binary latent-confounder model,
optionally with two binary proxy observations of the latent variable.  The
estimator maximizes the marginal likelihood over all parameters in logit
space, plus a weak quadratic penalty that pulls the model-implied log-odds
ratio at a chosen target cause vector toward a configurable value.  Sweeping
that target traces how far regularization alone can move the intervention
estimate inside the ignorance region; with informative proxies the
likelihood pins the estimate and the sweep flattens out.

The likelihood depends on a row only through (S(a), y, z), so rows are
collapsed to weighted sufficient-statistic types before optimization; a full
fit is a few thousand cheap iterations.  The ascent is first-order with a
diagonal curvature preconditioner (complete-data information) and
step-halving, so accepted objective values are non-decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit, xlogy

from .binary_latent import BinaryParams, intervention_prob, log_odds_ratio

__all__ = [
    "ProxyParams",
    "Dataset",
    "FitConfig",
    "FitResult",
    "sample_dataset",
    "log_likelihood",
    "penalized_objective",
    "objective_and_gradient",
    "pack_params",
    "unpack_params",
    "fit",
]


@dataclass(frozen=True)
class ProxyParams:
    """Response probabilities of two conditionally independent binary proxies.

    ``p_z1[u]`` is P(Z1 = 1 | U = u), likewise ``p_z2``.  Each proxy must be
    informative (the two conditional probabilities differ).
    """

    p_z1: tuple[float, float]
    p_z2: tuple[float, float]

    def __post_init__(self):
        for name in ("p_z1", "p_z2"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2:
                raise ValueError(f"{name} must be a pair of probabilities")
            if not all(0.0 <= v <= 1.0 for v in pair):
                raise ValueError(f"{name} entries must lie in [0, 1], got {pair}")
            if pair[0] == pair[1]:
                raise ValueError(f"{name} must be informative: p(.|0) != p(.|1)")
            object.__setattr__(self, name, pair)

    def as_array(self) -> np.ndarray:
        """(2 proxies, 2 confounder levels) response matrix."""
        return np.array([self.p_z1, self.p_z2], dtype=float)


@dataclass(frozen=True)
class Dataset:
    """Simulated rows: cause bits ``a`` (n, m), outcome bits ``y`` (n,), and
    optional proxy bits ``z`` (n, 2).  The generating seed is recorded so any
    dataset can be reproduced bit for bit."""

    a: np.ndarray
    y: np.ndarray
    z: np.ndarray | None
    seed: int

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=np.uint8)
        y = np.ascontiguousarray(self.y, dtype=np.uint8)
        if a.ndim != 2 or y.shape != (a.shape[0],):
            raise ValueError("a must be (n, m) and y must be (n,)")
        if a.max(initial=0) > 1 or y.max(initial=0) > 1:
            raise ValueError("a and y must be 0/1 valued")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        if self.z is not None:
            z = np.ascontiguousarray(self.z, dtype=np.uint8)
            if z.shape != (a.shape[0], 2) or z.max(initial=0) > 1:
                raise ValueError("z must be (n, 2) and 0/1 valued")
            object.__setattr__(self, "z", z)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]

    def s(self) -> np.ndarray:
        """Per-row cause counts S(a)."""
        return self.a.sum(axis=1).astype(np.int64)


def sample_dataset(
    params: BinaryParams, proxies: ProxyParams | None, n: int, seed: int
) -> Dataset:
    """Draw n independent rows from the generator; the latent U is discarded.

    U ~ Bern(pi_u); A components iid Bern(p_a(U)); Y ~ Bern(p_y(U, S(A)));
    optionally Z1, Z2 independent Bernoulli given U.  The draw order is
    (U, A, Y, Z), so two calls with the same seed produce identical (a, y)
    whether or not proxies are requested.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = (rng.random(n) < params.pi_u).astype(np.int64)
    p_a = np.where(u == 1, params.p_a1, params.p_a0)
    a = rng.random((n, params.m)) < p_a[:, None]
    s = a.sum(axis=1)
    y = rng.random(n) < params.p_y[u, s]
    z = None
    if proxies is not None:
        z = rng.random((n, 2)) < proxies.as_array()[:, u].T
    return Dataset(a=a, y=y, z=z, seed=seed)


# ---------------------------------------------------------------------------
# sufficient statistics and the logit-space objective


@dataclass(frozen=True)
class _Counts:
    """Dataset collapsed to distinct (s, y[, z1, z2]) row types with counts."""

    s: np.ndarray
    y: np.ndarray
    z: np.ndarray | None  # (T, 2) or None
    weight: np.ndarray
    m: int
    n: int


def _compress(data: Dataset, use_z: bool) -> _Counts:
    s = data.s()
    if use_z:
        if data.z is None:
            raise ValueError("dataset carries no proxy columns")
        code = ((s * 2 + data.y) * 2 + data.z[:, 0]) * 2 + data.z[:, 1]
        counts = np.bincount(code, minlength=(data.m + 1) * 8)
        codes = np.nonzero(counts)[0]
        z2 = codes % 2
        rest = codes // 2
        z1 = rest % 2
        rest //= 2
        return _Counts(
            s=rest // 2,
            y=rest % 2,
            z=np.stack([z1, z2], axis=1),
            weight=counts[codes].astype(float),
            m=data.m,
            n=data.n,
        )
    code = s * 2 + data.y
    counts = np.bincount(code, minlength=(data.m + 1) * 2)
    codes = np.nonzero(counts)[0]
    return _Counts(
        s=codes // 2, y=codes % 2, z=None, weight=counts[codes].astype(float), m=data.m, n=data.n
    )


def _dim(m: int, with_proxies: bool) -> int:
    return 3 + 2 * (m + 1) + (4 if with_proxies else 0)


def pack_params(params: BinaryParams, proxies: ProxyParams | None = None) -> np.ndarray:
    """Logit-space parameter vector [pi_u, p_a0, p_a1, p_y row 0, p_y row 1,
    (z1|u=0, z1|u=1, z2|u=0, z2|u=1)].  Probabilities must be strictly
    interior so the logits are finite."""
    probs = np.concatenate(
        [
            [params.pi_u, params.p_a0, params.p_a1],
            params.p_y[0],
            params.p_y[1],
            np.ravel(proxies.as_array()) if proxies is not None else [],
        ]
    )
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise ValueError("pack_params requires probabilities strictly inside (0, 1)")
    return logit(probs)


def unpack_params(
    theta: np.ndarray, m: int, with_proxies: bool
) -> tuple[BinaryParams, ProxyParams | None]:
    """Inverse of :func:`pack_params`."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (_dim(m, with_proxies),):
        raise ValueError(f"theta must have length {_dim(m, with_proxies)}")
    p = expit(theta)
    params = BinaryParams(
        pi_u=p[0], p_a0=p[1], p_a1=p[2], m=m, p_y=p[3 : 3 + 2 * (m + 1)].reshape(2, m + 1)
    )
    proxies = None
    if with_proxies:
        q = p[-4:]
        proxies = ProxyParams(p_z1=(q[0], q[1]), p_z2=(q[2], q[3]))
    return params, proxies


def _log_components(
    counts: _Counts,
    pi_u: float,
    p_a0: float,
    p_a1: float,
    p_y: np.ndarray,
    p_z: np.ndarray | None,
) -> np.ndarray:
    """(T, 2) log joints log P(u) + log P(row type | u)."""
    s, y, r = counts.s, counts.y, counts.m - counts.s
    lp = np.empty((s.shape[0], 2))
    for u, (pa, pw) in enumerate(((p_a0, 1.0 - pi_u), (p_a1, pi_u))):
        col = (
            xlogy(1.0, pw)
            + xlogy(s, pa)
            + xlogy(r, 1.0 - pa)
            + xlogy(y, p_y[u, s])
            + xlogy(1 - y, 1.0 - p_y[u, s])
        )
        if p_z is not None:
            for j in range(2):
                zj = counts.z[:, j]
                col = col + xlogy(zj, p_z[j, u]) + xlogy(1 - zj, 1.0 - p_z[j, u])
        lp[:, u] = col
    return lp


def _loglik_counts(counts, pi_u, p_a0, p_a1, p_y, p_z) -> float:
    lp = _log_components(counts, pi_u, p_a0, p_a1, p_y, p_z)
    return float(counts.weight @ np.logaddexp(lp[:, 0], lp[:, 1]))


def log_likelihood(
    params: BinaryParams, data: Dataset, proxies: ProxyParams | None = None
) -> float:
    """Marginal log-likelihood, summed over rows, with U integrated out.

    Returns -inf (not an exception) when some row has probability zero under
    the parameters, so optimizers can retreat from the boundary.
    """
    if data.m != params.m:
        raise ValueError(f"dataset has m={data.m} causes, params have m={params.m}")
    counts = _compress(data, use_z=proxies is not None)
    p_z = proxies.as_array() if proxies is not None else None
    return _loglik_counts(counts, params.pi_u, params.p_a0, params.p_a1, params.p_y, p_z)


@dataclass(frozen=True)
class FitConfig:
    """Settings for one penalized fit.

    ``lam`` weights the quadratic penalty pulling the model-implied log-odds
    ratio at ``target_a`` toward ``gamma_target``.  ``step_size`` is the
    initial (and maximum) preconditioned step; ``tol`` stops the ascent when
    the largest preconditioned gradient component falls below it.
    """

    target_a: np.ndarray
    lam: float = 0.1
    gamma_target: float = 0.0
    max_iters: int = 1500
    step_size: float = 1.0
    tol: float = 1e-6
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        target = np.array(self.target_a, dtype=np.int64)
        if target.ndim != 1 or np.any((target != 0) & (target != 1)):
            raise ValueError("target_a must be a 1-d 0/1 vector")
        target.setflags(write=False)
        object.__setattr__(self, "target_a", target)
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_size <= 0.0 or self.tol <= 0.0:
            raise ValueError("step_size and tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    @property
    def s_star(self) -> int:
        """Cause count of the target vector."""
        return int(self.target_a.sum())


@dataclass(frozen=True)
class FitResult:
    """Best fit across restarts, relabeled so that p_a1 > p_a0."""

    params_hat: BinaryParams
    proxies_hat: ProxyParams | None
    pi_do_hat: float
    gamma_hat: float
    loglik: float
    converged: bool


def penalized_objective(
    params: BinaryParams,
    data: Dataset,
    config: FitConfig,
    proxies: ProxyParams | None = None,
) -> float:
    """log_likelihood - lam * (log_odds_ratio(target) - gamma_target)^2.

    The log-odds ratio of the implied table flips sign under the u <-> 1-u
    relabeling, so it is evaluated under the labeling convention p_a1 > p_a0;
    that makes the penalty invariant to label switching and gives the target
    a well-defined sign.  A degenerate implied table makes the log-odds ratio
    infinite and the objective -inf.  With lam == 0 this is exactly the
    log-likelihood and the table is never consulted.
    """
    ll = log_likelihood(params, data, proxies)
    if config.lam == 0.0:
        return ll
    gamma = log_odds_ratio(params, config.s_star)
    if params.p_a1 < params.p_a0:
        gamma = -gamma
    if not np.isfinite(gamma):
        return float("-inf")
    return ll - config.lam * (gamma - config.gamma_target) ** 2


def _unpack_raw(theta: np.ndarray, m: int, with_proxies: bool):
    p = expit(theta)
    p_y = p[3 : 3 + 2 * (m + 1)].reshape(2, m + 1)
    p_z = p[-4:].reshape(2, 2) if with_proxies else None
    return p[0], p[1], p[2], p_y, p_z


def _gamma_sign(theta) -> float:
    # Penalized log-odds ratio follows the p_a1 > p_a0 labeling convention.
    return 1.0 if theta[2] >= theta[1] else -1.0


def _objective(theta, counts, config, with_proxies) -> float:
    pi_u, p_a0, p_a1, p_y, p_z = _unpack_raw(theta, counts.m, with_proxies)
    ll = _loglik_counts(counts, pi_u, p_a0, p_a1, p_y, p_z)
    if config.lam == 0.0:
        return ll
    # Implied log-odds ratio at the target reduces to the logit difference of
    # the two outcome cells; the posterior margin cancels.
    gamma = _gamma_sign(theta) * (
        theta[3 + (counts.m + 1) + config.s_star] - theta[3 + config.s_star]
    )
    return ll - config.lam * (gamma - config.gamma_target) ** 2


def objective_and_gradient(
    theta: np.ndarray, data: Dataset, config: FitConfig, with_proxies: bool = False
) -> tuple[float, np.ndarray]:
    """Penalized objective and its analytic gradient in logit space.

    The gradient is exact: responsibility-weighted Bernoulli residuals for
    the likelihood part plus the quadratic penalty on the two target outcome
    logits.  The penalized log-odds ratio follows the p_a1 > p_a0 labeling
    convention (it flips sign under relabeling), so the objective is smooth
    everywhere except on the measure-zero plane p_a0 = p_a1.
    """
    counts = _compress(data, use_z=with_proxies)
    value, grad, _ = _eval(np.asarray(theta, dtype=float), counts, config, with_proxies)
    return value, grad


def _eval(theta, counts, config, with_proxies):
    """Objective, gradient, and diagonal curvature preconditioner at theta."""
    m = counts.m
    pi_u, p_a0, p_a1, p_y, p_z = _unpack_raw(theta, m, with_proxies)
    lp = _log_components(counts, pi_u, p_a0, p_a1, p_y, p_z)
    row_log = np.logaddexp(lp[:, 0], lp[:, 1])
    value = float(counts.weight @ row_log)
    d = theta.shape[0]
    if not np.isfinite(value):
        return float("-inf"), np.zeros(d), np.ones(d)

    with np.errstate(invalid="ignore"):
        w1 = np.exp(lp[:, 1] - row_log)
    w0 = 1.0 - w1
    wc0 = counts.weight * w0
    wc1 = counts.weight * w1
    s, y = counts.s, counts.y
    n = counts.n

    grad = np.empty(d)
    curv = np.empty(d)
    grad[0] = wc1.sum() - n * pi_u
    curv[0] = n * pi_u * (1.0 - pi_u)
    grad[1] = wc0 @ (s - m * p_a0)
    curv[1] = wc0.sum() * m * p_a0 * (1.0 - p_a0)
    grad[2] = wc1 @ (s - m * p_a1)
    curv[2] = wc1.sum() * m * p_a1 * (1.0 - p_a1)
    for u, wc in ((0, wc0), (1, wc1)):
        lo = 3 + u * (m + 1)
        resid = np.bincount(s, weights=wc * (y - p_y[u, s]), minlength=m + 1)
        mass = np.bincount(s, weights=wc, minlength=m + 1)
        grad[lo : lo + m + 1] = resid
        curv[lo : lo + m + 1] = mass * p_y[u] * (1.0 - p_y[u])
    if with_proxies:
        for j in range(2):
            zj = counts.z[:, j]
            for u, wc in ((0, wc0), (1, wc1)):
                k = d - 4 + 2 * j + u
                grad[k] = wc @ (zj - p_z[j, u])
                curv[k] = wc.sum() * p_z[j, u] * (1.0 - p_z[j, u])

    if config.lam > 0.0:
        i0 = 3 + config.s_star
        i1 = 3 + (m + 1) + config.s_star
        sign = _gamma_sign(theta)
        gamma = sign * (theta[i1] - theta[i0])
        pull = 2.0 * config.lam * (gamma - config.gamma_target) * sign
        value -= config.lam * (gamma - config.gamma_target) ** 2
        grad[i1] -= pull
        grad[i0] += pull
        curv[i0] += 2.0 * config.lam
        curv[i1] += 2.0 * config.lam

    # Floor keeps data-starved cells (responsibility mass well below one row)
    # from drifting for thousands of iterations on microscopic gradients;
    # identified parameters carry curvature orders of magnitude above it.
    np.maximum(curv, 1e-6 * n, out=curv)
    return value, grad, curv


def _ascend(theta0, counts, config, with_proxies, trace=None):
    """Monotone preconditioned gradient ascent with step-halving.

    Stops as converged when the preconditioned gradient falls below tol or
    when no step along it improves the objective (numerically stationary);
    only exhausting the iteration cap counts as non-convergence.
    """
    theta = np.array(theta0, dtype=float)
    value, grad, curv = _eval(theta, counts, config, with_proxies)
    if trace is not None:
        trace.append(value)
    step = config.step_size
    converged = False
    for _ in range(config.max_iters):
        direction = grad / curv
        if np.max(np.abs(direction)) < config.tol:
            converged = True
            break
        improved = False
        # sufficient increase at float-resolution scale: keeps data-starved
        # parameters from drifting toward the boundary on gains the objective
        # cannot meaningfully resolve
        min_gain = 1e-12 * (1.0 + abs(value))
        while step > 2.0**-40:
            cand = theta + step * direction
            cand_value = _objective(cand, counts, config, with_proxies)
            if cand_value > value + min_gain:
                theta = cand
                improved = True
                step = min(step * 2.0, config.step_size)
                break
            step *= 0.5
        if not improved:
            converged = True
            break
        value, grad, curv = _eval(theta, counts, config, with_proxies)
        if trace is not None:
            trace.append(value)
    return theta, value, converged


def _swap_labels(theta: np.ndarray, m: int, with_proxies: bool) -> np.ndarray:
    out = theta.copy()
    out[0] = -theta[0]
    out[1], out[2] = theta[2], theta[1]
    lo = 3
    out[lo : lo + m + 1] = theta[lo + m + 1 : lo + 2 * (m + 1)]
    out[lo + m + 1 : lo + 2 * (m + 1)] = theta[lo : lo + m + 1]
    if with_proxies:
        d = theta.shape[0]
        for j in range(2):
            k = d - 4 + 2 * j
            out[k], out[k + 1] = theta[k + 1], theta[k]
    return out


def fit(
    data: Dataset,
    config: FitConfig,
    with_proxies: bool = False,
    init: np.ndarray | None = None,
    history: list | None = None,
) -> FitResult:
    """Maximize the penalized objective over all parameters in logit space.

    Runs ``config.restarts`` ascents from logits drawn uniformly on [-1, 1]
    (seeded by ``config.seed``; ``init``, if given, replaces the first
    draw) and keeps the restart with the best final objective.  Label
    switching is resolved afterwards by the convention p_a1 > p_a0; all
    reported quantities refer to the relabeled parameters.

    The result is deterministic given (data seed, config seed).  A fit whose
    chosen restart hit the iteration cap without meeting the gradient
    tolerance is returned with converged=False rather than raised.

    ``history``, if provided, collects one array of accepted objective values
    per restart; the values are non-decreasing within each restart.
    """
    if config.target_a.shape[0] != data.m:
        raise ValueError(f"target_a has length {config.target_a.shape[0]}, data has m={data.m}")
    counts = _compress(data, use_z=with_proxies)
    d = _dim(data.m, with_proxies)
    rng = np.random.default_rng(config.seed)
    best = None
    for r in range(config.restarts):
        draw = rng.uniform(-1.0, 1.0, d)
        theta0 = draw if (init is None or r > 0) else np.asarray(init, dtype=float)
        trace = [] if history is not None else None
        theta, value, converged = _ascend(theta0, counts, config, with_proxies, trace)
        if history is not None:
            history.append(np.array(trace))
        if best is None or value > best[1]:
            best = (theta, value, converged)

    theta, value, converged = best
    if not np.isfinite(value):
        raise ArithmeticError("all restarts ended with non-finite objective")
    if expit(theta[2]) <= expit(theta[1]):
        theta = _swap_labels(theta, data.m, with_proxies)
    params_hat, proxies_hat = unpack_params(theta, data.m, with_proxies)
    s_star = config.s_star
    return FitResult(
        params_hat=params_hat,
        proxies_hat=proxies_hat,
        pi_do_hat=intervention_prob(params_hat, s_star),
        gamma_hat=float(theta[3 + (data.m + 1) + s_star] - theta[3 + s_star]),
        loglik=_loglik_counts(
            counts,
            params_hat.pi_u,
            params_hat.p_a0,
            params_hat.p_a1,
            params_hat.p_y,
            proxies_hat.as_array() if proxies_hat is not None else None,
        ),
        converged=converged,
    )
