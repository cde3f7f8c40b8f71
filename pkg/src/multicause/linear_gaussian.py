"""Covariance algebra for a linear-Gaussian cause model with one latent factor.

``m`` observed causes load on a scalar latent variable U, and a scalar
outcome mixes a linear effect of the causes with a direct latent effect::

    A = alpha * U + eps_A
    Y = beta . A + gamma * U + eps_Y

The latent scale is not recoverable from second moments: rescaling U by a
factor ``c`` while shifting the effect vector along ``Sigma_AA^{-1} alpha``
leaves the observable covariance unchanged.  This module computes the
observable covariance blocks, members of that equivalence class, the
admissible range of ``c``, and the scale-free large-m shift ratio.

All functions are pure; parameter objects are immutable after construction
and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidScalingError",
    "StructuralParams",
    "ObservableCov",
    "AsymptoticFrame",
    "observable_covariance",
    "equivalent_params",
    "implied_outcome_variance",
    "valid_c_range",
    "ignorance_multiplier",
    "asymptotic_shift_ratio",
]


class InvalidScalingError(ValueError):
    """The requested scaling factor implies a non-positive outcome noise variance."""


def _frozen_vector(x, name: str) -> np.ndarray:
    out = np.array(x, dtype=float)
    if out.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {out.shape}")
    out.setflags(write=False)
    return out


def _check_scaling(c: float) -> float:
    c = float(c)
    if not np.isfinite(c) or c <= 0.0:
        raise ValueError(f"scaling factor must be a positive finite number, got {c}")
    return c


@dataclass(frozen=True)
class StructuralParams:
    """Full parameter vector of the linear-Gaussian cause/outcome model.

    Attributes:
        alpha: latent loadings on the m causes.
        beta: causal coefficients of the m causes.
        gamma: direct latent effect on the outcome.
        sigma2_u: latent variance (> 0).
        sigma2_a: per-cause noise variances (> 0, length m).
        sigma2_y: outcome noise variance (> 0).
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: float
    sigma2_u: float
    sigma2_a: np.ndarray
    sigma2_y: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frozen_vector(self.alpha, "alpha"))
        object.__setattr__(self, "beta", _frozen_vector(self.beta, "beta"))
        object.__setattr__(self, "sigma2_a", _frozen_vector(self.sigma2_a, "sigma2_a"))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "sigma2_u", float(self.sigma2_u))
        object.__setattr__(self, "sigma2_y", float(self.sigma2_y))
        m = self.alpha.shape[0]
        if m < 1:
            raise ValueError("need at least one cause (m >= 1)")
        if self.beta.shape[0] != m or self.sigma2_a.shape[0] != m:
            raise ValueError(
                "alpha, beta and sigma2_a must share length m: "
                f"{m}, {self.beta.shape[0]}, {self.sigma2_a.shape[0]}"
            )
        if self.sigma2_u <= 0.0 or self.sigma2_y <= 0.0 or np.any(self.sigma2_a <= 0.0):
            raise ValueError("all variances must be strictly positive")

    @property
    def m(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True)
class ObservableCov:
    """Observable covariance blocks (Sigma_AA, Sigma_AY, Sigma_YY).

    The assembled (m+1) x (m+1) matrix must be symmetric positive definite;
    construction fails otherwise.
    """

    sigma_aa: np.ndarray
    sigma_ay: np.ndarray
    sigma_yy: float

    def __post_init__(self):
        aa = np.array(self.sigma_aa, dtype=float)
        ay = np.array(self.sigma_ay, dtype=float)
        yy = float(self.sigma_yy)
        if aa.ndim != 2 or aa.shape[0] != aa.shape[1]:
            raise ValueError(f"sigma_aa must be square, got shape {aa.shape}")
        if ay.shape != (aa.shape[0],):
            raise ValueError("sigma_ay length must match sigma_aa")
        if not np.allclose(aa, aa.T, rtol=1e-10, atol=1e-12):
            raise ValueError("sigma_aa must be symmetric")
        aa.setflags(write=False)
        ay.setflags(write=False)
        object.__setattr__(self, "sigma_aa", aa)
        object.__setattr__(self, "sigma_ay", ay)
        object.__setattr__(self, "sigma_yy", yy)
        try:
            np.linalg.cholesky(self.full_matrix())
        except np.linalg.LinAlgError:
            raise ValueError("assembled observable covariance is not positive definite")

    @property
    def m(self) -> int:
        return self.sigma_aa.shape[0]

    def full_matrix(self) -> np.ndarray:
        """Assemble the full (m+1) x (m+1) covariance of (A, Y)."""
        m = self.m
        full = np.empty((m + 1, m + 1))
        full[:m, :m] = self.sigma_aa
        full[:m, m] = self.sigma_ay
        full[m, :m] = self.sigma_ay
        full[m, m] = self.sigma_yy
        return full


@dataclass(frozen=True)
class AsymptoticFrame:
    """Constants of the stable-variance large-m sequence of problems.

    At cause count m the structural parameters are
    ``alpha = a0 / sqrt(m) * 1``, ``beta = b0 / sqrt(m) * 1`` and
    ``sigma2_a = s0_sq * 1``, which keeps the marginal variances of each
    cause and of the outcome fixed as m grows.
    """

    a0: float
    b0: float
    s0_sq: float
    gamma: float
    sigma2_u: float
    sigma2_y: float

    def __post_init__(self):
        for name in ("s0_sq", "sigma2_u", "sigma2_y"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def params_at(self, m: int) -> StructuralParams:
        """Materialize the structural parameters of the problem with m causes."""
        if m < 1:
            raise ValueError("m must be >= 1")
        ones = np.ones(m)
        root_m = np.sqrt(float(m))
        return StructuralParams(
            alpha=ones * self.a0 / root_m,
            beta=ones * self.b0 / root_m,
            gamma=self.gamma,
            sigma2_u=self.sigma2_u,
            sigma2_a=ones * self.s0_sq,
            sigma2_y=self.sigma2_y,
        )


def observable_covariance(params: StructuralParams) -> ObservableCov:
    """Covariance blocks of the observable vector (A, Y).

    Sigma_AA = alpha alpha' sigma2_u + diag(sigma2_a)
    Sigma_AY = Sigma_AA beta + gamma sigma2_u alpha
    Sigma_YY = (beta'alpha + gamma)^2 sigma2_u + beta' diag(sigma2_a) beta + sigma2_y
    """
    a, b = params.alpha, params.beta
    sigma_aa = params.sigma2_u * np.outer(a, a) + np.diag(params.sigma2_a)
    sigma_ay = sigma_aa @ b + params.gamma * params.sigma2_u * a
    sigma_yy = (
        (b @ a + params.gamma) ** 2 * params.sigma2_u
        + b @ (params.sigma2_a * b)
        + params.sigma2_y
    )
    return ObservableCov(sigma_aa, sigma_ay, float(sigma_yy))


def _shift_vector(params: StructuralParams, sigma_aa: np.ndarray, c: float) -> np.ndarray:
    # Sigma_AA^{-1} alpha * gamma sigma2_u (1 - 1/c); dense SPD solve, no
    # structure assumed on alpha.
    base = np.linalg.solve(sigma_aa, params.alpha)
    return base * (params.gamma * params.sigma2_u * (1.0 - 1.0 / c))


def _outcome_variance(params: StructuralParams, cov: ObservableCov, c: float) -> tuple[float, np.ndarray]:
    alpha1 = c * params.alpha
    beta1 = params.beta + _shift_vector(params, cov.sigma_aa, c)
    sigma2_u1 = params.sigma2_u / c**2
    sigma2_y1 = (
        cov.sigma_yy
        - (beta1 @ alpha1 + params.gamma) ** 2 * sigma2_u1
        - beta1 @ (params.sigma2_a * beta1)
    )
    return float(sigma2_y1), beta1


def implied_outcome_variance(params: StructuralParams, c: float) -> float:
    """Outcome noise variance sigma2_y1(c) implied by rescaling the latent by c.

    May be non-positive; ``c`` is a valid scaling factor exactly when the
    returned value is > 0.
    """
    c = _check_scaling(c)
    cov = observable_covariance(params)
    return _outcome_variance(params, cov, c)[0]


def equivalent_params(params: StructuralParams, c: float) -> StructuralParams:
    """The member of the observational equivalence class at scaling factor c.

    Returns parameters (c*alpha, beta + Sigma_AA^{-1} alpha gamma sigma2_u
    (1 - 1/c), gamma, sigma2_u/c^2, sigma2_a, sigma2_y1(c)) whose observable
    covariance equals that of ``params`` exactly.

    Raises:
        InvalidScalingError: if the implied sigma2_y1(c) is not positive.
    """
    c = _check_scaling(c)
    if c == 1.0:
        return params
    cov = observable_covariance(params)
    sigma2_y1, beta1 = _outcome_variance(params, cov, c)
    if sigma2_y1 <= 0.0:
        raise InvalidScalingError(
            f"c={c} is not a valid scaling factor: implied outcome noise "
            f"variance sigma2_y1={sigma2_y1:.6g} must be positive"
        )
    return StructuralParams(
        alpha=c * params.alpha,
        beta=beta1,
        gamma=params.gamma,
        sigma2_u=params.sigma2_u / c**2,
        sigma2_a=params.sigma2_a,
        sigma2_y=sigma2_y1,
    )


def valid_c_range(params: StructuralParams, grid) -> np.ndarray:
    """Subset of ``grid`` whose scaling factors imply sigma2_y1(c) > 0.

    sigma2_y1 is a smooth rational function of c, so scanning a user-supplied
    grid and bracketing sign changes is sufficient at desk scale; no analytic
    interval endpoints are attempted.  c = 1 reproduces the original
    parameters and is always valid.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid of scaling factors must be nonempty")
    if np.any(grid <= 0.0) or not np.all(np.isfinite(grid)):
        raise ValueError("grid entries must be positive finite numbers")
    cov = observable_covariance(params)
    base = np.linalg.solve(cov.sigma_aa, params.alpha) * params.gamma * params.sigma2_u
    # beta1 for every grid point at once: (n, m)
    shift = np.outer(1.0 - 1.0 / grid, base)
    beta1 = params.beta[None, :] + shift
    inner = beta1 @ params.alpha * grid + params.gamma  # beta1 . (c alpha) + gamma
    quad = np.einsum("ij,j,ij->i", beta1, params.sigma2_a, beta1)
    sigma2_y1 = cov.sigma_yy - inner**2 * params.sigma2_u / grid**2 - quad
    return grid[sigma2_y1 > 0.0]


def ignorance_multiplier(params: StructuralParams, c: float) -> float:
    """Scalar s(c) with beta1(c) = s(c) * beta, for exchangeable parameters.

    Requires constant loading and effect vectors (alpha = a*1, beta = b*1
    with b != 0) and exchangeable cause noise (constant sigma2_a), so that
    the shift is itself a constant vector.  Meaningful as an equivalence-class
    member only for c in ``valid_c_range``; the formula itself is evaluated
    for any positive c.
    """
    c = _check_scaling(c)
    a0, b0, s0 = params.alpha[0], params.beta[0], params.sigma2_a[0]
    if not (np.all(params.alpha == a0) and np.all(params.beta == b0)):
        raise ValueError("ignorance_multiplier requires constant alpha and beta vectors")
    if not np.all(params.sigma2_a == s0):
        raise ValueError("ignorance_multiplier requires exchangeable (constant) sigma2_a")
    if b0 == 0.0:
        raise ValueError("effect scale b must be nonzero")
    cov = observable_covariance(params)
    beta1 = params.beta + _shift_vector(params, cov.sigma_aa, c)
    return float(beta1[0] / b0)


def asymptotic_shift_ratio(frame: AsymptoticFrame, c: float) -> float:
    """Componentwise ratio of the effect shift to the true effect, fixed in m.

    Under the stable-variance frame the shift vector scales as m^{-1/2} and

        Delta_beta^{(k)}(c) / beta^{(k)} =
            a0 / (b0 (s0_sq + sigma2_u a0^2)) * gamma sigma2_u (1 - 1/c)

    for every component k and every cause count m.
    """
    c = _check_scaling(c)
    if frame.b0 == 0.0:
        raise ValueError("b0 must be nonzero")
    return float(
        frame.a0
        / (frame.b0 * (frame.s0_sq + frame.sigma2_u * frame.a0**2))
        * frame.gamma
        * frame.sigma2_u
        * (1.0 - 1.0 / c)
    )
