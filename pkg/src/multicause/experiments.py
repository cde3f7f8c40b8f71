"""Deterministic experiment drivers behind the CLI.

Each runner consumes a validated config, writes figure-ready CSV files into
an output directory, and finishes by writing ``manifest.json`` with the
config echo, library version, SHA-256 checksums of every emitted file, and
the wall time.  A run directory without a manifest is by definition
incomplete.

Numeric CSV fields use Python's shortest round-trip decimal representation,
so reruns with identical configs (seeds included) produce byte-identical
files.  Worker seeds are derived from the base seed and the task coordinates
with SHA-256, never from wall clocks, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .binary_latent import BinaryParams, ignorance_region, logistic_outcome_table
from .estimation import FitConfig, ProxyParams, fit, sample_dataset
from .linear_gaussian import (
    StructuralParams,
    equivalent_params,
    ignorance_multiplier,
    implied_outcome_variance,
    observable_covariance,
)
from .positivity import hoeffding_envelope, misclassification_rate, projection_cloud

__all__ = [
    "ConfigError",
    "NumericalFailure",
    "derive_seed",
    "LinearIgnoranceConfig",
    "BinaryIgnoranceConfig",
    "EstimateConfig",
    "PositivityConfig",
    "run_linear_ignorance",
    "run_binary_ignorance",
    "run_estimate",
    "run_positivity",
]


class ConfigError(ValueError):
    """Configuration file is missing, malformed, or fails validation."""


class NumericalFailure(RuntimeError):
    """A run failed numerically (degenerate inputs, diverged fits)."""


def derive_seed(base_seed: int, *parts) -> int:
    """Stable 63-bit seed for a task identified by its grid coordinates.

    SHA-256 over the base seed and the coordinate reprs; independent of
    scheduling order, Python hash randomization, and platform.
    """
    text = "|".join([str(int(base_seed))] + [repr(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


# ---------------------------------------------------------------------------
# config parsing helpers


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing required field '{key}' in {where}")
    return d[key]


def _as_float(v, key: str) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}' must be a number, got {v!r}") from None


def _as_int(v, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise ConfigError(f"field '{key}' must be an integer, got {v!r}")
    return int(v)


def _grid(spec, key: str) -> list[float]:
    """A grid is either an explicit list or {start, stop, num} for linspace."""
    if isinstance(spec, dict):
        start = _as_float(_require(spec, "start", key), key)
        stop = _as_float(_require(spec, "stop", key), key)
        num = _as_int(_require(spec, "num", key), key)
        if num < 1:
            raise ConfigError(f"grid '{key}' must have num >= 1")
        return [float(v) for v in np.linspace(start, stop, num)]
    if isinstance(spec, (list, tuple)):
        if len(spec) == 0:
            raise ConfigError(f"grid '{key}' must be nonempty")
        return [_as_float(v, key) for v in spec]
    raise ConfigError(f"grid '{key}' must be a list or a start/stop/num mapping")


def _unknown_keys(d: dict, allowed: set[str], where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown field(s) {sorted(extra)} in {where}")


# ---------------------------------------------------------------------------
# per-experiment configs


@dataclass(frozen=True)
class LinearIgnoranceConfig:
    """Exchangeable linear-Gaussian model (alpha = a*1, beta = b*1) and a c grid."""

    m: int
    a: float
    b: float
    gamma: float
    sigma2_u: float
    sigma2_a: float
    sigma2_y: float
    c_grid: tuple[float, ...]

    @classmethod
    def from_dict(cls, d: dict) -> "LinearIgnoranceConfig":
        _unknown_keys(
            d, {"m", "a", "b", "gamma", "sigma2_u", "sigma2_a", "sigma2_y", "c_grid"}, "config"
        )
        cfg = cls(
            m=_as_int(_require(d, "m", "config"), "m"),
            a=_as_float(_require(d, "a", "config"), "a"),
            b=_as_float(_require(d, "b", "config"), "b"),
            gamma=_as_float(_require(d, "gamma", "config"), "gamma"),
            sigma2_u=_as_float(_require(d, "sigma2_u", "config"), "sigma2_u"),
            sigma2_a=_as_float(_require(d, "sigma2_a", "config"), "sigma2_a"),
            sigma2_y=_as_float(_require(d, "sigma2_y", "config"), "sigma2_y"),
            c_grid=tuple(_grid(_require(d, "c_grid", "config"), "c_grid")),
        )
        if cfg.m < 1:
            raise ConfigError("m must be >= 1")
        if cfg.b == 0.0:
            raise ConfigError("b must be nonzero (the effect multiplier is undefined at b=0)")
        if min(cfg.sigma2_u, cfg.sigma2_a, cfg.sigma2_y) <= 0.0:
            raise ConfigError("variances must be strictly positive")
        if any(c <= 0.0 for c in cfg.c_grid):
            raise ConfigError("c_grid entries must be positive")
        return cfg

    def params(self) -> StructuralParams:
        ones = np.ones(self.m)
        return StructuralParams(
            alpha=self.a * ones,
            beta=self.b * ones,
            gamma=self.gamma,
            sigma2_u=self.sigma2_u,
            sigma2_a=self.sigma2_a * ones,
            sigma2_y=self.sigma2_y,
        )


def _binary_params_from(d: dict, where: str) -> BinaryParams:
    outcome = d.get("outcome", {})
    if not isinstance(outcome, dict):
        raise ConfigError(f"'outcome' must be a mapping in {where}")
    _unknown_keys(outcome, {"slope", "shift"}, f"{where}.outcome")
    m = _as_int(_require(d, "m", where), "m")
    if m < 1:
        raise ConfigError("m must be >= 1")
    p_a0 = _as_float(_require(d, "p_a0", where), "p_a0")
    p_a1 = _as_float(d["p_a1"], "p_a1") if "p_a1" in d else 1.0 - p_a0
    try:
        return BinaryParams(
            pi_u=_as_float(_require(d, "pi_u", where), "pi_u"),
            p_a0=p_a0,
            p_a1=p_a1,
            m=m,
            p_y=logistic_outcome_table(
                m,
                slope=_as_float(outcome.get("slope", 0.5), "outcome.slope"),
                shift=_as_float(outcome.get("shift", 2.0), "outcome.shift"),
            ),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None


@dataclass(frozen=True)
class BinaryIgnoranceConfig:
    params: BinaryParams

    @classmethod
    def from_dict(cls, d: dict) -> "BinaryIgnoranceConfig":
        _unknown_keys(d, {"m", "pi_u", "p_a0", "p_a1", "outcome"}, "config")
        return cls(params=_binary_params_from(d, "config"))


@dataclass(frozen=True)
class EstimateConfig:
    generator: BinaryParams
    proxies: ProxyParams
    target_a: tuple[int, ...]
    gamma_targets: tuple[float, ...]
    n: int
    replications: int
    lam: float
    settings: tuple[str, ...]
    seed: int
    restarts: int = 5
    max_iters: int = 1500
    step_size: float = 1.0
    tol: float = 1e-6
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateConfig":
        _unknown_keys(
            d,
            {
                "generator",
                "proxies",
                "target_a",
                "gamma_targets",
                "n",
                "replications",
                "lam",
                "settings",
                "seed",
                "fit",
                "workers",
            },
            "config",
        )
        gen_d = _require(d, "generator", "config")
        if not isinstance(gen_d, dict):
            raise ConfigError("'generator' must be a mapping")
        _unknown_keys(gen_d, {"m", "pi_u", "p_a0", "p_a1", "outcome"}, "config.generator")
        generator = _binary_params_from(gen_d, "config.generator")

        prox_d = _require(d, "proxies", "config")
        if not isinstance(prox_d, dict):
            raise ConfigError("'proxies' must be a mapping with z1 and z2 pairs")
        _unknown_keys(prox_d, {"z1", "z2"}, "config.proxies")
        try:
            proxies = ProxyParams(
                p_z1=tuple(_require(prox_d, "z1", "config.proxies")),
                p_z2=tuple(_require(prox_d, "z2", "config.proxies")),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid proxies: {e}") from None

        target = _require(d, "target_a", "config")
        if not isinstance(target, (list, tuple)) or len(target) != generator.m:
            raise ConfigError(f"target_a must be a list of {generator.m} bits")
        if any(v not in (0, 1) for v in target):
            raise ConfigError("target_a entries must be 0 or 1")

        settings = tuple(d.get("settings", ["standard", "proxy"]))
        if len(settings) == 0 or any(s not in ("standard", "proxy") for s in settings):
            raise ConfigError("settings must be a nonempty subset of [standard, proxy]")

        fit_d = d.get("fit", {})
        if not isinstance(fit_d, dict):
            raise ConfigError("'fit' must be a mapping")
        _unknown_keys(fit_d, {"restarts", "max_iters", "step_size", "tol"}, "config.fit")

        cfg = cls(
            generator=generator,
            proxies=proxies,
            target_a=tuple(int(v) for v in target),
            gamma_targets=tuple(_grid(_require(d, "gamma_targets", "config"), "gamma_targets")),
            n=_as_int(d.get("n", 15000), "n"),
            replications=_as_int(d.get("replications", 20), "replications"),
            lam=_as_float(d.get("lam", 0.1), "lam"),
            settings=settings,
            seed=_as_int(_require(d, "seed", "config"), "seed"),
            restarts=_as_int(fit_d.get("restarts", 5), "fit.restarts"),
            max_iters=_as_int(fit_d.get("max_iters", 1500), "fit.max_iters"),
            step_size=_as_float(fit_d.get("step_size", 1.0), "fit.step_size"),
            tol=_as_float(fit_d.get("tol", 1e-6), "fit.tol"),
            workers=_as_int(d.get("workers", 1), "workers"),
        )
        if cfg.n < 1 or cfg.replications < 1:
            raise ConfigError("n and replications must be >= 1")
        if cfg.lam < 0.0:
            raise ConfigError("lam must be >= 0")
        if cfg.workers < 1:
            raise ConfigError("workers must be >= 1")
        return cfg


@dataclass(frozen=True)
class PositivityConfig:
    pi_u: float
    p_a0: float
    p_a1: float
    m_list: tuple[int, ...]
    n_cloud: int
    n_rate: int
    seed: int

    @classmethod
    def from_dict(cls, d: dict) -> "PositivityConfig":
        _unknown_keys(
            d, {"pi_u", "p_a0", "p_a1", "m_list", "n_cloud", "n_rate", "seed"}, "config"
        )
        m_list = _require(d, "m_list", "config")
        if not isinstance(m_list, (list, tuple)) or len(m_list) == 0:
            raise ConfigError("m_list must be a nonempty list")
        cfg = cls(
            pi_u=_as_float(_require(d, "pi_u", "config"), "pi_u"),
            p_a0=_as_float(_require(d, "p_a0", "config"), "p_a0"),
            p_a1=_as_float(_require(d, "p_a1", "config"), "p_a1"),
            m_list=tuple(_as_int(m, "m_list") for m in m_list),
            n_cloud=_as_int(d.get("n_cloud", 500), "n_cloud"),
            n_rate=_as_int(d.get("n_rate", 100_000), "n_rate"),
            seed=_as_int(_require(d, "seed", "config"), "seed"),
        )
        for m in cfg.m_list:
            if m < 2 or m % 2 != 0:
                raise ConfigError(f"m_list entries must be positive even integers, got {m}")
        if cfg.n_cloud < 1 or cfg.n_rate < 1:
            raise ConfigError("n_cloud and n_rate must be >= 1")
        return cfg

    def cause_model(self) -> BinaryParams:
        # Only the cause-model fields are consumed by the positivity helpers.
        try:
            return BinaryParams(
                pi_u=self.pi_u,
                p_a0=self.p_a0,
                p_a1=self.p_a1,
                m=1,
                p_y=np.full((2, 2), 0.5),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None


# ---------------------------------------------------------------------------
# CSV and manifest plumbing


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    out_dir: Path, experiment: str, config_echo: dict, files: list[Path], wall_time: float
) -> Path:
    manifest = {
        "experiment": experiment,
        "config": config_echo,
        "version": __version__,
        "files": {p.name: _sha256(p) for p in files},
        "wall_time_s": wall_time,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _finish(out_dir, experiment, config_echo, files, t0) -> list[Path]:
    manifest = _write_manifest(out_dir, experiment, config_echo, files, time.perf_counter() - t0)
    return files + [manifest]


# ---------------------------------------------------------------------------
# runners


def run_linear_ignorance(cfg: LinearIgnoranceConfig, out_dir: Path, config_echo: dict) -> list[Path]:
    """One row per grid point: validity, effect multiplier s(c), shift norm,
    implied outcome variance, and (on valid rows) the covariance-match
    residual as a self-check."""
    t0 = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    params = cfg.params()
    cov0 = observable_covariance(params).full_matrix()
    scale = max(1.0, float(np.max(np.abs(cov0))))
    rows = []
    for c in cfg.c_grid:
        s_c = ignorance_multiplier(params, c)
        sigma2_y1 = implied_outcome_variance(params, c)
        valid = sigma2_y1 > 0.0
        shift_norm = abs(s_c - 1.0) * abs(cfg.b) * np.sqrt(cfg.m)
        if valid:
            cov1 = observable_covariance(equivalent_params(params, c)).full_matrix()
            residual = float(np.max(np.abs(cov1 - cov0)) / scale)
        else:
            residual = float("nan")
        rows.append((c, valid, s_c, float(shift_norm), sigma2_y1, residual))
    path = _write_csv(
        out_dir / "linear_ignorance.csv",
        ["c", "valid", "s_c", "beta_shift_norm", "sigma2_y1", "cov_match_residual"],
        rows,
    )
    return _finish(out_dir, "linear-ignorance", config_echo, [path], t0)


def run_binary_ignorance(cfg: BinaryIgnoranceConfig, out_dir: Path, config_echo: dict) -> list[Path]:
    """Ignorance interval per cause count s = 0..m."""
    t0 = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for s in range(cfg.params.m + 1):
        try:
            region = ignorance_region(cfg.params, s)
        except ValueError as e:
            raise NumericalFailure(f"ignorance region failed at s={s}: {e}") from None
        rows.append((s, region.lo, region.hi, region.point_true, region.point_obs, region.width))
    path = _write_csv(
        out_dir / "binary_ignorance.csv",
        ["s", "lo", "hi", "pi_do_true", "pi_obs", "width"],
        rows,
    )
    return _finish(out_dir, "binary-ignorance", config_echo, [path], t0)


def _sweep_task(args) -> list[tuple]:
    """One (setting, replication): draw a dataset, fit every gamma target."""
    cfg, setting, rep = args
    with_proxies = setting == "proxy"
    data = sample_dataset(
        cfg.generator,
        cfg.proxies if with_proxies else None,
        cfg.n,
        derive_seed(cfg.seed, "data", rep),
    )
    rows = []
    for j, gamma_target in enumerate(cfg.gamma_targets):
        fc = FitConfig(
            target_a=np.array(cfg.target_a),
            lam=cfg.lam,
            gamma_target=gamma_target,
            max_iters=cfg.max_iters,
            step_size=cfg.step_size,
            tol=cfg.tol,
            restarts=cfg.restarts,
            seed=derive_seed(cfg.seed, "fit", setting, rep, j),
        )
        res = fit(data, fc, with_proxies=with_proxies)
        rows.append(
            (setting, gamma_target, rep, res.pi_do_hat, res.gamma_hat, res.converged)
        )
    return rows


def regularizer_sweep(cfg: EstimateConfig) -> list[tuple]:
    """All (setting, replication, gamma_target) fits, in deterministic order.

    Replications share data seeds across settings, so the standard and proxy
    runs see identical (a, y) draws.  With ``workers > 1`` tasks run in a
    process pool; seeds are pre-derived so the result is identical either way.
    """
    tasks = [(cfg, setting, rep) for setting in cfg.settings for rep in range(cfg.replications)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_sweep_task, tasks))
    else:
        chunks = [_sweep_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def run_estimate(cfg: EstimateConfig, out_dir: Path, config_echo: dict) -> list[Path]:
    """Regularizer sweep CSV plus per-(setting, gamma_target) summary."""
    t0 = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        rows = regularizer_sweep(cfg)
    except ArithmeticError as e:
        raise NumericalFailure(str(e)) from None
    detail = _write_csv(
        out_dir / "estimate.csv",
        ["setting", "gamma_target", "rep", "pi_do_hat", "gamma_hat", "converged"],
        rows,
    )
    summary_rows = []
    for setting in cfg.settings:
        for gamma_target in cfg.gamma_targets:
            vals = np.array(
                [r[3] for r in rows if r[0] == setting and r[1] == gamma_target]
            )
            sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            summary_rows.append((setting, gamma_target, float(vals.mean()), sd))
    summary = _write_csv(
        out_dir / "estimate_summary.csv",
        ["setting", "gamma_target", "mean_pi_do_hat", "sd_pi_do_hat"],
        summary_rows,
    )
    return _finish(out_dir, "estimate", config_echo, [detail, summary], t0)


def run_positivity(cfg: PositivityConfig, out_dir: Path, config_echo: dict) -> list[Path]:
    """Per-m projection scatter CSVs plus the misclassification-rate summary."""
    t0 = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    params = cfg.cause_model()
    files = []
    rate_rows = []
    for m in cfg.m_list:
        cloud = projection_cloud(params, m, cfg.n_cloud, derive_seed(cfg.seed, "cloud", m))
        files.append(
            _write_csv(
                out_dir / f"positivity_m{m}.csv",
                ["u", "x1", "x2", "u_hat"],
                [(p.u, p.x1, p.x2, p.u_hat) for p in cloud],
            )
        )
        rate = misclassification_rate(params, m, cfg.n_rate, derive_seed(cfg.seed, "rate", m))
        rate_rows.append((m, rate, hoeffding_envelope(m, cfg.p_a0, cfg.p_a1)))
    files.append(
        _write_csv(
            out_dir / "positivity_rates.csv",
            ["m", "misclass_rate", "hoeffding_bound"],
            rate_rows,
        )
    )
    return _finish(out_dir, "positivity", config_echo, files, t0)
