#!/usr/bin/env python3
"""Render the experiment CSVs as figures (companion recipe, needs matplotlib).

Reads the out/<experiment>/ directories produced by scripts/run_all.py (or by
the CLI directly) and writes PNGs next to the CSVs.  The tool itself never
plots; these recipes exist so the CSV schemas stay the source of truth.

Usage: python scripts/render_figures.py [out_root]
"""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv(path: Path) -> list[dict]:
    with path.open() as fh:
        return list(csv.DictReader(fh))


def linear(out: Path) -> None:
    rows = read_csv(out / "linear_ignorance.csv")
    c = [float(r["c"]) for r in rows if r["valid"] == "1"]
    s = [float(r["s_c"]) for r in rows if r["valid"] == "1"]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(c, s, "k-", lw=2)
    ax.axhline(1.0, color="C0", ls=":", label="true effect scale")
    ax.axhline(0.0, color="C3", ls=":", label="zero effect")
    ax.set_xscale("log")
    ax.set_xlabel("latent scaling factor c")
    ax.set_ylabel("effect multiplier s(c)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out / "linear_ignorance.png", dpi=150)


def binary(out: Path) -> None:
    rows = read_csv(out / "binary_ignorance.csv")
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for r in rows:
        s = int(r["s"])
        ax.plot([s, s], [float(r["lo"]), float(r["hi"])], "k-", lw=6, alpha=0.3)
        ax.plot(s, float(r["pi_do_true"]), "C0o", ms=5)
        ax.plot(s, float(r["pi_obs"]), "C3x", ms=6)
    ax.plot([], [], "k-", lw=6, alpha=0.3, label="ignorance region")
    ax.plot([], [], "C0o", label="true P(Y=1|do(a))")
    ax.plot([], [], "C3x", label="observational P(Y=1|a)")
    ax.set_xlabel("cause count s(a)")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "binary_ignorance.png", dpi=150)


def estimate(out: Path) -> None:
    rows = read_csv(out / "estimate_summary.csv")
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for setting, color in (("standard", "C0"), ("proxy", "C1")):
        pts = [r for r in rows if r["setting"] == setting]
        if not pts:
            continue
        g = [float(r["gamma_target"]) for r in pts]
        mu = [float(r["mean_pi_do_hat"]) for r in pts]
        sd = [float(r["sd_pi_do_hat"]) for r in pts]
        ax.errorbar(g, mu, yerr=sd, color=color, marker="o", capsize=3, label=setting)
    ax.set_xlabel("penalty center gamma_target")
    ax.set_ylabel("estimated P(Y=1|do(a))")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out / "estimate.png", dpi=150)


def positivity(out: Path) -> None:
    clouds = sorted(out.glob("positivity_m*.csv"), key=lambda p: int(p.stem.split("m")[-1]))
    fig, axes = plt.subplots(1, len(clouds), figsize=(3 * len(clouds), 3), sharey=True)
    rates = {int(r["m"]): float(r["misclass_rate"]) for r in read_csv(out / "positivity_rates.csv")}
    for ax, path in zip(axes, clouds):
        m = int(path.stem.split("m")[-1])
        rows = read_csv(path)
        for uval, (marker, color) in {0: ("o", "C0"), 1: ("s", "C3")}.items():
            xs = [float(r["x1"]) for r in rows if int(r["u"]) == uval]
            ys = [float(r["x2"]) for r in rows if int(r["u"]) == uval]
            ax.scatter(xs, ys, s=8, marker=marker, c=color, alpha=0.5, label=f"U={uval}")
        ax.axvline(0.5, color="k", lw=1)
        ax.set_title(f"m={m}, err={rates[m]:.3g}")
        ax.set_xlabel("x1 = S(a)/m")
    axes[0].set_ylabel("x2 (orthogonal contrast)")
    axes[0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "positivity.png", dpi=150)


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "out"
    for name, fn in {
        "linear-ignorance": linear,
        "binary-ignorance": binary,
        "estimate": estimate,
        "positivity": positivity,
    }.items():
        out = root / name
        if out.is_dir():
            fn(out)
            print(f"rendered {name}")
        else:
            print(f"skipped {name}: {out} not found")
