"""Report figures rendered as deterministic standalone SVG files.

Every entry point takes an already-computed report object plus an output
path, draws with the Agg backend, and returns the path.  Byte determinism:
the SVG hash salt is pinned so element ids depend only on content, and the
date metadata is stripped.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "specflow"

_FIGSIZE = (6.4, 4.0)


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def roof_plot(f, path) -> Path:
    """Step plot of a piecewise-constant roof over one period."""
    xs = [float(b) for b in f.xi] + [float(f.xi[0]) + 1.0]
    vs = [float(v) for v in f.values]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.stairs(vs, xs, baseline=None, color="tab:blue", lw=1.8)
    for x in xs[:-1]:
        ax.axvline(x, color="tab:gray", lw=0.6, ls=":")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_title(f"roof: {f.p} plateaus, min {float(f.min_value):.4f}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def dk_plot(rows, variation: float, path) -> Path:
    """Denjoy-Koksma deviations against the total-variation bound."""
    ns = [r.n for r in rows]
    devs = [max(r.max_deviation_float, 1e-300) for r in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogy(ns, devs, "o-", color="tab:blue", label="max |f^(q_n) - q_n c_f|")
    ax.axhline(variation, color="tab:red", ls="--", label="Var f")
    ax.set_xlabel("n")
    ax.set_ylabel("deviation")
    ax.set_title("Birkhoff sums at denominator times")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    return _finish(fig, path)


def delta_trace(report, path) -> Path:
    """Constancy segments of the Birkhoff difference, witness run marked."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for seg in report.segments:
        ax.hlines(
            float(seg.value), seg.start, seg.end, color="tab:blue", lw=1.6
        )
    ax.axvspan(
        report.M,
        report.M + report.L,
        color="tab:orange",
        alpha=0.25,
        label=f"run [M, M+L], L/M = {float(report.run_ratio):.3g}",
    )
    ax.axhline(float(report.rho), color="tab:orange", lw=0.8, ls="--")
    ax.set_xlabel("n")
    ax.set_ylabel("Delta(n)")
    ax.set_title(f"witness scan, window {report.window}")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def pair_scatter(stats, path) -> Path:
    """Shadowing pairs in the (M, L) plane with the kappa floor."""
    ms = [p.M_base for p in stats.pairs if p.L_base > 0]
    ls = [p.L_base for p in stats.pairs if p.L_base > 0]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if ms:
        ok = [p.passed for p in stats.pairs if p.L_base > 0]
        col = ["tab:green" if o else "tab:red" for o in ok]
        ax.scatter(ms, ls, s=18, c=col, alpha=0.8)
        grid = np.geomspace(min(ms), max(ms), 50)
        kappa = min(p.L_base / p.M_base for p in stats.pairs if p.M_base > 0)
        ax.plot(grid, kappa * grid, ls="--", color="tab:gray", label="min L/M")
        ax.legend()
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("M")
    ax.set_ylabel("L")
    ax.set_title(
        f"shadowing runs: {stats.pass_count}/{stats.trials} pairs passed"
    )
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    return _finish(fig, path)


def atom_plot(report, path) -> Path:
    """Mass distribution of the rigidity-time deviation atoms."""
    vals = [a.value_float for a in report.atoms]
    masses = [float(a.mass) for a in report.atoms]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.bar(vals, masses, width=0.02 * (max(vals) - min(vals) + 1e-9) + 1e-6)
    ax.axvline(report.t0, color="tab:orange", ls="--", lw=1.0, label="heaviest atom")
    ax.set_xlabel("deviation value")
    ax.set_ylabel("mass")
    ax.set_title(f"q_{report.n} = {report.qn}: {len(report.atoms)} atoms")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def eigen_plot(entries: Sequence[tuple[str, bool]], path) -> Path:
    """Solvability verdicts over the tested frequency grid."""
    labels = [e[0] for e in entries]
    flags = [1 if e[1] else 0 for e in entries]
    fig, ax = plt.subplots(figsize=(6.4, max(2.4, 0.28 * len(labels))))
    colors = ["tab:green" if f else "tab:red" for f in flags]
    ax.barh(range(len(labels)), [1] * len(labels), color=colors, alpha=0.7)
    ax.set_yticks(range(len(labels)), labels, fontsize=7)
    ax.set_xticks([])
    ax.set_title("eigenvalue equation: green solvable, red not")
    fig.tight_layout()
    return _finish(fig, path)


def residual_plot(report, zeta_modes, alpha: float, path) -> Path:
    """Coboundary residual over the circle for the truncated transfer."""
    xs = np.arange(report.grid_size) / report.grid_size

    def ev(md, pts):
        out = np.zeros_like(pts, dtype=np.complex128)
        for n, z in md.items():
            out += z * np.exp(2j * np.pi * n * pts)
        return out

    resid = np.abs(
        ev(report.u_modes, np.mod(xs + alpha, 1.0))
        - ev(report.u_modes, xs)
        - ev(zeta_modes, xs)
    )
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogy(xs, np.maximum(resid, 1e-300), color="tab:blue", lw=0.9)
    ax.axhline(report.residual_sup, color="tab:red", ls="--", label="sup")
    ax.set_xlabel("x")
    ax.set_ylabel("|u(x+a) - u(x) - zeta(x)|")
    ax.set_title(f"transfer residual, {report.n_modes} modes")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    return _finish(fig, path)


def phase_portrait(sys, path, grid: int = 257) -> Path:
    """Level sets of H on the fundamental square with critical points."""
    xs = np.linspace(0.0, 1.0, grid)
    ys = np.linspace(0.0, 1.0, grid)
    X, Y = np.meshgrid(xs, ys)
    H = sys.alpha1 * X + sys.alpha2 * Y + sys.P.eval_compiled(X, Y)
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    cs = ax.contour(X, Y, H, levels=41, linewidths=0.7, cmap="viridis")
    saddle_levels = [
        sys.H(c.x, c.y) for c in sys.critical_points if c.kind == "saddle"
    ]
    if saddle_levels:
        ax.contour(
            X, Y, H, levels=sorted(set(saddle_levels)),
            colors="tab:red", linewidths=1.4,
        )
    for c in sys.critical_points:
        marker = "x" if c.kind == "saddle" else "o"
        ax.plot(c.x, c.y, marker, color="tab:red", ms=7)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("H level sets (red: separatrix)")
    fig.colorbar(cs, ax=ax, shrink=0.85)
    fig.tight_layout()
    return _finish(fig, path)


def profile_plot(profile, path) -> Path:
    """Return-time profile with detected jumps annotated."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(profile.s, profile.return_time, ".", ms=3, color="tab:blue")
    for beta, d in zip(profile.beta_hat, profile.d_hat):
        ax.axvline(beta, color="tab:orange", ls="--", lw=1.0)
        ax.annotate(
            f"d={d:+.3g}",
            (beta, float(np.nanmax(profile.return_time))),
            fontsize=7,
            rotation=90,
            va="top",
        )
    ax.set_xlabel("s")
    ax.set_ylabel("return time")
    ax.set_title(
        f"section x0={profile.x0:g}: rotation {profile.rotation_estimate:.6f}, "
        f"{profile.jump_count} jumps"
    )
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def area_plot(report, path) -> Path:
    """Both sides of the area identity with the Monte Carlo error bar."""
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    ax.bar([0], [report.lhs_estimate], yerr=[report.lhs_radius], capsize=6,
           color="tab:blue", label="MC integral of g over EC")
    ax.bar([1], [report.rhs_quadrature], color="tab:orange",
           label="profile quadrature")
    ax.set_xticks([0, 1], ["weight mass", "roof integral"])
    ax.set_title(f"area identity, discrepancy {report.discrepancy:.2e}")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    return _finish(fig, path)
