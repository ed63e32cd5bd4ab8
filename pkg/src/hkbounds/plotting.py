"""Render sweep tables as figures, one panel per agent count.

Closed-form bounds draw as lines over the epsilon grid; Monte Carlo
estimates draw as points with 95% error bars. The delimited sweep output
stays the canonical artifact; these renders exist so a sweep directory is
readable at a glance.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sweep import Row

_MC_MARKERS = ("o", "s", "^", "v", "D", "P", "X")


def render_sweep_figures(rows: list[Row], out_base) -> list[Path]:
    """One PNG per n in the table, named <out_base>_n<k>.png."""
    out_base = Path(out_base)
    by_n: dict[int, list[Row]] = {}
    for row in rows:
        by_n.setdefault(row.n, []).append(row)
    paths = []
    for n in sorted(by_n):
        path = out_base.parent / f"{out_base.stem}_n{n}.png"
        _render_panel(n, by_n[n], path)
        paths.append(path)
    return paths


def _render_panel(n: int, rows: list[Row], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    bound_names = _in_order(r.name for r in rows if r.kind == "bound")
    mc_names = _in_order(r.name for r in rows if r.kind == "mc")
    for name in bound_names:
        pts = sorted((r.eps, r.value) for r in rows if r.kind == "bound" and r.name == name)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "-", label=name)
    for idx, name in enumerate(mc_names):
        sel = sorted(
            (r.eps, r.value, r.stderr or 0.0)
            for r in rows
            if r.kind == "mc" and r.name == name
        )
        ax.errorbar(
            [p[0] for p in sel],
            [p[1] for p in sel],
            yerr=[1.96 * p[2] for p in sel],
            fmt=_MC_MARKERS[idx % len(_MC_MARKERS)],
            markersize=4,
            capsize=2,
            linestyle="none",
            label=name,
        )
    d = rows[0].d
    ax.set_xlabel("epsilon")
    ax.set_ylabel("probability")
    ax.set_title(f"n={n}, d={d}")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _in_order(names) -> list[str]:
    seen = []
    for name in names:
        if name not in seen:
            seen.append(name)
    return seen
