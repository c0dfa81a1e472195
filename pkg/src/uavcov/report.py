"""Figure rendering for sweep results.

One PNG per metric, plotted against the first sweep axis.  Analytical
values draw as solid lines; Monte Carlo values as markers with 3-sigma
error bars.  Remaining axes become one labeled line per value combination.
"""
from __future__ import annotations

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

from .sweep import ResultRecord, SweepSpec

_ENGINE_STYLE = {
    "analytic": {"linestyle": "-", "marker": ""},
    "mc": {"linestyle": "", "marker": "o"},
}


def render_figures(spec: SweepSpec, records: list[ResultRecord],
                   out_dir) -> list[Path]:
    """Write one PNG per metric into out_dir; returns the paths written."""
    if not spec.axes:
        print("no sweep axes; skipping figures", file=sys.stderr)
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x_key = spec.axes[0][0]
    group_keys = [key for key, _ in spec.axes[1:]]
    metrics = sorted({r.metric for r in records})
    written = []
    for metric in metrics:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for engine in sorted({r.engine for r in records if r.metric == metric}):
            rows = [r for r in records
                    if r.metric == metric and r.engine == engine]
            groups: dict[tuple, list[ResultRecord]] = {}
            for r in rows:
                group = tuple(r.overrides.get(k) for k in group_keys)
                groups.setdefault(group, []).append(r)
            for group, members in sorted(groups.items()):
                members.sort(key=lambda r: r.overrides.get(x_key, 0.0))
                x = [r.overrides.get(x_key) for r in members]
                y = [r.value for r in members]
                label = engine
                if group_keys:
                    label += " " + ",".join(
                        f"{k}={v:g}" for k, v in zip(group_keys, group))
                style = _ENGINE_STYLE.get(engine, {})
                if engine == "mc" and any(r.se is not None for r in members):
                    err = [3.0 * r.se if r.se is not None else 0.0
                           for r in members]
                    ax.errorbar(x, y, yerr=err, label=label, capsize=2.0,
                                **style)
                else:
                    ax.plot(x, y, label=label, **style)
        ax.set_xlabel(x_key)
        ax.set_ylabel(metric)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = out / f"{metric}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
