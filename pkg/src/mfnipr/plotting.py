"""Flow-versus-budget figures for an experiment sweep."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["plot_sweep"]

_SERIES = (
    ("mfnip_flow", "MFNIP", "o-"),
    ("mfnip_after_restructure", "MFNIP, then restructured", "s--"),
    ("mfnipr_lower", "MFNIP-R lower bound", "^-"),
    ("mfnipr_upper", "MFNIP-R upper bound", "v:"),
)


def plot_sweep(rows: Sequence, stem: str | Path) -> list[Path]:
    """One PNG per (variant, mode): the four flow series against the attacker budget.

    Files are written as ``<stem>_<variant>_<mode>.png``; returns their paths.
    """
    groups: dict[tuple[str, str], list] = {}
    for r in rows:
        groups.setdefault((r.variant, r.mode), []).append(r)
    stem = Path(stem)
    paths = []
    for (variant, mode), group in sorted(groups.items()):
        group = sorted(group, key=lambda r: r.budget)
        budgets = [r.budget for r in group]
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for attr, label, style in _SERIES:
            ax.plot(budgets, [getattr(r, attr) for r in group], style, label=label, ms=4)
        ax.set_xlabel("attacker budget")
        ax.set_ylabel("maximum flow")
        ax.set_title(f"{variant} instances ({mode})")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = stem.with_name(f"{stem.name}_{variant}_{mode}.png")
        fig.savefig(path, dpi=110, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)
    return paths
