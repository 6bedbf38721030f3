"""Report figures: endmember spectra comparisons and SAVD bar charts.

Rendering always targets files through the Agg backend; outputs are
deterministic for identical inputs so report artifacts can be byte-compared.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fileio import sanitize_name

_DPI = 120
_FIGSIZE = (6.4, 4.2)


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def save_endmember_figure(
    wavelengths,
    curves: dict[str, np.ndarray],
    name: str,
    path,
    truth=None,
) -> None:
    """One endmember's spectrum per method, with the truth dashed if given."""
    fig, ax = _new_axes(name, "wavelength [nm]", "value")
    for method, values in curves.items():
        ax.plot(wavelengths, values, marker="o", markersize=3, label=method)
    if truth is not None:
        ax.plot(wavelengths, truth, "k--", linewidth=1.2, label="ground truth")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_savd_figure(
    names: list[str], table: dict[str, list[float]], path
) -> None:
    """Grouped SAVD bars: one group per endmember, one bar per method."""
    methods = list(table)
    positions = np.arange(len(names), dtype=float)
    width = min(0.8 / max(len(methods), 1), 0.3)
    fig, ax = _new_axes("abundance error by endmember", "", "SAVD [%]")
    for i, method in enumerate(methods):
        offsets = positions + (i - (len(methods) - 1) / 2) * width
        values = [v if v is not None else np.nan for v in table[method]]
        ax.bar(offsets, values, width=width, label=method)
    ax.set_xticks(positions)
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_comparison_figures(
    wavelengths,
    per_method: dict[str, np.ndarray],
    names: list[str],
    directory,
    truth=None,
) -> list[str]:
    """One figure per endmember; ``per_method[m]`` is a (p, bands) array.

    Returns the written paths in endmember order.
    """
    os.makedirs(directory, exist_ok=True)
    paths = []
    for k, name in enumerate(names):
        curves = {m: sig[k] for m, sig in per_method.items()}
        truth_curve = truth[k] if truth is not None else None
        out = os.path.join(directory, f"endmember_{sanitize_name(name)}.png")
        save_endmember_figure(wavelengths, curves, name, out, truth=truth_curve)
        paths.append(out)
    return paths
