"""Optional figures for evolution series and parameter sweeps.

CSV files stay the data contract; these renderings are conveniences for
the ``--figure`` flag of the CLI.  The Agg backend is used so no display is
needed.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# a fixed timestamp keeps pdf/svg output identical between runs
_METADATA = {".png": {"Software": None}, ".pdf": {"CreationDate": None}, ".svg": {"Date": None}}


def _save(fig, path) -> None:
    path = Path(path)
    suffix = path.suffix.lower() or ".png"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=suffix)
    os.close(fd)
    try:
        fig.savefig(tmp, format=suffix[1:], metadata=_METADATA.get(suffix))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def plot_series(series, path, title: str | None = None) -> None:
    """E_a(t) and M^a(t) on shared time axis, with the trace drift below."""
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6, 5), height_ratios=[3, 1])
    top.plot(series.times, series.ea_values, label="$E_a(t)$")
    top.plot(series.times, series.ma_values, "--", label="$M^a(\\sigma_t)$")
    top.set_ylabel("linear entropy")
    top.legend(loc="best", frameon=False)
    if title:
        top.set_title(title)
    bottom.semilogy(series.times[1:], series.trace_drift[1:], color="0.4")
    bottom.set_xlabel("t")
    bottom.set_ylabel("trace drift")
    fig.tight_layout()
    _save(fig, path)


def plot_sweep(rows, path) -> None:
    """E_a at the probe time against beta, one line per anisotropy.

    ``rows`` are dicts with keys ``beta``, ``delta`` and ``ea_t_star``.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for delta in sorted({r["delta"] for r in rows}):
        pts = sorted((r["beta"], r["ea_t_star"]) for r in rows if r["delta"] == delta)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"$\\Delta = {delta:g}$")
    ax.set_xlabel("$\\beta$")
    ax.set_ylabel("$E_a(t^*)$")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    _save(fig, path)
