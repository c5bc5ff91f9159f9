"""Figure rendering for the report path.

Each report-producing command can write a PNG next to its JSON and CSV
output.  Figures aggregate per-instance records so suites with hundreds
of checks stay readable.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import ReportFile


def _check_group(name: str) -> str:
    # strip the per-instance prefix: "inst003/raw-norm" -> "raw-norm"
    return name.split("/", 1)[-1]


def render_report_figure(report: ReportFile, path) -> None:
    """Worst margin per check group; negative margins are failures."""
    groups: dict[str, float] = {}
    for c in report.checks:
        margin = (c.rhs + c.tolerance) - c.lhs
        key = _check_group(c.name)
        groups[key] = min(groups.get(key, np.inf), margin)
    if not groups:
        fig, ax = plt.subplots(figsize=(6, 2))
        ax.text(0.5, 0.5, "empty report", ha="center", va="center")
        ax.set_axis_off()
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        return
    names = sorted(groups)
    margins = np.array([groups[n] for n in names])
    display = np.log10(np.maximum(np.abs(margins), 1e-18))
    colors = ["tab:green" if m >= 0 else "tab:red" for m in margins]
    fig, ax = plt.subplots(figsize=(8, 0.36 * len(names) + 1.2))
    ax.barh(range(len(names)), display, color=colors)
    ax.set_yticks(range(len(names)), names, fontsize=8)
    ax.set_xlabel("log10 |worst margin|  (green = satisfied, red = violated)")
    ax.set_title(f"suite {report.suite}: {report.summary['passed']}/{report.summary['total']} passed")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_sweep_figure(rows: list[dict], path, title: str = "extension sweep") -> None:
    """Largest eigenvalue against copy count, with the product lower bound."""
    copies = [row["copies"] for row in rows]
    lams = [row["lambda_r"] for row in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(copies, lams, "o-", label="largest eigenvalue")
    if rows and "omega_lower" in rows[0]:
        ax.axhline(rows[0]["omega_lower"], ls="--", c="tab:orange", label="best product value")
    ax.set_xlabel("copies per extended register")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_trace_figure(trace_rows: list[dict], path) -> None:
    """Tested value, entropy, and potential along a rounding run."""
    steps = list(range(len(trace_rows)))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, [r["tested"] for r in trace_rows], "o-", label="tested value")
    ax.plot(steps, [r["potential"] for r in trace_rows], "s-", label="potential")
    ax.plot(steps, [r["entropy"] for r in trace_rows], "^-", label="tested entropy")
    ax.set_xlabel("conditioning step")
    ax.set_title("adaptive rounding trace")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_audit_figure(audit: dict, path) -> None:
    """Eigenvalues and bounds from a collapse audit."""
    keys = ["omega_lower", "lambda_ideal", "lambda_dyadic"]
    labels = ["best product value", "ideal extension", "dyadic extension"]
    vals = [audit[k] for k in keys]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, vals, color=["tab:orange", "tab:blue", "tab:green"])
    band = audit.get("perturbation_bound")
    if band is not None:
        ax.axhline(audit["lambda_ideal"] + band, ls=":", c="gray")
        ax.axhline(audit["lambda_ideal"] - band, ls=":", c="gray")
    ax.set_ylabel("value")
    ax.set_title("collapse audit")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
