"""Report figures rendered next to the CSV outputs.

Everything uses the Agg backend and strips volatile PNG metadata so repeated
runs of a command produce byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = dict(dpi=130, metadata={"Date": None})


def _new_axes(n_rows):
    fig, axes = plt.subplots(n_rows, 1, figsize=(6.4, 2.2 * n_rows),
                             sharex=True, squeeze=False)
    return fig, [a for row in axes for a in row]


def solution_figure(rows, path: str) -> None:
    """Panels of m and u against x, one line per time."""
    times = sorted({r.t for r in rows})
    fig, (ax_m, ax_u) = _new_axes(2)
    for t in times:
        sub = [r for r in rows if r.t == t]
        xs = [r.x for r in sub]
        ax_m.plot(xs, [r.m for r in sub], label=f"t={t:g}", lw=1.0)
        ax_u.plot(xs, [r.u for r in sub], lw=1.0)
    ax_m.set_ylabel("cumulative mass")
    ax_u.set_ylabel("velocity")
    ax_u.set_xlabel("x")
    ax_m.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def oracle_figure(comparisons, path: str) -> None:
    """Solver cumulative mass against the sticky-particle staircase.

    comparisons: list of (t, xs, solver_m, oracle_m).
    """
    fig, axes = _new_axes(len(comparisons))
    for ax, (t, xs, solver_m, oracle_m) in zip(axes, comparisons):
        ax.plot(xs, solver_m, lw=1.2, label="variational solver")
        ax.step(xs, oracle_m, where="post", lw=0.8, ls="--",
                label="sticky oracle")
        ax.set_ylabel(f"m at t={t:g}")
    axes[-1].set_xlabel("x")
    axes[0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def limits_figure(report, path: str) -> None:
    """Log-log convergence of the study metrics against tau."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))

    def positive(series):
        return zip(*[(t, v) for t, v in zip(report.tau_values, series)
                     if v > 0]) if any(v > 0 for v in series) else None

    for series, style, label in ((report.w1, "o-", "W1"),
                                 (report.envelope, "k--", "analytic envelope"),
                                 (report.sup_velocity, "s-",
                                  "velocity metric")):
        pts = positive(series)
        if pts:
            ax.loglog(*pts, style, lw=0.9, label=label)
    ax.set_xlabel("tau")
    ax.set_ylabel("distance")
    ax.set_title(f"{report.study} at t={report.t:g} "
                 f"(fitted rate {report.rate:.3f})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
