"""Figure rendering for benchmark reports.

Each CLI report writes a PNG next to its CSV: trajectory runs get the
solution estimate with a two-standard-deviation band against the
reference, sweeps get one log-log error-vs-budget panel per evaluation
time.  matplotlib is imported lazily so --no-plot runs never pay for it.
"""

__all__ = ["render_trajectory", "render_sweep"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_trajectory(png_path, ts, mean_u, sd_u, ref_u, method: str) -> None:
    """Solution estimate with +/- 2 sd band and the reference curve."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(ts, ref_u, color="tab:red", lw=1.2, label="reference")
    ax.plot(ts, mean_u, color="tab:blue", lw=1.0, label=f"{method} mean")
    ax.plot(ts, mean_u + 2.0 * sd_u, color="tab:blue", lw=0.4, alpha=0.7)
    ax.plot(ts, mean_u - 2.0 * sd_u, color="tab:blue", lw=0.4, alpha=0.7,
            label=f"{method} mean $\\pm 2$ sd")
    ax.set_xlabel("t")
    ax.set_ylabel("u(t)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_sweep(png_path, rows, t_eval: float, method: str) -> None:
    """Error against evaluation budget at one evaluation time, log-log.

    rows are (method, N, t_eval, error, replicate) tuples; the baseline
    appears as a line, replicate rows as crosses, averages as a line.
    """
    plt = _pyplot()
    here = [r for r in rows if r[2] == t_eval]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ml = sorted((r[1], r[3]) for r in here if r[0] == "ml")
    if ml:
        ax.plot([n for n, _ in ml], [e for _, e in ml], color="black", lw=1.2, label="ml")
    if method != "ml":
        singles = sorted((r[1], r[3]) for r in here if r[0] == method and r[4] != "avg")
        avgs = sorted((r[1], r[3]) for r in here if r[0] == method and r[4] == "avg")
        color = "tab:green" if method == "mc-sampler" else "tab:blue"
        if avgs:
            ax.plot([n for n, _ in singles], [e for _, e in singles], "x", color=color,
                    ms=5, label=f"{method} runs")
            ax.plot([n for n, _ in avgs], [e for _, e in avgs], color=color, lw=1.2,
                    label=f"{method} average")
        else:
            ax.plot([n for n, _ in singles], [e for _, e in singles], color=color, lw=1.2,
                    label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("function evaluations per step")
    ax.set_ylabel(f"error at t={t_eval:g}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
