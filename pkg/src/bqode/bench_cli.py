"""Benchmark harness: run one solver or an evaluation-budget sweep.

Reports are CSV files with the resolved configuration echoed as '#'
comment lines, one figure PNG rendered next to each CSV (disable with
--no-plot).  All output is a deterministic function of the resolved
configuration, so identical invocations produce byte-identical CSVs.
"""

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import plots
from .bayes_quad import SEKernel
from .errors import SolverError
from .gauss_filter import solve
from .measurements import (
    BayesianQuadrature,
    MaxLikelihood,
    MonteCarloIntegration,
    TaylorLinearization,
)
from .perturb_sampler import PerturbedSolverConfig, empirical_measure
from .problems import PROBLEMS, error_at, problem_by_name, reference_solve
from .state_model import IWPModel

__all__ = ["RunConfig", "UsageError", "parse_config", "run_trajectory", "run_sweep",
           "embedded_config", "main"]

METHODS = ("ml", "mc-filter", "taylor", "bq", "mc-sampler")
NODE_SCHEMES = ("grid", "hermite")
MC_REPLICATES = 5  # independent sampler runs per sweep cell
REF_STEP_DIVISOR = 20  # reference step = h / 20


class UsageError(Exception):
    """Bad flags, config keys, or value combinations."""


@dataclass
class RunConfig:
    """Fully resolved run description; defaults are the benchmark setup."""

    problem: str = "vdp"
    method: str = "bq"
    q: int = 3
    h: float = 0.01
    sigma2: float = 0.1
    damping: str = "default"
    lam: float = 1.0
    theta2: float = 1.0
    node_scheme: str = "grid"
    nodes: int = 5
    samples: int = 5
    seed: int = 0
    sweep: str | None = None
    eval_times: str = "18,54"
    out: str | None = None
    plot: bool = True


# config-file / echo keys, in canonical order; out and plot are excluded
# from the echo so a CSV can be reproduced from its own header
_KEYS = {
    "problem": str,
    "method": str,
    "q": int,
    "h": float,
    "sigma2": float,
    "damping": str,
    "lambda": float,
    "theta2": float,
    "node-scheme": str,
    "nodes": int,
    "samples": int,
    "seed": int,
    "sweep": str,
    "eval-times": str,
}
_KEY_TO_FIELD = {
    "lambda": "lam",
    "node-scheme": "node_scheme",
    "eval-times": "eval_times",
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_config(argv=None) -> RunConfig:
    """Resolve a RunConfig from --config file plus flags (flags win)."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig()
    if args.config is not None:
        _apply_file(cfg, args.config)
    for field in fields(RunConfig):
        if field.name == "plot":
            continue
        value = getattr(args, field.name, None)
        if value is not None:
            setattr(cfg, field.name, value)
    if args.no_plot:
        cfg.plot = False
    _validate(cfg)
    return cfg


def run_trajectory(cfg: RunConfig) -> str:
    """Solve once and write one row per mesh point; returns the CSV path."""
    problem, model = _problem_and_model(cfg)
    reference = reference_solve(problem, cfg.h / REF_STEP_DIVISOR)
    if cfg.method == "mc-sampler":
        result = empirical_measure(_sampler_config(cfg, model, cfg.samples, cfg.seed), problem, cfg.h)
        means, sds = result.mean_path, np.sqrt(np.clip(result.var_path, 0.0, None))
    else:
        result = solve(problem, model, _generator(cfg, problem, cfg.nodes, cfg.seed), cfg.h)
        means = result.means
        sds = np.sqrt(np.clip(np.einsum("kdii->kdi", result.covs), 0.0, None))
    ts = result.ts
    D, q = means.shape[1], means.shape[2]
    ref_u = np.array([reference.position(t) for t in ts])
    errors = np.linalg.norm(means[:, :, 0] - ref_u, axis=1)
    ref_du = None
    if reference.has_derivative and q >= 2:
        ref_du = np.array([reference.derivative(t) for t in ts])

    header = []
    for d in range(D):
        tag = "" if D == 1 else f"_{d}"
        header += [_mean_label(j) + tag for j in range(q)]
    header += [f"sd_u{'' if D == 1 else f'_{d}'}" for d in range(D)]
    header += [f"ref_u{'' if D == 1 else f'_{d}'}" for d in range(D)]
    header.append("error")
    if ref_du is not None:
        header.append("error_du")

    out = _out_path(cfg, "trajectory.csv")
    with open(out, "w", newline="") as fh:
        fh.write(_config_comment(cfg, sweep_mode=False))
        fh.write("t," + ",".join(header) + "\n")
        for k, t in enumerate(ts):
            row = [_fmt(t)]
            for d in range(D):
                row += [_fmt(v) for v in means[k, d]]
            row += [_fmt(sds[k, d, 0]) for d in range(D)]
            row += [_fmt(v) for v in ref_u[k]]
            row.append(_fmt(errors[k]))
            if ref_du is not None:
                row.append(_fmt(np.linalg.norm(means[k, :, 1] - ref_du[k])))
            fh.write(",".join(row) + "\n")
    if cfg.plot:
        plots.render_trajectory(
            Path(out).with_suffix(".png"), ts, means[:, 0, 0], sds[:, 0, 0],
            ref_u[:, 0], cfg.method,
        )
    return out


def run_sweep(cfg: RunConfig) -> str:
    """Sweep the evaluation budget and write per-cell errors.

    Rows are (method, N, t_eval, error, replicate).  The ml baseline is
    always included; it does not depend on the budget, so its rows repeat
    one error.  The sampler runs MC_REPLICATES independent replicates per
    cell plus an 'avg' row holding their mean error.
    """
    problem, model = _problem_and_model(cfg)
    n_range = _resolve_sweep(cfg.sweep)
    t_evals = _resolve_eval_times(cfg.eval_times)
    for t in t_evals:
        if not problem.t0 - 1e-9 <= t <= problem.t_end + 1e-9:
            raise UsageError(f"eval time {t:g} outside the span of {cfg.problem!r}")
    if cfg.method in ("mc-filter", "mc-sampler") and min(n_range) < 2:
        raise UsageError(f"{cfg.method} needs a budget of at least 2 (sweep starts at {min(n_range)})")
    reference = reference_solve(problem, cfg.h / REF_STEP_DIVISOR)

    rows = []
    ml_traj = solve(problem, model, MaxLikelihood(), cfg.h)
    for t in t_evals:
        err = error_at(ml_traj, reference, t)
        for n in n_range:
            rows.append(("ml", n, t, err, "1"))

    if cfg.method == "mc-sampler":
        for n in n_range:
            errs = {t: [] for t in t_evals}
            for rep in range(1, MC_REPLICATES + 1):
                sampler = _sampler_config(cfg, model, n, _cell_seed(cfg.seed, n, rep))
                measure = empirical_measure(sampler, problem, cfg.h)
                for t in t_evals:
                    err = error_at(measure, reference, t)
                    errs[t].append(err)
                    rows.append((cfg.method, n, t, err, str(rep)))
            for t in t_evals:
                rows.append((cfg.method, n, t, float(np.mean(errs[t])), "avg"))
    elif cfg.method != "ml":
        for n in n_range:
            traj = solve(problem, model, _generator(cfg, problem, n, _cell_seed(cfg.seed, n, 0)), cfg.h)
            for t in t_evals:
                rows.append((cfg.method, n, t, error_at(traj, reference, t), "1"))

    rows.sort(key=lambda r: (r[0], r[1], r[2], r[4] == "avg", r[4]))
    out = _out_path(cfg, "sweep.csv")
    with open(out, "w", newline="") as fh:
        fh.write(_config_comment(cfg, sweep_mode=True))
        fh.write("method,N,t_eval,error,replicate\n")
        for method, n, t, err, rep in rows:
            fh.write(f"{method},{n},{_fmt(t)},{_fmt(err)},{rep}\n")
    if cfg.plot:
        stem = Path(out)
        for t in t_evals:
            plots.render_sweep(stem.with_name(f"{stem.stem}_t{t:g}.png"), rows, t, cfg.method)
    return out


def embedded_config(csv_path) -> str:
    """Extract the '#' config comment lines of a CSV as config-file text."""
    lines = []
    with open(csv_path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            lines.append(line[1:].strip())
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        path = run_sweep(cfg) if cfg.sweep is not None else run_trajectory(cfg)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except (SolverError, ValueError) as err:
        print(f"solver error: {err}", file=sys.stderr)
        return 1
    print(path)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bqode-bench",
        description="Probabilistic ODE solver benchmarks: trajectories and budget sweeps.",
    )
    parser.add_argument("--config", metavar="FILE", help="config file, one 'key = value' per line")
    parser.add_argument("--problem", choices=sorted(PROBLEMS))
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--q", type=int, help="state order (number of modeled derivatives)")
    parser.add_argument("--h", type=float, help="step size")
    parser.add_argument("--sigma2", type=float, help="prior diffusion variance")
    parser.add_argument("--damping", help="'default' or comma-separated factors (q-1 of them)")
    parser.add_argument("--lambda", dest="lam", type=float, help="kernel lengthscale")
    parser.add_argument("--theta2", type=float, help="kernel output variance")
    parser.add_argument("--nodes", type=int, help="evaluation points per step (bq, mc-filter)")
    parser.add_argument("--node-scheme", dest="node_scheme", choices=NODE_SCHEMES)
    parser.add_argument("--samples", type=int, help="sample paths (mc-sampler)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--sweep", metavar="LO:HI[:STEP]", help="budget sweep range, inclusive")
    parser.add_argument("--eval-times", dest="eval_times", metavar="T1,T2,...")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    return parser


def _apply_file(cfg: RunConfig, path: str) -> None:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read config file {path!r}: {err}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in ("out", "plot"):
            if key == "plot":
                if value.lower() not in ("true", "false"):
                    raise UsageError(f"invalid value for key 'plot': {value!r}")
                cfg.plot = value.lower() == "true"
            else:
                cfg.out = value
            continue
        if key not in _KEYS:
            raise UsageError(f"unknown config key '{key}'")
        caster = _KEYS[key]
        try:
            cast = caster(value)
        except ValueError:
            raise UsageError(f"invalid value for key '{key}': {value!r}")
        setattr(cfg, _KEY_TO_FIELD.get(key, key), cast)


def _validate(cfg: RunConfig) -> None:
    if cfg.problem not in PROBLEMS:
        raise UsageError(f"unknown problem '{cfg.problem}'")
    if cfg.method not in METHODS:
        raise UsageError(f"unknown method '{cfg.method}'")
    if cfg.node_scheme not in NODE_SCHEMES:
        raise UsageError(f"unknown node-scheme '{cfg.node_scheme}'")
    if cfg.q < 1:
        raise UsageError(f"q must be >= 1, got {cfg.q}")
    if not cfg.h > 0:
        raise UsageError(f"h must be > 0, got {cfg.h}")
    if not cfg.sigma2 > 0:
        raise UsageError(f"sigma2 must be > 0, got {cfg.sigma2}")
    if not (cfg.lam > 0 and cfg.theta2 > 0):
        raise UsageError("lambda and theta2 must be > 0")
    if cfg.nodes < 1:
        raise UsageError(f"nodes must be >= 1, got {cfg.nodes}")
    if cfg.samples < 2:
        raise UsageError(f"samples must be >= 2, got {cfg.samples}")
    _resolve_damping(cfg.damping, cfg.q)
    _resolve_eval_times(cfg.eval_times)
    if cfg.sweep is not None:
        _resolve_sweep(cfg.sweep)
    if cfg.method == "mc-filter" and cfg.nodes < 2:
        raise UsageError("mc-filter needs nodes >= 2")


def _resolve_damping(spec: str, q: int) -> tuple:
    if spec.strip() == "default":
        return tuple(float(i) for i in range(1, q))
    try:
        values = tuple(float(v) for v in spec.split(","))
    except ValueError:
        raise UsageError(f"invalid value for key 'damping': {spec!r}")
    if len(values) != q - 1:
        raise UsageError(f"damping needs q-1 = {q - 1} entries, got {len(values)}")
    return values


def _resolve_eval_times(spec: str) -> tuple:
    try:
        times = tuple(float(v) for v in spec.split(","))
    except ValueError:
        raise UsageError(f"invalid value for key 'eval-times': {spec!r}")
    if not times:
        raise UsageError("eval-times must name at least one time")
    return times


def _resolve_sweep(spec: str) -> range:
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"invalid value for key 'sweep': {spec!r} (expected LO:HI[:STEP])")
    try:
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
    except ValueError:
        raise UsageError(f"invalid value for key 'sweep': {spec!r}")
    if not (1 <= lo <= hi <= 64) or step < 1:
        raise UsageError(f"sweep range must satisfy 1 <= LO <= HI <= 64, got {spec!r}")
    return range(lo, hi + 1, step)


def _problem_and_model(cfg: RunConfig):
    problem = problem_by_name(cfg.problem)
    if cfg.q < problem.order + 1:
        raise UsageError(
            f"q={cfg.q} too small for problem '{cfg.problem}' of order {problem.order}"
        )
    model = IWPModel(q=cfg.q, sigma2=cfg.sigma2, damping=_resolve_damping(cfg.damping, cfg.q))
    return problem, model


def _generator(cfg: RunConfig, problem, budget: int, seed: int):
    if cfg.method == "ml":
        return MaxLikelihood()
    if cfg.method == "taylor":
        if problem.jacobian is None:
            raise UsageError(f"problem '{cfg.problem}' has no Jacobian; taylor unavailable")
        return TaylorLinearization(problem.jacobian)
    if cfg.method == "mc-filter":
        if budget < 2:
            raise UsageError("mc-filter needs a budget of at least 2")
        return MonteCarloIntegration(draws=budget, seed=seed)
    if cfg.method == "bq":
        kernel = SEKernel(lengthscale=cfg.lam, variance=cfg.theta2)
        return BayesianQuadrature(n_nodes=budget, kernel=kernel, scheme=cfg.node_scheme)
    raise UsageError(f"method '{cfg.method}' is not a per-step generator")


def _sampler_config(cfg: RunConfig, model: IWPModel, samples: int, seed: int):
    return PerturbedSolverConfig(model=model, samples=samples, seed=seed)


def _cell_seed(seed: int, n: int, rep: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(n, rep)).generate_state(1)[0])


def _out_path(cfg: RunConfig, default: str) -> str:
    return cfg.out if cfg.out is not None else default


def _config_comment(cfg: RunConfig, sweep_mode: bool) -> str:
    damping = _resolve_damping(cfg.damping, cfg.q)
    values = {
        "problem": cfg.problem,
        "method": cfg.method,
        "q": str(cfg.q),
        "h": _fmt(cfg.h),
        "sigma2": _fmt(cfg.sigma2),
        "damping": ",".join(_fmt(f) for f in damping),
        "lambda": _fmt(cfg.lam),
        "theta2": _fmt(cfg.theta2),
        "node-scheme": cfg.node_scheme,
        "nodes": str(cfg.nodes),
        "samples": str(cfg.samples),
        "seed": str(cfg.seed),
    }
    if sweep_mode:
        lo, hi = min(_resolve_sweep(cfg.sweep)), max(_resolve_sweep(cfg.sweep))
        step = _resolve_sweep(cfg.sweep).step
        values["sweep"] = f"{lo}:{hi}:{step}"
        values["eval-times"] = ",".join(_fmt(t) for t in _resolve_eval_times(cfg.eval_times))
    return "".join(f"# {k} = {v}\n" for k, v in values.items())


def _mean_label(j: int) -> str:
    if j == 0:
        return "mean_u"
    if j == 1:
        return "mean_du"
    return f"mean_d{j}u"


if __name__ == "__main__":
    sys.exit(main())
