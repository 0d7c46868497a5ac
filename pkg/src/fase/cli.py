"""Batch command-line front end.

Subcommands: ``simulate``, ``fit``, ``tune``, ``evaluate``, ``baseline``,
``predict``. Exit codes: 0 success (including a reported nonconvergence),
2 usage error, 3 data error, 4 numeric failure. ``--threads`` (or the
``FASE_THREADS`` environment variable) caps the worker threads of the
numerical backend; outputs do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np

from .align import err_theta_mid, err_z, err_z_star
from .archive import (
    DataError,
    find_trajectories,
    load_fit_model,
    load_series,
    save_fit,
    save_series,
    save_trajectories,
)
from .baselines import OMNI_DEFAULT_MAX_SIZE, ase_per_snapshot, omni_embed
from .fitting import DivergenceError, FitOptions, fit_pipeline
from .model import evaluate_trajectories
from .synthetic import (
    InfeasibleDensityError,
    ScenarioSpec,
    gen_scenario_i,
    gen_scenario_ii,
    gen_scenario_iii,
)
from .tuning import TuningGrid, coordinate_descent_select, grid_select

__all__ = ["main", "entrypoint"]

USAGE_ERROR = 2
DATA_ERROR = 3
NUMERIC_ERROR = 4


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _add_threads(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap numerical backend threads (env: FASE_THREADS)",
    )


@contextlib.contextmanager
def _thread_cap(threads: int | None):
    if threads is None:
        env = os.environ.get("FASE_THREADS")
        threads = int(env) if env else None
    if threads is None:
        yield
        return
    if threads < 1:
        raise CommandError(USAGE_ERROR, "--threads must be a positive integer")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # cap silently unavailable; results are unaffected
        yield
        return
    with threadpool_limits(limits=threads):
        yield


def _parse_grid_spec(text: str, what: str) -> tuple[int, ...]:
    parts = text.split(":")
    try:
        numbers = [int(p) for p in parts]
    except ValueError:
        raise CommandError(USAGE_ERROR, f"cannot parse {what} grid {text!r}") from None
    if len(numbers) == 1:
        return (numbers[0],)
    if len(numbers) == 2:
        start, stop = numbers
        step = 1
    elif len(numbers) == 3:
        start, stop, step = numbers
    else:
        raise CommandError(USAGE_ERROR, f"{what} grid must be start[:stop[:step]]")
    if step < 1 or stop < start:
        raise CommandError(USAGE_ERROR, f"invalid {what} grid {text!r}")
    return tuple(range(start, stop + 1, step))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fase",
        description="Smooth latent-process embeddings of indexed network snapshots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic series archive")
    sim.add_argument("--scenario", required=True, choices=["i", "ii", "iii"])
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--m", type=int, required=True)
    sim.add_argument("--d", type=int, required=True)
    sim.add_argument("--sigma", type=float, default=0.0)
    sim.add_argument("--density", type=float, default=None)
    sim.add_argument("--cycles", type=float, default=2.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    _add_threads(sim)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit the embedding to a series archive")
    fit.add_argument("--in", dest="in_dir", required=True)
    fit.add_argument("--q", type=int, required=True)
    fit.add_argument("--d", type=int, required=True)
    fit.add_argument("--order", type=int, default=3)
    fit.add_argument("--seq", action="store_true", help="fit one dimension at a time")
    fit.add_argument("--lambda", dest="lam", type=float, default=0.0)
    fit.add_argument("--L", default="auto", help="initializer blocks: 'auto' or integer")
    fit.add_argument("--tol", type=float, default=1e-5)
    fit.add_argument("--max-iter", type=int, default=1000)
    fit.add_argument("--out", required=True)
    _add_threads(fit)
    fit.set_defaults(func=cmd_fit)

    tune = sub.add_parser("tune", help="select (q, d) by NGCV, then fit")
    tune.add_argument("--in", dest="in_dir", required=True)
    tune.add_argument("--q-grid", required=True, help="start[:stop[:step]], inclusive")
    tune.add_argument("--d-grid", required=True, help="start[:stop[:step]], inclusive")
    tune.add_argument("--method", choices=["grid", "cd"], default="grid")
    tune.add_argument("--order", type=int, default=3)
    tune.add_argument("--tol", type=float, default=1e-5)
    tune.add_argument("--max-iter", type=int, default=1000)
    tune.add_argument("--out", required=True)
    _add_threads(tune)
    tune.set_defaults(func=cmd_tune)

    ev = sub.add_parser("evaluate", help="score fitted trajectories against truth")
    ev.add_argument("--est", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument(
        "--metric",
        action="append",
        choices=["errz", "errzstar", "theta-mid"],
        help="repeatable; defaults to errz and errzstar",
    )
    ev.add_argument("--at", type=float, default=None, help="index for theta-mid")
    ev.add_argument("--out", default=None, help="output CSV (default: stdout)")
    _add_threads(ev)
    ev.set_defaults(func=cmd_evaluate)

    base = sub.add_parser("baseline", help="embed with a comparison method")
    base.add_argument("--in", dest="in_dir", required=True)
    base.add_argument("--method", choices=["ase", "omni"], required=True)
    base.add_argument("--d", type=int, required=True)
    base.add_argument("--max-size", type=int, default=OMNI_DEFAULT_MAX_SIZE)
    base.add_argument("--out", required=True)
    _add_threads(base)
    base.set_defaults(func=cmd_baseline)

    pred = sub.add_parser("predict", help="evaluate a fit at new indices")
    pred.add_argument("--in", dest="in_dir", required=True, help="fit output directory")
    group = pred.add_mutually_exclusive_group(required=True)
    group.add_argument("--at", type=float, default=None)
    group.add_argument("--grid", type=int, default=None, help="number of grid points")
    pred.add_argument("--adjacency", action="store_true")
    pred.add_argument("--out", default=None, help="output CSV (default: stdout)")
    _add_threads(pred)
    pred.set_defaults(func=cmd_predict)

    return parser


def cmd_simulate(args) -> None:
    try:
        spec = ScenarioSpec(
            scenario=args.scenario,
            n=args.n,
            m=args.m,
            d=args.d,
            sigma=args.sigma,
            density=args.density,
            cycles=args.cycles,
            seed=args.seed,
        )
    except InfeasibleDensityError as exc:
        raise CommandError(USAGE_ERROR, f"infeasible density: {exc}") from exc
    except ValueError as exc:
        raise CommandError(USAGE_ERROR, str(exc)) from exc

    coords = None
    if spec.scenario == "i":
        series, truth, coords = gen_scenario_i(spec)
    elif spec.scenario == "ii":
        series, truth = gen_scenario_ii(spec)
    else:
        series, truth = gen_scenario_iii(spec)

    generator = {
        "scenario": spec.scenario,
        "n": spec.n,
        "m": spec.m,
        "d": spec.d,
        "sigma": spec.sigma,
        "density": spec.density,
        "cycles": spec.cycles,
        "seed": spec.seed,
    }
    save_series(args.out, series, truth=truth, truth_coords=coords, generator=generator)


def _parse_blocks(value: str, m: int) -> int | str:
    if value == "auto":
        return "auto"
    try:
        blocks = int(value)
    except ValueError:
        raise CommandError(USAGE_ERROR, "--L must be 'auto' or an integer") from None
    if not 1 <= blocks <= m:
        raise CommandError(USAGE_ERROR, f"--L must lie in [1, {m}]")
    return blocks


def _run_pipeline(series, *, q, d, order, opts, n_blocks, sequential):
    try:
        return fit_pipeline(
            series,
            q=q,
            d=d,
            order=order,
            opts=opts,
            n_blocks=n_blocks,
            sequential=sequential,
        )
    except DivergenceError as exc:
        raise CommandError(NUMERIC_ERROR, f"fit diverged: {exc}") from exc
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise CommandError(NUMERIC_ERROR, f"fit failed: {exc}") from exc


def cmd_fit(args) -> None:
    if args.q < args.order + 1:
        raise CommandError(USAGE_ERROR, f"--q must be at least order+1={args.order + 1}")
    if args.d < 1:
        raise CommandError(USAGE_ERROR, "--d must be positive")
    if args.seq and args.lam != 0.0:
        raise CommandError(USAGE_ERROR, "--seq cannot be combined with --lambda")
    if args.lam < 0:
        raise CommandError(USAGE_ERROR, "--lambda must be nonnegative")
    series = load_series(args.in_dir)
    n_blocks = _parse_blocks(args.L, series.n_snapshots)
    opts = FitOptions(max_iterations=args.max_iter, rel_tol=args.tol, lam=args.lam)
    fit, used_blocks = _run_pipeline(
        series,
        q=args.q,
        d=args.d,
        order=args.order,
        opts=opts,
        n_blocks=n_blocks,
        sequential=args.seq,
    )
    save_fit(args.out, fit, series, used_blocks)


def cmd_tune(args) -> None:
    series = load_series(args.in_dir)
    grid = TuningGrid(
        _parse_grid_spec(args.q_grid, "q"), _parse_grid_spec(args.d_grid, "d")
    )
    opts = FitOptions(max_iterations=args.max_iter, rel_tol=args.tol)
    select = grid_select if args.method == "grid" else coordinate_descent_select
    try:
        result = select(series, grid, order=args.order, opts=opts)
    except ValueError as exc:
        raise CommandError(USAGE_ERROR, str(exc)) from exc
    except RuntimeError as exc:
        raise CommandError(NUMERIC_ERROR, str(exc)) from exc

    os.makedirs(args.out, exist_ok=True)
    lines = ["q,d,ngcv,visited"]
    for q, d in grid.cells:
        if (q, d) in result.criterion:
            value = result.criterion[(q, d)]
            text = "" if np.isnan(value) else _fmt(value)
            lines.append(f"{q},{d},{text},1")
        else:
            lines.append(f"{q},{d},,0")
    with open(os.path.join(args.out, "tuning.csv"), "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")

    chosen = {
        "q": result.q,
        "d": result.d,
        "ngcv": result.chosen_criterion,
        "method": args.method,
        "n_visited": result.n_visited,
        "n_sweeps": result.n_sweeps,
        "path": [list(cell) for cell in result.path],
    }
    with open(os.path.join(args.out, "chosen.json"), "w", encoding="utf-8") as handle:
        handle.write(json.dumps(chosen, indent=2, sort_keys=True) + "\n")

    opts = FitOptions(max_iterations=args.max_iter, rel_tol=args.tol)
    fit, used_blocks = _run_pipeline(
        series,
        q=result.q,
        d=result.d,
        order=args.order,
        opts=opts,
        n_blocks="auto",
        sequential=False,
    )
    save_fit(args.out, fit, series, used_blocks)


def _metric_rows(args) -> list[tuple[str, float]]:
    metrics = args.metric or ["errz", "errzstar"]
    rows = []
    for metric in metrics:
        if metric in ("errz", "errzstar"):
            est = find_trajectories(args.est)
            truth = find_trajectories(args.truth)
            try:
                if metric == "errz":
                    rows.append((metric, err_z(est, truth)))
                else:
                    rows.append((metric, err_z_star(est, truth)))
            except ValueError as exc:
                raise DataError(f"cannot compare trajectory stacks: {exc}") from exc
        else:
            if args.at is None:
                raise CommandError(USAGE_ERROR, "theta-mid requires --at")
            coords, basis = load_fit_model(args.est)
            truth_series = load_series(args.truth)
            truth_stack = find_trajectories(args.truth)
            matches = np.nonzero(np.abs(truth_series.indices - args.at) <= 1e-12)[0]
            if matches.size == 0:
                raise DataError(
                    f"truth archive has no snapshot at index {args.at!r}"
                )
            Z_true = truth_stack[:, matches[0], :]
            a, b = basis.boundary
            if not a <= args.at <= b:
                raise DataError(
                    f"index {args.at} lies outside the fitted domain [{a}, {b}]"
                )
            Z_est = evaluate_trajectories(coords, basis, [args.at])[:, 0, :]
            try:
                rows.append((metric, err_theta_mid(Z_est, Z_true @ Z_true.T)))
            except ValueError as exc:
                raise DataError(str(exc)) from exc
    return rows


def cmd_evaluate(args) -> None:
    rows = _metric_rows(args)
    text = "metric,value\n" + "".join(f"{name},{_fmt(value)}\n" for name, value in rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_baseline(args) -> None:
    if args.d < 1:
        raise CommandError(USAGE_ERROR, "--d must be positive")
    series = load_series(args.in_dir)
    if args.d > series.n_nodes:
        raise CommandError(USAGE_ERROR, "--d cannot exceed the number of nodes")
    if args.method == "ase":
        stack = ase_per_snapshot(series, args.d)
    else:
        try:
            stack = omni_embed(series, args.d, max_size=args.max_size)
        except RuntimeError as exc:
            raise CommandError(USAGE_ERROR, str(exc)) from exc
    os.makedirs(args.out, exist_ok=True)
    save_trajectories(os.path.join(args.out, "trajectories.csv"), stack)


def cmd_predict(args) -> None:
    coords, basis = load_fit_model(args.in_dir)
    a, b = basis.boundary
    if args.at is not None:
        xs = np.array([args.at], dtype=float)
    else:
        if args.grid < 2:
            raise CommandError(USAGE_ERROR, "--grid must be at least 2")
        xs = np.linspace(a, b, args.grid)
    if xs.min() < a or xs.max() > b:
        raise DataError(
            f"prediction index outside the fitted domain [{a}, {b}]; "
            "extrapolation is not supported"
        )
    stack = evaluate_trajectories(coords, basis, xs)  # (n, k, d)
    lines = []
    if args.adjacency:
        lines.append("x,i,j,value")
        for k, x in enumerate(xs):
            Z = stack[:, k, :]
            theta = Z @ Z.T
            for i in range(theta.shape[0]):
                for j in range(theta.shape[1]):
                    lines.append(f"{_fmt(x)},{i + 1},{j + 1},{_fmt(theta[i, j])}")
    else:
        lines.append("x,node,dim,value")
        for k, x in enumerate(xs):
            for i in range(stack.shape[0]):
                for r in range(stack.shape[2]):
                    lines.append(f"{_fmt(x)},{i + 1},{r + 1},{_fmt(stack[i, k, r])}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
        return int(code) if isinstance(code, int) else USAGE_ERROR
    try:
        with _thread_cap(args.threads):
            args.func(args)
    except CommandError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return DATA_ERROR
    except DivergenceError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return NUMERIC_ERROR
    return 0


def entrypoint() -> None:
    raise SystemExit(main(sys.argv[1:]))


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
