"""End-to-end acceptance checks for the whole pipeline at desk scale.

Each test prints one PASS/FAIL line with its measured quantities. The
model-selection and interpolation checks are seeded, reduced-replication
versions of the full simulation study; exact figure curves are out of scope
(they would need 50 replications across many settings), so these runs stand
in for them together with the per-module invariant suites.
"""

import math
import time

import numpy as np
import pytest

import fase
from fase import (
    FitOptions,
    ScenarioSpec,
    TuningGrid,
    ase,
    ase_per_snapshot,
    coordinate_descent_select,
    err_theta_mid,
    err_z,
    err_z_star,
    evaluate_processes,
    evaluate_trajectories,
    fit_pipeline,
    gen_scenario_i,
    gen_scenario_ii,
    gen_scenario_iii,
    gradient,
    grid_select,
    make_interpolation_task,
    ngcv,
    objective,
    sequential_procrustes,
)

from conftest import random_orthogonal, random_series

pytestmark = pytest.mark.acceptance

GRID = TuningGrid(tuple(range(6, 17, 2)), tuple(range(1, 7)))


def report(number, name, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number} ({name}): {status} — {detail}")
    return passed


def fd_gradient(fun, coords, h=1e-6):
    grad = np.zeros_like(coords)
    it = np.nditer(coords, flags=["multi_index"])
    while not it.finished:
        key = it.multi_index
        plus = coords.copy()
        plus[key] += h
        minus = coords.copy()
        minus[key] -= h
        grad[key] = (fun(plus) - fun(minus)) / (2 * h)
        it.iternext()
    return grad


def test_01_gradient_oracle():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(2, 7))
        q = int(rng.integers(4, 6))
        d = int(rng.integers(1, 4))
        series, basis, coords, _ = random_series(rng, n=n, m=m, d=d, q=q, sigma=0.6)
        point = rng.normal(size=coords.shape)
        grad = gradient(point, series, basis)
        oracle = fd_gradient(lambda W: objective(W, series, basis), point)
        rel = np.linalg.norm(grad - oracle) / max(np.linalg.norm(oracle), 1e-300)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 5.0
    assert report(
        1, "gradient oracle", ok,
        f"20 instances, worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_02_monotone_descent_and_convergence():
    iterations = []
    for seed in range(10):
        series, _, _ = gen_scenario_i(
            ScenarioSpec("i", n=50, m=40, d=2, sigma=2.0, seed=seed)
        )
        fit, _ = fit_pipeline(series, q=10, d=2)
        assert (np.diff(fit.objective_trace) < 0).all()
        assert fit.converged
        iterations.append(fit.iterations)
    worst = max(iterations)
    ok = worst < 600
    assert report(
        2, "monotone descent", ok,
        f"10/10 converged, iterations max {worst} (< 600)",
    )


def test_03_exact_recovery():
    start = time.perf_counter()
    series, truth, _ = gen_scenario_i(
        ScenarioSpec("i", n=40, m=30, d=2, sigma=0.0, seed=5)
    )
    fit, _ = fit_pipeline(series, q=10, d=2, opts=FitOptions(max_iterations=15000))
    est = evaluate_trajectories(fit.coords, fit.basis, series.indices)
    error = err_z(est, truth)
    elapsed = time.perf_counter() - start
    ok = error < 1e-3 and elapsed < 30.0
    assert report(
        3, "exact recovery", ok, f"err {error:.2e} (< 1e-3), {elapsed:.1f}s (< 30s)"
    )


def test_04_fase_vs_ase_dominance():
    start = time.perf_counter()
    means = {}
    for m in (40, 120):
        fase_errs, ase_errs = [], []
        for seed in range(10):
            series, truth, _ = gen_scenario_i(
                ScenarioSpec("i", n=50, m=m, d=2, sigma=4.0, seed=seed)
            )
            fit, _ = fit_pipeline(series, q=10, d=2)
            est = evaluate_trajectories(fit.coords, fit.basis, series.indices)
            fase_errs.append(err_z(est, truth))
            ase_errs.append(err_z(ase_per_snapshot(series, 2), truth))
        means[m] = (float(np.mean(fase_errs)), float(np.mean(ase_errs)))
    elapsed = time.perf_counter() - start
    improves = means[120][0] < means[40][0]
    dominates = means[40][0] < means[40][1] and means[120][0] < means[120][1]
    ok = improves and dominates and elapsed < 600.0
    assert report(
        4, "more snapshots help, baseline does not", ok,
        f"FASE m=40 {means[40][0]:.3f} / m=120 {means[120][0]:.3f}; "
        f"ASE m=40 {means[40][1]:.3f} / m=120 {means[120][1]:.3f}; {elapsed:.0f}s",
    )


@pytest.fixture(scope="module")
def scenario_i_selection():
    start = time.perf_counter()
    records = []
    for seed in range(10):
        series, _, _ = gen_scenario_i(
            ScenarioSpec("i", n=100, m=80, d=2, sigma=2.0, seed=seed)
        )
        cache = {}
        full = grid_select(series, GRID, cache=cache)
        cd = coordinate_descent_select(series, GRID, cache=cache)
        records.append({"grid": (full.q, full.d), "cd": (cd.q, cd.d),
                        "visited": cd.n_visited, "sweeps": cd.n_sweeps})
    return records, time.perf_counter() - start


def test_05_ngcv_selection_rates(scenario_i_selection):
    records, elapsed_i = scenario_i_selection
    d_hits = sum(rec["grid"][1] == 2 for rec in records)

    start = time.perf_counter()
    iii_hits = 0
    for seed in range(10):
        series, _ = gen_scenario_iii(
            ScenarioSpec("iii", n=100, m=80, d=2, density=0.5, seed=seed)
        )
        full = grid_select(series, GRID)
        iii_hits += (full.q, full.d) == (10, 2)
    elapsed = elapsed_i + (time.perf_counter() - start)
    ok = d_hits >= 8 and iii_hits >= 9 and elapsed < 1800.0
    assert report(
        5, "model selection rates", ok,
        f"spline-Gaussian d=2 chosen {d_hits}/10 (need >= 8); "
        f"binary (10,2) chosen {iii_hits}/10 (need >= 9); {elapsed:.0f}s (< 1800s)",
    )


def test_06_coordinate_descent_economy(scenario_i_selection):
    records, _ = scenario_i_selection
    cells = len(GRID.cells)
    economical = sum(rec["visited"] <= (2 * cells) // 3 for rec in records)
    agree = sum(rec["cd"] == rec["grid"] for rec in records)
    sweeps = max(rec["sweeps"] for rec in records)
    ok = economical >= 8 and agree >= 7 and sweeps <= 4
    assert report(
        6, "coordinate-descent economy", ok,
        f"visited <= {2 * cells // 3} cells on {economical}/10 (need >= 8); "
        f"agreement with full grid {agree}/10 (need >= 7); "
        f"max sweeps {sweeps} (<= 4)",
    )


def test_07_metric_algebra():
    rng = np.random.default_rng(707)
    for _ in range(100):
        est = rng.normal(size=(6, 5, 2))
        truth = rng.normal(size=(6, 5, 2))
        assert err_z(est, truth) <= err_z_star(est, truth) + 1e-12

    truth = rng.normal(size=(8, 7, 3))
    rotated = truth.copy()
    for k in range(7):
        rotated[:, k, :] = truth[:, k, :] @ random_orthogonal(rng, 3)
    rotated_err = err_z(rotated, truth)

    stack = rng.normal(size=(8, 7, 3))
    aligned = sequential_procrustes(stack)
    idem = np.abs(sequential_procrustes(aligned) - aligned).max()
    theta_drift = max(
        np.abs(
            aligned[:, k, :] @ aligned[:, k, :].T - stack[:, k, :] @ stack[:, k, :].T
        ).max()
        for k in range(7)
    )
    ok = rotated_err < 1e-10 and idem < 1e-10 and theta_drift < 1e-10
    assert report(
        7, "metric algebra", ok,
        f"ordering held on 100 pairs; rotated-copy err {rotated_err:.1e}; "
        f"idempotence {idem:.1e}; theta drift {theta_drift:.1e}",
    )


def test_08_interpolation_beats_nearest_snapshot():
    start = time.perf_counter()
    grid = TuningGrid(tuple(range(6, 17, 2)), (1, 2, 3, 4))
    fase_errs, ase_errs = [], []
    for seed in range(10):
        spec = ScenarioSpec("ii", n=50, m=60, d=2, sigma=2.0, seed=seed, cycles=1.0)
        series, truth = gen_scenario_ii(spec)
        reduced, x_star, theta_star = make_interpolation_task(series, truth, M=5, seed=seed)
        result = coordinate_descent_select(reduced, grid, keep_fits=True)
        fit = result.fits[(result.q, result.d)]
        z_hat = evaluate_processes(fit.coords, fit.basis, x_star)
        fase_errs.append(err_theta_mid(z_hat, theta_star))
        below = int(np.searchsorted(reduced.indices, x_star)) - 1
        z_ase = ase(reduced.snapshots[below], 2)
        ase_errs.append(err_theta_mid(z_ase, theta_star))
    elapsed = time.perf_counter() - start
    mean_fase = float(np.mean(fase_errs))
    mean_ase = float(np.mean(ase_errs))
    ok = mean_fase < mean_ase and elapsed < 900.0
    assert report(
        8, "interpolation of held-out snapshots", ok,
        f"tuned embedding {mean_fase:.3f} vs nearest-snapshot {mean_ase:.3f}; "
        f"{elapsed:.0f}s (< 900s)",
    )


def test_09_ngcv_arithmetic():
    half = ngcv(4 * 16, n=4, m=4, q=4, d=1)
    exact = abs(half - 2 * math.log(2))
    n, m = 40, 30
    cells = [(q, d) for d in range(1, 5) for q in range(4, 29)]
    values = {(q, d): ngcv(57.3, n, m, q, d) for q, d in cells}
    monotone = all(
        values[a] < values[b]
        for a in cells
        for b in cells
        if a[0] * a[1] < b[0] * b[1]
    )
    ok = exact < 1e-12 and monotone and len(cells) == 100
    assert report(
        9, "selection-score arithmetic", ok,
        f"half-complexity deviation {exact:.1e}; monotone over 100 cells: {monotone}",
    )
