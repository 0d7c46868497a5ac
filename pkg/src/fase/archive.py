"""On-disk archive format for snapshot series, fits, and trajectories.

A series archive is a directory with:

* ``indices.csv`` -- header ``x``, one index per line;
* ``snapshot_<k>.csv`` -- dense comma-separated ``n x n`` matrix, ``k``
  one-based and zero-padded;
* ``mask_<k>.csv`` -- optional 0/1 matrices marking observed entries;
* ``meta.json`` -- ``n``, ``m``, symmetry flag, generator provenance;
* ``truth/`` -- optional subdirectory with ``trajectories.csv`` (long
  format ``node,snapshot,dim,value``) and, when the generator exposes
  them, ``coords.csv`` (``node,basis,dim,value``).

Floats are written with 17 significant digits so values round-trip exactly.
All writers are deterministic: identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .basis import SplineBasis
from .fitting import FaseFit
from .model import SnapshotSeries

__all__ = [
    "DataError",
    "save_series",
    "load_series",
    "save_trajectories",
    "load_trajectories",
    "save_coords",
    "load_coords",
    "save_fit",
    "load_fit_model",
    "find_trajectories",
]


class DataError(Exception):
    """A file could not be read, parsed, or reconciled with its metadata."""


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _matrix_csv(matrix: np.ndarray) -> str:
    return "\n".join(",".join(_fmt(v) for v in row) for row in matrix) + "\n"


def _int_matrix_csv(matrix: np.ndarray) -> str:
    return "\n".join(",".join(str(int(v)) for v in row) for row in matrix) + "\n"


def _load_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as handle:
            rows = [line.split(",") for line in handle.read().strip().splitlines()]
        return np.asarray([[float(v) for v in row] for row in rows])
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"cannot parse matrix file {path}: {exc}") from exc


def _snapshot_name(k: int, m: int, prefix: str = "snapshot") -> str:
    width = len(str(m))
    return f"{prefix}_{k + 1:0{width}d}.csv"


def save_series(
    directory: str,
    series: SnapshotSeries,
    truth: np.ndarray | None = None,
    truth_coords: np.ndarray | None = None,
    generator: dict | None = None,
) -> None:
    os.makedirs(directory, exist_ok=True)
    m = series.n_snapshots
    _write(
        os.path.join(directory, "indices.csv"),
        "x\n" + "".join(_fmt(x) + "\n" for x in series.indices),
    )
    for k in range(m):
        _write(
            os.path.join(directory, _snapshot_name(k, m)),
            _matrix_csv(series.snapshots[k]),
        )
        if series.masks is not None:
            _write(
                os.path.join(directory, _snapshot_name(k, m, "mask")),
                _int_matrix_csv(series.masks[k]),
            )
    meta = {
        "n": series.n_nodes,
        "m": m,
        "symmetric": True,
        "generator": generator or {},
    }
    _write(
        os.path.join(directory, "meta.json"),
        json.dumps(meta, indent=2, sort_keys=True) + "\n",
    )
    if truth is not None:
        truth_dir = os.path.join(directory, "truth")
        os.makedirs(truth_dir, exist_ok=True)
        save_trajectories(os.path.join(truth_dir, "trajectories.csv"), truth)
        if truth_coords is not None:
            save_coords(os.path.join(truth_dir, "coords.csv"), truth_coords)


def load_series(directory: str) -> SnapshotSeries:
    meta_path = os.path.join(directory, "meta.json")
    try:
        with open(meta_path, encoding="utf-8") as handle:
            meta = json.load(handle)
    except OSError as exc:
        raise DataError(f"not a series archive (missing meta.json): {directory}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse {meta_path}: {exc}") from exc
    try:
        n, m = int(meta["n"]), int(meta["m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{meta_path} must record integer fields 'n' and 'm'") from exc

    idx_path = os.path.join(directory, "indices.csv")
    try:
        with open(idx_path, encoding="utf-8") as handle:
            lines = handle.read().strip().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {idx_path}: {exc}") from exc
    if not lines or lines[0].strip() != "x":
        raise DataError(f"{idx_path} must start with a header line 'x'")
    try:
        indices = np.asarray([float(v) for v in lines[1:]])
    except ValueError as exc:
        raise DataError(f"cannot parse {idx_path}: {exc}") from exc
    if indices.size != m:
        raise DataError(f"{idx_path} holds {indices.size} indices but meta.json says m={m}")

    snapshots = np.empty((m, n, n))
    masks = None
    for k in range(m):
        snap = _load_matrix(os.path.join(directory, _snapshot_name(k, m)))
        if snap.shape != (n, n):
            raise DataError(
                f"{_snapshot_name(k, m)} has shape {snap.shape}, expected ({n}, {n})"
            )
        snapshots[k] = snap
        mask_path = os.path.join(directory, _snapshot_name(k, m, "mask"))
        if os.path.exists(mask_path):
            if masks is None:
                masks = np.ones((m, n, n), dtype=bool)
            mask = _load_matrix(mask_path)
            if mask.shape != (n, n):
                raise DataError(f"mask file {mask_path} has shape {mask.shape}")
            masks[k] = mask != 0
    try:
        return SnapshotSeries(indices, snapshots, masks)
    except ValueError as exc:
        raise DataError(f"invalid series in {directory}: {exc}") from exc


def _long_csv(header: str, array: np.ndarray) -> str:
    # array axes become 1-based integer columns, the value comes last
    lines = [header]
    it = np.ndindex(array.shape)
    for key in it:
        fields = [str(i + 1) for i in key]
        fields.append(_fmt(array[key]))
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def _load_long_csv(path: str, header: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().strip().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != header:
        raise DataError(f"{path} must start with header '{header}'")
    n_axes = len(header.split(",")) - 1
    keys = []
    values = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != n_axes + 1:
            raise DataError(f"malformed row in {path}: {line!r}")
        try:
            keys.append(tuple(int(p) - 1 for p in parts[:-1]))
            values.append(float(parts[-1]))
        except ValueError as exc:
            raise DataError(f"cannot parse {path}: {exc}") from exc
    if not keys:
        raise DataError(f"{path} holds no data rows")
    shape = tuple(max(k[a] for k in keys) + 1 for a in range(n_axes))
    array = np.full(shape, np.nan)
    for key, value in zip(keys, values):
        array[key] = value
    if np.isnan(array).any():
        raise DataError(f"{path} does not cover a full rectangular array")
    return array


def save_trajectories(path: str, stack: np.ndarray) -> None:
    _write(path, _long_csv("node,snapshot,dim,value", np.asarray(stack, float)))


def load_trajectories(path: str) -> np.ndarray:
    return _load_long_csv(path, "node,snapshot,dim,value")


def save_coords(path: str, coords: np.ndarray) -> None:
    _write(path, _long_csv("node,basis,dim,value", np.asarray(coords, float)))


def load_coords(path: str) -> np.ndarray:
    return _load_long_csv(path, "node,basis,dim,value")


def find_trajectories(directory: str) -> np.ndarray:
    """Locate a trajectory table in a fit output or series archive."""
    for candidate in (
        os.path.join(directory, "trajectories.csv"),
        os.path.join(directory, "truth", "trajectories.csv"),
    ):
        if os.path.exists(candidate):
            return load_trajectories(candidate)
    raise DataError(f"no trajectories.csv under {directory}")


def save_fit(directory: str, fit: FaseFit, series: SnapshotSeries, n_blocks: int) -> None:
    """Write fitted coordinates, trajectories, and fit/basis metadata."""
    from .model import evaluate_trajectories

    os.makedirs(directory, exist_ok=True)
    save_coords(os.path.join(directory, "coords.csv"), fit.coords)
    save_trajectories(
        os.path.join(directory, "trajectories.csv"),
        evaluate_trajectories(fit.coords, fit.basis, series.indices),
    )
    fit_meta = {
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
        "objective_trace": [float(v) for v in fit.objective_trace],
        "step_sizes": [float(v) for v in fit.step_sizes],
        "final_step_size": float(fit.final_step_size),
        "n_blocks": int(n_blocks),
    }
    _write(
        os.path.join(directory, "fit.json"),
        json.dumps(fit_meta, indent=2, sort_keys=True) + "\n",
    )
    basis_meta = {
        "order": fit.basis.order,
        "knots": [float(t) for t in fit.basis.knots],
    }
    _write(
        os.path.join(directory, "basis.json"),
        json.dumps(basis_meta, indent=2, sort_keys=True) + "\n",
    )


def load_fit_model(directory: str) -> tuple[np.ndarray, SplineBasis]:
    """Reload the coordinates and basis written by :func:`save_fit`."""
    basis_path = os.path.join(directory, "basis.json")
    try:
        with open(basis_path, encoding="utf-8") as handle:
            meta = json.load(handle)
    except OSError as exc:
        raise DataError(f"not a fit directory (missing basis.json): {directory}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse {basis_path}: {exc}") from exc
    order = int(meta["order"])
    knots = np.asarray(meta["knots"], dtype=float)
    if knots.size < 2 * (order + 1):
        raise DataError(f"{basis_path} holds too few knots for order {order}")
    interior = knots[order + 1 : knots.size - order - 1]
    basis = SplineBasis(
        order=order,
        boundary=(float(knots[0]), float(knots[-1])),
        interior_knots=tuple(float(t) for t in interior),
    )
    coords = load_coords(os.path.join(directory, "coords.csv"))
    if coords.shape[1] != basis.q:
        raise DataError(
            f"coords.csv in {directory} does not match the stored basis dimension"
        )
    return coords, basis
