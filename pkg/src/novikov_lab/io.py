"""Trajectory export: diagnostic CSV and a raw little-endian binary dump.

Binary layout (all little-endian)::

    magic   8 bytes  b"NVKTRAJ1"
    N       uint64   grid size
    L       float64  half length
    M       uint64   number of states
    times   M x float64
    states  M x N x float64
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .solver import Trajectory
from .spectral import Grid, GridFunction

MAGIC = b"NVKTRAJ1"
_HEADER = struct.Struct("<8sQdQ")


def write_trajectory_csv(traj: Trajectory, path, x_slices: Sequence[float] = ()) -> Path:
    """One row per recorded time: t, diagnostics, then u at the requested x."""
    path = Path(path)
    diag_keys = list(traj.diagnostics)
    header = ["t"] + diag_keys + [f"u(x={x:g})" for x in x_slices]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, t in enumerate(traj.times):
            row = [repr(float(t))] + [repr(float(traj.diagnostics[k][i])) for k in diag_keys]
            if x_slices:
                row += [repr(float(v)) for v in traj.states[i].evaluate(list(x_slices))]
            w.writerow(row)
    return path


def write_trajectory_binary(traj: Trajectory, path) -> Path:
    path = Path(path)
    grid = traj.grid
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.N, grid.L, len(traj)))
        fh.write(np.asarray(traj.times, dtype="<f8").tobytes())
        for s in traj.states:
            fh.write(np.asarray(s.values, dtype="<f8").tobytes())
    return path


def read_trajectory_binary(path) -> Trajectory:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("file too short for a trajectory header")
    magic, n, L, m = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * m * (n + 1)
    if len(data) != expected:
        raise ValueError(f"expected {expected} bytes, found {len(data)}")
    grid = Grid(L, n)
    off = _HEADER.size
    times = np.frombuffer(data, dtype="<f8", count=m, offset=off)
    off += 8 * m
    raw = np.frombuffer(data, dtype="<f8", count=m * n, offset=off).reshape(m, n)
    return Trajectory(grid, times.copy(), [GridFunction(grid, row) for row in raw])
