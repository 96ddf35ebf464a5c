import csv

import numpy as np
import pytest

from novikov_lab.io import MAGIC, read_trajectory_binary, write_trajectory_binary, write_trajectory_csv
from novikov_lab.solver import Trajectory
from novikov_lab.spectral import Grid, GridFunction


@pytest.fixture
def traj():
    g = Grid(4.0, 16)
    times = np.array([0.0, 0.5, 1.0])
    states = [GridFunction(g, np.cos(g.x) * (1 + t)) for t in times]
    tr = Trajectory(g, times, states)
    tr.diagnostics["h1_sq"] = [1.0, 2.0, 3.0]
    return tr


def test_binary_round_trip(traj, tmp_path):
    path = write_trajectory_binary(traj, tmp_path / "t.bin")
    back = read_trajectory_binary(path)
    assert back.grid.N == 16 and back.grid.L == 4.0
    np.testing.assert_array_equal(back.times, traj.times)
    for a, b in zip(back.states, traj.states):
        np.testing.assert_array_equal(a.values, b.values)
    assert path.read_bytes()[:8] == MAGIC
    assert path.stat().st_size == 32 + 8 * 3 * 17


def test_bad_magic(traj, tmp_path):
    path = write_trajectory_binary(traj, tmp_path / "t.bin")
    data = bytearray(path.read_bytes())
    data[:8] = b"XXXXXXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError, match="magic"):
        read_trajectory_binary(path)


@pytest.mark.parametrize("cut", [4, 100])
def test_truncated(traj, tmp_path, cut):
    path = write_trajectory_binary(traj, tmp_path / "t.bin")
    path.write_bytes(path.read_bytes()[:cut])
    with pytest.raises(ValueError):
        read_trajectory_binary(path)


def test_csv(traj, tmp_path):
    path = write_trajectory_csv(traj, tmp_path / "t.csv", x_slices=[0.0])
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "h1_sq", "u(x=0)"]
    assert len(rows) == 4
    assert float(rows[2][2]) == pytest.approx(1.5)
