"""JSON run configuration. Unknown keys anywhere are rejected."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .spectral import Grid, GridFunction

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "build_field"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(_Strict):
    L: float = Field(32.0, gt=0)
    N: int = 2**13

    @field_validator("N")
    @classmethod
    def _pow2(cls, v):
        if v < 4 or v & (v - 1):
            raise ValueError("N must be a power of two >= 4")
        return v

    def build(self) -> Grid:
        return Grid(self.L, self.N)


class SpaceSection(_Strict):
    s: float = 2.0
    p: float = Field(2.0, ge=1)
    r: float = Field(2.0, ge=1)


class SolverSection(_Strict):
    dt: float = Field(1e-3, gt=0)
    T: float = Field(1.0, gt=0)
    cfl_safety: float = Field(0.5, gt=0)
    dealias_fraction: float = Field(0.5, gt=0, le=1)
    blowup_slope_factor: float = Field(50.0, gt=1)

    def build(self):
        from .solver import SolveConfig

        return SolveConfig(
            dt=self.dt, T=self.T, cfl_safety=self.cfl_safety,
            dealias_fraction=self.dealias_fraction, blowup_slope_factor=self.blowup_slope_factor,
        )


class GaussianField(_Strict):
    kind: Literal["gaussian"]
    amplitude: float = 1.0
    width: float = Field(1.0, gt=0)
    center: float = 0.0


class ModeField(_Strict):
    """A single Fourier mode; ``m`` is the ladder index so k = pi m / L."""

    kind: Literal["sine", "cosine"]
    m: int = Field(ge=0)
    amplitude: float = 1.0


class PeakonField(_Strict):
    kind: Literal["peakon"]
    c: float = Field(1.0, gt=0)
    sigma: float = Field(0.05, ge=0)
    center: float = 0.0
    sign: Literal[1, -1] = 1


class BesselField(_Strict):
    kind: Literal["bessel"]
    amplitude: float = 1.0
    center: float = 0.0


class ConstantField(_Strict):
    kind: Literal["constant"]
    value: float = 0.0


FieldSpec = Annotated[
    Union[GaussianField, ModeField, PeakonField, BesselField, ConstantField], Field(discriminator="kind")
]


def build_field(spec, grid: Grid) -> GridFunction:
    from . import data

    if isinstance(spec, GaussianField):
        return data.gaussian(grid, spec.amplitude, spec.width, spec.center)
    if isinstance(spec, ModeField):
        if spec.m > grid.N // 2:
            raise ConfigError(f"mode index m={spec.m} exceeds N/2={grid.N // 2}")
        k = spec.m * grid.dk
        fn = np.sin if spec.kind == "sine" else np.cos
        return grid.sample(lambda x: spec.amplitude * fn(k * x))
    if isinstance(spec, PeakonField):
        return data.mollified_peakon(grid, spec.c, spec.sigma, spec.center, spec.sign)
    if isinstance(spec, BesselField):
        return data.bessel_potential(grid, spec.amplitude, spec.center)
    if isinstance(spec, ConstantField):
        return GridFunction(grid, np.full(grid.N, spec.value))
    raise ConfigError(f"unsupported field spec {spec!r}")


class SolveSection(_Strict):
    equation: Literal["NE", "CH", "DP"] = "NE"
    initial: FieldSpec = GaussianField(kind="gaussian")
    record_every: int = Field(10, ge=1)
    x_slices: list[float] = []
    binary: bool = False
    stop_on_blowup: bool = False


class PeakonSection(_Strict):
    q: list[float] = [-2.0, 2.0]
    p: list[float] = [1.0, 0.5]
    T: float = Field(5.0, gt=0)
    dt: float = Field(1e-3, gt=0)
    record_every: int = Field(10, ge=1)


class NormsSection(_Strict):
    field: FieldSpec = ModeField(kind="cosine", m=8)


class VerifySection(_Strict):
    lemmas: list[Literal["moser", "product", "commutator_a", "commutator_b", "transport"]] = [
        "moser", "product", "commutator_a", "commutator_b", "transport"
    ]
    trials: int = Field(100, ge=1)
    seed: int = 20240501
    grid_N: int = 512
    transport_grid_N: int = 256
    frozen_factor: float = Field(10.0, gt=0)


class TaylorSection(_Strict):
    initial: FieldSpec = GaussianField(kind="gaussian")
    t_list: list[float] = Field(default_factory=lambda: list(np.geomspace(1e-3, 1e-1, 9)))
    min_steps: int = Field(20, ge=1)


class NudSection(_Strict):
    n_list: list[int] = [5, 6, 7, 8]
    t_eval: list[float] = [0.05, 0.1]
    floor: float | None = None
    floor_factor: float = Field(0.3, gt=0)


class ContinuitySection(_Strict):
    initial: FieldSpec = BesselField(kind="bessel")
    perturbation: FieldSpec = GaussianField(kind="gaussian", center=1.0, width=math.sqrt(0.5))
    deltas: list[float] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    truncations: list[int] = [4, 5, 6, 7, 8, 9, 10]
    sample_every: int = Field(16, ge=1)
    ratio_bound: float | None = 50.0


class PicardSection(_Strict):
    initial: FieldSpec = GaussianField(kind="gaussian")
    n_max: int = Field(8, ge=3)
    rho: float = Field(0.6, gt=0, lt=1)
    burn_in: int = Field(3, ge=1)


class RunConfig(_Strict):
    grid: GridSection = GridSection()
    space: SpaceSection = SpaceSection()
    solver: SolverSection = SolverSection()
    seed: int | None = None
    solve: SolveSection | None = None
    peakon: PeakonSection | None = None
    norms: NormsSection | None = None
    verify: VerifySection | None = None
    taylor: TaylorSection | None = None
    nud: NudSection | None = None
    continuity: ContinuitySection | None = None
    picard: PicardSection | None = None

    def section(self, name: str):
        """The named experiment section, or its defaults when absent."""
        val = getattr(self, name)
        if val is None:
            val = type(self).model_fields[name].annotation.__args__[0]()
        return val


def parse_config(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(raw)
