"""Run configuration: model parameters, sweep grids, solver and output settings.

A run is described by one YAML document::

    protocol: steady-sweep
    model:
      N: 6
      g_mev: 3.3          # coupling in meV, converted with gamma in 1/ns
      gamma_per_ns: 1.0
      kappa_over_g: 1.0
      delta_over_gamma: 0.0
      E: 0.0              # drive, units of gamma
    grids:
      E: {log: [3000, 40000, 15]}
      kappa_over_g: {list: [10, 1]}
    solver:
      fock: auto          # or an integer cutoff M
    output:
      dir: runs/example
    workers: 1

Everything rate-like ends up in units of gamma (gamma = 1). Swept names are
``E``, ``kappa_over_g``, ``delta_over_gamma``, ``N`` and the detunings
``delta0``/``delta1``; each grid is an explicit ``list``, a ``linear``
``[start, stop, num]`` range or a ``log`` ``[start, stop, num]`` range.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .params import ModelParams, mev_to_rate

PROTOCOLS = ("steady-sweep", "gap-sweep", "cascade", "oracle-check")
SWEEPABLE = ("E", "N", "delta0", "delta1", "delta_over_gamma", "kappa_over_g")

#: largest N accepted in a sweep grid (the basis grows as N**3 times M**2)
MAX_SWEEP_N = 40


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """One-dimensional sweep grid."""

    kind: str
    spec: tuple

    def __post_init__(self):
        if self.kind not in ("list", "linear", "log"):
            raise ConfigError(f"unknown grid kind {self.kind!r}")
        if self.kind == "list":
            if len(self.spec) == 0:
                raise ConfigError("empty list grid")
        else:
            if len(self.spec) != 3 or int(self.spec[2]) < 1:
                raise ConfigError(f"{self.kind} grid needs [start, stop, num>=1], got {list(self.spec)}")
            if self.kind == "log" and (self.spec[0] <= 0 or self.spec[1] <= 0):
                raise ConfigError("log grid bounds must be positive")

    @classmethod
    def parse(cls, block) -> "Grid":
        if isinstance(block, (list, tuple)):
            return cls("list", tuple(block))
        if not isinstance(block, dict) or len(block) != 1:
            raise ConfigError(f"grid must be a list or a single-key mapping, got {block!r}")
        (kind, spec), = block.items()
        if not isinstance(spec, (list, tuple)):
            spec = [spec]
        return cls(kind, tuple(float(x) if kind != "list" else x for x in spec))

    def values(self) -> np.ndarray:
        if self.kind == "list":
            return np.asarray(self.spec, dtype=float)
        start, stop, num = self.spec
        if self.kind == "linear":
            return np.linspace(start, stop, int(num))
        return np.geomspace(start, stop, int(num))

    def to_dict(self) -> dict:
        return {self.kind: list(self.spec)}


@dataclass
class ModelSpec:
    """Base model parameters; ``g`` (units of gamma) overrides ``g_mev`` when set."""

    N: int = 4
    g_mev: float = 3.3
    gamma_per_ns: float = 1.0
    g: float | None = None
    kappa_over_g: float = 1.0
    delta_over_gamma: float = 0.0
    E: float = 0.0
    delta0: float = 0.0
    delta1: float = 0.0

    @property
    def g_rate(self) -> float:
        if self.g is not None:
            return float(self.g)
        return mev_to_rate(self.g_mev) / self.gamma_per_ns

    def params(self, **overrides) -> ModelParams:
        """Concrete parameters (gamma = 1) with swept values substituted."""
        vals = dataclasses.asdict(self)
        vals.update(overrides)
        g = self.g_rate
        return ModelParams(
            N=int(vals["N"]),
            g=g,
            E=float(vals["E"]),
            gamma=1.0,
            delta=float(vals["delta_over_gamma"]),
            kappa=float(vals["kappa_over_g"]) * g,
            delta0=float(vals["delta0"]),
            delta1=float(vals["delta1"]),
        )


@dataclass
class SolverSpec:
    tol: float = 1e-10
    fock: int | str = "auto"
    method: str = "auto"
    fock_top_pop_tol: float = 1e-8
    fock_rel_change: float = 1e-3
    fock_max_dim: int = 300_000
    fock_M_max: int = 120
    gap_k: int = 4
    rtol: float = 1e-8
    atol: float = 1e-10


@dataclass
class CascadeSpec:
    t_max: float = 10.0
    t_min: float | None = None
    n_out: int = 241
    integrator: str = "Radau"


@dataclass
class OutputSpec:
    dir: str = "runs/out"
    with_p_lm: bool = False
    ssi_summed: bool = False


@dataclass
class RunConfig:
    protocol: str = "steady-sweep"
    model: ModelSpec = field(default_factory=ModelSpec)
    grids: dict = field(default_factory=dict)
    solver: SolverSpec = field(default_factory=SolverSpec)
    cascade: CascadeSpec = field(default_factory=CascadeSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    workers: int = 1
    name: str = ""

    def __post_init__(self):
        self.validate()

    # construction ----------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = copy.deepcopy(data or {})
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sections = {"model": ModelSpec, "solver": SolverSpec, "cascade": CascadeSpec, "output": OutputSpec}
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                kwargs[key] = _build(sections[key], value or {}, key)
            elif key == "grids":
                kwargs[key] = {k: Grid.parse(v) for k, v in (value or {}).items()}
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["grids"] = {k: g.to_dict() for k, g in sorted(self.grids.items())}
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, identifying the run."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(copy.deepcopy(self), **changes)

    # checks ------------------------------------------------------------------

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        for name, grid in self.grids.items():
            if name not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {name!r}; sweepable: {SWEEPABLE}")
            if not isinstance(grid, Grid):
                raise ConfigError(f"grid {name!r} is not a Grid")
        Ns = self.grids["N"].values() if "N" in self.grids else [self.model.N]
        for N in Ns:
            if int(N) != N or not 1 <= N <= MAX_SWEEP_N:
                raise ConfigError(f"N grid values must be integers in [1, {MAX_SWEEP_N}], got {N}")
        fock = self.solver.fock
        if fock != "auto" and (isinstance(fock, str) or int(fock) != fock or fock < 1):
            raise ConfigError(f"solver.fock must be 'auto' or a positive integer, got {fock!r}")

    # grid expansion ------------------------------------------------------------

    @property
    def swept(self) -> list[str]:
        """Swept names in lexicographic order (the CSV column order)."""
        return sorted(self.grids)

    def points(self) -> list[dict]:
        """Grid points as ``{name: value}`` in deterministic row-major order."""
        names = self.swept
        axes = [self.grids[n].values() for n in names]
        return [dict(zip(names, (float(v) for v in combo))) for combo in itertools.product(*axes)]

    def params_at(self, point: dict) -> ModelParams:
        over = dict(point)
        if "N" in over:
            over["N"] = int(round(over["N"]))
        return self.model.params(**over)


def _build(cls, data: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")
    return cls(**data)


def write_text_atomic(path: Path, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


# presets ------------------------------------------------------------------------
#
# Default grids for the figure-style runs. The published figures do not expose
# their axis values, so every number below is a choice of this package, picked
# to bracket the transition at g = 3.3 meV, gamma = 1/ns (g ~ 5014 gamma).

_E_GRID = {"log": [2000.0, 30000.0, 15]}

PRESETS: dict[str, dict] = {
    "fig2": {
        "name": "fig2",
        "protocol": "steady-sweep",
        "model": {"N": 6},
        "grids": {"E": _E_GRID, "kappa_over_g": {"list": [10.0, 3.0, 1.0, 0.3]}},
        "output": {"dir": "runs/fig2"},
    },
    "fig3": {
        "name": "fig3",
        "protocol": "steady-sweep",
        "model": {"kappa_over_g": 1.0},
        "grids": {"E": _E_GRID, "N": {"list": [2, 3, 4, 5, 6]}},
        "output": {"dir": "runs/fig3", "with_p_lm": True},
    },
    "fig4": {
        "name": "fig4",
        "protocol": "gap-sweep",
        "model": {"kappa_over_g": 3.0},
        "grids": {"E": _E_GRID, "N": {"list": [2, 3, 4, 5]}},
        "output": {"dir": "runs/fig4"},
    },
    "fig5a": {
        "name": "fig5a",
        "protocol": "steady-sweep",
        "model": {"N": 5, "kappa_over_g": 1.0},
        "grids": {"E": _E_GRID, "delta_over_gamma": {"list": [0.0, 0.5, 1.0]}},
        "output": {"dir": "runs/fig5a"},
    },
    "fig5b": {
        "name": "fig5b",
        "protocol": "steady-sweep",
        "model": {"N": 5, "kappa_over_g": 1.0},
        "grids": {"E": _E_GRID, "delta_over_gamma": {"list": [0.0, 0.1, 0.5, 1.0, 2.0]}},
        "output": {"dir": "runs/fig5b"},
    },
    "fig5c": {
        "name": "fig5c",
        "protocol": "cascade",
        "model": {"N": 5, "kappa_over_g": 10.0, "delta_over_gamma": 0.0},
        "grids": {"E": {"log": [5000.0, 50000.0, 11]}},
        "solver": {"rtol": 1e-10, "atol": 1e-12},
        "cascade": {"t_max": 10.0, "n_out": 401},
        "output": {"dir": "runs/fig5c"},
    },
}


def merge(base: dict, override: dict) -> dict:
    """Recursive dict update returning a new dict (grid blocks are replaced whole)."""
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "grids":
            out[k] = merge(out[k], v)
        elif k == "grids" and isinstance(v, dict):
            out.setdefault("grids", {})
            out["grids"] = {**out["grids"], **copy.deepcopy(v)}
        else:
            out[k] = copy.deepcopy(v)
    return out


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return RunConfig.from_dict(PRESETS[name])
