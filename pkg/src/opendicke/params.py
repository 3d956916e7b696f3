"""Model parameters and unit handling.

All rates and couplings are angular frequencies. Internally everything is
expressed in units of the individual decay rate ``gamma`` (``gamma = 1``),
so times come out in units of ``1/gamma``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Union

#: reduced Planck constant in meV * ns
HBAR_MEV_NS = 6.582120e-4

FockCutoff = Union[int, str]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the driven open Dicke model.

    Parameters
    ----------
    N : int
        Number of two-level systems.
    delta0, delta1 : float
        Cavity and emitter detuning from the drive.
    g : float
        Emitter-cavity coupling.
    E : float
        Classical drive amplitude acting on every emitter.
    gamma : float
        Individual spontaneous decay rate.
    delta : float
        Pure dephasing rate.
    kappa : float
        Cavity field decay rate.
    fock_cutoff : int or "auto"
        Photon number truncation M (Fock states 0..M-1).
    """

    N: int
    g: float = 0.0
    E: float = 0.0
    gamma: float = 1.0
    delta: float = 0.0
    kappa: float = 0.0
    delta0: float = 0.0
    delta1: float = 0.0
    fock_cutoff: FockCutoff = "auto"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("gamma", "delta", "kappa"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {val!r}")
        for name in ("g", "E", "delta0", "delta1"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        M = self.fock_cutoff
        if M != "auto" and (isinstance(M, str) or int(M) != M or M < 1):
            raise ValueError(f"fock_cutoff must be 'auto' or an integer >= 1, got {M!r}")

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    @property
    def rate_fields(self) -> tuple[str, ...]:
        return ("delta0", "delta1", "g", "E", "gamma", "delta", "kappa")

    def scaled(self, factor: float) -> "ModelParams":
        """All rates and couplings multiplied by ``factor``."""
        return self.replace(**{k: getattr(self, k) * factor for k in self.rate_fields})


def mev_to_rate(energy_mev: float) -> float:
    """Convert an energy in meV to an angular frequency in 1/ns."""
    return energy_mev / HBAR_MEV_NS


def to_internal_units(params: ModelParams) -> ModelParams:
    """Rescale so that ``gamma = 1``.

    Without individual decay the coupling ``g`` is used as the unit instead.
    Dimensionless ratios are unchanged.
    """
    if params.gamma > 0:
        return params.scaled(1.0 / params.gamma)
    if params.g != 0:
        return params.scaled(1.0 / abs(params.g))
    raise ValueError("cannot normalize: both gamma and g are zero")


def paper_units(N: int, *, gamma_per_ns: float = 1.0, g_mev: float = 3.3, **kw) -> ModelParams:
    """Parameters with gamma given in 1/ns and g in meV, normalized to gamma = 1.

    Any remaining keyword arguments are passed through as rates in units of
    gamma (e.g. ``kappa``), and ``kappa_over_g`` is accepted as a shortcut.
    """
    g = mev_to_rate(g_mev) / gamma_per_ns
    kappa_over_g = kw.pop("kappa_over_g", None)
    if kappa_over_g is not None:
        kw["kappa"] = kappa_over_g * g
    return ModelParams(N=N, g=g, gamma=1.0, **kw)
