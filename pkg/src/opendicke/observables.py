"""Expectation values on reduced states.

A permutation-invariant emitter operator ``O`` equals ``sum_t O_t P[t]^+`` up
to the convention that ``O_t`` is its matrix element between any pair of
computational states in class ``t``; so ``<O> = sum_t O_t coeff_t``. The
collective operators used here are

    J11      = sum_n n P[n,0,0]
    J10      = sum P[*,1,0],          J01 = sum P[*,0,1]
    J10 J01  = J11 + sum P[*,1,1],    J01 J10 = (N - J11) + sum P[*,1,1]
    J10^2    = 2 sum P[*,2,0],        J01^2 = 2 sum P[*,0,2]

with ``Jx = (J10 + J01)/2``, ``Jy = (J10 - J01)/(2i)``, ``Jz = J11 - N/2``.
Spin quantities are evaluated in the frame rotating with the drive, at t = 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dicke
from .basis import ReducedState, sym_basis

G2_EPS = 1e-10


def _sum_class(tls: np.ndarray, N: int, n10: int, n01: int, weight=None) -> complex:
    basis = sym_basis(N)
    total = 0j
    for n11 in range(N + 1 - n10 - n01):
        t = basis.triple_index(n11, n10, n01)
        w = 1.0 if weight is None else weight(n11)
        total += w * tls[t]
    return total


def tls_excitation(state: ReducedState) -> float:
    """<J11>, the number of excited emitters."""
    tls = state.tls_coeffs()
    return float(_sum_class(tls, state.N, 0, 0, lambda n: n).real)


def photon_moments(state: ReducedState) -> tuple[float, float]:
    """(<b+b>, <b+b+bb>)."""
    P = state.photon_distribution()
    n = np.arange(state.M)
    return float(n @ P), float((n * (n - 1)) @ P)


def g2_zero(state: ReducedState, eps: float = G2_EPS) -> float:
    """Equal-time second-order correlation; NaN when <b+b> <= eps."""
    m1, m2 = photon_moments(state)
    if m1 <= eps:
        return float("nan")
    return m2 / m1**2


@dataclass(frozen=True)
class SpinMoments:
    jx: float
    jy: float
    jz: float
    jx2: float
    jy2: float
    jz2: float

    @property
    def var_jx(self) -> float:
        return self.jx2 - self.jx**2

    @property
    def var_jy(self) -> float:
        return self.jy2 - self.jy**2

    @property
    def var_jz(self) -> float:
        return self.jz2 - self.jz**2


def collective_second_moments(state: ReducedState) -> SpinMoments:
    N = state.N
    tls = state.tls_coeffs()
    j11 = _sum_class(tls, N, 0, 0, lambda n: n)
    j10 = _sum_class(tls, N, 1, 0)
    j01 = _sum_class(tls, N, 0, 1)
    c11 = _sum_class(tls, N, 1, 1)
    j10j01 = j11 + c11
    j01j10 = N - j11 + c11
    j10sq = 2 * _sum_class(tls, N, 2, 0)
    j01sq = 2 * _sum_class(tls, N, 0, 2)
    jz2 = _sum_class(tls, N, 0, 0, lambda n: (n - N / 2) ** 2)
    jx = (j10 + j01) / 2
    jy = (j10 - j01) / 2j
    jx2 = (j10sq + j01sq + j10j01 + j01j10) / 4
    jy2 = -(j10sq + j01sq - j10j01 - j01j10) / 4
    return SpinMoments(
        jx=float(jx.real), jy=float(jy.real), jz=float((j11 - N / 2).real),
        jx2=float(jx2.real), jy2=float(jy2.real), jz2=float(jz2.real),
    )


def ssi_from_moments(mom: SpinMoments, N: int) -> tuple[float, float, float, float]:
    """Left-hand sides of the four spin-squeezing inequalities; > 0 means entangled."""
    a1 = mom.jy2 + mom.jz2 - N / 2 - (N - 1) * mom.var_jx
    a2 = mom.jx2 + mom.jz2 - N / 2 - (N - 1) * mom.var_jy
    b1 = mom.jx2 + N * (N - 2) / 4 - (N - 1) * (mom.var_jy + mom.var_jz)
    b2 = mom.jy2 + N * (N - 2) / 4 - (N - 1) * (mom.var_jx + mom.var_jz)
    return a1, a2, b1, b2


def ssi_all(state: ReducedState) -> tuple[float, float, float, float]:
    return ssi_from_moments(collective_second_moments(state), state.N)


def ssi_A(state: ReducedState) -> float:
    """<Jy^2> + <Jz^2> - N/2 - (N-1) Var(Jx)."""
    return ssi_all(state)[0]


def ssi_summed(state: ReducedState) -> tuple[float, float]:
    """Sums of the paired inequalities; frame independent but weaker."""
    a1, a2, b1, b2 = ssi_all(state)
    return a1 + a2, b1 + b2


@dataclass
class ObservableRecord:
    n_tls: float
    n_tls_norm: float
    m_ph: float
    output_rate: float
    g2: float
    jz: float
    jz2: float
    jx2: float
    jy2: float
    var_jx: float
    var_jy: float
    var_jz: float
    ssi: tuple
    A: float
    R_by_l: dict
    p_lm: dict = field(default_factory=dict)

    def flat(self) -> dict:
        """Scalar columns in schema order, ``ssi`` and ``R_by_l`` expanded."""
        d = asdict(self)
        out = {}
        for k, v in d.items():
            if k == "ssi":
                out.update({f"ssi_{name}": x for name, x in zip(("a1", "a2", "b1", "b2"), v)})
            elif k == "R_by_l":
                out.update({f"R_l{l:g}": x for l, x in v.items()})
            elif k == "p_lm":
                out.update({f"p_l{l:g}_m{m:g}": x for (l, m), x in v.items()})
            else:
                out[k] = v
        return out


def observe(state: ReducedState, kappa: float, with_p_lm: bool = False) -> ObservableRecord:
    N = state.N
    n = tls_excitation(state)
    m1, _ = photon_moments(state)
    mom = collective_second_moments(state)
    ssi = ssi_from_moments(mom, N)
    return ObservableRecord(
        n_tls=n,
        n_tls_norm=n / N,
        m_ph=m1,
        output_rate=kappa * m1,
        g2=g2_zero(state),
        jz=mom.jz,
        jz2=mom.jz2,
        jx2=mom.jx2,
        jy2=mom.jy2,
        var_jx=mom.var_jx,
        var_jy=mom.var_jy,
        var_jz=mom.var_jz,
        ssi=ssi,
        A=ssi[0],
        R_by_l=dicke.collectivity_all(state),
        p_lm=dicke.populations(state) if with_p_lm else {},
    )


def is_finite_record(rec: ObservableRecord) -> bool:
    vals = [v for k, v in rec.flat().items() if k not in ("g2",) and not k.startswith("R_l")]
    return all(math.isfinite(v) for v in vals)
