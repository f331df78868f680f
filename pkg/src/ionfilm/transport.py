"""Reduction of raw magneto-transport and Hall sweeps to scalar film
quantities: Tc, the upper-critical-field slope, quasiparticle diffusivity,
Hall coefficient / electron density, and van der Pauw sheet resistance.

The Tc criterion is the temperature where the resistance crosses a fixed
fraction (default 50%) of the normal-state plateau, the plateau being the
median resistance over the top 10% of the temperature range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import (
    InsufficientData,
    NoTransition,
    NonMonotonicAmbiguity,
    NonNegativeSlope,
    NonPositiveInput,
    ZeroSlope,
)

PLATEAU_TOP_FRACTION = 0.10   # share of the T range defining "normal state"
NO_TRANSITION_FLOOR = 0.10    # R must dip below this fraction of the plateau


@dataclass(frozen=True)
class TransportSweep:
    """R(T) records at one applied field: (temperature K, field T, resistance Ohm)."""

    records: tuple[tuple[float, float, float], ...]
    geometry: str | None = None

    def __init__(self, records, geometry=None):
        rec = tuple((float(t), float(b), float(r)) for t, b, r in records)
        for t, b, r in rec:
            if not (math.isfinite(t) and math.isfinite(b) and math.isfinite(r)):
                raise ValueError("sweep records must be finite")
            if r < 0.0:
                raise ValueError(f"resistance must be >= 0, got {r}")
        object.__setattr__(self, "records", rec)
        object.__setattr__(self, "geometry", geometry)

    def field(self) -> float:
        """The (single) applied field of this sweep."""
        fields = {b for _, b, _ in self.records}
        if len(fields) != 1:
            raise ValueError(
                f"sweep mixes {len(fields)} distinct fields; one expected"
            )
        return fields.pop()


@dataclass(frozen=True)
class HallSweep:
    """Hall records (field T, hall_voltage V, current A) on a film of
    thickness d0 (nm)."""

    records: tuple[tuple[float, float, float], ...]
    d0: float

    def __init__(self, records, d0):
        rec = tuple((float(b), float(v), float(i)) for b, v, i in records)
        for b, v, i in rec:
            if i == 0.0:
                raise ValueError("measurement current must be nonzero")
        if not d0 > 0.0:
            raise ValueError(f"thickness must be > 0, got {d0}")
        object.__setattr__(self, "records", rec)
        object.__setattr__(self, "d0", float(d0))


def extract_tc(sweep: TransportSweep, criterion: float = 0.5) -> float:
    """Transition temperature: R crosses criterion * plateau, interpolated.

    Raises NoTransition when R never drops below 10% of the plateau and
    NonMonotonicAmbiguity (carrying every crossing) when the criterion
    level is crossed more than once.
    """
    if not 0.1 <= criterion <= 0.9:
        raise ValueError(f"criterion must be in [0.1, 0.9], got {criterion}")
    if len(sweep.records) < 4:
        raise InsufficientData("Tc extraction needs >= 4 samples")
    rec = sorted(sweep.records, key=lambda x: x[0])
    T = np.array([x[0] for x in rec])
    R = np.array([x[2] for x in rec])
    t_cut = T[-1] - PLATEAU_TOP_FRACTION * (T[-1] - T[0])
    plateau = float(np.median(R[T >= t_cut]))
    if plateau <= 0.0 or R.min() > NO_TRANSITION_FLOOR * plateau:
        raise NoTransition(
            f"resistance stays above {NO_TRANSITION_FLOOR:.0%} of the "
            f"plateau ({plateau:.4g} Ohm); no superconducting transition"
        )
    level = criterion * plateau
    above = R > level
    crossings = []
    for i in range(len(T) - 1):
        if above[i] == above[i + 1]:
            continue
        dR = R[i + 1] - R[i]
        if dR == 0.0:
            crossings.append(float(T[i]))
        else:
            crossings.append(float(T[i] + (level - R[i]) / dR * (T[i + 1] - T[i])))
    if not crossings:
        raise NoTransition(
            f"resistance never crosses {criterion:.0%} of the plateau"
        )
    if len(crossings) > 1:
        raise NonMonotonicAmbiguity(crossings)
    return crossings[0]


def extract_bc2_slope(sweeps, criterion: float = 0.5,
                      max_field: float = 1.0,
                      n_highest: int | None = None) -> float:
    """Slope dB_c2/dT from Tc(B) of several fixed-field sweeps.

    Tc is extracted per sweep; the slope is the OLS regression of B on Tc
    over fields in [0, max_field].  n_highest restricts the fit to the N
    highest-Tc points (the regime closest to the zero-field Tc).
    """
    pairs = []
    for sweep in sweeps:
        b = sweep.field()
        if b < 0.0 or b > max_field:
            continue
        pairs.append((extract_tc(sweep, criterion=criterion), b))
    if not any(b == 0.0 for _, b in pairs):
        raise InsufficientData("a zero-field sweep is required")
    if len({b for _, b in pairs}) < 3:
        raise InsufficientData(
            f"need >= 3 distinct fields in [0, {max_field:g}] T, "
            f"got {len({b for _, b in pairs})}"
        )
    pairs.sort(key=lambda p: p[0], reverse=True)
    if n_highest is not None:
        if n_highest < 3:
            raise ValueError("n_highest must be >= 3")
        pairs = pairs[:n_highest]
    tc = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    tm = tc - tc.mean()
    stt = float(tm @ tm)
    if stt == 0.0:
        raise InsufficientData("all sweeps yield the same Tc")
    return float(tm @ b) / stt


def diffusivity(slope: float) -> float:
    """Quasiparticle diffusivity (m^2/s) from the B_c2 slope (T/K):
    D = 4 k_B / (pi e |dB_c2/dT|)."""
    if slope >= 0.0:
        raise NonNegativeSlope(
            f"dB_c2/dT must be negative, got {slope:g} T/K"
        )
    return 4.0 * constants.k / (math.pi * constants.e * abs(slope))


def extract_hall(sweep: HallSweep) -> tuple[float, float]:
    """Hall coefficient (m^3/C) and electron density (m^-3).

    Least-squares line of V_H/I versus B (an intercept absorbs offset
    voltages); R_H = slope * d0.  n_e = -1/(R_H e) is positive for
    electron-like carriers (R_H < 0).
    """
    if len({b for b, _, _ in sweep.records}) < 2:
        raise InsufficientData("Hall extraction needs >= 2 distinct fields")
    b = np.array([r[0] for r in sweep.records])
    y = np.array([r[1] / r[2] for r in sweep.records])
    bm = b - b.mean()
    sbb = float(bm @ bm)
    if sbb == 0.0:
        raise InsufficientData("all Hall records share one field value")
    slope = float(bm @ y) / sbb
    if slope == 0.0:
        raise ZeroSlope("Hall slope is exactly zero; n_e undefined")
    r_hall = slope * sweep.d0 * 1e-9
    n_e = -1.0 / (r_hall * constants.e)
    return r_hall, n_e


def vdp_sheet_resistance(r_a: float, r_b: float) -> float:
    """Sheet resistance from the two van der Pauw resistances.

    Solves exp(-pi R_A/R_s) + exp(-pi R_B/R_s) = 1 by bisection to a
    relative tolerance of 1e-12.
    """
    if not (r_a > 0.0 and r_b > 0.0):
        raise NonPositiveInput(
            f"van der Pauw resistances must be > 0, got {r_a}, {r_b}"
        )

    def f(rs: float) -> float:
        return (math.exp(-math.pi * r_a / rs)
                + math.exp(-math.pi * r_b / rs) - 1.0)

    lo = 1e-6 * min(r_a, r_b)
    hi = math.pi * (r_a + r_b) / math.log(2.0)  # always above the root
    while (hi - lo) > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
