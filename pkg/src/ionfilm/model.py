"""Closed-form physics of helium-ion irradiated superconducting films.

Everything here is a pure function of the ion fluence F (ions/nm^2).
The defect population follows a first-order saturation law,

    x(F) = 1 - (1 - x0) * exp(-eta23 * F),

where x = n_D * v_D is the occupied fraction of defect-cluster-sized volume
elements, x0 its as-deposited value, and eta23 = eta * v_D^(2/3) the
defect-creation cross section in nm^2.  Sputtering thins the film linearly
at rate r_s, so the normal-state sheet resistance is

    R_sheet(F) = x(F) * a_d0 / (d0 - r_s * F)            [Ohm]

with one resistance-scale constant a_d0 (= a/v_D) per nominal thickness.
The critical temperature follows from the universal thin-film scaling law
d0 * Tc = A * R_sheet^(-B), evaluated with the *nominal* thickness d0
(using the sputter-corrected thickness destroys the scaling collapse).
"""

from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass, replace

from .errors import (
    ExtrapolationWarning,
    NonPositiveResistance,
    ThicknessExhausted,
    UnknownThickness,
)

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

# Default calibrated fluence ceiling (ions/nm^2); predictions beyond
# 1.25x this value carry an ExtrapolationWarning.
CALIBRATED_FLUENCE_MAX = 2600.0
EXTRAPOLATION_FACTOR = 1.25


@dataclass(frozen=True)
class FilmSpec:
    """Nominal film geometry: total thickness and native oxide, both in nm."""

    d0: float
    oxide: float = 1.3

    def __post_init__(self):
        if not (self.d0 > self.oxide >= 0.0):
            raise ValueError(
                f"require d0 > oxide >= 0, got d0={self.d0}, oxide={self.oxide}"
            )

    @property
    def conducting_thickness(self) -> float:
        """Oxide-corrected thickness of the un-irradiated film (nm)."""
        return self.d0 - self.oxide


@dataclass(frozen=True)
class ModelParams:
    """Fitted quantities of the resistance model plus the scaling-law constants.

    Attributes:
        a_over_vD: resistance-scale constant per nominal thickness, Ohm,
            keyed by integer nm.
        nD0_vD: occupied volume fraction of the as-deposited film, in (0, 1].
        eta_vD23: defect-creation cross section, nm^2.
        r_s: sputter rate, nm per (ion/nm^2).
        A, B: universal scaling-law constants for d0*Tc = A * R^(-B)
            with d0 in nm, Tc in K, R in Ohm.
        calibrated_fluence_max: largest fluence the parameters were fitted
            against; forward evaluation beyond 1.25x this warns.
    """

    a_over_vD: dict[int, float]
    nD0_vD: float
    eta_vD23: float
    r_s: float
    A: float
    B: float
    calibrated_fluence_max: float = CALIBRATED_FLUENCE_MAX

    def __post_init__(self):
        if not self.a_over_vD:
            raise ValueError("a_over_vD must contain at least one thickness")
        for d, a in self.a_over_vD.items():
            if not a > 0.0:
                raise ValueError(f"a_over_vD[{d}] must be > 0, got {a}")
        if not 0.0 < self.nD0_vD <= 1.0:
            raise ValueError(f"nD0_vD must be in (0, 1], got {self.nD0_vD}")
        if not self.eta_vD23 > 0.0:
            raise ValueError(f"eta_vD23 must be > 0, got {self.eta_vD23}")
        if self.r_s < 0.0:
            raise ValueError(f"r_s must be >= 0, got {self.r_s}")
        if not (self.A > 0.0 and self.B > 0.0):
            raise ValueError(f"A and B must be > 0, got A={self.A}, B={self.B}")

    def thicknesses(self) -> list[int]:
        return sorted(self.a_over_vD)

    def resistance_scale(self, d0: float, interpolate: bool = False) -> float:
        """Resistance-scale constant for thickness d0 (nm).

        Calibrated thicknesses are matched exactly.  With interpolate=True,
        intermediate thicknesses use linear interpolation of log(a) versus d0
        between the two bracketing calibrated values; extrapolating outside
        the calibrated range is never allowed.
        """
        key = int(round(d0))
        if abs(d0 - key) < 1e-9 and key in self.a_over_vD:
            return self.a_over_vD[key]
        known = tuple(sorted(self.a_over_vD))
        if not interpolate:
            raise UnknownThickness(d0, known)
        if not known[0] <= d0 <= known[-1]:
            raise UnknownThickness(d0, known)
        hi = next(k for k in known if k >= d0)
        lo = max(k for k in known if k <= d0)
        if hi == lo:
            return self.a_over_vD[lo]
        t = (d0 - lo) / (hi - lo)
        return math.exp(
            (1.0 - t) * math.log(self.a_over_vD[lo])
            + t * math.log(self.a_over_vD[hi])
        )

    def with_resistance_scale(self, d0: int, value: float) -> "ModelParams":
        scales = dict(self.a_over_vD)
        scales[int(d0)] = value
        return replace(self, a_over_vD=scales)


def _check_fluence(F: float, p: ModelParams) -> None:
    if F < 0.0:
        raise ValueError(f"fluence must be >= 0, got {F}")
    if F > EXTRAPOLATION_FACTOR * p.calibrated_fluence_max:
        warnings.warn(
            f"fluence {F:g} ions/nm^2 exceeds {EXTRAPOLATION_FACTOR:g}x the "
            f"calibrated range ({p.calibrated_fluence_max:g} ions/nm^2)",
            ExtrapolationWarning,
            stacklevel=3,
        )


def defect_fraction(F: float, p: ModelParams) -> float:
    """Occupied volume fraction n_D*v_D after fluence F (ions/nm^2).

    Strictly increasing in F, bounded in (0, 1]; solves
    dx/dF = eta_vD23 * (1 - x) from x(0) = nD0_vD.
    """
    _check_fluence(F, p)
    return 1.0 - (1.0 - p.nD0_vD) * math.exp(-p.eta_vD23 * F)


def sputter_limit(film: FilmSpec, p: ModelParams) -> float:
    """Fluence at which sputtering consumes the nominal thickness."""
    if p.r_s == 0.0:
        return math.inf
    return film.d0 / p.r_s


def effective_thickness(F: float, film: FilmSpec, p: ModelParams) -> float:
    """Sputter-reduced film thickness d0 - r_s*F (nm).

    Raises ThicknessExhausted at or beyond the model singularity F = d0/r_s.
    """
    _check_fluence(F, p)
    d = film.d0 - p.r_s * F
    if d <= 0.0:
        raise ThicknessExhausted(
            f"fluence {F:g} ions/nm^2 >= d0/r_s = {sputter_limit(film, p):g}; "
            "film thickness exhausted"
        )
    return d


def sheet_resistance(F: float, film: FilmSpec, p: ModelParams,
                     interpolate: bool = False) -> float:
    """Normal-state sheet resistance (Ohm) at fluence F.

    Strictly increasing on [0, d0/r_s).
    """
    a = p.resistance_scale(film.d0, interpolate=interpolate)
    return defect_fraction(F, p) * a / effective_thickness(F, film, p)


def tc_from_scaling(r_sheet: float, film: FilmSpec, p: ModelParams) -> float:
    """Critical temperature (K) from the universal scaling law.

    Uses the nominal thickness d0; the scaling collapse requires it.
    """
    if not r_sheet > 0.0:
        raise NonPositiveResistance(
            f"sheet resistance must be > 0, got {r_sheet}"
        )
    return p.A * r_sheet ** (-p.B) / film.d0


def tc_vs_fluence(F: float, film: FilmSpec, p: ModelParams,
                  interpolate: bool = False) -> float:
    """Critical temperature (K) at fluence F: scaling law applied to
    the modeled sheet resistance.  Strictly decreasing on [0, d0/r_s)."""
    return tc_from_scaling(
        sheet_resistance(F, film, p, interpolate=interpolate), film, p
    )


# --- TOML (de)serialization ---------------------------------------------------

def params_to_toml(p: ModelParams) -> str:
    """Render ModelParams as a TOML document with [resistance] and [scaling]."""
    lines = ["[resistance]"]
    lines.append("nD0_vD = " + repr(p.nD0_vD))
    lines.append("eta_vD23 = " + repr(p.eta_vD23))
    lines.append("r_s = " + repr(p.r_s))
    lines.append("calibrated_fluence_max = " + repr(p.calibrated_fluence_max))
    lines.append("")
    lines.append("[resistance.a_over_vD]")
    for d in sorted(p.a_over_vD):
        lines.append(f'"{d}" = ' + repr(p.a_over_vD[d]))
    lines.append("")
    lines.append("[scaling]")
    lines.append("A = " + repr(p.A))
    lines.append("B = " + repr(p.B))
    lines.append("")
    return "\n".join(lines)


def params_from_toml(text: str) -> ModelParams:
    doc = _toml.loads(text)
    try:
        res = doc["resistance"]
        scal = doc["scaling"]
        a = {int(k): float(v) for k, v in res["a_over_vD"].items()}
        return ModelParams(
            a_over_vD=a,
            nD0_vD=float(res["nD0_vD"]),
            eta_vD23=float(res["eta_vD23"]),
            r_s=float(res["r_s"]),
            A=float(scal["A"]),
            B=float(scal["B"]),
            calibrated_fluence_max=float(
                res.get("calibrated_fluence_max", CALIBRATED_FLUENCE_MAX)
            ),
        )
    except KeyError as exc:
        raise ValueError(f"model-params TOML is missing field {exc}") from exc


def load_params(path) -> ModelParams:
    with open(path, "rb") as fh:
        return params_from_toml(fh.read().decode("utf-8"))


def save_params(p: ModelParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(params_to_toml(p))


def published_params() -> ModelParams:
    """The calibration shipped with the package (data/table2.toml)."""
    from importlib.resources import files

    text = files("ionfilm.data").joinpath("table2.toml").read_text("utf-8")
    return params_from_toml(text)
