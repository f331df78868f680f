"""Per-detector performance metrics.

Covers detection efficiency from count rates, switching-current density
with sputter and oxide corrections, kinetic inductance / pulse decay time
from the sheet resistance, plateau classification of efficiency curves,
and the join of detector efficiencies with film critical temperatures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import InsufficientData, NonPositiveInput, ThicknessExhausted
from .model import FilmSpec, ModelParams, effective_thickness

BCS_GAP_COEFFICIENT = 1.764  # weak-coupling Delta(0) = 1.764 k_B Tc


@dataclass(frozen=True)
class MaterialParams:
    """Superconductor and readout constants for inductance/timing metrics."""

    tc: float                  # K
    gap0: float | None = None  # J; default BCS weak coupling
    r_load: float = 50.0       # Ohm

    def __post_init__(self):
        if not self.tc > 0.0:
            raise ValueError(f"tc must be > 0, got {self.tc}")
        if self.gap0 is not None and not self.gap0 > 0.0:
            raise ValueError(f"gap0 must be > 0, got {self.gap0}")
        if not self.r_load > 0.0:
            raise ValueError(f"r_load must be > 0, got {self.r_load}")

    @property
    def gap(self) -> float:
        if self.gap0 is not None:
            return self.gap0
        return BCS_GAP_COEFFICIENT * constants.k * self.tc


@dataclass(frozen=True)
class DetectorRecord:
    """Geometry, irradiation state, and measured counts of one device."""

    id: str
    d0: float                 # nm
    fluence: float            # ions/nm^2
    width: float              # nm, measured wire width
    fill_factor: float
    active_area: tuple[float, float] = (10.0, 10.0)  # um x um
    wire_length: float | None = None                 # um, overrides geometry
    i_sw: float = 0.0         # uA
    counts: tuple[tuple[float, float, float], ...] = ()  # (bias uA, CR Hz, DCR Hz)
    photon_rate: float = 1.0  # Hz

    def __post_init__(self):
        if not 0.0 < self.fill_factor <= 1.0:
            raise ValueError(f"fill_factor must be in (0, 1], got {self.fill_factor}")
        if not self.width > 0.0:
            raise ValueError(f"width must be > 0, got {self.width}")
        if not self.i_sw > 0.0:
            raise ValueError(f"i_sw must be > 0, got {self.i_sw}")
        if not self.photon_rate > 0.0:
            raise ValueError(f"photon_rate must be > 0, got {self.photon_rate}")
        if self.fluence < 0.0:
            raise ValueError(f"fluence must be >= 0, got {self.fluence}")
        for bias, cr, dcr in self.counts:
            if cr < 0.0 or dcr < 0.0:
                raise ValueError(
                    f"count rates must be >= 0 (bias {bias} uA: CR={cr}, DCR={dcr})"
                )

    def squares(self) -> float:
        """Number of squares l/w of the meander.

        Derived from the active area assuming pitch = width / fill_factor;
        an explicit wire_length overrides the derivation.
        """
        if self.wire_length is not None:
            return self.wire_length * 1e3 / self.width
        area_w_nm = self.active_area[0] * 1e3
        area_h_nm = self.active_area[1] * 1e3
        return self.fill_factor * area_w_nm * area_h_nm / self.width ** 2


@dataclass(frozen=True)
class AbsorptionRow:
    d0: float            # nm
    width: float         # nm, mean fabricated wire width
    n: float             # refractive index
    k: float             # extinction coefficient
    alpha_percent: float  # simulated absorbed fraction, percent

    def __post_init__(self):
        if not 0.0 < self.alpha_percent < 100.0:
            raise ValueError(
                f"alpha must be in (0, 100) percent, got {self.alpha_percent}"
            )


@dataclass(frozen=True)
class AbsorptionTable:
    rows: tuple[AbsorptionRow, ...]

    def alpha_fraction(self, d0: float) -> float | None:
        """Absorbed fraction (0..1) for the matching thickness, else None."""
        for row in self.rows:
            if abs(row.d0 - d0) < 1e-9:
                return row.alpha_percent / 100.0
        return None


def published_absorption() -> AbsorptionTable:
    """The simulated absorption table shipped with the package."""
    from .dataio import load_absorption_table
    from importlib.resources import as_file, files

    with as_file(files("ionfilm.data").joinpath("absorption.csv")) as path:
        return load_absorption_table(path)


@dataclass(frozen=True)
class Sde:
    """Detection efficiency with the raw (possibly negative) value retained."""

    value: float
    raw: float
    clamped: bool


def sde(cr: float, dcr: float, photon_rate: float) -> Sde:
    """System detection efficiency (CR - DCR) / PR.

    Noise can push the raw value slightly negative; the reported value is
    then clamped to zero with the raw value kept alongside.
    """
    if not photon_rate > 0.0:
        raise ValueError(f"photon_rate must be > 0, got {photon_rate}")
    raw = (cr - dcr) / photon_rate
    if raw < 0.0:
        return Sde(value=0.0, raw=raw, clamped=True)
    return Sde(value=raw, raw=raw, clamped=False)


def sde_curve(rec: DetectorRecord) -> list[tuple[float, float]]:
    """(bias uA, SDE) points from the record's count-rate rows."""
    return [(bias, sde(cr, dcr, rec.photon_rate).value)
            for bias, cr, dcr in rec.counts]


def best_sde(rec: DetectorRecord) -> float:
    """Maximum SDE over the measured bias points."""
    curve = sde_curve(rec)
    if not curve:
        raise InsufficientData(f"detector {rec.id} has no count-rate rows")
    return max(s for _, s in curve)


def format_sde_percent(value: float, rel_uncertainty: float = 0.02) -> str:
    """Report formatting, e.g. 0.553 -> '55.3 ± 1.1%' (2% relative error)."""
    return f"{100.0 * value:.1f} ± {100.0 * value * rel_uncertainty:.1f}%"


def switching_current_density(rec: DetectorRecord, p: ModelParams,
                              film: FilmSpec) -> float:
    """Switching current density (A/m^2) through the conducting cross
    section: measured width times the sputter-reduced, oxide-corrected
    thickness."""
    d_eff = effective_thickness(rec.fluence, film, p)
    conducting = d_eff - film.oxide
    if conducting <= 0.0:
        raise ThicknessExhausted(
            f"effective thickness {d_eff:.3g} nm does not exceed the "
            f"{film.oxide:g} nm oxide; no conducting cross section"
        )
    return rec.i_sw * 1e-6 / (rec.width * 1e-9 * conducting * 1e-9)


def kinetic_inductance(rec: DetectorRecord, r_sheet: float,
                       mat: MaterialParams) -> float:
    """Kinetic inductance (H): hbar * R_sheet * (l/w) / (pi * Delta(0))."""
    if not r_sheet > 0.0:
        raise NonPositiveInput(f"r_sheet must be > 0, got {r_sheet}")
    return constants.hbar * r_sheet * rec.squares() / (math.pi * mat.gap)


def kinetic_inductance_via_penetration_depth(rec: DetectorRecord,
                                             r_sheet: float, d: float,
                                             mat: MaterialParams) -> float:
    """Equivalent route through the dirty-limit effective penetration depth:
    lambda_eff^2 = hbar rho / (pi mu0 Delta(0)) with rho = R_sheet * d, then
    L_k = mu0 lambda_eff^2 / d * (l/w).  Algebraically identical to
    ``kinetic_inductance``; kept as an independent consistency route."""
    if not (r_sheet > 0.0 and d > 0.0):
        raise NonPositiveInput("r_sheet and d must be > 0")
    rho = r_sheet * d
    lambda_eff_sq = constants.hbar * rho / (math.pi * constants.mu_0 * mat.gap)
    return constants.mu_0 * lambda_eff_sq / d * rec.squares()


def decay_time(l_k: float, mat: MaterialParams) -> float:
    """Pulse decay time constant (s): L_k / R_load."""
    if not l_k > 0.0:
        raise NonPositiveInput(f"L_k must be > 0, got {l_k}")
    return l_k / mat.r_load


def classify_saturation(curve, window: float = 0.10,
                        threshold: float = 0.02) -> str:
    """'saturating' when the relative SDE rise over the top bias window is
    below the plateau threshold, else 'non-saturating'.

    curve: (bias, SDE) pairs with strictly increasing bias, >= 5 points.
    """
    pts = [(float(b), float(s)) for b, s in curve]
    if len(pts) < 5:
        raise InsufficientData(
            f"saturation classification needs >= 5 points, got {len(pts)}"
        )
    biases = [b for b, _ in pts]
    if any(b2 <= b1 for b1, b2 in zip(biases, biases[1:])):
        raise ValueError("bias values must be strictly increasing")
    b_lo, b_hi = biases[0], biases[-1]
    cut = b_hi - window * (b_hi - b_lo)
    in_window = [s for b, s in pts if b >= cut]
    if len(in_window) < 2:
        in_window = [pts[-2][1], pts[-1][1]]
    rise = in_window[-1] - in_window[0]
    rel = rise / max(abs(in_window[-1]), 1e-300)
    return "saturating" if rel < threshold else "non-saturating"


@dataclass(frozen=True)
class TcSdeRow:
    detector_id: str
    d0: float
    fluence: float
    tc: float
    sde: float


def tc_sde_join(detectors, film_tcs) -> tuple[list[TcSdeRow], list[str]]:
    """Join detector efficiencies with cloverleaf Tc values by (d0, fluence).

    film_tcs: iterable of (d0 nm, fluence ions/nm^2, tc K).
    Returns the joined rows plus warnings for unmatched detectors.
    """
    table = list(film_tcs)
    rows: list[TcSdeRow] = []
    warnings: list[str] = []
    for rec in detectors:
        match = None
        for d0, fluence, tc in table:
            if (abs(d0 - rec.d0) < 1e-9
                    and math.isclose(fluence, rec.fluence,
                                     rel_tol=1e-9, abs_tol=1e-12)):
                match = tc
                break
        if match is None:
            warnings.append(
                f"detector {rec.id}: no film Tc at d0={rec.d0:g} nm, "
                f"F={rec.fluence:g} ions/nm^2"
            )
            continue
        rows.append(TcSdeRow(detector_id=rec.id, d0=rec.d0,
                             fluence=rec.fluence, tc=match,
                             sde=best_sde(rec)))
    return rows, warnings
