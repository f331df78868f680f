"""Stochastic ion-by-ion oracle for the defect-accumulation model.

The film is a lattice of defect-cluster-sized volume elements: ``nx*ny``
columns of ``nz`` layers.  Each ion strikes a uniformly chosen column and,
in every element of that column not already occupied, creates a cluster
with probability ``eta``.  The mean occupied fraction of this process is
the brute-force check on the closed-form saturation law in
:mod:`ionfilm.model`.

A fractional layer count (``extra_layer_prob``) models films whose
thickness is not an integer number of element sides: ions visit one extra
boundary layer with that probability, preserving the expected number of
creation trials per ion.  The boundary layer contributes to the occupied
fraction with the same fractional weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _mc_kernels as _k
from .model import ModelParams, defect_fraction


@dataclass(frozen=True)
class LatticeFilm:
    """Discretized film and irradiation parameters for one simulation."""

    nx: int
    ny: int
    nz: int
    eta: float
    seed: int
    initial_fraction: float = 0.0
    extra_layer_prob: float = 0.0

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("nx, ny, nz must all be >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must be in [0, 1], got {self.eta}")
        if not 0.0 <= self.initial_fraction <= 1.0:
            raise ValueError("initial_fraction must be in [0, 1]")
        if not 0.0 <= self.extra_layer_prob < 1.0:
            raise ValueError("extra_layer_prob must be in [0, 1)")

    @property
    def n_columns(self) -> int:
        return self.nx * self.ny

    @property
    def n_layers(self) -> int:
        return self.nz + (1 if self.extra_layer_prob > 0.0 else 0)


@dataclass(frozen=True)
class Trajectory:
    """Occupied fraction recorded at cumulative ion counts."""

    ion_counts: np.ndarray        # int64, non-decreasing
    occupied_fraction: np.ndarray  # float64, same length


def available_backends() -> list[str]:
    return ["numba", "numpy"] if _k.HAVE_NUMBA else ["numpy"]


def _fraction(occupied: np.ndarray, film: LatticeFilm) -> float:
    # boundary layer weighted by its visit probability (partial volume)
    frac = film.extra_layer_prob
    main = int(occupied[:, : film.nz].sum())
    if frac > 0.0:
        extra = int(occupied[:, film.nz].sum())
        return (main + frac * extra) / (film.n_columns * (film.nz + frac))
    return main / (film.n_columns * film.nz)


def irradiate(film: LatticeFilm, fluence_steps, backend: str | None = None,
              return_state: bool = False):
    """Run the ion-by-ion simulation, recording at each cumulative ion count.

    Args:
        film: lattice specification, including the PRNG seed.
        fluence_steps: non-decreasing cumulative ion counts at which the
            occupied fraction is recorded.
        backend: "numba" or "numpy"; default from IONFILM_BACKEND / numba
            availability.
        return_state: also return the final occupancy grid.

    The trajectory is a pure function of (film, fluence_steps): identical
    seeds give bit-identical results on either backend.
    """
    steps = np.asarray(list(fluence_steps), dtype=np.int64)
    if steps.size == 0:
        raise ValueError("fluence_steps must contain at least one ion count")
    if (steps < 0).any() or (np.diff(steps) < 0).any():
        raise ValueError("fluence_steps must be non-decreasing and >= 0")

    kernel = _k.span_kernel(backend or _k.default_backend())
    occupied = _k.init_occupancy(
        film.seed, film.n_columns, film.n_layers, film.initial_fraction
    )
    _, b_ion = _k.stream_bases(film.seed)

    fractions = np.empty(steps.size, dtype=np.float64)
    done = 0
    for j, n in enumerate(steps):
        if n > done:
            kernel(occupied, b_ion, done, int(n), film.n_columns, film.nz,
                   film.eta, film.extra_layer_prob)
            done = int(n)
        fractions[j] = _fraction(occupied, film)
    traj = Trajectory(ion_counts=steps, occupied_fraction=fractions)
    return (traj, occupied) if return_state else traj


def mean_trajectory(film: LatticeFilm, seeds, fluence_steps,
                    backend: str | None = None):
    """Mean and standard error of the occupied fraction over several seeds.

    Each seed replaces ``film.seed``; runs are independent simulations.
    Returns (mean, stderr) arrays over the fluence grid.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    from dataclasses import replace

    runs = np.stack([
        irradiate(replace(film, seed=int(s)), fluence_steps,
                  backend=backend).occupied_fraction
        for s in seeds
    ])
    mean = runs.mean(axis=0)
    if len(seeds) > 1:
        stderr = runs.std(axis=0, ddof=1) / np.sqrt(len(seeds))
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr


def ion_counts_for_fluences(fluences, p: ModelParams, film: LatticeFilm) -> np.ndarray:
    """Cumulative ion counts reproducing the model exposure eta_vD23 * F.

    The lattice accumulates exposure eta * (ions per column); matching
    eta_vD23 * F fixes ions = F * eta_vD23 / eta * nx * ny.
    """
    if film.eta <= 0.0:
        raise ValueError("film.eta must be > 0 to map physical fluences")
    f = np.asarray(fluences, dtype=np.float64)
    return np.rint(f * (p.eta_vD23 / film.eta) * film.n_columns).astype(np.int64)


def ode_residual_check(p: ModelParams, fluence_grid) -> float:
    """Integrate dx/dF = eta_vD23*(1 - x) numerically and compare with the
    closed form; returns the max absolute deviation over the grid.

    Uses an adaptive Runge-Kutta 4(5) integrator at tolerance 1e-12, an
    independent route to the same solution as ``defect_fraction``.
    """
    grid = np.asarray(sorted(set(float(f) for f in fluence_grid)))
    if grid.size == 0 or grid[0] < 0.0:
        raise ValueError("fluence grid must be non-empty and non-negative")

    def rhs(_f, x):
        return p.eta_vD23 * (1.0 - x)

    t_eval = grid if grid[0] == 0.0 else np.concatenate([[0.0], grid])
    sol = solve_ivp(rhs, (0.0, float(t_eval[-1]) if t_eval[-1] > 0 else 1.0),
                    [p.nD0_vD], method="RK45", t_eval=t_eval,
                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    integrated = dict(zip(sol.t, sol.y[0]))
    closed = np.array([defect_fraction(f, p) for f in grid])
    numeric = np.array([integrated[f] for f in grid])
    return float(np.max(np.abs(numeric - closed)))
