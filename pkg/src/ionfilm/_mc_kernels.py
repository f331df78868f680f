"""Hot kernels for the lattice irradiation simulation.

Random numbers come from a counter-addressed SplitMix64 stream
(Steele, Lea & Flood, OOPSLA 2014 finalizer): draw k of a stream with
base state b is mix64(b + k*GOLDEN).  Each ion owns a fixed block of
counters (column choice, one per layer, partial-layer visit + creation),
so any draw is addressable without sequential state.  Both backends --
the numba @njit per-ion loop and the vectorized NumPy fallback -- consume
the identical stream and therefore produce bit-identical occupancy grids.

Backend choice: numba when importable, overridden by IONFILM_BACKEND
(``numba`` or ``numpy``) in the environment.

Creation trials are skipped for already-occupied elements; with
counter-addressed draws this cannot perturb any other draw, so the final
grid equals the one from exhaustive evaluation.
"""

from __future__ import annotations

import os

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 2.0 ** -53

# domain separators for the init-occupancy and ion streams
_SALT_INIT = np.uint64(0x243F6A8885A308D3)
_SALT_IONS = np.uint64(0x452821E638D01377)

# counter slots per ion: 0 column, 1..nz layers, nz+1 visit, nz+2 creation
_EXTRA_SLOTS = 3


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def stream_bases(seed: int) -> tuple[np.uint64, np.uint64]:
    """Derive (init, ion) stream base states from a 64-bit seed."""
    # 1-element array: scalar uint64 overflow would raise RuntimeWarnings
    s = _mix64_np(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) + GOLDEN)
    bases = _mix64_np(np.concatenate([s ^ _SALT_INIT, s ^ _SALT_IONS]))
    return bases[0], bases[1]


def init_occupancy(seed: int, ncols: int, nlayers: int,
                   initial_fraction: float) -> np.ndarray:
    """Seeded Bernoulli(initial_fraction) occupancy grid, shape (ncols, nlayers)."""
    b_init, _ = stream_bases(seed)
    idx = np.arange(ncols * nlayers, dtype=np.uint64)
    vals = _mix64_np(b_init + idx * GOLDEN)
    u = (vals >> _S11).astype(np.float64) * _INV53
    return (u < initial_fraction).astype(np.uint8).reshape(ncols, nlayers)


# --- NumPy backend ------------------------------------------------------------

def irradiate_span_numpy(occupied: np.ndarray, b_ion: np.uint64,
                         ion_lo: int, ion_hi: int, ncols: int, nz: int,
                         eta: float, frac: float,
                         chunk: int = 1 << 20) -> None:
    """Apply ions [ion_lo, ion_hi) to the grid, vectorized in chunks.

    Within a chunk the skip test uses the occupancy at chunk start; extra
    trials against elements occupied mid-chunk only rewrite True, so the
    result matches the sequential loop exactly.
    """
    stride = np.uint64(nz + _EXTRA_SLOTS)
    ncols_u = np.uint64(ncols)
    for c0 in range(ion_lo, ion_hi, chunk):
        c1 = min(c0 + chunk, ion_hi)
        ctr0 = np.arange(c0, c1, dtype=np.uint64) * stride
        cols = (_mix64_np(b_ion + ctr0 * GOLDEN) % ncols_u).astype(np.intp)
        for z in range(nz):
            open_mask = occupied[cols, z] == 0
            if not open_mask.any():
                continue
            vals = _mix64_np(
                b_ion + (ctr0[open_mask] + np.uint64(1 + z)) * GOLDEN
            )
            hit = (vals >> _S11).astype(np.float64) * _INV53 < eta
            occupied[cols[open_mask][hit], z] = 1
        if frac > 0.0:
            visit_vals = _mix64_np(
                b_ion + (ctr0 + np.uint64(nz + 1)) * GOLDEN
            )
            visiting = (visit_vals >> _S11).astype(np.float64) * _INV53 < frac
            visiting &= occupied[cols, nz] == 0
            if visiting.any():
                vals = _mix64_np(
                    b_ion + (ctr0[visiting] + np.uint64(nz + 2)) * GOLDEN
                )
                hit = (vals >> _S11).astype(np.float64) * _INV53 < eta
                occupied[cols[visiting][hit], nz] = 1


# --- numba backend -------------------------------------------------------------

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @numba.njit(cache=True, inline="always")
    def _mix64(z):
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        return z ^ (z >> _S31)

    @numba.njit(cache=True)
    def _irradiate_span_numba(occupied, b_ion, ion_lo, ion_hi, ncols, nz,
                              eta, frac):
        stride = np.uint64(nz + 3)
        ncols_u = np.uint64(ncols)
        one = np.uint64(1)
        for i in range(ion_lo, ion_hi):
            ctr0 = np.uint64(i) * stride
            col = _mix64(b_ion + ctr0 * GOLDEN) % ncols_u
            for z in range(nz):
                if occupied[col, z] == 0:
                    v = _mix64(b_ion + (ctr0 + np.uint64(z) + one) * GOLDEN)
                    if np.float64(v >> _S11) * _INV53 < eta:
                        occupied[col, z] = 1
            if frac > 0.0 and occupied[col, nz] == 0:
                v = _mix64(b_ion + (ctr0 + np.uint64(nz) + one) * GOLDEN)
                if np.float64(v >> _S11) * _INV53 < frac:
                    v = _mix64(
                        b_ion + (ctr0 + np.uint64(nz) + np.uint64(2)) * GOLDEN
                    )
                    if np.float64(v >> _S11) * _INV53 < eta:
                        occupied[col, nz] = 1

    def irradiate_span_numba(occupied, b_ion, ion_lo, ion_hi, ncols, nz,
                             eta, frac, chunk=None):
        _irradiate_span_numba(occupied, b_ion, ion_lo, ion_hi, ncols, nz,
                              eta, frac)


def default_backend() -> str:
    env = os.environ.get("IONFILM_BACKEND", "").strip().lower()
    if env in ("numba", "numpy"):
        return env
    if env:
        raise ValueError(
            f"IONFILM_BACKEND={env!r} not recognized (use 'numba' or 'numpy')"
        )
    return "numba" if HAVE_NUMBA else "numpy"


def span_kernel(backend: str):
    if backend == "numpy":
        return irradiate_span_numpy
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return irradiate_span_numba
    raise ValueError(f"unknown backend {backend!r}")
