"""Fits of the resistance model and the comparison empirical models.

The resistance-model fit shares {nD0_vD, eta_vD23, r_s} across all film
thicknesses and gives each thickness its own resistance-scale constant,
mirroring how the calibration data were taken.  Minimization is damped
least squares (Levenberg-Marquardt) on transformed parameters: log space
for the positive quantities and logit for the bounded occupied fraction,
so box constraints never enter the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    InsufficientData,
    NonConvergence,
    NonPositiveInput,
    SingularJacobian,
)
from .model import ModelParams

_TINY = 1e-300


@dataclass(frozen=True)
class FilmPoint:
    """One measured film: thickness, fluence, and whatever was measured."""

    d0: float
    F: float
    r_sheet: float | None = None
    tc: float | None = None
    sigma_r: float | None = None
    sigma_tc: float | None = None

    def __post_init__(self):
        if self.F < 0.0:
            raise ValueError(f"fluence must be >= 0, got {self.F}")
        if self.d0 <= 0.0:
            raise ValueError(f"thickness must be > 0, got {self.d0}")
        if self.r_sheet is None and self.tc is None:
            raise ValueError("a FilmPoint needs r_sheet or tc (or both)")
        for name in ("sigma_r", "sigma_tc"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ValueError(f"{name} must be > 0 when present, got {v}")


FilmDataset = Sequence[FilmPoint]


@dataclass(frozen=True)
class FitOptions:
    weighting: str = "auto"        # auto | unit | inverse_variance
    log_residuals: bool = False    # fit log(R) instead of R
    ftol: float = 1e-10            # relative objective decrease
    gtol: float = 1e-8             # objective-gradient infinity norm
    max_iter: int = 500

    def __post_init__(self):
        if self.weighting not in ("auto", "unit", "inverse_variance"):
            raise ValueError(f"unknown weighting {self.weighting!r}")


@dataclass
class FitReport:
    params: ModelParams
    param_names: list[str]
    covariance: np.ndarray
    residual_rms: dict[int, float]   # keyed by thickness (nm)
    n_iterations: int
    converged: bool
    warnings: list[str] = field(default_factory=list)


# --- damped least-squares engine ----------------------------------------------

def _forward_jacobian(residual_fn, theta, r0):
    """Forward-difference Jacobian of the residual vector."""
    n = theta.size
    J = np.empty((r0.size, n))
    for j in range(n):
        h = math.sqrt(np.finfo(float).eps) * max(abs(theta[j]), 1.0)
        tp = theta.copy()
        tp[j] += h
        rj = residual_fn(tp)
        J[:, j] = (rj - r0) / h
    return J


def central_jacobian(residual_fn, theta):
    """Independent central-difference Jacobian (used by verification tests)."""
    n = theta.size
    r0 = residual_fn(theta)
    J = np.empty((r0.size, n))
    for j in range(n):
        h = np.finfo(float).eps ** (1.0 / 3.0) * max(abs(theta[j]), 1.0)
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        J[:, j] = (residual_fn(tp) - residual_fn(tm)) / (2.0 * h)
    return J


@dataclass
class _LmResult:
    theta: np.ndarray
    residuals: np.ndarray
    jacobian: np.ndarray
    cost_history: list[float]
    n_iterations: int
    converged: bool
    gradient_norm: float


def _cost(r: np.ndarray) -> float:
    if not np.all(np.isfinite(r)):
        return math.inf
    return float(r @ r)


def levenberg_marquardt(residual_fn: Callable[[np.ndarray], np.ndarray],
                        theta0: np.ndarray,
                        opts: FitOptions = FitOptions()) -> _LmResult:
    """Minimize ||r(theta)||^2 with multiplicative damping.

    Accepted iterations never increase the objective.  Convergence on
    relative objective decrease < ftol or objective-gradient infinity
    norm < gtol; NonConvergence once max_iter is exhausted.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    r = residual_fn(theta)
    cost = _cost(r)
    if not math.isfinite(cost):
        raise ValueError("residuals are not finite at the initial point")
    costs = [cost]
    lam = 1e-3
    converged = False
    J = _forward_jacobian(residual_fn, theta, r)
    grad_norm = float(np.max(np.abs(2.0 * (J.T @ r)))) if J.size else 0.0
    n_iter = 0

    for n_iter in range(1, opts.max_iter + 1):
        if not np.all(np.isfinite(J)):
            raise SingularJacobian("Jacobian contains non-finite entries")
        g = J.T @ r
        grad_norm = float(np.max(np.abs(2.0 * g))) if g.size else 0.0
        if grad_norm < opts.gtol or cost == 0.0:
            converged = True
            break
        JTJ = J.T @ J
        diag = np.diag(JTJ).copy()
        floor = max(diag.max(), _TINY) * 1e-14
        diag[diag < floor] = floor

        accepted = False
        while lam < 1e15:
            try:
                delta = np.linalg.solve(JTJ + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError as exc:
                raise SingularJacobian(
                    "damped normal equations are singular"
                ) from exc
            trial = theta + delta
            r_trial = residual_fn(trial)
            cost_trial = _cost(r_trial)
            if cost_trial < cost:
                rel_decrease = (cost - cost_trial) / max(cost, _TINY)
                theta, r, cost = trial, r_trial, cost_trial
                costs.append(cost)
                lam = max(lam * 0.25, 1e-12)
                accepted = True
                if rel_decrease < opts.ftol:
                    converged = True
                break
            lam *= 10.0
        if converged:
            break
        if not accepted:
            # No damping produces a downhill step: for a nonzero gradient an
            # arbitrarily small step would decrease the cost, so the point is
            # stationary to floating-point precision.
            converged = True
            break
        J = _forward_jacobian(residual_fn, theta, r)

    J = _forward_jacobian(residual_fn, theta, r)
    g = J.T @ r
    grad_norm = float(np.max(np.abs(2.0 * g))) if g.size else 0.0
    if not converged and grad_norm >= opts.gtol:
        raise NonConvergence(
            f"no convergence after {n_iter} iterations "
            f"(gradient inf-norm {grad_norm:.3e} >= {opts.gtol:g})",
            n_iterations=n_iter,
            gradient_norm=grad_norm,
        )
    return _LmResult(theta=theta, residuals=r, jacobian=J,
                     cost_history=costs, n_iterations=n_iter,
                     converged=True, gradient_norm=grad_norm)


# --- resistance-model fit -------------------------------------------------------

def _logit(x: float) -> float:
    return math.log(x / (1.0 - x))


def _expit(z: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def _thickness_key(d0: float) -> int:
    return int(round(d0))


def _resistance_points(data: FilmDataset):
    pts = [p for p in data if p.r_sheet is not None]
    if not pts:
        raise InsufficientData("no points carry a sheet-resistance value")
    by_d = {}
    for p in pts:
        by_d.setdefault(_thickness_key(p.d0), []).append(p)
    for d, group in sorted(by_d.items()):
        if len({p.F for p in group}) < 2:
            raise InsufficientData(
                f"thickness {d} nm has fewer than 2 distinct fluences"
            )
    return pts, by_d


def _weights(points, sigmas, mode: str, warnings_out: list[str]) -> np.ndarray:
    if mode == "unit":
        return np.ones(len(points))
    have = [s is not None for s in sigmas]
    if mode == "inverse_variance":
        if not all(have):
            raise InsufficientData(
                "inverse-variance weighting requires an uncertainty "
                "on every point"
            )
        return np.array([1.0 / s for s in sigmas])
    # auto
    if all(have):
        return np.array([1.0 / s for s in sigmas])
    if any(have):
        warnings_out.append(
            "mixed missing/present uncertainties; falling back to unit weights"
        )
    return np.ones(len(points))


def make_initial_params(data: FilmDataset, scaling_A: float = 1.44e4,
                        scaling_B: float = 0.957) -> ModelParams:
    """Order-of-magnitude starting point: a_d0 from the lowest-fluence
    resistance of each thickness; shared parameters at generic values."""
    pts, by_d = _resistance_points(data)
    a0 = {}
    for d, group in by_d.items():
        anchor = min(group, key=lambda p: p.F)
        a0[d] = anchor.r_sheet * d
    return ModelParams(a_over_vD=a0, nD0_vD=0.5, eta_vD23=1e-2, r_s=1e-3,
                       A=scaling_A, B=scaling_B)


def fit_rsheet_model(data: FilmDataset, init: ModelParams | None = None,
                     opts: FitOptions = FitOptions()) -> FitReport:
    """Weighted least squares of the resistance model over all thicknesses.

    Free parameters: one resistance scale per thickness plus the shared
    {nD0_vD, eta_vD23, r_s}.  Returns estimates, the Gauss-Newton
    1-sigma covariance over the original (untransformed) parameters, and
    per-thickness residual RMS.  Deterministic for fixed inputs/options.
    """
    pts, by_d = _resistance_points(data)
    if init is None:
        init = make_initial_params(data)
    thicknesses = sorted(by_d)
    warnings_out: list[str] = []

    d0s = np.array([p.d0 for p in pts])
    keys = np.array([_thickness_key(p.d0) for p in pts])
    F = np.array([p.F for p in pts])
    R = np.array([p.r_sheet for p in pts])
    w = _weights(pts, [p.sigma_r for p in pts], opts.weighting, warnings_out)
    if opts.log_residuals:
        if np.any(R <= 0.0):
            raise NonPositiveInput("log residuals require positive resistances")
        w = w * R  # delta method: sigma_logR = sigma_R / R

    col = {d: i for i, d in enumerate(thicknesses)}
    n_shared0 = len(thicknesses)
    names = [f"a_over_vD[{d}]" for d in thicknesses] + [
        "nD0_vD", "eta_vD23", "r_s"
    ]

    def unpack(theta):
        a = np.exp(theta[:n_shared0])
        x0 = float(_expit(theta[n_shared0]))
        eta = math.exp(theta[n_shared0 + 1])
        rs = math.exp(theta[n_shared0 + 2])
        return a, x0, eta, rs

    def residual_fn(theta):
        a, x0, eta, rs = unpack(theta)
        thick = d0s - rs * F
        if np.any(thick <= 0.0):
            return np.full(R.shape, np.inf)
        frac = 1.0 - (1.0 - x0) * np.exp(-eta * F)
        model = frac * a[[col[k] for k in keys]] / thick
        if opts.log_residuals:
            return (np.log(model) - np.log(R)) * w
        return (model - R) * w

    theta0 = np.concatenate([
        [math.log(init.a_over_vD.get(d, R[keys == d].max() * d))
         for d in thicknesses],
        [_logit(min(init.nD0_vD, 1.0 - 1e-12)),
         math.log(init.eta_vD23),
         math.log(max(init.r_s, 1e-12))],
    ])

    res = levenberg_marquardt(residual_fn, theta0, opts)
    a, x0, eta, rs = unpack(res.theta)
    fitted = ModelParams(
        a_over_vD={d: float(a[col[d]]) for d in thicknesses},
        nD0_vD=x0, eta_vD23=eta, r_s=rs, A=init.A, B=init.B,
        calibrated_fluence_max=float(F.max()),
    )

    # covariance over original parameters: chain rule from the transformed
    # Jacobian; theta_j = log(p_j) or logit(p_j)
    dtheta_dp = np.concatenate([
        1.0 / a, [1.0 / (x0 * (1.0 - x0)), 1.0 / eta, 1.0 / rs]
    ])
    J_orig = res.jacobian * dtheta_dp[np.newaxis, :]
    JTJ = J_orig.T @ J_orig
    n, k = R.size, res.theta.size
    if not np.all(np.isfinite(JTJ)) or _condition(JTJ) > 1e15:
        raise SingularJacobian(
            "normal equations are singular at the optimum; parameters are "
            "not identifiable from this design"
        )
    dof = n - k
    if dof > 0:
        sigma2 = float(res.residuals @ res.residuals) / dof
    else:
        sigma2 = 0.0
        warnings_out.append("zero degrees of freedom; covariance set to 0")
    covariance = sigma2 * np.linalg.inv(JTJ)

    rms = {}
    raw = res.residuals / w  # unweighted residuals
    for d in thicknesses:
        m = keys == d
        rms[d] = float(np.sqrt(np.mean(raw[m] ** 2)))
    return FitReport(params=fitted, param_names=names, covariance=covariance,
                     residual_rms=rms, n_iterations=res.n_iterations,
                     converged=res.converged, warnings=warnings_out)


def _condition(m: np.ndarray) -> float:
    try:
        c = np.linalg.cond(m)
    except np.linalg.LinAlgError:
        return math.inf
    return float(c) if np.isfinite(c) else math.inf


# --- universal scaling law -------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    A: float
    B: float
    covariance: np.ndarray  # 2x2 over (A, B)
    residual_rms: float     # in log(d0*Tc)


def fit_scaling_law(data: FilmDataset) -> ScalingFit:
    """One joint log-log line through (R_sheet, d0*Tc) for all thicknesses.

    Ordinary least squares of log(d0*Tc) on log(R_sheet);
    A = exp(intercept), B = -slope.
    """
    pts = [p for p in data if p.r_sheet is not None and p.tc is not None]
    if len(pts) < 3:
        raise InsufficientData(
            f"scaling-law fit needs >= 3 points with both R_sheet and Tc, "
            f"got {len(pts)}"
        )
    for p in pts:
        if p.r_sheet <= 0.0 or p.tc <= 0.0:
            raise NonPositiveInput(
                f"R_sheet and Tc must be > 0 (d0={p.d0}, F={p.F})"
            )
    x = np.log([p.r_sheet for p in pts])
    y = np.log([p.d0 * p.tc for p in pts])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    if sxx <= 0.0:
        raise InsufficientData(
            "all sheet resistances identical; the slope is not identifiable"
        )
    slope = float(xm @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    n = len(pts)
    sigma2 = float(resid @ resid) / (n - 2) if n > 2 else 0.0
    cov_ab = sigma2 * np.array([
        [1.0 / n + x.mean() ** 2 / sxx, -x.mean() / sxx],
        [-x.mean() / sxx, 1.0 / sxx],
    ])
    A = math.exp(intercept)
    # (A, B) = (exp(intercept), -slope); linearized transform
    T = np.array([[A, 0.0], [0.0, -1.0]])
    cov = T @ cov_ab @ T.T
    return ScalingFit(A=A, B=-slope, covariance=cov,
                      residual_rms=float(np.sqrt(np.mean(resid ** 2))))


# --- empirical log model for Tc(F) -----------------------------------------------

@dataclass(frozen=True)
class EmpiricalTcFit:
    a: float
    b: float
    c: float
    residual_rms: float

    def predict(self, F):
        return -self.a * np.log(np.asarray(F, dtype=float) + self.b) + self.c


def fit_empirical_tc(data: FilmDataset, d0: float,
                     opts: FitOptions = FitOptions()) -> EmpiricalTcFit:
    """Three-parameter comparator Tc(F) = -a*ln(F + b) + c for one thickness,
    with b constrained positive through a log transform."""
    key = _thickness_key(d0)
    pts = sorted(
        (p for p in data if _thickness_key(p.d0) == key and p.tc is not None),
        key=lambda p: p.F,
    )
    if len(pts) < 4:
        raise InsufficientData(
            f"empirical Tc fit needs >= 4 points at d0={d0} nm, got {len(pts)}"
        )
    F = np.array([p.F for p in pts])
    tc = np.array([p.tc for p in pts])

    b0 = 10.0
    span = math.log(F[-1] + b0) - math.log(F[0] + b0)
    a0 = (tc[0] - tc[-1]) / span if span > 0 else 0.0
    c0 = tc[0] + a0 * math.log(F[0] + b0)

    def residual_fn(theta):
        a, logb, c = theta
        return (-a * np.log(F + math.exp(logb)) + c) - tc

    res = levenberg_marquardt(
        residual_fn, np.array([a0, math.log(b0), c0]), opts
    )
    a, logb, c = res.theta
    return EmpiricalTcFit(a=float(a), b=float(math.exp(logb)), c=float(c),
                          residual_rms=float(
                              np.sqrt(np.mean(res.residuals ** 2))))


# --- generic exponential comparator ----------------------------------------------

@dataclass(frozen=True)
class ExponentialFit:
    amplitude: float
    rate: float
    residual_rms: float

    def predict(self, x):
        return self.amplitude * np.exp(self.rate * np.asarray(x, dtype=float))


def fit_exponential(x, y, opts: FitOptions = FitOptions()) -> ExponentialFit:
    """y = amplitude * exp(rate * x) by damped least squares."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise InsufficientData("exponential fit needs >= 3 points")
    amp0 = y[0] if y[0] != 0.0 else (np.mean(y) or 1.0)
    rate0 = 0.0
    if y[0] != 0.0 and y[-1] != 0.0 and y[0] * y[-1] > 0 and x[-1] != x[0]:
        rate0 = math.log(abs(y[-1] / y[0])) / (x[-1] - x[0])

    def residual_fn(theta):
        return theta[0] * np.exp(theta[1] * x) - y

    res = levenberg_marquardt(residual_fn, np.array([amp0, rate0]), opts)
    return ExponentialFit(amplitude=float(res.theta[0]),
                          rate=float(res.theta[1]),
                          residual_rms=float(
                              np.sqrt(np.mean(res.residuals ** 2))))


# --- model comparison -------------------------------------------------------------

@dataclass(frozen=True)
class CandidateModel:
    name: str
    n_params: int
    predict: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ComparisonRow:
    rank: int
    name: str
    n_params: int
    residual_rms: float


def compare_models(x, y, models: Sequence[CandidateModel]) -> list[ComparisonRow]:
    """Residual-RMS table for candidate models on identical data.

    Ranked by residual RMS; on exact ties the model with fewer parameters
    ranks first.  No selection decision is made here.
    """
    if len(models) < 2:
        raise InsufficientData("model comparison needs >= 2 candidates")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scored = []
    for m in models:
        resid = np.asarray(m.predict(x), dtype=float) - y
        scored.append((float(np.sqrt(np.mean(resid ** 2))), m))
    order = sorted(range(len(scored)),
                   key=lambda i: (scored[i][0], scored[i][1].n_params, i))
    return [
        ComparisonRow(rank=r + 1, name=scored[i][1].name,
                      n_params=scored[i][1].n_params,
                      residual_rms=scored[i][0])
        for r, i in enumerate(order)
    ]
