"""Damped Gauss-Newton least squares.

One engine drives every model fit in the toolkit.  The damping schedule
is the classic one: start at 1e-3, multiply by 10 when a trial step fails
to reduce the sum of squared residuals, divide by 10 when it succeeds.
Convergence is declared when an accepted step changes the SSR by less
than 1e-10 relative; the iteration cap is 200.  Running out of
iterations, or damping inflating past all hope, is reported through the
``converged`` flag — the engine never raises for a hard fit.

``fit_model`` adds the parameter plumbing used by the model layers:
freezing arbitrary parameters at fixed values and fitting selected
positive parameters in log-space (with the delta-method back-transform
of their uncertainties).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

MAX_ITERATIONS = 200
SSR_RELATIVE_TOL = 1e-10
DAMPING_START = 1e-3
DAMPING_FACTOR = 10.0
DAMPING_CEILING = 1e14


@dataclass
class LeastSquaresResult:
    """Free-parameter solution of one damped Gauss-Newton run."""

    params: np.ndarray
    covariance: np.ndarray
    ssr: float
    converged: bool
    iterations: int

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.covariance), 0.0))


def damped_gauss_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0: Sequence[float],
    max_iterations: int = MAX_ITERATIONS,
    ssr_rtol: float = SSR_RELATIVE_TOL,
) -> LeastSquaresResult:
    """Minimize ||residual(p)||^2 from p0 with Marquardt-scaled damping.

    ``residual`` maps the free-parameter vector to the residual vector,
    ``jacobian`` to its (n, p) derivative matrix.
    """
    p = np.array(p0, dtype=float)
    r = residual(p)
    ssr = float(r @ r)
    if not np.isfinite(ssr):
        return LeastSquaresResult(
            params=p,
            covariance=np.full((p.size, p.size), np.nan),
            ssr=ssr,
            converged=False,
            iterations=0,
        )
    lam = DAMPING_START
    converged = ssr == 0.0
    iterations = 0

    while not converged and iterations < max_iterations:
        iterations += 1
        jac = jacobian(p)
        grad = jac.T @ r
        normal = jac.T @ jac
        scale = np.diag(normal).copy()
        scale[scale <= 0.0] = 1.0

        # inflate damping until a step actually descends
        step = None
        ssr_new = math.inf
        while lam <= DAMPING_CEILING:
            try:
                trial = np.linalg.solve(normal + lam * np.diag(scale), -grad)
            except np.linalg.LinAlgError:
                trial = None
            if trial is not None and np.all(np.isfinite(trial)):
                r_trial = residual(p + trial)
                # wild trial steps can overflow the SSR; the non-finite
                # value is rejected just below
                with np.errstate(over="ignore"):
                    ssr_trial = float(r_trial @ r_trial)
                if np.isfinite(ssr_trial) and ssr_trial <= ssr:
                    step, r, ssr_new = trial, r_trial, ssr_trial
                    break
            lam *= DAMPING_FACTOR
        if step is None:
            break  # no descent direction left at any damping

        p = p + step
        lam = max(lam / DAMPING_FACTOR, 1e-15)
        drop = ssr - ssr_new
        if ssr == 0.0 or drop <= ssr_rtol * ssr:
            converged = True
        ssr = ssr_new

    covariance = _covariance(residual, jacobian, p, ssr)
    return LeastSquaresResult(
        params=p, covariance=covariance, ssr=ssr, converged=converged, iterations=iterations
    )


def _covariance(residual, jacobian, p: np.ndarray, ssr: float) -> np.ndarray:
    """Linearized covariance SSR/(n-p) * (J^T J)^-1 at the solution.

    Built from the SVD of J.  A direction whose singular value is at
    rounding level carries no curvature: any parameter with weight on it
    is unconstrained by the data and gets an infinite variance.  (A
    plain pseudo-inverse would zero those directions instead, reporting
    a tiny uncertainty for a parameter the fit cannot see at all.)
    """
    n = residual(p).size
    k = p.size
    if n <= k:
        return np.full((k, k), np.nan)
    jac = jacobian(p)
    if not np.all(np.isfinite(jac)):
        return np.full((k, k), np.nan)
    try:
        _, singular, rows = np.linalg.svd(jac, full_matrices=False)
    except np.linalg.LinAlgError:
        return np.full((k, k), np.nan)
    cutoff = max(n, k) * np.finfo(float).eps * (float(singular[0]) if singular.size else 0.0)
    scale = ssr / (n - k)
    live = singular > cutoff
    inv = np.zeros_like(singular)
    inv[live] = 1.0 / singular[live]
    weighted = rows.T * inv
    # near-dead directions square to huge variances; overflow to inf is
    # the honest answer, not an error
    with np.errstate(over="ignore"):
        cov = scale * (weighted @ weighted.T)
    dead_weight = np.abs(rows[~live]).max(axis=0, initial=0.0)
    cov[np.diag_indices(k)] = np.where(
        dead_weight > math.sqrt(np.finfo(float).eps), np.inf, np.diag(cov)
    )
    return cov


@dataclass
class ModelFit:
    """Full-parameter view of a fit, frozen entries included.

    ``uncertainties`` are 1-sigma estimates from the linearized
    covariance; frozen parameters report exactly 0.
    """

    names: tuple[str, ...]
    params: np.ndarray
    uncertainties: np.ndarray
    ssr: float
    converged: bool
    iterations: int
    frozen: frozenset[str] = field(default_factory=frozenset)

    def value(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def uncertainty(self, name: str) -> float:
        return float(self.uncertainties[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.names, self.params)}

    def uncertainties_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.names, self.uncertainties)}


def fit_model(
    predict: Callable[[np.ndarray, np.ndarray], np.ndarray],
    gradients: Callable[[np.ndarray, np.ndarray], np.ndarray],
    times: np.ndarray,
    signal: np.ndarray,
    names: Sequence[str],
    initial: Mapping[str, float],
    log_names: Sequence[str] = (),
    frozen: Mapping[str, float] | None = None,
    max_iterations: int = MAX_ITERATIONS,
    ssr_rtol: float = SSR_RELATIVE_TOL,
) -> ModelFit:
    """Fit a parametric curve to (times, signal).

    ``predict(params, t)`` evaluates the model for the full parameter
    vector (ordered per ``names``); ``gradients(params, t)`` returns the
    (len(t), len(names)) matrix of model derivatives.  Parameters listed
    in ``log_names`` are optimized as their logarithm, which keeps them
    positive; ``frozen`` maps parameter names to values excluded from
    optimization and held bit-exact.
    """
    names = tuple(names)
    frozen = dict(frozen or {})
    for name in frozen:
        if name not in names:
            raise ValueError(f"unknown parameter {name!r}")
    log_set = {name for name in log_names if name not in frozen}
    free_idx = [i for i, name in enumerate(names) if name not in frozen]
    if not free_idx:
        raise ValueError("all parameters are frozen; nothing to fit")

    full0 = np.array([float(initial[name]) for name in names])
    for i, name in enumerate(names):
        if name in frozen:
            full0[i] = float(frozen[name])
        elif name in log_set and not full0[i] > 0.0:
            raise ValueError(f"log-space parameter {name!r} needs a positive start value")

    def unpack(free: np.ndarray) -> np.ndarray:
        full = full0.copy()
        # exp may overflow at wild trial points; inf makes the engine
        # reject the step, so it must not raise
        with np.errstate(over="ignore"):
            for j, i in enumerate(free_idx):
                full[i] = np.exp(free[j]) if names[i] in log_set else free[j]
        return full

    def pack() -> np.ndarray:
        return np.array(
            [math.log(full0[i]) if names[i] in log_set else full0[i] for i in free_idx]
        )

    def residual(free: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return predict(unpack(free), times) - signal

    def jacobian(free: np.ndarray) -> np.ndarray:
        full = unpack(free)
        with np.errstate(all="ignore"):
            grad_full = gradients(full, times)
            cols = []
            for i in free_idx:
                col = grad_full[:, i]
                if names[i] in log_set:
                    col = col * full[i]  # chain rule of u = log(p)
                cols.append(col)
        return np.column_stack(cols)

    result = damped_gauss_newton(
        residual, jacobian, pack(), max_iterations=max_iterations, ssr_rtol=ssr_rtol
    )

    full = unpack(result.params)
    sigmas = np.zeros(len(names))
    free_sigma = result.uncertainties
    for j, i in enumerate(free_idx):
        if names[i] in log_set:
            # delta method: sigma_p = p * sigma_log_p; an unconstrained
            # log direction stays unconstrained after the transform
            if math.isinf(free_sigma[j]):
                sigmas[i] = math.inf
            else:
                sigmas[i] = full[i] * free_sigma[j]
        else:
            sigmas[i] = free_sigma[j]

    return ModelFit(
        names=names,
        params=full,
        uncertainties=sigmas,
        ssr=result.ssr,
        converged=result.converged,
        iterations=result.iterations,
        frozen=frozenset(frozen),
    )
