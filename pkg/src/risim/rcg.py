"""Riemannian conjugate gradient phase optimization on the unit-modulus manifold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sinr import (
    CascadeTerms,
    PowerAllocation,
    ScenarioKind,
    signal_and_interference,
    weighted_log_utility,
)


def euclid_grad(
    terms: CascadeTerms,
    theta: np.ndarray,
    kind: ScenarioKind,
    powers: PowerAllocation,
    noise_power_w: float,
    weights=None,
) -> np.ndarray:
    """Euclidean gradient of the weighted log-rate utility, as 2 * df/dtheta*.

    The utility is sum_k w_k * ln(1 + sinr_k) for the given scenario. Every
    quotient reuses the exact denominators of the SINR evaluation so the
    gradient and the objective always describe the same function.
    """
    kind = ScenarioKind(kind)
    p1 = np.asarray(powers.cluster1, dtype=float)
    sig, den = signal_and_interference(terms, theta, kind, powers, noise_power_w)
    s_tot = den + sig

    t = np.einsum("l,kil->ki", np.conj(theta), terms.a)
    q_all = np.einsum("ki,kil->kl", p1[None, :] * np.conj(t), terms.a)
    k_idx = np.arange(terms.num_users)
    a_diag = terms.a[k_idx, k_idx]
    diag_pt = p1 * np.conj(np.diagonal(t))
    q_int = q_all - diag_pt[:, None] * a_diag

    if kind.has_irr:
        p2 = np.asarray(powers.cluster2, dtype=float)
        ev = np.einsum("l,kjl->kj", np.conj(theta), terms.e)
        q_e = np.einsum("kj,kjl->kl", p2[None, :] * np.conj(ev), terms.e)
        q_all = q_all + q_e
        q_int = q_int + q_e
    if kind is ScenarioKind.EMI:
        mv = np.einsum("klm,m->kl", terms.b_mats, theta)
        q_all = q_all + mv
        q_int = q_int + mv
    elif kind is ScenarioKind.EMI_IRR:
        mv = np.einsum("klm,m->kl", terms.cd_mats, theta)
        q_all = q_all + mv
        q_int = q_int + mv

    w = np.ones(terms.num_users) if weights is None else np.asarray(weights, dtype=float)
    return 2.0 * (
        (w / s_tot)[:, None] * q_all - (w / den)[:, None] * q_int
    ).sum(axis=0)


def euclid_grad_eif(terms, theta, powers, noise_power_w, weights=None) -> np.ndarray:
    return euclid_grad(terms, theta, ScenarioKind.EIF, powers, noise_power_w, weights)


def euclid_grad_emi(terms, theta, powers, noise_power_w, weights=None) -> np.ndarray:
    return euclid_grad(terms, theta, ScenarioKind.EMI, powers, noise_power_w, weights)


def euclid_grad_emi_irr(terms, theta, powers, noise_power_w, weights=None) -> np.ndarray:
    return euclid_grad(terms, theta, ScenarioKind.EMI_IRR, powers, noise_power_w, weights)


def riemannian_grad(egrad: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Project a Euclidean gradient onto the tangent space of the circle manifold."""
    return egrad - (egrad * np.conj(theta)).real * theta


def vector_transport(direction: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Carry a previous direction into the tangent space at the current point."""
    return direction - (direction * np.conj(theta)).real * theta


def polak_ribiere(rgrad_now: np.ndarray, rgrad_prev: np.ndarray) -> float:
    """Conjugacy coefficient Re<g_now, g_now - g_prev> / ||g_prev||^2.

    Returns the raw value; callers clamp at zero for the restart rule. A zero
    previous gradient yields 0.
    """
    denom = np.vdot(rgrad_prev, rgrad_prev).real
    if denom == 0.0:
        return 0.0
    return float(np.vdot(rgrad_now, rgrad_now - rgrad_prev).real / denom)


def retract(theta: np.ndarray, step: float, direction: np.ndarray) -> np.ndarray:
    """Move along the direction and renormalize each entry to unit modulus.

    If any entry of theta + step * d lands at (numerical) zero, the step is
    halved until every entry has positive magnitude; with |theta_l| = 1 this
    always terminates.
    """
    moved = theta + step * direction
    mags = np.abs(moved)
    while mags.min() < 1e-12:
        step *= 0.5
        moved = theta + step * direction
        mags = np.abs(moved)
    return moved / mags


@dataclass(frozen=True)
class RcgOptions:
    epsilon: float = 1e-4  # stop when the objective change falls to this
    max_iters: int = 200
    armijo_step: float = 1.0
    armijo_contraction: float = 0.5
    armijo_slope: float = 1e-4  # sufficient-increase coefficient
    max_backtracks: int = 50


def armijo_search(theta, direction, objective, f0, slope, opts: RcgOptions):
    """Backtracking search for a step with sufficient objective increase.

    slope must be the positive tangent inner product Re<rgrad, d>. Returns
    (step, theta_new, f_new); step 0.0 signals stagnation (no acceptable step
    within opts.max_backtracks candidates) and leaves theta unchanged.
    """
    if slope <= 0.0:
        raise ValueError("armijo_search requires an ascent direction (slope > 0)")
    step = opts.armijo_step
    for _ in range(opts.max_backtracks):
        cand = retract(theta, step, direction)
        f_new = objective(cand)
        if f_new >= f0 + opts.armijo_slope * step * slope:
            return step, cand, f_new
        step *= opts.armijo_contraction
    return 0.0, theta, f0


@dataclass
class RcgResult:
    theta: np.ndarray
    objective: float
    trace: np.ndarray  # objective values, trace[0] at the initial point
    grad_norms: np.ndarray
    steps: np.ndarray
    iterations: int
    converged: bool  # tolerance met (as opposed to hitting the cap or stagnating)
    stagnated: bool
    max_unit_deviation: float
    max_tangency_residual: float


def rcg_optimize(objective, gradient, theta0: np.ndarray, opts: RcgOptions = RcgOptions()) -> RcgResult:
    """Maximize a smooth objective over unit-modulus phase vectors.

    objective(theta) -> float and gradient(theta) -> complex ndarray (the
    Euclidean gradient). Directions restart to the projected gradient whenever
    the conjugate combination stops being an ascent direction.
    """
    theta = np.asarray(theta0, dtype=complex)
    mags = np.abs(theta)
    if np.any(mags == 0.0):
        raise ValueError("theta0 entries must be nonzero")
    theta = theta / mags

    f_curr = float(objective(theta))
    trace = [f_curr]
    grad_norms: list[float] = []
    steps: list[float] = []
    d_prev = None
    g_prev = None
    converged = False
    stagnated = False
    max_dev = float(np.abs(np.abs(theta) - 1.0).max()) if theta.size else 0.0
    max_tan = 0.0

    for _ in range(opts.max_iters):
        egrad = gradient(theta)
        rg = riemannian_grad(egrad, theta)
        if d_prev is None:
            d = rg
        else:
            tau1 = max(polak_ribiere(rg, g_prev), 0.0)
            d = rg + tau1 * vector_transport(d_prev, theta)
            if np.vdot(rg, d).real <= 0.0:
                d = rg  # restart: conjugate direction lost ascent
        slope = float(np.vdot(rg, d).real)
        grad_norms.append(float(np.linalg.norm(rg)))
        if d.size:
            max_tan = max(max_tan, float(np.abs((d * np.conj(theta)).real).max()))
        if slope <= 0.0:  # stationary point
            steps.append(0.0)
            stagnated = True
            converged = True
            break
        step, theta_new, f_new = armijo_search(theta, d, objective, f_curr, slope, opts)
        steps.append(step)
        if step == 0.0:
            stagnated = True
            break
        delta = abs(f_new - f_curr)
        theta = theta_new
        f_curr = f_new
        trace.append(f_curr)
        d_prev = d
        g_prev = rg
        max_dev = max(max_dev, float(np.abs(np.abs(theta) - 1.0).max()))
        if delta <= opts.epsilon:
            converged = True
            break

    return RcgResult(
        theta=theta,
        objective=f_curr,
        trace=np.array(trace),
        grad_norms=np.array(grad_norms),
        steps=np.array(steps),
        iterations=len(steps),
        converged=converged,
        stagnated=stagnated,
        max_unit_deviation=max_dev,
        max_tangency_residual=max_tan,
    )


def phase_objective(terms, kind, powers, noise_power_w, weights=None):
    """Objective and gradient callables over theta for one scenario."""
    kind = ScenarioKind(kind)

    def objective(theta):
        return weighted_log_utility(terms, theta, kind, powers, noise_power_w, weights)

    def gradient(theta):
        return euclid_grad(terms, theta, kind, powers, noise_power_w, weights)

    return objective, gradient


def optimize_phases(
    terms: CascadeTerms,
    kind: ScenarioKind,
    powers: PowerAllocation,
    noise_power_w: float,
    weights=None,
    theta0: np.ndarray | None = None,
    opts: RcgOptions = RcgOptions(),
) -> RcgResult:
    """Run the conjugate-gradient phase optimizer for one scenario objective."""
    objective, gradient = phase_objective(terms, kind, powers, noise_power_w, weights)
    if theta0 is None:
        theta0 = np.ones(terms.num_elements, dtype=complex)
    return rcg_optimize(objective, gradient, theta0, opts)
