"""Cascaded channel terms and per-user SINR for the four interference scenarios."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class ScenarioKind(str, Enum):
    """Which impairments the downlink SINR accounts for."""

    EIF = "eif"  # interference-free baseline: intra-cluster leakage and noise only
    EMI = "emi"  # adds electromagnetic interference captured by the serving RIS
    IRR = "irr"  # adds signal reflections arriving via the neighbor RIS
    EMI_IRR = "emi_irr"  # both, including EMI re-reflected by the neighbor RIS

    @property
    def has_irr(self) -> bool:
        return self in (ScenarioKind.IRR, ScenarioKind.EMI_IRR)

    @property
    def has_emi(self) -> bool:
        return self in (ScenarioKind.EMI, ScenarioKind.EMI_IRR)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-user transmit powers in watts."""

    cluster1: np.ndarray
    cluster2: np.ndarray | None = None


@dataclass(frozen=True)
class CascadeTerms:
    """Fixed per-(realization, precoder, theta2) quantities the SINR needs.

    a[k, i] is the serving cascade diag(g_k*) H1 u_i, so theta^H a[k, i] is the
    symbol-i amplitude at user k. e[k, j] is the neighbor-RIS cascade of the
    cluster-2 stream j. q_cross is Z^H Theta2 R2 Theta2^H Z, the user
    independent core of the re-reflected EMI covariance. EMI powers are the
    aggregate captured levels (element area times EMI PSD integrated over the
    bandwidth) in watts.
    """

    a: np.ndarray  # (K1, K1, L1^2)
    g1: np.ndarray  # (K1, L1^2)
    r1: np.ndarray  # (L1^2, L1^2) serving-RIS correlation
    emi1_w: float = 0.0
    emi2_w: float = 0.0
    emi_self_factor: float = 4.0
    e: np.ndarray | None = None  # (K1, K2, L1^2)
    q_cross: np.ndarray | None = None  # (L1^2, L1^2)

    @property
    def num_users(self) -> int:
        return self.a.shape[0]

    @property
    def num_elements(self) -> int:
        return self.a.shape[2]

    @cached_property
    def _unit_self(self) -> np.ndarray:
        """Per-user diag(g_k*) R1 diag(g_k) at unit EMI power."""
        g = self.g1
        return np.conj(g)[:, :, None] * self.r1[None, :, :] * g[:, None, :]

    @cached_property
    def b_mats(self) -> np.ndarray:
        """EMI covariance at the serving RIS, per user: (K1, L1^2, L1^2)."""
        return self.emi1_w * self._unit_self

    @cached_property
    def c_mats(self) -> np.ndarray:
        """Serving-RIS EMI covariance in the combined scenario (self factor applied)."""
        return self.emi_self_factor * self.b_mats

    @cached_property
    def d_mats(self) -> np.ndarray:
        """Re-reflected EMI covariance, per user: (K1, L1^2, L1^2)."""
        if self.q_cross is None:
            raise ValueError("cascade terms were built without a neighbor RIS")
        g = self.g1
        return self.emi2_w * (np.conj(g)[:, :, None] * self.q_cross[None, :, :] * g[:, None, :])

    @cached_property
    def cd_mats(self) -> np.ndarray:
        return self.c_mats + self.d_mats


def build_cascades(
    h1: np.ndarray,
    g1: np.ndarray,
    u1: np.ndarray,
    r1: np.ndarray,
    emi1_w: float = 0.0,
    emi_self_factor: float = 4.0,
    theta2: np.ndarray | None = None,
    u2: np.ndarray | None = None,
    h2: np.ndarray | None = None,
    z21: np.ndarray | None = None,
    r2: np.ndarray | None = None,
    emi2_w: float = 0.0,
) -> CascadeTerms:
    """Assemble CascadeTerms for cluster 1 given fixed cluster-2 state.

    The neighbor arguments (theta2, u2, h2, z21, r2) must be given together;
    without them only the EIF/EMI scenarios can be evaluated. z21 rows are
    indexed by neighbor-RIS elements, columns by serving-RIS elements.
    """
    h1 = np.asarray(h1)
    g1 = np.atleast_2d(np.asarray(g1))
    u1 = np.asarray(u1)
    num_elements, num_antennas = h1.shape
    if g1.shape[1] != num_elements:
        raise ValueError("g1 and h1 disagree on the element count")
    if u1.shape[0] != num_antennas or u1.shape[1] != g1.shape[0]:
        raise ValueError("u1 must have shape (antennas, users)")
    if r1.shape != (num_elements, num_elements):
        raise ValueError("r1 must be (L^2, L^2) for the serving RIS")

    hu = h1 @ u1  # (L1^2, K1)
    a = np.einsum("kl,li->kil", np.conj(g1), hu)

    neighbor = (theta2, u2, h2, z21, r2)
    if any(x is None for x in neighbor) and any(x is not None for x in neighbor):
        raise ValueError("neighbor arguments must be provided together")

    e = None
    q_cross = None
    if theta2 is not None:
        m = np.conj(theta2)[:, None] * (h2 @ u2)  # Theta2 H2 u, columns per stream
        s = np.conj(z21).T @ m  # (L1^2, K2)
        e = np.einsum("kl,lj->kjl", np.conj(g1), s)
        w = theta2[:, None] * z21  # Theta2^H Z21
        q_cross = np.conj(w).T @ (r2 @ w)

    return CascadeTerms(
        a=a,
        g1=g1,
        r1=np.asarray(r1),
        emi1_w=float(emi1_w),
        emi2_w=float(emi2_w),
        emi_self_factor=float(emi_self_factor),
        e=e,
        q_cross=q_cross,
    )


def _quad(mats: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Real quadratic forms theta^H M_k theta, floored at zero against roundoff."""
    vals = np.einsum("l,klm,m->k", np.conj(theta), mats, theta).real
    return np.maximum(vals, 0.0)


def signal_and_interference(
    terms: CascadeTerms,
    theta: np.ndarray,
    kind: ScenarioKind,
    powers: PowerAllocation,
    noise_power_w: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-user received signal power and total interference-plus-noise power."""
    p1 = np.asarray(powers.cluster1, dtype=float)
    t = np.einsum("l,kil->ki", np.conj(theta), terms.a)
    weighted = p1[None, :] * np.abs(t) ** 2
    sig = np.diagonal(weighted).copy()
    den = weighted.sum(axis=1) - sig + noise_power_w

    if kind.has_irr:
        if terms.e is None:
            raise ValueError(f"{kind.value} needs cascade terms built with a neighbor RIS")
        if powers.cluster2 is None:
            raise ValueError(f"{kind.value} needs cluster-2 transmit powers")
        p2 = np.asarray(powers.cluster2, dtype=float)
        ev = np.einsum("l,kjl->kj", np.conj(theta), terms.e)
        den = den + (p2[None, :] * np.abs(ev) ** 2).sum(axis=1)

    if kind is ScenarioKind.EMI:
        den = den + _quad(terms.b_mats, theta)
    elif kind is ScenarioKind.EMI_IRR:
        den = den + _quad(terms.c_mats, theta) + _quad(terms.d_mats, theta)

    return sig, den


@dataclass(frozen=True)
class SinrReport:
    scenario: ScenarioKind
    sinr: np.ndarray
    rates_bps_hz: np.ndarray
    sum_rate_bps_hz: float
    weights: np.ndarray


def _report(terms, theta, kind, powers, noise_power_w, weights) -> SinrReport:
    sig, den = signal_and_interference(terms, theta, kind, powers, noise_power_w)
    gamma = sig / den
    rates = np.log2(1.0 + gamma)
    w = np.ones(gamma.size) if weights is None else np.asarray(weights, dtype=float)
    return SinrReport(
        scenario=kind,
        sinr=gamma,
        rates_bps_hz=rates,
        sum_rate_bps_hz=float(w @ rates),
        weights=w,
    )


def sinr_eif(terms, theta, powers, noise_power_w, weights=None) -> SinrReport:
    """SINR with intra-cluster leakage and thermal noise only."""
    return _report(terms, theta, ScenarioKind.EIF, powers, noise_power_w, weights)


def sinr_emi(terms, theta, powers, noise_power_w, weights=None) -> SinrReport:
    """Adds the EMI picked up by the serving RIS (covariance term, no sample)."""
    return _report(terms, theta, ScenarioKind.EMI, powers, noise_power_w, weights)


def sinr_irr(terms, theta, powers, noise_power_w, weights=None) -> SinrReport:
    """Adds every cluster-2 stream re-radiated by the neighbor RIS."""
    return _report(terms, theta, ScenarioKind.IRR, powers, noise_power_w, weights)


def sinr_emi_irr(terms, theta, powers, noise_power_w, weights=None) -> SinrReport:
    """Both impairments, including EMI re-reflected by the neighbor RIS."""
    return _report(terms, theta, ScenarioKind.EMI_IRR, powers, noise_power_w, weights)


_SINR_FNS = {
    ScenarioKind.EIF: sinr_eif,
    ScenarioKind.EMI: sinr_emi,
    ScenarioKind.IRR: sinr_irr,
    ScenarioKind.EMI_IRR: sinr_emi_irr,
}


def scenario_sinr(terms, theta, kind, powers, noise_power_w, weights=None) -> SinrReport:
    return _SINR_FNS[ScenarioKind(kind)](terms, theta, powers, noise_power_w, weights)


def sum_rate(rates: np.ndarray, weights=None) -> float:
    rates = np.asarray(rates, dtype=float)
    w = np.ones(rates.size) if weights is None else np.asarray(weights, dtype=float)
    return float(w @ rates)


def outage_indicator(rates: np.ndarray, threshold: float) -> np.ndarray:
    """Per-user 0/1 outage flags; a rate exactly at the threshold is not an outage."""
    return (np.asarray(rates, dtype=float) < threshold).astype(int)


def weighted_log_utility(terms, theta, kind, powers, noise_power_w, weights=None) -> float:
    """Optimizer objective: sum of weighted natural-log rates."""
    sig, den = signal_and_interference(terms, theta, kind, powers, noise_power_w)
    vals = np.log1p(sig / den)
    if weights is None:
        return float(vals.sum())
    return float(np.asarray(weights, dtype=float) @ vals)
