"""Effective channel rows and zero-forcing precoding."""

import numpy as np
import pytest

from risim import (
    PowerAllocation,
    ZfDegenerateError,
    build_cascades,
    effective_channel,
    signal_and_interference,
    zf_precoder,
)
from risim.sinr import ScenarioKind


def _cn(rng, *shape):
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def test_effective_channel_row_formula():
    rng = np.random.default_rng(0)
    g = _cn(rng, 3, 5)
    h = _cn(rng, 5, 4)
    theta = np.exp(1j * rng.uniform(0, 2 * np.pi, 5))
    h_eff = effective_channel(g, theta, h)
    assert h_eff.shape == (3, 4)
    for k in range(3):
        row = np.conj(theta) * np.conj(g[k]) @ h
        np.testing.assert_allclose(h_eff[k], row, rtol=1e-12)


def test_effective_channel_consistent_with_cascades():
    # (H_eff @ u)[k, i] must equal theta^H a[k, i]: the precoder and the SINR
    # must see the same map or ZF nulling would not null
    rng = np.random.default_rng(1)
    h = _cn(rng, 6, 2)
    g = _cn(rng, 2, 6)
    u = _cn(rng, 2, 2)
    theta = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))
    terms = build_cascades(h, g, u, np.eye(6))
    t = np.einsum("l,kil->ki", np.conj(theta), terms.a)
    np.testing.assert_allclose(effective_channel(g, theta, h) @ u, t, rtol=1e-12)


def test_zf_nulls_intra_cluster_interference():
    rng = np.random.default_rng(2)
    for _ in range(20):
        h = _cn(rng, 8, 3)
        g = _cn(rng, 3, 8)
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        h_eff = effective_channel(g, theta, h)
        prec = zf_precoder(h_eff)
        prod = h_eff @ prec.u
        off = prod - np.diag(np.diag(prod))
        assert np.abs(off).max() < 1e-9 * max(1.0, np.abs(np.diag(prod)).max())


def test_zf_columns_unit_norm():
    rng = np.random.default_rng(3)
    h_eff = _cn(rng, 2, 4)
    prec = zf_precoder(h_eff)
    np.testing.assert_allclose(np.linalg.norm(prec.u, axis=0), 1.0, rtol=1e-12)
    np.testing.assert_array_equal(prec.h_eff, h_eff)


def test_zf_single_user_is_matched_filter():
    rng = np.random.default_rng(4)
    h_eff = _cn(rng, 1, 3)
    prec = zf_precoder(h_eff)
    expected = np.conj(h_eff[0]) / np.linalg.norm(h_eff[0])
    np.testing.assert_allclose(prec.u[:, 0], expected, rtol=1e-12)


def test_zf_interference_term_vanishes_in_sinr():
    rng = np.random.default_rng(5)
    h = _cn(rng, 6, 2)
    g = _cn(rng, 2, 6)
    theta = np.ones(6, dtype=complex)
    prec = zf_precoder(effective_channel(g, theta, h))
    terms = build_cascades(h, g, prec.u, np.eye(6))
    noise = 1e-6
    sig, den = signal_and_interference(
        terms, theta, ScenarioKind.EIF, PowerAllocation(np.ones(2)), noise
    )
    # denominator reduces to the noise floor once leakage is nulled
    np.testing.assert_allclose(den, noise, rtol=1e-6)
    assert np.all(sig > 0)


def test_zf_rejects_more_users_than_antennas():
    rng = np.random.default_rng(6)
    with pytest.raises(ValueError, match="more users than antennas"):
        zf_precoder(_cn(rng, 3, 2))


def test_zf_degenerate_raises():
    row = np.array([1.0 + 0.5j, -0.3 + 0.2j, 0.8 - 1.0j])
    h_eff = np.stack([row, row])  # identical users: Gram is singular
    with pytest.raises(ZfDegenerateError, match="degenerate"):
        zf_precoder(h_eff)
    nearly = np.stack([row, row + 1e-14 * np.array([1, 0, 0])])
    with pytest.raises(ZfDegenerateError):
        zf_precoder(nearly)


def test_zf_condition_limit_configurable():
    rng = np.random.default_rng(7)
    h_eff = _cn(rng, 2, 3)
    with pytest.raises(ZfDegenerateError):
        zf_precoder(h_eff, cond_limit=1.0 - 1e-9)
    zf_precoder(h_eff, cond_limit=1e12)
