"""Elliptic integral kernel against an independent series oracle."""

import numpy as np
import pytest

from ringleap.elliptic import (
    agm_pair,
    elliptic_derivatives,
    elliptic_pair,
)

from conftest import series_k_e


def test_known_values_at_zero():
    pair = elliptic_pair(0.0)
    assert pair.k_complete == pytest.approx(np.pi / 2, rel=1e-15)
    assert pair.e_complete == pytest.approx(np.pi / 2, rel=1e-15)


def test_agm_matches_series_oracle(rng):
    m = rng.uniform(0.0, 0.999, 300)
    k_ref, e_ref = series_k_e(m)
    k, e = agm_pair(m)
    assert np.max(np.abs(k - k_ref) / k_ref) < 1e-12
    assert np.max(np.abs(e - e_ref) / e_ref) < 1e-12


def test_near_one_expansion_consistent():
    # both branches of agm_pair agree around the switch point
    for m in (1.0 - 2e-12, 1.0 - 1e-12, 1.0 - 5e-13):
        k, e = agm_pair(m)
        lam = np.log(4.0) - 0.5 * np.log(1.0 - m)
        assert k == pytest.approx(lam, rel=1e-9)
        assert e == pytest.approx(1.0, rel=1e-9)


def test_derivative_identities_against_finite_differences(rng):
    m = rng.uniform(0.05, 0.95, 50)
    h = 1e-7
    kp, ep = agm_pair(m + h)
    km, em = agm_pair(m - h)
    dk_fd = (kp - km) / (2 * h)
    de_fd = (ep - em) / (2 * h)
    for mi, dkf, def_ in zip(m, dk_fd, de_fd):
        dk, de = elliptic_derivatives(mi)
        assert dk == pytest.approx(dkf, rel=1e-6)
        assert de == pytest.approx(def_, rel=1e-6)


def test_domain_validation():
    with pytest.raises(ValueError):
        elliptic_pair(1.0)
    with pytest.raises(ValueError):
        elliptic_pair(-0.1)
    with pytest.raises(ValueError):
        elliptic_derivatives(0.0)


def test_k_diverges_e_stays_bounded():
    ms = 1.0 - np.logspace(-2, -10, 9)
    k, e = agm_pair(ms)
    assert np.all(np.diff(k) > 0)
    assert np.all(e < np.pi / 2)
    assert np.all(e > 1.0)
