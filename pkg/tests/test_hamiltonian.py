"""Ring Hamiltonian, momentum, and the reduced-system invariants."""

import numpy as np
import pytest

from ringleap.hamiltonian import (
    HamiltonianParams,
    ReducedConfig,
    gamma_eps,
    hamiltonian,
    hamiltonian_grad,
    momentum,
    reduced_invariants,
    w_eps,
)
from ringleap.potential import RingConfig, RingPoint, vector_potential


def _random_config(rng, n, eps):
    r = rng.uniform(0.5, 2.0, n)
    z = rng.uniform(-0.5, 0.5, n) + np.arange(n) * 1.5
    return RingConfig([RingPoint(a, b) for a, b in zip(r, z)], eps)


def test_hamiltonian_matches_direct_sum(rng):
    # independent reassembly from the public potential API
    params = HamiltonianParams(1e-4)
    offset = 3.0 * np.log(2.0) - 2.0
    for _ in range(10):
        n = int(rng.integers(1, 5))
        rings = _random_config(rng, n, params.epsilon)
        pts = rings.points
        total = 0.0
        for i, p in enumerate(pts):
            inter = sum(
                vector_potential(pts[j], p) for j in range(n) if j != i
            )
            total += p.r * (
                np.pi * np.log(p.r / params.epsilon)
                + params.gamma
                + np.pi * offset
                + np.pi * inter
            )
        assert hamiltonian(rings, params) == pytest.approx(total, rel=1e-13)


def test_gradient_matches_finite_differences(rng):
    params = HamiltonianParams(1e-4)
    d = 1e-6
    for _ in range(50):
        n = int(rng.integers(1, 4))
        rings = _random_config(rng, n, params.epsilon)
        grad = hamiltonian_grad(rings, params)
        arr = rings.as_array()
        for i in range(n):
            for c in range(2):
                hi = arr.copy()
                hi[i, c] += d
                lo = arr.copy()
                lo[i, c] -= d
                fd = (
                    hamiltonian(
                        RingConfig(
                            [RingPoint(*p) for p in hi], params.epsilon
                        ),
                        params,
                    )
                    - hamiltonian(
                        RingConfig(
                            [RingPoint(*p) for p in lo], params.epsilon
                        ),
                        params,
                    )
                ) / (2 * d)
                assert grad[i][c] == pytest.approx(fd, rel=5e-7, abs=1e-7)


def test_momentum_is_disk_area(rng):
    rings = _random_config(rng, 3, 1e-6)
    arr = rings.as_array()
    assert momentum(rings) == pytest.approx(np.pi * np.sum(arr[:, 0] ** 2))


def test_gamma_override_environment(monkeypatch):
    monkeypatch.setenv("RINGLEAP_GAMMA", "1.25")
    assert HamiltonianParams(1e-6).gamma == pytest.approx(1.25)


def test_blow_up_identity():
    # H_eps splits into the bookkeeping constant plus the reduced
    # Hamiltonian contribution up to O(1/sqrt(log)) for rescaled clusters
    r0, z0 = 1.0, 0.0
    b = np.array([[0.0, 0.6], [0.0, -0.6]])
    resid_prev = np.inf
    for eps in (1e-5, 1e-8, 1e-11):
        params = HamiltonianParams(eps)
        root = np.sqrt(params.log_eps)
        pts = [
            RingPoint(r0 + bi[0] / root, z0 + bi[1] / root) for bi in b
        ]
        rings = RingConfig(pts, eps)
        cfg = ReducedConfig(b, r0, z0)
        resid = abs(
            hamiltonian(rings, params)
            - gamma_eps(r0, 2, params)
            - w_eps(cfg, params)
        )
        assert resid < resid_prev
        resid_prev = resid


def test_reduced_invariants_values():
    cfg = ReducedConfig([[0.1, 0.5], [-0.2, -0.5]], 1.0)
    w, q = reduced_invariants(cfg)
    sep = np.hypot(0.3, 1.0)
    assert q == pytest.approx(-0.1)
    assert w == pytest.approx(
        -(0.1**2 + 0.2**2) / 2.0 - 2.0 * np.log(sep)
    )


def test_params_validation():
    with pytest.raises(ValueError):
        HamiltonianParams(1.5)
    with pytest.raises(ValueError):
        HamiltonianParams(0.0)
    with pytest.raises(ValueError):
        ReducedConfig([[0.0, 0.0], [0.0, 0.0]], 1.0)
