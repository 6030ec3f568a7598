import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pila import (
    FockState,
    InvalidArgument,
    TwoModeState,
    fidelity,
    make_cat,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    make_thermal,
    mean_photon,
    parity,
    partial_trace,
    tensor,
)
from pila.fock import annihilation, displaced_trace, displacement_matrix, normal_moment
from pila.phase_space import gaussian_moments


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.mark.parametrize("n", [0, 1, 4])
def test_fock_state_is_projector(n):
    s = make_fock(n, 6)
    assert s.rho[n, n] == 1
    assert s.trace_deficit == 0
    assert mean_photon(s) == n
    assert parity(s) == (-1) ** n


def test_fock_cutoff_too_small():
    with pytest.raises(InvalidArgument):
        make_fock(5, 3)


@pytest.mark.parametrize("alpha", [0.5, 1.0 + 1.0j, -2.0])
def test_coherent_populations_are_poisson(alpha):
    s = make_coherent(alpha, 60)
    mu = abs(alpha) ** 2
    np.testing.assert_allclose(s.populations, stats.poisson.pmf(np.arange(61), mu), atol=1e-14)
    assert abs(mean_photon(s) - mu) < 1e-12


@pytest.mark.parametrize("nbar", [0.1, 0.5, 2.0])
def test_thermal_populations_are_geometric(nbar):
    s = make_thermal(nbar, 150)
    n = np.arange(151)
    np.testing.assert_allclose(s.populations, nbar**n / (1 + nbar) ** (n + 1), atol=1e-15)


@pytest.mark.parametrize("r", [0.3, 0.8])
def test_squeezed_vacuum_moments(r):
    s = make_squeezed_vacuum(r, 120)
    assert abs(mean_photon(s) - math.sinh(r) ** 2) < 1e-10
    _, V = gaussian_moments(s)
    np.testing.assert_allclose(np.linalg.eigvalsh(V), [math.exp(-2 * r) / 4, math.exp(2 * r) / 4], atol=1e-10)
    # only even photon numbers
    assert np.all(s.populations[1::2] == 0)


@pytest.mark.parametrize("sign,expected_parity", [(-1, -1.0), (1, 1.0)])
def test_cat_parity_and_field(sign, expected_parity):
    alpha = 1.2
    s = make_cat(alpha, sign, 60)
    assert abs(parity(s) - expected_parity) < 1e-12
    a = annihilation(60)
    assert abs(np.trace(s.rho @ a @ a) - alpha**2) < 1e-10


def test_odd_cat_needs_nonzero_amplitude():
    with pytest.raises(InvalidArgument):
        make_cat(0.0, -1, 10)


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (3, 3), (3, 4), (5, 2)])
def test_normal_moments_of_fock(n, k):
    expected = math.perm(n, k) if k <= n else 0
    assert normal_moment(make_fock(n, 8), k) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, 1.0j), (0.3 - 0.2j, -0.5)])
def test_coherent_overlap(a, b):
    f = fidelity(make_coherent(a, 50), make_coherent(b, 50))
    assert f == pytest.approx(math.exp(-abs(a - b) ** 2), abs=1e-12)


def test_displacement_of_vacuum_is_coherent():
    beta = 0.7 - 0.4j
    D = displacement_matrix(beta, 39)
    np.testing.assert_allclose(D[:, 0], np.sqrt(make_coherent(beta, 39).populations) * np.exp(1j * np.angle(beta) * np.arange(40)), atol=1e-12)


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0 + 2.0j])
def test_vacuum_characteristic_function(beta):
    val = displaced_trace(make_fock(0, 30).rho, np.array([beta]))
    assert val[0] == pytest.approx(math.exp(-abs(beta) ** 2 / 2), abs=1e-13)


def test_state_is_read_only():
    s = make_fock(1, 3)
    with pytest.raises(ValueError):
        s.rho[0, 0] = 1


def test_non_hermitian_rejected():
    rho = np.zeros((2, 2), complex)
    rho[0, 0] = 1
    rho[0, 1] = 0.3
    with pytest.raises(Exception):
        FockState(rho)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_partial_trace_recovers_factors(d1, d2, seed):
    rng = np.random.default_rng(seed)
    s1, s2 = FockState(random_density(d1 + 1, rng)), FockState(random_density(d2 + 1, rng))
    joint = tensor(s1, s2)
    np.testing.assert_allclose(partial_trace(joint, 1).rho, s1.rho, atol=1e-13)
    np.testing.assert_allclose(partial_trace(joint, 2).rho, s2.rho, atol=1e-13)
    sp_joint = joint.to_sparse()
    assert sp_joint.is_sparse
    np.testing.assert_allclose(partial_trace(sp_joint, 1).rho, s1.rho, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_random_states_are_physical(d, seed):
    s = FockState(random_density(d + 1, np.random.default_rng(seed)))
    assert s.is_physical()
    assert abs(s.trace - 1) < 1e-12
    assert s.min_eigenvalue() >= -1e-12


def test_two_mode_element_lookup():
    s = tensor(make_fock(1, 2), make_fock(0, 2))
    assert isinstance(s, TwoModeState)
    assert s.element((1, 0), (1, 0)) == 1
    assert s.element((0, 1), (0, 1)) == 0
