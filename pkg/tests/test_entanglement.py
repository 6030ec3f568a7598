import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pila import (
    apply_beam_splitter,
    apply_pila,
    InvalidArgument,
    amplified_pair,
    entangle_via_bs,
    make_coherent,
    make_fock,
    partial_transpose,
    pt_report,
    tensor,
    witness_value,
)
from pila.channels import displace_mode
from pila.entanglement import (
    clone_pair,
    joint_quasi_prob_at_origin,
    one_sided_pair,
    pt_csv,
    pt_spectrum,
    subspace_det,
    witness_coefficient,
)

BALANCED = math.pi / 4


def bell_pair():
    return entangle_via_bs(make_fock(1, 1), BALANCED)


def test_unamplified_bell_pair():
    rep = pt_report(bell_pair())
    assert rep.min_eigenvalue == pytest.approx(-0.5, abs=1e-14)
    assert rep.negativity == pytest.approx(0.5, abs=1e-14)
    assert rep.subspace_det == pytest.approx(-0.25, abs=1e-14)


@pytest.mark.parametrize("G", [1.5, 2.0, 5.0])
def test_amplified_pair_elements(G):
    pair = amplified_pair(make_fock(1, 1), BALANCED, G)
    q = 1 - 1 / G
    assert abs(pair.element((0, 0), (0, 0))) <= 1e-14
    assert pair.element((0, 1), (1, 0)).real == pytest.approx(-1 / (2 * G**3), abs=1e-14)
    assert pair.element((1, 1), (1, 1)).real == pytest.approx(q / G**3, abs=1e-14)
    assert subspace_det(pair) == pytest.approx(-1 / (4 * G**6), abs=1e-16)


@pytest.mark.parametrize("G", [1.5, 2.0, 5.0, 10.0])
def test_witness_closed_form(G):
    pair = amplified_pair(make_fock(1, 1), BALANCED, G)
    c, q = witness_coefficient(G), 1 - 1 / G
    assert witness_value(pair, G) == pytest.approx(c / G**3 * (c * q - 1), abs=1e-14)
    assert witness_value(pair, G) < 0


def test_witness_branch_must_match_coherence_sign():
    pair = amplified_pair(make_fock(1, 1), BALANCED, 2.0)
    assert witness_value(pair, 2.0, branch_sign=1) > 0


def test_witness_needs_gain():
    with pytest.raises(InvalidArgument):
        witness_coefficient(1.0)


@pytest.mark.parametrize("G", [2.0, 5.0])
def test_pt_minimum_is_stable_under_cutoff_doubling(G):
    s = make_fock(1, 1)
    base = pt_report(amplified_pair(s, BALANCED, G), G=G)
    cut = 24 if G <= 3 else int(math.ceil(6 * G))
    doubled = pt_report(amplified_pair(s, BALANCED, G, cutoff=2 * cut), G=G)
    assert base.min_eigenvalue < 0
    assert abs(base.min_eigenvalue - doubled.min_eigenvalue) <= 1e-7


def test_sparse_and_dense_partial_transpose_agree():
    pair = amplified_pair(make_fock(1, 1), 0.5, 1.5, cutoff=10)
    sp_pt = partial_transpose(pair).toarray()
    dense_pt = partial_transpose(pair.to_dense())
    assert np.abs(sp_pt - dense_pt).max() == 0
    np.testing.assert_allclose(np.linalg.eigvalsh(dense_pt), pt_spectrum(pair), atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(0, 2))
def test_product_states_have_positive_partial_transpose(a, b, n):
    s = tensor(make_coherent(complex(a, b), 25), make_fock(n, 25))
    assert pt_spectrum(s).min() > -1e-10


def test_coherent_through_splitter_stays_separable():
    assert pt_spectrum(entangle_via_bs(make_coherent(1.0, 20), BALANCED)).min() > -1e-10


def test_entangling_angle_range():
    with pytest.raises(InvalidArgument):
        entangle_via_bs(make_fock(1, 1), 0.0)


@pytest.mark.parametrize("G1", [2.0, 5.0, 10.0])
@pytest.mark.parametrize("clone", [False, True])
def test_one_sided_amplification_keeps_entanglement(G1, clone):
    cut = 24 if G1 <= 3 else int(math.ceil(6 * G1))
    pair = amplified_pair(make_fock(1, 1), BALANCED, 1.0, cutoff=cut)
    assert pt_spectrum(one_sided_pair(pair, G1, clone=clone)).min() < -1e-4


def test_clone_pair_p_at_origin_is_input_wigner():
    pair = amplified_pair(make_fock(1, 1), BALANCED, 1.0, cutoff=24)
    cp = clone_pair(pair, 2)
    assert joint_quasi_prob_at_origin(cp.to_dense()) == pytest.approx(-4 / math.pi**2, abs=1e-4)


def test_pt_csv():
    pair = amplified_pair(make_fock(1, 1), BALANCED, 2.0)
    lines = pt_csv([(1.0, pt_report(bell_pair())), (2.0, pt_report(pair, G=2.0))], "hdr").splitlines()
    assert lines[1] == "G,min_pt_eigenvalue,negativity,subspace_det,witness_value"
    assert lines[2].endswith(",")
    assert float(lines[3].split(",")[-1]) < 0



@pytest.mark.parametrize("N", [1, 2])
@pytest.mark.parametrize("G", [1.5, 3.0])
def test_split_coherences_follow_amplified_input(N, G):
    s = make_fock(N, N)
    pair = amplified_pair(s, BALANCED, G)
    amp = apply_pila(s, G, deficit_bound=1e-12)
    for j in range(N + 1):
        expected = (-1) ** j / (2**j * G) * amp.rho[j, j].real
        assert pair.element((0, j), (j, 0)).real == pytest.approx(expected, abs=1e-8)
    assert np.all(np.abs(amp.populations[:N]) <= 1e-10)


def test_pt_spectrum_unchanged_by_local_displacement():
    cut = 30
    pair = apply_beam_splitter(tensor(make_fock(1, cut), make_fock(0, cut)), BALANCED)
    moved = displace_mode(displace_mode(pair, 0.3 - 0.2j, 1), 0.25j, 2)
    before, after = pt_spectrum(pair), pt_spectrum(moved)
    assert after.min() == pytest.approx(before.min(), abs=1e-8)
    assert np.sort(after)[:3] == pytest.approx(np.sort(before)[:3], abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.05, 12.0))
def test_negative_witness_implies_negative_pt(G):
    pair = amplified_pair(make_fock(1, 1), BALANCED, G)
    if witness_value(pair, G) < 0:
        assert pt_spectrum(pair).min() < 0
