import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb

from pila import (
    ChannelSpec,
    CutoffTooSmall,
    InvalidArgument,
    additive_noise,
    apply_beam_splitter,
    apply_channel,
    apply_loss,
    apply_pila,
    apply_pila_two_mode,
    displace,
    gain_from_interaction,
    make_coherent,
    make_fock,
    make_thermal,
    mean_photon,
    photon_add,
    tensor,
)
from pila.channels import apply_loss_two_mode, pila_kraus, pila_output_deficit, pila_populations
from pila.fock import mean_field


def amplified_number_state(m, G, n):
    """Photon distribution of |m> after the amplifier, written out by hand."""
    n = np.asarray(n)
    return comb(n, m) * G ** -(m + 1) * (1 - 1 / G) ** (n - m) * (n >= m)


@pytest.mark.parametrize("G", [1.5, 2.0, 4.0])
def test_amplified_vacuum_is_thermal(G):
    out = apply_pila(make_fock(0, 0), G, out_cutoff=80)
    n = np.arange(81)
    np.testing.assert_allclose(np.diag(out.rho).real, (1 / G) * (1 - 1 / G) ** n, atol=1e-14)
    assert np.abs(out.rho - np.diag(np.diag(out.rho))).max() == 0


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("G", [1.2, 3.0])
def test_amplified_fock_is_negative_binomial(m, G):
    out = apply_pila(make_fock(m, m), G, deficit_bound=1e-12)
    n = np.arange(out.cutoff + 1)
    np.testing.assert_allclose(out.populations, amplified_number_state(m, G, n), atol=1e-14)
    np.testing.assert_allclose(pila_populations(make_fock(m, m).populations, G, out.cutoff), out.populations, atol=1e-14)


@pytest.mark.parametrize("G", [1.0, 1.7, 5.0])
def test_mean_photon_law(G):
    s = make_coherent(0.8, 40)
    out = apply_pila(s, G, deficit_bound=1e-13)
    assert mean_photon(out) == pytest.approx(G * mean_photon(s) + G - 1, abs=1e-9)
    assert mean_field(out) == pytest.approx(math.sqrt(G) * mean_field(s), abs=1e-9)


@pytest.mark.parametrize("G", [1.3, 2.5])
def test_kraus_completeness_on_low_block(G):
    cut = 200
    total = sum(pila_kraus(G, k, cut).T @ pila_kraus(G, k, cut) for k in range(cut + 1))
    np.testing.assert_allclose(total[:6, :6], np.eye(6), atol=1e-12)


def test_gain_from_interaction():
    assert gain_from_interaction(0.0) == 1.0
    assert gain_from_interaction(1.0) == pytest.approx(math.cosh(1.0) ** 2)


@pytest.mark.parametrize("G", [0.5, -1.0, float("nan")])
def test_gain_below_one_rejected(G):
    with pytest.raises(InvalidArgument, match="gain must be"):
        apply_pila(make_fock(1, 1), G)


def test_unit_gain_is_identity():
    s = make_coherent(0.5 + 0.2j, 20)
    np.testing.assert_array_equal(apply_pila(s, 1.0).rho, s.rho)


def test_too_small_cutoff_reports_requirement():
    with pytest.raises(CutoffTooSmall) as info:
        apply_pila(make_fock(1, 1), 2.0, out_cutoff=3)
    assert info.value.required > 3
    out = apply_pila(make_fock(1, 1), 2.0, out_cutoff=info.value.required)
    assert out.trace_deficit <= 1e-8


@pytest.mark.parametrize("G1,G2", [(1.5, 2.0), (2.0, 3.0)])
def test_pila_semigroup(G1, G2):
    s = make_fock(1, 1)
    cut = 160
    two_step = apply_pila(apply_pila(s, G1, out_cutoff=cut), G2, out_cutoff=cut)
    one_step = apply_pila(s, G1 * G2, out_cutoff=cut)
    assert np.abs(two_step.rho - one_step.rho).max() < 1e-8


@pytest.mark.parametrize("m", [2, 5])
@pytest.mark.parametrize("eta", [0.3, 0.9])
def test_loss_is_binomial(m, eta):
    out = apply_loss(make_fock(m, m), eta)
    k = np.arange(m + 1)
    np.testing.assert_allclose(out.populations, comb(m, k) * eta**k * (1 - eta) ** (m - k), atol=1e-14)


def test_loss_composes():
    s = make_coherent(1.0 + 0.5j, 40)
    np.testing.assert_allclose(apply_loss(apply_loss(s, 0.6), 0.5).rho, apply_loss(s, 0.3).rho, atol=1e-14)


def test_loss_of_coherent_is_coherent():
    s = make_coherent(1.2, 50)
    np.testing.assert_allclose(apply_loss(s, 0.25).rho, make_coherent(0.6, 50).rho, atol=1e-13)


def test_additive_noise_routes_agree():
    s = make_fock(1, 1)
    exact = additive_noise(s, 0.7, deficit_bound=1e-12)
    avg = additive_noise(s, 0.7, method="average", deficit_bound=1e-12)
    assert np.abs(exact.rho - avg.rho).max() < 1e-10


@pytest.mark.parametrize("nbar,added", [(0.0, 0.5), (0.4, 1.0)])
def test_noise_on_thermal_adds_photons(nbar, added):
    out = additive_noise(make_thermal(nbar, 120), added, deficit_bound=1e-12)
    ref = make_thermal(nbar + added, out.cutoff)
    assert np.abs(out.rho - ref.rho).max() < 1e-10


def test_displace_vacuum():
    out = displace(make_fock(0, 0), 0.9 - 0.3j, deficit_bound=1e-12)
    ref = make_coherent(0.9 - 0.3j, out.cutoff)
    assert np.abs(out.rho - ref.rho).max() < 1e-12


def test_photon_add():
    out = photon_add(make_fock(2, 2))
    assert out.cutoff == 3
    assert out.rho[3, 3] == pytest.approx(1.0)


@pytest.mark.parametrize("theta", [math.pi / 4, 0.3])
def test_beam_splitter_single_photon(theta):
    out = apply_beam_splitter(tensor(make_fock(1, 1), make_fock(0, 1)), theta)
    assert out.element((1, 0), (1, 0)).real == pytest.approx(math.cos(theta) ** 2, abs=1e-14)
    assert out.element((0, 1), (0, 1)).real == pytest.approx(math.sin(theta) ** 2, abs=1e-14)
    # the reflected port carries a minus sign in this convention
    assert out.element((0, 1), (1, 0)).real == pytest.approx(-math.sin(theta) * math.cos(theta), abs=1e-14)


def test_beam_splitter_hong_ou_mandel():
    out = apply_beam_splitter(tensor(make_fock(1, 2), make_fock(1, 2)), math.pi / 4)
    assert abs(out.element((1, 1), (1, 1))) < 1e-14
    assert out.element((2, 0), (2, 0)).real == pytest.approx(0.5, abs=1e-14)


def test_beam_splitter_commutes_with_symmetric_amplifier():
    G, cut = 1.8, 40
    s = tensor(make_fock(1, 20), make_coherent(0.4, 20))
    theta = 0.6
    a = apply_pila_two_mode(apply_beam_splitter(s, theta), G, G, cutoffs=(cut, cut))
    b = apply_beam_splitter(apply_pila_two_mode(s, G, G, cutoffs=(cut, cut)), theta)
    # elements whose total photon number fits in one mode are exact on both sides
    low = 10
    ta, tb = a.tensor4(), b.tensor4()
    assert np.abs(ta[: low + 1, : low + 1, : low + 1, : low + 1] - tb[: low + 1, : low + 1, : low + 1, : low + 1]).max() < 1e-8


def test_two_mode_sparse_matches_dense():
    s = tensor(make_fock(1, 1), make_fock(0, 1))
    dense = apply_pila_two_mode(apply_beam_splitter(s, 0.7), 2.0, 1.5, cutoffs=(20, 20), deficit_bound=1e-3)
    sparse = apply_pila_two_mode(apply_beam_splitter(s.to_sparse(), 0.7), 2.0, 1.5, cutoffs=(20, 20), deficit_bound=1e-3)
    assert np.abs(dense.to_dense().rho - sparse.to_dense().rho).max() < 1e-14
    lossy_d = apply_loss_two_mode(dense, 0.5, 1)
    lossy_s = apply_loss_two_mode(sparse, 0.5, 1)
    assert np.abs(lossy_d.to_dense().rho - lossy_s.to_dense().rho).max() < 1e-14


@pytest.mark.parametrize(
    "spec",
    [
        ChannelSpec("pila", G=2.0),
        ChannelSpec("loss", eta=0.4),
        ChannelSpec("displace", beta=0.3 + 0.1j),
        ChannelSpec("additive_noise", nbar_add=0.5),
        ChannelSpec("photon_add"),
    ],
)
def test_channels_preserve_trace_within_bound(spec):
    s = make_coherent(0.7, 30)
    out = apply_channel(s, spec, deficit_bound=1e-8)
    assert out.trace >= 1 - 1e-8 - s.trace_deficit - 1e-14
    assert out.trace <= 1 + 1e-12
    assert out.min_eigenvalue() > -1e-12


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["pila", "loss", "displace", "additive_noise", "beam_splitter", "photon_add"]),
    value=st.floats(0.05, 0.95),
    policy=st.sampled_from(["auto", "keep", "grow_to"]),
)
def test_channel_spec_json_roundtrip(kind, value, policy):
    params = {
        "pila": {"G": 1 + value},
        "loss": {"eta": value},
        "displace": {"beta": complex(value, -value)},
        "additive_noise": {"nbar_add": value},
        "beam_splitter": {"theta": value},
        "photon_add": {},
    }[kind]
    extra = {"out_cutoff": 30} if policy == "grow_to" else {}
    spec = ChannelSpec(kind, cutoff_policy=policy, **params, **extra)
    assert ChannelSpec.from_json(spec.to_json()) == spec


def test_channel_spec_rejects_missing_parameter():
    with pytest.raises(InvalidArgument):
        ChannelSpec("pila")
    with pytest.raises(InvalidArgument):
        ChannelSpec.from_dict({"kind": "loss", "eta": 0.5, "bogus": 1})


def test_output_deficit_matches_truncated_trace():
    s = make_fock(2, 2)
    out = apply_pila(s, 3.0, out_cutoff=25, deficit_bound=0.5)
    assert pila_output_deficit(s.populations, 3.0, 25) == pytest.approx(1 - out.trace, abs=1e-14)
