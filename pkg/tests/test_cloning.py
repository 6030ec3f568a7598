import math

import numpy as np
import pytest

from pila import (
    FockState,
    apply_beam_splitter,
    apply_pila,
    InvalidArgument,
    clone_channel,
    clone_fidelity_curve,
    clone_nonclassicality_report,
    clone_report,
    explicit_clones,
    make_cat,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    nonclassical_depth,
    partial_trace,
    quasi_prob_at,
    tensor,
)
from pila.cloning import cascade_transmissivities, classical_baseline_fidelity, clone_csv
from pila.fock import mean_field


@pytest.mark.parametrize("G", [2, 3, 4])
def test_coherent_clone_fidelity(G):
    s = make_coherent(0.9 + 0.3j, 40)
    assert clone_report(s, G).fidelity_vs_input == pytest.approx(G / (2 * G - 1), abs=1e-8)


@pytest.mark.parametrize("state,baseline", [(make_coherent(1.0, 40), 0.5), (make_fock(1, 1), 0.25)])
def test_classical_baseline(state, baseline):
    assert classical_baseline_fidelity(state) == pytest.approx(baseline, abs=1e-8)


def test_cascade_splits_evenly():
    t = cascade_transmissivities(4)
    np.testing.assert_allclose(t, [1 / 2, 1 / math.sqrt(3), 1 / math.sqrt(2)])
    # fraction of the beam leaving at each port is 1/G
    remaining, frac = 1.0, []
    for ti in t:
        frac.append(remaining * ti**2)
        remaining *= 1 - ti**2
    frac.append(remaining)
    np.testing.assert_allclose(frac, 0.25)


@pytest.mark.parametrize("G", [2, 3])
def test_clone_routes_agree(G):
    s = make_fock(1, 1)
    noise = clone_channel(s, G, deficit_bound=1e-13)
    literal = clone_channel(s, G, method="amplify-loss", deficit_bound=1e-13)
    c = min(noise.cutoff, literal.cutoff)
    assert np.abs(noise.rho[: c + 1, : c + 1] - literal.rho[: c + 1, : c + 1]).max() < 1e-11


@pytest.mark.parametrize("G", [2, 3])
def test_explicit_cascade_matches_clone_channel(G):
    s = make_cat(1.0, -1, 30)
    clones = explicit_clones(s, G, deficit_bound=1e-13)
    ref = clone_channel(s, G, deficit_bound=1e-13)
    assert len(clones) == G
    for c in clones:
        k = min(c.cutoff, ref.cutoff)
        assert np.abs(c.rho[: k + 1, : k + 1] - ref.rho[: k + 1, : k + 1]).max() < 1e-10


def test_clones_keep_the_mean_field():
    s = make_coherent(0.7 - 0.2j, 40)
    for c in explicit_clones(s, 3, deficit_bound=1e-12):
        assert mean_field(c) == pytest.approx(0.7 - 0.2j, abs=1e-8)


@pytest.mark.filterwarnings("ignore::pila.GridTooSmallWarning")
def test_two_clone_p_is_input_wigner():
    clone = clone_channel(make_fock(1, 1), 2, deficit_bound=1e-16)
    pts = np.array([0.0, 0.5, 1.0j])
    np.testing.assert_allclose(quasi_prob_at(clone, pts, 1.0).real, quasi_prob_at(make_fock(1, 1), pts, 0.0).real, atol=1e-6)
    assert quasi_prob_at(clone, 0.0, 1.0)[0] == pytest.approx(-2 / math.pi, abs=1e-6)


@pytest.mark.parametrize("state", [make_coherent(1.0, 40), make_fock(1, 1), make_cat(1.0, -1, 30)])
def test_fidelity_decreases_and_beats_baseline(state):
    curve = clone_fidelity_curve(state, [1, 2, 3, 4, 5])
    fids = [f for _, f in curve]
    assert fids[0] == 1.0
    assert all(b < a for a, b in zip(fids, fids[1:]))
    base = classical_baseline_fidelity(state)
    assert min(fids) > base


def test_one_clone_rejected():
    with pytest.raises(InvalidArgument):
        clone_channel(make_fock(1, 1), 1)
    with pytest.raises(InvalidArgument):
        clone_channel(make_fock(1, 1), 2.5)


@pytest.mark.filterwarnings("ignore::pila.GridTooSmallWarning")
def test_verdicts():
    fock = make_fock(1, 1)
    v = clone_nonclassicality_report(fock, 5, nonclassical_depth(fock))
    assert v.verdict == "nonclassical"
    assert v.consistent
    assert v.p_min < 0
    sq = make_squeezed_vacuum(0.5, 100)
    v = clone_nonclassicality_report(sq, 2, nonclassical_depth(sq, tol=1e-8))
    assert v.verdict == "classical"
    assert v.consistent


def test_clone_csv():
    reps = [clone_report(make_coherent(1.0, 40), G) for G in (2, 3)]
    lines = clone_csv(reps, "hdr").splitlines()
    assert lines[1] == "G,fidelity,classical_fidelity,s_effective"
    g, f, c, s = lines[2].split(",")
    assert (int(g), float(s)) == (2, 0.0)
    assert float(f) == pytest.approx(2 / 3, abs=1e-8)


@pytest.mark.parametrize("state", [make_coherent(0.8 + 0.4j, 40), make_cat(1.0, 1, 30), make_cat(1.2j, -1, 40)])
@pytest.mark.parametrize("G", [2, 4, 6])
def test_clone_keeps_mean_amplitude(state, G):
    assert abs(mean_field(clone_channel(state, G)) - mean_field(state)) <= 1e-8


def test_full_two_mode_split_matches_clone_channel():
    amp = apply_pila(make_fock(1, 1), 2.0)
    out = apply_beam_splitter(tensor(amp, make_fock(0, amp.cutoff)), math.pi / 4)
    ref = clone_channel(make_fock(1, 1), 2, deficit_bound=1e-12)
    k = amp.cutoff
    for mode in (1, 2):
        marg = partial_trace(out, mode)
        if mode == 2:
            sign = (-1.0) ** np.arange(k + 1)
            marg = FockState(sign[:, None] * marg.rho * sign[None, :])
        c = min(k, ref.cutoff)
        assert np.abs(marg.rho[: c + 1, : c + 1] - ref.rho[: c + 1, : c + 1]).max() < 1e-8
