"""Phase-insensitive linear amplification of nonclassical light, simulated in the Fock basis."""

__version__ = "0.1.0"

from .channels import (
    ChannelSpec,
    additive_noise,
    apply_beam_splitter,
    apply_channel,
    apply_loss,
    apply_pila,
    apply_pila_two_mode,
    displace,
    gain_from_interaction,
    photon_add,
)
from .cloning import clone_channel, clone_fidelity_curve, clone_nonclassicality_report, clone_report, explicit_clones
from .entanglement import (
    amplified_pair,
    correlation_vs_entanglement_report,
    entangle_via_bs,
    partial_transpose,
    pt_report,
    witness_value,
)
from .errors import CutoffTooSmall, GridTooSmallWarning, InvalidArgument, NumericalGuardError, TruncationWarning
from .fock import (
    FockState,
    StateSpec,
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
from .io import RunConfig, load_state, parse_state_spec, save_state
from .phase_space import GridSpec, nonclassical_depth, quasi_prob, quasi_prob_at
from .witnesses import critical_gain_scan, det_moment_matrix, gaussian_test, moment_matrix
