"""Conditional amplification of coherent-state superpositions.

Exact coherent-dyad algebra, the beam-splitter/homodyne amplification
protocol with photon loss, a truncated-Fock oracle, Wigner functions,
cascade iteration and a CLI that exports every quantity as CSV/JSON.
"""

__version__ = "0.1.0"

from .algebra import (
    DyadMix,
    PureCSS,
    as_dyad_mix,
    beam_splitter_5050,
    canonicalize,
    coherent_overlap,
    coherent_pure,
    conjugate_transpose,
    fidelity_with_pure,
    homodyne_project,
    homodyne_project_mixed,
    inner,
    loss_channel,
    norm2,
    normalized,
    normalized_mix,
    prune,
    quadrature_wavefunction,
    scs_normalization,
    scs_state,
    state_from_json,
    state_to_json,
    tensor,
    tensor_mix,
    trace,
    vacuum_state,
)
from .cascade import CascadePolicy, StageReport, TermBudgetExceeded, cascade_run, window_discretize
from .fock import (
    FockCutoffError,
    ProtocolOracle,
    bs_apply_5050,
    coherent_fock,
    loss_apply,
    loss_kraus_ops,
    quadrature_eigvec,
    scs_fock,
    suggest_cutoff,
    wigner_fock,
)
from .protocol import (
    AmpConfig,
    WindowStats,
    avg_fidelity_window,
    closed_form_density,
    closed_form_fidelity,
    density_p,
    density_profile,
    fidelity_pointwise,
    fidelity_profile,
    max_prob_at_target,
    projected_state,
)
from .wigner import PhaseGrid, count_fringe_crossings, wigner_dyad, wigner_point, wigner_state
