"""Iterated amplification: feed heralded outputs back into the splitter.

One stage takes a single-mode state, pairs it with a partner (either a
second copy of itself or a freshly prepared ideal superposition), mixes
the pair on the balanced beam splitter and conditions on the homodyne
outcome, producing a new single-mode state of nominal amplitude sqrt(2)
times the input's. Window conditioning is realized as a Gauss-Legendre
mixture of exact-outcome states, which converges to the window-averaged
conditional state as the node count grows.

Everything is tracked exactly as coherent dyads; merging and pruning keep
the term count bounded from stage to stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import (
    SQRT2,
    DyadMix,
    as_dyad_mix,
    beam_splitter_5050,
    canonicalize,
    fidelity_with_pure,
    homodyne_project_mixed,
    loss_channel,
    normalized_mix,
    prune,
    scs_state,
    state_to_json,
    tensor_mix,
)
from .protocol import PAIRINGS, AmpConfig, post_bs_state

logger = logging.getLogger(__name__)

DEFAULT_PRUNE_TOL = 1e-14
DEFAULT_MAX_TERMS = 100_000


class TermBudgetExceeded(RuntimeError):
    """Dyad count blew past the configured cap; refusing to prune blindly."""


@dataclass(frozen=True)
class CascadePolicy:
    """How each stage conditions and how it sources its second input.

    ``conditioning`` is either "exact" (condition on the single outcome
    ``x0``) or "window" (accept outcomes in [-window, window], discretized
    into ``nodes`` Gauss-Legendre points; ``nodes`` must be odd and >= 3 so
    the x = 0 point participates). ``input_rule`` is "clone" to pair the
    previous output with an identical copy of itself, or "ideal-refresh"
    to pair it with a fresh ideal superposition of the matching amplitude;
    ``refresh_parity`` overrides the partner parity, otherwise the seed
    pairing's structure (same or opposite parity) is preserved.
    """

    stages: int
    conditioning: str = "exact"
    x0: float = 0.0
    window: float = 1.0
    nodes: int = 21
    input_rule: str = "clone"
    refresh_parity: str | None = None
    loss_r2: float = 0.0
    prune_tol: float = DEFAULT_PRUNE_TOL
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("need at least one stage")
        if self.conditioning not in ("exact", "window"):
            raise ValueError(f"unknown conditioning {self.conditioning!r}")
        if self.conditioning == "window":
            if not self.window > 0.0:
                raise ValueError("window half-width must be positive")
            if self.nodes < 3 or self.nodes % 2 == 0:
                raise ValueError("window discretization needs an odd node count >= 3")
        if self.input_rule not in ("clone", "ideal-refresh"):
            raise ValueError(f"unknown input rule {self.input_rule!r}")
        if self.refresh_parity not in (None, "even", "odd"):
            raise ValueError(f"invalid refresh parity {self.refresh_parity!r}")
        if not 0.0 <= self.loss_r2 < 1.0:
            raise ValueError("loss_r2 must lie in [0, 1)")


@dataclass(frozen=True)
class StageReport:
    """Per-stage record of fidelity, success statistics and state size."""

    stage: int
    input_alpha: float
    fidelity: float
    probability: float
    cumulative_probability: float
    term_count: int

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "input_alpha": self.input_alpha,
            "fidelity": self.fidelity,
            "probability": self.probability,
            "cumulative_probability": self.cumulative_probability,
            "term_count": self.term_count,
        }


def window_discretize(cfg: AmpConfig, w: float, nodes: int) -> DyadMix:
    """Window-conditioned heralded state as a normalized finite mixture.

    Gauss-Legendre nodes x_k and weights w_k on [-w, w] assemble
    sum_k w_k <x_k| rho |x_k> whose fidelity to the amplified target
    converges to the window-averaged fidelity as the node count grows.
    """
    if not w > 0.0:
        raise ValueError("window half-width must be positive")
    if nodes < 3 or nodes % 2 == 0:
        raise ValueError("window discretization needs an odd node count >= 3")
    two_mode = post_bs_state(cfg)
    mix = as_dyad_mix(two_mode) if not isinstance(two_mode, DyadMix) else two_mode
    state, _ = _window_condition(mix, w, nodes)
    return state


def _gl_nodes(w: float, nodes: int):
    xk, wk = np.polynomial.legendre.leggauss(nodes)
    return xk * w, wk * w


def _window_condition(two_mode: DyadMix, w: float, nodes: int):
    """Window-average a two-mode dyad mix over homodyne outcomes.

    Returns the normalized conditioned state and the window probability
    (the Gauss-Legendre estimate of the outcome-density integral).
    """
    xs, ws = _gl_nodes(w, nodes)
    terms = []
    prob = 0.0
    for x, weight in zip(xs, ws):
        reduced, dens = homodyne_project_mixed(two_mode, 0, float(x))
        prob += weight * dens
        terms.extend((weight * c, k, b) for c, k, b in reduced.terms)
    merged = canonicalize(DyadMix(two_mode.modes - 1, tuple(terms)))
    return normalized_mix(merged), prob


def _exact_condition(two_mode: DyadMix, x0: float):
    reduced, dens = homodyne_project_mixed(two_mode, 0, x0)
    if dens <= 0.0:
        raise ValueError(f"outcome density vanishes at x0={x0}")
    return normalized_mix(canonicalize(reduced)), dens


def _merge_close_labels(mix: DyadMix, tol: float = 1e-12) -> DyadMix:
    """Snap labels that differ by less than tol onto one representative.

    Different arithmetic routes to the same physical amplitude (say
    2a/sqrt2 against a*sqrt2) land an ulp apart and would stop dyads from
    merging, doubling the label set every stage. The snap distance sits
    far below every tolerance used downstream.
    """
    labels = sorted(
        {l for _, ket, bra in mix.terms for l in ket + bra},
        key=lambda z: (z.real, z.imag),
    )
    rep = {}
    for label in labels:
        target = label
        for seen in rep.values():
            if abs(label - seen) <= tol * max(1.0, abs(seen)):
                target = seen
                break
        rep[label] = target
    if all(k == v for k, v in rep.items()):
        return mix
    return DyadMix(
        mix.modes,
        tuple(
            (c, tuple(rep[l] for l in ket), tuple(rep[l] for l in bra))
            for c, ket, bra in mix.terms
        ),
    )


def _partner_parity(seed_pairing: str, output_parity: str, policy: CascadePolicy) -> str:
    if policy.refresh_parity is not None:
        return policy.refresh_parity
    if seed_pairing == "even-odd":
        # keep the pairing opposite-parity: an odd output gets an even partner
        return "even" if output_parity == "odd" else "odd"
    return output_parity


def cascade_run(alpha: float, pairing: str, policy: CascadePolicy,
                checkpoint_dir: str | None = None) -> list:
    """Run a multi-stage amplification cascade from ideal seed inputs.

    Stage 1 mixes two ideal superpositions per ``pairing``; later stages
    pair the previous conditioned output per ``policy.input_rule``. The
    nominal amplitude grows by sqrt(2) each stage and each report carries
    the fidelity to the ideal amplified state of that stage plus success
    statistics (for exact conditioning the "probability" is the outcome
    density at the conditioning point). With ``checkpoint_dir`` set, each
    stage's conditioned state is dumped there as stage_<n>.json.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}")
    p1, p2 = PAIRINGS[pairing]
    left = as_dyad_mix(scs_state(alpha, p1))
    right = as_dyad_mix(scs_state(alpha, p2))

    reports = []
    stage_alpha = float(alpha)
    cumulative = 1.0
    output = None
    output_parity = None

    for stage in range(1, policy.stages + 1):
        if stage > 1:
            if policy.input_rule == "clone":
                left = output
                right = output
                partner_parity = output_parity
            else:
                partner_parity = _partner_parity(pairing, output_parity, policy)
                partner = as_dyad_mix(scs_state(stage_alpha, partner_parity))
                # fresh partner rides the first mode, as in the seed layout
                left, right = partner, output
            output_parity_next = (
                "odd" if {partner_parity, output_parity} == {"even", "odd"} else "even"
            )
        else:
            output_parity_next = "odd" if pairing == "even-odd" else "even"

        lossy_left = loss_channel(left, policy.loss_r2)
        lossy_right = loss_channel(right, policy.loss_r2)
        two_mode = beam_splitter_5050(tensor_mix(lossy_left, lossy_right), 0, 1)

        if policy.conditioning == "exact":
            output, prob = _exact_condition(two_mode, policy.x0)
        else:
            output, prob = _window_condition(two_mode, policy.window, policy.nodes)
        output = prune(_merge_close_labels(output), policy.prune_tol)
        if output.num_terms > policy.max_terms:
            raise TermBudgetExceeded(
                f"stage {stage} holds {output.num_terms} dyads "
                f"(cap {policy.max_terms}); raise the cap or prune harder"
            )
        output = normalized_mix(output)
        output_parity = output_parity_next

        target = scs_state(SQRT2 * stage_alpha, output_parity)
        fid = fidelity_with_pure(output, target)
        cumulative *= prob
        labels = sorted({l for _, ket, bra in output.terms for l in ket + bra},
                        key=lambda z: (z.real, z.imag))
        logger.debug(
            "stage %d: alpha_in=%.6g labels=%s", stage, stage_alpha,
            [f"{l.real:+.6g}{l.imag:+.6g}j" for l in labels],
        )
        reports.append(
            StageReport(
                stage=stage,
                input_alpha=stage_alpha,
                fidelity=fid,
                probability=prob,
                cumulative_probability=cumulative,
                term_count=output.num_terms,
            )
        )
        if checkpoint_dir is not None:
            target_dir = Path(checkpoint_dir)
            target_dir.mkdir(parents=True, exist_ok=True)
            (target_dir / f"stage_{stage}.json").write_text(state_to_json(output))
        stage_alpha *= SQRT2

    return reports
