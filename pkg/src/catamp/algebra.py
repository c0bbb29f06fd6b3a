"""Exact algebra over finite superpositions of coherent states.

States are kept symbolic: a pure state is a finite sum
``sum_i c_i |a_i1> x ... x |a_iM>`` of products of coherent states and a
mixed state is a finite weighted sum of coherent dyads ``|ket><bra|``.
Overlaps, beam splitting, homodyne projection and photon loss all act on
the complex labels in closed form, so nothing in this module truncates a
basis. Unnormalized states are first class; normalization is always an
explicit step.

All containers are immutable and every operation is a pure function.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

SQRT2 = math.sqrt(2.0)

# pi**-0.25, the peak of the vacuum quadrature wavefunction
PI_QUARTER_INV = math.pi ** -0.25

PARITY_SIGNS = {"even": 1.0, "odd": -1.0}


def _as_finite_complex(value, what: str) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite {what}: {value!r}")
    return z


def parity_sign(parity: str) -> float:
    try:
        return PARITY_SIGNS[parity]
    except KeyError:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}") from None


@dataclass(frozen=True)
class PureCSS:
    """Finite superposition of M-mode coherent products.

    ``terms`` is a sequence of ``(coeff, labels)`` pairs where ``labels``
    holds exactly ``modes`` complex coherent amplitudes.
    """

    modes: int
    terms: tuple

    def __post_init__(self):
        if not isinstance(self.modes, int) or self.modes < 1:
            raise ValueError(f"modes must be a positive integer, got {self.modes!r}")
        checked = []
        for coeff, labels in self.terms:
            labels = tuple(_as_finite_complex(l, "coherent label") for l in labels)
            if len(labels) != self.modes:
                raise ValueError(
                    f"term has {len(labels)} labels for a {self.modes}-mode state"
                )
            checked.append((_as_finite_complex(coeff, "coefficient"), labels))
        object.__setattr__(self, "terms", tuple(checked))

    @property
    def num_terms(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class DyadMix:
    """Finite weighted sum of coherent dyads ``|ket><bra|`` over M modes.

    Represents mixed or unnormalized operators exactly, e.g. states after
    photon loss. ``terms`` holds ``(coeff, ket_labels, bra_labels)``.
    """

    modes: int
    terms: tuple

    def __post_init__(self):
        if not isinstance(self.modes, int) or self.modes < 1:
            raise ValueError(f"modes must be a positive integer, got {self.modes!r}")
        checked = []
        for coeff, ket, bra in self.terms:
            ket = tuple(_as_finite_complex(l, "ket label") for l in ket)
            bra = tuple(_as_finite_complex(l, "bra label") for l in bra)
            if len(ket) != self.modes or len(bra) != self.modes:
                raise ValueError("dyad label count does not match mode count")
            checked.append((_as_finite_complex(coeff, "coefficient"), ket, bra))
        object.__setattr__(self, "terms", tuple(checked))

    @property
    def num_terms(self) -> int:
        return len(self.terms)


State = Union[PureCSS, DyadMix]


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------

def overlap_exponent(a: complex, b: complex) -> complex:
    """log <a|b> = -|a|^2/2 - |b|^2/2 + conj(a) b.

    The real part is <= 0 for any labels, so exponentials never overflow;
    summing exponents over modes before a single exp keeps large-amplitude
    products in the log domain.
    """
    return -0.5 * (abs(a) ** 2 + abs(b) ** 2) + a.conjugate() * b


def coherent_overlap(a, b) -> complex:
    """Overlap <a|b> of two coherent states, |<a|b>| <= 1."""
    return cmath.exp(overlap_exponent(complex(a), complex(b)))


def wavefunction_exponent(a: complex, x: float) -> complex:
    """log of <x|a> / pi^(-1/4) for quadrature x = (mode + mode')/sqrt(2)."""
    return -0.5 * x * x + SQRT2 * a * x - 0.5 * a * a - 0.5 * abs(a) ** 2


def quadrature_wavefunction(a, x: float) -> complex:
    """Position-quadrature wavefunction <x|a> of a coherent state.

    Equals ``pi**-0.25 * exp(-x^2/2 + sqrt(2) a x - a^2/2 - |a|^2/2)``,
    which for real ``a`` reduces to the familiar displaced Gaussian
    ``pi**-0.25 * exp(-(x - sqrt(2) a)^2 / 2)``.
    """
    return PI_QUARTER_INV * cmath.exp(wavefunction_exponent(complex(a), float(x)))


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------

def coherent_pure(*labels) -> PureCSS:
    """Single product state |a_1> x ... x |a_M>."""
    if not labels:
        raise ValueError("need at least one mode label")
    return PureCSS(len(labels), ((1.0 + 0j, tuple(complex(l) for l in labels)),))


def vacuum_state(modes: int = 1) -> PureCSS:
    return coherent_pure(*([0j] * modes))


def scs_normalization(alpha: float, parity: str) -> float:
    """Normalization (2 +- 2 exp(-2 alpha^2))^(-1/2) of |a> +- |-a>."""
    return (2.0 + 2.0 * parity_sign(parity) * math.exp(-2.0 * alpha * alpha)) ** -0.5


def scs_state(alpha: float, parity: str) -> PureCSS:
    """Normalized even/odd superposition of |alpha> and |-alpha>.

    The even state carries only even photon numbers, the odd state only
    odd ones; their overlap vanishes identically.
    """
    alpha = float(alpha)
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    n = scs_normalization(alpha, parity)
    sign = parity_sign(parity)
    return PureCSS(
        1,
        ((n + 0j, (complex(alpha),)), (sign * n + 0j, (complex(-alpha),))),
    )


# ---------------------------------------------------------------------------
# pure-state operations
# ---------------------------------------------------------------------------

def inner(u: PureCSS, v: PureCSS) -> complex:
    """Inner product <u|v>, bilinear over terms and conjugate symmetric."""
    if u.modes != v.modes:
        raise ValueError(f"mode mismatch: {u.modes} vs {v.modes}")
    total = 0j
    for cu, lu in u.terms:
        for cv, lv in v.terms:
            ex = 0j
            for a, b in zip(lu, lv):
                ex += overlap_exponent(a, b)
            total += cu.conjugate() * cv * cmath.exp(ex)
    return total


def norm2(u: PureCSS) -> float:
    """Squared norm <u|u>; clamps the tiny negative residue of rounding."""
    return max(inner(u, u).real, 0.0)


def scale(u: PureCSS, factor: complex) -> PureCSS:
    factor = complex(factor)
    return PureCSS(u.modes, tuple((c * factor, l) for c, l in u.terms))


def normalized(u: PureCSS) -> PureCSS:
    n2 = norm2(u)
    if n2 <= 0.0:
        raise ValueError("cannot normalize a state of zero norm")
    return scale(u, n2 ** -0.5)


def tensor(u: PureCSS, v: PureCSS) -> PureCSS:
    """Tensor product; term count multiplies and mode counts add."""
    return PureCSS(
        u.modes + v.modes,
        tuple((cu * cv, lu + lv) for cu, lu in u.terms for cv, lv in v.terms),
    )


def _check_mode(state: State, mode: int) -> None:
    if not isinstance(mode, int) or not 0 <= mode < state.modes:
        raise ValueError(f"mode index {mode!r} invalid for {state.modes} modes")


def _bs_map(labels, i: int, j: int):
    a, b = labels[i], labels[j]
    out = list(labels)
    out[i] = (a - b) / SQRT2
    out[j] = (a + b) / SQRT2
    return tuple(out)


def beam_splitter_5050(state: State, mode_i: int = 0, mode_j: int = 1) -> State:
    """Balanced beam splitter on modes (i, j).

    Acts on coherent labels as (a, b) -> ((a - b)/sqrt2, (a + b)/sqrt2)
    with coefficients untouched; this is the single sign convention used
    throughout the package. Unitary, so inner products are preserved.
    """
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    if isinstance(state, PureCSS):
        return PureCSS(
            state.modes,
            tuple((c, _bs_map(l, mode_i, mode_j)) for c, l in state.terms),
        )
    return DyadMix(
        state.modes,
        tuple(
            (c, _bs_map(k, mode_i, mode_j), _bs_map(b, mode_i, mode_j))
            for c, k, b in state.terms
        ),
    )


def homodyne_project(state: PureCSS, mode: int, x0: float):
    """Project ``mode`` onto the quadrature eigenbra <x0|.

    Returns the unnormalized reduced state (each term picks up the factor
    <x0|label>) together with the outcome density, the squared norm of the
    reduction. Integrating the density over all x0 gives 1 for normalized
    input.
    """
    _check_mode(state, mode)
    if state.modes < 2:
        raise ValueError("cannot project away the only mode")
    terms = []
    for c, labels in state.terms:
        amp = quadrature_wavefunction(labels[mode], x0)
        terms.append((c * amp, labels[:mode] + labels[mode + 1:]))
    reduced = PureCSS(state.modes - 1, tuple(terms))
    return reduced, norm2(reduced)


# ---------------------------------------------------------------------------
# dyad-mix operations
# ---------------------------------------------------------------------------

def as_dyad_mix(u: PureCSS) -> DyadMix:
    """Outer product |u><u| as an explicit dyad sum."""
    return DyadMix(
        u.modes,
        tuple(
            (ci * cj.conjugate(), li, lj)
            for ci, li in u.terms
            for cj, lj in u.terms
        ),
    )


def tensor_mix(a: DyadMix, b: DyadMix) -> DyadMix:
    return DyadMix(
        a.modes + b.modes,
        tuple(
            (ca * cb, ka + kb, ba + bb)
            for ca, ka, ba in a.terms
            for cb, kb, bb in b.terms
        ),
    )


def loss_channel(state: State, r2: float) -> DyadMix:
    """Pure photon loss of rate r2 on every mode.

    Dyads map as |a><b| -> exp(-r2 (|a|^2 + |b|^2)/2 + r2 conj(b) a)
    |ta><tb| with t = sqrt(1 - r2). The prefactor makes the map trace
    preserving term by term; for real labels (a, -a) it reduces to the
    coherence damping factor exp(-2 r2 a^2).
    """
    r2 = float(r2)
    if not 0.0 <= r2 < 1.0:
        raise ValueError(f"loss rate r2 must lie in [0, 1), got {r2}")
    mix = as_dyad_mix(state) if isinstance(state, PureCSS) else state
    if r2 == 0.0:
        return mix
    t = math.sqrt(1.0 - r2)
    terms = []
    for c, ket, bra in mix.terms:
        ex = 0j
        for a, b in zip(ket, bra):
            ex += r2 * (-0.5 * (abs(a) ** 2 + abs(b) ** 2) + b.conjugate() * a)
        terms.append(
            (
                c * cmath.exp(ex),
                tuple(t * a for a in ket),
                tuple(t * b for b in bra),
            )
        )
    return DyadMix(mix.modes, tuple(terms))


def trace(m: DyadMix) -> complex:
    """tr(m) = sum_terms c * <bra|ket>, real for physical operators."""
    total = 0j
    for c, ket, bra in m.terms:
        ex = 0j
        for k, b in zip(ket, bra):
            ex += overlap_exponent(b, k)
        total += c * cmath.exp(ex)
    return total


def _bra_state_ket_labels(state: PureCSS, labels) -> complex:
    """Amplitude <state| a_1 ... a_M > against one coherent product."""
    total = 0j
    for c, slabels in state.terms:
        ex = 0j
        for s, l in zip(slabels, labels):
            ex += overlap_exponent(s, l)
        total += c.conjugate() * cmath.exp(ex)
    return total


def fidelity_with_pure(m: DyadMix, target: PureCSS) -> float:
    """<target| m |target> / tr(m), the fidelity of m to a pure target."""
    if m.modes != target.modes:
        raise ValueError(f"mode mismatch: {m.modes} vs {target.modes}")
    tr = trace(m)
    if abs(tr) == 0.0:
        raise ValueError("fidelity undefined for an operator of zero trace")
    num = 0j
    for c, ket, bra in m.terms:
        num += c * _bra_state_ket_labels(target, ket) * _bra_state_ket_labels(target, bra).conjugate()
    return (num / tr).real


def homodyne_project_mixed(m: DyadMix, mode: int, x0: float):
    """Quadrature projection <x0| m |x0> on one mode of a dyad mix.

    Ket and bra labels pick up their wavefunction factors independently.
    Returns the unnormalized reduction and its trace (the outcome density).
    """
    _check_mode(m, mode)
    if m.modes < 2:
        raise ValueError("cannot project away the only mode")
    terms = []
    for c, ket, bra in m.terms:
        w = quadrature_wavefunction(ket[mode], x0) * quadrature_wavefunction(bra[mode], x0).conjugate()
        terms.append((c * w, ket[:mode] + ket[mode + 1:], bra[:mode] + bra[mode + 1:]))
    reduced = DyadMix(m.modes - 1, tuple(terms))
    return reduced, trace(reduced).real


def _label_key(labels):
    return tuple((l.real, l.imag) for l in labels)


def canonicalize(m: DyadMix) -> DyadMix:
    """Merge identical (ket, bra) dyads and sort terms deterministically.

    Term order is lexicographic on (Re, Im) pairs of the ket labels, then
    the bra labels, which keeps serialized output stable and stops term
    counts from growing without bound under repeated channel application.
    """
    merged = {}
    for c, ket, bra in m.terms:
        key = (_label_key(ket), _label_key(bra))
        if key in merged:
            prev_c, _, _ = merged[key]
            merged[key] = (prev_c + c, ket, bra)
        else:
            merged[key] = (c, ket, bra)
    terms = tuple(
        merged[key] for key in sorted(merged) if merged[key][0] != 0.0
    )
    return DyadMix(m.modes, terms)


def prune(m: DyadMix, tol: float) -> DyadMix:
    """Drop dyads whose coefficient magnitude falls below tol.

    Coherent dyads have unit operator norm, so |coeff| bounds each term's
    contribution and the total trace moves by less than tol * num_terms.
    """
    if tol < 0.0:
        raise ValueError("prune tolerance must be nonnegative")
    merged = canonicalize(m)
    kept = tuple(t for t in merged.terms if abs(t[0]) >= tol)
    if not kept:
        # keep the largest term so the operator stays representable
        kept = (max(merged.terms, key=lambda t: abs(t[0])),) if merged.terms else ()
    return DyadMix(m.modes, kept)


def conjugate_transpose(m: DyadMix) -> DyadMix:
    return DyadMix(m.modes, tuple((c.conjugate(), bra, ket) for c, ket, bra in m.terms))


def normalized_mix(m: DyadMix) -> DyadMix:
    tr = trace(m).real
    if tr <= 0.0:
        raise ValueError("cannot normalize a mix of nonpositive trace")
    return DyadMix(m.modes, tuple((c / tr, k, b) for c, k, b in m.terms))


# ---------------------------------------------------------------------------
# JSON serialization (debugging, cascade checkpoints)
# ---------------------------------------------------------------------------

def _c(z: complex):
    return [z.real, z.imag]


def state_to_json(state: State) -> str:
    if isinstance(state, PureCSS):
        obj = {
            "kind": "pure",
            "modes": state.modes,
            "terms": [
                {"coeff": _c(c), "labels": [_c(l) for l in labels]}
                for c, labels in state.terms
            ],
        }
    else:
        obj = {
            "kind": "mixed",
            "modes": state.modes,
            "terms": [
                {"coeff": _c(c), "ket": [_c(l) for l in ket], "bra": [_c(l) for l in bra]}
                for c, ket, bra in state.terms
            ],
        }
    return json.dumps(obj)


def state_from_json(text: str) -> State:
    obj = json.loads(text)
    modes = obj["modes"]
    if obj["kind"] == "pure":
        return PureCSS(
            modes,
            tuple(
                (complex(*t["coeff"]), tuple(complex(*l) for l in t["labels"]))
                for t in obj["terms"]
            ),
        )
    if obj["kind"] == "mixed":
        return DyadMix(
            modes,
            tuple(
                (
                    complex(*t["coeff"]),
                    tuple(complex(*l) for l in t["ket"]),
                    tuple(complex(*l) for l in t["bra"]),
                )
                for t in obj["terms"]
            ),
        )
    raise ValueError(f"unknown state kind {obj['kind']!r}")
