"""Brute-force number-basis oracle for the closed-form machinery.

Everything here works in a truncated Fock space with dense numpy arrays:
coherent vectors from the explicit series, the balanced beam splitter as
a matrix exponential of its generator, homodyne projection through
Hermite-function quadrature eigenvectors, and photon loss as an explicit
Kraus sum. None of it shares code with the label algebra, which is the
point: the two paths must agree to 1e-8 on the full pipeline.

Conventions: single-mode kets are 1-d arrays, single-mode density
operators (n, n) arrays, two-mode kets (n, n) arrays indexed [mode1,
mode2], and two-mode density operators (n, n, n, n) arrays indexed
[ket1, ket2, bra1, bra2].
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .algebra import SQRT2, parity_sign

DEFAULT_CUTOFF = 40
NORM_DEFICIT_TOL = 1e-10
KRAUS_WEIGHT_TOL = 1e-14


class FockCutoffError(ValueError):
    """Requested amplitude does not fit the truncated space accurately."""


def suggest_cutoff(max_abs_amp: float, start: int = DEFAULT_CUTOFF) -> int:
    """Smallest power-of-two escalation of ``start`` holding the tail.

    Doubles the cutoff until the truncated coherent norm deficit at the
    largest amplitude in play drops below 1e-10.
    """
    n = start
    while _norm_deficit(max_abs_amp, n) >= NORM_DEFICIT_TOL:
        n *= 2
        if n > 1 << 16:
            raise FockCutoffError(
                f"no reasonable cutoff holds amplitude {max_abs_amp}"
            )
    return n


def _log_factorials(n_cut: int) -> np.ndarray:
    return gammaln(np.arange(n_cut) + 1.0)


def _norm_deficit(abs_amp: float, n_cut: int) -> float:
    ns = np.arange(n_cut)
    log_terms = ns * 2.0 * np.log(max(abs_amp, 1e-300)) - _log_factorials(n_cut)
    return abs(1.0 - math.exp(-abs_amp * abs_amp) * np.exp(log_terms).sum())


def coherent_fock(a: complex, n_cut: int = DEFAULT_CUTOFF, check: bool = True) -> np.ndarray:
    """Coherent ket with entries exp(-|a|^2/2) a^n / sqrt(n!).

    Built by the recurrence v[n+1] = v[n] a / sqrt(n+1), which keeps sign
    alternation exact for real amplitudes (parity superpositions cancel
    to exactly zero). Raises :class:`FockCutoffError` when the truncation
    tail exceeds 1e-10 instead of silently returning a short vector.
    """
    if n_cut < 1:
        raise ValueError("cutoff must be at least 1")
    a = complex(a)
    vec = np.zeros(n_cut, dtype=complex)
    vec[0] = math.exp(-0.5 * abs(a) ** 2)
    for n in range(1, n_cut):
        vec[n] = vec[n - 1] * a / math.sqrt(n)
    if check:
        deficit = abs(1.0 - float(np.vdot(vec, vec).real))
        if deficit >= NORM_DEFICIT_TOL:
            raise FockCutoffError(
                f"norm deficit {deficit:.3e} at cutoff {n_cut} for |a|={abs(a):.3f}"
            )
    return vec


def scs_fock(alpha: float, parity: str, n_cut: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Normalized even/odd coherent superposition in the truncated basis."""
    v = coherent_fock(alpha, n_cut) + parity_sign(parity) * coherent_fock(-alpha, n_cut)
    return v / np.linalg.norm(v)


def annihilation(n_cut: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, n_cut)), k=1)


@lru_cache(maxsize=8)
def bs_unitary(n_cut: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Balanced beam-splitter unitary on the truncated two-mode space.

    exp((pi/4) (a b' - a' b)) rotates coherent labels by
    (a, b) -> ((a - b)/sqrt2, (a + b)/sqrt2), matching the label algebra.
    The generator is real antisymmetric, so the result is real orthogonal
    up to truncation slack.
    """
    a = annihilation(n_cut)
    gen = np.kron(a, a.T) - np.kron(a.T, a)
    return expm((math.pi / 4.0) * gen)


def bs_apply_5050(state: np.ndarray, n_cut: int | None = None) -> np.ndarray:
    """Apply the balanced beam splitter to a two-mode ket or density op."""
    if state.ndim == 2:
        n = state.shape[0]
        u = bs_unitary(n if n_cut is None else n_cut)
        return (u @ state.reshape(n * n)).reshape(n, n)
    if state.ndim == 4:
        n = state.shape[0]
        u = bs_unitary(n if n_cut is None else n_cut)
        rho = state.reshape(n * n, n * n)
        return (u @ rho @ u.T.conj()).reshape(n, n, n, n)
    raise ValueError("expected a two-mode ket (n, n) or density op (n, n, n, n)")


def quadrature_eigvec(x: float, n_cut: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Components <x|n> via the stable normalized Hermite recurrence.

    <x|n> = pi**-0.25 (2^n n!)**-0.5 H_n(x) exp(-x^2/2) for the quadrature
    x = (mode + mode')/sqrt(2).
    """
    h = np.zeros(n_cut)
    h[0] = math.pi ** -0.25 * math.exp(-0.5 * x * x)
    if n_cut > 1:
        h[1] = SQRT2 * x * h[0]
    for k in range(2, n_cut):
        h[k] = math.sqrt(2.0 / k) * x * h[k - 1] - math.sqrt((k - 1.0) / k) * h[k - 2]
    return h


def homodyne_project_fock(state: np.ndarray, mode: int, x: float):
    """Project one mode of a two-mode ket or density op onto <x|.

    Returns the unnormalized reduced single-mode object and the outcome
    density (squared norm for kets, trace for density operators).
    """
    if mode not in (0, 1):
        raise ValueError("mode must be 0 or 1")
    n = state.shape[0]
    hx = quadrature_eigvec(x, n)
    if state.ndim == 2:
        reduced = hx @ state if mode == 0 else state @ hx
        return reduced, float(np.vdot(reduced, reduced).real)
    if state.ndim == 4:
        if mode == 0:
            reduced = np.einsum("i,ikjl,j->kl", hx, state, hx)
        else:
            reduced = np.einsum("i,kilj,j->kl", hx, state, hx)
        return reduced, float(np.trace(reduced).real)
    raise ValueError("expected a two-mode ket (n, n) or density op (n, n, n, n)")


def loss_kraus_ops(r2: float, n_cut: int = DEFAULT_CUTOFF) -> list:
    """Kraus set of the photon-loss channel of rate r2.

    K_k = r^k t^N a^k / sqrt(k!) with t = sqrt(1 - r2); the set is
    truncated once the added weight falls below 1e-14. Trace preserving
    on the truncated space to 1e-10 for states that fit the cutoff.
    """
    if not 0.0 <= r2 < 1.0:
        raise ValueError(f"loss rate r2 must lie in [0, 1), got {r2}")
    t = math.sqrt(1.0 - r2)
    r = math.sqrt(r2)
    tn = np.diag(t ** np.arange(n_cut))
    a = annihilation(n_cut)
    ops = []
    a_pow = np.eye(n_cut)
    for k in range(n_cut):
        kraus = (r ** k * math.exp(-0.5 * gammaln(k + 1.0))) * (tn @ a_pow)
        weight = float(np.abs(kraus).max())
        if k > 0 and weight < KRAUS_WEIGHT_TOL:
            break
        ops.append(kraus)
        a_pow = a @ a_pow
    return ops


def loss_apply(state: np.ndarray, r2: float) -> np.ndarray:
    """Photon loss on a single-mode ket or density operator."""
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    if r2 == 0.0:
        return rho
    out = np.zeros_like(rho, dtype=complex)
    for kraus in loss_kraus_ops(r2, rho.shape[0]):
        out += kraus @ rho @ kraus.conj().T
    return out


def fidelity_fock(state: np.ndarray, target: np.ndarray) -> float:
    """Fidelity of a ket or density operator to a pure target ket."""
    if state.ndim == 1:
        overlap = np.vdot(target, state)
        return float(abs(overlap) ** 2 / (np.vdot(state, state).real))
    tr = float(np.trace(state).real)
    return float((target.conj() @ state @ target).real / tr)


class ProtocolOracle:
    """Full amplification pipeline in the truncated Fock space.

    Mirrors the amplification protocol end to end: build the two inputs,
    apply loss Kraus operators, mix on the beam splitter, project the
    measured mode at x0, and compare against the ideal amplified target.
    Lossless inputs follow the pure-ket path; lossy ones the density
    path, contracted without ever forming the two-mode density matrix.
    """

    def __init__(self, alpha: float, pairing: str, loss_r2: float = 0.0,
                 n_cut: int = DEFAULT_CUTOFF):
        from .protocol import PAIRINGS  # local import avoids a cycle

        if pairing not in PAIRINGS:
            raise ValueError(f"unknown pairing {pairing!r}")
        self.alpha = float(alpha)
        self.pairing = pairing
        self.loss_r2 = float(loss_r2)
        self.n_cut = int(n_cut)
        # the largest label after mixing is sqrt(2) * alpha
        coherent_fock(SQRT2 * self.alpha, self.n_cut)  # raises if cutoff too small

        p1, p2 = PAIRINGS[pairing]
        v1 = scs_fock(self.alpha, p1, self.n_cut)
        v2 = scs_fock(self.alpha, p2, self.n_cut)
        tgt_parity = "odd" if pairing == "even-odd" else "even"
        self.target = scs_fock(SQRT2 * self.alpha, tgt_parity, self.n_cut)
        self._u4 = bs_unitary(self.n_cut).reshape(
            self.n_cut, self.n_cut, self.n_cut, self.n_cut
        )
        if self.loss_r2 == 0.0:
            self._pure_out = np.tensordot(self._u4, np.outer(v1, v2), axes=2)
            self._rhos = None
        else:
            self._pure_out = None
            self._rhos = (loss_apply(v1, self.loss_r2), loss_apply(v2, self.loss_r2))

    def density_fidelity(self, x0: float):
        """Outcome density p(x0) and heralded fidelity F(x0)."""
        hx = quadrature_eigvec(x0, self.n_cut)
        if self._pure_out is not None:
            reduced = hx @ self._pure_out
            dens = float(np.vdot(reduced, reduced).real)
            overlap = np.vdot(self.target, reduced)
            return dens, float(abs(overlap) ** 2 / dens)
        rho1, rho2 = self._rhos
        # <x0| U (rho1 x rho2) U' |x0> contracted mode by mode
        proj = np.einsum("i,ikab->kab", hx, self._u4)
        half = np.einsum("kab,ac->kcb", proj, rho1)
        half = np.einsum("kcb,bd->kcd", half, rho2)
        rho_out = np.einsum("kcd,lcd->kl", half, proj.conj())
        dens = float(np.trace(rho_out).real)
        fid = float((self.target.conj() @ rho_out @ self.target).real / dens)
        return dens, fid


def displacement(beta: complex, n_cut: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Displacement operator exp(beta a' - conj(beta) a), dense."""
    a = annihilation(n_cut)
    return expm(beta * a.T.conj() - np.conjugate(beta) * a)


def parity_operator(n_cut: int = DEFAULT_CUTOFF) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(n_cut))


def wigner_fock(state: np.ndarray, beta: complex, n_cut: int | None = None) -> float:
    """Displaced-parity value (2/pi) tr[D(-beta) rho D(beta) P].

    Reference evaluation used to validate the closed-form phase-space
    kernel; slow but direct.
    """
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    n = rho.shape[0] if n_cut is None else n_cut
    d = displacement(beta, n)
    val = np.trace(d.conj().T @ rho @ d @ parity_operator(n))
    return float((2.0 / math.pi) * val.real)
