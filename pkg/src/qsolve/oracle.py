"""Reference solvers used to check the recursion: transfer matrices and closed forms.

Nothing here is shared with :mod:`qsolve.recursion` beyond the profile type,
so agreement between the two is evidence rather than tautology.

The wave function is propagated through each layer as the pair
``(psi, psi')``.  A layer of width ``w`` with ``q^2 = E - V`` maps the pair at
its right edge to its left edge by the unimodular matrix
``[[cos qw, -sin(qw)/q], [q sin qw, cos qw]]``, whose entries are entire in
``q^2`` and so stay well conditioned at ``E = V``.  Opaque layers have
``e^{|q| w}`` factored out into a log scale.  The free regions are written as
``a exp(ik(x - x0)) + b exp(-ik(x - x0))`` with ``x0`` the region's left
edge, and the transfer matrix maps the right free coefficients onto the left
ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import StepProfile

_DEGENERATE = 1e-12


def _clear_of_levels(E: float, values) -> float:
    e = float(E)
    for t in range(64):
        if not any(abs(e - v) < _DEGENERATE * max(1.0, abs(v)) for v in values):
            return e
        e = float(E) * (1.0 + _DEGENERATE * 2.0**t)
    return e


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 matrix ``exp(log_scale) * [[m11, m12], [m21, m22]]``."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex
    log_scale: float = 0.0

    @property
    def det(self) -> complex:
        return (self.m11 * self.m22 - self.m12 * self.m21) * np.exp(2.0 * self.log_scale)

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])


def _layer(E: float, V: float, w: float) -> tuple[np.ndarray, float]:
    """Right-edge to left-edge map of ``(psi, psi')`` across one layer, and its log scale."""
    d = V - E
    if d > 0:
        kappa = np.sqrt(d)
        g = -np.expm1(-2.0 * kappa * w)  # 1 - e^{-2 kappa w}; cosh, sinh carry e^{kappa w}
        c = 1.0 - 0.5 * g
        m = np.array([[c, -0.5 * g / kappa], [-0.5 * kappa * g, c]], dtype=complex)
        return m, kappa * w
    q = np.sqrt(-d)
    s = np.sin(q * w)
    sinc = s / q if q > 0 else w
    c = np.cos(q * w)
    return np.array([[c, -sinc], [q * s, c]], dtype=complex), 0.0


def _propagate(profile: StepProfile, E: float) -> tuple[np.ndarray, float]:
    """Product of the layer maps, left layer first, renormalized with its log scale."""
    M = np.eye(2, dtype=complex)
    log_scale = 0.0
    for V, w in zip(profile.values, np.diff(profile.breakpoints)):
        m, ls = _layer(E, float(V), float(w))
        M = M @ m
        s = np.max(np.abs(M))
        M /= s
        log_scale += ls + np.log(s)
    return M, log_scale


def _free_basis(k: float) -> np.ndarray:
    # columns: (psi, psi') of e^{ik(x - x0)} and e^{-ik(x - x0)} at x0
    return np.array([[1.0, 1.0], [1j * k, -1j * k]])


def transfer_matrix(profile: StepProfile, E: float) -> tuple[TransferMatrix, float]:
    """Total transfer matrix of ``profile`` and the (possibly nudged) energy used."""
    E = _clear_of_levels(E, profile.values)
    k = np.sqrt(E)
    M, log_scale = _propagate(profile, E)
    W = _free_basis(k)
    T = np.linalg.solve(W, M @ W)
    return TransferMatrix(T[0, 0], T[0, 1], T[1, 0], T[1, 1], log_scale), E


@dataclass(frozen=True)
class OracleResult:
    energy: float
    R: complex
    log_T: complex

    @property
    def T(self) -> complex:
        return complex(np.exp(self.log_T))

    @property
    def P_R(self) -> float:
        return abs(self.R) ** 2

    @property
    def ln_P_T(self) -> float:
        return 2.0 * self.log_T.real

    @property
    def P_T(self) -> float:
        return float(np.exp(self.ln_P_T))


def tm_scatter(profile: StepProfile, E: float) -> OracleResult:
    """Reflection and transmission amplitudes by transfer-matrix composition."""
    if not E > 0:
        raise ValueError("energy must be positive")
    tm, E = transfer_matrix(profile, E)
    k = np.sqrt(E)
    b0, bn = profile.breakpoints[0], profile.breakpoints[-1]
    # left region: e^{ikx} + R e^{-ikx};  right region: T e^{ikx}
    log_T = 1j * k * (b0 - bn) - np.log(tm.m11) - tm.log_scale
    R = tm.m21 / tm.m11 * np.exp(2j * k * b0)
    return OracleResult(E, complex(R), complex(log_T))


def single_barrier_pt(V: float, w: float, E: float) -> float:
    """Textbook transmission probability of a rectangular barrier of height V, width w."""
    if not (V > 0 and w > 0 and E > 0):
        raise ValueError("need V > 0, w > 0 and E > 0")
    E = _clear_of_levels(E, [V])
    if E < V:
        kappa = np.sqrt(V - E)
        x = kappa * w
        if x > 350:
            return 0.0
        s2 = np.sinh(x) ** 2
    else:
        s2 = np.sin(np.sqrt(E - V) * w) ** 2
    return float(1.0 / (1.0 + V * V * s2 / (4.0 * E * abs(V - E))))


def tm_ln_a1(profile: StepProfile, E: float) -> float:
    """ln|A_1| of the first non-zero layer from the wave function propagated through it.

    In that layer the wave function is ``(k + ip) e^{px} - (k - ip) A e^{-px}``
    up to a constant, with ``p = sqrt(V - E)`` (``i sqrt(E - V)`` above the
    layer), so ``A`` follows from the ratio of the decaying and growing
    parts.  The ratio is formed at whichever edge of the layer it is closer
    to 1 in magnitude (its relative error is ``eps max(|r|, 1/|r|)``), and the
    two edges differ by the exact factor ``e^{2pw}``.  nan for an all-zero
    profile.

    Both parts are O(1) while ``A`` is O(V) for a nearly free first layer, so
    the absolute error in ln|A| grows like ``eps E / |V_1|``; the recursion
    keeps full accuracy there.
    """
    prof = profile.normalized()
    nz = np.flatnonzero(prof.values != 0)
    if nz.size == 0:
        return float("nan")
    f = int(nz[0])
    E = _clear_of_levels(E, prof.values)
    k = np.sqrt(E)
    v = float(prof.values[f])
    p = np.sqrt(v - E) + 0j if v > E else 1j * np.sqrt(E - v)
    b = prof.breakpoints

    def log_ratio(start):
        # psi = g e^{p(x-x0)} + d e^{-p(x-x0)}: ln|d/g| at breakpoint ``start``
        if start < prof.n_layers:
            M, _ = _propagate(StepProfile(b[start:], prof.values[start:]), E)
            psi, dpsi = M @ _free_basis(k)[:, 0]
        else:
            psi, dpsi = 1.0, 1j * k
        return np.log(abs((p * psi - dpsi) / (p * psi + dpsi)))

    left = log_ratio(f)
    right = log_ratio(f + 1)
    # ln|d/g| referred to the left edge x0
    at_x0 = right + 2.0 * p.real * (b[f + 1] - b[f]) if abs(right) < abs(left) else left
    # k + ip = iV/(p + ik) and k - ip = -i(p + ik): exact forms, no cancellation for small V
    return float(at_x0 + 2.0 * p.real * b[f] + np.log(abs(v)) - 2.0 * np.log(abs(p + 1j * k)))