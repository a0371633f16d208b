"""Closed-form recursive scattering solution for piecewise-constant potentials.

Inside a layer of constant value ``V != 0`` the cutoff reflection amplitude is

    R(x) = [2k^2/V - 1 + 2ik p/V * (1 + A e^{-2px}) / (1 - A e^{-2px})] e^{2ikx}

with ``p = sqrt(V - k^2)`` (or ``i sqrt(k^2 - V)`` above the layer).  The
constants ``A_j`` follow from continuity of ``R`` at each breakpoint, sweeping
right to left from ``A_{n+1} = 0``.  Layers with ``V = 0`` carry a constant
``R(x) = C_j`` instead.

Numerically we never form ``A_j`` itself.  Each layer stores the scaled
coefficient ``B_j = A_j exp(-2 p_j b_j)`` (``b_j`` its right edge), so that
``A_j e^{-2 p_j x} = B_j exp(2 p_j (b_j - x))``.  That product is handled
through its complex logarithm, and the Mobius value ``(1+X)/(1-X)`` enters
only as ``X/(1-X) = 1/expm1(-log X)``; no intermediate overflows however wide
or tall a layer is.  The matching formulas are rearranged so that no terms
cancel when a layer value is small next to the energy or when the energy sits
next to a layer value (``p -> 0``).  The transmission amplitude is accumulated
as a complex logarithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import StepProfile

NUDGE = 1e-12
# layer values below this are treated as zero: their effect is far below double
# precision, while their squares and cubes in the matching formulas would underflow
TINY_VALUE = 1e-100


class RecursionPoleError(ArithmeticError):
    """A recursion denominator vanished (a pole of the scattering amplitude)."""

    def __init__(self, layer: int, energy: float):
        super().__init__(f"vanishing denominator in layer {layer} at E={energy!r}")
        self.layer = layer
        self.energy = energy


def nudge_energy(E, values):
    """Move energies off exact layer values, where the layer momentum vanishes.

    An energy within ``1e-12 * max(1, |V_j|)`` of some ``V_j`` is replaced by
    ``E * (1 + 1e-12)`` (doubling the offset until it is clear).
    """
    E = np.array(E, dtype=float, ndmin=1)
    v = np.unique(np.asarray(values, dtype=float))
    if v.size == 0:
        return E
    out = E.copy()
    for t in range(64):
        idx = np.clip(np.searchsorted(v, out), 1, v.size - 1) if v.size > 1 else np.zeros(out.shape, int)
        cand = np.stack([v[idx - 1], v[idx]]) if v.size > 1 else v[idx][None]
        gap = np.abs(out[None, :] - cand)
        bad = np.any(gap < NUDGE * np.maximum(1.0, np.abs(cand)), axis=0)
        if not bad.any():
            break
        out[bad] = E[bad] * (1.0 + NUDGE * 2.0**t)
    return out


def layer_momentum(E, V):
    """Layer momentum ``p``: ``sqrt(V - E)`` below the layer, ``i sqrt(E - V)`` above.

    >>> layer_momentum(2.0, 1.0)
    1j
    """
    scalar = np.ndim(E) == 0 and np.ndim(V) == 0
    E = nudge_energy(E, np.atleast_1d(V)) if scalar else np.asarray(E, dtype=float)
    d = np.asarray(V, dtype=float) - E
    p = np.where(d > 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))
    return complex(p.reshape(-1)[0]) if scalar else p


def _x_ratio(log_x):
    """``X / (1 - X)`` for ``X = exp(log_x)`` without overflow.

    The Mobius value ``(1 + X) / (1 - X)`` of the layer formulas is
    ``1 + 2 X / (1 - X)``; keeping the ratio avoids cancelling the 1 against
    other terms when the layer value is small next to the energy.
    """
    # below e^-700 the ratio is negligible next to every other term
    clipped = np.maximum(log_x.real, -700.0) + 1j * log_x.imag
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / np.expm1(-clipped)


def _log1m(log_x):
    """Complex ``log(1 - X)`` for ``X = exp(log_x)``; the branch is irrelevant to callers.

    Written with expm1 so that ``X`` close to 1 loses nothing.
    """
    flip = log_x.real > 0
    y = np.where(flip, -log_x, log_x)
    with np.errstate(divide="ignore", invalid="ignore"):
        core = np.log(-np.expm1(y))
    # 1 - X = X (1/X - 1) when |X| > 1
    return np.where(flip, log_x + core + 1j * np.pi, core)


def _clog1p(z):
    """Complex ``log(1 + z)`` accurate for small ``z`` (numpy's loses the real part)."""
    x, y = z.real, z.imag
    return 0.5 * np.log1p(x * (2.0 + x) + y * y) + 1j * np.arctan2(y, 1.0 + x)


def _log(z):
    with np.errstate(divide="ignore"):
        return np.log(z)


def _reflection_factor(ik, p, V, q):
    """``R(x) e^{-2ikx}`` inside a layer of value ``V`` given ``q = X / (1 - X)``.

    This is ``2k^2/V - 1 + 2ikpM/V`` with ``2k^2 - V + 2ikp = -(p - ik)^2``
    and ``p - ik = V / (p + ik)`` substituted, so no terms cancel as V -> 0.
    """
    return -V / (p + ik) ** 2 + 4.0 * ik * p * q / V


def _recurse(b, V, E, keep=False):
    """Backward sweep over layers for a vector of (already nudged) energies.

    Returns the reflection amplitude at ``b[0]``, the log transmission
    amplitude and ln|A| of the first non-zero layer; with ``keep`` also the
    per-layer arrays ``p``, ``B``, ``C`` and log transmission factors, each
    shaped (energies, layers).
    """
    n = V.size
    m = E.size
    k = np.sqrt(E)
    ik = 1j * k
    w = np.diff(b)
    d = V[:, None] - E[None, :]
    P = np.where(d > 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))  # (n, m)
    two_pw = 2.0 * P * w[:, None]
    LB = np.full((n, m), -np.inf + 0j)
    LI = np.zeros((n, m), dtype=complex)  # log(1/B - 1)
    Cs = np.full((n, m), np.nan + 0j) if keep else None
    PK = P + ik
    # state-independent parts of the matching between non-zero neighbours j, j+1,
    # with p - ik = V / (p + ik) and p_j - p_{j+1} = (V_j - V_{j+1}) / (p_j + p_{j+1})
    # substituted so nothing cancels when a layer value is small next to E
    vl, vr = V[:-1, None], V[1:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        N0 = vl * vr * (vl - vr) / ((P[:-1] + P[1:]) * PK[:-1] * PK[1:])
        D0 = vl * vr / PK[1:] + vr * PK[:-1]
    T0 = 2.0 * vl * P[1:]

    def edge_reflection(j, pj, mj):
        # R at the left edge b[j] of non-zero layer j
        return _reflection_factor(ik, pj, V[j], mj) * np.exp(2.0 * ik * b[j])

    r_edge = np.zeros(m, dtype=complex)  # R at the current boundary, seen from the right
    right = None  # (index, momentum, X/(1-X) at its left edge) of a non-zero right neighbour
    q = None
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        for j in range(n - 1, -1, -1):
            vj = V[j]
            if vj == 0.0:
                if right is not None:
                    r_edge = edge_reflection(*right)
                    right = None
                if keep:
                    Cs[j] = r_edge
                continue
            if right is None:
                # zero-potential neighbour: continuity with R = C_{j+1}
                pk = PK[j]
                c = r_edge * np.exp(-2.0 * ik * b[j + 1])
                num = vj * (c + vj / pk**2)
                den = vj * c + pk**2
                inv = 4.0 * ik * P[j] / num
            else:
                tail = T0[j] * q
                num = N0[j] + tail
                den = D0[j] + tail
                inv = 2.0 * P[j] * V[j + 1] / num
            # inv = 1/B - 1 in closed form; it is small when p_j is, where B -> 1
            small = np.abs(inv) < 0.5
            log_b = np.where(small, -_clog1p(np.where(small, inv, 0.0)), np.log(num / den))
            LI[j] = np.log(inv)
            LB[j] = log_b
            q = _x_ratio(log_b + two_pw[j])
            right = (j, P[j], q)
        if right is not None:
            r_edge = edge_reflection(*right)

    bad = np.isnan(LB) | (LB.real == np.inf)
    if bad.any():
        j, i = np.argwhere(bad)[-1]
        raise RecursionPoleError(int(j) + 1, float(E[i]))

    nonzero = V != 0
    P[~nonzero] = ik
    if nonzero.any():
        Pn, LBn = P[nonzero], LB[nonzero]
        LF = np.zeros((n, m), dtype=complex)
        # log(1 - B): the closed form near B = 1, direct when |B| is small (B = 0 exactly at a zero of A_1)
        with np.errstate(invalid="ignore"):
            log_1mb = np.where(LBn.real < -1.0, _log1m(np.minimum(LBn.real, -1.0) + 1j * LBn.imag), LI[nonzero] + LBn)
        LF[nonzero] = V[nonzero, None] / (Pn + ik) * w[nonzero, None] + log_1mb - _log1m(LBn + two_pw[nonzero])
        # sequential sum: identical results for one energy or a batch
        log_t = np.cumsum(LF, axis=0)[-1]
        first = int(np.argmax(nonzero))
        ln_a1 = LB[first].real + 2.0 * P[first].real * b[first + 1]
    else:
        LF = np.zeros((n, m), dtype=complex)
        log_t = np.zeros(m, dtype=complex)
        ln_a1 = np.full(m, np.nan)

    out = {"R": r_edge, "log_T": log_t, "ln_a1": ln_a1}
    if keep:
        with np.errstate(over="ignore"):
            B = np.where(nonzero[:, None], np.exp(LB), 0j)
        out.update(p=P.T, B=B.T, C=Cs.T, log_factor=LF.T, log_B=LB.T)
    return out


@dataclass(frozen=True, eq=False)
class LayerCoefficients:
    """Solver state at one energy for the merged (normalized) profile.

    ``scaled_a[j]`` is ``A_j exp(-2 p_j b_j)`` for non-zero layers (0 for zero
    layers); ``c[j]`` is the constant cutoff reflection amplitude of a zero
    layer (nan elsewhere).  ``log_factor[j]`` is the log of layer j's
    contribution to the transmission amplitude.
    """

    profile: StepProfile
    energy: float
    k: float
    p: np.ndarray
    scaled_a: np.ndarray
    c: np.ndarray
    log_factor: np.ndarray
    R: complex
    log_T: complex
    ln_a1: float
    log_scaled_a: np.ndarray | None = None

    @property
    def a1_abs(self) -> float:
        return float(np.exp(self.ln_a1))

    @property
    def breakpoints(self) -> np.ndarray:
        return self.profile.breakpoints

    @property
    def values(self) -> np.ndarray:
        return self.profile.values


@dataclass(frozen=True)
class ScatteringResult:
    """Reflection/transmission at one energy; ``T`` is kept as its logarithm."""

    energy: float
    R: complex
    log_T: complex
    ln_a1: float

    @property
    def T(self) -> complex:
        if self.log_T.real == -np.inf:
            return 0j
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

    @property
    def a1_abs(self) -> float:
        return float(np.exp(self.ln_a1))


def _check_energy(E):
    E = np.asarray(E, dtype=float)
    if np.any(~np.isfinite(E)) or np.any(E <= 0):
        raise ValueError("energies must be finite and positive")
    return E


def _working_profile(profile: StepProfile) -> StepProfile:
    v = profile.values
    tiny = (v != 0) & (np.abs(v) < TINY_VALUE)
    if tiny.any():
        profile = StepProfile(profile.breakpoints, np.where(tiny, 0.0, v))
    return profile.normalized()


def compute_coefficients(profile: StepProfile, E: float) -> LayerCoefficients:
    """Run the layer recursion at energy ``E`` and keep every coefficient."""
    _check_energy(E)
    prof = _working_profile(profile)
    e = nudge_energy(E, prof.values)
    res = _recurse(prof.breakpoints, prof.values, e, keep=True)
    return LayerCoefficients(
        profile=prof,
        energy=float(e[0]),
        k=float(np.sqrt(e[0])),
        p=res["p"][0],
        scaled_a=res["B"][0],
        c=res["C"][0],
        log_factor=res["log_factor"][0],
        R=complex(res["R"][0]),
        log_T=complex(res["log_T"][0]),
        ln_a1=float(res["ln_a1"][0]),
        log_scaled_a=res["log_B"][0],
    )


def _locate(coeffs: LayerCoefficients, x):
    return np.searchsorted(coeffs.breakpoints, x, side="right") - 1


def _log_b(coeffs: LayerCoefficients, j):
    if coeffs.log_scaled_a is not None:
        return coeffs.log_scaled_a[j]
    return _log(coeffs.scaled_a[j])


def layer_reflection(coeffs: LayerCoefficients, j, x):
    """Closed-form R(x) of layer ``j`` at ``x`` (analytically continued past its edges)."""
    x = np.asarray(x, dtype=float)
    j = np.broadcast_to(np.asarray(j), x.shape)
    b, V = coeffs.breakpoints, coeffs.values
    k = coeffs.k
    ik = 1j * k
    out = np.empty(x.shape, dtype=complex)
    zero = V[j] == 0
    out[zero] = coeffs.c[j[zero]]
    nz = ~zero
    jj = j[nz]
    xs = x[nz]
    p = coeffs.p[jj]
    log_x = _log_b(coeffs, jj) + 2.0 * p * (b[jj + 1] - xs)
    out[nz] = _reflection_factor(ik, p, V[jj], _x_ratio(log_x)) * np.exp(2.0 * ik * xs)
    return out


def cutoff_reflection_at(coeffs: LayerCoefficients, x):
    """Cutoff reflection amplitude R_E(x): the reflection of the potential right of ``x``.

    Constant ``R`` left of the profile and 0 right of it.
    """
    x = np.asarray(x, dtype=float)
    n = coeffs.values.size
    j = _locate(coeffs, x)
    out = np.zeros(x.shape, dtype=complex)
    out[j < 0] = coeffs.R
    inside = (j >= 0) & (j < n)
    out[inside] = layer_reflection(coeffs, j[inside], x[inside])
    return out if out.ndim else complex(out)


def transmission(coeffs: LayerCoefficients) -> ScatteringResult:
    return ScatteringResult(coeffs.energy, coeffs.R, coeffs.log_T, coeffs.ln_a1)


def layer_wavefunction(coeffs: LayerCoefficients, j, x, incident_amplitude: complex = 1.0):
    """Closed-form psi of layer ``j`` at ``x`` (analytically continued past its edges).

    ``j = -1`` and ``j = n`` select the free regions on either side.
    """
    x = np.asarray(x, dtype=float)
    j = np.broadcast_to(np.asarray(j), x.shape)
    b, V = coeffs.breakpoints, coeffs.values
    n = V.size
    k = coeffs.k
    ik = 1j * k
    log_prefix = np.concatenate(([0j], np.cumsum(coeffs.log_factor)))
    out = np.empty(x.shape, dtype=complex)

    left = j < 0
    out[left] = np.exp(ik * x[left]) + coeffs.R * np.exp(-ik * x[left])
    right = j >= n
    out[right] = np.exp(coeffs.log_T + ik * x[right]) if coeffs.log_T.real > -np.inf else 0.0
    inside = ~(left | right)
    zero = inside & (V[np.clip(j, 0, n - 1)] == 0)
    jz = j[zero]
    out[zero] = np.exp(log_prefix[jz]) * (np.exp(ik * x[zero]) + coeffs.c[jz] * np.exp(-ik * x[zero]))

    nz = inside & ~zero
    jj = j[nz]
    xs = x[nz]
    p = coeffs.p[jj]
    log_b = _log_b(coeffs, jj)
    log_x = log_b + 2.0 * p * (b[jj + 1] - xs)
    log_x0 = log_b + 2.0 * p * (b[jj + 1] - b[jj])
    amp = log_prefix[jj] + V[jj] / (p + ik) * (xs - b[jj]) + _log1m(log_x) - _log1m(log_x0)
    # (2k/V)(k + ipM) with k + ip = iV/(p + ik)
    bracket = np.exp(ik * xs) * (2.0 * ik / (p + ik) + 4.0 * ik * p * _x_ratio(log_x) / V[jj])
    out[nz] = np.exp(amp) * bracket
    return incident_amplitude * out


def wavefunction(coeffs: LayerCoefficients, grid, incident_amplitude: complex = 1.0):
    """Scattering wave function for a wave ``A e^{ikx}`` incident from the left.

    Left of the profile ``A (e^{ikx} + R e^{-ikx})``, right of it
    ``A T e^{ikx}``, and inside layer j the closed form built from the
    cumulative transmission factors of layers 1..j-1.
    """
    if incident_amplitude == 0:
        raise ValueError("incident amplitude must be non-zero")
    x = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("grid points must be finite")
    return layer_wavefunction(coeffs, _locate(coeffs, x), x, incident_amplitude)


def scatter(profile: StepProfile, E: float) -> ScatteringResult:
    """Reflection and transmission amplitudes of ``profile`` at energy ``E``."""
    _check_energy(E)
    prof = _working_profile(profile)
    e = nudge_energy(E, prof.values)
    res = _recurse(prof.breakpoints, prof.values, e)
    return ScatteringResult(float(e[0]), complex(res["R"][0]), complex(res["log_T"][0]), float(res["ln_a1"][0]))


@dataclass(frozen=True)
class ScatteringBatch:
    """Vectorized scattering results over an array of energies."""

    energies: np.ndarray
    R: np.ndarray
    log_T: np.ndarray
    ln_a1: np.ndarray

    @property
    def ln_P_T(self) -> np.ndarray:
        return 2.0 * self.log_T.real

    @property
    def P_T(self) -> np.ndarray:
        return np.exp(self.ln_P_T)

    @property
    def P_R(self) -> np.ndarray:
        return np.abs(self.R) ** 2


def scatter_many(profile: StepProfile, energies, chunk: int | None = None) -> ScatteringBatch:
    """``scatter`` over many energies at once (vectorized across energies)."""
    E = _check_energy(np.atleast_1d(np.asarray(energies, dtype=float)))
    prof = _working_profile(profile)
    e = nudge_energy(E, prof.values)
    chunk = chunk or max(1, len(e))
    parts = [_recurse(prof.breakpoints, prof.values, e[i : i + chunk]) for i in range(0, len(e), chunk)]
    cat = {key: np.concatenate([part[key] for part in parts]) for key in ("R", "log_T", "ln_a1")}
    return ScatteringBatch(e, cat["R"], cat["log_T"], cat["ln_a1"])


def continuity_defects(coeffs: LayerCoefficients, h: float = 1e-4) -> tuple[float, float]:
    """Largest jumps of psi and psi' across the breakpoints, relative to their peak sizes.

    Each side is the closed form of its own layer continued onto the
    breakpoint; derivatives are fourth-order central differences of those
    continuations with step ``h``.
    """
    b = coeffs.breakpoints
    j_left = np.arange(-1, b.size - 1)
    j_right = j_left + 1

    def slope(j):
        f = lambda s: layer_wavefunction(coeffs, j, b + s * h)  # noqa: E731
        return (f(-2) - 8 * f(-1) + 8 * f(1) - f(2)) / (12 * h)

    psi_l = layer_wavefunction(coeffs, j_left, b)
    psi_r = layer_wavefunction(coeffs, j_right, b)
    d_l, d_r = slope(j_left), slope(j_right)
    psi_scale = max(np.max(np.abs(psi_l)), np.max(np.abs(psi_r)), np.finfo(float).tiny)
    d_scale = max(np.max(np.abs(d_l)), np.max(np.abs(d_r)), np.finfo(float).tiny)
    return float(np.max(np.abs(psi_l - psi_r)) / psi_scale), float(np.max(np.abs(d_l - d_r)) / d_scale)
