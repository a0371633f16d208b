"""Energy sweeps and location of quasi-bound resonances.

A resonance shows up both as a sharp dip of ln|A_1| (the decaying-wave
coefficient in the first barrier layer) and as a peak of ln P_T.  Candidates
are grid-level local extrema of either curve; each is refined by
golden-section search on the continuous objective.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.signal import peak_prominences

from .profile import StepProfile
from .recursion import scatter_many

Detector = Literal["a1_dip", "pt_peak"]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEPTH_THRESHOLD = 2.0
# brackets shrink well past tol_e: |A_1| vanishes linearly at a sharp resonance, so the
# point reported must sit much closer to the zero than the tolerance for the dip to show
REFINE_FACTOR = 1e-3
CHUNK = 256


class ResonanceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    energies: np.ndarray
    p_t: np.ndarray
    ln_pt: np.ndarray
    ln_a1: np.ndarray
    profile_digest: str

    def __post_init__(self):
        n = len(self.energies)
        if not (len(self.p_t) == len(self.ln_pt) == len(self.ln_a1) == n):
            raise ValueError("spectrum columns differ in length")
        if np.any(np.diff(self.energies) <= 0):
            raise ValueError("spectrum energies must be strictly increasing")

    def objective(self, detector: Detector) -> np.ndarray:
        return _objective_from(self.ln_a1, self.ln_pt, detector)

    def to_csv(self) -> str:
        rows = ["E,P_T,ln_PT,ln_abs_A1"]
        for e, pt, lpt, la in zip(self.energies, self.p_t, self.ln_pt, self.ln_a1):
            rows.append(f"{e:.17g},{pt:.17g},{lpt:.17g},{la:.17g}")
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class Resonance:
    energy: float
    ln_a1_min: float
    ln_pt: float
    detector: str
    refinement_width: float


def _objective_from(ln_a1, ln_pt, detector):
    if detector == "a1_dip":
        return np.asarray(ln_a1, dtype=float)
    if detector == "pt_peak":
        return -np.asarray(ln_pt, dtype=float)
    raise ValueError(f"unknown detector {detector!r}; use 'a1_dip' or 'pt_peak'")


def _threads() -> int:
    env = os.environ.get("QSOLVE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _evaluate(profile: StepProfile, energies: np.ndarray):
    chunks = [energies[i : i + CHUNK] for i in range(0, len(energies), CHUNK)]
    workers = min(_threads(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: scatter_many(profile, c), chunks))
    else:
        parts = [scatter_many(profile, c) for c in chunks]
    ln_pt = np.concatenate([p.ln_P_T for p in parts])
    ln_a1 = np.concatenate([p.ln_a1 for p in parts])
    return ln_pt, ln_a1


def spectrum_at(profile: StepProfile, energies) -> Spectrum:
    """Spectrum on an arbitrary strictly increasing energy grid."""
    E = np.asarray(energies, dtype=float)
    ln_pt, ln_a1 = _evaluate(profile.normalized(), E)
    return Spectrum(E, np.exp(ln_pt), ln_pt, ln_a1, profile.digest())


def sweep(profile: StepProfile, e_min: float, e_max: float, points: int) -> Spectrum:
    """Evaluate P_T and ln|A_1| on a uniform grid of ``points`` energies."""
    if not 0 < e_min < e_max:
        raise ValueError("need 0 < e_min < e_max")
    if points < 2:
        raise ValueError("need at least two points")
    return spectrum_at(profile, np.linspace(e_min, e_max, int(points)))


def resonance_objective(profile: StepProfile, E, detector: Detector = "a1_dip"):
    """ln|A_1| (a1_dip) or -ln P_T (pt_peak) at ``E``; nan for an all-zero profile."""
    batch = scatter_many(profile, np.atleast_1d(E))
    out = _objective_from(batch.ln_a1, batch.ln_P_T, detector)
    return float(out[0]) if np.ndim(E) == 0 else out


def golden_section(f: Callable, lo, hi, tol: float):
    """Vectorized golden-section search for minima of ``f`` on brackets ``[lo, hi]``.

    ``f`` maps an array of abscissae to an array of values.  All brackets
    shrink in lockstep until each is at most ``tol`` wide (or stops shrinking
    at floating-point resolution).  Returns the final ``(lo, hi)``.
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc = np.asarray(f(c), dtype=float)
    fd = np.asarray(f(d), dtype=float)
    while True:
        active = np.flatnonzero((hi - lo > tol) & (c < d))
        if active.size == 0:
            break
        left = fc[active] <= fd[active]
        L, R = active[left], active[~left]
        hi[L] = d[L]
        d[L], fd[L] = c[L], fc[L]
        c[L] = hi[L] - INV_PHI * (hi[L] - lo[L])
        lo[R] = c[R]
        c[R], fc[R] = d[R], fd[R]
        d[R] = lo[R] + INV_PHI * (hi[R] - lo[R])
        new_x = np.concatenate([c[L], d[R]])
        vals = np.asarray(f(new_x), dtype=float)
        fc[L] = vals[: L.size]
        fd[R] = vals[L.size :]
    return lo, hi


def find_resonances(
    spec: Spectrum,
    profile: StepProfile,
    detector: Detector = "pt_peak",
    tol_e: float = 1e-9,
) -> list[Resonance]:
    """Locate and refine resonances visible in ``spec``.

    Strict interior local minima of the detector objective are bracketed by
    their grid neighbours and refined to a bracket no wider than ``tol_e``
    (internally to ``tol_e * REFINE_FACTOR``, or to floating-point resolution).
    A refined point is kept only if it lies at least 2 log units below the
    lower of the two barriers that separate its basin from deeper minima (or
    from the window edges): the topographic prominence of the dip, which
    does not depend on grid density.  The grid must be fine enough for every
    dip to register as a local extremum; ln|A_1| dips in particular can be
    much narrower than P_T peaks.
    """
    if not tol_e > 0:
        raise ValueError("tol_e must be positive")
    obj = spec.objective(detector)
    E = spec.energies
    n = len(E)
    if n < 3:
        return []
    interior = np.flatnonzero((obj[1:-1] < obj[:-2]) & (obj[1:-1] < obj[2:])) + 1

    for i in (0, n - 1):
        run = obj if i == 0 else obj[::-1]
        rising = np.flatnonzero(np.diff(run) <= 0)
        top = run[: (rising[0] + 1) if rising.size else n].max()
        if obj[i] < run[1] and obj[i] <= top - DEPTH_THRESHOLD:
            warnings.warn(
                f"dip at the edge of the energy window (E={E[i]:.6g}) is not bracketed; skipped",
                ResonanceWarning,
                stacklevel=2,
            )
    if interior.size == 0:
        return []

    prof = profile.normalized()

    def f(x):
        batch = scatter_many(prof, x)
        return _objective_from(batch.ln_a1, batch.ln_P_T, detector)

    lo, hi = golden_section(f, E[interior - 1], E[interior + 1], tol_e * REFINE_FACTOR)
    mid = 0.5 * (lo + hi)
    batch = scatter_many(prof, mid)
    refined = _objective_from(batch.ln_a1, batch.ln_P_T, detector)
    prominence = peak_prominences(-obj, interior)[0] + (obj[interior] - refined)
    out = []
    for idx in range(interior.size):
        if not prominence[idx] >= DEPTH_THRESHOLD:
            continue
        out.append(
            Resonance(
                energy=float(mid[idx]),
                ln_a1_min=float(batch.ln_a1[idx]),
                ln_pt=float(batch.ln_P_T[idx]),
                detector=detector,
                refinement_width=float(hi[idx] - lo[idx]),
            )
        )
    return sorted(out, key=lambda r: r.energy)


def locate_resonances(
    profile: StepProfile,
    e_min: float,
    e_max: float,
    points: int = 2000,
    detector: Detector = "pt_peak",
    tol_e: float = 1e-9,
    refine_grid: bool = False,
    max_passes: int = 3,
) -> list[Resonance]:
    """Sweep and refine; optionally re-sweep between resonances at growing density.

    With ``refine_grid`` every interval between neighbouring resonances (and
    the window ends) is re-swept at 10x the previous density until the
    resonance count has stayed the same for two consecutive passes, or
    ``max_passes`` re-sweeps have run.
    """
    spec = sweep(profile, e_min, e_max, points)
    found = find_resonances(spec, profile, detector, tol_e)
    if not refine_grid:
        return found
    spacing = (e_max - e_min) / (points - 1)
    stable = 0
    for _ in range(max_passes):
        spacing /= 10.0
        edges = [e_min, *(r.energy for r in found), e_max]
        grids = []
        for a, b in zip(edges[:-1], edges[1:]):
            m = max(3, int(math.ceil((b - a) / spacing)) + 1)
            grids.append(np.linspace(a, b, m)[:-1])
        grid = np.concatenate(grids + [np.array([e_max])])
        grid = np.unique(grid)
        again = find_resonances(spectrum_at(profile, grid), profile, detector, tol_e)
        stable = stable + 1 if len(again) == len(found) else 0
        found = again
        if stable >= 2:
            break
    return found
