"""Bound states of potential wells via resonances of an uplifted model potential.

The well is lifted by a constant and flanked by barriers of that height.
Each quasi-bound resonance of the model then sits at an eigenvalue of the
well plus the uplift, and the real (or imaginary) part of the scattering
wave function at that energy is the bound state up to normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .profile import DiscretizationRule, SmoothPotential, StepProfile, discretize, uplift_model
from .recursion import compute_coefficients, wavefunction
from .spectra import Detector, locate_resonances

NODE_THRESHOLD = 1e-6
LOCALIZED_MASS = 0.9


# amplitude ratio below which the weaker of Re psi, Im psi counts as roundoff
PART_FLOOR = 1e-10


class NormalizationError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class BoundState:
    index: int
    eigenvalue: float
    resonance_energy: float
    grid: np.ndarray
    psi: np.ndarray
    part_used: Literal["real", "imaginary"]
    node_count: int
    well_region: tuple[float, float]
    re_im_correlation: float

    def norm(self) -> float:
        sel = _in_region(self.grid, self.well_region)
        return float(np.trapezoid(self.psi[sel] ** 2, self.grid[sel]))

    def to_dict(self, split_point: float | None = None) -> dict:
        if split_point is None:
            split_point = 0.5 * sum(self.well_region)
        return {
            "index": self.index,
            "eigenvalue": self.eigenvalue,
            "part_used": self.part_used,
            "node_count": self.node_count,
            "localization": localization(self, split_point),
            "grid": self.grid.tolist(),
            "psi": self.psi.tolist(),
        }


def _in_region(x, region):
    return (x >= region[0]) & (x <= region[1])


def count_nodes(values, threshold: float = NODE_THRESHOLD) -> int:
    """Sign changes among samples whose magnitude exceeds ``threshold * max|values|``."""
    v = np.asarray(values, dtype=float)
    big = v[np.abs(v) > threshold * np.max(np.abs(v))]
    return int(np.count_nonzero(np.signbit(big[1:]) != np.signbit(big[:-1])))


def default_grid(support, well_region, well_points: int = 2001, flank_points: int = 200):
    lo, hi = support
    wl, wh = well_region
    parts = []
    if wl > lo:
        parts.append(np.linspace(lo, wl, flank_points + 1)[:-1])
    parts.append(np.linspace(wl, wh, well_points))
    if hi > wh:
        parts.append(np.linspace(wh, hi, flank_points + 1)[1:])
    return np.concatenate(parts)


def extract_state(
    model: StepProfile,
    E_res: float,
    grid=None,
    well_region: tuple[float, float] | None = None,
    *,
    uplift: float = 0.0,
    index: int = 0,
    split_point: float | None = None,
) -> BoundState:
    """Bound-state wave function from the quasi-bound scattering state at ``E_res``.

    The real or imaginary part, whichever has the larger L2 norm over the
    well region, is normalized to unit norm there (trapezoidal rule on the
    grid points inside the region).  Nodes are counted over the side of
    ``split_point`` (default: centre of the well region) holding at least
    90% of the probability, or over the whole region if neither does, so a
    state localized in one well of a double well reports the nodes it has
    in that well.
    """
    support = (float(model.breakpoints[0]), float(model.breakpoints[-1]))
    if well_region is None:
        well_region = support
    if grid is None:
        grid = default_grid(support, well_region)
    grid = np.asarray(grid, dtype=float)
    coeffs = compute_coefficients(model, E_res)
    psi = wavefunction(coeffs, grid)
    sel = _in_region(grid, well_region)
    if np.count_nonzero(sel) < 2:
        raise ValueError("grid has fewer than two points inside the well region")
    xs = grid[sel]
    norms = {
        "real": float(np.trapezoid(psi.real[sel] ** 2, xs)),
        "imaginary": float(np.trapezoid(psi.imag[sel] ** 2, xs)),
    }
    part = max(norms, key=norms.get)
    if not np.isfinite(norms[part]) or norms[part] < 1e-24:
        raise NormalizationError(
            f"wave function at E={E_res!r} has no weight in the well; refine the resonance"
        )
    values = psi.real if part == "real" else psi.imag
    values = values / np.sqrt(norms[part])
    if values[sel][np.argmax(np.abs(values[sel]))] < 0:
        values = -values
    re, im = psi.real[sel], psi.imag[sel]
    if min(norms.values()) < PART_FLOOR**2 * norms[part]:
        # one part is roundoff: psi is real (or imaginary) to working precision, tan(phi) = 0
        corr = 1.0
    else:
        with np.errstate(invalid="ignore"):
            corr = float(np.corrcoef(re, im)[0, 1])
    if split_point is None:
        split_point = 0.5 * (well_region[0] + well_region[1])
    side = _side(xs, values[sel] ** 2, split_point)
    counted = {"left": xs <= split_point, "right": xs >= split_point}.get(side, slice(None))
    return BoundState(
        index=index,
        eigenvalue=float(E_res) - uplift,
        resonance_energy=float(E_res),
        grid=grid,
        psi=values,
        part_used=part,
        node_count=count_nodes(values[sel][counted]),
        well_region=(float(well_region[0]), float(well_region[1])),
        re_im_correlation=corr,
    )


def localization(state: BoundState, split_point: float) -> str:
    """'left' or 'right' if at least 90% of the well-region mass is on that side."""
    sel = _in_region(state.grid, state.well_region)
    return _side(state.grid[sel], state.psi[sel] ** 2, split_point)


def _side(x, dens, split_point):
    total = np.trapezoid(dens, x)
    left_sel = x <= split_point
    left = np.trapezoid(dens[left_sel], x[left_sel]) if np.count_nonzero(left_sel) > 1 else 0.0
    frac = left / total
    if frac >= LOCALIZED_MASS:
        return "left"
    if 1.0 - frac >= LOCALIZED_MASS:
        return "right"
    return "delocalized"


def default_window(profile: StepProfile) -> tuple[float, float]:
    """Energies below the lower of the two outermost barrier layers."""
    top = float(min(profile.values[0], profile.values[-1]))
    if top <= 0:
        raise ValueError("model potential has no confining barriers at its ends")
    return 1e-3 * top, top * (1.0 - 1e-9)


def solve_model(
    model: SmoothPotential | StepProfile,
    disc: DiscretizationRule = DiscretizationRule(2000),
    e_window: tuple[float, float] | None = None,
    tol_e: float = 1e-12,
    *,
    points: int = 2000,
    detector: Detector = "pt_peak",
    well_region: tuple[float, float] | None = None,
    uplift: float | None = None,
    refine_grid: bool = False,
    grid=None,
) -> list[BoundState]:
    """Bound states from the resonances of an already uplifted model potential.

    ``e_window`` is in model energies; eigenvalues are resonance energies
    minus the model's uplift.
    """
    if isinstance(model, StepProfile):
        profile = model
        region = well_region or (float(model.breakpoints[0]), float(model.breakpoints[-1]))
        shift = uplift or 0.0
    else:
        profile = discretize(model, disc)
        region = well_region or model.well_region or model.support
        shift = model.uplift if uplift is None else uplift
    lo, hi = e_window or default_window(profile)
    resonances = locate_resonances(
        profile, lo, hi, points, detector=detector, tol_e=tol_e, refine_grid=refine_grid
    )
    return [
        extract_state(profile, r.energy, grid, region, uplift=shift, index=i)
        for i, r in enumerate(resonances)
    ]


def solve_well(
    well: SmoothPotential,
    uplift: float,
    flank_width: float,
    disc: DiscretizationRule = DiscretizationRule(2000),
    e_window: tuple[float, float] | None = None,
    tol_e: float = 1e-12,
    **kwargs,
) -> list[BoundState]:
    """Eigenvalues and eigenfunctions of ``well`` through its uplifted model."""
    return solve_model(uplift_model(well, uplift, flank_width), disc, e_window, tol_e, **kwargs)
