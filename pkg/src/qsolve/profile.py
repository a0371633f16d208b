"""Piecewise-constant potentials, smooth potentials and their discretization.

All quantities are dimensionless: lengths in units of the reduced coordinate,
energies and potentials in units of the chosen energy scale, with E = k**2.
Every potential here vanishes outside its support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .expr import compile_expression

ZERO_SNAP = 1e-14


@dataclass(frozen=True, eq=False)
class StepProfile:
    """Multi-step potential: ``values[j]`` applies on ``(breakpoints[j], breakpoints[j+1])``."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 1:
            raise ValueError("a step profile needs at least one layer")
        if b.size != v.size + 1:
            raise ValueError(
                f"{b.size} breakpoints do not bound {v.size} layers (need {v.size + 1})"
            )
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints and values must be finite")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        b.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @property
    def n_layers(self) -> int:
        return self.values.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, x):
        """Potential at ``x``; at a breakpoint the layer to the right wins."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.n_layers)
        out = np.where(inside, self.values[np.clip(idx, 0, self.n_layers - 1)], 0.0)
        return out if out.ndim else float(out)

    def __eq__(self, other):
        if not isinstance(other, StepProfile):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def normalized(self) -> "StepProfile":
        """Merge runs of adjacent layers that carry the same value."""
        keep = np.concatenate(([True], self.values[1:] != self.values[:-1]))
        b = np.concatenate((self.breakpoints[:-1][keep], self.breakpoints[-1:]))
        return StepProfile(b, self.values[keep])

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha1(self.breakpoints.tobytes())
        h.update(self.values.tobytes())
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class SmoothPotential:
    """A real potential given by ``evaluator`` on ``support`` and zero elsewhere.

    ``breaks`` lists interior points where the function may be non-smooth
    (jumps or kinks); discretization never lets a segment straddle one.
    ``well_region`` marks the sub-interval holding the original well for
    model potentials, and ``uplift`` the constant added to it, so that
    bound-state eigenvalues are model resonance energies minus ``uplift``.
    """

    evaluator: Callable
    support: tuple[float, float]
    breaks: tuple[float, ...] = ()
    well_region: tuple[float, float] | None = None
    uplift: float = 0.0
    name: str = ""

    def __post_init__(self):
        lo, hi = (float(s) for s in self.support)
        if not hi > lo:
            raise ValueError(f"support {self.support} has no positive width")
        object.__setattr__(self, "support", (lo, hi))
        brk = tuple(sorted(float(b) for b in self.breaks if lo < b < hi))
        object.__setattr__(self, "breaks", brk)
        if self.well_region is not None:
            wl, wh = (float(s) for s in self.well_region)
            if not (lo <= wl < wh <= hi):
                raise ValueError("well_region must lie inside the support")
            object.__setattr__(self, "well_region", (wl, wh))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        vals = np.asarray(self.evaluator(np.where(inside, x, lo)), dtype=float)
        out = np.where(inside, np.broadcast_to(vals, x.shape), 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class DiscretizationRule:
    segments: int = 1000
    sampling: Literal["midpoint", "average"] = "midpoint"

    def __post_init__(self):
        if int(self.segments) != self.segments or self.segments < 1:
            raise ValueError("segments must be a positive integer")
        if self.sampling not in ("midpoint", "average"):
            raise ValueError(f"unknown sampling {self.sampling!r}")


def _segment_edges(p: SmoothPotential, n: int) -> np.ndarray:
    lo, hi = p.support
    if not p.breaks:
        return np.linspace(lo, hi, n + 1)
    ref = p.well_region if p.well_region is not None else p.support
    h = (ref[1] - ref[0]) / n
    cuts = (lo, *p.breaks, hi)
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if p.well_region is not None and (a, b) == p.well_region:
            m = n
        else:
            m = max(1, int(round((b - a) / h)))
        pieces.append(np.linspace(a, b, m + 1)[:-1])
    pieces.append(np.array([hi]))
    return np.concatenate(pieces)


def discretize(p: SmoothPotential, rule: DiscretizationRule = DiscretizationRule()) -> StepProfile:
    """Replace a smooth potential by equal-width constant layers.

    Without ``breaks`` the support is cut into exactly ``rule.segments``
    layers.  With breaks, each piece between breaks is cut separately at the
    segment width implied by ``rule.segments`` over the well region (or the
    whole support), so the well region gets exactly ``rule.segments`` layers.
    Values with magnitude below 1e-14 are snapped to 0.
    """
    edges = _segment_edges(p, rule.segments)
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    with np.errstate(all="ignore"):
        if rule.sampling == "midpoint":
            vals = np.asarray(p.evaluator(mid), dtype=float)
        else:
            # Simpson weight over the segment
            vals = (
                np.asarray(p.evaluator(left), dtype=float)
                + 4.0 * np.asarray(p.evaluator(mid), dtype=float)
                + np.asarray(p.evaluator(right), dtype=float)
            ) / 6.0
    vals = np.broadcast_to(vals, mid.shape).copy()
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        j = bad[0]
        raise ValueError(
            f"potential is not finite on segment {j} [{left[j]:.17g}, {right[j]:.17g}]"
        )
    vals[np.abs(vals) < ZERO_SNAP] = 0.0
    return StepProfile(edges, vals)


def uplift_model(well: SmoothPotential, uplift: float, flank_width: float) -> SmoothPotential:
    """Lift a well by ``uplift`` and flank it with barriers of that height.

    The result equals ``well(x) + uplift`` on the well's support, ``uplift``
    on flanks of width ``flank_width`` on either side, and 0 beyond, so the
    well's bound states turn into quasi-bound resonances of the model.
    """
    if flank_width <= 0:
        raise ValueError("flank_width must be positive")
    if uplift <= 0:
        raise ValueError(f"uplift {uplift} gives a non-positive barrier height")
    lo, hi = well.support
    probe = np.linspace(lo, hi, 4001)
    lowest = float(np.min(well.evaluator(probe)))
    if uplift + lowest < 0:
        raise ValueError(
            f"uplift {uplift} does not lift the well above zero (well minimum {lowest:.6g})"
        )
    f = well.evaluator
    u = float(uplift)

    def model(x):
        x = np.asarray(x, dtype=float)
        core = (x >= lo) & (x <= hi)
        return np.where(core, np.asarray(f(np.clip(x, lo, hi)), dtype=float) + u, u)

    return SmoothPotential(
        model,
        (lo - flank_width, hi + flank_width),
        breaks=(lo, hi, *(b for b in well.breaks)),
        well_region=(lo, hi),
        uplift=well.uplift + u,
        name=f"uplift({well.name or 'well'}, {u:g})",
    )


def _perturbed(p: SmoothPotential, extra: Callable, extra_uplift: float, name: str) -> SmoothPotential:
    base = p.evaluator

    def evaluator(x):
        return np.asarray(base(x), dtype=float) + extra(np.asarray(x, dtype=float))

    return replace(p, evaluator=evaluator, uplift=p.uplift + extra_uplift, name=name)


def _rect_double_barrier(height=1.0, barrier_width=1.0, well_width=1.0, start=0.0):
    b = np.cumsum([start, barrier_width, well_width, barrier_width])
    return StepProfile(b, [height, 0.0, height])


def _gaussian_double_barrier(height=1.0, separation=2.0, sigma=0.25, start=0.0, cutoff=4.0):
    c1 = start + 0.5
    c2 = c1 + separation

    def v(x):
        x = np.asarray(x, dtype=float)
        return height * (np.exp(-0.5 * ((x - c1) / sigma) ** 2) + np.exp(-0.5 * ((x - c2) / sigma) ** 2))

    return SmoothPotential(v, (c1 - cutoff * sigma, c2 + cutoff * sigma), name="gaussian_double_barrier")


def _harmonic_model(half_width=4.0, flank_width=6.0):
    a = float(half_width)
    well = SmoothPotential(lambda x: np.asarray(x) ** 2 - a * a, (-a, a), name="x^2")
    model = uplift_model(well, a * a, flank_width)
    # eigenvalues are reported for x^2 itself, whose bottom already sits at 0
    return replace(model, uplift=0.0, name="harmonic_model")


def _double_well(half_width=4.0):
    a = float(half_width)
    return SmoothPotential(
        lambda x: np.asarray(x) ** 2 * (np.asarray(x) ** 2 - a * a), (-a, a), name="double_well"
    )


def _double_well_model(half_width=4.0, flank_width=2.0, uplift=64.0):
    model = uplift_model(_double_well(half_width), uplift, flank_width)
    return replace(model, name="double_well_model")


def _asym_double_well_model(half_width=4.0, flank_width=2.0, uplift=64.0, tilt=1.0):
    base = _double_well_model(half_width, flank_width, uplift)
    return _perturbed(
        base, lambda x: tilt * (np.tanh(x) + 1.0), tilt, "asym_double_well_model"
    )


BUILTINS: dict[str, Callable] = {
    "rect_double_barrier": _rect_double_barrier,
    "gaussian_double_barrier": _gaussian_double_barrier,
    "harmonic_model": _harmonic_model,
    "double_well": _double_well,
    "double_well_model": _double_well_model,
    "asym_double_well_model": _asym_double_well_model,
}


def builtin(name: str, params: dict | None = None) -> SmoothPotential | StepProfile:
    """Return one of the named example potentials.

    ``rect_double_barrier`` is a step profile (1 on [0,1] and [2,3]);
    ``harmonic_model`` is x**2 on |x|<4 with flanks of 16 out to |x|=10;
    ``double_well`` is x**2 (x**2 - 16) on |x|<4; ``double_well_model``
    lifts it by 64 with flanks out to |x|=6; ``asym_double_well_model``
    adds tanh(x) + 1 to that over |x|<6 (total uplift 65).
    """
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown builtin {name!r}; valid names: {', '.join(sorted(BUILTINS))}"
        ) from None
    try:
        return factory(**(params or {}))
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name!r}: {exc}") from None


def expression_potential(text: str, support, **kwargs) -> SmoothPotential:
    return SmoothPotential(compile_expression(text), tuple(support), name=text, **kwargs)


def potential_from_dict(spec: dict) -> SmoothPotential | StepProfile:
    """Build a potential from its JSON form (step profile, builtin or expression)."""
    if "breakpoints" in spec:
        return StepProfile(spec["breakpoints"], spec["values"])
    if "builtin" in spec:
        return builtin(spec["builtin"], spec.get("params"))
    if "expr" in spec:
        extra = {}
        if "well_region" in spec:
            extra["well_region"] = tuple(spec["well_region"])
        if "breaks" in spec:
            extra["breaks"] = tuple(spec["breaks"])
        if "uplift" in spec:
            extra["uplift"] = float(spec["uplift"])
        return expression_potential(spec["expr"], spec["support"], **extra)
    raise ValueError("profile JSON needs one of 'breakpoints', 'builtin' or 'expr'")


def load_potential(path: str | Path) -> SmoothPotential | StepProfile:
    with open(path) as fh:
        return potential_from_dict(json.load(fh))


def save_profile(profile: StepProfile, path: str | Path) -> None:
    Path(path).write_text(dump_profile(profile))


def dump_profile(profile: StepProfile) -> str:
    # repr of a Python float round-trips exactly
    b = ", ".join(repr(float(v)) for v in profile.breakpoints)
    v = ", ".join(repr(float(v)) for v in profile.values)
    return f'{{"breakpoints": [{b}], "values": [{v}]}}\n'
