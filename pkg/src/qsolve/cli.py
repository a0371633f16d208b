"""Command-line front end.

    qsolve transmit     --potential builtin:rect_double_barrier --emin 0.01 --emax 1 --out spec.csv
    qsolve eigen        --potential builtin:harmonic_model --out states.json
    qsolve wavefunction --potential profile.json --energy 1.0 --check
    qsolve discretize   --potential well.json --segments 4000 --out profile.json

Exit codes: 0 success, 1 usage, 2 solver failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bound import NormalizationError, default_window, localization, solve_model
from .oracle import tm_ln_a1, tm_scatter
from .profile import (
    DiscretizationRule,
    SmoothPotential,
    StepProfile,
    builtin,
    discretize,
    dump_profile,
    load_potential,
    uplift_model,
)
from .recursion import RecursionPoleError, compute_coefficients, continuity_defects, wavefunction
from .spectra import spectrum_at

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
CHECK_LIMIT = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    command: str
    potential: str
    e_min: float | None = None
    e_max: float | None = None
    points: int = 2000
    tol_e: float = 1e-12
    segments: int = 2000
    sampling: str = "midpoint"
    uplift: float | None = None
    flank: float | None = None
    engine: str = "recursive"
    out: str | None = None
    check: bool = False
    energy: float | None = None
    x_min: float | None = None
    x_max: float | None = None

    def __post_init__(self):
        if self.points < 2:
            raise UsageError("--points must be at least 2")
        if not self.tol_e > 0:
            raise UsageError("--tol-e must be positive")
        if self.segments < 1:
            raise UsageError("--segments must be at least 1")
        if self.engine != "recursive" and self.command != "transmit":
            raise UsageError("--engine tm is only available for transmit")
        if (self.uplift is None) != (self.flank is None):
            raise UsageError("--uplift and --flank go together")

    @property
    def rule(self) -> DiscretizationRule:
        return DiscretizationRule(self.segments, self.sampling)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsolve", description="1D scattering and bound states of step potentials")
    parser.add_argument("command", choices=["transmit", "eigen", "wavefunction", "discretize"])
    parser.add_argument(
        "--potential",
        required=True,
        help="JSON file, or builtin:name[?k=v,...] (e.g. builtin:harmonic_model?flank_width=4)",
    )
    parser.add_argument("--emin", type=float, dest="e_min")
    parser.add_argument("--emax", type=float, dest="e_max")
    parser.add_argument("--points", type=int, default=2000, help="energy or x grid size")
    parser.add_argument("--tol-e", type=float, default=1e-12, dest="tol_e")
    parser.add_argument("--segments", type=int, default=2000)
    parser.add_argument("--sampling", choices=["midpoint", "average"], default="midpoint")
    parser.add_argument("--uplift", type=float, help="lift a bare well by this much (needs --flank)")
    parser.add_argument("--flank", type=float, help="width of the barriers added on each side")
    parser.add_argument("--engine", choices=["recursive", "tm"], default="recursive")
    parser.add_argument("--out", help="output file (default: standard output)")
    parser.add_argument("--check", action="store_true", help="report breakpoint continuity of psi")
    parser.add_argument("--energy", type=float, help="energy for wavefunction")
    parser.add_argument("--xmin", type=float, dest="x_min")
    parser.add_argument("--xmax", type=float, dest="x_max")
    return parser


def parse_potential_source(source: str) -> SmoothPotential | StepProfile:
    """``builtin:name?k=v,...`` or a path to a potential JSON file."""
    if source.startswith("builtin:"):
        name, _, query = source[len("builtin:") :].partition("?")
        params = {}
        for item in filter(None, query.split(",")):
            key, sep, value = item.partition("=")
            if not sep:
                raise UsageError(f"builtin parameter {item!r} is not of the form k=v")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise UsageError(f"builtin parameter {key!r} needs a number, got {value!r}") from None
        return builtin(name, params)
    return load_potential(source)


def _model(cfg: RunConfig):
    pot = parse_potential_source(cfg.potential)
    if cfg.uplift is not None:
        if not isinstance(pot, SmoothPotential):
            raise UsageError("--uplift needs a smooth (expression or builtin) potential")
        pot = uplift_model(pot, cfg.uplift, cfg.flank)
    return pot


def _profile(pot, rule: DiscretizationRule) -> StepProfile:
    return pot if isinstance(pot, StepProfile) else discretize(pot, rule)


def _write(cfg: RunConfig, text: str, out=None) -> None:
    path = cfg.out if out is None else out
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _g(x) -> str:
    return f"{float(x):.17g}"


def _default_energy_window(profile: StepProfile, points: int) -> tuple[float, float]:
    top = float(np.max(profile.values))
    e_max = 1.5 * top if top > 0 else 4.0
    return e_max / points, e_max


def gnuplot_script(data_path: str, title: str) -> str:
    return "\n".join(
        [
            "# gnuplot script for a transmission spectrum",
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set xlabel 'E'",
            "set multiplot layout 2,1 title " + json.dumps(title),
            "set ylabel 'P_T'",
            f"plot {json.dumps(data_path)} using 1:2 with lines notitle",
            "set ylabel 'ln|A_1|'",
            f"plot {json.dumps(data_path)} using 1:4 with lines notitle",
            "unset multiplot",
            "",
        ]
    )


def cmd_transmit(cfg: RunConfig) -> int:
    profile = _profile(_model(cfg), cfg.rule).normalized()
    lo, hi = _default_energy_window(profile, cfg.points)
    lo = cfg.e_min if cfg.e_min is not None else lo
    hi = cfg.e_max if cfg.e_max is not None else hi
    if not 0 < lo < hi:
        raise UsageError("need 0 < --emin < --emax")
    energies = np.linspace(lo, hi, cfg.points)
    rows = ["E,P_T,ln_PT,ln_abs_A1"]
    if cfg.engine == "tm":
        for e in energies:
            r = tm_scatter(profile, e)
            rows.append(",".join(_g(v) for v in (e, r.P_T, r.ln_P_T, tm_ln_a1(profile, e))))
        text = "\n".join(rows) + "\n"
    else:
        text = spectrum_at(profile, energies).to_csv()
    _write(cfg, text)
    if cfg.out is not None:
        script = Path(cfg.out).with_suffix(".gp")
        script.write_text(gnuplot_script(Path(cfg.out).name, cfg.potential))
    return EXIT_OK


def cmd_eigen(cfg: RunConfig) -> int:
    pot = _model(cfg)
    profile = _profile(pot, cfg.rule)
    if cfg.e_min is None or cfg.e_max is None:
        window = default_window(profile)
        lo = window[0] if cfg.e_min is None else cfg.e_min
        hi = window[1] if cfg.e_max is None else cfg.e_max
    else:
        lo, hi = cfg.e_min, cfg.e_max
    if not 0 < lo < hi:
        raise UsageError("need 0 < --emin < --emax")
    states = solve_model(profile, cfg.rule, (lo, hi), cfg.tol_e, points=cfg.points, **_region_and_uplift(pot))
    records = []
    for s in states:
        rec = s.to_dict()
        rec["resonance_energy"] = s.resonance_energy
        records.append(rec)
    _write(cfg, json.dumps(records) + "\n")
    summary = sys.stdout if cfg.out is not None else sys.stderr
    summary.write(f"{'n':>3} {'eigenvalue':>24} {'resonance':>24} {'nodes':>5} {'part':>9} {'side':>11}\n")
    for s in states:
        side = localization(s, 0.5 * sum(s.well_region))
        summary.write(
            f"{s.index:>3} {_g(s.eigenvalue):>24} {_g(s.resonance_energy):>24} {s.node_count:>5} "
            f"{s.part_used:>9} {side:>11}\n"
        )
    return EXIT_OK


def _region_and_uplift(pot) -> dict:
    if isinstance(pot, StepProfile):
        return {}
    return {"well_region": pot.well_region or pot.support, "uplift": pot.uplift}


def cmd_wavefunction(cfg: RunConfig) -> int:
    if cfg.energy is None:
        raise UsageError("wavefunction needs --energy")
    profile = _profile(_model(cfg), cfg.rule).normalized()
    b0, bn = float(profile.breakpoints[0]), float(profile.breakpoints[-1])
    pad = 0.25 * (bn - b0)
    x_lo = cfg.x_min if cfg.x_min is not None else b0 - pad
    x_hi = cfg.x_max if cfg.x_max is not None else bn + pad
    if not x_lo < x_hi:
        raise UsageError("need --xmin < --xmax")
    coeffs = compute_coefficients(profile, cfg.energy)
    x = np.linspace(x_lo, x_hi, cfg.points)
    psi = wavefunction(coeffs, x)
    rows = ["x,re_psi,im_psi,abs_psi"]
    rows += [f"{_g(a)},{_g(z.real)},{_g(z.imag)},{_g(abs(z))}" for a, z in zip(x, psi)]
    _write(cfg, "\n".join(rows) + "\n")
    if cfg.check:
        jump, slope = continuity_defects(coeffs)
        worst = max(jump, slope)
        stream = sys.stdout if cfg.out is not None else sys.stderr
        stream.write(f"max_discontinuity psi={_g(jump)} dpsi={_g(slope)}\n")
        if not worst < CHECK_LIMIT:
            sys.stderr.write(f"qsolve: continuity check failed ({_g(worst)} >= {CHECK_LIMIT:g})\n")
            return EXIT_SOLVER
    return EXIT_OK


def cmd_discretize(cfg: RunConfig) -> int:
    pot = parse_potential_source(cfg.potential)
    _write(cfg, dump_profile(_profile(pot, cfg.rule)))
    return EXIT_OK


COMMANDS = {
    "transmit": cmd_transmit,
    "eigen": cmd_eigen,
    "wavefunction": cmd_wavefunction,
    "discretize": cmd_discretize,
}


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(**vars(args))
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"qsolve: {exc}\n")
        return EXIT_USAGE
    except (RecursionPoleError, NormalizationError, ArithmeticError, FloatingPointError) as exc:
        sys.stderr.write(f"qsolve: solver failed: {exc}\n")
        return EXIT_SOLVER
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"qsolve: {exc}\n")
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        sys.stderr.write(f"qsolve: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
