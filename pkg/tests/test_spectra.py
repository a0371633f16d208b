"""Energy sweeps and resonance location."""

import math

import numpy as np
import pytest
from scipy.signal import find_peaks

from qsolve.oracle import tm_scatter
from qsolve.profile import StepProfile, builtin
from qsolve.spectra import (
    ResonanceWarning,
    Spectrum,
    find_resonances,
    golden_section,
    locate_resonances,
    resonance_objective,
    spectrum_at,
    sweep,
)

from _shared import HO_REFERENCE, ho_resonances, model_profile, model_resonances

# windows that end on a rising flank or below the next level warn about the unbracketed edge
pytestmark = pytest.mark.filterwarnings("ignore::qsolve.spectra.ResonanceWarning")


def rect(**params):
    return builtin("rect_double_barrier", {k: float(v) for k, v in params.items()})


def tm_spectrum(profile, energies):
    """Spectrum assembled point by point from the transfer-matrix oracle."""
    ln_pt = np.array([tm_scatter(profile, e).ln_P_T for e in energies])
    return Spectrum(np.asarray(energies), np.exp(ln_pt), ln_pt, np.zeros_like(ln_pt), profile.digest())


# --- sweeps ------------------------------------------------------------------------

def test_zero_potential_is_flat():
    s = sweep(StepProfile([0, 1, 2], [0.0, 0.0]), 0.1, 5, 50)
    np.testing.assert_allclose(s.p_t, 1.0, atol=1e-15)
    assert np.all(np.isnan(s.ln_a1))
    assert locate_resonances(StepProfile([0, 1], [0.0]), 0.1, 5, 50, "a1_dip") == []
    assert locate_resonances(StepProfile([0, 1], [0.0]), 0.1, 5, 50, "pt_peak") == []


@pytest.mark.parametrize("params", [{}, {"barrier_width": 2, "well_width": 4}])
def test_rect_peaks_match_transfer_matrix_sweep(params):
    prof = rect(**params)
    ours = sweep(prof, 0.01, 1.0, 2000)
    ref = tm_spectrum(prof, ours.energies)
    np.testing.assert_allclose(ours.ln_pt, ref.ln_pt, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(find_peaks(ours.ln_pt)[0], find_peaks(ref.ln_pt)[0])
    a = find_resonances(ours, prof, "pt_peak", 1e-9)
    b = find_resonances(ref, prof, "pt_peak", 1e-9)
    assert [r.energy for r in a] == [r.energy for r in b]
    assert len(a) == (1 if params else 0)  # the default geometry has no sub-barrier resonance


def test_spectrum_validates_columns():
    with pytest.raises(ValueError):
        Spectrum(np.array([1.0, 2.0]), np.ones(2), np.zeros(2), np.zeros(3), "x")
    with pytest.raises(ValueError):
        Spectrum(np.array([2.0, 1.0]), np.ones(2), np.zeros(2), np.zeros(2), "x")
    with pytest.raises(ValueError):
        sweep(StepProfile([0, 1], [1.0]), 0.0, 1.0, 10)
    with pytest.raises(ValueError):
        sweep(StepProfile([0, 1], [1.0]), 0.5, 1.0, 1)


def test_csv_header_and_digits():
    s = sweep(StepProfile([0, 1], [1.0]), 0.1, 2.0, 5)
    lines = s.to_csv().splitlines()
    assert lines[0] == "E,P_T,ln_PT,ln_abs_A1"
    assert len(lines) == 6
    row = [float(v) for v in lines[3].split(",")]
    assert row == [s.energies[2], s.p_t[2], s.ln_pt[2], s.ln_a1[2]]


def test_sweep_is_independent_of_thread_count(monkeypatch):
    prof = model_profile("harmonic_model", 2000)
    monkeypatch.setenv("QSOLVE_THREADS", "1")
    one = sweep(prof, 0.5, 16, 1000)
    monkeypatch.setenv("QSOLVE_THREADS", "7")
    many = sweep(prof, 0.5, 16, 1000)
    monkeypatch.delenv("QSOLVE_THREADS")
    default = sweep(prof, 0.5, 16, 1000)
    for s in (many, default):
        assert s.to_csv() == one.to_csv()


# --- oscillator ---------------------------------------------------------------------

def test_harmonic_peaks_match_reference_values():
    found = ho_resonances("pt_peak", 2000, 1e-6)
    assert len(found) == 8
    for r, expected in zip(found, HO_REFERENCE):
        assert abs(r.energy - expected) < 5e-3
        assert r.refinement_width <= 1e-6


def test_harmonic_dips_align_with_peaks():
    dips = ho_resonances("a1_dip", 4000, 1e-12)
    peaks = ho_resonances("pt_peak", 2000, 1e-12)
    assert len(dips) == len(peaks) == 8
    gaps = np.array([d.energy - p.energy for d, p in zip(dips, peaks)])
    assert np.all(np.abs(gaps) < 1e-5)
    # narrow resonances agree to the refinement tolerance
    assert np.all(np.abs(gaps[:6]) <= 10 * 1e-12)


def test_dips_are_deep_and_narrow():
    # an ln|A_1| dip of the ground state is far narrower than the grid spacing of a 2000-point sweep
    e0 = ho_resonances("pt_peak", 2000, 1e-12)[0].energy
    prof = model_profile("harmonic_model", 2000)
    base = resonance_objective(prof, e0)
    for offset in (1e-6, 1e-4, 1e-2):
        assert resonance_objective(prof, e0 + offset) > base + 15


def test_coarse_grid_recovered_by_grid_refinement():
    prof = model_profile("harmonic_model", 400)
    assert locate_resonances(prof, 0.5, 8, 12, tol_e=1e-9) == []
    found = locate_resonances(prof, 0.5, 8, 12, tol_e=1e-9, refine_grid=True)
    np.testing.assert_allclose([r.energy for r in found], [1, 3, 5, 7], atol=1e-2)


# --- double wells ---------------------------------------------------------------------

def test_symmetric_double_well_shows_seven_groups():
    found = model_resonances("double_well_model", 2000, 0.5, 64.0)
    energies = np.array([r.energy for r in found])
    groups = 1 + int(np.sum(np.diff(energies) > 1.0))
    assert groups == 7


def test_asymmetric_double_well_shows_fourteen_peaks():
    found = model_resonances("asym_double_well_model", 2000, 0.5, 64.0)
    assert len(found) == 14
    assert np.all(np.diff([r.energy for r in found]) > 1.0)


# --- objective and refinement -------------------------------------------------------------

def test_monotone_spectrum_has_no_resonances():
    prof = StepProfile([0, 0.1], [1.0])
    s = sweep(prof, 2, 10, 500)
    assert np.all(np.diff(s.ln_pt) > 0)
    assert find_resonances(s, prof, "pt_peak") == []


def test_sharp_rect_dip_is_deep():
    prof = rect(barrier_width=10, well_width=6)
    tol = 1e-6
    found = locate_resonances(prof, 0.01, 1.0, 2000, "a1_dip", tol)
    r = found[0]
    assert r.energy == pytest.approx(0.152131448, abs=1e-8)
    centre = resonance_objective(prof, r.energy)
    for e in (r.energy - 10 * tol, r.energy + 10 * tol):
        assert resonance_objective(prof, e) >= centre + 5


@pytest.mark.parametrize("detector", ["a1_dip", "pt_peak"])
def test_refined_point_is_a_local_minimum(detector):
    tol = 1e-9
    prof = rect(barrier_width=6, well_width=6)
    found = locate_resonances(prof, 0.01, 1, 2000, detector, tol)
    assert len(found) == 2
    for r in found:
        assert r.refinement_width <= tol
        centre = resonance_objective(prof, r.energy, detector)
        for e in (r.energy - tol, r.energy + tol):
            assert resonance_objective(prof, e, detector) > centre


def test_dip_peak_separation_shrinks_with_barrier_thickness():
    seps = []
    for bw in (4, 6, 8):
        prof = rect(barrier_width=bw, well_width=6)
        a = locate_resonances(prof, 0.01, 0.3, 2000, "a1_dip", 1e-13)
        b = locate_resonances(prof, 0.01, 0.3, 2000, "pt_peak", 1e-13)
        seps.append(abs(a[0].energy - b[0].energy))
    assert seps[0] > 10 * seps[1] > 100 * seps[2]


def test_refinement_is_deterministic():
    prof = rect(barrier_width=2, well_width=4)
    s = sweep(prof, 0.01, 1, 2000)
    first = find_resonances(s, prof, "a1_dip", 1e-10)
    again = find_resonances(spectrum_at(prof, s.energies), prof, "a1_dip", 1e-10)
    assert first == again


def test_resonance_objective_vectorizes():
    prof = rect(barrier_width=2, well_width=4)
    e = np.array([0.2, 0.26, 0.3])
    vec = resonance_objective(prof, e, "pt_peak")
    assert vec.shape == (3,)
    assert [resonance_objective(prof, x, "pt_peak") for x in e] == vec.tolist()
    with pytest.raises(ValueError):
        resonance_objective(prof, 0.2, "width")
    with pytest.raises(ValueError):
        find_resonances(sweep(prof, 0.1, 1, 10), prof, tol_e=0.0)


def test_edge_dip_warns_and_is_skipped():
    prof = rect(barrier_width=6, well_width=6)
    s = sweep(prof, 0.15213, 0.4, 200)  # starts just past a resonance
    with pytest.warns(ResonanceWarning, match="edge"):
        found = find_resonances(s, prof, "a1_dip", 1e-9)
    assert found == []


def test_golden_section_brackets_minima():
    lo, hi = golden_section(lambda x: (x - 0.3) ** 2, [0.0, -3.0], [1.0, 0.5], 1e-10)
    assert np.all(hi - lo <= 1e-10)
    np.testing.assert_allclose(0.5 * (lo + hi), [0.3, 0.3], atol=1e-10)
    # stops at floating-point resolution instead of looping forever
    lo, hi = golden_section(lambda x: np.abs(x - math.pi), [3.0], [4.0], 0.0)
    assert hi[0] - lo[0] <= 4 * np.spacing(math.pi)
