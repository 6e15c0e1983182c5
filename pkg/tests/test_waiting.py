import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from lmgpolaron.core import BathParams
from lmgpolaron.dissipation import Frame, RatePair, rates_polaron
from lmgpolaron.errors import InsufficientStatisticsError, TruncationError, ValidationError
from lmgpolaron.waiting import (ABSORPTION, EMISSION, JumpRecord, WtdKind, histogram_l1,
                                sample_trajectories, sample_trajectory, wtd_analytic,
                                wtd_histogram, wtd_numeric, wtd_peak_scan)

BATH = BathParams.standard()
rate_st = st.floats(1e-3, 10.0)
nb_st = st.floats(1e-4, 20.0)


def pair(gamma, n_b):
    return RatePair(gamma * (1 + n_b), gamma * n_b, Frame.POLARON, 1.0)


def test_kind_letters():
    assert len(WtdKind) == 4
    assert (WtdKind.AE.later, WtdKind.AE.earlier) == (ABSORPTION, EMISSION)
    assert (WtdKind.EA.later, WtdKind.EA.earlier) == (EMISSION, ABSORPTION)


@given(rate_st, nb_st)
def test_values_at_zero_delay(g, n):
    assert wtd_analytic("ee", 0.0, g, n) == pytest.approx(2 * g * n * (1 + n), rel=1e-12)
    assert wtd_analytic("ae", 0.0, g, n) == pytest.approx(g * n * (1 + 2 * n), rel=1e-12)
    assert wtd_analytic("ea", 0.0, g, n) == pytest.approx(g * (1 + n) * (1 + 2 * n), rel=1e-12)


def textbook_ee(tau, g, n):
    """Exponentially growing form, fine for moderate g*tau."""
    num = 2 * g * n * (1 + n) * math.exp((2 + 3 * n) * g * tau)
    return num / ((1 + n) * math.exp((1 + 2 * n) * g * tau) - n) ** 3


@given(rate_st, st.floats(1e-3, 5.0), st.floats(0, 5))
def test_stable_form_equals_textbook_form(g, n, x):
    tau = x / g
    assert wtd_analytic("ee", tau, g, n) == pytest.approx(textbook_ee(tau, g, n), rel=1e-10)


@given(rate_st, nb_st, st.floats(0, 200))
def test_analytic_matches_fock_sum(g, n, x):
    tau = x / g
    for k in WtdKind:
        assert wtd_analytic(k, tau, g, n) == pytest.approx(wtd_numeric(k, tau, g, n, 2000), rel=1e-8,
                                                           abs=1e-300)


@given(rate_st, nb_st, st.floats(0, 50))
def test_ee_equals_aa_and_bunching(g, n, x):
    tau = x / g
    assert wtd_analytic("ee", tau, g, n) == wtd_analytic("aa", tau, g, n)
    assert wtd_analytic("ee", tau, g, n) <= wtd_analytic("ee", 0.0, g, n) * (1 + 1e-14)


@given(rate_st, st.floats(0.01, 5.0), st.floats(0.1, 10), st.floats(0, 20))
def test_rescaling_covariance(g, n, alpha, x):
    tau = x / g
    for k in WtdKind:
        assert wtd_analytic(k, tau, alpha * g, n) == pytest.approx(alpha * wtd_analytic(k, alpha * tau, g, n),
                                                                   rel=1e-12)


@pytest.mark.parametrize("n", [0.05, 0.39, 2.0, 10.0])
def test_normalisation(n):
    g = 0.7
    for earlier in "ea":
        total = sum(quad(lambda t: wtd_analytic(f"{later}{earlier}", t, g, n), 0, np.inf,
                         epsabs=1e-13, epsrel=1e-12, limit=500)[0] for later in "ea")
        assert total == pytest.approx(1.0, abs=1e-8)


def test_low_temperature_limit():
    g = 0.4
    t = np.linspace(0, 30, 301)
    assert np.max(np.abs(wtd_analytic("ea", t, g, 1e-6) - g * np.exp(-g * t))) < 1e-4
    assert np.array_equal(wtd_analytic("ea", t, g, 0.0), g * np.exp(-g * t))
    with pytest.raises(ValidationError):
        wtd_analytic("ee", 1.0, g, 0.0)
    with pytest.raises(ValidationError):
        wtd_analytic("ee", -1.0, g, 0.5)
    assert wtd_analytic("ee", 1e6, g, 0.5) == 0.0


def test_numeric_truncation_guard():
    with pytest.raises(TruncationError):
        wtd_numeric("ee", 1.0, 0.3, 5.0, n_max=20)


def test_trajectory_is_reproducible_and_streams_differ():
    rp = pair(0.2, 0.4)
    a = sample_trajectory(rp, 2000, seed=11)
    b = sample_trajectory(rp, 2000, seed=11)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.kinds, b.kinds)
    c, d = sample_trajectories(rp, 500, 2, seed=11)
    assert not np.array_equal(c.times, d.times)
    c2, d2 = sample_trajectories(rp, 500, 2, seed=11, workers=2)
    assert np.array_equal(c.times, c2.times) and np.array_equal(d.kinds, d2.kinds)
    assert np.all(np.diff(a.times) > 0)


def test_trajectory_stationary_statistics():
    g, n = 0.05, 0.39
    rec = sample_trajectory(pair(g, n), 10**6, seed=3)
    assert np.mean(rec.kinds == EMISSION) == pytest.approx(0.5, abs=1e-5)
    mean, err = rec.mean_occupation()
    assert abs(mean - n) < 3 * err


@pytest.mark.parametrize("kind", list(WtdKind))
def test_histogram_against_closed_form(kind):
    g, n = 0.05, 0.39
    rec = sample_trajectory(pair(g, n), 4 * 10**5, seed=5)
    hist = wtd_histogram(rec, kind, 0.05 / g, 15 / g)
    assert histogram_l1(hist, g, n) < 0.03


def test_histograms_sum_to_one_per_conditioning_type():
    rec = sample_trajectory(pair(1.0, 0.5), 10**5, seed=9)
    for earlier in "ea":
        total = sum(wtd_histogram(rec, f"{later}{earlier}", 0.01, 200).density.sum() * 0.01
                    for later in "ea")
        assert total == pytest.approx(1.0, abs=1e-3)


def test_histogram_merges_records_and_checks_statistics():
    rp = pair(1.0, 0.5)
    recs = sample_trajectories(rp, 3 * 10**4, 2, seed=2)
    merged = wtd_histogram(recs, "ee", 0.1, 10)
    parts = [wtd_histogram(r, "ee", 0.1, 10, min_events=1) for r in recs]
    assert np.array_equal(merged.counts, parts[0].counts + parts[1].counts)
    assert merged.n_conditioning == sum(p.n_conditioning for p in parts)
    with pytest.raises(InsufficientStatisticsError):
        wtd_histogram(JumpRecord([], []), "ee", 0.1, 10)


def test_low_temperature_histogram_is_exponential():
    g, n = 0.5, 1e-3
    rec = sample_trajectory(pair(g, n), 2 * 10**5, seed=4)
    hist = wtd_histogram(rec, "ea", 0.05 / g, 10 / g)
    ref = g * np.exp(-g * hist.centers)
    assert np.sum(np.abs(hist.density - ref)) * hist.bin_width < 0.03


def test_record_serialisation(tmp_path):
    rec = sample_trajectory(pair(0.3, 0.8), 500, seed=1, stream=4)
    rec.to_csv(tmp_path / "r.csv")
    back = JumpRecord.from_csv(tmp_path / "r.csv")
    assert np.array_equal(back.times, rec.times) and np.array_equal(back.kinds, rec.kinds)
    assert (back.seed, back.stream, back.initial_occupation) == (1, 4, rec.initial_occupation)
    rec.to_binary(tmp_path / "r.bin")
    back = JumpRecord.from_binary(tmp_path / "r.bin")
    assert np.array_equal(back.times, rec.times) and back.total_time == rec.total_time
    assert back.events[:3] == rec.events[:3]
    (tmp_path / "bad.bin").write_bytes(b"nope" + bytes(40))
    with pytest.raises(ValidationError):
        JumpRecord.from_binary(tmp_path / "bad.bin")
    with pytest.raises(ValidationError):
        JumpRecord([1.0, 0.5], [0, 1])


def test_peak_scans():
    gam = np.linspace(0.5, 1.5, 101)
    pol = wtd_peak_scan("polaron", gam, 0.0, 1.0, BATH)
    assert pol.skipped.sum() == 1 and np.all(np.isfinite(pol.values[~pol.skipped]))
    for g, v in zip(gam[~pol.skipped], pol.values[~pol.skipped]):
        rp = rates_polaron(1.0, g, BATH)
        assert v == pytest.approx(2 * rp.gamma_eff * rp.n_b * (1 + rp.n_b), rel=1e-12)
    # BMS value stays bounded on its approach to the shifted critical point
    bms = wtd_peak_scan("bms", 1.1 - np.logspace(-2, -5, 4), 0.0, 1.0, BATH)
    assert np.all(np.isfinite(bms.values)) and bms.values.max() < 1.0
