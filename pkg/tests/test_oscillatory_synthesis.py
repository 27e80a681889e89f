import math

import numpy as np
import pytest
from scipy import integrate

from acoustic_cwt.cwt_engine import WindowSettings
from acoustic_cwt.errors import ParameterDomainError, UndefinedScoreError
from acoustic_cwt.oscillatory_synthesis import (
    QuadratureSettings,
    SampledWavelet,
    causality_score,
    cutoff_frequency,
    integrate_rows,
    integration_plan,
    mother_wavelet,
    oscillation_roots,
    synthesize,
)
from acoustic_cwt.wavelet_model import (
    PhaseVariant,
    TonotopicMap,
    WaveletKind,
    envelope_mode,
    log_envelope,
    phase,
    phase_derivative,
    scale_grid,
)


def relative_rms(actual, expected):
    return math.sqrt(np.mean(np.abs(actual - expected) ** 2) / np.mean(np.abs(expected) ** 2))

RATE = 28160.0


@pytest.fixture(scope="module")
def mother(params):
    return mother_wavelet(params, RATE, 0.02, WaveletKind.REAL_WAVELET)


def test_cutoff_is_at_the_envelope_threshold(params):
    omega_c = cutoff_frequency(1.0, params)
    y_c = omega_c / params.omega0
    assert y_c > envelope_mode(params)
    ratio = math.exp(float(log_envelope(y_c, params)) - float(log_envelope(envelope_mode(params), params)))
    assert ratio == pytest.approx(1e-6, rel=1e-3)


def test_cutoff_scales_inversely_with_scale(params):
    assert cutoff_frequency(2.0, params) == pytest.approx(cutoff_frequency(1.0, params) / 2.0, rel=1e-12)
    with pytest.raises(ParameterDomainError):
        cutoff_frequency(0.0, params)


def test_roots_are_zeros_of_the_cosine(params):
    u = 0.003
    roots = oscillation_roots(u, 1.0, params)
    omega_c = cutoff_frequency(1.0, params)
    assert roots.size > 10
    assert np.all(np.diff(roots) > 0)
    assert roots[0] > 0 and roots[-1] <= omega_c
    argument = roots * u - phase(roots / params.omega0, params)
    assert np.max(np.abs(np.cos(argument))) < 1e-2


def test_root_spacing_follows_the_local_phase_rate(params):
    u = 0.010
    roots = oscillation_roots(u, 1.0, params)
    spacing = np.diff(roots)[-10:]
    mid = 0.5 * (roots[-11:-1] + roots[-10:])
    rate = np.abs(u - phase_derivative(mid / params.omega0, params) / params.omega0)
    assert np.allclose(spacing, math.pi / rate, rtol=1e-2)


def test_root_count_follows_the_total_phase_excursion(params):
    roots = oscillation_roots(0.0, 1.0, params)
    omega_c = cutoff_frequency(1.0, params)
    excursion = -float(phase(omega_c / params.omega0, params))
    assert abs(roots.size - excursion / math.pi) <= 1.0


def test_integration_plan_breakpoints(params):
    plan = integration_plan(0.002, 1.0, params)
    assert plan.breakpoints[0] == 0.0
    assert plan.breakpoints[-1] == pytest.approx(plan.omega_c)
    assert np.all(np.diff(plan.breakpoints) > 0)
    assert plan.order == 16


def test_integration_plan_splits_at_the_tangent_point(params):
    plan = integration_plan(-0.004, 1.0, params)
    assert plan.kink == pytest.approx(params.y_t * params.omega0, rel=1e-12)
    assert np.any(plan.breakpoints == plan.kink)

    raw = integration_plan(-0.004, 1.0, params, variant=PhaseVariant.RAW)
    assert raw.kink is None


def test_default_scale_range_synthesizes_over_the_lag_window(params):
    settings = WindowSettings()
    scales = scale_grid(TonotopicMap(), params, settings.scale_segments)
    lag_min, lag_max = settings.lag_range
    times = np.arange(lag_min, lag_max + 1) * settings.dt
    for s in scales[::50]:
        w = synthesize(float(s), 0.0, times, params)
        assert np.all(np.isfinite(w.values))
        assert np.max(np.abs(w.values)) > 0.0


def test_splitting_intervals_further_leaves_the_integral_unchanged(params):
    u = np.linspace(-0.006, -0.002, 33)
    coarse = integrate_rows(u, 1.0, params, settings=QuadratureSettings(uniform_segments=64))
    fine = integrate_rows(u, 1.0, params, settings=QuadratureSettings(uniform_segments=128))
    assert relative_rms(fine, coarse) < 1e-10


def test_doubling_the_cutoff_changes_little(params):
    y_e = envelope_mode(params)
    y_c = cutoff_frequency(1.0, params) / params.omega0
    fraction = math.exp(float(log_envelope(2.0 * y_c, params) - log_envelope(y_e, params)))
    wide = QuadratureSettings(cutoff_fraction=fraction)
    assert cutoff_frequency(1.0, params, fraction) == pytest.approx(2.0 * y_c * params.omega0, rel=1e-8)

    times = np.arange(-400, 100) / RATE
    base = synthesize(1.0, 0.0, times, params)
    doubled = synthesize(1.0, 0.0, times, params, settings=wide)
    assert relative_rms(doubled.values, base.values) < 1e-6


def test_spectrum_follows_the_envelope(params):
    holo = mother_wavelet(params, RATE, 0.02, WaveletKind.HOLOMORPHIC)
    spectrum = np.abs(np.fft.fft(holo.values))
    omega = 2.0 * math.pi * np.fft.fftfreq(holo.values.size, holo.dt)
    envelope = np.zeros_like(omega)
    positive = omega > 0
    envelope[positive] = np.exp(log_envelope(omega[positive] / params.omega0, params))
    band = envelope > 1e-3 * envelope.max()
    gain = np.dot(spectrum[band], envelope[band]) / np.dot(envelope[band], envelope[band])
    assert relative_rms(spectrum[band], gain * envelope[band]) < 0.01


def test_real_wavelet_is_twice_the_real_part_of_holomorphic(params):
    times = np.arange(-200, 40) / RATE
    real = synthesize(1.0, 0.0, times, params, WaveletKind.REAL_WAVELET, norm_kind=WaveletKind.REAL_WAVELET)
    holo = synthesize(1.0, 0.0, times, params, WaveletKind.HOLOMORPHIC, norm_kind=WaveletKind.REAL_WAVELET)
    assert np.isrealobj(real.values)
    assert np.allclose(real.values, 2.0 * holo.values.real, rtol=0, atol=1e-10 * np.max(np.abs(real.values)))


def test_mother_wavelet_has_unit_energy(mother):
    assert mother.energy() == pytest.approx(1.0, abs=1e-3)


def test_mother_wavelet_is_causal(mother):
    assert causality_score(mother) < 1e-4


def test_holomorphic_wavelet_has_no_negative_frequencies(params):
    times = np.arange(-1024, 1024) / RATE
    holo = synthesize(1.0, 0.0, times, params, WaveletKind.HOLOMORPHIC)
    spectrum = np.abs(np.fft.fft(holo.values)) ** 2
    freqs = np.fft.fftfreq(times.size)
    assert spectrum[freqs < 0].sum() / spectrum.sum() < 1e-4


def test_shift_moves_the_wavelet(params):
    times = np.arange(-300, 100) / RATE
    base = synthesize(1.5, 0.0, times, params)
    moved = synthesize(1.5, 37 / RATE, times + 37 / RATE, params)
    assert np.allclose(base.values, moved.values, rtol=0, atol=1e-9 * np.max(np.abs(base.values)))


def test_matches_dense_simpson_near_the_origin(params):
    s = 1.0
    # the body of the wavelet lies a few milliseconds before the shift
    times = np.linspace(-0.006, -0.003, 41)
    wavelet = synthesize(s, 0.0, times, params, WaveletKind.HOLOMORPHIC)
    omega_c = cutoff_frequency(s, params)
    omega = np.linspace(0.0, omega_c, 2 ** 16 + 1)
    y = s * omega / params.omega0
    envelope = np.exp(log_envelope(y, params))
    prefactor = params.k_holomorphic * math.sqrt(s / params.omega0) / (2.0 * math.pi)
    oracle = np.array([
        prefactor * integrate.simpson(envelope * np.exp(1j * (omega * t - phase(y, params))), x=omega)
        for t in times
    ])
    rms = math.sqrt(np.mean(np.abs(wavelet.values - oracle) ** 2))
    assert rms < 1e-4 * math.sqrt(np.mean(np.abs(oracle) ** 2))


def test_looser_cutoff_changes_little(params):
    times = np.arange(-300, 60) / RATE
    tight = synthesize(1.0, 0.0, times, params)
    loose = synthesize(1.0, 0.0, times, params, settings=QuadratureSettings(cutoff_fraction=1e-4))
    rms = math.sqrt(np.mean(np.abs(tight.values - loose.values) ** 2))
    assert rms < 1e-3 * math.sqrt(np.mean(np.abs(tight.values) ** 2))


def test_raw_phase_variant_synthesizes(params):
    times = np.arange(-200, 40) / RATE
    raw = synthesize(1.0, 0.0, times, params, variant=PhaseVariant.RAW)
    assert np.all(np.isfinite(raw.values))


def test_causality_score_partitions_energy():
    times = np.arange(-50, 51) / RATE
    values = np.exp(-((times * RATE - 10) / 8.0) ** 2)
    w = SampledWavelet(times=times, values=values, scale=1.0, shift=0.0,
                       kind=WaveletKind.REAL_WAVELET, variant=PhaseVariant.KINK_FREE)
    mirrored = SampledWavelet(times=times, values=values[::-1], scale=1.0, shift=0.0,
                              kind=WaveletKind.REAL_WAVELET, variant=PhaseVariant.KINK_FREE)
    at_zero = values[50] ** 2 / np.sum(values ** 2)
    assert causality_score(w) + causality_score(mirrored) == pytest.approx(1.0 - at_zero, rel=1e-12)

    even = SampledWavelet(times=times, values=np.exp(-(times * RATE / 8.0) ** 2), scale=1.0, shift=0.0,
                          kind=WaveletKind.REAL_WAVELET, variant=PhaseVariant.KINK_FREE)
    assert causality_score(even) == pytest.approx(0.5 * (1.0 - 1.0 / np.sum(even.values ** 2)), rel=1e-12)


def test_causality_score_of_silence_is_undefined():
    times = np.arange(-5, 6) / RATE
    w = SampledWavelet(times=times, values=np.zeros(times.size), scale=1.0, shift=0.0,
                       kind=WaveletKind.REAL_WAVELET, variant=PhaseVariant.KINK_FREE)
    with pytest.raises(UndefinedScoreError):
        causality_score(w)
