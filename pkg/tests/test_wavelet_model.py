import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate

from acoustic_cwt.errors import ParameterDomainError, RangeOverflowError
from acoustic_cwt.wavelet_model import (
    PhaseVariant,
    TonotopicMap,
    WaveletKind,
    WaveletParams,
    admissibility,
    envelope_mode,
    envelope_moment,
    normalization_k,
    phase,
    phase_curve,
    phase_derivative,
    scale_grid,
    scale_ratio,
    spectrum,
    tonotopic,
)


def test_derived_constants(params):
    assert params.y_m == pytest.approx(0.11761, abs=1e-5)
    assert params.y_t == pytest.approx(params.y_m * math.exp(1.831 / 1.041), rel=1e-12)
    assert params.tangent_slope == pytest.approx(-23.02, abs=0.01)
    assert params.f0_hz == pytest.approx(880.0)


def test_raw_phase_has_its_maximum_at_y_m(params):
    assert phase(params.y_m, params, PhaseVariant.RAW) == pytest.approx(params.phi_m, rel=1e-12)
    assert phase_derivative(params.y_m, params, PhaseVariant.RAW) == pytest.approx(0.0, abs=1e-12)


def test_kink_free_phase_is_tangent_at_y_t(params):
    y_t = params.y_t
    line = phase(y_t * (1 - 1e-12), params, PhaseVariant.KINK_FREE)
    assert line == pytest.approx(phase(y_t, params, PhaseVariant.RAW), rel=1e-9)
    # phi(y_t) / y_t equals phi'(y_t) on the raw branch
    assert phase(y_t, params, PhaseVariant.RAW) / y_t == pytest.approx(
        params.alpha / y_t - params.beta, rel=1e-9)
    h = 1e-6 * y_t
    slope = (phase(y_t + h, params) - phase(y_t - h, params)) / (2 * h)
    assert slope == pytest.approx(params.tangent_slope, rel=1e-4)


def test_phase_is_antisymmetric(params):
    y = np.random.default_rng(0).uniform(-5, 5, 1000)
    for variant in PhaseVariant:
        assert np.array_equal(phase(-y, params, variant), -phase(y, params, variant))
    assert phase(0.0, params, PhaseVariant.KINK_FREE) == 0.0
    assert phase(0.0, params, PhaseVariant.RAW) == 0.0


def test_phase_curve_columns(params):
    curve = phase_curve(params, y_max=1.0, n=101)
    assert set(curve) == {"y", "raw", "kink_free", "tangent"}
    below = curve["y"] <= params.y_t
    assert np.allclose(curve["kink_free"][below], curve["tangent"][below])
    assert np.allclose(curve["kink_free"][~below], curve["raw"][~below])
    with pytest.raises(ParameterDomainError):
        phase_curve(params, y_max=0.0)


def test_envelope_mode_matches_numeric_argmax(params):
    assert envelope_mode(params) == pytest.approx(0.91947, abs=1e-5)
    y = np.linspace(1e-3, 5.0, 100001)
    modulus = np.abs(spectrum(1.0, y * params.omega0, params))
    assert abs(y[np.argmax(modulus)] - envelope_mode(params)) <= y[1] - y[0]


def test_spectrum_vanishes_at_zero_frequency(params):
    assert abs(spectrum(2.0, 0.0, params)) == 0.0
    with pytest.raises(ParameterDomainError):
        spectrum(0.0, 1.0, params)


def test_spectrum_modulus_is_variant_independent(params):
    omega = np.linspace(10.0, 3e4, 50)
    raw = spectrum(1.3, omega, params, PhaseVariant.RAW)
    smooth = spectrum(1.3, omega, params, PhaseVariant.KINK_FREE)
    assert np.allclose(np.abs(raw), np.abs(smooth), rtol=1e-13)


def test_normalization_ratio(params, initial_params):
    for p in (params, initial_params):
        ratio = normalization_k(p, WaveletKind.HOLOMORPHIC) / normalization_k(p, WaveletKind.REAL_WAVELET)
        assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-12)


@pytest.mark.parametrize("kind,sides", [(WaveletKind.REAL_WAVELET, 2.0), (WaveletKind.HOLOMORPHIC, 1.0)])
def test_normalization_gives_unit_energy(params, kind, sides):
    # Parseval: (1/2pi) * int |psi^(omega)|^2 d omega over the populated half-lines
    def density(y):
        return abs(spectrum(1.0, y * params.omega0, params, kind=kind)) ** 2 * params.omega0

    half, _ = integrate.quad(density, 0.0, 20.0, limit=200)
    assert sides * half / (2.0 * math.pi) == pytest.approx(1.0, rel=1e-7)


def test_admissibility_reduced_form(params):
    expected = (2 * math.pi / params.omega0) * 2 * params.kappa / (2 * params.kappa - 1)
    assert admissibility(params) == pytest.approx(expected, rel=1e-12)
    assert params.c_psi2 == pytest.approx(1.2359e-3, rel=1e-4)


@pytest.mark.parametrize("kappa,nu,c", [(6.209, 1.0, 1.0), (3.0, 1.5, 2.0), (2.0, 1.0, 1.5)])
def test_admissibility_matches_numeric_integral(kappa, nu, c):
    p = WaveletParams(alpha=3.27, beta=27.8, phi_m=-5.75, kappa=kappa, nu=nu, c_exp=c)
    b = 2 * kappa / c
    num, _ = integrate.quad(lambda y: math.exp(-b * y ** c) * y ** (2 * kappa * nu - 2), 0, np.inf, limit=400)
    den, _ = integrate.quad(lambda y: math.exp(-b * y ** c) * y ** (2 * kappa * nu - 1), 0, np.inf, limit=400)
    numeric = (2 * math.pi / p.omega0) * num / den
    assert admissibility(p) == pytest.approx(numeric, rel=1e-6)


def test_envelope_moment_equals_nu(params):
    assert envelope_moment(params) == pytest.approx(1.0, rel=1e-6)
    p = WaveletParams(alpha=3.27, beta=27.8, phi_m=-5.75, kappa=3.0, nu=1.5, c_exp=2.0)
    assert envelope_moment(p) == pytest.approx(1.5, rel=1e-6)


def test_invalid_vectors_are_rejected(params):
    with pytest.raises(ValidationError):
        WaveletParams(alpha=1.0, beta=1.0, phi_m=0.0, kappa=0.4, nu=1.0)
    with pytest.raises(ValidationError):
        params.replace(alpha=-1.0)
    with pytest.raises(ParameterDomainError):
        WaveletParams.from_config({"alpha_over_pi": 1.0, "beta_over_pi": 8.0, "phi_m_over_pi": -2.0,
                                   "kappa": 0.2})


def test_huge_kappa_overflows_normalization():
    with pytest.raises(RangeOverflowError):
        WaveletParams(alpha=3.27, beta=27.8, phi_m=-5.75, kappa=1000.0)


def test_replace_builds_a_new_vector(params):
    changed = params.replace(kappa=7.0)
    assert changed.kappa == 7.0
    assert params.kappa == pytest.approx(6.209)
    assert changed.c_psi2 != params.c_psi2


def test_parameter_file_round_trip(params, tmp_path):
    path = params.to_config_file(tmp_path / "params.env")
    loaded = WaveletParams.from_config_file(path)
    for key, value in params.to_pi_scaled().items():
        assert loaded.to_pi_scaled()[key] == pytest.approx(value, rel=1e-14)
    with pytest.raises(ParameterDomainError):
        WaveletParams.from_config_file(tmp_path / "missing.env")


def test_tonotopic_map_defaults():
    tmap = TonotopicMap()
    assert tmap.gamma == pytest.approx(5.809, abs=1e-3)
    assert tmap.octaves == pytest.approx(8.38, abs=0.01)
    assert tonotopic(0.0, tmap) == pytest.approx(2 * math.pi * 20000)
    assert tonotopic(1.0, tmap) == pytest.approx(2 * math.pi * 60)
    assert tonotopic(0.5, tmap) == pytest.approx(2 * math.pi * math.sqrt(20000 * 60))
    with pytest.raises(ParameterDomainError):
        tonotopic(1.5, tmap)


def test_scale_grid_is_log_uniform(params):
    tmap = TonotopicMap()
    scales = scale_grid(tmap, params, 200)
    assert scales[0] == pytest.approx(0.044)
    assert scales[-1] == pytest.approx(880 / 60)
    steps = np.diff(np.log(scales))
    assert np.allclose(steps, steps[0], rtol=1e-10)
    assert scale_ratio(tmap, 200) == pytest.approx(2 ** (1 / 24), abs=5e-4)


def test_small_grid_hits_scale_two(params, small_map):
    scales = scale_grid(small_map, params, 30)
    assert scales[18] == pytest.approx(2.0, rel=1e-12)
    assert scale_ratio(small_map, 30) == pytest.approx(2 ** (1 / 6), rel=1e-12)
