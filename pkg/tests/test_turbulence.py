import numpy as np
import pytest

from oamfso.field_grid import GridSpec
from oamfso.turbulence import (
    PhaseScreen,
    Regime,
    TurbulenceSpec,
    classify_regime,
    generate_phase_screen,
    phase_psd,
    rytov_variance,
    screen_bin_std,
    screen_pixel_variance,
    spectrum,
)

WEAK = TurbulenceSpec(cn2=5e-15, l0=5e-3, L0=20.0)
GRID = GridSpec(256, 0.69632 / 256)
K850 = 2 * np.pi / 850e-9


def test_spec_invariants():
    with pytest.raises(ValueError):
        TurbulenceSpec(cn2=-1e-15)
    with pytest.raises(ValueError):
        TurbulenceSpec(cn2=1e-15, l0=1.0, L0=0.5)
    assert WEAK.kappa0 == pytest.approx(2 * np.pi / 20.0)
    assert WEAK.kappa_l == pytest.approx(3.3 / 5e-3)


def test_spectrum_zero_cn2():
    spec = TurbulenceSpec(cn2=0.0)
    kappa = np.linspace(0, 1e4, 50)
    assert np.all(spectrum(kappa, spec) == 0.0)


def test_spectrum_at_zero_frequency():
    # f(0) = 1, so the value is 0.033 cn2 / kappa0^(11/3)
    expected = 0.033 * WEAK.cn2 / WEAK.kappa0 ** (11 / 3)
    assert spectrum(0.0, WEAK) == pytest.approx(expected, rel=1e-12)


def test_spectrum_transcription_oracle():
    # independently scripted one-line evaluation at kappa = 100 rad/m
    kappa, cn2, l0, L0 = 100.0, 5e-15, 5e-3, 20.0
    kl, k0 = 3.3 / l0, 2 * np.pi / L0
    expected = (
        0.033 * cn2 * np.exp(-kappa**2 / kl**2) / (kappa**2 + k0**2) ** (11 / 6)
        * (1 + 1.802 * (kappa / kl) - 0.254 * (kappa / kl) ** (7 / 6))
    )
    assert spectrum(kappa, WEAK) == pytest.approx(expected, rel=1e-12)


def test_spectrum_linearity_in_cn2():
    double = TurbulenceSpec(cn2=1e-14, l0=5e-3, L0=20.0)
    kappa = np.geomspace(0.01, 1e4, 40)
    assert np.allclose(spectrum(kappa, double), 2 * spectrum(kappa, WEAK), rtol=1e-14)


@pytest.mark.parametrize(
    "cn2,expected",
    [(5e-15, 0.2), (4e-14, 1.60), (7e-14, 2.80), (3e-13, 12.0)],
)
def test_rytov_variance_anchors(cn2, expected):
    assert rytov_variance(cn2, 850e-9, 1000.0) == pytest.approx(expected, rel=0.02)


def test_rytov_rejects_bad_args():
    with pytest.raises(ValueError):
        rytov_variance(1e-15, -850e-9, 1000.0)
    with pytest.raises(ValueError):
        rytov_variance(1e-15, 850e-9, 0.0)


def test_classify_regime_boundaries():
    assert classify_regime(0.2) is Regime.WEAK
    assert classify_regime(0.3) is Regime.WEAK
    assert classify_regime(5.0) is Regime.MODERATE_TO_STRONG
    assert classify_regime(12.0) is Regime.SATURATION
    with pytest.raises(ValueError):
        classify_regime(-0.1)


def test_classify_regime_monotone():
    order = [Regime.WEAK, Regime.MODERATE_TO_STRONG, Regime.SATURATION]
    grid = np.linspace(0, 10, 101)
    ranks = [order.index(classify_regime(s)) for s in grid]
    assert all(a <= b for a, b in zip(ranks, ranks[1:]))


def test_zero_cn2_screen_is_zero():
    screen = generate_phase_screen(TurbulenceSpec(cn2=0.0), GRID, 50.0, K850, np.random.default_rng(0))
    assert np.all(screen.phase == 0.0)


def test_same_seed_reproducible():
    a = generate_phase_screen(WEAK, GRID, 50.0, K850, np.random.default_rng(123))
    b = generate_phase_screen(WEAK, GRID, 50.0, K850, np.random.default_rng(123))
    assert np.array_equal(a.phase, b.phase)


def test_subharmonics_reserved():
    with pytest.raises(NotImplementedError):
        generate_phase_screen(WEAK, GRID, 50.0, K850, np.random.default_rng(0), subharmonics=True)


def test_screen_ensemble_variance_matches_bin_sum():
    # oracle: per-pixel variance must equal the sum of per-bin variances,
    # computed here from first principles (DC excluded as in the synthesis)
    spec = TurbulenceSpec(cn2=7e-14, l0=5e-3, L0=20.0)
    dz = 50.0
    kap1 = 2 * np.pi * np.fft.fftfreq(GRID.n_points, GRID.dx)
    kx, ky = np.meshgrid(kap1, kap1)
    kappa = np.hypot(kx, ky)
    dk = 2 * np.pi / (GRID.n_points * GRID.dx)
    per_bin = K850**2 * dz * spectrum(kappa, spec) * dk**2
    analytic = per_bin.sum() - per_bin[0, 0]
    assert screen_pixel_variance(GRID, spec, dz, K850) == pytest.approx(analytic, rel=1e-9)

    rng = np.random.default_rng(7)
    bin_std = screen_bin_std(GRID, spec, dz, K850)
    stack = np.stack(
        [generate_phase_screen(spec, GRID, dz, K850, rng, bin_std=bin_std).phase for _ in range(500)]
    )
    empirical = stack.var(axis=0).mean()
    assert empirical == pytest.approx(analytic, rel=0.10)
    # stationarity: center quarter carries the same variance as the full frame
    q = GRID.n_points // 4
    center = stack[:, q : 3 * q, q : 3 * q].var(axis=0).mean()
    assert center == pytest.approx(empirical, rel=0.10)
    # zero-mean over the ensemble
    assert abs(stack.mean()) < 5 * stack.std() / np.sqrt(stack.size)


def test_screen_variance_linear_in_cn2():
    double = TurbulenceSpec(cn2=1.4e-13, l0=5e-3, L0=20.0)
    spec = TurbulenceSpec(cn2=7e-14, l0=5e-3, L0=20.0)
    v1 = screen_pixel_variance(GRID, spec, 50.0, K850)
    v2 = screen_pixel_variance(GRID, double, 50.0, K850)
    assert v2 == pytest.approx(2 * v1, rel=1e-12)
    # and linear in slab thickness, so screen count does not change the total
    v_half = screen_pixel_variance(GRID, spec, 25.0, K850)
    assert 2 * v_half == pytest.approx(v1, rel=1e-12)


def test_phase_screen_type_validation():
    with pytest.raises(ValueError):
        PhaseScreen(GRID, np.zeros((4, 4)))
    bad = np.zeros((GRID.n_points, GRID.n_points))
    bad[3, 3] = np.inf
    with pytest.raises(ValueError):
        PhaseScreen(GRID, bad)


def test_phase_psd_scaling():
    # k^2 dz scaling against the refractive-index spectrum
    kappa = np.geomspace(1, 1e3, 10)
    assert np.allclose(
        phase_psd(kappa, WEAK, 50.0, K850), K850**2 * 50.0 * spectrum(kappa, WEAK), rtol=1e-14
    )
