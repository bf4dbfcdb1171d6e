import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfc

from oamfso.ggd import GgdParams, cdf as ggd_cdf, moment, sample
from oamfso.metrics import (
    IMDD_CAPACITY_FACTOR,
    SnrModel,
    average_ber,
    db_to_linear,
    ergodic_capacity,
    median_snr,
    metric_curves,
    outage_probability,
    snr_cdf,
    snr_pdf,
)

P = GgdParams(2.0, 0.5, 1.5)
MODEL = SnrModel(P, mu=100.0)


def mc_snr_draws(model: SnrModel, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return model.mu * sample(model.params, n, rng) ** 2


def test_model_validation_and_normalization():
    with pytest.raises(ValueError):
        SnrModel(P, mu=0.0)
    norm = SnrModel.from_irradiance(P, 10.0)
    assert moment(1.0, norm.params) == pytest.approx(1.0, rel=1e-12)
    assert norm.mu == 10.0
    assert SnrModel(P, 100.0).mu_db == pytest.approx(20.0)


def test_snr_pdf_normalizes():
    integral, _ = quad(lambda g: snr_pdf(g, MODEL), 0, np.inf, epsabs=1e-12, limit=200)
    assert integral == pytest.approx(1.0, abs=1e-7)


def test_snr_pdf_rejects_nonpositive():
    with pytest.raises(ValueError):
        snr_pdf(0.0, MODEL)
    with pytest.raises(ValueError):
        snr_cdf(-1.0, MODEL)


def test_change_of_variables_mass_identity():
    g1, g2 = 5.0, 60.0
    mass_quad, _ = quad(lambda g: snr_pdf(g, MODEL), g1, g2, epsabs=1e-13, limit=200)
    envelope_mass = ggd_cdf(np.sqrt(g2 / MODEL.mu), P) - ggd_cdf(np.sqrt(g1 / MODEL.mu), P)
    assert mass_quad == pytest.approx(envelope_mass, abs=1e-8)
    # and the closed CDF agrees with the envelope CDF exactly
    assert snr_cdf(g2, MODEL) == pytest.approx(ggd_cdf(np.sqrt(g2 / MODEL.mu), P), abs=1e-10)


def test_snr_pdf_exponential_special_case():
    model = SnrModel(GgdParams(1, 1, 1), mu=25.0)
    g = np.array([0.5, 4.0, 30.0])
    expected = np.exp(-np.sqrt(g / model.mu)) / (2 * np.sqrt(g * model.mu))
    assert np.allclose(snr_pdf(g, model), expected, rtol=1e-12)


def test_snr_cdf_against_quadrature():
    expected, _ = quad(lambda g: snr_pdf(g, MODEL), 0, 50.0, epsabs=1e-13, limit=200)
    assert snr_cdf(50.0, MODEL) == pytest.approx(expected, abs=1e-8)


def test_capacity_vanishes_at_low_snr():
    tiny = SnrModel(P, mu=1e-12)
    assert 0 <= ergodic_capacity(tiny) < 1e-9


def test_capacity_monte_carlo_oracle():
    draws = mc_snr_draws(MODEL, 1_000_000, seed=11)
    mc = np.mean(np.log1p(IMDD_CAPACITY_FACTOR * draws))
    assert ergodic_capacity(MODEL) == pytest.approx(mc, rel=0.005)


def test_capacity_units():
    nats = ergodic_capacity(MODEL)
    assert ergodic_capacity(MODEL, unit="bits") == pytest.approx(nats / np.log(2), rel=1e-12)
    with pytest.raises(ValueError):
        ergodic_capacity(MODEL, unit="dits")


def test_capacity_ordering_between_fading_severities():
    # mild fading (concentrated envelope) beats severe fading above ~4 dB;
    # below that, mean normalization lets the heavier tail raise E[I^2] and
    # the low-SNR expansion C ~ mu E[I^2] inverts the ordering
    mild = SnrModel.from_irradiance(GgdParams(20.0, 1.0, 4.0), 1.0).params
    severe = SnrModel.from_irradiance(GgdParams(1.0, 1.0, 1.0), 1.0).params
    for mu_db in np.linspace(5, 40, 8):
        mu = db_to_linear(mu_db)
        assert ergodic_capacity(SnrModel(mild, mu)) > ergodic_capacity(SnrModel(severe, mu))


def test_outage_limits_and_monte_carlo():
    assert outage_probability(MODEL, 1e-30) < 1e-12
    with pytest.raises(ValueError):
        outage_probability(MODEL, 0.0)
    draws = mc_snr_draws(MODEL, 1_000_000, seed=4)
    gamma_th = float(np.quantile(draws, 0.1))
    p = outage_probability(MODEL, gamma_th)
    p_hat = np.mean(draws < gamma_th)
    se = np.sqrt(p_hat * (1 - p_hat) / len(draws))
    assert abs(p - p_hat) <= 3 * se


def test_outage_median_self_consistency():
    assert outage_probability(MODEL, median_snr(MODEL)) == pytest.approx(0.5, abs=1e-9)


def test_ber_limit_at_zero_snr():
    tiny = SnrModel(P, mu=1e-12)
    assert average_ber(tiny) == pytest.approx(0.5, abs=1e-5)


def test_ber_dual_path_agreement():
    rng = np.random.default_rng(8)
    for _ in range(20):
        params = GgdParams(rng.uniform(0.5, 5), rng.uniform(0.2, 3), rng.uniform(0.5, 3))
        model = SnrModel(params, mu=db_to_linear(rng.uniform(0, 35)))
        ig = average_ber(model, method="incomplete-gamma")
        qf = average_ber(model, method="q-function")
        assert abs(ig - qf) < 1e-9


def test_ber_monte_carlo_oracle():
    draws = mc_snr_draws(MODEL, 1_000_000, seed=13)
    mc = np.mean(0.5 * erfc(np.sqrt(draws) / 2))
    assert average_ber(MODEL) == pytest.approx(mc, rel=0.01)


def test_capacity_and_ber_monotone_in_mu():
    mus = np.linspace(0, 38, 20)
    caps = [ergodic_capacity(SnrModel(P, db_to_linear(m))) for m in mus]
    bers = [average_ber(SnrModel(P, db_to_linear(m))) for m in mus]
    assert all(a < b for a, b in zip(caps, caps[1:]))
    assert all(a > b for a, b in zip(bers, bers[1:]))
    assert all(c >= 0 for c in caps)


def test_metric_curves_rows():
    rows = metric_curves(SnrModel.from_irradiance(P, 1.0).params, [0.0, 10.0, 20.0], gamma_th=1.0)
    assert len(rows) == 3
    mu_db, cap, pout, ber = rows[1]
    assert mu_db == 10.0
    model = SnrModel(SnrModel.from_irradiance(P, 1.0).params, db_to_linear(10.0))
    assert cap == pytest.approx(ergodic_capacity(model), abs=1e-12)
    assert pout == pytest.approx(outage_probability(model, 1.0), abs=1e-12)
    assert ber == pytest.approx(average_ber(model), abs=1e-12)
