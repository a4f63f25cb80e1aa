import math

import numpy as np
import pytest

from cecbench.channel import (
    ChannelParams,
    LinkSample,
    db_to_linear,
    link_capacity_bps,
    outage_probability,
    sample_fade,
    sample_fades,
    spawn_stream,
)

TABLE = dict(bandwidth_hz=20e6, rate_bps=200e3)


def test_db_conversion():
    assert db_to_linear(10) == pytest.approx(10.0)
    assert db_to_linear(0) == 1.0
    assert db_to_linear(-10) == pytest.approx(0.1)


def test_outage_vanishes_for_tiny_rate():
    chan = ChannelParams(snr_db=10, bandwidth_hz=20e6, rate_bps=1e-6)
    assert outage_probability(chan) < 1e-12


def test_outage_reference_point():
    # 200 kbps over 20 MHz at 10 dB: 1 - exp(-(2^0.01 - 1)/10)
    chan = ChannelParams(snr_db=10, **TABLE)
    assert outage_probability(chan) == pytest.approx(6.954e-4, rel=1e-3)


def test_outage_vanishes_at_high_snr():
    chan = ChannelParams(snr_db=300, **TABLE)
    assert outage_probability(chan) < 1e-20


def test_outage_range():
    # Strictly below one across the evaluated operating band; deep-outage
    # extremes may round to 1.0 in floating point.
    for snr in (10, 20, 40, 60):
        for rate in (1e3, 2e5, 1e7, 1e8):
            p = outage_probability(ChannelParams(snr_db=snr, bandwidth_hz=20e6, rate_bps=rate))
            assert 0.0 <= p < 1.0
    extreme = ChannelParams(snr_db=-30, bandwidth_hz=20e6, rate_bps=1e8)
    assert 0.0 <= outage_probability(extreme) <= 1.0


def test_outage_monotone_in_snr_and_rate():
    # Finite differences over a parameter grid.
    for snr in np.linspace(5, 60, 12):
        for rate in np.geomspace(1e4, 5e7, 12):
            base = ChannelParams(snr_db=float(snr), bandwidth_hz=20e6, rate_bps=float(rate))
            up_snr = outage_probability(base.with_snr(float(snr) + 0.5))
            up_rate = outage_probability(base.with_rate(float(rate) * 1.05))
            p = outage_probability(base)
            assert up_snr < p
            assert up_rate > p


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        ChannelParams(snr_db=10, bandwidth_hz=0, rate_bps=1e5)
    with pytest.raises(ValueError):
        ChannelParams(snr_db=10, bandwidth_hz=1e6, rate_bps=0)
    with pytest.raises(ValueError):
        ChannelParams(snr_db=math.inf, bandwidth_hz=1e6, rate_bps=1e5)
    with pytest.raises(ValueError):
        LinkSample(fade_power=-0.1)


def test_fade_stream_deterministic():
    a = sample_fades(spawn_stream(123, 4, 5), 100)
    b = sample_fades(spawn_stream(123, 4, 5), 100)
    assert np.array_equal(a, b)
    c = sample_fades(spawn_stream(123, 4, 6), 100)
    assert not np.array_equal(a, c)


def test_sample_fade_tags_stream():
    s = sample_fade(spawn_stream(0, 1), seed_path="run0/link1")
    assert s.fade_power >= 0
    assert s.seed_path == "run0/link1"


def test_fade_mean_is_unit():
    fades = sample_fades(spawn_stream(7), 1_000_000)
    assert fades.mean() == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("snr_db", [10.0, 20.0, 30.0])
def test_monte_carlo_outage_matches_closed_form(snr_db):
    # Empirical P(capacity < R) against the closed form, 3-sigma binomial band.
    chan = ChannelParams(snr_db=snr_db, **TABLE)
    n = 1_000_000
    fades = sample_fades(spawn_stream(99, int(snr_db)), n)
    capacity = chan.bandwidth_hz * np.log2(1.0 + chan.snr_linear * fades)
    freq = float((capacity < chan.rate_bps).mean())
    p = outage_probability(chan)
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(freq - p) <= 3 * sigma + 1e-9


def test_monte_carlo_outage_high_loss_regime():
    chan = ChannelParams(snr_db=10, bandwidth_hz=20e6, rate_bps=1e8)
    n = 200_000
    fades = sample_fades(spawn_stream(5), n)
    freq = float(
        (chan.bandwidth_hz * np.log2(1.0 + chan.snr_linear * fades) < chan.rate_bps).mean()
    )
    p = outage_probability(chan)
    assert abs(freq - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_link_capacity_matches_formula():
    chan = ChannelParams(snr_db=10, **TABLE)
    assert link_capacity_bps(chan, 0.0) == 0.0
    assert link_capacity_bps(chan, 1.0) == pytest.approx(20e6 * math.log2(11.0))
