import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellfree.propagation import (
    FronthaulParams,
    InvalidTarget,
    NoLoad,
    RadioParams,
    compression_split,
    db_to_linear,
    estimation_variance,
    large_scale_gain,
    linear_to_db,
    max_scheduled_users,
    path_loss,
    scnr,
)


def test_path_loss_bounded():
    assert path_loss(0.5) == 1.0
    assert path_loss(1.0) == 1.0
    assert path_loss(10.0) == pytest.approx(10**3.7)


def test_edge_snr_from_centre():
    # 100 dB transmit SNR at 500 m with exponent 3.7
    radio = RadioParams.from_db(rho_d_db=100)
    edge = linear_to_db(radio.rho_d * large_scale_gain(500.0, radio))
    assert edge == pytest.approx(0.1381, abs=1e-3)
    assert edge == pytest.approx(100 - 37 * math.log10(500), abs=1e-12)


def test_compression_split_example():
    sig, noise = compression_split(20.0, 4)
    assert (sig, noise) == (pytest.approx(0.96875, abs=1e-15), pytest.approx(0.03125, abs=1e-15))
    assert scnr(20.0, 4) == pytest.approx(31.0, rel=1e-14)


@given(st.floats(0.1, 200), st.integers(1, 200))
def test_compression_split_sums_to_one(c_f, k):
    sig, noise = compression_split(c_f, k)
    assert sig + noise == pytest.approx(1.0, abs=1e-12)
    assert sig / noise == pytest.approx(2 ** (c_f / k) - 1, rel=1e-10)


def test_compression_rejects_empty_ap():
    with pytest.raises(NoLoad):
        compression_split(10.0, 0)


@pytest.mark.parametrize("c_f, t_s_db, k", [(20.0, 5.0, 9), (45.0, 15.0, 8), (10.0, 30.0, 1)])
def test_max_scheduled_users(c_f, t_s_db, k):
    assert max_scheduled_users(c_f, db_to_linear(t_s_db)) == math.floor(c_f / math.log2(1 + db_to_linear(t_s_db)))
    assert max_scheduled_users(c_f, db_to_linear(t_s_db)) == k


def test_max_scheduled_users_boundary():
    t_s = db_to_linear(15.0)
    assert max_scheduled_users(7 * math.log2(1 + t_s), t_s) == 7
    with pytest.raises(InvalidTarget):
        max_scheduled_users(10.0, 0.0)


def test_fronthaul_params():
    fh = FronthaulParams.from_target_db(45.0, 15.0)
    assert fh.k_max == 8
    with pytest.raises(ValueError):
        FronthaulParams(c_f=1.0, t_s=db_to_linear(30.0))


def test_estimation_variance_limits():
    radio = RadioParams(tau_p=1, rho_p=1.0)
    # gamma = beta^2 / (1 + beta) for unit pilot gain
    assert estimation_variance(1.0, 0.0, radio) == pytest.approx(0.5)
    assert estimation_variance(1.0, 1.0, radio) == pytest.approx(1 / 3)
    big = RadioParams(tau_p=80, rho_p=1e10)
    assert estimation_variance(1e-3, 0.0, big) == pytest.approx(1e-3, rel=1e-5)


def test_db_round_trip():
    np.testing.assert_allclose(linear_to_db(db_to_linear(np.array([-3.0, 0.0, 15.0]))), [-3, 0, 15])
