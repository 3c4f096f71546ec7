import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cellfree.coverage import UserCentricConfig  # noqa: E402
from cellfree.propagation import FronthaulParams, RadioParams  # noqa: E402
from cellfree.sim import SimConfig, simulate_user_centric  # noqa: E402

LAMBDA = 1e-4


@pytest.fixture(scope="session")
def uc_config():
    radio = RadioParams.from_db(n_antennas=10, rho_d_db=100, rho_p_db=100, tau_p=80)
    return UserCentricConfig(LAMBDA, LAMBDA, 5, radio, FronthaulParams.from_target_db(45.0, 15.0))


@pytest.fixture(scope="session")
def uc_sim(uc_config):
    """10^4 user-centric drops at lambda_u = lambda_r = 1e-4, N_s = 5 (shared by several tests)."""
    return simulate_user_centric(SimConfig(uc_config, trials=10_000, seed=2024))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def uc_loads(uc_config):
    """Load model for ``uc_config`` at a reduced QMC budget."""
    from cellfree.coverage import load_model

    return load_model(uc_config, budget=2**17)


@pytest.fixture(scope="session")
def trad_config():
    """Finite network with M=32 four-antenna APs, K=20 users, R_s=500 m, T_s=15 dB per-user fronthaul."""
    from cellfree.coverage import TraditionalConfig
    from cellfree.propagation import db_to_linear

    radio = RadioParams.from_db(n_antennas=4, rho_d_db=100, rho_p_db=100, tau_p=80)
    return TraditionalConfig(32, 20, 500.0, radio, 20 * np.log2(1 + db_to_linear(15.0)))


ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, label, ok, detail)``; the terminal summary prints one line per criterion."""

    def record(criterion, label, ok, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        body = "; ".join(f"{label} {'ok' if ok else 'FAILED'}{' (' + d + ')' if d else ''}"
                         for label, ok, d in parts)
        terminalreporter.write_line(f"criterion {crit}: {verdict}  {body}")
