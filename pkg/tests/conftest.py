import numpy as np
import pytest

from torkit import FailSlowPeriod, FailStopPeriod


def random_fail_stop(rng: np.random.Generator, scale: float = 100.0) -> FailStopPeriod:
    return FailStopPeriod(
        t_sr=float(rng.uniform(0, 0.1 * scale)),
        r_sr=float(rng.uniform(0, 1)),
        t_h=float(rng.uniform(0.1, scale)),
        n_ckpt=int(rng.integers(0, 10)),
        t_ckpt=float(rng.uniform(0, 0.05 * scale)),
        t_rb=float(rng.uniform(0, 0.2 * scale)),
        t_r=float(rng.uniform(0, 0.3 * scale)),
    )


def random_fail_slow(rng: np.random.Generator, scale: float = 100.0) -> FailSlowPeriod:
    return FailSlowPeriod(
        t_sr=float(rng.uniform(0, 0.1 * scale)),
        r_sr=float(rng.uniform(0, 1)),
        t_h=float(rng.uniform(0.1, scale)),
        n_ckpt=int(rng.integers(0, 10)),
        t_ckpt=float(rng.uniform(0, 0.05 * scale)),
        t_fs=float(rng.uniform(0, 0.3 * scale)),
        r_fs=float(rng.uniform(0, 1)),
        t_r=float(rng.uniform(0, 0.3 * scale)),
    )


@pytest.fixture
def worked_fail_stop() -> FailStopPeriod:
    # TOR 91/110, MTBF 100
    return FailStopPeriod(t_sr=2, r_sr=0.5, t_h=90, n_ckpt=3, t_ckpt=1, t_rb=5, t_r=10)


@pytest.fixture
def worked_fail_slow() -> FailSlowPeriod:
    # TOR 95/110, MTBF 95
    return FailSlowPeriod(t_sr=2, r_sr=0.5, t_h=90, n_ckpt=3, t_ckpt=1, t_fs=10, r_fs=0.4, t_r=5)
