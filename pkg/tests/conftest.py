import numpy as np
import pytest

from oamfso.field_grid import GridSpec, ModeSet
from oamfso.propagation import ChannelConfig, run_monte_carlo
from oamfso.turbulence import TurbulenceSpec

PAPER_SIDE = 512 * 1.36e-3  # 0.69632 m


def desk_grid(n_points: int = 256) -> GridSpec:
    """Desk-scale grid: fewer points, same physical side as the full setup."""
    return GridSpec(n_points, PAPER_SIDE / n_points)


def desk_config(cn2: float, tx, rx, *, n_points: int = 256, n_screens: int = 20) -> ChannelConfig:
    return ChannelConfig(
        lam=850e-9,
        w0=0.016,
        z_total=1000.0,
        n_screens=n_screens,
        grid=desk_grid(n_points),
        turbulence=TurbulenceSpec(cn2=cn2, l0=5e-3, L0=20.0),
        tx_modes=ModeSet(tuple(tx)),
        rx_modes=ModeSet(tuple(rx)),
    )


@pytest.fixture(scope="session")
def weak_campaign():
    """Weak-turbulence desk campaign: 1000 draws of mode +1 vs analyzers 0..2."""
    cfg = desk_config(5e-15, tx=(1,), rx=(0, 1, 2))
    return run_monte_carlo(cfg, 1000, master_seed=20250809, jobs=2)


@pytest.fixture(scope="session")
def moderate_campaign():
    """Moderate-turbulence desk campaign: square set {+1,+2,+3}, 1000 draws."""
    cfg = desk_config(7e-14, tx=(1, 2, 3), rx=(1, 2, 3))
    return run_monte_carlo(cfg, 1000, master_seed=20250810, jobs=2)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
