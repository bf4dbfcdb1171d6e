"""Refractive-index turbulence spectrum, regime classification, and FFT phase screens.

The refractive-index fluctuations follow the modified atmospheric (von
Karman / Hill) spectrum with inner- and outer-scale roll-offs.  Thin random
phase screens stand in for turbulent slabs: each screen is the real part of
an inverse FFT of complex circular-Gaussian spectral draws whose per-bin
variance follows the phase power spectrum of a slab of thickness dz.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import pi

import numpy as np

from .field_grid import GridSpec


@dataclass(frozen=True)
class TurbulenceSpec:
    """Turbulence strength and scales: Cn^2 [m^-2/3], inner scale l0 [m],
    outer scale L0 [m]."""

    cn2: float
    l0: float = 5e-3
    L0: float = 20.0

    def __post_init__(self):
        if self.cn2 < 0:
            raise ValueError(f"cn2 must be >= 0, got {self.cn2}")
        if not 0 < self.l0 < self.L0:
            raise ValueError(f"need 0 < l0 < L0, got l0={self.l0}, L0={self.L0}")

    @property
    def kappa0(self) -> float:
        """Outer-scale frequency 2*pi/L0 [rad/m]."""
        return 2 * pi / self.L0

    @property
    def kappa_l(self) -> float:
        """Inner-scale frequency 3.3/l0 [rad/m]."""
        return 3.3 / self.l0


class Regime(enum.Enum):
    """Turbulence regime partition by Rytov variance."""

    WEAK = "weak"
    MODERATE_TO_STRONG = "moderate-to-strong"
    SATURATION = "saturation"


@dataclass(frozen=True)
class PhaseScreen:
    """Thin-slab phase perturbation [rad] on a GridSpec."""

    grid: GridSpec
    phase: np.ndarray

    def __post_init__(self):
        ph = np.asarray(self.phase, dtype=np.float64)
        if ph.shape != (self.grid.n_points, self.grid.n_points):
            raise ValueError("phase array does not match grid")
        if not np.all(np.isfinite(ph)):
            raise ValueError("phase screen contains non-finite values")
        ph.setflags(write=False)
        object.__setattr__(self, "phase", ph)


def spectrum(kappa, spec: TurbulenceSpec):
    """Modified atmospheric refractive-index spectrum Phi_n(kappa).

    Phi_n = 0.033 Cn^2 exp(-kappa^2/kappa_l^2) / (kappa^2+kappa_0^2)^(11/6)
            * [1 + 1.802 (kappa/kappa_l) - 0.254 (kappa/kappa_l)^(7/6)]

    Finite at kappa = 0 thanks to the outer-scale cutoff.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    if np.any(kappa < 0):
        raise ValueError("spatial frequency must be >= 0")
    ratio = kappa / spec.kappa_l
    bump = 1.0 + 1.802 * ratio - 0.254 * ratio ** (7 / 6)
    return (
        0.033
        * spec.cn2
        * np.exp(-(kappa**2) / spec.kappa_l**2)
        / (kappa**2 + spec.kappa0**2) ** (11 / 6)
        * bump
    )


def rytov_variance(cn2: float, lam: float, z: float) -> float:
    """Plane-wave Rytov variance 1.23 Cn^2 (2*pi/lambda)^(7/6) z^(11/6)."""
    if cn2 < 0 or lam <= 0 or z <= 0:
        raise ValueError("need cn2 >= 0, lambda > 0, z > 0")
    return 1.23 * cn2 * (2 * pi / lam) ** (7 / 6) * z ** (11 / 6)


def classify_regime(sigma_r2: float) -> Regime:
    """Map a Rytov variance onto weak (<= 0.3), moderate-to-strong (<= 5),
    or saturation (> 5)."""
    if sigma_r2 < 0:
        raise ValueError(f"Rytov variance must be >= 0, got {sigma_r2}")
    if sigma_r2 <= 0.3:
        return Regime.WEAK
    if sigma_r2 <= 5.0:
        return Regime.MODERATE_TO_STRONG
    return Regime.SATURATION


def phase_psd(kappa, spec: TurbulenceSpec, dz: float, k: float):
    """Phase power spectrum of a slab of thickness dz at wavenumber k.

    Phi_phi(kappa) = k^2 dz Phi_n(kappa).  Strength is linear in both Cn^2
    and dz, so splitting a path into thinner slabs leaves the accumulated
    variance unchanged.  The constant is calibrated so that a 20-screen,
    1 km link at Cn^2 = 5e-15 (lambda = 850 nm, w0 = 1.6 cm) leaves the
    self-channel irradiance of low-order OAM modes concentrated near 1.
    """
    return k**2 * dz * spectrum(kappa, spec)


def screen_bin_std(grid: GridSpec, spec: TurbulenceSpec, dz: float, k: float) -> np.ndarray:
    """Per-bin standard deviation of the complex spectral draws (DC zeroed).

    Bins live on the numpy fft2 frequency layout; the bin spacing is
    dkappa = 2*pi/(n*dx) and each bin gets std sqrt(Phi_phi(kappa))*dkappa.
    The DC bin is zeroed: it contributes only a piston, which carries no
    physical information and would otherwise dominate the variance budget.
    """
    kap1 = 2 * pi * np.fft.fftfreq(grid.n_points, grid.dx)
    kx, ky = np.meshgrid(kap1, kap1)
    kappa = np.hypot(kx, ky)
    dkappa = 2 * pi / (grid.n_points * grid.dx)
    sig = np.sqrt(phase_psd(kappa, spec, dz, k)) * dkappa
    sig[0, 0] = 0.0
    return sig


def screen_pixel_variance(grid: GridSpec, spec: TurbulenceSpec, dz: float, k: float) -> float:
    """Ensemble per-pixel phase variance implied by the spectral synthesis."""
    return float(np.sum(screen_bin_std(grid, spec, dz, k) ** 2))


def generate_phase_screen(
    spec: TurbulenceSpec,
    grid: GridSpec,
    dz: float,
    k: float,
    rng: np.random.Generator,
    *,
    subharmonics: bool = False,
    bin_std: np.ndarray | None = None,
) -> PhaseScreen:
    """Draw one random phase screen for a slab of thickness dz.

    A complex circular-Gaussian array with per-bin std ``screen_bin_std`` is
    synthesized to real space with an inverse FFT; the real part is the
    screen.  Pass a precomputed ``bin_std`` to amortize the spectrum
    evaluation across many draws (it must match grid/spec/dz/k).
    """
    if dz <= 0:
        raise ValueError(f"slab thickness must be positive, got {dz}")
    if subharmonics:
        raise NotImplementedError("subharmonic low-frequency augmentation is reserved")
    n = grid.n_points
    if spec.cn2 == 0.0:
        return PhaseScreen(grid, np.zeros((n, n)))
    if bin_std is None:
        bin_std = screen_bin_std(grid, spec, dz, k)
    draws = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    # ifft2 carries 1/n^2; undo it so Re(sum_k c_k e^{i k.x}) keeps the
    # per-pixel variance sum(bin_std^2)
    screen = np.fft.ifft2(draws * bin_std).real * (n * n)
    return PhaseScreen(grid, screen)
