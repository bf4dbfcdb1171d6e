"""Split-step Fourier propagation through phase-screen stacks.

One channel realization launches every transmit OAM mode through the same
stack of fresh random screens (screen first, then a free-space half step per
slab), projects the received field onto each receive-mode analyzer, and
collects the irradiance matrix I[m, n].  Monte Carlo campaigns aggregate many
realizations into a plain-text sample store keyed by a config digest.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, field
from functools import lru_cache
from math import pi

import numpy as np

from .field_grid import (
    ComplexField,
    GridSpec,
    GridTooSmallError,
    LGModeSpec,
    ModeSet,
    lg_field,
)
from .turbulence import TurbulenceSpec, generate_phase_screen, screen_bin_std

STORE_HEADER = "oam-irradiance v1"


class FlaggedRealizationError(RuntimeError):
    """A realization produced a non-finite field and must be excluded."""


@dataclass(frozen=True)
class ChannelConfig:
    """Full link geometry: wavelength/waist/distance, screen stack, grid,
    turbulence, and the transmit/receive mode sets."""

    lam: float
    w0: float
    z_total: float
    n_screens: int
    grid: GridSpec
    turbulence: TurbulenceSpec
    tx_modes: ModeSet
    rx_modes: ModeSet
    absorber: bool = False

    def __post_init__(self):
        if self.z_total <= 0:
            raise ValueError(f"z_total must be positive, got {self.z_total}")
        if self.n_screens < 1:
            raise ValueError(f"n_screens must be >= 1, got {self.n_screens}")
        if self.lam <= 0 or self.w0 <= 0:
            raise ValueError("wavelength and waist must be positive")
        d_rx = self.receiver_diameter
        if d_rx > self.grid.side:
            raise GridTooSmallError(
                f"receiver diameter 2*w(z)*sqrt(m_max) = {d_rx:.4g} m exceeds the "
                f"grid side {self.grid.side:.4g} m"
            )

    @property
    def k(self) -> float:
        return 2 * pi / self.lam

    @property
    def dz(self) -> float:
        """Slab thickness z_total / n_screens [m]."""
        return self.z_total / self.n_screens

    @property
    def receiver_diameter(self) -> float:
        """Aperture needed to collect the highest-order mode at the receiver."""
        m_max = max(self.tx_modes.max_abs_charge, self.rx_modes.max_abs_charge)
        mode = LGModeSpec(m=1, w0=self.w0, lam=self.lam)
        return 2 * mode.beam_radius(self.z_total) * np.sqrt(m_max)


@dataclass(frozen=True)
class ChannelRealization:
    """Irradiance matrix of one turbulence draw: rows follow tx_modes, columns
    rx_modes.  Entries lie in [0, 1] and each row sums to at most 1 (the
    propagation is unitary and the analyzers are orthonormal)."""

    i_matrix: np.ndarray
    seed_tag: int

    def __post_init__(self):
        m = np.asarray(self.i_matrix, dtype=np.float64)
        if not np.all(np.isfinite(m)):
            raise FlaggedRealizationError(f"non-finite irradiance in realization {self.seed_tag}")
        if m.min() < 0 or m.max() > 1 + 1e-9:
            raise ValueError(f"irradiance outside [0, 1+1e-9] in realization {self.seed_tag}")
        if m.sum(axis=1).max() > 1 + 1e-9:
            raise ValueError(f"row power sum exceeds 1 in realization {self.seed_tag}")
        m.setflags(write=False)
        object.__setattr__(self, "i_matrix", m)


@dataclass(frozen=True)
class RealizationStream:
    """Deterministic RNG substreams: one per (realization, screen) pair,
    derived from the master seed and independent of execution order."""

    master_seed: int
    realization_index: int

    def screen_generator(self, screen_index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            [int(self.master_seed), int(self.realization_index), int(screen_index)]
        )
        return np.random.default_rng(seq)


@dataclass
class IrradianceSampleSet:
    """Aligned per-(m, n) irradiance sample vectors from one campaign."""

    digest: str
    tx_modes: ModeSet
    rx_modes: ModeSet
    realization_indices: np.ndarray
    values: dict = field(repr=False)
    excluded: tuple = ()

    @property
    def n(self) -> int:
        return len(self.realization_indices)

    def samples(self, m: int, n: int) -> np.ndarray:
        key = (int(m), int(n))
        if key not in self.values:
            raise KeyError(f"no samples for channel pair (m={m}, n={n})")
        return self.values[key]

    def validate(self):
        for key, v in self.values.items():
            if len(v) != self.n:
                raise ValueError(f"sample vector {key} is misaligned with realizations")


def config_digest(cfg: ChannelConfig, master_seed: int) -> str:
    """Stable sha256 digest of a campaign: channel config plus master seed."""
    payload = {"channel": asdict(cfg), "master_seed": int(master_seed)}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def transfer_function(grid: GridSpec, dz: float, k: float) -> np.ndarray:
    """Paraxial free-space transfer function exp(+i (kx^2+ky^2) dz / (2k)).

    The + sign pairs with the e^{-ikz}-carrier field convention used by the
    mode synthesis (e^{-im*phi}, negative curvature phase), so vacuum
    propagation reproduces the analytic beam evolution exactly.
    """
    kap1 = 2 * pi * np.fft.fftfreq(grid.n_points, grid.dx)
    kx, ky = np.meshgrid(kap1, kap1)
    return np.exp(1j * (kx**2 + ky**2) * dz / (2 * k))


def angular_spectrum_step(u: ComplexField, dz: float, k: float) -> ComplexField:
    """Propagate a field through dz of free space (negative dz back-propagates)."""
    h = transfer_function(u.grid, dz, k)
    return ComplexField(u.grid, np.fft.ifft2(np.fft.fft2(u.values) * h))


@lru_cache(maxsize=8)
def _propagation_tables(cfg: ChannelConfig):
    """Per-config arrays reused across realizations: launch fields, analyzer
    stack, slab transfer function, screen spectral std, optional absorber."""
    tx = np.stack(
        [lg_field(LGModeSpec(m=m, w0=cfg.w0, lam=cfg.lam), cfg.grid, 0.0).values for m in cfg.tx_modes]
    )
    rx = np.stack(
        [
            lg_field(LGModeSpec(m=n, w0=cfg.w0, lam=cfg.lam), cfg.grid, cfg.z_total).values
            for n in cfg.rx_modes
        ]
    )
    h = transfer_function(cfg.grid, cfg.dz, cfg.k)
    bin_std = screen_bin_std(cfg.grid, cfg.turbulence, cfg.dz, cfg.k)
    absorber = None
    if cfg.absorber:
        r, _ = cfg.grid.polar()
        absorber = np.exp(-((r / (0.47 * cfg.grid.side)) ** 16))
    return tx, rx, h, bin_std, absorber


def propagate_realization(cfg: ChannelConfig, stream: RealizationStream) -> ChannelRealization:
    """Run one turbulence draw: all tx modes share the same screen stack."""
    tx, rx, h, bin_std, absorber = _propagation_tables(cfg)
    n = cfg.grid.n_points
    screens = np.empty((cfg.n_screens, n, n))
    for j in range(cfg.n_screens):
        screens[j] = generate_phase_screen(
            cfg.turbulence, cfg.grid, cfg.dz, cfg.k, stream.screen_generator(j), bin_std=bin_std
        ).phase
    factors = np.exp(1j * screens)
    i_matrix = np.empty((len(cfg.tx_modes), len(cfg.rx_modes)))
    for row, u0 in enumerate(tx):
        u = u0
        for j in range(cfg.n_screens):
            u = np.fft.ifft2(np.fft.fft2(u * factors[j]) * h)
            if absorber is not None:
                u = u * absorber
        if not np.all(np.isfinite(u.view(np.float64))):
            raise FlaggedRealizationError(
                f"non-finite field for tx mode {cfg.tx_modes.modes[row]} "
                f"in realization {stream.realization_index}"
            )
        proj = np.tensordot(u, rx.conj(), axes=([0, 1], [1, 2])) * cfg.grid.dx**2
        i_matrix[row] = np.abs(proj) ** 2
    return ChannelRealization(i_matrix, seed_tag=stream.realization_index)


def _run_one(args):
    cfg, master_seed, idx = args
    try:
        return idx, propagate_realization(cfg, RealizationStream(master_seed, idx))
    except FlaggedRealizationError:
        return idx, None


def run_monte_carlo(
    cfg: ChannelConfig,
    n_realizations: int,
    master_seed: int,
    *,
    jobs: int = 1,
    start_index: int = 0,
    store_path=None,
) -> IrradianceSampleSet:
    """Generate a deterministic campaign of independent realizations.

    Results are identical for any ``jobs`` value because every realization
    draws from its own (master_seed, index)-keyed substreams.  Flagged
    realizations are excluded and reported via ``excluded``.  When
    ``store_path`` is given the samples are appended to the store (the store
    digest must match this campaign).
    """
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    indices = range(start_index, start_index + n_realizations)
    tasks = [(cfg, master_seed, i) for i in indices]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_run_one, tasks, chunksize=8))
    else:
        results = dict(map(_run_one, tasks))
    kept = [(i, results[i]) for i in indices if results[i] is not None]
    excluded = tuple(i for i in indices if results[i] is None)
    digest = config_digest(cfg, master_seed)
    values = {
        (m, n): np.array([real.i_matrix[a, b] for _, real in kept])
        for a, m in enumerate(cfg.tx_modes)
        for b, n in enumerate(cfg.rx_modes)
    }
    sample_set = IrradianceSampleSet(
        digest=digest,
        tx_modes=cfg.tx_modes,
        rx_modes=cfg.rx_modes,
        realization_indices=np.array([i for i, _ in kept], dtype=np.int64),
        values=values,
        excluded=excluded,
    )
    if store_path is not None:
        append_store(store_path, sample_set)
    return sample_set


def write_store(path, sample_set: IrradianceSampleSet):
    """Write a sample store from scratch (two header lines, then CSV rows)."""
    with open(path, "w") as fh:
        fh.write(f"{STORE_HEADER}\n")
        fh.write(f"config-digest: {sample_set.digest}\n")
        _write_rows(fh, sample_set)


def append_store(path, sample_set: IrradianceSampleSet):
    """Append rows to a store, creating it if absent.  Mixing campaigns with
    different digests is refused."""
    import os

    if not os.path.exists(path):
        write_store(path, sample_set)
        return
    with open(path) as fh:
        header = fh.readline().strip()
        digest_line = fh.readline().strip()
    if header != STORE_HEADER:
        raise ValueError(f"{path} is not a sample store (header {header!r})")
    existing = digest_line.removeprefix("config-digest: ")
    if existing != sample_set.digest:
        raise ValueError(
            f"store digest {existing[:12]}... does not match campaign digest "
            f"{sample_set.digest[:12]}...; refusing to mix campaigns"
        )
    with open(path, "a") as fh:
        _write_rows(fh, sample_set)


def _write_rows(fh, sample_set: IrradianceSampleSet):
    for pos, idx in enumerate(sample_set.realization_indices):
        for m in sample_set.tx_modes:
            for n in sample_set.rx_modes:
                value = sample_set.values[(m, n)][pos]
                fh.write(f"{idx}, {m}, {n}, {value:.17g}\n")


def read_store(path) -> IrradianceSampleSet:
    """Load a sample store back into aligned per-channel vectors."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != STORE_HEADER:
            raise ValueError(f"{path} is not a sample store (header {header!r})")
        digest = fh.readline().strip().removeprefix("config-digest: ")
        for line in fh:
            if not line.strip():
                continue
            idx_s, m_s, n_s, v_s = line.split(",")
            rows.append((int(idx_s), int(m_s), int(n_s), float(v_s)))
    tx_order, rx_order, per_key = [], [], {}
    indices = []
    for idx, m, n, v in rows:
        if m not in tx_order:
            tx_order.append(m)
        if n not in rx_order:
            rx_order.append(n)
        per_key.setdefault((m, n), []).append(v)
        if not indices or indices[-1] != idx:
            indices.append(idx)
    sample_set = IrradianceSampleSet(
        digest=digest,
        tx_modes=ModeSet(tuple(tx_order)),
        rx_modes=ModeSet(tuple(rx_order)),
        realization_indices=np.array(indices, dtype=np.int64),
        values={k: np.array(v) for k, v in per_key.items()},
    )
    sample_set.validate()
    return sample_set
