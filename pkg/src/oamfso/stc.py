"""Space-time coding over OAM intensity channels.

Codewords are real M x M matrices (time slots x modes) built from L-ary PAM
intensity symbols; each codebook's alphabet is rescaled so the average
optical power per time slot across the codebook equals 1, which puts all
schemes on the same transmit-power footing.  In each slot the receive modes
see the mode-mixing channel: Y[t, n] = eta * sum_m X[t, m] I[m, n] + N[t, n]
with independent real Gaussian noise of variance N0 per entry; decoding is
exhaustive minimum Frobenius distance.

For orthogonal codes (Alamouti, and trivially any single-mode codebook) the
pairwise error probability averages to a Craig-form integral of the Laplace
transform of gamma_perp = eta^2/(N0 M^2) * sum_mn I_mn^2, with the squared
irradiance envelope approximated by a generalized gamma fit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from .field_grid import ModeSet
from .ggd import GgdParams, fit_ml, laplace_transform
from .metrics import db_to_linear
from .propagation import IrradianceSampleSet

# Golden-code algebraic constants and their Galois conjugates (sqrt(5) -> -sqrt(5),
# taken with positive sign so the normalizers stay real)
Z1 = (1 + sqrt(5)) / 2
Z2 = 2 + sqrt(5)
Z1_BAR = (sqrt(5) - 1) / 2
Z2_BAR = sqrt(5) - 2

ORTHOGONALITY_TOL = 1e-10


class NonOrthogonalCodebookError(ValueError):
    """Raised when an orthogonal-code-only computation meets a general codebook."""


class CodeKind(enum.Enum):
    ALAMOUTI = "alamouti"
    GOLDEN_LIGHT = "golden-light"
    SPATIAL_REPETITION = "spatial-repetition"


@dataclass(frozen=True)
class CodeSpec:
    """Scheme, PAM order, and mode count; the rate in bits per channel use
    follows from symbols-per-block / time-slots."""

    kind: CodeKind
    pam_order: int
    n_modes: int = 2

    def __post_init__(self):
        if self.pam_order < 2 or self.pam_order & (self.pam_order - 1):
            raise ValueError(f"PAM order must be a power of two >= 2, got {self.pam_order}")
        if self.kind in (CodeKind.ALAMOUTI, CodeKind.GOLDEN_LIGHT) and self.n_modes != 2:
            raise ValueError(f"{self.kind.value} code is defined for 2 modes")
        if self.n_modes < 1:
            raise ValueError("need at least one mode")

    @property
    def n_symbols(self) -> int:
        if self.kind is CodeKind.GOLDEN_LIGHT:
            return 4
        return self.n_modes  # Alamouti: 2; repetition: one symbol per slot

    @property
    def n_slots(self) -> int:
        return self.n_modes

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.pam_order))

    @property
    def bits_per_cu(self) -> float:
        return self.n_symbols * self.bits_per_symbol / self.n_slots


@dataclass(frozen=True)
class Codeword:
    """One transmit block: x[t, m] is the intensity on mode m in slot t."""

    x: np.ndarray
    label: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("codeword entries must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


def _check_alphabet(symbols, pam_order: int):
    for s in symbols:
        if s != int(s) or not 0 <= s <= pam_order - 1:
            raise ValueError(f"symbol {s} outside the {pam_order}-PAM alphabet")


def alamouti_encode(s1, s2, pam_order: int = 2, scale: float = 1.0, label: int = 0) -> Codeword:
    """[[s1, s2], [refl(s2), s1]] with refl(s) = L-1-s.

    At L = 2 the reflection is the bit-wise not; for larger alphabets it is
    the minimal extension that keeps every codeword-difference Gram matrix a
    scaled identity.
    """
    _check_alphabet((s1, s2), pam_order)
    r = pam_order - 1 - s2
    return Codeword(scale * np.array([[s1, s2], [r, s1]], dtype=float), label)


def gl_encode(symbols, pam_order: int = 2, scale: float = 1.0, label: int = 0) -> Codeword:
    """Golden-ratio full-rate block: four symbols over two slots and two modes.

    X = [[(s1 - s2 z1)/sqrt(1+z1^2),        (s3 + s4 z2bar)/sqrt(1+z2bar^2)],
         [(s3 - s4 z2)/sqrt(1+z2^2),        (s1 + s2 z1bar)/sqrt(1+z1bar^2)]]

    Negative entries from the (s - s z) terms are kept: the received block is
    a real electrical baseband quantity.
    """
    s1, s2, s3, s4 = symbols
    _check_alphabet(symbols, pam_order)
    x = np.array(
        [
            [(s1 - s2 * Z1) / sqrt(1 + Z1**2), (s3 + s4 * Z2_BAR) / sqrt(1 + Z2_BAR**2)],
            [(s3 - s4 * Z2) / sqrt(1 + Z2**2), (s1 + s2 * Z1_BAR) / sqrt(1 + Z1_BAR**2)],
        ]
    )
    return Codeword(scale * x, label)


def repetition_encode(symbols, pam_order: int, scale: float = 1.0, label: int = 0) -> Codeword:
    """One symbol per slot repeated on every mode (diversity-only scheme)."""
    _check_alphabet(symbols, pam_order)
    col = np.asarray(symbols, dtype=float)[:, None]
    return Codeword(scale * np.repeat(col, len(symbols), axis=1), label)


@dataclass(frozen=True)
class Codebook:
    spec: CodeSpec
    codewords: tuple
    scale: float

    def __len__(self) -> int:
        return len(self.codewords)

    @property
    def bits_per_codeword(self) -> int:
        return self.spec.n_symbols * self.spec.bits_per_symbol

    def stack(self) -> np.ndarray:
        """(n_codewords, M, M) array in label order."""
        return np.stack([cw.x for cw in self.codewords])


def _encode_one(spec: CodeSpec, symbols, scale: float, label: int) -> Codeword:
    if spec.kind is CodeKind.ALAMOUTI:
        return alamouti_encode(*symbols, pam_order=spec.pam_order, scale=scale, label=label)
    if spec.kind is CodeKind.GOLDEN_LIGHT:
        return gl_encode(symbols, pam_order=spec.pam_order, scale=scale, label=label)
    return repetition_encode(symbols, spec.pam_order, scale=scale, label=label)


def build_codebook(spec: CodeSpec) -> Codebook:
    """Enumerate every symbol tuple (natural binary labels) and rescale the
    alphabet to unit average optical power per time slot over the codebook."""
    tuples = list(np.ndindex(*([spec.pam_order] * spec.n_symbols)))
    raw = [_encode_one(spec, t, 1.0, i) for i, t in enumerate(tuples)]
    slot_power = np.mean([cw.x.sum(axis=1).mean() for cw in raw])
    scale = 1.0 / slot_power
    codewords = tuple(Codeword(scale * cw.x, cw.label) for cw in raw)
    return Codebook(spec=spec, codewords=codewords, scale=scale)


def ml_decode(y: np.ndarray, i_matrix: np.ndarray, codebook: Codebook, eta: float, n0=None) -> int:
    """argmin_x ||y - eta * x @ I||_F^2; ties resolve to the lowest label.

    The product x @ I applies the mode-mixing channel slot by slot (rows of x
    are time slots).  ``n0`` is accepted for signature symmetry with the
    simulator but does not enter the rule: with equal noise variance on every
    entry, maximum likelihood is minimum distance.
    """
    if len(codebook) == 0:
        raise ValueError("empty codebook")
    predicted = eta * np.einsum("ctj,jn->ctn", codebook.stack(), np.asarray(i_matrix, float))
    distances = np.sum((np.asarray(y, float)[None] - predicted) ** 2, axis=(1, 2))
    return int(np.argmin(distances))


def _ml_decode_batch(ys, i_matrices, stack, eta: float) -> np.ndarray:
    predicted = eta * np.einsum("ctj,djn->dctn", stack, i_matrices)
    distances = np.sum((ys[:, None] - predicted) ** 2, axis=(2, 3))
    return np.argmin(distances, axis=1)


def codeword_eigenvalues(x_i: np.ndarray, x_j: np.ndarray) -> np.ndarray:
    """Eigenvalues of the difference Gram matrix (Xi-Xj)^T (Xi-Xj), ascending.

    This mode-axis Gram is the one that weights the channel in the conditional
    pairwise error: ||(Xi-Xj) I||_F^2 = tr(I^T Gram I).
    """
    x_i = np.asarray(x_i, float)
    x_j = np.asarray(x_j, float)
    if x_i.shape != x_j.shape:
        raise ValueError("codewords must share a shape")
    delta = x_i - x_j
    eig = np.linalg.eigvalsh(delta.T @ delta)
    return np.clip(eig, 0.0, None)


def orthogonality_deviation(codebook: Codebook) -> float:
    """max over pairs of || (Xi-Xj)^T (Xi-Xj) - z 1 ||_F with z = tr/M.

    Zero (to roundoff) certifies an orthogonal space-time code: every
    difference then excites the channel isotropically and the conditional
    pairwise error depends on I only through sum_mn I_mn^2.
    """
    stack = codebook.stack()
    m = stack.shape[1]
    worst = 0.0
    for i in range(len(stack)):
        for j in range(i + 1, len(stack)):
            delta = stack[i] - stack[j]
            gram = delta.T @ delta
            z = np.trace(gram) / m
            worst = max(worst, float(np.linalg.norm(gram - z * np.eye(m))))
    return worst


@dataclass(frozen=True)
class PepModel:
    """Generalized-gamma approximation of gamma_perp = scale * sum_mn I_mn^2."""

    gamma_perp_params: GgdParams
    scale: float

    @classmethod
    def from_samples(cls, samples: IrradianceSampleSet, mode_set: ModeSet, mu: float, eta: float = 1.0):
        """Fit the squared-irradiance envelope and attach eta^2/(N0 M^2) with
        N0 = eta^2/mu (unit-power transmit normalization)."""
        m = len(mode_set)
        total = np.zeros(samples.n)
        for mm in mode_set:
            for n in mode_set:
                total += samples.samples(mm, n) ** 2
        fit = fit_ml(total)
        n0 = eta**2 / mu
        return cls(gamma_perp_params=fit.params, scale=eta**2 / (n0 * m**2))


def pep_orthogonal(z_delta: float, model: PepModel, n_nodes: int = 96) -> float:
    """Average pairwise error probability of an orthogonal code:

        (1/pi) \\int_0^{pi/2} M_{gamma_perp}(z_delta / (2 sin^2 theta)) dtheta

    evaluated with Gauss-Legendre quadrature (>= 64 nodes).
    """
    if z_delta < 0:
        raise ValueError(f"z_delta must be >= 0, got {z_delta}")
    if n_nodes < 64:
        raise ValueError("use at least 64 quadrature nodes")
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    theta = (nodes + 1) * (pi / 4)
    values = [
        laplace_transform(model.scale * z_delta / (2 * np.sin(t) ** 2), model.gamma_perp_params)
        for t in theta
    ]
    return float(np.dot(weights, values) * (pi / 4) / pi)


def union_bound_ber(codebook: Codebook, model: PepModel) -> float:
    """Union bound on the bit error rate of an orthogonal codebook:

        (1/|C|) sum_{i != j} PEP(z_ij) * hamming_bits(i, j) / bits_per_codeword

    Non-orthogonal codebooks are refused: their conditional PEP depends on
    the eigenvectors of each difference Gram matrix, not just z.
    """
    deviation = orthogonality_deviation(codebook)
    if deviation > ORTHOGONALITY_TOL:
        raise NonOrthogonalCodebookError(
            f"codebook is not orthogonal (deviation {deviation:.3g}); "
            "the closed-form pairwise error probability does not apply"
        )
    if len(codebook) == 1:
        return 0.0
    stack = codebook.stack()
    m = stack.shape[1]
    bits = codebook.bits_per_codeword
    # pairs collapse onto few distinct z values; accumulate bit weights per z
    weights: dict[float, float] = {}
    for i in range(len(stack)):
        for j in range(len(stack)):
            if i == j:
                continue
            delta = stack[i] - stack[j]
            z = float(np.trace(delta.T @ delta) / m)
            d_bits = bin(i ^ j).count("1")
            key = round(z, 12)
            weights[key] = weights.get(key, 0.0) + d_bits / bits
    total = sum(w * pep_orthogonal(z, model) for z, w in weights.items())
    return total / len(codebook)


def channel_sampler_from_store(samples: IrradianceSampleSet, mode_set: ModeSet):
    """Draw channel matrices by resampling stored realizations (correlations
    between entries are preserved)."""
    m = len(mode_set)
    matrices = np.empty((samples.n, m, m))
    for a, mm in enumerate(mode_set):
        for b, n in enumerate(mode_set):
            matrices[:, a, b] = samples.samples(mm, n)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.integers(0, len(matrices), size=size)
        return matrices[idx]

    return draw


def channel_sampler_from_params(params: dict, mode_set: ModeSet):
    """Draw channel matrices entrywise from fitted marginals (entries
    independent; use the store sampler when joint structure matters)."""
    from .ggd import sample as ggd_sample

    m = len(mode_set)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        matrices = np.empty((size, m, m))
        for a, mm in enumerate(mode_set):
            for b, n in enumerate(mode_set):
                matrices[:, a, b] = ggd_sample(params[(mm, n)], size, rng)
        return matrices

    return draw


def simulate_ber(
    spec: CodeSpec,
    channel_sampler,
    mu_db_grid,
    rng: np.random.Generator,
    *,
    eta: float = 1.0,
    target_bit_errors: int = 100,
    max_codewords: int = 2_000_000,
    batch: int = 4096,
):
    """Monte Carlo bit error rate of a coded block scheme.

    Per grid point: draw fading blocks from ``channel_sampler``, transmit a
    uniformly random codeword, add white Gaussian noise with variance
    N0 = eta^2 / mu per real entry, ML-decode against the full codebook, and
    count bit errors under the natural binary labeling.  A point stops at
    ``target_bit_errors`` or at the draw cap (then ``resolved`` is False).

    Returns rows (mu_db, ber, n_codewords, n_bit_errors, resolved).
    """
    codebook = build_codebook(spec)
    stack = codebook.stack()
    bits = codebook.bits_per_codeword
    popcount = np.array([bin(v).count("1") for v in range(len(codebook) * 2)])
    rows = []
    for mu_db in mu_db_grid:
        n0 = eta**2 / db_to_linear(mu_db)
        errors = 0
        sent = 0
        while errors < target_bit_errors and sent < max_codewords:
            size = min(batch, max_codewords - sent)
            i_mats = channel_sampler(rng, size)
            labels = rng.integers(0, len(codebook), size=size)
            xs = stack[labels]
            ys = eta * np.einsum("dtj,djn->dtn", xs, i_mats)
            ys = ys + np.sqrt(n0) * rng.standard_normal(ys.shape)
            decoded = _ml_decode_batch(ys, i_mats, stack, eta)
            errors += int(popcount[decoded ^ labels].sum())
            sent += size
        rows.append((float(mu_db), errors / (sent * bits), sent, errors, errors >= target_bit_errors))
    return rows
