"""Principal component fitting, reconstruction and component selection.

All spectral work happens in float64. Fitting diagonalizes whichever
matrix is smaller: the d x d sample covariance for tall data, or the
n x n Gram matrix for wide data (eigenvectors are then mapped back to
feature space and renormalized). Sample covariance uses the n - 1
divisor throughout. Component signs are fixed by making the largest
magnitude entry of each eigenvector positive, so fits are reproducible
down to the bit.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import DatasetRecord, SplitAssignment, flatten, unflatten

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"UPM1"
MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sIQQQ")

VARIANCE_BAND = (0.85, 0.95)


@dataclass
class PcaModel:
    """A fitted basis: row i of components pairs with eigenvalues[i]."""

    mean: np.ndarray         # (d,)
    eigenvalues: np.ndarray  # (k_max,) descending, nonnegative
    components: np.ndarray   # (k_max, d) orthonormal rows
    scores: np.ndarray       # (n, k_max) projections of the input rows
    scale: np.ndarray | None = None  # per-column std when standardize was used

    @property
    def k_max(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]


def fit_pca(X, fit_rows=None, standardize: bool = False) -> PcaModel:
    """Fit principal components of the rows of X.

    The spectrum and basis come from X[fit_rows] (all rows by default);
    scores are produced for every row of X so the whole matrix can be
    reconstructed even when the basis was fit on a subset. k_max is
    min(n_fit - 1, d). With standardize, columns are scaled by their
    sample standard deviation first (the correlation convention);
    zero-variance columns are left unscaled.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    n, d = X.shape
    if fit_rows is None:
        fit_idx = np.arange(n)
    else:
        fit_idx = np.asarray(fit_rows, dtype=np.int64)
    n_fit = len(fit_idx)
    if n_fit < 2:
        raise ValueError(f"need at least 2 rows to fit, got {n_fit}")
    Xf = X[fit_idx]
    mean = Xf.mean(axis=0)
    scale = None
    if standardize:
        scale = Xf.std(axis=0, ddof=1)
        scale = np.where(scale == 0.0, 1.0, scale)
    centered_fit = (Xf - mean) / scale if standardize else Xf - mean
    k_max = min(n_fit - 1, d)

    if n_fit <= d:
        eigenvalues, components = _fit_gram(centered_fit, k_max)
    else:
        eigenvalues, components = _fit_covariance(centered_fit, k_max)

    eigenvalues = _clamp_spectrum(eigenvalues)
    components = _fix_signs(components)

    centered_all = (X - mean) / scale if standardize else X - mean
    scores = centered_all @ components.T
    return PcaModel(mean, eigenvalues, components, scores, scale)


def _fit_covariance(centered, k_max):
    n_fit = centered.shape[0]
    cov = centered.T @ centered / (n_fit - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals = evals[::-1][:k_max]
    components = evecs[:, ::-1].T[:k_max]
    return evals, components


def _fit_gram(centered, k_max):
    n_fit, d = centered.shape
    gram = centered @ centered.T
    mu, u = np.linalg.eigh(gram)
    mu = mu[::-1][:k_max]
    u = u[:, ::-1][:, :k_max]
    mapped = centered.T @ u            # (d, k_max), column norms are sqrt(mu)
    norms = np.linalg.norm(mapped, axis=0)
    floor = max(float(np.max(mu, initial=0.0)), 0.0) * 1e-12
    components = np.zeros((k_max, d))
    degenerate = []
    for i in range(k_max):
        if norms[i] ** 2 > floor and norms[i] > 0.0:
            components[i] = mapped[:, i] / norms[i]
        else:
            degenerate.append(i)
    if degenerate:
        fillers = _complete_basis(
            [components[i] for i in range(k_max) if i not in degenerate],
            d,
            len(degenerate),
        )
        for i, vec in zip(degenerate, fillers):
            components[i] = vec
            mu[i] = 0.0
    return mu / (n_fit - 1), components


def _complete_basis(existing, d, count):
    """Deterministic orthonormal fillers for rank-deficient directions."""
    basis = [np.asarray(v, dtype=np.float64) for v in existing]
    out = []
    i = 0
    while len(out) < count and i < d:
        v = np.zeros(d)
        v[i] = 1.0
        for b in basis:
            v = v - (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            v = v / norm
            basis.append(v)
            out.append(v)
        i += 1
    if len(out) < count:
        raise ValueError("could not complete an orthonormal basis")
    return out


def _clamp_spectrum(values):
    if np.any(values < -1e-9):
        raise ValueError(
            f"eigensolver produced a significantly negative eigenvalue "
            f"({values.min():.3e}); input is not a valid covariance"
        )
    return np.maximum(values, 0.0)


def _fix_signs(components):
    out = components.copy()
    for row in out:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return out


def transform(model: PcaModel, X) -> np.ndarray:
    """Project new rows onto the fitted basis."""
    X = np.asarray(X, dtype=np.float64)
    centered = X - model.mean
    if model.scale is not None:
        centered = centered / model.scale
    return centered @ model.components.T


def reconstruct(model: PcaModel, k: int, clip: bool = False) -> np.ndarray:
    """Rebuild every scored row from its first k components.

    Returns the raw reconstruction by default; clip=True clamps to
    [0, 1] for image export.
    """
    if not 1 <= k <= model.k_max:
        raise ValueError(f"k must be in [1, {model.k_max}], got {k}")
    out = model.scores[:, :k] @ model.components[:k]
    if model.scale is not None:
        out = out * model.scale
    out = out + model.mean
    return np.clip(out, 0.0, 1.0) if clip else out


def kaiser_guttman(eigenvalues, threshold: float = 1.0) -> int:
    """Count eigenvalues strictly above the threshold, never below 1."""
    spectrum = np.asarray(eigenvalues, dtype=np.float64)
    return max(int(np.sum(spectrum > threshold)), 1)


def cumulative_explained_variance(eigenvalues) -> np.ndarray:
    """Fraction of total variance carried by the first i components."""
    spectrum = np.asarray(eigenvalues, dtype=np.float64)
    total = spectrum.sum()
    if total <= 0.0:
        raise ValueError("cannot compute variance fractions of an all-zero spectrum")
    return np.cumsum(spectrum) / total


@dataclass
class SelectionPolicy:
    """How to pick the component count.

    criterion is one of "kaiser" (eigenvalue strictly above threshold),
    "variance" (smallest k whose cumulative variance reaches target) or
    "manual" (take k as given).
    """

    criterion: str = "kaiser"
    threshold: float = 1.0
    target: float = 0.90
    k: int | None = None


@dataclass
class ComponentSelection:
    k: int
    criterion: str
    achieved_variance: float


def select_components(eigenvalues, policy: SelectionPolicy | None = None) -> ComponentSelection:
    spectrum = np.asarray(eigenvalues, dtype=np.float64)
    policy = policy or SelectionPolicy()
    if policy.criterion == "kaiser":
        k = kaiser_guttman(spectrum, policy.threshold)
    elif policy.criterion == "variance":
        if not 0.0 < policy.target <= 1.0:
            raise ValueError(f"variance target must be in (0, 1], got {policy.target}")
        cum = cumulative_explained_variance(spectrum)
        reached = np.nonzero(cum >= policy.target)[0]
        k = int(reached[0]) + 1 if len(reached) else len(spectrum)
    elif policy.criterion == "manual":
        if policy.k is None:
            raise ValueError("manual selection needs an explicit k")
        if not 1 <= policy.k <= len(spectrum):
            raise ValueError(f"k must be in [1, {len(spectrum)}], got {policy.k}")
        k = policy.k
    else:
        raise ValueError(f"unknown selection criterion {policy.criterion!r}")
    achieved = float(cumulative_explained_variance(spectrum)[k - 1])
    return ComponentSelection(k, policy.criterion, achieved)


def scree_rows(eigenvalues) -> list[tuple[int, float, float]]:
    """(component, eigenvalue, cumulative variance) rows, 1-indexed."""
    spectrum = np.asarray(eigenvalues, dtype=np.float64)
    cum = cumulative_explained_variance(spectrum)
    return [(i + 1, float(v), float(c)) for i, (v, c) in enumerate(zip(spectrum, cum))]


def write_scree_csv(path, eigenvalues) -> None:
    lines = ["component,eigenvalue,cumulative_variance"]
    for component, value, cum in scree_rows(eigenvalues):
        lines.append(f"{component},{value:.12g},{cum:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")


def harmonize_dataset(
    records: list[DatasetRecord],
    policy: SelectionPolicy | None = None,
    fit_on: str = "all",
    split: SplitAssignment | None = None,
) -> tuple[list[DatasetRecord], ComponentSelection]:
    """Replace every image with its k-component reconstruction.

    The basis is fit on all images, or on the train split only when
    fit_on="train" (for callers worried about test-set leakage). Masks
    and ids are untouched; reconstructed intensities are clamped to
    [0, 1]. Logs a warning when the selected k lands outside the
    0.85..0.95 cumulative variance band.
    """
    matrix = flatten(records)
    fit_rows = None
    if fit_on == "train":
        if split is None:
            raise ValueError("fit_on='train' needs a split assignment")
        wanted = set(split.train)
        fit_rows = [i for i, r in enumerate(records) if r.id in wanted]
    elif fit_on != "all":
        raise ValueError(f"fit_on must be 'all' or 'train', got {fit_on!r}")
    model = fit_pca(matrix.data, fit_rows=fit_rows)
    selection = select_components(model.eigenvalues, policy)
    if not VARIANCE_BAND[0] <= selection.achieved_variance <= VARIANCE_BAND[1]:
        logger.warning(
            "selected k=%d captures %.1f%% of variance, outside the %d..%d%% band",
            selection.k,
            100 * selection.achieved_variance,
            100 * VARIANCE_BAND[0],
            100 * VARIANCE_BAND[1],
        )
    rebuilt = reconstruct(model, selection.k, clip=True)
    height, width = records[0].image.shape
    arrays = unflatten(type(matrix)(rebuilt, matrix.row_ids), height, width)
    out = [
        DatasetRecord(rec.id, arr, rec.mask)
        for rec, arr in zip(records, arrays)
    ]
    return out, selection


def save_model(path, model: PcaModel) -> None:
    """Write a model as UPM1: header, mean, eigenvalues, components, scores.

    Header is magic "UPM1", u32 version, u64 n_samples, u64 d, u64 k_max,
    little-endian; every array follows row-major as little-endian f64.
    Correlation-convention models carry a scale vector the format has no
    slot for, so they are refused.
    """
    if model.scale is not None:
        raise ValueError("correlation-convention models cannot be saved as UPM1")
    header = _MODEL_HEADER.pack(
        MODEL_MAGIC, MODEL_VERSION, model.n_samples, model.d, model.k_max
    )
    parts = [header]
    for arr in (model.mean, model.eigenvalues, model.components, model.scores):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path) -> PcaModel:
    p = Path(path)
    raw = p.read_bytes()
    if len(raw) < _MODEL_HEADER.size:
        raise ValueError(f"{p}: file too short for a UPM1 header")
    magic, version, n_samples, d, k_max = _MODEL_HEADER.unpack_from(raw)
    if magic != MODEL_MAGIC:
        raise ValueError(f"{p}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
    if version != MODEL_VERSION:
        raise ValueError(f"{p}: unsupported version {version}")
    counts = [d, k_max, k_max * d, n_samples * k_max]
    expected = _MODEL_HEADER.size + sum(counts) * 8
    if len(raw) != expected:
        raise ValueError(f"{p}: expected {expected} bytes, found {len(raw)}")
    offset = _MODEL_HEADER.size
    arrays = []
    for count in counts:
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count, offset=offset).copy())
        offset += count * 8
    mean, eigenvalues, components, scores = arrays
    return PcaModel(
        mean,
        eigenvalues,
        components.reshape(k_max, d),
        scores.reshape(n_samples, k_max),
    )
