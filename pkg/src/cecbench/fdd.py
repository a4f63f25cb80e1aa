"""PCA-based fault detection for the edge computation task.

Offline fit on fault-free data (standardize, eigendecompose the correlation
matrix, derive SPE and T-squared control limits), online scoring of incoming
samples, a synthetic correlated-process generator standing in for real plant
exports, and CSV ingestion for user-supplied data.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

__all__ = [
    "ProcessSample",
    "PcaModel",
    "DetectionResult",
    "CsvSchema",
    "CsvParseError",
    "MeanShift",
    "Drift",
    "VarianceBump",
    "fit_pca",
    "score",
    "score_stream",
    "residual_contributions",
    "generate_synthetic_te",
    "ingest_csv",
    "write_detections",
]


@dataclass(frozen=True)
class ProcessSample:
    """One timestamped vector of process-variable readings."""

    timestamp: float
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("values must be a 1-D vector")
        if not np.isfinite(vals).all():
            raise ValueError("all readings must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PcaModel:
    """Offline-fitted monitoring model: loadings, spectra, and control limits."""

    mean: np.ndarray
    scale: np.ndarray
    loadings: np.ndarray  # (n_vars, n_components), orthonormal columns
    eigenvalues: np.ndarray
    residual_eigenvalues: np.ndarray
    spe_limit: float
    t2_limit: float
    alpha: float
    n_samples: int
    degenerate_residual: bool = False

    @property
    def n_components(self) -> int:
        return self.loadings.shape[1]

    @property
    def n_vars(self) -> int:
        return self.loadings.shape[0]


@dataclass(frozen=True)
class DetectionResult:
    timestamp: float
    spe: float
    t2: float
    spe_limit: float
    t2_limit: float
    fault_flag: bool


class CsvParseError(ValueError):
    """CSV ingestion failure, locating the offending line and column."""


@dataclass(frozen=True)
class CsvSchema:
    has_header: bool = False
    delimiter: str = ","


@dataclass(frozen=True)
class MeanShift:
    """Step change on a set of variables, magnitude in training-sigma units."""

    variables: tuple[int, ...]
    magnitude: float


@dataclass(frozen=True)
class Drift:
    """Linear ramp on one variable, slope in sigma units per sample."""

    variable: int
    slope: float


@dataclass(frozen=True)
class VarianceBump:
    """Inflate one variable's fluctuation around its mean by a factor."""

    variable: int
    factor: float

    def __post_init__(self) -> None:
        if self.factor <= 0:
            raise ValueError("factor must be > 0")


FaultSpec = MeanShift | Drift | VarianceBump


def _as_matrix(samples: Sequence[ProcessSample]) -> np.ndarray:
    if not samples:
        raise ValueError("no samples")
    dims = {s.values.shape[0] for s in samples}
    if len(dims) != 1:
        raise ValueError(f"inconsistent sample dimensions: {sorted(dims)}")
    return np.vstack([s.values for s in samples])


def fit_pca(
    training: Sequence[ProcessSample], n_components: int = 17, alpha: float = 0.01
) -> PcaModel:
    """Offline step: fit the monitoring model on fault-free data.

    Standardizes by the training mean/std, eigendecomposes the sample
    correlation matrix, keeps n_components directions, and derives the
    T-squared limit from the F distribution and the SPE limit from the
    Jackson-Mudholkar approximation over the residual eigenvalue moments.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    x = _as_matrix(training)
    n, d = x.shape
    if n_components < 1 or n_components > d:
        raise ValueError(f"n_components must lie in [1, {d}], got {n_components}")
    if n < 10 * d:
        raise ValueError(f"need at least 10x dimension = {10 * d} training samples, got {n}")
    mean = x.mean(axis=0)
    scale = x.std(axis=0, ddof=1)
    constant = np.flatnonzero(scale == 0)
    if constant.size:
        raise ValueError(f"constant training columns: {constant.tolist()}")
    z = (x - mean) / scale
    corr = (z.T @ z) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(corr)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    # Deterministic sign: first non-negligible coordinate of each loading >= 0.
    for j in range(d):
        col = eigvecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            eigvecs[:, j] = -col

    loadings = eigvecs[:, :n_components]
    retained = eigvals[:n_components]
    residual = eigvals[n_components:]

    k = n_components
    t2_limit = (
        k * (n**2 - 1) / (n * (n - k)) * float(stats.f.ppf(1.0 - alpha, k, n - k))
    )

    theta1 = float(residual.sum())
    theta2 = float((residual**2).sum())
    theta3 = float((residual**3).sum())
    degenerate = theta1 <= 1e-12 or theta2 <= 0.0
    if degenerate:
        warnings.warn(
            "residual subspace is numerically empty; the SPE limit is degenerate",
            UserWarning,
            stacklevel=2,
        )
        spe_limit = 0.0
    else:
        h0 = 1.0 - 2.0 * theta1 * theta3 / (3.0 * theta2**2)
        if h0 <= 0:
            h0 = 1e-6  # standard guard for pathological residual spectra
        c_alpha = float(stats.norm.ppf(1.0 - alpha))
        spe_limit = theta1 * (
            c_alpha * math.sqrt(2.0 * theta2 * h0**2) / theta1
            + 1.0
            + theta2 * h0 * (h0 - 1.0) / theta1**2
        ) ** (1.0 / h0)

    return PcaModel(
        mean=mean,
        scale=scale,
        loadings=loadings,
        eigenvalues=retained,
        residual_eigenvalues=residual,
        spe_limit=spe_limit,
        t2_limit=t2_limit,
        alpha=alpha,
        n_samples=n,
        degenerate_residual=degenerate,
    )


def score(model: PcaModel, sample: ProcessSample) -> DetectionResult:
    """Online step: SPE and T-squared of one sample against the fitted model."""
    if sample.values.shape[0] != model.n_vars:
        raise ValueError(
            f"sample dimension {sample.values.shape[0]} != model dimension {model.n_vars}"
        )
    z = (sample.values - model.mean) / model.scale
    scores = model.loadings.T @ z
    t2 = float(np.sum(scores**2 / model.eigenvalues))
    residual = z - model.loadings @ scores
    spe = float(residual @ residual)
    flag = spe > model.spe_limit or t2 > model.t2_limit
    return DetectionResult(
        timestamp=sample.timestamp,
        spe=spe,
        t2=t2,
        spe_limit=model.spe_limit,
        t2_limit=model.t2_limit,
        fault_flag=flag,
    )


def score_stream(model: PcaModel, samples: Sequence[ProcessSample]) -> list[DetectionResult]:
    return [score(model, s) for s in samples]


def residual_contributions(model: PcaModel, sample: ProcessSample) -> list[tuple[int, float]]:
    """Per-variable squared residual contributions, sorted descending.

    A lightweight stand-in for knowledge-base diagnosis: the top entries point
    at the sensors most responsible for an SPE excursion.
    """
    z = (sample.values - model.mean) / model.scale
    residual = z - model.loadings @ (model.loadings.T @ z)
    contrib = residual**2
    order = np.argsort(contrib)[::-1]
    return [(int(i), float(contrib[i])) for i in order]


def _random_correlation(rng: np.random.Generator, d: int, condition_number: float) -> np.ndarray:
    """Random SPD correlation matrix with a controlled eigenvalue spread."""
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    spectrum = np.geomspace(condition_number, 1.0, d)
    cov = (q * spectrum) @ q.T
    inv_sd = 1.0 / np.sqrt(np.diag(cov))
    return cov * np.outer(inv_sd, inv_sd)


def generate_synthetic_te(
    n_normal: int,
    n_fault: int,
    fault_spec: FaultSpec | None,
    seed: int,
    n_vars: int = 52,
    condition_number: float = 50.0,
) -> tuple[list[ProcessSample], list[ProcessSample]]:
    """Correlated multivariate-Gaussian stand-in for a wide process dataset.

    Returns (training, test): the training stream holds n_normal fault-free
    samples; the test stream holds a fresh n_normal fault-free stretch
    followed by n_fault samples with the requested fault injected from the
    onset onward. Deterministic given the seed.
    """
    if n_normal < 1:
        raise ValueError("n_normal must be >= 1")
    if n_fault < 0:
        raise ValueError("n_fault must be >= 0")
    if n_fault > 0 and fault_spec is None:
        raise ValueError("a fault_spec is required when n_fault > 0")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xFDD,)))
    corr = _random_correlation(rng, n_vars, condition_number)
    chol = np.linalg.cholesky(corr)
    base_mean = rng.uniform(-1.0, 1.0, size=n_vars) * 10.0
    base_scale = rng.uniform(0.5, 2.0, size=n_vars)

    def draw(n: int) -> np.ndarray:
        return (rng.normal(size=(n, n_vars)) @ chol.T) * base_scale + base_mean

    train = draw(n_normal)
    test = draw(n_normal + n_fault)

    if n_fault > 0:
        tail = test[n_normal:]
        if isinstance(fault_spec, MeanShift):
            for v in fault_spec.variables:
                tail[:, v] += fault_spec.magnitude * base_scale[v]
        elif isinstance(fault_spec, Drift):
            ramp = fault_spec.slope * base_scale[fault_spec.variable] * np.arange(1, n_fault + 1)
            tail[:, fault_spec.variable] += ramp
        elif isinstance(fault_spec, VarianceBump):
            v = fault_spec.variable
            center = base_mean[v]
            tail[:, v] = center + (tail[:, v] - center) * math.sqrt(fault_spec.factor)
        else:
            raise ValueError(f"unknown fault spec {fault_spec!r}")

    training = [ProcessSample(float(t), train[t]) for t in range(n_normal)]
    test_stream = [
        ProcessSample(float(n_normal + t), test[t]) for t in range(n_normal + n_fault)
    ]
    return training, test_stream


def ingest_csv(path, schema: CsvSchema = CsvSchema()) -> list[ProcessSample]:
    """Parse a numeric CSV export into samples, in file order.

    Raises CsvParseError naming the line and column of the first malformed
    cell; an empty file yields an empty list with a warning.
    """
    samples: list[ProcessSample] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and schema.has_header:
                continue
            if not row or all(cell.strip() == "" for cell in row):
                continue
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: line {lineno}, column {col}: not a number: {cell!r}"
                    ) from None
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise CsvParseError(
                    f"{path}: line {lineno}: expected {dim} columns, got {len(values)}"
                )
            samples.append(ProcessSample(float(len(samples)), np.asarray(values)))
    if not samples:
        warnings.warn(f"{path}: no data rows found", UserWarning, stacklevel=2)
    return samples


def write_detections(results: Sequence[DetectionResult], path) -> None:
    """Write detection output CSV: timestamp,spe,t2,spe_limit,t2_limit,fault_flag."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("timestamp,spe,t2,spe_limit,t2_limit,fault_flag\n")
        for r in results:
            fh.write(
                f"{r.timestamp:.10g},{r.spe:.10g},{r.t2:.10g},"
                f"{r.spe_limit:.10g},{r.t2_limit:.10g},{int(r.fault_flag)}\n"
            )
