"""Optional histogram conditioning: local-regression smoothing, Poisson
variance stabilization and linear PCA.

Exact exponential-family Poisson PCA is replaced by the Anscombe
transform followed by ordinary PCA; the smoother shrinks its window at
the boundaries instead of padding.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SmootherConfig:
    window_half_width: int = 3
    degree: int = 2

    def __post_init__(self):
        if self.window_half_width < 1:
            raise ValidationError("window_half_width must be >= 1")
        if self.degree not in (0, 1, 2):
            raise ValidationError("degree must be 0, 1 or 2")
        if 2 * self.window_half_width + 1 < self.degree + 1:
            raise ValidationError("window must cover at least degree+1 points")


def _fit_eval_center(y, offsets, degree):
    # Least-squares polynomial over the window, evaluated at offset 0.
    a = np.vander(offsets, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return coef[0]


def smooth(hist, cfg: SmootherConfig):
    """Local polynomial regression; window truncated at the edges,
    output clamped at 0."""
    y = np.asarray(hist, dtype=float)
    w = cfg.window_half_width
    n = y.shape[0]
    if n < 2 * w + 1:
        raise ValidationError(f"input length {n} < window {2 * w + 1}")
    out = np.empty(n)
    # Interior points share one window geometry: precompute the
    # evaluation row (Savitzky-Golay coefficients) and convolve.
    offsets = np.arange(-w, w + 1, dtype=float)
    a = np.vander(offsets, cfg.degree + 1, increasing=True)
    coeffs = np.linalg.pinv(a)[0]
    interior = np.convolve(y, coeffs[::-1], mode="valid")
    out[w:n - w] = interior
    for i in range(w):
        off = np.arange(-i, w + 1, dtype=float)
        out[i] = _fit_eval_center(y[0:i + w + 1], off, cfg.degree)
        j = n - 1 - i
        off = np.arange(-w, i + 1, dtype=float)
        out[j] = _fit_eval_center(y[j - w:n], off, cfg.degree)
    return np.maximum(out, 0.0)


def stabilize(counts):
    """Anscombe transform 2*sqrt(x + 3/8); approximately unit variance
    for Poisson counts."""
    x = np.asarray(counts, dtype=float)
    if np.any(x < 0):
        raise ValidationError("counts must be non-negative")
    return 2.0 * np.sqrt(x + 0.375)


def unstabilize(y):
    """Inverse of stabilize on non-negative reals."""
    y = np.asarray(y, dtype=float)
    return (y / 2.0) ** 2 - 0.375


@dataclass
class ProjectionBasis:
    mean: np.ndarray
    components: np.ndarray  # (k, n), rows orthonormal
    explained_variance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.components = np.asarray(self.components, dtype=float)
        if self.components.ndim != 2 or self.components.shape[1] != self.mean.shape[0]:
            raise ValidationError("components must be (k, n) matching mean length")
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(self.k), atol=1e-8):
            raise ValidationError("component rows must be orthonormal within 1e-8")

    @property
    def k(self):
        return self.components.shape[0]

    @property
    def n(self):
        return self.components.shape[1]


def fit_pca(dataset, k):
    """Top-k principal directions of the mean-centered rows.

    Eigendecomposition of the covariance with a deterministic sign
    convention (largest-magnitude entry of each component positive).
    """
    x = np.asarray(dataset, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("dataset must be a matrix with at least 2 rows")
    m, n = x.shape
    if not 1 <= k <= min(m, n):
        raise ValidationError(f"k={k} out of range [1, {min(m, n)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return ProjectionBasis(mean=mean, components=comps,
                           explained_variance=np.maximum(evals[order], 0.0))


def project(hist, basis: ProjectionBasis):
    """Coordinates of hist - mean in the basis."""
    x = np.asarray(hist, dtype=float)
    if x.shape != basis.mean.shape:
        raise ValidationError(f"length {x.shape} does not match basis n={basis.n}")
    return basis.components @ (x - basis.mean)


def reconstruct(coords, basis: ProjectionBasis):
    return basis.mean + np.asarray(coords, dtype=float) @ basis.components


def save_basis(path, basis: ProjectionBasis):
    doc = {
        "schema_version": 1,
        "kind": "projection_basis",
        "n": basis.n,
        "k": basis.k,
        "mean": basis.mean.tolist(),
        "components": basis.components.ravel().tolist(),
        "explained_variance": basis.explained_variance.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_basis(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "projection_basis":
        raise ValidationError(f"{path}: not a projection basis file")
    n, k = doc["n"], doc["k"]
    comps = np.array(doc["components"], dtype=float).reshape(k, n)
    return ProjectionBasis(mean=np.array(doc["mean"], dtype=float),
                           components=comps,
                           explained_variance=np.array(doc["explained_variance"]))
