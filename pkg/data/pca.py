"""Spectral PCA with a cyclic Jacobi eigensolver"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from data.hsi_cube import HsiCube
from utils.errors import DataError, DimensionError, PreconditionError

logger = logging.getLogger(__name__)


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray, int]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations

    Stops when the off-diagonal Frobenius norm drops below ``tol`` times the
    Frobenius norm of the input. Returns (eigenvalues, eigenvectors as
    columns, sweeps) in the order produced by the rotations.
    """
    a = np.array(matrix, dtype=np.float64)
    n, m = a.shape
    if n != m:
        raise DimensionError("columns", n, m, "jacobi_eigh")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise PreconditionError("jacobi_eigh: matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = max(np.linalg.norm(a), np.finfo(np.float64).tiny)

    sweeps = 0
    while sweeps < max_sweeps:
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off < tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(f"jacobi_eigh: no convergence after {max_sweeps} sweeps")
    return np.diag(a).copy(), v, sweeps


def canonical_signs(components: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive"""
    out = components.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


@dataclass
class PcaModel:
    """Mean spectrum, D x B orthonormal components and descending eigenvalues"""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float

    @property
    def input_bands(self) -> int:
        return int(self.components.shape[0])

    @property
    def output_bands(self) -> int:
        return int(self.components.shape[1])

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance <= 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / self.total_variance

    def scales(self) -> np.ndarray:
        """Per-component standard deviations used for standardisation"""
        return np.sqrt(np.where(self.eigenvalues > 1e-12 * max(self.total_variance, 1e-300), self.eigenvalues, 1.0))


def _pixels(source) -> np.ndarray:
    if isinstance(source, HsiCube):
        return source.pixels().astype(np.float64)
    array = np.asarray(source, dtype=np.float64)
    return array.reshape(-1, array.shape[-1])


def pca_fit(source, n_components: int, mask: Optional[np.ndarray] = None) -> PcaModel:
    """Fit PCA on the pixels of a cube (optionally only where ``mask`` is true)"""
    pixels = _pixels(source)
    if mask is not None:
        pixels = pixels[np.asarray(mask).reshape(-1)]
    d = pixels.shape[1]
    if n_components < 1 or n_components > d:
        raise DataError(f"pca_fit: requested {n_components} components from {d} bands")
    distinct = np.unique(pixels, axis=0).shape[0]
    if distinct < n_components + 1:
        raise DataError(f"pca_fit: need at least {n_components + 1} distinct pixels, found {distinct}")

    mean = pixels.mean(axis=0)
    centered = pixels - mean
    covariance = centered.T @ centered / (pixels.shape[0] - 1)
    total = float(np.trace(covariance))
    if total <= 0:
        raise DataError("pca_fit: cube has zero spectral variance")

    eigenvalues, eigenvectors, sweeps = jacobi_eigh(covariance)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    components = canonical_signs(eigenvectors[:, order])
    logger.info(
        f"PCA {d} -> {n_components} bands in {sweeps} Jacobi sweeps, "
        f"explained variance {eigenvalues[:n_components].sum() / total:.4f}"
    )
    return PcaModel(mean, components[:, :n_components], eigenvalues[:n_components], total)


def pca_apply(source, model: PcaModel, standardize: bool = True) -> np.ndarray:
    """Project to M x N x B; optionally scale each component to unit fitted variance"""
    array = source.data if isinstance(source, HsiCube) else np.asarray(source)
    if array.shape[-1] != model.input_bands:
        raise DimensionError("bands", model.input_bands, array.shape[-1], "pca_apply")
    reduced = (_pixels(array) - model.mean) @ model.components
    if standardize:
        reduced = reduced / model.scales()
    return reduced.reshape(array.shape[:-1] + (model.output_bands,))


def pca_inverse(reduced: np.ndarray, model: PcaModel, standardized: bool = True) -> np.ndarray:
    """Map reduced bands back to the original spectral space"""
    reduced = np.asarray(reduced, dtype=np.float64)
    if reduced.shape[-1] != model.output_bands:
        raise DimensionError("bands", model.output_bands, reduced.shape[-1], "pca_inverse")
    flat = reduced.reshape(-1, model.output_bands)
    if standardized:
        flat = flat * model.scales()
    restored = flat @ model.components.T + model.mean
    return restored.reshape(reduced.shape[:-1] + (model.input_bands,))
