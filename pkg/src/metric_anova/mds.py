"""Classical (Torgerson) multidimensional scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pattern_space import as_matrix


@dataclass
class Embedding:
    """Low-dimensional coordinates of a distance matrix.

    ``negative_mass`` is the share of absolute eigenvalue mass carried by
    negative eigenvalues of the double-centred Gram matrix; it is zero
    exactly when the distances are Euclidean.
    """

    coordinates: np.ndarray
    eigenvalues: np.ndarray
    negative_mass: float

    def distances(self) -> np.ndarray:
        diff = self.coordinates[:, None, :] - self.coordinates[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def gram_matrix(D) -> np.ndarray:
    """``B = -1/2 J D**2 J`` with ``J`` the centring projector."""
    D = as_matrix(D)
    D2 = D * D
    row = D2.mean(axis=1)
    B = -0.5 * (D2 - row[:, None] - row[None, :] + D2.mean())
    return 0.5 * (B + B.T)


def classical_mds(D, dims: int = 2) -> Embedding:
    """Embed ``D`` into ``dims`` Euclidean dimensions.

    Coordinates are the top eigenvectors of the Gram matrix scaled by the
    square roots of their eigenvalues; negative eigenvalues are clipped to 0.
    """
    D = as_matrix(D)
    n = D.shape[0]
    if not 1 <= dims <= n - 1:
        raise ValueError(f"dims must lie in [1, {n - 1}], got {dims}")
    vals, vecs = np.linalg.eigh(gram_matrix(D))
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    total = np.abs(vals).sum()
    negative = float(np.abs(vals[vals < 0]).sum() / total) if total > 0 else 0.0
    top = np.clip(vals[:dims], 0.0, None)
    coords = vecs[:, :dims] * np.sqrt(top)
    coords -= coords.mean(axis=0)
    return Embedding(coords, top, negative)
