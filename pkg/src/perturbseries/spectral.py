"""Symmetric eigendecomposition and the spectral objects derived from it.

Indices are 1-based throughout (``j = 1`` is the largest eigenvalue), and
eigenvalues are kept in non-increasing order.  Eigenvectors are only ever
compared through projectors, so the sign/basis freedom of ``eigh`` never
leaks into results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateGapError, SpectralIndexError

__all__ = [
    "SymmetricMatrix",
    "SpectralModel",
    "EigenGroup",
    "as_symmetric",
    "decompose_symmetric",
    "spectral_gap",
    "eigenprojector",
    "reduced_resolvent",
    "abs_resolvent_sqrt",
    "abs_resolvent_inv_sqrt",
    "weight_operator",
    "weight_operator_inverse",
    "resolvent_pseudo_inverse",
    "group_eigenvalues",
]

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class SymmetricMatrix:
    """A real symmetric matrix together with the asymmetry of its source.

    Build instances with :func:`as_symmetric`; the stored entries are the
    symmetric part ``(A + A.T) / 2`` of the input.
    """

    entries: np.ndarray
    asymmetry: float = 0.0

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def as_symmetric(A, tol: float | None = None) -> SymmetricMatrix:
    """Validate ``A`` and return its symmetric part.

    ``tol`` defaults to ``1e-12 * max|A|``.  Inputs whose asymmetry exceeds
    it are rejected rather than silently symmetrized.
    """
    if isinstance(A, SymmetricMatrix):
        return A
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if tol is None:
        tol = SYMMETRY_RTOL * scale
    asym = float(np.max(np.abs(A - A.T)))
    if asym > tol:
        raise ValueError(f"matrix is not symmetric: max|A - A.T| = {asym:.3e} > {tol:.3e}")
    S = 0.5 * (A + A.T)
    S.setflags(write=False)
    return SymmetricMatrix(S, asym)


@dataclass(frozen=True)
class SpectralModel:
    """Eigenvalues (non-increasing) and orthonormal eigenvectors of a symmetric matrix."""

    eigenvalues: np.ndarray
    basis: np.ndarray
    source: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def check_index(self, j: int) -> None:
        if not (1 <= j <= self.dim):
            raise SpectralIndexError(f"index j={j} outside 1..{self.dim}")

    def vector(self, j: int) -> np.ndarray:
        self.check_index(j)
        return self.basis[:, j - 1]

    def to_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        """Express a matrix in the eigenbasis: ``U.T @ A @ U``."""
        return self.basis.T @ A @ self.basis

    def from_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        return self.basis @ A @ self.basis.T

    def diag_operator(self, values) -> np.ndarray:
        """``sum_k values[k] u_k u_k^T`` in the original coordinates."""
        return (self.basis * np.asarray(values, dtype=float)) @ self.basis.T

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.diag_operator(self.eigenvalues)


def decompose_symmetric(A) -> SpectralModel:
    """Eigendecomposition with eigenvalues sorted non-increasingly.

    Ties are ordered by the position ``eigh`` reports them in (stable sort),
    which makes the output deterministic for identical input.
    """
    S = as_symmetric(A).entries
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    lam = w[order].copy()
    U = V[:, order].copy()
    lam.setflags(write=False)
    U.setflags(write=False)
    return SpectralModel(lam, U, S)


def _gap_from_values(lam: np.ndarray, j: int) -> float:
    d = lam.shape[0]
    if d == 1:
        return np.inf
    if j == 1:
        return float(lam[0] - lam[1])
    if j == d:
        return float(lam[d - 2] - lam[d - 1])
    return float(min(lam[j - 2] - lam[j - 1], lam[j - 1] - lam[j]))


def spectral_gap(model: SpectralModel, j: int) -> float:
    """Distance from ``lambda_j`` to its nearest neighbour(s) in the ordered spectrum.

    Both boundary indices use their single neighbour.
    """
    model.check_index(j)
    return max(_gap_from_values(model.eigenvalues, j), 0.0)


def _require_simple(model: SpectralModel, j: int) -> float:
    g = spectral_gap(model, j)
    if not g > 0:
        raise DegenerateGapError(f"eigenvalue {j} is not simple (gap = {g})")
    return g


def _shifts(model: SpectralModel, j: int) -> np.ndarray:
    """``lambda_k - lambda_j`` with the j-th entry set to NaN."""
    s = model.eigenvalues - model.eigenvalues[j - 1]
    s = s.astype(float)
    s[j - 1] = np.nan
    return s


def eigenprojector(model: SpectralModel, j: int) -> np.ndarray:
    u = model.vector(j)
    return np.outer(u, u)


def _off_power(s: np.ndarray, power: float, fill: float = 0.0) -> np.ndarray:
    """``s ** power`` where ``s`` is finite, ``fill`` where it is NaN."""
    out = np.full(s.shape, fill, dtype=float)
    m = ~np.isnan(s)
    out[m] = s[m] ** power
    return out


def _resolvent_diag(model: SpectralModel, j: int, power: float, absolute: bool) -> np.ndarray:
    _require_simple(model, j)
    s = _shifts(model, j)
    return _off_power(np.abs(s) if absolute else s, power)


def reduced_resolvent(model: SpectralModel, j: int) -> np.ndarray:
    """``R_j = sum_{k != j} (lambda_k - lambda_j)^{-1} u_k u_k^T``."""
    return model.diag_operator(_resolvent_diag(model, j, -1.0, absolute=False))


def abs_resolvent_sqrt(model: SpectralModel, j: int) -> np.ndarray:
    """``|R_j|^{1/2} = sum_{k != j} |lambda_k - lambda_j|^{-1/2} u_k u_k^T``."""
    return model.diag_operator(_resolvent_diag(model, j, -0.5, absolute=True))


def abs_resolvent_inv_sqrt(model: SpectralModel, j: int) -> np.ndarray:
    """Pseudo-inverse of ``|R_j|^{1/2}``: ``sum_{k != j} |lambda_k - lambda_j|^{1/2} u_k u_k^T``."""
    return model.diag_operator(_resolvent_diag(model, j, 0.5, absolute=True))


def weight_diag(model: SpectralModel, j: int) -> np.ndarray:
    """Eigenbasis diagonal of :func:`weight_operator`."""
    g = _require_simple(model, j)
    w = _resolvent_diag(model, j, -0.5, absolute=True)
    w[j - 1] = g ** -0.5
    return w


def weight_operator(model: SpectralModel, j: int) -> np.ndarray:
    """``W_j = |R_j|^{1/2} + g_j^{-1/2} P_j``, the symmetric normaliser of the perturbation."""
    return model.diag_operator(weight_diag(model, j))


def weight_operator_inverse(model: SpectralModel, j: int) -> np.ndarray:
    g = _require_simple(model, j)
    w = _resolvent_diag(model, j, 0.5, absolute=True)
    w[j - 1] = g ** 0.5
    return model.diag_operator(w)


def resolvent_pseudo_inverse(model: SpectralModel, j: int) -> np.ndarray:
    """``sum_{k != j} (lambda_k - lambda_j) u_k u_k^T``.

    This is the Moore-Penrose inverse of the (singular) reduced resolvent;
    it is what ``R_j^{-1}`` means in the eigenvalue-coefficient recursion.
    """
    return model.diag_operator(_resolvent_diag(model, j, 1.0, absolute=False))


@dataclass(frozen=True)
class EigenGroup:
    """A cluster of (numerically) equal eigenvalues.

    ``members`` are 1-based indices into the sorted spectrum; ``value`` is
    the mean of the member eigenvalues.
    """

    index: int
    members: tuple[int, ...]
    value: float
    gap: float

    @property
    def rank(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class GroupedSpectrum:
    model: SpectralModel
    groups: tuple[EigenGroup, ...]

    def __len__(self) -> int:
        return len(self.groups)

    def __getitem__(self, r: int) -> EigenGroup:
        """1-based group lookup."""
        if not (1 <= r <= len(self.groups)):
            raise SpectralIndexError(f"group index r={r} outside 1..{len(self.groups)}")
        return self.groups[r - 1]

    def group_values(self) -> np.ndarray:
        """Per-eigenvalue group value ``mu_r`` (length d)."""
        out = np.empty(self.model.dim)
        for grp in self.groups:
            out[[m - 1 for m in grp.members]] = grp.value
        return out

    def mask(self, r: int) -> np.ndarray:
        m = np.zeros(self.model.dim, dtype=bool)
        m[[k - 1 for k in self[r].members]] = True
        return m

    def projector(self, r: int) -> np.ndarray:
        return self.model.diag_operator(self.mask(r).astype(float))

    def _require_gap(self, r: int) -> EigenGroup:
        grp = self[r]
        if not grp.gap > 0:
            raise DegenerateGapError(f"group {r} has zero gap")
        return grp

    def shifts(self, r: int) -> np.ndarray:
        """``mu_s - mu_r`` per eigenvalue, NaN inside group r."""
        grp = self._require_gap(r)
        s = self.group_values() - grp.value
        s[self.mask(r)] = np.nan
        return s

    def reduced_resolvent(self, r: int) -> np.ndarray:
        return self.model.diag_operator(_off_power(self.shifts(r), -1.0))

    def weight_diag(self, r: int) -> np.ndarray:
        grp = self._require_gap(r)
        return _off_power(np.abs(self.shifts(r)), -0.5, fill=grp.gap ** -0.5)


def group_eigenvalues(model: SpectralModel, tol: float | None = None) -> GroupedSpectrum:
    """Partition the sorted spectrum into clusters of consecutive eigenvalues.

    Neighbours closer than ``tol`` (absolute; default ``1e-9 * |lambda_1|``)
    are merged.  With ``tol=0`` only exact ties are merged.
    """
    lam = model.eigenvalues
    if tol is None:
        tol = 1e-9 * abs(float(lam[0]))
    if tol < 0:
        raise ValueError("tol must be non-negative")
    clusters: list[list[int]] = [[1]]
    for k in range(2, model.dim + 1):
        if lam[k - 2] - lam[k - 1] <= tol:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    values = [float(np.mean(lam[[m - 1 for m in c]])) for c in clusters]
    groups = []
    for r, (c, mu) in enumerate(zip(clusters, values), start=1):
        groups.append(EigenGroup(r, tuple(c), mu, _gap_from_values(np.array(values), r)))
    return GroupedSpectrum(model, tuple(groups))
