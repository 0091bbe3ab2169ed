"""Weighted perturbation norms and perturbation-series coefficients.

Two independent routes produce the projector coefficients:

* ``"enumerate"`` sums the products ``R^(k1) E R^(k2) ... E R^(k_{n+1})`` over
  all compositions ``k1 + ... + k_{n+1} = n`` (``C(2n, n)`` terms), in the
  original coordinates, with ``R^(0) = -P`` and ``R^(k) = R^k``.
* ``"generating"`` works in the eigenbasis, where ``S(z) = -P + sum_k z^k R^k``
  is diagonal, and reads the coefficient off ``S(z) (E S(z))^n`` computed by
  truncated matrix-polynomial multiplication.  One pass yields every order
  up to ``n`` at polynomial cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .errors import DegenerateGapError
from .spectral import (
    GroupedSpectrum,
    SpectralModel,
    _off_power,
    _require_simple,
    _shifts,
    as_symmetric,
    decompose_symmetric,
    eigenprojector,
    reduced_resolvent,
    spectral_gap,
    weight_diag,
)

__all__ = [
    "PerturbationInstance",
    "DeltaReport",
    "make_instance",
    "delta",
    "composition_count",
    "compositions",
    "composition_terms",
    "series_coefficient_projection",
    "projection_coefficients",
    "series_coefficient_eigenvalue",
    "eigenvalue_coefficients",
    "GroupSeries",
    "group_delta",
    "multiple_group_series",
]

N_ENUM_MAX = 7

CONVENTIONS = ("standard", "index_parity")


@dataclass(frozen=True)
class PerturbationInstance:
    """A base matrix (through its spectral model) and a symmetric perturbation ``E``."""

    base: SpectralModel
    E: np.ndarray

    def __post_init__(self):
        if self.E.shape != (self.base.dim, self.base.dim):
            raise ValueError(f"E has shape {self.E.shape}, base has dimension {self.base.dim}")

    @property
    def dim(self) -> int:
        return self.base.dim

    @cached_property
    def E_eig(self) -> np.ndarray:
        """``E`` expressed in the eigenbasis of the base matrix."""
        Ee = self.base.to_eigenbasis(self.E)
        return 0.5 * (Ee + Ee.T)

    @cached_property
    def perturbed(self) -> np.ndarray:
        return self.base.matrix + self.E if self.base.source is None else self.base.source + self.E

    def scaled(self, t: float) -> "PerturbationInstance":
        return PerturbationInstance(self.base, t * self.E)


def make_instance(Sigma, E) -> PerturbationInstance:
    """Build an instance from the base matrix ``Sigma`` and the perturbation ``E``."""
    base = Sigma if isinstance(Sigma, SpectralModel) else decompose_symmetric(Sigma)
    Es = as_symmetric(E).entries
    if Es.shape != (base.dim, base.dim):
        raise ValueError(f"dimension mismatch: Sigma is {base.dim}x{base.dim}, E is {Es.shape}")
    return PerturbationInstance(base, Es)


@dataclass(frozen=True)
class DeltaReport:
    """Weighted perturbation size at index ``j``.

    ``cross_norm`` is ``||P_j E |R_j|^{1/2}||_2``, which several bounds use
    directly; ``norm_rp`` is the same quantity divided by ``sqrt(g_j)``.
    """

    j: int
    gap: float
    delta: float
    delta_prime: float
    norm_rr: float
    norm_rp: float
    norm_pp: float
    cross_norm: float

    def as_dict(self) -> dict:
        return {k: float(v) if k != "j" else v for k, v in self.__dict__.items()}


def delta(inst: PerturbationInstance, j: int) -> DeltaReport:
    g = _require_simple(inst.base, j)
    Ee = inst.E_eig
    w = weight_diag(inst.base, j)
    d_full = float(np.linalg.norm(w[:, None] * Ee * w[None, :], 2))
    a = w.copy()
    a[j - 1] = 0.0  # |R_j|^{1/2} diagonal
    rr = float(np.linalg.norm(a[:, None] * Ee * a[None, :], 2)) if inst.dim > 1 else 0.0
    cross = float(np.linalg.norm(Ee[j - 1, :] * a))
    rp = cross / np.sqrt(g)
    pp = abs(float(Ee[j - 1, j - 1])) / g
    return DeltaReport(j, g, d_full, float(max(rr, rp, pp)), rr, float(rp), pp, cross)


# -- composition sums --------------------------------------------------------


def composition_count(parts: int, total: int) -> int:
    """Number of ``parts``-tuples of non-negative integers summing to ``total``."""
    return comb(parts - 1 + total, parts - 1)


def compositions(parts: int, total: int):
    """Yield all ``parts``-tuples of non-negative integers with the given sum."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(parts - 1, total - first):
            yield (first,) + rest


def _blocks(P0: np.ndarray, R: np.ndarray, kmax: int) -> list[np.ndarray]:
    out = [-P0]
    Rk = np.eye(R.shape[0])
    for _ in range(kmax):
        Rk = Rk @ R
        out.append(Rk)
    return out


def composition_terms(P0, R, E, n: int, m: int):
    """Yield ``(ks, R^(k1) E ... E R^(k_{n+1}))`` for every ``ks`` summing to ``m``."""
    B = _blocks(P0, R, m)
    for ks in compositions(n + 1, m):
        term = B[ks[0]]
        for k in ks[1:]:
            term = term @ E @ B[k]
        yield ks, term


def _composition_sum(B: list[np.ndarray], E: np.ndarray, slots: int, total: int) -> np.ndarray:
    """Sum over compositions, sharing prefix products depth-first."""

    def rec(prefix: np.ndarray, slots_left: int, remaining: int) -> np.ndarray:
        if slots_left == 1:
            return prefix @ B[remaining]
        acc = np.zeros_like(prefix)
        for k in range(remaining + 1):
            acc += rec(prefix @ B[k] @ E, slots_left - 1, remaining - k)
        return acc

    return rec(np.eye(E.shape[0]), slots, total)


def _sign(n: int, convention: str) -> float:
    if convention == "standard":
        return -1.0 if n % 2 == 0 else 1.0  # (-1)^(n+1)
    if convention == "index_parity":
        return 1.0 if n % 2 == 0 else -1.0  # (-1)^(k1+...+k_{n+1}) = (-1)^n
    raise ValueError(f"unknown sign convention {convention!r}; expected one of {CONVENTIONS}")


def _enumerated_coefficient(P0, R, E, n: int, convention: str) -> np.ndarray:
    B = _blocks(P0, R, n)
    return _sign(n, convention) * _composition_sum(B, E, n + 1, n)


def _generating_coefficients(inv_shift, inside, Ee, order: int, convention: str) -> np.ndarray:
    """Eigenbasis coefficients ``0..order`` via truncated polynomial products.

    ``inv_shift[k]`` is ``1/(lambda_k - mu)`` outside the target eigenspace
    and 0 inside; ``inside`` marks the target eigenspace.
    """
    d = inv_shift.shape[0]
    s = np.empty((order + 1, d))
    s[0] = -inside.astype(float)
    for b in range(1, order + 1):
        s[b] = inv_shift ** b
    idx = np.arange(d)
    T = np.zeros((order + 1, d, d))
    T[:, idx, idx] = s
    out = np.empty((order + 1, d, d))
    out[0] = _sign(0, convention) * T[0]
    for i in range(1, order + 1):
        # (T * (E S))_c = sum_b (T E)_{c-b} diag(s_b)
        U = T @ Ee
        new = np.zeros_like(T)
        for b in range(order + 1):
            new[b:] += U[: order + 1 - b] * s[b][None, None, :]
        T = new
        out[i] = _sign(i, convention) * T[i]
    return out


def _simple_spectral_data(inst: PerturbationInstance, j: int):
    _require_simple(inst.base, j)
    inside = np.zeros(inst.dim, dtype=bool)
    inside[j - 1] = True
    return _off_power(_shifts(inst.base, j), -1.0), inside


def projection_coefficients(inst: PerturbationInstance, j: int, order: int,
                            method: str = "generating",
                            basis: str = "original") -> list[np.ndarray]:
    """Projector coefficients ``P_j^(0), ..., P_j^(order)``.

    ``basis="eigen"`` returns them in the eigenbasis of the base matrix,
    which is cheaper when only norms or traces are needed.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if method == "generating":
        inv_shift, inside = _simple_spectral_data(inst, j)
        out = list(_generating_coefficients(inv_shift, inside, inst.E_eig, order, "standard"))
        if basis == "original":
            out = [inst.base.from_eigenbasis(c) for c in out]
        return out
    if method == "enumerate":
        _require_simple(inst.base, j)
        P = eigenprojector(inst.base, j)
        R = reduced_resolvent(inst.base, j)
        out = [_enumerated_coefficient(P, R, inst.E, n, "standard") for n in range(order + 1)]
        if basis == "eigen":
            out = [inst.base.to_eigenbasis(c) for c in out]
        return out
    raise ValueError(f"unknown method {method!r}")


def series_coefficient_projection(inst: PerturbationInstance, j: int, n: int,
                                  method: str = "generating") -> np.ndarray:
    """The ``n``-th Taylor coefficient of the ``j``-th eigenprojector in the direction ``E``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if method == "enumerate":
        _require_simple(inst.base, j)
        if n > N_ENUM_MAX:
            raise ValueError(f"enumeration is limited to n <= {N_ENUM_MAX} (C(2n, n) terms)")
        return _enumerated_coefficient(eigenprojector(inst.base, j),
                                       reduced_resolvent(inst.base, j), inst.E, n, "standard")
    return projection_coefficients(inst, j, n, method=method)[n]


def _eigenvalue_coefficients_from(inst, j, eig_coeffs) -> np.ndarray:
    """``lambda^(n) = tr(P^(n-1) E) + tr(P^(n) R^+)`` with ``R^+`` the pseudo-inverse."""
    shift = np.nan_to_num(_shifts(inst.base, j))
    Ee = inst.E_eig
    order = len(eig_coeffs) - 1
    lam = np.empty(order + 1)
    lam[0] = inst.base.eigenvalues[j - 1]
    for n in range(1, order + 1):
        lam[n] = np.sum(eig_coeffs[n - 1] * Ee.T) + np.dot(np.diagonal(eig_coeffs[n]), shift)
    return lam


def eigenvalue_coefficients(inst: PerturbationInstance, j: int, order: int,
                            method: str = "generating") -> np.ndarray:
    """Eigenvalue coefficients ``lambda_j^(0), ..., lambda_j^(order)``."""
    eig = projection_coefficients(inst, j, order, method=method, basis="eigen")
    return _eigenvalue_coefficients_from(inst, j, eig)


def series_coefficient_eigenvalue(inst: PerturbationInstance, j: int, n: int,
                                  method: str = "generating") -> float:
    return float(eigenvalue_coefficients(inst, j, n, method=method)[n])


# -- clustered eigenvalues ---------------------------------------------------


@dataclass(frozen=True)
class GroupSeries:
    """Perturbation series of a cluster projector ``P_r``."""

    r: int
    members: tuple[int, ...]
    order: int
    convention: str
    coefficients: list
    partial_sum: np.ndarray
    delta: float
    bound_factor: float  # (4 delta_r)^order


def group_delta(groups: GroupedSpectrum, r: int, E) -> float:
    w = groups.weight_diag(r)
    Ee = groups.model.to_eigenbasis(np.asarray(E, dtype=float))
    return float(np.linalg.norm(w[:, None] * Ee * w[None, :], 2))


def multiple_group_series(groups: GroupedSpectrum, r: int, E, p: int,
                          convention: str = "standard",
                          method: str = "generating") -> GroupSeries:
    """Partial sum ``sum_{n<p}`` of the cluster-projector series for group ``r``.

    ``convention="standard"`` applies the global sign ``(-1)^(n+1)`` used
    for simple eigenvalues; ``"index_parity"`` applies ``(-1)^(k1+...+k_{n+1})``
    instead, which differs by an overall minus sign at every order.  Only
    the standard convention reproduces the perturbed cluster projector.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    grp = groups[r]
    if not grp.gap > 0:
        raise DegenerateGapError(f"group {r} has zero gap")
    model = groups.model
    E = as_symmetric(E).entries
    inside = groups.mask(r)
    inv_shift = _off_power(groups.shifts(r), -1.0)
    order = p - 1
    if method == "generating":
        Ee = model.to_eigenbasis(E)
        Ee = 0.5 * (Ee + Ee.T)
        coeffs = [model.from_eigenbasis(c)
                  for c in _generating_coefficients(inv_shift, inside, Ee, order, convention)]
    elif method == "enumerate":
        P0 = groups.projector(r)
        R = groups.reduced_resolvent(r)
        coeffs = [_enumerated_coefficient(P0, R, E, n, convention) for n in range(order + 1)]
    else:
        raise ValueError(f"unknown method {method!r}")
    dr = group_delta(groups, r, E)
    return GroupSeries(r, grp.members, p, convention, coeffs, np.sum(coeffs, axis=0),
                       dr, (4.0 * dr) ** p)


def gap_of(inst: PerturbationInstance, j: int) -> float:
    return spectral_gap(inst.base, j)
