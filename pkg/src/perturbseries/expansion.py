"""Truncated perturbation expansions with every bound evaluated alongside."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundValue, eigenvalue_bounds, projection_bounds
from .series import (
    DeltaReport,
    PerturbationInstance,
    _eigenvalue_coefficients_from,
    delta,
    projection_coefficients,
)

__all__ = ["SeriesExpansion", "partial_sums"]


@dataclass(frozen=True)
class SeriesExpansion:
    """Coefficients of orders ``0..p-1``, their partial sums and all remainder bounds."""

    j: int
    order: int
    delta: DeltaReport
    proj_coeffs: list
    eval_coeffs: np.ndarray
    proj_partial_sum: np.ndarray
    eval_partial_sum: float
    bounds: dict[str, BoundValue] = field(default_factory=dict)

    def bound(self, name: str) -> float | None:
        return self.bounds[name].value

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "order": self.order,
            "delta": self.delta.as_dict(),
            "proj_coeffs": [np.asarray(c).tolist() for c in self.proj_coeffs],
            "eval_coeffs": [float(x) for x in self.eval_coeffs],
            "proj_partial_sum": np.asarray(self.proj_partial_sum).tolist(),
            "eval_partial_sum": float(self.eval_partial_sum),
            "bounds": {k: b.value for k, b in self.bounds.items()},
            "bounds_applicable": {k: b.applicable for k, b in self.bounds.items()},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def partial_sums(inst: PerturbationInstance, j: int, p: int,
                 contour_constant: float | None = None) -> SeriesExpansion:
    """Expansion to order ``p - 1`` (``p`` terms) with bounds for truncation order ``p``.

    Bounds whose preconditions fail are kept with ``applicable=False``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    rep = delta(inst, j)
    # order p is needed for the eigenvalue coefficient of order p-1
    eig = projection_coefficients(inst, j, p, basis="eigen")
    lam = _eigenvalue_coefficients_from(inst, j, eig)[:p]
    coeffs = [inst.base.from_eigenbasis(c) for c in eig[:p]]
    bounds = dict(projection_bounds(inst, j, p, rep))
    bounds.update(eigenvalue_bounds(inst, j, p, rep, contour_constant))
    return SeriesExpansion(
        j=j,
        order=p,
        delta=rep,
        proj_coeffs=coeffs,
        eval_coeffs=lam,
        proj_partial_sum=np.sum(coeffs, axis=0),
        eval_partial_sum=float(np.sum(lam)),
        bounds=bounds,
    )
