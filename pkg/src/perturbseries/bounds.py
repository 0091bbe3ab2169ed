"""Remainder and tail bounds for truncated perturbation series.

Every bound is returned as a :class:`BoundValue` carrying an explicit
``applicable`` flag: when a precondition fails the value is ``None`` and the
reason is recorded, so sweeps can count inapplicable cases instead of
aborting.  The ``remainder_bound_*`` entry points additionally raise
:class:`BoundInapplicableError` when the weighted norm is at least 1/2,
since then none of their bounds apply.

Bound names:

``proj_remainder``     ``4 g^{-1/2} c (4 delta')^{p-1} / (1 - 2 delta)^2``
``proj_tail``          ``4 g^{-1/2} c (4 delta')^{p-1} / (1 - 4 delta')``
``proj_tail_simple``   ``(4 delta')^p / (1 - 4 delta')``
``proj_contour``       ``2 (2 delta)^p / (1 - 2 delta)``
``eval_remainder``     ``12 c^2 (4 delta')^{p-2} / (1 - 2 delta)^3``, p >= 2
``eval_tail``          ``8 c^2 (4 delta')^{p-2} / (1 - 4 delta')``, p >= 2
``eval_tail_simple``   ``g (4 delta')^p / (1 - 4 delta')``, p >= 2
``eval_contour``       ``C g (2 delta)^p / (1 - 2 delta)``

where ``c = ||P_j E |R_j|^{1/2}||_2``.  ``eval_contour`` uses ``C = 1`` for
``p = 1``; for ``p >= 2`` only a dimension-dependent constant is known and
the default is ``2 d`` (override with ``contour_constant``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundInapplicableError, DivergenceError
from .series import DeltaReport, PerturbationInstance, delta
from .spectral import _off_power, _shifts

__all__ = [
    "BoundValue",
    "projection_bounds",
    "eigenvalue_bounds",
    "remainder_bound_projection",
    "remainder_bound_eigenvalue",
    "TwoTermBound",
    "eigenvalue_two_term_bound",
    "ProjectionDistanceBounds",
    "projection_distance_bounds",
]


@dataclass(frozen=True)
class BoundValue:
    name: str
    value: float | None
    applicable: bool
    note: str = ""


def _ok(name, value, note=""):
    return BoundValue(name, float(value), True, note)


def _na(name, note):
    return BoundValue(name, None, False, note)


def projection_bounds(inst: PerturbationInstance, j: int, p: int,
                      rep: DeltaReport | None = None) -> dict[str, BoundValue]:
    """All projector remainder bounds at truncation order ``p`` (never raises on preconditions)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rep = rep or delta(inst, j)
    d, dp, g, c = rep.delta, rep.delta_prime, rep.gap, rep.cross_norm
    out = {}
    if d < 0.5:
        out["proj_remainder"] = _ok("proj_remainder",
                                    4 * g ** -0.5 * c * (4 * dp) ** (p - 1) / (1 - 2 * d) ** 2)
        out["proj_contour"] = _ok("proj_contour", 2 * (2 * d) ** p / (1 - 2 * d))
    else:
        out["proj_remainder"] = _na("proj_remainder", "requires delta < 1/2")
        out["proj_contour"] = _na("proj_contour", "requires delta < 1/2")
    if dp < 0.25:
        out["proj_tail"] = _ok("proj_tail", 4 * g ** -0.5 * c * (4 * dp) ** (p - 1) / (1 - 4 * dp))
        out["proj_tail_simple"] = _ok("proj_tail_simple", (4 * dp) ** p / (1 - 4 * dp))
    else:
        out["proj_tail"] = _na("proj_tail", "requires delta' < 1/4")
        out["proj_tail_simple"] = _na("proj_tail_simple", "requires delta' < 1/4")
    return out


def eigenvalue_bounds(inst: PerturbationInstance, j: int, p: int,
                      rep: DeltaReport | None = None,
                      contour_constant: float | None = None) -> dict[str, BoundValue]:
    """All eigenvalue remainder bounds at truncation order ``p`` (never raises on preconditions)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rep = rep or delta(inst, j)
    d, dp, g, c = rep.delta, rep.delta_prime, rep.gap, rep.cross_norm
    out = {}
    if d >= 0.5:
        out["eval_remainder"] = _na("eval_remainder", "requires delta < 1/2")
    elif p < 2:
        out["eval_remainder"] = _na("eval_remainder", "requires p >= 2")
    else:
        out["eval_remainder"] = _ok("eval_remainder",
                                    12 * c ** 2 * (4 * dp) ** (p - 2) / (1 - 2 * d) ** 3)
    for name, val in (("eval_tail", lambda: 8 * c ** 2 * (4 * dp) ** (p - 2) / (1 - 4 * dp)),
                      ("eval_tail_simple", lambda: g * (4 * dp) ** p / (1 - 4 * dp))):
        if dp >= 0.25:
            out[name] = _na(name, "requires delta' < 1/4")
        elif p < 2:
            out[name] = _na(name, "requires p >= 2")
        else:
            out[name] = _ok(name, val())
    if d >= 0.5:
        out["eval_contour"] = _na("eval_contour", "requires delta < 1/2")
    else:
        if p == 1:
            C, note = 1.0, ""
        else:
            C = 2.0 * inst.dim if contour_constant is None else float(contour_constant)
            note = f"dimension-dependent constant C={C:g}"
        out["eval_contour"] = _ok("eval_contour", C * g * (2 * d) ** p / (1 - 2 * d), note)
    return out


def _require_below_half(rep: DeltaReport) -> None:
    if not rep.delta < 0.5:
        raise BoundInapplicableError(f"delta_{rep.j} = {rep.delta:.6g} >= 1/2")


def remainder_bound_projection(inst: PerturbationInstance, j: int, p: int) -> dict[str, BoundValue]:
    """Projector remainder bounds; raises when ``delta_j >= 1/2``."""
    rep = delta(inst, j)
    _require_below_half(rep)
    return projection_bounds(inst, j, p, rep)


def remainder_bound_eigenvalue(inst: PerturbationInstance, j: int, p: int,
                               contour_constant: float | None = None) -> dict[str, BoundValue]:
    """Eigenvalue remainder bounds; raises when ``delta_j >= 1/2``."""
    rep = delta(inst, j)
    _require_below_half(rep)
    return eigenvalue_bounds(inst, j, p, rep, contour_constant)


@dataclass(frozen=True)
class TwoTermBound:
    """``|lambda_hat - lambda| <= linear + constant * quadratic``."""

    linear: float     # ||P E P||_2
    quadratic: float  # ||P E |R|^{1/2}||_2^2
    constant: float
    total: float


def eigenvalue_two_term_bound(inst: PerturbationInstance, j: int, eps: float,
                              constant: float | None = None) -> TwoTermBound:
    """Linear-plus-quadratic eigenvalue bound under ``delta_j <= 1/2 - eps``.

    The constant is unspecified in general; the default ``12 / (2 eps)^3``
    is what the order-2 remainder bound gives under the same margin.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    rep = delta(inst, j)
    if rep.delta > 0.5 - eps:
        raise BoundInapplicableError(f"delta_{j} = {rep.delta:.6g} > 1/2 - eps")
    if constant is None:
        constant = 12.0 / (2.0 * eps) ** 3
    linear = rep.norm_pp * rep.gap
    quad = rep.cross_norm ** 2
    return TwoTermBound(linear, quad, constant, linear + constant * quad)


@dataclass(frozen=True)
class ProjectionDistanceBounds:
    """Raw quantities controlling ``||P_hat - P||_2`` (constants unknown).

    ``series_sum`` is ``sum_{m=1}^{n_terms} ||(R E)^m P||_2`` with a certified
    geometric ``tail_estimate`` for the rest.  ``norm_sum`` and
    ``sum_norm`` are the order-``p`` truncations (sum of norms, norm of
    sum), each paired with ``delta_prime_power = delta'^p``.
    """

    terms: np.ndarray
    series_sum: float
    n_terms: int
    tail_estimate: float
    norm_sum: float
    sum_norm: float
    delta_prime_power: float


def projection_distance_bounds(inst: PerturbationInstance, j: int, p: int,
                               max_terms: int = 60, rtol: float = 1e-12) -> ProjectionDistanceBounds:
    if p < 1:
        raise ValueError("p must be >= 1")
    rep = delta(inst, j)
    inv = _off_power(_shifts(inst.base, j), -1.0)
    Ee = inst.E_eig
    x = np.zeros(inst.dim)
    x[j - 1] = 1.0
    # (R E)^m P has rank one, so its HS norm is the length of (R E)^m u_j
    vecs, norms = [], []
    stop = None
    for m in range(1, max_terms + 2):
        x = inv * (Ee @ x)
        vecs.append(x)
        norms.append(float(np.linalg.norm(x)))
        if m < 2:
            if norms[0] == 0.0:
                stop = (1, 0.0)
                break
            continue
        prev, cur = norms[-2], norms[-1]
        total = sum(norms[:-1])
        if prev == 0.0:
            stop = (m - 1, 0.0)
            break
        ratio = cur / prev
        if ratio < 1:
            tail = cur / (1 - ratio)
            if tail <= rtol * total:
                stop = (m - 1, tail)
                break
    if stop is None:
        raise DivergenceError(f"||(R E)^m P|| did not contract within {max_terms} terms")
    M, tail = stop
    terms = np.array(norms[:M])
    norm_sum = float(np.sum(norms[: p - 1]))
    while len(vecs) < p - 1:
        x = inv * (Ee @ x)
        vecs.append(x)
        norm_sum += float(np.linalg.norm(x))
    sum_norm = float(np.linalg.norm(np.sum(vecs[: p - 1], axis=0))) if p > 1 else 0.0
    return ProjectionDistanceBounds(terms, float(terms.sum()), M, tail, norm_sum, sum_norm,
                                    rep.delta_prime ** p)
