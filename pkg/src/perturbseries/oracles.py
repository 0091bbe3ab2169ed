"""Independent oracles and executable checks for the perturbation engine.

Three routes to the series coefficients that share no code with
:mod:`perturbseries.series`:

* exact re-diagonalisation of ``Sigma + t E`` (and finite differences in ``t``),
* trapezoid-rule contour integrals of the complex resolvent (computed with
  dense complex inverses, never with the eigendecomposition),
* the explicit remainder identity, evaluated with perturbed quantities.

All checks return :class:`VerificationReport` records; an unmet
precondition yields ``applicable=False`` rather than an exception.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from .errors import BoundInapplicableError, ContourError, StencilError
from .series import PerturbationInstance, delta, projection_coefficients
from .spectral import (
    SpectralModel,
    _off_power,
    _shifts,
    as_symmetric,
    decompose_symmetric,
    eigenprojector,
    spectral_gap,
)

__all__ = [
    "ExactPerturbed",
    "exact_perturbed",
    "ContourSpec",
    "ContourResult",
    "contour_projector",
    "contour_series_coefficient",
    "finite_difference_coefficient",
    "VerificationReport",
    "verify_separation",
    "verify_weighted_projection_bound",
    "verify_remainder_identity",
    "basic_identity_residual",
]

DEFAULT_ATOL = 1e-10


@dataclass(frozen=True)
class ExactPerturbed:
    """Eigendecomposition of ``Sigma + E``, paired with the base by sorted order."""

    model: SpectralModel

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.model.eigenvalues

    def eigenvalue(self, j: int) -> float:
        self.model.check_index(j)
        return float(self.model.eigenvalues[j - 1])

    def projector(self, j: int) -> np.ndarray:
        return eigenprojector(self.model, j)

    def pairing(self, j: int) -> int:
        """Index of the unperturbed eigenvalue matched with perturbed index ``j``."""
        self.model.check_index(j)
        return j


def exact_perturbed(inst: PerturbationInstance) -> ExactPerturbed:
    return ExactPerturbed(decompose_symmetric(inst.perturbed))


# -- contour integrals -------------------------------------------------------


@dataclass(frozen=True)
class ContourSpec:
    """Circle ``|z - center| = radius`` discretised with ``nodes`` trapezoid points."""

    center: complex
    radius: float
    nodes: int = 256

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.nodes < 16 or self.nodes % 2:
            raise ValueError("nodes must be an even integer >= 16")

    @classmethod
    def around(cls, model: SpectralModel, j: int, nodes: int = 256) -> "ContourSpec":
        """The circle of radius ``g_j / 2`` centred at ``lambda_j``."""
        g = spectral_gap(model, j)
        if not np.isfinite(g):
            g = max(1.0, abs(float(model.eigenvalues[0])))
        return cls(complex(model.eigenvalues[j - 1]), 0.5 * g, nodes)

    def points(self, nodes: int | None = None):
        N = self.nodes if nodes is None else nodes
        # conjugation-symmetric nodes: theta_k and -theta_k both appear
        theta = 2.0 * np.pi * np.arange(N) / N
        e = np.exp(1j * theta)
        return self.center + self.radius * e, e


@dataclass(frozen=True)
class ContourResult:
    matrix: np.ndarray
    imag_residual: float
    nodes: int
    change: float  # max-abs difference to the previous node count (adaptive mode)


def _check_contour(A: np.ndarray, spec: ContourSpec, rtol: float = 1e-10) -> None:
    w = np.linalg.eigvalsh(A)
    dist = np.abs(np.abs(w - spec.center) - spec.radius)
    if np.any(dist <= rtol * max(spec.radius, 1.0)):
        raise ContourError("an eigenvalue lies on the integration contour")


def _trapezoid(integrand, spec: ContourSpec, nodes: int, sign: float) -> tuple[np.ndarray, float]:
    z, e = spec.points(nodes)
    vals = integrand(z)  # shape (N, d, d)
    # (1/2 pi i) * sum f(z_k) * i r e_k * (2 pi / N) = (r / N) sum e_k f(z_k)
    acc = np.tensordot(e, vals, axes=(0, 0)) * (sign * spec.radius / nodes)
    return acc.real.copy(), float(np.max(np.abs(acc.imag))) if acc.size else 0.0


def _integrate(integrand, A, spec: ContourSpec, sign: float, adaptive: bool,
               tol: float, max_nodes: int) -> ContourResult:
    _check_contour(A, spec)
    N = spec.nodes
    prev, imag = _trapezoid(integrand, spec, N, sign)
    if not adaptive:
        return ContourResult(prev, imag, N, float("nan"))
    while True:
        N *= 2
        if N > max_nodes:
            raise ContourError(f"contour integral did not settle within {max_nodes} nodes")
        cur, imag = _trapezoid(integrand, spec, N, sign)
        change = float(np.max(np.abs(cur - prev)))
        if change < tol:
            if imag >= 1e-10:
                raise ContourError(f"imaginary residual {imag:.3e} exceeds 1e-10")
            return ContourResult(cur, imag, N, change)
        prev = cur


def _resolvents(A: np.ndarray, z: np.ndarray) -> np.ndarray:
    d = A.shape[0]
    M = A[None, :, :].astype(complex) - z[:, None, None] * np.eye(d)[None]
    return np.linalg.inv(M)


def contour_projector(A, spec: ContourSpec, adaptive: bool = True, tol: float = 1e-10,
                      max_nodes: int = 1 << 16) -> ContourResult:
    """``-(1/2 pi i) \\oint (A - z)^{-1} dz``: the spectral projector for the enclosed eigenvalues.

    In adaptive mode the node count starts at ``spec.nodes`` and doubles
    until two successive results differ by less than ``tol`` (max-abs).
    """
    A = as_symmetric(A).entries
    return _integrate(lambda z: _resolvents(A, z), A, spec, -1.0, adaptive, tol, max_nodes)


def contour_series_coefficient(inst: PerturbationInstance, j: int, n: int,
                               spec: ContourSpec | None = None, adaptive: bool = True,
                               tol: float = 1e-10, max_nodes: int = 1 << 16) -> ContourResult:
    """``((-1)^(n-1) / 2 pi i) \\oint (S - z)^{-1} (E (S - z)^{-1})^n dz`` around ``lambda_j``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    inst.base.check_index(j)
    if spec is None:
        spec = ContourSpec.around(inst.base, j)
    S = inst.base.source if inst.base.source is not None else inst.base.matrix
    E = inst.E

    def integrand(z):
        Rz = _resolvents(S, z)
        acc = Rz
        ER = E[None].astype(complex) @ Rz
        for _ in range(n):
            acc = acc @ ER
        return acc

    sign = -1.0 if n % 2 == 0 else 1.0  # (-1)^(n-1)
    return _integrate(integrand, S, spec, sign, adaptive, tol, max_nodes)


# -- finite differences ------------------------------------------------------

_UNIT_ROUNDOFF = np.finfo(float).eps / 2


def _stencil(n: int):
    """Central-difference nodes/weights for the n-th derivative (second-order accurate)."""
    if n == 1:
        return (np.array([-1.0, 1.0]), np.array([-0.5, 0.5]))
    if n == 2:
        return (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0]))
    if n == 3:
        return (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([-0.5, 1.0, -1.0, 0.5]))
    raise ValueError("finite differences are provided for n in {1, 2, 3}")


def finite_difference_coefficient(inst: PerturbationInstance, j: int, n: int,
                                  h: float | None = None) -> np.ndarray:
    """``(1/n!) d^n/dt^n P_j(Sigma + t E)`` at ``t = 0`` by central differences.

    One Richardson step (steps ``h`` and ``h/2``) removes the ``h^2`` error
    term.  The default step is ``u^{1/(n+2)} g_j / ||E||_inf`` with ``u`` the
    unit roundoff.
    """
    offsets, weights = _stencil(n)
    rep = delta(inst, j)
    normE = float(np.linalg.norm(inst.E, 2))
    if normE == 0.0:
        return np.zeros((inst.dim, inst.dim))
    if h is None:
        h = _UNIT_ROUNDOFF ** (1.0 / (n + 2)) * rep.gap / normE
    if not h > 0:
        raise ValueError("h must be positive")
    if n * h * rep.delta >= 0.5:
        raise StencilError(f"stencil radius {n}*h leaves the region delta(t) < 1/2")
    base = inst.base.source if inst.base.source is not None else inst.base.matrix
    fact = float(np.prod(np.arange(1, n + 1)))

    def estimate(step):
        acc = np.zeros((inst.dim, inst.dim))
        for o, wgt in zip(offsets, weights):
            model = decompose_symmetric(base + (o * step) * inst.E)
            if not spectral_gap(model, j) > 0:
                raise StencilError(f"eigenvalue {j} is not simple at t = {o * step:g}")
            acc += wgt * eigenprojector(model, j)
        return acc / step ** n / fact

    coarse, fine = estimate(h), estimate(h / 2)
    return (4.0 * fine - coarse) / 3.0


# -- verification reports ----------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking ``lhs <= rhs``; ``slack = rhs - lhs``."""

    check: str
    applicable: bool
    lhs: float | None
    rhs: float | None
    slack: float | None
    passed: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def compare(check: str, lhs: float, rhs: float, atol: float = DEFAULT_ATOL) -> VerificationReport:
    lhs, rhs = float(lhs), float(rhs)
    return VerificationReport(check, True, lhs, rhs, rhs - lhs, bool(lhs <= rhs + atol))


def inapplicable(check: str) -> VerificationReport:
    # an inapplicable check makes no claim, so it cannot fail
    return VerificationReport(check, False, None, None, None, True)


def verify_separation(inst: PerturbationInstance, j: int, exact: ExactPerturbed | None = None,
                      atol: float = DEFAULT_ATOL) -> list[VerificationReport]:
    """Eigenvalue separation under ``delta_j < 1/2``.

    * ``separation_self``:  ``|lam_hat_j - lam_j| <= delta_j g_j``
    * ``separation_below``: ``lam_hat_{j+1} - lam_{j+1} <= delta_j (lam_j - lam_{j+1})``
    * ``separation_above``: ``lam_hat_{j-1} - lam_{j-1} >= -delta_j (lam_{j-1} - lam_j)``

    The neighbour checks are inapplicable at the ends of the spectrum.
    """
    names = ("separation_self", "separation_below", "separation_above")
    rep = delta(inst, j)
    if not rep.delta < 0.5:
        return [inapplicable(c) for c in names]
    exact = exact or exact_perturbed(inst)
    lam, lh = inst.base.eigenvalues, exact.eigenvalues
    i = j - 1
    out = [compare(names[0], abs(lh[i] - lam[i]), rep.delta * rep.gap, atol)]
    if j < inst.dim:
        out.append(compare(names[1], lh[i + 1] - lam[i + 1], rep.delta * (lam[i] - lam[i + 1]), atol))
    else:
        out.append(inapplicable(names[1]))
    if j > 1:
        out.append(compare(names[2], lam[i - 1] - lh[i - 1], rep.delta * (lam[i - 1] - lam[i]), atol))
    else:
        out.append(inapplicable(names[2]))
    return out


def _perturbed_vector_in_base(inst, exact, j):
    return inst.base.basis.T @ exact.model.vector(j)


def verify_weighted_projection_bound(inst: PerturbationInstance, j: int,
                                     exact: ExactPerturbed | None = None,
                                     atol: float = DEFAULT_ATOL) -> VerificationReport:
    """``|| |R_j|^{-1/2} P_hat_j ||_2 <= || |R_j|^{1/2} E P_j ||_2 / (1 - 2 delta_j)``.

    ``|R_j|^{-1/2}`` is the pseudo-inverse ``sum_{k != j} |lam_k - lam_j|^{1/2} P_k``.
    """
    rep = delta(inst, j)
    if not rep.delta < 0.5:
        return inapplicable("weighted_projection")
    exact = exact or exact_perturbed(inst)
    a = _off_power(np.abs(_shifts(inst.base, j)), 0.5)
    v = _perturbed_vector_in_base(inst, exact, j)
    lhs = float(np.linalg.norm(a * v))
    return compare("weighted_projection", lhs, rep.cross_norm / (1 - 2 * rep.delta), atol)


def basic_identity_residual(inst: PerturbationInstance, j: int,
                            exact: ExactPerturbed | None = None) -> float:
    """``max_{k != j} || (lam_hat_j - lam_k) P_k P_hat_j - P_k E P_hat_j ||_2``."""
    exact = exact or exact_perturbed(inst)
    v = exact.model.vector(j)
    U = inst.base.basis
    r = (exact.eigenvalue(j) - inst.base.eigenvalues) * (U.T @ v) - U.T @ (inst.E @ v)
    r[j - 1] = 0.0
    return float(np.max(np.abs(r))) if r.size else 0.0


def _composition_products(B: list[np.ndarray], E: np.ndarray, parts: int, K: int) -> list[np.ndarray]:
    """``M[s] = sum_{k_1+...+k_parts = s} B[k_1] E ... B[k_parts] E`` for ``s = 0..K``."""
    M = [B[s] @ E for s in range(K + 1)]
    for _ in range(parts - 1):
        M = [sum(M[s - a] @ B[a] @ E for a in range(s + 1)) for s in range(K + 1)]
    return M


def remainder_tail_estimate(delta_j: float, p: int, K: int) -> float:
    """``sum_{s > K} C(s+p-1, p-1) delta^s``: terms beyond the truncation, in units of the gap-normalised series."""
    if delta_j == 0.0:
        return 0.0
    total, s = 0.0, K + 1
    while True:
        term = comb(s + p - 1, p - 1) * delta_j ** s
        total += term
        if term < 1e-18 * max(total, 1e-300) or s > K + 2000:
            return total
        s += 1


def verify_remainder_identity(inst: PerturbationInstance, j: int, p: int, K: int = 40,
                              exact: ExactPerturbed | None = None,
                              atol: float = DEFAULT_ATOL) -> VerificationReport:
    """Compare the truncated remainder with its closed form built from perturbed quantities.

    ``P_hat - sum_{n<p} P^(n) = (-1)^(p-1) sum_k R^(k_1) E ... R^(k_p) E R_hat^(p - |k|)``
    with ``R_hat^(k) = -(lam_hat_j - lam_j)^(-k) P_hat`` for ``k <= 0`` and
    ``R_hat^k`` for ``k > 0``, where ``R_hat = sum_{k != j} (lam_hat_k - lam_j)^{-1} P_hat_k``.
    Compositions are truncated at ``|k| <= K``; the check passes when the
    discrepancy is at most the geometric tail estimate plus ``atol``.
    """
    if p < 1 or K < p:
        raise ValueError("need p >= 1 and K >= p")
    rep = delta(inst, j)
    if not rep.delta < 0.5:
        return inapplicable("remainder_identity")
    exact = exact or exact_perturbed(inst)
    # everything in the base eigenbasis
    Ee = inst.E_eig
    inv = _off_power(_shifts(inst.base, j), -1.0)
    P0 = np.zeros((inst.dim, inst.dim))
    P0[j - 1, j - 1] = 1.0
    B = [-P0] + [np.diag(inv ** k) for k in range(1, K + 1)]
    Vh = inst.base.basis.T @ exact.model.basis
    lam_hat = exact.eigenvalues
    eps = lam_hat[j - 1] - inst.base.eigenvalues[j - 1]
    Ph = np.outer(Vh[:, j - 1], Vh[:, j - 1])
    hat_shift = lam_hat - inst.base.eigenvalues[j - 1]
    hat_shift[j - 1] = 1.0  # excluded below; avoids 0/0 when E = 0
    hat_inv = 1.0 / hat_shift
    hat_inv[j - 1] = 0.0

    def R_hat(k):
        if k <= 0:
            return -(eps ** (-k)) * Ph
        return (Vh * hat_inv ** k) @ Vh.T

    M = _composition_products(B, Ee, p, K)
    rhs = sum(M[s] @ R_hat(p - s) for s in range(K + 1))
    rhs *= -1.0 if p % 2 == 0 else 1.0  # (-1)^(p-1)
    coeffs = projection_coefficients(inst, j, p - 1, basis="eigen")
    lhs = Ph - np.sum(coeffs, axis=0)
    disc = float(np.linalg.norm(lhs - rhs))
    return compare("remainder_identity", disc, remainder_tail_estimate(rep.delta, p, K), atol)


def require_applicable(report: VerificationReport) -> VerificationReport:
    if not report.applicable:
        raise BoundInapplicableError(f"{report.check}: precondition delta < 1/2 fails")
    return report
