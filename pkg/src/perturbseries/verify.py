"""Randomised invariant sweep: every bound and identity checked on generated instances.

Instances are drawn deterministically from ``(seed, index)`` so a sweep is
reproducible regardless of how it is split across threads.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import eigenvalue_bounds, projection_bounds
from .config import ConfigError, parse_key_values
from .matrix_io import format_float
from .oracles import (
    DEFAULT_ATOL,
    VerificationReport,
    basic_identity_residual,
    compare,
    exact_perturbed,
    inapplicable,
    verify_separation,
    verify_weighted_projection_bound,
)
from .series import (
    PerturbationInstance,
    _eigenvalue_coefficients_from,
    composition_terms,
    delta,
    make_instance,
    projection_coefficients,
)
from .spectral import eigenprojector, reduced_resolvent

__all__ = [
    "VerifyConfig",
    "load_verify_config",
    "random_instance",
    "GeneratedInstance",
    "check_instance",
    "run_sweep",
    "sweep_csv",
    "CSV_COLUMNS",
]

PERTURBATION_KINDS = ("goe", "rank_one", "weighted")


@dataclass(frozen=True)
class VerifyConfig:
    instances: int = 1000
    d: int = 15
    delta_targets: tuple[float, ...] = (0.05, 0.2, 0.45)
    min_gap: float = 0.05
    p_max: int = 6
    term_max_n: int = 3
    seed: int = 0
    atol: float = DEFAULT_ATOL
    # test hook: scale the right-hand side of one named check to force failures
    corrupt_check: str = ""
    corrupt_factor: float = 0.0


_VERIFY_KEYS = {
    "instances": int,
    "d": int,
    "delta_targets": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "min_gap": float,
    "p_max": int,
    "term_max_n": int,
    "seed": int,
    "atol": float,
    "corrupt_check": str,
    "corrupt_factor": float,
}


def load_verify_config(text: str, **overrides) -> VerifyConfig:
    raw = parse_key_values(text)
    kwargs = {}
    for key, value in raw.items():
        if key not in _VERIFY_KEYS:
            raise ConfigError(f"unknown verify key {key!r}")
        try:
            kwargs[key] = _VERIFY_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    cfg = VerifyConfig(**kwargs)
    if cfg.instances < 0 or cfg.d < 2 or cfg.p_max < 2 or not cfg.delta_targets:
        raise ConfigError("need instances >= 0, d >= 2, p_max >= 2 and at least one delta target")
    if any(not 0 < t < 0.5 for t in cfg.delta_targets):
        raise ConfigError("delta targets must lie in (0, 1/2)")
    return cfg


@dataclass(frozen=True)
class GeneratedInstance:
    index: int
    inst: PerturbationInstance
    j: int
    kind: str
    target: float


def _random_orthogonal(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def random_instance(seed: int, index: int, d: int = 15, target: float = 0.2,
                    min_gap: float = 0.05, kind: str | None = None) -> GeneratedInstance:
    """Random base matrix with a gap of at least ``min_gap`` at a random index,
    and a perturbation rescaled so that ``delta_j`` equals ``target``.

    Eigenvalues are sorted Exp(1) draws; everything above index ``j`` is
    shifted up and everything below shifted down by ``min_gap``.
    """
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[index, 0, 0, 0]))
    lam = np.sort(rng.exponential(size=d))[::-1]
    j = int(rng.integers(1, d + 1))
    lam[: j - 1] += min_gap
    lam[j:] -= min_gap
    U = _random_orthogonal(rng, d)
    Sigma = (U * lam) @ U.T
    Sigma = 0.5 * (Sigma + Sigma.T)
    if kind is None:
        kind = PERTURBATION_KINDS[int(rng.integers(len(PERTURBATION_KINDS)))]
    G = rng.standard_normal((d, d))
    G = 0.5 * (G + G.T)
    if kind == "goe":
        E = G
    elif kind == "rank_one":
        v = rng.standard_normal(d)
        E = np.outer(v, v) * rng.choice([-1.0, 1.0])
    elif kind == "weighted":
        # large where the weight is small: stresses the relative structure
        s = np.abs(lam - lam[j - 1])
        s[j - 1] = min_gap
        Winv = (U * np.sqrt(s)) @ U.T
        E = Winv @ G @ Winv
        E = 0.5 * (E + E.T)
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    inst = make_instance(Sigma, E)
    dj = delta(inst, j).delta
    inst = make_instance(inst.base, (target / dj) * inst.E)
    return GeneratedInstance(index, inst, j, kind, target)


@dataclass(frozen=True)
class CheckRow:
    index: int
    j: int
    kind: str
    target: float
    delta: float
    delta_prime: float
    check: str
    p: int
    report: VerificationReport


CSV_COLUMNS = ("instance", "j", "kind", "target_delta", "delta", "delta_prime", "check", "p",
               "applicable", "lhs", "rhs", "slack", "pass")


def _fmt(x):
    return "" if x is None else format_float(x)


def _row_fields(r: CheckRow):
    rep = r.report
    return (r.index, r.j, r.kind, _fmt(r.target), _fmt(r.delta), _fmt(r.delta_prime), r.check, r.p,
            int(rep.applicable), _fmt(rep.lhs), _fmt(rep.rhs), _fmt(rep.slack), int(rep.passed))


def _per_term_reports(inst, j, rep, n_max, atol):
    """Worst term per ``(n, m)``, ``m <= n``, for both coefficient-term bounds."""
    P = eigenprojector(inst.base, j)
    R = reduced_resolvent(inst.base, j)
    g, dp, c = rep.gap, rep.delta_prime, rep.cross_norm
    out = []
    for n in range(1, n_max + 1):
        for m in range(0, n + 1):
            worst_a = worst_b = None
            for ks, term in composition_terms(P, R, inst.E, n, m):
                norm = float(np.linalg.norm(term))
                ra = compare(f"term_bound_n{n}_m{m}", norm, g ** (n - m) * dp ** n, atol)
                if worst_a is None or ra.slack < worst_a.slack:
                    worst_a = ra
                if m >= 1 and 0 in ks:
                    rb = compare(f"term_bound_cross_n{n}_m{m}", norm,
                                 g ** (n - m) * g ** -0.5 * c * dp ** (n - 1), atol)
                    if worst_b is None or rb.slack < worst_b.slack:
                        worst_b = rb
            out.append((n, worst_a))
            if worst_b is not None:
                out.append((n, worst_b))
    return out


def check_instance(gen: GeneratedInstance, cfg: VerifyConfig) -> list[CheckRow]:
    inst, j = gen.inst, gen.j
    rep = delta(inst, j)
    exact = exact_perturbed(inst)
    P_hat = exact.projector(j)
    lam_hat = exact.eigenvalue(j)
    p_max = cfg.p_max
    eig = projection_coefficients(inst, j, p_max, basis="eigen")
    lam = _eigenvalue_coefficients_from(inst, j, eig)
    U = inst.base.basis
    P_hat_e = U.T @ P_hat @ U
    rows: list[tuple[str, int, VerificationReport]] = []

    proj_partial = np.zeros_like(P_hat_e)
    for p in range(1, p_max + 1):
        proj_partial = proj_partial + eig[p - 1]
        proj_err = float(np.linalg.norm(P_hat_e - proj_partial))
        eval_err = abs(lam_hat - float(np.sum(lam[:p])))
        bounds = projection_bounds(inst, j, p, rep)
        bounds.update(eigenvalue_bounds(inst, j, p, rep))
        for name, b in bounds.items():
            lhs = proj_err if name.startswith("proj") else eval_err
            rows.append((name, p, compare(name, lhs, b.value, cfg.atol) if b.applicable
                         else inapplicable(name)))
        if p >= 2:
            # whole-coefficient bound for the order p-1 coefficient
            n = p - 1
            rows.append(("coeff_bound", n, compare(
                "coeff_bound", float(np.linalg.norm(eig[n])),
                rep.gap ** -0.5 * rep.cross_norm * 4 ** n * rep.delta_prime ** (n - 1), cfg.atol)))

    for r in verify_separation(inst, j, exact, cfg.atol):
        rows.append((r.check, 0, r))
    r = verify_weighted_projection_bound(inst, j, exact, cfg.atol)
    rows.append((r.check, 0, r))
    res = basic_identity_residual(inst, j, exact)
    rows.append(("basic_identity", 0, compare("basic_identity", res, 0.0, cfg.atol)))
    for n, r in _per_term_reports(inst, j, rep, cfg.term_max_n, cfg.atol):
        rows.append((r.check, n, r))

    out = []
    for name, p, r in rows:
        if cfg.corrupt_check and name == cfg.corrupt_check and r.applicable:
            r = compare(name, r.lhs, r.rhs * cfg.corrupt_factor, cfg.atol)
        out.append(CheckRow(gen.index, j, gen.kind, gen.target, rep.delta, rep.delta_prime,
                            name, p, r))
    return out


@dataclass
class SweepResult:
    rows: list[CheckRow] = field(default_factory=list)

    @property
    def failures(self) -> list[CheckRow]:
        return [r for r in self.rows if r.report.applicable and not r.report.passed]

    def counts(self) -> dict[str, tuple[int, int, int]]:
        """``check -> (applicable, passed, inapplicable)``."""
        out: dict[str, list[int]] = {}
        for r in self.rows:
            key = r.check
            if key.startswith("term_bound_cross"):
                key = "term_bound_cross"
            elif key.startswith("term_bound"):
                key = "term_bound"
            c = out.setdefault(key, [0, 0, 0])
            if r.report.applicable:
                c[0] += 1
                c[1] += int(r.report.passed)
            else:
                c[2] += 1
        return {k: tuple(v) for k, v in out.items()}


def _one(args):
    cfg, index = args
    target = cfg.delta_targets[index % len(cfg.delta_targets)]
    gen = random_instance(cfg.seed, index, cfg.d, target, cfg.min_gap)
    return check_instance(gen, cfg)


def run_sweep(cfg: VerifyConfig, threads: int = 1) -> SweepResult:
    jobs = [(cfg, i) for i in range(cfg.instances)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_one, jobs))
    else:
        parts = [_one(j) for j in jobs]
    return SweepResult([row for part in parts for row in part])


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow(_row_fields(r))
    return buf.getvalue()


def with_overrides(cfg: VerifyConfig, **kw) -> VerifyConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
