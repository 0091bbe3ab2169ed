"""Empirical covariance simulation: decay models, sampling, Monte Carlo and experiments.

Ground truth is diagonal (eigenbasis = standard basis).  Data rows are
``X_i = sum_k sqrt(lambda_k) eta_k^(i) e_k`` with independent, symmetric,
unit-variance coefficients ``eta``.  Random numbers come from the Philox
counter-based generator; replicate ``r`` of a run with base seed ``s`` uses
seed ``s + r``, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .config import ConfigError, parse_key_values
from .errors import DegenerateGapError
from .matrix_io import format_float
from .series import make_instance, delta
from .spectral import SpectralModel, SymmetricMatrix, as_symmetric

__all__ = [
    "DecayModel",
    "build_decay_model",
    "SamplerSpec",
    "sample_data",
    "empirical_covariance",
    "RelativeRankStats",
    "relative_rank_stats",
    "gaussian_first_two_term_moment",
    "gaussian_first_two_term_moment_alternative",
    "MonteCarloRow",
    "MonteCarloSummary",
    "mc_eigen_error",
    "ExperimentConfig",
    "load_experiment_config",
    "phase_transition_experiment",
    "PhaseTable",
]

DISTRIBUTIONS = ("gaussian", "rademacher", "uniform_scaled")
OUT_OF_ASSUMPTION = ("student_t3",)


# -- decay models ------------------------------------------------------------


@dataclass(frozen=True)
class DecayModel:
    kind: str
    alpha: float | None
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def spectral_model(self) -> SpectralModel:
        U = np.eye(self.dim)
        U.setflags(write=False)
        return SpectralModel(self.eigenvalues, U, np.diag(self.eigenvalues))

    def covariance(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def tail_mass(self, terms: int = 100_000) -> float:
        """Fraction of the trace of the untruncated model lost by keeping ``d`` terms.

        Only defined for the exponential family; informational, not enforced.
        """
        if self.kind != "exponential_alpha":
            return 0.0
        k = np.arange(1, self.dim + terms + 1, dtype=float)
        lam = np.exp(-(k ** self.alpha))
        return float(lam[self.dim:].sum() / lam.sum())


def build_decay_model(kind: str = "exponential_alpha", alpha: float | None = 1.0,
                      d: int | None = None, values=None) -> DecayModel:
    """``exponential_alpha``: ``lambda_j = exp(-j^alpha)``, ``j = 1..d``; ``user_list``: given values."""
    if kind == "exponential_alpha":
        if alpha is None or not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if d is None or d < 2:
            raise ValueError("d must be >= 2")
        lam = np.exp(-(np.arange(1, d + 1, dtype=float) ** alpha))
    elif kind == "user_list":
        lam = np.asarray(values, dtype=float)
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("need at least two eigenvalues")
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be positive and non-increasing")
        alpha = None
    else:
        raise ValueError(f"unknown decay model {kind!r}")
    lam = lam.copy()
    lam.setflags(write=False)
    return DecayModel(kind, alpha, lam)


# -- sampling ----------------------------------------------------------------


@dataclass(frozen=True)
class SamplerSpec:
    distribution: str = "gaussian"
    n: int = 100
    seed: int = 0
    out_of_assumption: bool = False

    def __post_init__(self):
        if self.distribution in OUT_OF_ASSUMPTION:
            if not self.out_of_assumption:
                raise ValueError(f"{self.distribution!r} violates the sub-Gaussian assumption; "
                                 "set out_of_assumption=True to use it")
        elif self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _coefficients(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "rademacher":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if dist == "uniform_scaled":
        return np.sqrt(3.0) * rng.uniform(-1.0, 1.0, size=shape)
    if dist == "student_t3":
        return rng.standard_t(3, size=shape) / np.sqrt(3.0)
    raise ValueError(f"unknown distribution {dist!r}")


def sample_data(model: DecayModel, spec: SamplerSpec) -> np.ndarray:
    """``n x d`` data matrix; identical for identical ``(model, spec)``."""
    eta = _coefficients(_generator(spec.seed), spec.distribution, (spec.n, model.dim))
    return eta * np.sqrt(model.eigenvalues)[None, :]


def empirical_covariance(data) -> SymmetricMatrix:
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("data must be an n x d array with n >= 1")
    S = X.T @ X / X.shape[0]
    return as_symmetric(0.5 * (S + S.T))


# -- relative-rank diagnostics ------------------------------------------------


@dataclass(frozen=True)
class RelativeRankStats:
    j: int
    ratio_lg: float      # lambda_j / g_j
    abs_sum: float       # sum_{k != j} lambda_k / |lambda_k - lambda_j|
    signed_sum: float    # sum_{k != j} lambda_k / (lambda_k - lambda_j)
    proj_sum: float      # sum_{k != j} lambda_j lambda_k / (lambda_k - lambda_j)^2
    cond_rg: bool | None   # ratio_lg * (abs_sum + ratio_lg) <= c1 n
    cond_rel: bool | None  # abs_sum + ratio_lg <= sqrt(c1 n)


def _gap_and_shifts(lam: np.ndarray, j: int):
    d = lam.shape[0]
    if not 1 <= j <= d:
        raise IndexError(f"index j={j} outside 1..{d}")
    if j == 1:
        g = lam[0] - lam[1]
    elif j == d:
        g = lam[d - 2] - lam[d - 1]
    else:
        g = min(lam[j - 2] - lam[j - 1], lam[j - 1] - lam[j])
    if not g > 0:
        raise DegenerateGapError(f"eigenvalue {j} is not simple")
    s = np.delete(lam, j - 1) - lam[j - 1]
    return float(g), s, np.delete(lam, j - 1)


def relative_rank_stats(model: DecayModel, j: int, c1: float = 1.0,
                        n: int | None = None) -> RelativeRankStats:
    """Eigenvalue sums governing the empirical-covariance bounds.

    The two conditions are evaluated only when ``n`` is given.
    """
    lam = model.eigenvalues
    g, s, others = _gap_and_shifts(lam, j)
    lj = float(lam[j - 1])
    ratio = lj / g
    abs_sum = float(np.sum(others / np.abs(s)))
    signed = float(np.sum(others / s))
    proj = float(np.sum((lj / s) * (others / s)))  # avoids s**2 underflow deep in the tail
    rg = rel = None
    if n is not None:
        rg = bool(ratio * (abs_sum + ratio) <= c1 * n)
        rel = bool(abs_sum + ratio <= np.sqrt(c1 * n))
    return RelativeRankStats(j, ratio, abs_sum, signed, proj, rg, rel)


def gaussian_first_two_term_moment(model: DecayModel, j: int, n: int) -> float:
    """Exact ``E[(tr(P E P) - tr(P E R E P))^2]`` for Gaussian data.

    With ``w_k = lambda_k / (lambda_k - lambda_j)``, ``S1 = sum w_k`` and
    ``S2 = sum w_k^2``::

        (lambda_j^2 / n) * (2 - 4 S1 / n + (n + 2) / n^2 * (S1^2 + 2 S2))

    The three ingredients are ``E a^2 = 2/n`` for ``a = chi2_n/n - 1``,
    ``E[a b_k^2] = 2/n^2`` and ``E[b_k^2 b_l^2] = (1 + 2[k=l]) (n+2)/n^3``
    for the normalised cross moments ``b_k``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _, s, others = _gap_and_shifts(model.eigenvalues, j)
    w = others / s
    S1, S2 = float(np.sum(w)), float(np.sum(w ** 2))
    lj = float(model.eigenvalues[j - 1])
    return lj ** 2 / n * (2.0 - 4.0 * S1 / n + (n + 2) / n ** 2 * (S1 ** 2 + 2.0 * S2))


def gaussian_first_two_term_moment_alternative(model: DecayModel, j: int, n: int) -> float:
    """The alternative closed form ``(lambda_j^2/n)(2 + (n+2)/n^2 S1^2 + 6/n^2 S2 + 2/n S1)``.

    Kept for comparison only: it exceeds :func:`gaussian_first_two_term_moment`
    by exactly ``(lambda_j^2/n)(6 S1/n - (2n - 2)/n^2 S2)`` and does not
    match simulation or exact quadrature.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _, s, others = _gap_and_shifts(model.eigenvalues, j)
    w = others / s
    S1, S2 = float(np.sum(w)), float(np.sum(w ** 2))
    lj = float(model.eigenvalues[j - 1])
    return lj ** 2 / n * (2.0 + (n + 2) / n ** 2 * S1 ** 2 + 6.0 / n ** 2 * S2 + 2.0 / n * S1)


def first_two_terms(model: DecayModel, Sigma_hat: np.ndarray, j: int) -> float:
    """``tr(P_j E P_j) - tr(P_j E R_j E P_j)`` for ``E = Sigma_hat - Sigma``."""
    lam = model.eigenvalues
    E = np.asarray(Sigma_hat) - np.diag(lam)
    s = lam - lam[j - 1]
    row = np.delete(E[j - 1], j - 1)
    return float(E[j - 1, j - 1] - np.sum(row ** 2 / np.delete(s, j - 1)))


# -- Monte Carlo ---------------------------------------------------------------


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(x.size))


def _rms_se(x: np.ndarray) -> tuple[float, float]:
    """Root mean square and its delta-method standard error."""
    sq = x ** 2
    m2, se2 = _mean_se(sq)
    rms = float(np.sqrt(m2))
    return rms, (se2 / (2 * rms) if rms > 0 else 0.0)


def _control_variate_rms(rel: np.ndarray, q: np.ndarray, model: DecayModel, j: int,
                         n: int) -> tuple[float, float]:
    """RMS of ``rel`` using ``q`` (first two series terms, relative) as control variate.

    ``E[rel^2] = E[rel^2 - q^2] + E[q^2]`` with the last term known in closed
    form for Gaussian data, so the estimator stays unbiased while only the
    (small) higher-order part of the error is sampled.
    """
    exact = gaussian_first_two_term_moment(model, j, n) / model.eigenvalues[j - 1] ** 2
    m, se = _mean_se(rel ** 2 - q ** 2)
    m2 = m + exact
    rms = float(np.sqrt(max(m2, 0.0)))
    return rms, (se / (2 * rms) if rms > 0 else 0.0)


@dataclass(frozen=True)
class MonteCarloRow:
    j: int
    ev_mean: float
    ev_rms: float
    rel_mean: float
    rel_rms: float
    proj_mean: float
    proj_rms: float
    p_delta_gt_quarter: float
    se_ev_mean: float
    se_ev_rms: float
    se_rel_mean: float
    se_rel_rms: float
    se_proj_mean: float
    se_proj_rms: float
    se_p_delta_gt_quarter: float
    # control-variate estimate of rel_rms (Gaussian data only, else NaN)
    rel_rms_cv: float = float("nan")
    se_rel_rms_cv: float = float("nan")


@dataclass(frozen=True)
class MonteCarloSummary:
    rows: tuple[MonteCarloRow, ...]
    replicates: int
    base_seed: int
    weyl_violations: int = 0
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def row(self, j: int) -> MonteCarloRow:
        for r in self.rows:
            if r.j == j:
                return r
        raise KeyError(j)


def _replicate(model: DecayModel, spec: SamplerSpec, j_list, r: int):
    data = sample_data(model, replace(spec, seed=(spec.seed + r) % 2 ** 64))
    S_hat = empirical_covariance(data).entries
    lam = model.eigenvalues
    w, V = np.linalg.eigh(S_hat)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    E = S_hat - np.diag(lam)
    weyl_ok = bool(np.max(np.abs(w - lam)) <= np.linalg.norm(E, 2) * (1 + 1e-12) + 1e-15)
    base = model.spectral_model()
    inst = make_instance(base, E)
    out = []
    for j in j_list:
        i = j - 1
        ev = w[i] - lam[i]
        off = np.delete(V[:, i], i)
        proj = float(np.sqrt(2.0 * np.sum(off ** 2)))  # ||P_hat - P||_2 for P = e_j e_j^T
        q = first_two_terms(model, S_hat, j) / lam[i]
        out.append((ev, ev / lam[i], proj, delta(inst, j).delta, q))
    return np.array(out), weyl_ok


def mc_eigen_error(model: DecayModel, spec: SamplerSpec, j_list, M: int,
                   threads: int = 1) -> MonteCarloSummary:
    """``M`` replicates of sample -> empirical covariance -> exact eigendecomposition.

    Replicate ``r`` uses seed ``spec.seed + r``; the reduction runs in
    replicate order, so the summary is identical for any ``threads``.
    """
    if M < 2:
        raise ValueError("need at least two replicates")
    j_list = [int(j) for j in j_list]
    for j in j_list:
        if not 1 <= j <= model.dim:
            raise IndexError(f"index j={j} outside 1..{model.dim}")

    def job(r):
        return _replicate(model, spec, j_list, r)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(M)))
    else:
        results = [job(r) for r in range(M)]
    arr = np.stack([res for res, _ in results])  # (M, len(j_list), 5)
    weyl_bad = sum(not ok for _, ok in results)
    rows = []
    for c, j in enumerate(j_list):
        ev, rel, proj, dl, q = (arr[:, c, k] for k in range(5))
        ev_mean, se_ev_mean = _mean_se(ev)
        ev_rms, se_ev_rms = _rms_se(ev)
        rel_mean, se_rel_mean = _mean_se(rel)
        rel_rms, se_rel_rms = _rms_se(rel)
        proj_mean, se_proj_mean = _mean_se(proj)
        proj_rms, se_proj_rms = _rms_se(proj)
        p_bad, se_p = _mean_se((dl > 0.25).astype(float))
        cv = se_cv = float("nan")
        if spec.distribution == "gaussian":
            cv, se_cv = _control_variate_rms(rel, q, model, j, spec.n)
        rows.append(MonteCarloRow(j, ev_mean, ev_rms, rel_mean, rel_rms, proj_mean, proj_rms,
                                  p_bad, se_ev_mean, se_ev_rms, se_rel_mean, se_rel_rms,
                                  se_proj_mean, se_proj_rms, se_p, cv, se_cv))
    return MonteCarloSummary(tuple(rows), M, spec.seed, weyl_bad, {"errors": arr})


# -- phase-transition experiment ----------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float = 1.0
    d: int = 40
    n: int = 500
    m_replicates: int = 300
    dist: str = "gaussian"
    seed: int = 0
    j_min: int = 3
    j_max: int = 20
    out_of_assumption: bool = False

    def validate(self) -> "ExperimentConfig":
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.d < 2 or self.n < 1 or self.m_replicates < 2:
            raise ConfigError("need d >= 2, n >= 1 and m_replicates >= 2")
        if not 1 <= self.j_min <= self.j_max <= self.d - 1:
            raise ConfigError("need 1 <= j_min <= j_max <= d - 1")
        if self.dist in OUT_OF_ASSUMPTION and not self.out_of_assumption:
            raise ConfigError(f"dist {self.dist!r} requires out_of_assumption = true")
        if self.dist not in DISTRIBUTIONS + OUT_OF_ASSUMPTION:
            raise ConfigError(f"unknown dist {self.dist!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


_EXPERIMENT_KEYS = {
    "alpha": float, "d": int, "n": int, "m_replicates": int, "dist": str, "seed": int,
    "j_min": int, "j_max": int, "out_of_assumption": _parse_bool,
}


def load_experiment_config(text: str, **overrides) -> ExperimentConfig:
    raw = parse_key_values(text)
    kwargs = {}
    for key, value in raw.items():
        if key not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown experiment key {key!r}")
        try:
            kwargs[key] = _EXPERIMENT_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs).validate()


PHASE_COLUMNS = ("j", "rel_ev_err", "proj_err", "ref_ev", "ref_proj", "ratio_ev", "ratio_proj",
                 "p_delta_gt_quarter", "se_rel_ev_err", "se_proj_err", "se_p_delta_gt_quarter",
                 "rel_ev_err_cv", "se_rel_ev_err_cv")


def _csv_float(x: float) -> str:
    return "" if np.isnan(x) else format_float(x)


@dataclass(frozen=True)
class PhaseTable:
    config: ExperimentConfig
    rows: tuple[dict, ...]
    summary: MonteCarloSummary

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for r in self.rows:
            w.writerow([r["j"]] + [_csv_float(r[c]) for c in PHASE_COLUMNS[1:]])
        return buf.getvalue()

    def curve_text(self, name: str) -> str:
        """Two-column ``j value`` text for one curve."""
        return "".join(f"{r['j']} {format_float(r[name])}\n" for r in self.rows)


def phase_transition_experiment(cfg: ExperimentConfig, threads: int = 1) -> PhaseTable:
    """Relative eigenvalue error and projector error against their reference shapes.

    References: ``1/sqrt(n) + j/n`` for the relative eigenvalue error and
    ``j^(1-alpha)/sqrt(n)`` for the projector error.
    """
    cfg.validate()
    model = build_decay_model("exponential_alpha", cfg.alpha, cfg.d)
    spec = SamplerSpec(cfg.dist, cfg.n, cfg.seed, cfg.out_of_assumption)
    js = list(range(cfg.j_min, cfg.j_max + 1))
    summary = mc_eigen_error(model, spec, js, cfg.m_replicates, threads=threads)
    rows = []
    for r in summary.rows:
        ref_ev = 1.0 / np.sqrt(cfg.n) + r.j / cfg.n
        ref_proj = r.j ** (1.0 - cfg.alpha) / np.sqrt(cfg.n)
        rows.append({
            "j": r.j,
            "rel_ev_err": r.rel_rms,
            "proj_err": r.proj_rms,
            "ref_ev": ref_ev,
            "ref_proj": ref_proj,
            "ratio_ev": r.rel_rms / ref_ev,
            "ratio_proj": r.proj_rms / ref_proj,
            "p_delta_gt_quarter": r.p_delta_gt_quarter,
            "se_rel_ev_err": r.se_rel_rms,
            "se_proj_err": r.se_proj_rms,
            "se_p_delta_gt_quarter": r.se_p_delta_gt_quarter,
            "rel_ev_err_cv": r.rel_rms_cv,
            "se_rel_ev_err_cv": r.se_rel_rms_cv,
        })
    return PhaseTable(cfg, tuple(rows), summary)


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"
