import numpy as np
import pytest

from perturbseries import make_instance
from perturbseries.config import ConfigError, parse_key_values
from perturbseries.series import composition_terms, delta
from perturbseries.spectral import eigenprojector, reduced_resolvent
from perturbseries.verify import (
    CSV_COLUMNS,
    VerifyConfig,
    load_verify_config,
    random_instance,
    run_sweep,
    sweep_csv,
)


def test_random_instance_hits_delta_target():
    for i, target in enumerate((0.05, 0.2, 0.45)):
        gen = random_instance(9, i, 12, target)
        assert delta(gen.inst, gen.j).delta == pytest.approx(target, rel=1e-10)
        assert gen.inst.base.eigenvalues.shape == (12,)


def test_random_instance_is_counter_addressed():
    a = random_instance(5, 17, 8, 0.2)
    b = random_instance(5, 17, 8, 0.2)
    c = random_instance(5, 18, 8, 0.2)
    assert np.array_equal(a.inst.E, b.inst.E) and a.j == b.j
    assert not np.array_equal(a.inst.E, c.inst.E)


def test_small_sweep_has_no_failures():
    res = run_sweep(VerifyConfig(instances=30, d=8, seed=2))
    assert res.failures == []
    counts = res.counts()
    for key in ("proj_remainder", "eval_remainder", "proj_tail", "eval_contour", "coeff_bound",
                "separation_self", "weighted_projection", "basic_identity", "term_bound",
                "term_bound_cross"):
        assert counts[key][0] > 0, key


def test_corruption_hook_produces_failures():
    cfg = VerifyConfig(instances=6, d=6, seed=2, corrupt_check="proj_remainder",
                       corrupt_factor=1e-6)
    res = run_sweep(cfg)
    assert res.failures
    assert {r.check for r in res.failures} == {"proj_remainder"}


def test_zero_instances_gives_header_only():
    text = sweep_csv(run_sweep(VerifyConfig(instances=0)))
    assert text == ",".join(CSV_COLUMNS) + "\n"


def test_sweep_is_thread_count_invariant():
    cfg = VerifyConfig(instances=12, d=7, seed=4)
    assert sweep_csv(run_sweep(cfg, 1)) == sweep_csv(run_sweep(cfg, 4))


def test_config_parsing_and_errors():
    cfg = load_verify_config("# sweep\ninstances = 5\nd = 6\ndelta_targets = 0.1, 0.3\n")
    assert (cfg.instances, cfg.d, cfg.delta_targets) == (5, 6, (0.1, 0.3))
    assert load_verify_config("instances = 5", seed=11).seed == 11
    for bad in ("bogus = 1", "instances = x", "delta_targets = 0.6", "d = 1",
                "instances = 1\ninstances = 2", "no equals sign"):
        with pytest.raises(ConfigError):
            load_verify_config(bad)
    assert parse_key_values("a = 1  # trailing\n\n") == {"a": "1"}


def test_term_bound_fails_beyond_m_equal_n():
    """With all indices nonzero (m = n + 1) the Hilbert-Schmidt term bound can fail,
    which is why the sweep only checks m <= n."""
    lam = np.array([1.0, 0.0] + [-0.001 * k for k in range(1, 9)])
    E = np.diag([0.0] + [0.1] * 9)
    inst = make_instance(np.diag(lam), E)
    rep = delta(inst, 1)
    assert rep.gap == 1.0 and rep.delta_prime == pytest.approx(0.1)
    P, R = eigenprojector(inst.base, 1), reduced_resolvent(inst.base, 1)
    n, m = 1, 2
    worst = max(np.linalg.norm(t) for _, t in composition_terms(P, R, E, n, m))
    bound = rep.gap ** (n - m) * rep.delta_prime ** n
    assert worst == pytest.approx(0.298, abs=1e-3)
    assert worst > bound
    # the m <= n cases hold on the same instance
    for m in range(n + 1):
        worst = max(np.linalg.norm(t) for _, t in composition_terms(P, R, E, n, m))
        assert worst <= rep.gap ** (n - m) * rep.delta_prime ** n + 1e-12
