"""End-to-end smoke checks of the python bindings."""

import math

import pytest

try:
    import _core as core
except ImportError:  # installed-package layout
    from gmclab import _core as core


def test_kernel_values():
    k = core.kernel_u(0.1, 0.01)
    assert core.eval_kernel(k, 0.0) == pytest.approx(math.log(10.0), rel=1e-12)
    assert core.eval_kernel(k, 0.2) == 0.0
    assert core.kernel_variance(k) == pytest.approx(math.log(10.0), rel=1e-12)
    with pytest.raises(ValueError):
        core.kernel_u(0.1, 0.0)


def test_zeta_endpoints():
    assert core.zeta(0.0, 2.0) == pytest.approx(2.0)
    assert core.zeta(0.5, 1.0) == pytest.approx(1.0)


def test_flat_measure_inverse_roundtrip():
    n = 64
    m = core.build_measure([0.0] * n, 0.0, 1.0 / n, 0.0, 0.0, True)
    assert m.total() == pytest.approx(1.0, abs=1e-12)
    assert core.q_of(m, 0.25) == pytest.approx(0.25, abs=1e-12)
    assert core.q_of(m, -1.5) == pytest.approx(-1.5, abs=1e-12)
    assert core.q_increment(m, 0.1, 0.7) == pytest.approx(0.6, abs=1e-12)


def test_circle_draw_is_deterministic():
    cfg = core.CircleFieldConfig()
    cfg.resolution = 256
    cfg.gamma = 0.3
    gmc = core.CircleGmc(cfg)
    a = gmc.draw(7)
    b = gmc.draw(7)
    assert a.mass == b.mass
    assert a.total() > 0.0


def test_flat_dilatation_budget():
    n = 256
    tau = core.build_measure([0.0] * n, 0.0, 1.0 / n, 0.0, 0.0, True)
    interval = core.DyadicInterval(2, 1)
    assert core.dilatation_bound(tau, interval) == pytest.approx(9312.0, rel=1e-9)
    assert core.pair_ratio_sum([1.0] * 96) == pytest.approx(9312.0, rel=1e-12)
    assert core.j5_pair_count() == 4656


def test_ab_extension_identity_map():
    n = 128
    tau = core.build_measure([0.0] * n, 0.0, 1.0 / n, 0.0, 0.0, True)
    hom = core.Homeomorphism(tau)
    z = complex(0.3, 0.2)
    f = core.ab_extension(hom, z)
    assert f.real == pytest.approx(0.3, abs=1e-9)
    assert f.imag == pytest.approx(0.1, abs=1e-9)
    d = core.dilatation_numeric(hom, z, 1e-5)
    assert d.k == pytest.approx(2.0, abs=1e-3)


def test_feasibility_threshold():
    assert core.max_beta("forcing-lambda0-0.01") == pytest.approx(1.0 / 121.0, abs=1e-4)
    profiles = core.constraint_profiles()
    assert "forcing-lambda0-0.01" in profiles


def test_lehto_integral_flat_field():
    quad = core.lehto_integral(lambda z: 1.0, 0j, 0.5, 2.0)
    assert quad.value == pytest.approx(math.log(4.0) / (2.0 * math.pi), abs=1e-9)


def test_pair_centers_example():
    got = core.pair_centers([0.0, 0.3, 0.6, 1.0], [0.0, 0.25, 0.55, 0.95], 0.12)
    assert list(got.k_idx) == [0, 1, 2, 3]
    assert list(got.m_idx) == [0, 1, 2, 3]


def test_tree_modulus_identity():
    spec = core.TreeSpec()
    spec.n_branch = 1
    spec.k = [2.0, 4.0]
    spec.s = [2.0, 4.0]
    spec.c_inf = [1.0, 1.0]
    c = core.modulus_lower_bound(spec)
    assert 1.0 / c == pytest.approx(2.0 / 2.0 + 4.0 / 4.0, rel=1e-12)


def test_alpha_exact_matches_greedy():
    lo = [0.0, 0.1, 0.5, 0.55, 0.9]
    hi = [0.2, 0.3, 0.6, 0.7, 1.0]
    assert core.alpha_exact(lo, hi) == core.alpha_greedy(lo, hi) == 3


def test_stack_scale_factor_flat():
    cfg = core.LehtoStackConfig()
    cfg.levels = 2
    cfg.gamma = 0.0
    cfg.resolution = 256
    stack = core.LehtoStack(cfg)
    stack.sample(3)
    for m in stack.scale_factors(0):
        assert m == pytest.approx(1.0, abs=1e-12)
