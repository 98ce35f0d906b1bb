import math

import numpy as np
import pytest
from scipy import special, stats

from bnsprice.model import kappa_tail, small_jump_mean, tail_mass
from bnsprice.simulation import (JumpList, SimConfig, build_jump_sampler, build_tilted_sampler, draw_jumps,
                                 make_rng, simulate_variance_batch, simulate_variance_path, time_grid)

from conftest import nu_integral


@pytest.mark.parametrize("eps", [1e-3, 1e-4, 1e-5])
def test_tail_mass_vs_quadrature(p1, eps):
    assert tail_mass(eps, p1) == pytest.approx(nu_integral(lambda x: 1.0, p1, eps), rel=1e-8)


def test_tail_mass_properties(p1):
    vals = [tail_mass(e, p1) for e in (1e-2, 1e-3, 1e-4, 1e-6, 1e-8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert tail_mass(1e-4, p1.replace(a=2 * p1.a)) == pytest.approx(2 * tail_mass(1e-4, p1), rel=1e-14)
    with pytest.raises(ValueError):
        tail_mass(0.0, p1)


def test_small_jump_mean(p1):
    assert small_jump_mean(1e-12, p1) < 1e-4 * small_jump_mean(1e-2, p1)
    total = p1.lam * p1.a / p1.b
    assert total == pytest.approx(0.018166, abs=1e-6)
    assert nu_integral(lambda x: x, p1) == pytest.approx(total, rel=1e-10)
    for eps in (1e-5, 1e-4, 1e-2):
        big = nu_integral(lambda x: x, p1, eps)
        assert small_jump_mean(eps, p1) + big == pytest.approx(total, rel=1e-10)
    assert small_jump_mean(1e-4, p1) == pytest.approx(nu_integral(lambda x: x, p1, 0.0, 1e-4), rel=1e-8)
    with pytest.raises(ValueError):
        small_jump_mean(-1.0, p1)


def test_default_truncation_keeps_drift_small(p1):
    assert small_jump_mean(1e-4, p1) < 0.05 * p1.lam * p1.a / p1.b


def test_sampler_support_and_config(p1):
    s = build_jump_sampler(1e-4, p1)
    x = s.sample(make_rng(0), 10000)
    assert np.all(x > 1e-4 * (1 - 1e-12))
    assert s.x_max < 1.0
    with pytest.raises(ValueError):
        build_jump_sampler(1e-4, p1, table_size=8)


def test_sampler_matches_exact_inverse(p1):
    # survival sqrt(eps/x) exp(-c (x - eps)) inverts through the Lambert W function
    eps = 1e-4
    s = build_jump_sampler(eps, p1)
    u = np.geomspace(1e-12, 1.0, 2000)
    c = 0.5 * p1.b**2
    level = -np.log(u) + 0.5 * math.log(eps) + c * eps
    exact = np.real(special.lambertw(2 * c * np.exp(2 * level))) / (2 * c)
    np.testing.assert_allclose(s.inverse(u), exact, rtol=1e-8)


def test_sampler_mean(p1):
    eps = 1e-4
    s = build_jump_sampler(eps, p1)
    x = s.sample(make_rng(1), 10**6)
    target = nu_integral(lambda y: y, p1, eps) / nu_integral(lambda y: 1.0, p1, eps)
    assert abs(x.mean() - target) < 4 * x.std() / math.sqrt(x.size)


def test_sampler_ks(p1):
    s = build_jump_sampler(1e-4, p1)
    x = s.sample(make_rng(2), 10**5)
    assert stats.kstest(x, s.cdf).statistic < 0.006


def test_table_cdf_matches_quadrature(p1):
    eps = 1e-4
    s = build_jump_sampler(eps, p1)
    total = nu_integral(lambda y: 1.0, p1, eps)
    for x in (2e-4, 1e-3, 1e-2, 0.05):
        assert s.cdf(x) == pytest.approx(1 - nu_integral(lambda y: 1.0, p1, x) / total, rel=1e-8)


def test_tilted_sampler(p1):
    eps = 1e-4
    s = build_tilted_sampler(eps, p1)
    x = s.sample(make_rng(3), 10**5)
    assert np.all(x >= eps * (1 - 1e-12))
    assert stats.kstest(x, s.cdf).statistic < 0.006
    norm = nu_integral(lambda y: -math.expm1(p1.rho * y), p1, eps)
    assert norm == pytest.approx(-kappa_tail(eps, p1), rel=1e-8)
    target = nu_integral(lambda y: -y * math.expm1(p1.rho * y), p1, eps) / norm
    assert abs(x.mean() - target) < 4 * x.std() / math.sqrt(x.size)


def test_time_grid():
    g = time_grid(0.31475, 0.01)
    assert g[0] == 0 and g[-1] == 0.31475 and len(g) == 33
    assert np.diff(g)[-1] == pytest.approx(0.00475)
    assert list(time_grid(0.01, 0.01)) == [0.0, 0.01]
    assert len(time_grid(1.0, 0.01)) == 101


def test_draw_jumps(p1):
    cfg = SimConfig()
    j = draw_jumps(p1, 0.7, cfg, make_rng(4))
    assert np.all(np.diff(j.times) >= 0)
    assert np.all((j.times >= 0) & (j.times <= 0.7))
    assert np.all(j.sizes > cfg.eps_trunc * (1 - 1e-12))
    assert len(draw_jumps(p1, 0.7, cfg.replace(eps_trunc=50.0), make_rng(4))) == 0


def test_jump_count_mean(p1):
    cfg = SimConfig()
    rng = make_rng(5)
    counts = np.array([len(draw_jumps(p1, 0.5, cfg, rng)) for _ in range(10**5 // 20)])
    lam = tail_mass(cfg.eps_trunc, p1) * 0.5
    assert abs(counts.mean() - lam) < 4 * math.sqrt(lam / counts.size)


def test_seeded_determinism(p1):
    cfg = SimConfig()
    a = draw_jumps(p1, 1.0, cfg, make_rng(9, 1))
    b = draw_jumps(p1, 1.0, cfg, make_rng(9, 1))
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.sizes, b.sizes)
    ba = simulate_variance_batch(p1, 1.0, cfg.replace(n_paths=50), make_rng(3))
    bb = simulate_variance_batch(p1, 1.0, cfg.replace(n_paths=50), make_rng(3))
    np.testing.assert_array_equal(ba.sigma_sq, bb.sigma_sq)


def test_variance_no_jumps(p1):
    cfg = SimConfig(small_jump_drift=False)
    grid, sig = simulate_variance_path(p1, 1.0, JumpList(np.empty(0), np.empty(0)), cfg)
    np.testing.assert_array_equal(sig, np.exp(-p1.lam * grid) * p1.sigma0_sq)


def test_variance_single_jump_no_decay(p1):
    p = p1.replace(lam=1e-12)
    cfg = SimConfig(small_jump_drift=False)
    _, sig = simulate_variance_path(p, 1.0, JumpList(np.array([1e-9]), np.array([0.02])), cfg)
    assert sig[-1] == pytest.approx(p.sigma0_sq + 0.02, rel=1e-9)


def test_variance_recursion_telescopes(p1):
    cfg = SimConfig()
    jumps = draw_jumps(p1, 0.83, cfg, make_rng(6))
    grid, sig = simulate_variance_path(p1, 0.83, jumps, cfg)
    mu = small_jump_mean(cfg.eps_trunc, p1)
    for k in range(len(grid) - 1):
        d = grid[k + 1] - grid[k]
        m = (jumps.times > grid[k]) & (jumps.times <= grid[k + 1])
        nxt = (math.exp(-p1.lam * d) * sig[k]
               + np.sum(np.exp(-p1.lam * (grid[k + 1] - jumps.times[m])) * jumps.sizes[m])
               + mu / p1.lam * -math.expm1(-p1.lam * d))
        assert sig[k + 1] == pytest.approx(nxt, rel=1e-13)
    assert np.all(sig >= np.exp(-p1.lam * grid) * p1.sigma0_sq)


def test_batch_matches_closed_form(p1):
    cfg = SimConfig(n_paths=20)
    b = simulate_variance_batch(p1, 0.5, cfg, make_rng(7))
    for i in range(20):
        m = b.jump_path == i
        _, sig = simulate_variance_path(p1, 0.5, JumpList(b.jump_time[m], b.jump_size[m]), cfg)
        np.testing.assert_allclose(b.sigma_sq[i], sig, rtol=1e-13)


def test_variance_monotone_in_jump_sizes(p1):
    cfg = SimConfig()
    j = draw_jumps(p1, 1.0, cfg, make_rng(8))
    _, s0 = simulate_variance_path(p1, 1.0, j, cfg)
    bumped = j.sizes.copy()
    bumped[len(bumped) // 2] *= 3
    _, s1 = simulate_variance_path(p1, 1.0, JumpList(j.times, bumped), cfg)
    assert np.all(s1 >= s0)


def test_stationary_mean_small(p1):
    # terminal values only: one step of length T is exact
    cfg = SimConfig(n_paths=20000, dt=20.0, eps_trunc=1e-5)
    b = simulate_variance_batch(p1, 20.0, cfg, make_rng(10))
    x = b.sigma_sq[:, -1]
    assert abs(x.mean() - p1.a / p1.b) < 3 * x.std() / math.sqrt(x.size)


def test_mmm_measure_thins_for_negative_alpha(p1):
    p = p1.replace(alpha=-0.002)
    cfg = SimConfig(n_paths=2000)
    b_p = simulate_variance_batch(p, 1.0, cfg, make_rng(11), measure="P")
    b_q = simulate_variance_batch(p, 1.0, cfg, make_rng(11), measure="MMM")
    # same candidate stream, a subset survives
    assert b_q.jump_size.size < b_p.jump_size.size
    assert np.all(b_q.sigma_sq >= np.exp(-p.lam * b_q.grid) * p.sigma0_sq)


def test_mmm_measure_adds_jumps_for_positive_alpha(p1):
    cfg = SimConfig(n_paths=2000)
    b_p = simulate_variance_batch(p1, 1.0, cfg, make_rng(12), measure="P")
    b_q = simulate_variance_batch(p1, 1.0, cfg, make_rng(12), measure="MMM")
    assert b_q.jump_size.size > b_p.jump_size.size
    assert b_q.sigma_sq[:, -1].mean() > b_p.sigma_sq[:, -1].mean()
    with pytest.raises(ValueError):
        simulate_variance_batch(p1, 1.0, cfg, make_rng(12), measure="Q")
