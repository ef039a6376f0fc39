from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from blumecapel import dynamics as dyn
from blumecapel import exactchain as ec
from blumecapel.equilibrium import DomainError, cgf_derivs, contraction_profile, k1
from blumecapel.params import ModelParams
from blumecapel.rng import RngStream

spin_lists = st.lists(st.sampled_from([-1, 0, 1]), min_size=2, max_size=30)


# ---------------------------------------------------------------- rng


def test_rng_reproducible_and_counted():
    a, b = RngStream(5, 2), RngStream(5, 2)
    assert [a.uniform() for _ in range(5)] == [b.uniform() for _ in range(5)]
    assert np.array_equal(a.uniforms(7), b.uniforms(7))
    assert a.counter == 12
    assert RngStream(5, 3).uniform() != RngStream(5, 2).uniform()


def test_rng_scalar_and_block_draws_agree():
    a, b = RngStream(9), RngStream(9)
    assert np.array_equal([a.uniform() for _ in range(100)], b.uniforms(100))


def test_rng_children_are_distinct_and_stable():
    root = RngStream(11)
    kids = root.children(50)
    firsts = {k.uniform() for k in kids}
    assert len(firsts) == 50
    assert root.child(7).uniform() == RngStream(11).child(7).uniform()


def test_rng_uniformity():
    u = RngStream(1).uniforms(100_000)
    assert 0.0 <= u.min() and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 1e-3


# ---------------------------------------------------------------- configurations


@given(spin_lists)
def test_configuration_caches(spins):
    c = dyn.SpinConfiguration(spins)
    assert c.total_spin == sum(spins)
    assert c.counts == (spins.count(-1), spins.count(0), spins.count(1))
    c.set_spin(0, 1)
    c.validate()
    assert c.neighbour_sum(0) == c.total_spin - 1


def test_configuration_rejects_bad_spins():
    with pytest.raises(DomainError):
        dyn.SpinConfiguration([0, 2])
    with pytest.raises(DomainError):
        dyn.SpinConfiguration([])


def test_configuration_helpers():
    x = dyn.SpinConfiguration.all_minus(4)
    y = dyn.SpinConfiguration.all_plus(4)
    assert x <= y and not y <= x
    assert x.hamming(y) == 4
    assert x.lumped() == ec.LumpedState(4, 0, 4)
    assert x.copy() == x and x.copy() is not x


# ---------------------------------------------------------------- update law


@settings(deadline=None)
@given(st.integers(2, 40), st.floats(0.1, 4.0), st.floats(0.1, 3.0), st.data())
def test_update_law_matches_hamiltonian(n, beta, k, data):
    s_tilde = data.draw(st.integers(-(n - 1), n - 1))
    law = dyn.update_probs(ModelParams(n, beta, k), s_tilde)
    # energy difference of setting one site to v with the rest summing to s_tilde
    e = np.array([v * v - k / n * (s_tilde + v) ** 2 for v in (-1, 0, 1)])
    w = np.exp(-beta * (e - e.min()))
    assert (law.p_minus, law.p_zero, law.p_plus) == pytest.approx(tuple(w / w.sum()), abs=1e-14)
    lo, hi = law.thresholds
    assert 0 <= lo <= hi <= 1


@settings(deadline=None)
@given(st.integers(2, 40), st.floats(0.1, 4.0), st.floats(0.1, 3.0))
def test_thresholds_decrease_in_neighbour_sum(n, beta, k):
    lo, hi = dyn.threshold_table(ModelParams(n, beta, k))
    assert np.all(np.diff(lo) <= 1e-16) and np.all(np.diff(hi) <= 1e-16)
    assert not lo.flags.writeable


def test_update_law_domain():
    with pytest.raises(DomainError):
        dyn.update_probs(ModelParams(5, 1.0, 1.0), 5)


def test_phi_fn_closed_form():
    params = ModelParams(50, 2.0, 0.7)
    x = 13
    a = 2 * params.beta * params.k * x / params.n
    closed = 2 * math.sinh(a) / (2 * math.cosh(a) + math.exp(params.beta - params.beta * params.k / params.n))
    assert dyn.phi_fn(params, x) == pytest.approx(closed, abs=1e-15)
    assert dyn.phi_fn(params, 0) == 0.0
    with pytest.raises(DomainError):
        dyn.phi_fn(params, 51)


# ---------------------------------------------------------------- steps and kernels


def test_glauber_step_row_matches_exact_chain():
    # one step from a fixed configuration, tallied by resulting configuration
    n, beta, k = 3, 1.0, 1.6
    configs, p, _ = oracles.brute_chain(n, beta, k)
    start = (1, 0, -1)
    i = configs.index(start)
    params = ModelParams(n, beta, k)
    rng = RngStream(123)
    m = 60_000
    draws = rng.uniforms(2 * m)
    x = np.repeat(np.array(start, np.int8)[None, :], m, axis=0)
    lo, hi = dyn.threshold_table(params)
    totals = x.sum(axis=1, dtype=np.int64)
    dyn._glauber_kernel(x, totals, lo, hi, draws.reshape(m, 2))
    index = {c: j for j, c in enumerate(configs)}
    counts = np.bincount([index[tuple(r)] for r in x.tolist()], minlength=len(configs))
    support = p[i] > 0
    assert counts[~support].sum() == 0
    expected = p[i][support] * m
    assert stats.chisquare(counts[support], expected).pvalue > 1e-3


@settings(deadline=None, max_examples=50)
@given(spin_lists, spin_lists, st.integers(0, 2**32), st.floats(0.2, 3.0), st.floats(0.2, 2.0))
def test_coupled_step_preserves_order(a, b, seed, beta, k):
    n = min(len(a), len(b))
    lo_spins = np.minimum(a[:n], b[:n])
    hi_spins = np.maximum(a[:n], b[:n])
    x, y = dyn.SpinConfiguration(lo_spins), dyn.SpinConfiguration(hi_spins)
    params = ModelParams(n, beta, k)
    rng = RngStream(seed)
    for _ in range(50):
        dyn.coupled_step(params, x, y, rng)
        assert x <= y


def test_python_step_and_kernel_agree_bit_for_bit():
    params = ModelParams(40, 2.0, 0.95)
    x0, y0 = dyn.SpinConfiguration.all_plus(40), dyn.SpinConfiguration.all_minus(40)
    run = dyn.coupling_time(params, x0, y0, 20_000, RngStream(3, 1), record_every=1)
    x, y = x0.copy(), y0.copy()
    rng = RngStream(3, 1)
    t = 0
    while x != y:
        dyn.coupled_step(params, x, y, rng)
        t += 1
        assert (run.sx[t], run.sy[t]) == (x.total_spin, y.total_spin)
    assert t == run.coalesced_at


def test_glauber_step_matches_glauber_kernel():
    params = ModelParams(25, 1.0, 1.6)
    x = dyn.SpinConfiguration.all_zero(25)
    rng = RngStream(8)
    for _ in range(500):
        dyn.glauber_step(params, x, rng)
    batch = np.zeros((1, 25), np.int8)
    dyn.run_glauber(params, batch, [RngStream(8)], 500, block=37)
    assert np.array_equal(batch[0], x.spins)


def test_coalesced_pairs_stay_together():
    params = ModelParams(30, 2.0, 0.9)
    x = dyn.SpinConfiguration(RngStream(0).uniforms(30).round().astype(np.int8))
    y = x.copy()
    rng = RngStream(4)
    for _ in range(1000):
        dyn.coupled_step(params, x, y, rng)
        assert x == y


def test_coupling_time_is_reproducible():
    params = ModelParams(60, 2.0, 0.9)
    args = (params, dyn.SpinConfiguration.all_plus(60), dyn.SpinConfiguration.all_minus(60), 10**5)
    r1 = dyn.coupling_time(*args, RngStream(77))
    r2 = dyn.coupling_time(*args, RngStream(77))
    assert r1.coalesced_at == r2.coalesced_at and r1.rho == r2.rho and r1.sx == r2.sx
    assert r1.rho[-1] == 0 and r1.t[-1] == r1.coalesced_at
    assert list(r1.rows())[0] == {"t": 0, "rho": 60, "sx": 60, "sy": -60}
    assert r1.header()["seed"] == 77
    assert r1.records()[-1].coalesced_at == r1.coalesced_at


def test_coupling_times_with_cap():
    params = ModelParams(50, 1.0, 1.6)
    done, exact = dyn.coupling_times(params, dyn.SpinConfiguration.all_plus(50), 20, 5, RngStream(1),
                                     y0=dyn.SpinConfiguration.all_minus(50))
    assert exact is None and np.all(done == -1)
    with pytest.raises(DomainError):
        dyn.coupling_times(params, dyn.SpinConfiguration.all_plus(50), 2, 0, RngStream(1))


# ---------------------------------------------------------------- one-step distances


def test_neighbour_pair():
    sigma, tau = dyn.neighbour_pair(10, -4)
    assert sigma.total_spin == -4 and tau.total_spin == -3
    assert sigma.hamming(tau) == 1 and sigma <= tau
    with pytest.raises(DomainError):
        dyn.neighbour_pair(10, 10)


def _exact_mean_distance(params, sigma, tau):
    # enumerate the vertex and integrate U exactly for the expected distance
    lo, hi = dyn.threshold_table(params)
    n = params.n
    total = 0.0
    for v in range(n):
        a = sigma.neighbour_sum(v) + n
        b = tau.neighbour_sum(v) + n
        cuts = sorted({0.0, 1.0, lo[a], hi[a], lo[b], hi[b]})
        rest = sigma.hamming(tau) - int(sigma.spins[v] != tau.spins[v])
        for u0, u1 in zip(cuts, cuts[1:]):
            u = 0.5 * (u0 + u1)
            ns = -1 if u <= lo[a] else 0 if u <= hi[a] else 1
            nt = -1 if u <= lo[b] else 0 if u <= hi[b] else 1
            total += (u1 - u0) * (rest + (ns != nt)) / n
    return total


def test_one_step_distance_exact_expectation():
    params = ModelParams(12, 2.0, 0.6)
    sigma, tau = dyn.neighbour_pair(12, 3)
    total = _exact_mean_distance(params, sigma, tau)
    mean, se = dyn.empirical_mean_step_distance(params, sigma, tau, 200_000, RngStream(2))
    assert abs(mean - total) < 4 * se
    # the first-order formula is within O(1/n^2) of the exact mean
    assert abs(total - dyn.mean_distance_formula(params, sigma.total_spin, tau.total_spin)) < 5 / params.n**2


def test_empirical_mean_requirements():
    params = ModelParams(10, 1.0, 0.8)
    x, y = dyn.SpinConfiguration.all_plus(10), dyn.SpinConfiguration.all_minus(10)
    with pytest.raises(DomainError):
        dyn.empirical_mean_step_distance(params, x, y, 10**4, RngStream(0))
    s, t = dyn.neighbour_pair(10, 0)
    with pytest.raises(DomainError):
        dyn.empirical_mean_step_distance(params, s, t, 100, RngStream(0))


# ---------------------------------------------------------------- stationary sampling


def test_stationary_sampler_matches_gibbs_counts():
    params = ModelParams(6, 2.0, 1.2)
    pi = ec.gibbs_stationary(params)
    streams = RngStream(21).children(20_000)
    spins, exact = dyn.sample_stationary_batch(params, streams)
    assert exact
    n_minus = (spins == -1).sum(axis=1)
    n_plus = (spins == 1).sum(axis=1)
    counts = np.bincount(pi.space.index(n_minus, n_plus), minlength=len(pi.space))
    expected = pi.probs * len(streams)
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_stationary_sampler_site_exchangeable():
    params = ModelParams(5, 1.0, 0.8)
    spins, _ = dyn.sample_stationary_batch(params, RngStream(4).children(20_000))
    plus_per_site = (spins == 1).sum(axis=0)
    assert stats.chisquare(plus_per_site).pvalue > 1e-3
    one = dyn.sample_stationary_config(params, RngStream(4).child(0))
    assert np.array_equal(one.config.spins, spins[0]) and one.exact_stationary


# ---------------------------------------------------------------- coupling bound


def test_tv_upper_bound_dominates_exact_distance():
    params = ModelParams(30, 1.0, 0.8)
    t_grid = [0, 50, 100, 200, 400, 800]
    est = dyn.tv_upper_via_coupling(params, dyn.SpinConfiguration.all_plus(30), 400, t_grid, RngStream(6))
    assert np.all(np.diff(est.estimate) <= 0)
    assert np.all(est.lower <= est.estimate) and np.all(est.estimate <= est.upper)
    curve = ec.tv_curve(params, ec.LumpedState(0, 30, 30), 800)
    for t, up in zip(t_grid, est.upper):
        assert curve.d[t] <= up + 1e-12
    assert len(list(est.rows())) == len(t_grid)
    with pytest.raises(DomainError):
        dyn.tv_upper_via_coupling(params, dyn.SpinConfiguration.all_plus(30), 50, t_grid, RngStream(6))


# ---------------------------------------------------------------- documented examples


def test_update_law_symmetries_and_monotone_sweep():
    params = ModelParams(100, 1.0, 1.0)
    zero = dyn.update_probs(params, 0)
    assert zero.p_plus == zero.p_minus == pytest.approx(1 / (2 + math.exp(1.0 - 1.0 / 100)), abs=1e-15)
    for s in (1, 17, 99):
        a, b = dyn.update_probs(params, s), dyn.update_probs(params, -s)
        assert (a.p_minus, a.p_zero, a.p_plus) == pytest.approx((b.p_plus, b.p_zero, b.p_minus), abs=1e-15)
    laws = [dyn.update_probs(params, s) for s in range(-99, 100)]
    assert all(u.p_plus < v.p_plus and u.p_minus > v.p_minus for u, v in zip(laws, laws[1:]))
    assert all(abs(u.p_minus + u.p_zero + u.p_plus - 1) <= 1e-14 for u in laws)


def test_single_site_update_frequencies():
    params = ModelParams(1, 1.3, 0.7)
    law = dyn.update_probs(params, 0)
    m = 10**6
    spins = np.zeros((m, 1), np.int8)
    lo, hi = dyn.threshold_table(params)
    dyn._glauber_kernel(spins, np.zeros(m, np.int64), lo, hi, RngStream(10).uniforms((m, 2)))
    freq = np.bincount(spins[:, 0] + 1, minlength=3) / m
    for f, p in zip(freq, (law.p_minus, law.p_zero, law.p_plus)):
        assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / m)


def test_distribution_after_glauber_run_matches_exact():
    # TV 0.02 is applied to the magnetization law; the full count law gets a chi-square test
    params = ModelParams(50, 1.0, 0.8)
    steps = math.ceil(20 * 50 * math.log(50))
    m = 10**5
    spins = np.ones((m, 50), np.int8)
    dyn.run_glauber(params, spins, RngStream(12).children(m), steps, block=40)
    space = ec.StateSpace(50)
    counts = np.bincount(space.index((spins == -1).sum(1), (spins == 1).sum(1)), minlength=len(space))
    curve_v = np.zeros(len(space))
    curve_v[space.index(0, 50)] = 1
    chain = ec.glauber_lumped_matrix(params)
    for _ in range(steps):
        curve_v = chain.propagate(curve_v)
    emp_mag = np.bincount(space.magnetization + 50, weights=counts / m, minlength=101)
    exact_mag = np.bincount(space.magnetization + 50, weights=curve_v, minlength=101)
    assert 0.5 * np.abs(emp_mag - exact_mag).sum() <= 0.02
    expected = curve_v * m
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-3


def test_magnetization_moves_at_most_two_per_step():
    params = ModelParams(40, 1.0, 1.6)
    run = dyn.coupling_time(params, dyn.SpinConfiguration.all_plus(40), dyn.SpinConfiguration.all_zero(40),
                            2000, RngStream(5), record_every=1)
    assert np.max(np.abs(np.diff(run.sx))) <= 2 and np.max(np.abs(np.diff(run.sy))) <= 2
    assert all(abs(sx - sy) <= 2 * rho for sx, sy, rho in zip(run.sx, run.sy, run.rho))


def test_neighbour_pair_one_step_cases():
    params = ModelParams(30, 2.0, 0.9)
    sigma, tau = dyn.neighbour_pair(30, 4)
    rho, k, *_ = dyn.one_step_distances(params, sigma, tau, 50_000, RngStream(1))
    assert set(np.unique(rho)) <= {0, 1, 2}
    assert np.all(rho[k == 29] == 0)  # the disagreeing site was resampled
    assert np.all(rho[k != 29] >= 1)


def test_random_ordered_pairs_keep_order_at_n200():
    params = ModelParams(200, 2.0, 0.5)
    gen = np.random.default_rng(0)
    violations = 0
    for trial in range(10**4):
        a = gen.integers(-1, 2, 200).astype(np.int8)
        b = np.maximum(a, gen.integers(-1, 2, 200).astype(np.int8))
        x, y = dyn.SpinConfiguration(a), dyn.SpinConfiguration(b)
        dyn.coupled_step(params, x, y, RngStream(trial))
        violations += not x <= y
    assert violations == 0


def test_phi_is_odd_and_tracks_slope():
    params = ModelParams(400, 2.0, 0.9)
    x = np.arange(-400, 401)
    phi = dyn.phi_fn(params, x)
    assert np.allclose(phi, -phi[::-1], atol=1e-16)
    gaps = []
    for n in (100, 200, 400, 800):
        p = ModelParams(n, 2.0, 0.9)
        xs = np.arange(-n, n + 1)
        c1, _ = cgf_derivs(2.0, 2 * 2.0 * 0.9 * xs / n)
        gaps.append(n * np.max(np.abs(dyn.phi_fn(p, xs) - c1)))
    assert max(gaps) < 5 and gaps[-1] <= gaps[0] * 1.1  # C/n with a bounded C


def test_mean_distance_expansion_and_contraction_below_k1():

    kk = 0.98 * k1(2.0)
    params = ModelParams(200, 2.0, kk)
    grid = np.linspace(0.005, 1, 200)
    z_star = grid[np.argmax(contraction_profile(2.0, kk, grid).local)]
    sigma, tau = dyn.neighbour_pair(200, int(round(z_star * 200)))
    # the excess over 1 is of order (local - 1) / n, so the sample must resolve ~1e-4
    exact = _exact_mean_distance(params, sigma, tau)
    assert exact > 1
    expand, se = dyn.empirical_mean_step_distance(params, sigma, tau, 4 * 10**6, RngStream(31))
    assert abs(expand - exact) < 4 * se and expand - 3 * se > 1
    sigma, tau = dyn.neighbour_pair(200, 0)
    contract, se = dyn.empirical_mean_step_distance(params, sigma, tau, 2 * 10**5, RngStream(32))
    assert contract + 3 * se < 1


def test_stationary_samples_at_fifty_match_gibbs():
    params = ModelParams(50, 1.0, 0.8)
    m = 10**5
    spins, exact = dyn.sample_stationary_batch(params, RngStream(40).children(m))
    pi = ec.gibbs_stationary(params)
    space = pi.space
    idx = space.index((spins == -1).sum(1), (spins == 1).sum(1))
    counts = np.bincount(idx, minlength=len(space))
    emp_mag = np.bincount(space.magnetization[idx] + 50, minlength=101) / m
    assert 0.5 * np.abs(emp_mag - pi.magnetization_marginal()).sum() <= 0.02
    expected = pi.probs * m
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert stats.chisquare(obs, exp).pvalue > 1e-3
    assert exact and np.all(np.isin(spins, (-1, 0, 1)))


def test_stationary_samples_concentrate_at_zero_below_k1():

    params = ModelParams(1000, 2.0, 0.9 * k1(2.0))
    spins, _ = dyn.sample_stationary_batch(params, RngStream(41).children(2000))
    assert np.mean(np.abs(spins.sum(1, dtype=np.int64)) / 1000 < 0.1) > 0.99


def test_identical_starts_coalesce_at_zero():
    x = dyn.SpinConfiguration.all_zero(10)
    run = dyn.coupling_time(ModelParams(10, 1.0, 1.0), x, x.copy(), 100, RngStream(0))
    assert run.coalesced_at == 0 and run.rho == [0]


@pytest.mark.parametrize("beta,kfactor", [(1.0, None), (2.0, 0.9)])
def test_median_coupling_time_at_thousand(beta, kfactor):

    kk = 0.8 if kfactor is None else kfactor * k1(beta)
    n = 1000
    params = ModelParams(n, beta, kk)
    cap = math.ceil(20 * n * math.log(n))
    done, exact = dyn.coupling_times(params, dyn.SpinConfiguration.all_plus(n), 200, cap, RngStream(50))
    assert exact and np.median(np.where(done < 0, cap + 1, done)) <= cap


def test_tv_upper_bound_at_mixing_time():
    params = ModelParams(100, 1.0, 0.8)
    t = ec.t_mix_exact(params, 0.25)
    curve = ec.tv_curve(params, ec.LumpedState(0, 100, 100), t)
    est = dyn.tv_upper_via_coupling(params, dyn.SpinConfiguration.all_plus(100), 2000, [0, t], RngStream(60))
    assert est.estimate[0] == 1.0
    assert est.estimate[1] >= curve.d[t] - 3 * est.stderr[1]
