"""Monte Carlo Glauber dynamics and the threshold coupling.

One step picks a vertex ``k`` from the first uniform of the step and
resamples its spin from the heat-bath law with the second uniform ``U``,
using the cumulative order ``[p_minus | p_zero | p_plus]``:

    -1 if U <= p_minus,  0 if U <= p_minus + p_zero,  +1 otherwise.

Two chains coupled through the same ``(k, U)`` keep the coordinatewise
order, because both thresholds decrease as the neighbour spin sum grows.

Single-configuration functions (:func:`glauber_step`, :func:`coupled_step`)
are plain Python; replica experiments run through jitted kernels that
consume the same draws in the same order, so the two paths agree exactly.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np

from ._kernel import heat_bath_probs
from .equilibrium import DomainError, cgf_derivs
from .exactchain import MAX_N, LumpedState, gibbs_stationary
from .params import ModelParams
from .rng import RngStream

__all__ = [
    "SpinConfiguration",
    "UpdateDistribution",
    "CouplingRecord",
    "CouplingRun",
    "StationarySample",
    "TVUpperEstimate",
    "update_probs",
    "threshold_table",
    "glauber_step",
    "coupled_step",
    "phi_fn",
    "mean_distance_formula",
    "neighbour_pair",
    "one_step_distances",
    "empirical_mean_step_distance",
    "sample_stationary_config",
    "sample_stationary_batch",
    "run_glauber",
    "run_coupled",
    "coupling_time",
    "coupling_times",
    "tv_upper_via_coupling",
]

_DEBUG = os.environ.get("BLUMECAPEL_DEBUG", "") == "1"
MAX_CAP = 10**9


class SpinConfiguration:
    """Spins in ``{-1, 0, +1}`` with cached total spin and spin counts."""

    __slots__ = ("spins", "total_spin", "n_minus", "n_zero", "n_plus")

    def __init__(self, spins):
        spins = np.array(spins, dtype=np.int8)
        if spins.ndim != 1 or spins.size == 0 or not np.isin(spins, (-1, 0, 1)).all():
            raise DomainError("spins must be a nonempty 1-d sequence over {-1, 0, 1}")
        self.spins = spins
        self.n_minus = int(np.count_nonzero(spins == -1))
        self.n_plus = int(np.count_nonzero(spins == 1))
        self.n_zero = spins.size - self.n_minus - self.n_plus
        self.total_spin = self.n_plus - self.n_minus

    @classmethod
    def constant(cls, n, value):
        return cls(np.full(n, value, dtype=np.int8))

    @classmethod
    def all_plus(cls, n):
        return cls.constant(n, 1)

    @classmethod
    def all_minus(cls, n):
        return cls.constant(n, -1)

    @classmethod
    def all_zero(cls, n):
        return cls.constant(n, 0)

    @property
    def n(self):
        return self.spins.size

    @property
    def counts(self):
        return self.n_minus, self.n_zero, self.n_plus

    def neighbour_sum(self, i):
        """Total spin of every site except ``i``."""
        return self.total_spin - int(self.spins[i])

    def set_spin(self, i, value):
        old = int(self.spins[i])
        if old == value:
            return
        self.spins[i] = value
        self.total_spin += value - old
        for v, delta in ((old, -1), (value, 1)):
            if v == -1:
                self.n_minus += delta
            elif v == 0:
                self.n_zero += delta
            else:
                self.n_plus += delta
        if _DEBUG:
            self.validate()

    def validate(self):
        fresh = SpinConfiguration(self.spins)
        if (fresh.total_spin, fresh.counts) != (self.total_spin, self.counts):
            raise AssertionError("cached total spin or counts out of sync with spins")

    def lumped(self):
        return LumpedState(self.n_minus, self.n_plus, self.n)

    def hamming(self, other):
        return int(np.count_nonzero(self.spins != other.spins))

    def copy(self):
        return SpinConfiguration(self.spins.copy())

    def __eq__(self, other):
        return isinstance(other, SpinConfiguration) and np.array_equal(self.spins, other.spins)

    def __le__(self, other):
        return bool(np.all(self.spins <= other.spins))

    def __repr__(self):
        return f"SpinConfiguration(n={self.n}, counts={self.counts}, total_spin={self.total_spin})"


@dataclass(frozen=True)
class UpdateDistribution:
    p_minus: float
    p_zero: float
    p_plus: float

    @property
    def thresholds(self):
        return self.p_minus, self.p_minus + self.p_zero


def update_probs(params, s_tilde):
    """Heat-bath law of a site whose neighbours sum to ``s_tilde``."""
    if abs(s_tilde) > params.n - 1:
        raise DomainError(f"|s_tilde| must be <= n - 1, got {s_tilde}")
    pm, p0, pp = heat_bath_probs(params.n, params.beta, params.k, s_tilde)
    return UpdateDistribution(float(pm), float(p0), float(pp))


@functools.lru_cache(maxsize=64)
def threshold_table(params):
    """Cumulative thresholds ``(p_minus, p_minus + p_zero)`` indexed by ``s_tilde + n``."""
    n = params.n
    pm, p0, _ = heat_bath_probs(n, params.beta, params.k, np.arange(-n, n + 1))
    lo = np.ascontiguousarray(pm)
    hi = np.ascontiguousarray(pm + p0)
    lo.setflags(write=False)
    hi.setflags(write=False)
    return lo, hi


def _new_spin(u, lo, hi):
    if u <= lo:
        return -1
    if u <= hi:
        return 0
    return 1


def _pick_vertex(u, n):
    return min(int(u * n), n - 1)


def glauber_step(params, config, rng):
    """Resample one uniformly chosen site of ``config`` in place."""
    lo, hi = threshold_table(params)
    n = params.n
    k = _pick_vertex(rng.uniform(), n)
    u = rng.uniform()
    idx = config.neighbour_sum(k) + n
    config.set_spin(k, _new_spin(u, lo[idx], hi[idx]))
    return config


def coupled_step(params, x, y, rng):
    """Advance ``x`` and ``y`` in place with the same vertex and the same ``U``."""
    if x.n != y.n:
        raise DomainError("coupled configurations must have the same size")
    lo, hi = threshold_table(params)
    n = params.n
    k = _pick_vertex(rng.uniform(), n)
    u = rng.uniform()
    ix = x.neighbour_sum(k) + n
    iy = y.neighbour_sum(k) + n
    x.set_spin(k, _new_spin(u, lo[ix], hi[ix]))
    y.set_spin(k, _new_spin(u, lo[iy], hi[iy]))
    return x, y


def phi_fn(params, x):
    """``2 sinh(2 beta K x/n) / (2 cosh(2 beta K x/n) + e^{beta - beta K/n})``.

    Equal to ``p_plus - p_minus`` at neighbour sum ``x``, which is how it is
    evaluated (no overflow for any ``|x| <= n``).
    """
    x = np.asarray(x)
    if np.any(np.abs(x) > params.n):
        raise DomainError("phi_fn needs |x| <= n")
    pm, _, pp = heat_bath_probs(params.n, params.beta, params.k, x)
    out = pp - pm
    return out if np.ndim(out) else float(out)


def mean_distance_formula(params, s_sigma, s_tau):
    """Mean coupling distance of a neighbouring pair, up to ``O(1/n^2)``."""
    n = params.n
    return (n - 1) / n + (n - 1) / n * (phi_fn(params, s_tau) - phi_fn(params, s_sigma))


def neighbour_pair(n, s_sigma):
    """Configurations ``sigma < tau`` differing at one site, with ``S(sigma) = s_sigma``.

    ``sigma`` holds ``|s_sigma|`` spins of the sign of ``s_sigma`` and zeros
    elsewhere; ``tau`` raises one zero site (site ``n - 1``) to ``+1``.
    """
    if abs(s_sigma) > n - 1:
        raise DomainError("need |s_sigma| <= n - 1 so that one site is zero")
    spins = np.zeros(n, dtype=np.int8)
    spins[: abs(s_sigma)] = 1 if s_sigma > 0 else -1
    sigma = SpinConfiguration(spins)
    tau = sigma.copy()
    tau.set_spin(n - 1, 1)
    return sigma, tau


# ---------------------------------------------------------------------------
# one-step statistics
# ---------------------------------------------------------------------------


def one_step_distances(params, sigma, tau, m, rng):
    """Hamming distance after one coupled step, for ``m`` independent trials.

    Returns ``(rho_after, k, new_sigma_spin, new_tau_spin)`` arrays. Trial
    ``j`` uses uniforms ``2j`` (vertex) and ``2j+1`` (``U``) of ``rng``.
    """
    lo, hi = threshold_table(params)
    n = params.n
    draws = rng.uniforms(2 * m)
    k = np.minimum((draws[0::2] * n).astype(np.int64), n - 1)
    u = draws[1::2]
    old_s = sigma.spins[k].astype(np.int64)
    old_t = tau.spins[k].astype(np.int64)
    is_ = sigma.total_spin - old_s + n
    it_ = tau.total_spin - old_t + n
    new_s = 1 - (u <= hi[is_]).astype(np.int64) - (u <= lo[is_]).astype(np.int64)
    new_t = 1 - (u <= hi[it_]).astype(np.int64) - (u <= lo[it_]).astype(np.int64)
    rho = sigma.hamming(tau) - (old_s != old_t).astype(np.int64) + (new_s != new_t).astype(np.int64)
    return rho, k, new_s, new_t


def empirical_mean_step_distance(params, sigma, tau, m, rng):
    """Monte Carlo ``E[rho(X, Y)]`` after one coupled step from a neighbouring pair.

    Returns ``(estimate, stderr)``.
    """
    if sigma.hamming(tau) != 1:
        raise DomainError("sigma and tau must differ at exactly one site")
    if m < 10**4:
        raise DomainError("use at least 10^4 replicas")
    rho, *_ = one_step_distances(params, sigma, tau, m, rng)
    return float(rho.mean()), float(rho.std(ddof=1) / math.sqrt(m))


# ---------------------------------------------------------------------------
# jitted replica kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _glauber_kernel(spins, totals, lo, hi, draws):
    reps, n = spins.shape
    steps = draws.shape[1] // 2
    for r in range(reps):
        s = totals[r]
        for j in range(steps):
            k = int(draws[r, 2 * j] * n)
            if k >= n:
                k = n - 1
            u = draws[r, 2 * j + 1]
            old = spins[r, k]
            idx = s - old + n
            if u <= lo[idx]:
                new = -1
            elif u <= hi[idx]:
                new = 0
            else:
                new = 1
            spins[r, k] = new
            s += new - old
        totals[r] = s


@numba.njit(cache=True)
def _coupled_kernel(xs, ys, sx, sy, rho, lo, hi, draws, t0, coalesced_at):
    reps, n = xs.shape
    steps = draws.shape[1] // 2
    for r in range(reps):
        if rho[r] == 0:
            continue
        for j in range(steps):
            k = int(draws[r, 2 * j] * n)
            if k >= n:
                k = n - 1
            u = draws[r, 2 * j + 1]
            ox = xs[r, k]
            oy = ys[r, k]
            ix = sx[r] - ox + n
            iy = sy[r] - oy + n
            if u <= lo[ix]:
                nx = -1
            elif u <= hi[ix]:
                nx = 0
            else:
                nx = 1
            if u <= lo[iy]:
                ny = -1
            elif u <= hi[iy]:
                ny = 0
            else:
                ny = 1
            if ox != oy:
                rho[r] -= 1
            if nx != ny:
                rho[r] += 1
            xs[r, k] = nx
            ys[r, k] = ny
            sx[r] += nx - ox
            sy[r] += ny - oy
            if rho[r] == 0:
                coalesced_at[r] = t0 + j + 1
                break


def _draw_block(streams, steps):
    return np.ascontiguousarray(np.stack([s.uniforms(2 * steps) for s in streams]))


def run_glauber(params, spins, streams, steps, block=None):
    """Advance a batch of configurations (rows of ``spins``) by ``steps`` steps in place."""
    spins = np.asarray(spins)
    if spins.dtype != np.int8 or spins.ndim != 2 or spins.shape[0] != len(streams):
        raise DomainError("spins must be an int8 array with one row per stream")
    lo, hi = threshold_table(params)
    totals = spins.sum(axis=1, dtype=np.int64)
    block = block or max(1, min(steps, 4 * params.n))
    done = 0
    while done < steps:
        m = min(block, steps - done)
        _glauber_kernel(spins, totals, lo, hi, _draw_block(streams, m))
        done += m
    return spins


# ---------------------------------------------------------------------------
# stationary samples
# ---------------------------------------------------------------------------


@dataclass
class StationarySample:
    config: SpinConfiguration
    exact_stationary: bool


def _spins_from_counts(n_minus, n_zero, n_plus, uniforms):
    base = np.concatenate(
        [np.full(n_minus, -1, np.int8), np.zeros(n_zero, np.int8), np.ones(n_plus, np.int8)]
    )
    return base[np.argsort(uniforms, kind="stable")]


@functools.lru_cache(maxsize=8)
def _stationary_cdf(params):
    pi = gibbs_stationary(params)
    cdf = np.cumsum(pi.probs)
    cdf[-1] = 1.0
    return pi.space, cdf


def _burn_in_steps(n):
    return math.ceil(100.0 * n * math.log(n))


def sample_stationary_config(params, rng):
    """One draw from the Gibbs measure.

    Exact for ``n <= 2000``: counts are drawn from the lumped stationary law
    (one uniform), then placed on sites by a uniform random permutation
    (``n`` uniforms). Larger ``n`` falls back to a Glauber burn-in of
    ``100 n log n`` steps from all-zero and is flagged approximate.
    """
    spins, exact = sample_stationary_batch(params, [rng])
    return StationarySample(SpinConfiguration(spins[0]), exact)


def sample_stationary_batch(params, streams):
    """Stationary draws, one row per stream; returns ``(spins, exact_stationary)``."""
    n = params.n
    if n <= MAX_N:
        space, cdf = _stationary_cdf(params)
        out = np.empty((len(streams), n), dtype=np.int8)
        for r, stream in enumerate(streams):
            idx = min(int(np.searchsorted(cdf, stream.uniform(), side="right")), len(cdf) - 1)
            out[r] = _spins_from_counts(
                int(space.n_minus[idx]), int(space.n_zero[idx]), int(space.n_plus[idx]), stream.uniforms(n)
            )
        return out, True
    out = np.zeros((len(streams), n), dtype=np.int8)
    run_glauber(params, out, streams, _burn_in_steps(n))
    return out, False


# ---------------------------------------------------------------------------
# coupling runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingRecord:
    t: int
    rho: int
    sx: int
    sy: int
    coalesced_at: int | None


@dataclass
class CouplingRun:
    """Trajectory of one coupled pair, sampled every ``record_every`` steps.

    The run stops at coalescence; its final row is the coalescence time.
    """

    params: ModelParams
    seed: int
    stream_id: int
    exact_stationary: bool | None
    record_every: int
    t: list[int] = field(default_factory=list)
    rho: list[int] = field(default_factory=list)
    sx: list[int] = field(default_factory=list)
    sy: list[int] = field(default_factory=list)
    coalesced_at: int | None = None

    def records(self):
        return [CouplingRecord(*row, self.coalesced_at) for row in zip(self.t, self.rho, self.sx, self.sy)]

    def rows(self):
        for t, rho, sx, sy in zip(self.t, self.rho, self.sx, self.sy):
            yield {"t": t, "rho": rho, "sx": sx, "sy": sy}

    def header(self):
        return {
            "params": self.params.to_dict(),
            "seed": self.seed,
            "stream_id": self.stream_id,
            "exact_stationary": self.exact_stationary,
            "coalesced_at": self.coalesced_at,
        }


def run_coupled(params, xs, ys, streams, cap, block=None, on_block=None):
    """Run coupled pairs (rows of ``xs``/``ys``) until all coalesce or ``cap`` steps.

    Arrays are modified in place. Returns ``coalesced_at`` with ``-1`` for
    pairs still apart at ``cap``. ``on_block(t, xs, ys, sx, sy, rho)`` is
    called after every block of ``block`` steps.
    """
    if not 0 < cap <= MAX_CAP:
        raise DomainError(f"cap must be in (0, {MAX_CAP}]")
    lo, hi = threshold_table(params)
    sx = xs.sum(axis=1, dtype=np.int64)
    sy = ys.sum(axis=1, dtype=np.int64)
    rho = np.count_nonzero(xs != ys, axis=1).astype(np.int64)
    coalesced_at = np.where(rho == 0, 0, -1).astype(np.int64)
    block = block or params.n
    t = 0
    while t < cap and np.any(rho > 0):
        m = min(block, cap - t)
        _coupled_kernel(xs, ys, sx, sy, rho, lo, hi, _draw_block(streams, m), t, coalesced_at)
        t += m
        if on_block is not None:
            on_block(t, xs, ys, sx, sy, rho)
    return coalesced_at


def coupling_time(params, x0, y0, cap, rng, record_every=None, exact_stationary=None):
    """Couple copies of ``x0`` and ``y0`` until they agree or ``cap`` steps pass."""
    record_every = record_every or params.n
    xs = x0.spins[None, :].copy()
    ys = y0.spins[None, :].copy()
    run = CouplingRun(params, rng.seed, rng.stream_id, exact_stationary, record_every)
    run.t.append(0)
    run.rho.append(x0.hamming(y0))
    run.sx.append(x0.total_spin)
    run.sy.append(y0.total_spin)

    def record(t, xs, ys, sx, sy, rho):
        if rho[0] > 0:
            run.t.append(t)
            run.rho.append(int(rho[0]))
            run.sx.append(int(sx[0]))
            run.sy.append(int(sy[0]))

    done = run_coupled(params, xs, ys, [rng], cap, block=record_every, on_block=record)
    if done[0] >= 0:
        run.coalesced_at = int(done[0])
        if done[0] > 0:
            s = int(xs[0].sum())
            run.t.append(run.coalesced_at)
            run.rho.append(0)
            run.sx.append(s)
            run.sy.append(s)
    return run


def coupling_times(params, x0, replicas, cap, rng, y0=None):
    """Coalescence times of ``replicas`` coupled pairs started at ``x0`` and ``y0``.

    ``y0=None`` starts each ``Y`` from its own stationary draw. Replica ``r``
    uses ``rng.child(r)`` for both its stationary draw and its dynamics.
    Returns ``(coalesced_at, exact_stationary)``; ``-1`` marks no coalescence.
    """
    streams = rng.children(replicas)
    xs = np.repeat(x0.spins[None, :], replicas, axis=0)
    if y0 is None:
        ys, exact = sample_stationary_batch(params, streams)
    else:
        ys, exact = np.repeat(y0.spins[None, :], replicas, axis=0), None
    return run_coupled(params, xs, ys, streams, cap), exact


@dataclass
class TVUpperEstimate:
    """Empirical ``P(X_t != Y_t)`` with Wilson 95% intervals and binomial stderr."""

    t: np.ndarray
    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    stderr: np.ndarray
    replicas: int
    exact_stationary: bool

    def rows(self):
        for row in zip(self.t, self.estimate, self.lower, self.upper, self.stderr):
            yield dict(zip(("t", "estimate", "lower", "upper", "stderr"), map(float, row)))


def _wilson(p, m, z=1.96):
    denom = 1.0 + z * z / m
    centre = (p + z * z / (2 * m)) / denom
    half = z * np.sqrt(p * (1 - p) / m + z * z / (4 * m * m)) / denom
    return centre - half, centre + half


def tv_upper_via_coupling(params, x0, replicas, t_grid, rng):
    """Coupling upper bound on ``|P^t(x0, .) - pi|_TV`` with ``Y_0`` stationary."""
    if replicas < 100:
        raise DomainError("use at least 100 replicas")
    t_grid = np.asarray(sorted(t_grid), dtype=np.int64)
    cap = int(t_grid[-1]) if t_grid[-1] > 0 else 1
    done, exact = coupling_times(params, x0, replicas, cap, rng)
    apart = np.array([np.mean((done < 0) | (done > t)) for t in t_grid])
    lower, upper = _wilson(apart, replicas)
    stderr = np.sqrt(apart * (1 - apart) / replicas)
    return TVUpperEstimate(t_grid, apart, lower, upper, stderr, replicas, exact)
