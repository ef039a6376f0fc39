"""Exact finite-n computations on the lumped spin-count chain.

The Glauber dynamics and the Gibbs measure depend on a configuration only
through its spin counts, so the chain projects exactly onto the
``(n+1)(n+2)/2`` count states ``(n_minus, n_plus)``. Everything here works on
that projection: the stationary law, the sparse transition matrix,
total-variation curves from chosen starts, exact mixing times and bottleneck
ratios of magnetization cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln, logsumexp

from ._kernel import heat_bath_probs
from .equilibrium import DomainError
from .params import ModelParams

__all__ = [
    "MAX_N",
    "CapExhausted",
    "LumpedState",
    "StateSpace",
    "LumpedDistribution",
    "TransitionMatrix",
    "MixingCurve",
    "BottleneckReport",
    "enumerate_states",
    "extreme_states",
    "gibbs_stationary",
    "glauber_lumped_matrix",
    "tv_curve",
    "t_mix_exact",
    "bottleneck",
    "bottleneck_profile",
]

MAX_N = 2000
T_MAX_GUARD = 10**7


class CapExhausted(RuntimeError):
    """The distance to stationarity stayed above ``eps`` for ``t_max`` steps."""

    def __init__(self, t_max, last_d, eps):
        super().__init__(f"not mixed within cap: d({t_max}) = {last_d:.6g} > eps = {eps}")
        self.t_max = t_max
        self.last_d = last_d
        self.eps = eps


@dataclass(frozen=True)
class LumpedState:
    """Counts of ``-1`` and ``+1`` spins among ``n`` sites."""

    n_minus: int
    n_plus: int
    n: int

    def __post_init__(self):
        if self.n < 1 or self.n_minus < 0 or self.n_plus < 0 or self.n_minus + self.n_plus > self.n:
            raise DomainError(f"invalid lumped state {self!r}")

    @property
    def n_zero(self):
        return self.n - self.n_minus - self.n_plus

    @property
    def magnetization(self):
        return self.n_plus - self.n_minus


class StateSpace:
    """Canonical lexicographic ordering of the count states for size ``n``."""

    def __init__(self, n):
        if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_N:
            raise DomainError(f"n must be an integer in [1, {MAX_N}], got {n!r}")
        self.n = n = int(n)
        rows = [np.full(n + 1 - m, m, dtype=np.int64) for m in range(n + 1)]
        self.n_minus = np.concatenate(rows)
        self.n_plus = np.concatenate([np.arange(n + 1 - m, dtype=np.int64) for m in range(n + 1)])
        self.n_zero = n - self.n_minus - self.n_plus
        self.magnetization = self.n_plus - self.n_minus

    def __len__(self):
        return len(self.n_minus)

    def __iter__(self):
        for m, p in zip(self.n_minus.tolist(), self.n_plus.tolist()):
            yield LumpedState(m, p, self.n)

    def __getitem__(self, i):
        return LumpedState(int(self.n_minus[i]), int(self.n_plus[i]), self.n)

    def index(self, n_minus, n_plus):
        """Position of ``(n_minus, n_plus)``; vectorised over array inputs."""
        n_minus = np.asarray(n_minus)
        n_plus = np.asarray(n_plus)
        if np.any(n_minus < 0) or np.any(n_plus < 0) or np.any(n_minus + n_plus > self.n):
            raise DomainError("counts outside the state space")
        out = n_minus * (self.n + 1) - n_minus * (n_minus - 1) // 2 + n_plus
        return int(out) if out.ndim == 0 else out

    def index_of(self, state):
        if state.n != self.n:
            raise DomainError(f"state for n={state.n} used with n={self.n}")
        return self.index(state.n_minus, state.n_plus)

    def flip_permutation(self):
        """Index map of the global spin flip ``(n_minus, n_plus) -> (n_plus, n_minus)``."""
        return self.index(self.n_plus, self.n_minus)


def enumerate_states(n):
    """Canonical ordered count states for ``n`` sites (lexicographic in ``(n_minus, n_plus)``)."""
    return StateSpace(n)


def extreme_states(n):
    """All-plus, all-minus and all-zero count states."""
    return [LumpedState(0, n, n), LumpedState(n, 0, n), LumpedState(0, 0, n)]


@dataclass
class LumpedDistribution:
    probs: np.ndarray
    n: int
    space: StateSpace = field(repr=False)

    def __post_init__(self):
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to one")

    def magnetization_marginal(self):
        """Probability of each total spin ``S = -n..n`` (index ``S + n``)."""
        return np.bincount(self.space.magnetization + self.n, weights=self.probs, minlength=2 * self.n + 1)

    def __getitem__(self, state):
        return float(self.probs[self.space.index_of(state)])


def _log_weights(params, space):
    n, beta, k = params.n, params.beta, params.k
    s = space.magnetization.astype(float)
    return (
        gammaln(n + 1.0)
        - gammaln(space.n_minus + 1.0)
        - gammaln(space.n_zero + 1.0)
        - gammaln(space.n_plus + 1.0)
        - beta * (space.n_minus + space.n_plus)
        + beta * k * s * s / n
    )


def gibbs_stationary(params, space=None):
    """Gibbs measure pushed forward to count states, normalised in log space."""
    space = space or StateSpace(params.n)
    logw = _log_weights(params, space)
    probs = np.exp(logw - logsumexp(logw))
    probs /= probs.sum()
    return LumpedDistribution(probs, params.n, space)


@dataclass
class TransitionMatrix:
    """Row-stochastic CSR matrix of the lumped Glauber chain."""

    matrix: sp.csr_matrix
    params: ModelParams
    space: StateSpace = field(repr=False)
    _transpose: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def transpose(self):
        if self._transpose is None:
            self._transpose = self.matrix.T.tocsr()
        return self._transpose

    def propagate(self, v, extended=False):
        """One step of ``v -> v P`` for a row vector (or columns of ``v``)."""
        if not extended:
            return self.transpose @ v
        pt = self.transpose
        data = pt.data.astype(np.longdouble)
        prods = data * np.asarray(v, dtype=np.longdouble)[pt.indices]
        return np.add.reduceat(prods, pt.indptr[:-1])

    def to_dense(self):
        return self.matrix.toarray()


# (from spin, to spin) pairs in a fixed order; index 0, 1, 2 <-> spin -1, 0, +1
_MOVES = [(s, t) for s in (-1, 0, 1) for t in (-1, 0, 1)]


def _move_probabilities(params, space):
    """Per-state probability of each ``(from, to)`` single-site update."""
    n = params.n
    counts = {-1: space.n_minus, 0: space.n_zero, 1: space.n_plus}
    out = {}
    for s in (-1, 0, 1):
        s_tilde = space.magnetization - s
        probs = heat_bath_probs(n, params.beta, params.k, s_tilde)
        pick = counts[s] / n
        for t, p in zip((-1, 0, 1), probs):
            out[(s, t)] = pick * p
    return out


def glauber_lumped_matrix(params, space=None):
    """Exact lumped Glauber transition matrix (at most 7 nonzeros per row)."""
    space = space or StateSpace(params.n)
    moves = _move_probabilities(params, space)
    size = len(space)
    rows, cols, vals = [], [], []
    self_loop = np.zeros(size)
    for (s, t), prob in moves.items():
        if s == t:
            self_loop += prob
            continue
        mask = prob > 0
        src = np.nonzero(mask)[0]
        dm = space.n_minus[src] - (s == -1) + (t == -1)
        dp = space.n_plus[src] - (s == 1) + (t == 1)
        rows.append(src)
        cols.append(space.index(dm, dp))
        vals.append(prob[mask])
    rows.append(np.arange(size))
    cols.append(np.arange(size))
    vals.append(self_loop)
    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    matrix.sum_duplicates()
    matrix.sort_indices()
    return TransitionMatrix(matrix, params, space)


@dataclass
class MixingCurve:
    """Total-variation distance ``d(t)`` from one start, ``t = 0..len-1``."""

    t: np.ndarray
    d: np.ndarray
    start: LumpedState
    eps_hit: list[tuple[float, int]] = field(default_factory=list)

    def rows(self):
        for t, d in zip(self.t.tolist(), self.d.tolist()):
            yield {"t": t, "d": d}


def _delta(space, state, dtype=float):
    v = np.zeros(len(space), dtype=dtype)
    v[space.index_of(state)] = 1.0
    return v


def _default_t_max(n):
    return max(100, math.ceil(50.0 * n * math.log(n)))


def _stop_threshold(eps):
    if not eps:
        return None
    smallest = min(eps)
    return smallest - 1e-4 if smallest > 1e-4 else 0.5 * smallest


def tv_curve(params, start, t_max, eps=None, chain=None, pi=None, extended=False):
    """``d(t) = 1/2 |delta_start P^t - pi|_1`` by iterated sparse products.

    With ``eps`` given, the first hitting time of each level is recorded and
    the iteration stops once ``d`` is ``1e-4`` under the smallest level.
    ``extended=True`` accumulates in extended precision (``n <= 100``).
    """
    if not 0 < t_max <= T_MAX_GUARD:
        raise DomainError(f"t_max must be in (0, {T_MAX_GUARD}]")
    if extended and params.n > 100:
        raise DomainError("extended-precision iteration is limited to n <= 100")
    chain = chain or glauber_lumped_matrix(params)
    pi = pi or gibbs_stationary(params, chain.space)
    eps = sorted(eps or [], reverse=True)
    stop = _stop_threshold(eps)
    dtype = np.longdouble if extended else float
    target = pi.probs.astype(dtype)
    v = _delta(chain.space, start, dtype)
    d = [float(0.5 * np.abs(v - target).sum())]
    for _ in range(t_max):
        if stop is not None and d[-1] < stop:
            break
        v = chain.propagate(v, extended=extended)
        d.append(float(0.5 * np.abs(v - target).sum()))
    d = np.array(d)
    hits = []
    for e in eps:
        below = np.nonzero(d <= e)[0]
        if below.size:
            hits.append((e, int(below[0])))
    return MixingCurve(np.arange(len(d)), d, start, hits)


def t_mix_exact(params, eps, starts=None, t_max=None, chain=None, pi=None, all_starts=False, batch=256):
    """Smallest ``t`` with ``max_start d(t) <= eps``.

    ``starts`` defaults to the all-plus, all-minus and all-zero states;
    ``all_starts=True`` maximises over every count state, which is the exact
    worst case because the distance depends on a configuration only through
    its counts. Raises :class:`CapExhausted` if ``t_max`` steps do not suffice.
    """
    if not 0 < eps <= 1:
        raise DomainError(f"eps must be in (0, 1], got {eps!r}")
    chain = chain or glauber_lumped_matrix(params)
    pi = pi or gibbs_stationary(params, chain.space)
    space = chain.space
    t_max = _default_t_max(params.n) if t_max is None else int(t_max)
    if not 0 < t_max <= T_MAX_GUARD:
        raise DomainError(f"t_max must be in (0, {T_MAX_GUARD}]")
    if all_starts:
        indices = np.arange(len(space))
    else:
        starts = starts or extreme_states(params.n)
        if not starts:
            raise DomainError("starts must be nonempty")
        indices = np.array([space.index_of(s) for s in starts])
    target = pi.probs[:, None]
    worst = 0
    for lo in range(0, len(indices), batch):
        cols = indices[lo : lo + batch]
        v = np.zeros((len(space), len(cols)))
        v[cols, np.arange(len(cols))] = 1.0
        t = 0
        d = 0.5 * np.abs(v - target).sum(axis=0).max()
        while d > eps:
            if t >= t_max:
                raise CapExhausted(t_max, float(d), eps)
            v = chain.propagate(v)
            t += 1
            d = 0.5 * np.abs(v - target).sum(axis=0).max()
        worst = max(worst, t)
    return worst


@dataclass
class BottleneckReport:
    """Bottleneck ratio of the cut ``A = {S/n > zprime}`` and the best cut.

    ``phi_star`` minimises over every cut ``zprime = m/n`` with ``m >= 0``,
    all of which have ``P(A) <= 1/2`` by symmetry.
    """

    n: int
    beta: float
    k: float
    zprime: float
    zprime_requested: float
    phi: float
    p_set: float
    phi_star: float
    zprime_star: float
    tmix_lower: float

    def to_row(self):
        return {
            "n": self.n,
            "beta": self.beta,
            "k": self.k,
            "zprime": self.zprime,
            "phi": self.phi,
            "phi_star": self.phi_star,
            "tmix_lower": self.tmix_lower,
        }

    def to_dict(self):
        return dict(self.__dict__)


def bottleneck_profile(params, chain_space=None, pi=None):
    """Return ``(m, Q(A_m, A_m^c), P(A_m))`` for the cuts ``A_m = {S > m}``, ``m = 0..n-1``.

    Only states with ``S in {m+1, m+2}`` can leave ``A_m`` in one step: a
    single update moves ``S`` by at most 2.
    """
    space = chain_space or StateSpace(params.n)
    pi = pi or gibbs_stationary(params, space)
    n = params.n
    moves = _move_probabilities(params, space)
    down_one = moves[(1, 0)] + moves[(0, -1)]
    down_two = moves[(1, -1)]
    s_index = space.magnetization + n
    flow_from = lambda w: np.bincount(s_index, weights=pi.probs * w, minlength=2 * n + 1)
    flow1 = flow_from(down_one)
    flow2 = flow_from(down_two)
    mass = pi.magnetization_marginal()
    cuts = np.arange(0, n)
    # exit flow over the cut m: S = m+1 via one- or two-step drops, S = m+2 via two-step drops
    q = flow1[cuts + 1 + n] + flow2[cuts + 1 + n]
    q[: n - 1] += flow2[cuts[: n - 1] + 2 + n]
    tail = np.cumsum(mass[::-1])[::-1]
    p_set = tail[cuts + 1 + n]
    return cuts, q, p_set


def bottleneck(params, zprime, pi=None):
    """Bottleneck ratio of ``{S/n > zprime}`` plus the minimum over magnetization cuts.

    ``zprime`` is rounded to the nearest attainable ``m/n``. The lower bound
    ``tmix_lower = 1/(4 phi_star)`` holds for ``t_mix(1/4)``.
    """
    if not 0 <= zprime < 1:
        raise DomainError(f"zprime must be in [0, 1), got {zprime!r}")
    cuts, q, p_set = bottleneck_profile(params, pi=pi)
    phi = q / p_set
    m = min(int(round(zprime * params.n)), params.n - 1)
    best = int(np.argmin(phi))
    phi_star = float(phi[best])
    return BottleneckReport(
        n=params.n,
        beta=params.beta,
        k=params.k,
        zprime=m / params.n,
        zprime_requested=float(zprime),
        phi=float(phi[m]),
        p_set=float(p_set[m]),
        phi_star=phi_star,
        zprime_star=cuts[best] / params.n,
        tmix_lower=1.0 / (4.0 * phi_star),
    )
