"""Equilibrium structure of the mean-field Blume-Capel model.

Everything here is a pure function of ``(beta, k)``: the cumulant generating
function ``c_beta`` of the single-site spin law and its derivatives, its
Legendre-Fenchel transform ``J_beta``, the free energy functional
``G_{beta,K}(z) = beta*K*z**2 - c_beta(2*beta*K*z)``, the magnetization rate
function, the three critical curves and the phase / mixing classification.

The single-site law with weight ``exp(-beta*w**2)`` on ``w in {-1, 0, 1}``
is evaluated through its softmax probabilities, which keeps every
derivative of ``c_beta`` finite and free of cancellation for large ``|t|``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "BETA_C",
    "DomainError",
    "SolverError",
    "ModelTemperature",
    "MinimaReport",
    "Phase",
    "MixingPrediction",
    "PhaseReport",
    "ContractionProfile",
    "cgf",
    "cgf_derivs",
    "cgf_third",
    "legendre",
    "legendre_slope",
    "free_energy",
    "rate_function",
    "minimize_g",
    "kc2",
    "k1",
    "metastable_tangency",
    "kc1",
    "wc",
    "contraction_profile",
    "classify",
    "slow_mixing_rate",
]

#: Inverse temperature of the tricritical point.
BETA_C = math.log(4.0)

_ROOT_SCAN_STOP = 1.5
_ROOT_SCAN_STEP = 1e-3


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


class SolverError(RuntimeError):
    """A root or tangency solve did not converge."""

    def __init__(self, message, bracket=None):
        if bracket is not None:
            message = f"{message} (bracket={bracket!r})"
        super().__init__(message)
        self.bracket = bracket


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite, got {value!r}")


def _check_beta(beta):
    _check_finite(beta=beta)
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta!r}")


@dataclass(frozen=True)
class ModelTemperature:
    """Inverse temperature ``beta`` and interaction strength ``k``."""

    beta: float
    k: float

    def __post_init__(self):
        for name in ("beta", "k"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be finite and positive, got {value!r}")


# ---------------------------------------------------------------------------
# cumulant generating function of the single-site law
# ---------------------------------------------------------------------------


def _site_probs(beta, t):
    """Return ``(p_minus, p_zero, p_plus, logsumexp_shift)`` for tilt ``t``."""
    t = np.asarray(t, dtype=float)
    shift = np.maximum(np.abs(t) - beta, 0.0)
    e_plus = np.exp(t - beta - shift)
    e_zero = np.exp(-shift)
    e_minus = np.exp(-t - beta - shift)
    total = e_plus + e_zero + e_minus
    return e_minus / total, e_zero / total, e_plus / total, shift + np.log(total)


def cgf(beta, t):
    """Cumulant generating function ``c_beta(t)`` of the single-site law.

    ``c_beta(t) = log[(1 + e^{-beta}(e^t + e^{-t})) / (1 + 2 e^{-beta})]``,
    evaluated in log-sum-exp form so that ``|t|`` up to ~700 is safe.
    Accepts scalars or arrays for ``t``.
    """
    _check_beta(beta)
    _check_finite(t=t)
    t = np.asarray(t, dtype=float)
    e = math.exp(-beta)
    # c = log1p(4 e^{-beta} sinh^2(t/2) / (1 + 2 e^{-beta})): exact zero at t = 0, no cancellation nearby
    small = np.abs(t) < 600.0
    ts = np.where(small, t, 0.0)
    near = np.log1p(4.0 * e * np.sinh(0.5 * ts) ** 2 / (1.0 + 2.0 * e))
    *_, log_total = _site_probs(beta, t)
    out = np.where(small, near, log_total - math.log1p(2.0 * e))
    return out if np.ndim(out) else float(out)


def cgf_derivs(beta, t):
    """Return ``(c_beta'(t), c_beta''(t))``.

    ``c'`` is the tilted mean of the spin and ``c''`` its tilted variance,
    written as ``p0 (p+ + p-) + 4 p+ p-`` which never cancels.
    """
    _check_beta(beta)
    _check_finite(t=t)
    pm, p0, pp, _ = _site_probs(beta, t)
    c1 = pp - pm
    c2 = p0 * (pp + pm) + 4.0 * pp * pm
    if np.ndim(c1) == 0:
        return float(c1), float(c2)
    return c1, c2


def cgf_third(beta, t):
    """Third derivative ``c_beta'''(t)``, the tilted third central moment."""
    _check_beta(beta)
    _check_finite(t=t)
    pm, p0, pp, _ = _site_probs(beta, t)
    mean = pp - pm
    out = pp * (p0 + 2.0 * pm) ** 3 - pm * (p0 + 2.0 * pp) ** 3 - p0 * mean**3
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Legendre-Fenchel transform and rate function
# ---------------------------------------------------------------------------


def legendre_slope(beta, z, max_iter=200):
    """Inverse of ``c_beta'``: the ``t`` at which ``c_beta'(t) = z``, ``|z| < 1``.

    Safeguarded Newton iteration on a bracket that is kept valid at every
    step; a Newton step that leaves the bracket is replaced by bisection.
    Vectorised over ``z``.
    """
    _check_beta(beta)
    z = np.asarray(z, dtype=float)
    _check_finite(z=z)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("legendre_slope needs |z| < 1")
    target = np.abs(z)
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    # grow the upper end until c'(hi) > target
    for _ in range(80):
        c1, _ = cgf_derivs(beta, hi)
        short = np.asarray(c1) <= target
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        c1, c2 = cgf_derivs(beta, t)
        resid = np.asarray(c1) - target
        lo = np.where(resid < 0, t, lo)
        hi = np.where(resid > 0, t, hi)
        step = t - resid / np.asarray(c2)
        inside = (step > lo) & (step < hi)
        t_new = np.where(inside, step, 0.5 * (lo + hi))
        done = np.abs(t_new - t) <= 1e-15 * np.maximum(1.0, np.abs(t))
        t = np.where(resid == 0, t, t_new)
        if np.all(done | (resid == 0)):
            break
    out = np.sign(z) * t
    return out if np.ndim(out) else float(out)


def legendre(beta, z):
    """Legendre-Fenchel transform ``J_beta(z) = sup_t {t z - c_beta(t)}``.

    Defined for ``|z| <= 1``; at the endpoints the supremum is the limit
    ``beta + log(1 + 2 e^{-beta})``.
    """
    _check_beta(beta)
    z = np.asarray(z, dtype=float)
    _check_finite(z=z)
    if np.any(np.abs(z) > 1.0):
        raise DomainError("J_beta is infinite for |z| > 1")
    edge = np.abs(z) == 1.0
    inner = np.where(edge, 0.0, z)
    t = np.asarray(legendre_slope(beta, inner))
    out = t * inner - np.asarray(cgf(beta, t))
    out = np.where(edge, beta + math.log1p(2.0 * math.exp(-beta)), out)
    return out if np.ndim(out) else float(out)


def free_energy(beta, k, z):
    """Free energy functional ``G_{beta,K}(z) = beta K z^2 - c_beta(2 beta K z)``."""
    ModelTemperature(beta, k)
    _check_finite(z=z)
    z = np.asarray(z, dtype=float)
    out = beta * k * z**2 - np.asarray(cgf(beta, 2.0 * beta * k * z))
    return out if np.ndim(out) else float(out)


def _free_energy_slope(beta, k, z):
    c1, _ = cgf_derivs(beta, 2.0 * beta * k * np.asarray(z, dtype=float))
    return 2.0 * beta * k * (z - c1)


def _free_energy_curvature(beta, k, z):
    _, c2 = cgf_derivs(beta, 2.0 * beta * k * np.asarray(z, dtype=float))
    return 2.0 * beta * k * (1.0 - 2.0 * beta * k * c2)


@functools.lru_cache(maxsize=256)
def _min_free_energy(beta, k, tol):
    report = minimize_g(beta, k, tol)
    return min(report.g_values)


def rate_function(beta, k, z, tol=1e-10):
    """Magnetization rate function ``I_{beta,K}(z)`` on ``[-1, 1]``.

    ``I = J_beta(z) - beta K z^2 - inf_y {J_beta(y) - beta K y^2}``; the
    infimum equals ``min G_{beta,K}`` and is computed once per ``(beta, k)``.
    """
    ModelTemperature(beta, k)
    z = np.asarray(z, dtype=float)
    out = np.asarray(legendre(beta, z)) - beta * k * z**2 - _min_free_energy(float(beta), float(k), tol)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# minimizers of the free energy
# ---------------------------------------------------------------------------


@dataclass
class MinimaReport:
    """Critical-point structure of ``G_{beta,K}`` on ``[-1, 1]``.

    ``g_values`` is aligned with ``local_minimizers``. ``degenerate`` lists
    critical points with vanishing curvature; those are classified by the
    sign of ``G'`` on either side and kept in this list so callers can see
    the classification was not a curvature test.
    """

    global_minimizers: list[float]
    local_minimizers: list[float]
    g_values: list[float]
    tolerance: float
    local_maximizers: list[float] = field(default_factory=list)
    degenerate: list[float] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _positive_critical_points(beta, k, tol):
    """Positive roots of ``z - c_beta'(2 beta K z)`` on ``(0, 1.5]``.

    Scans ``1 - c'(2 beta K z)/z`` (finite at 0), so a root just above zero
    still shows up as a sign change in the first cell.
    """
    a = 2.0 * beta * k
    grid = np.linspace(0.0, _ROOT_SCAN_STOP, int(round(_ROOT_SCAN_STOP / _ROOT_SCAN_STEP)) + 1)
    c1, c2 = cgf_derivs(beta, a * grid)
    reduced = np.empty_like(grid)
    reduced[0] = 1.0 - a * c2[0]
    reduced[1:] = 1.0 - c1[1:] / grid[1:]

    def f(z):
        return z - cgf_derivs(beta, a * z)[0]

    roots = []
    for i in range(1, len(grid)):
        left, right = reduced[i - 1], reduced[i]
        if right == 0.0:
            roots.append(float(grid[i]))
        elif left * right < 0.0:
            lo = grid[i - 1] if i > 1 else grid[1] * 1e-9
            roots.append(brentq(f, lo, grid[i], xtol=tol, rtol=4 * np.finfo(float).eps))
    return roots


def _classify_point(beta, k, z, tol):
    """Return ('min' | 'max' | 'flat', degenerate?) for a critical point."""
    curv = _free_energy_curvature(beta, k, z)
    scale = 2.0 * beta * k
    if abs(curv) > tol * scale:
        return ("min" if curv > 0 else "max"), False
    h = 1e-3
    left = _free_energy_slope(beta, k, z - h)
    right = _free_energy_slope(beta, k, z + h)
    if left < 0 < right:
        return "min", True
    if left > 0 > right:
        return "max", True
    return "flat", True


def minimize_g(beta, k, tol=1e-10):
    """Local and global minimizers of ``G_{beta,K}``.

    Critical points are roots of ``z = c_beta'(2 beta K z)`` found by a
    sign-change scan on ``[0, 1.5]`` (step ``1e-3``) refined to ``tol``,
    classified by the sign of ``G''`` and reflected to negative ``z``.
    """
    ModelTemperature(beta, k)
    if not (0 < tol <= 1e-3):
        raise DomainError(f"tol must lie in (0, 1e-3], got {tol!r}")
    candidates = [0.0] + _positive_critical_points(beta, k, tol)
    minima, maxima, degenerate = [], [], []
    for z in candidates:
        kind, flat = _classify_point(beta, k, z, tol)
        mirrored = [z] if z == 0.0 else [-z, z]
        if flat:
            degenerate.extend(mirrored)
        if kind == "min":
            minima.extend(mirrored)
        elif kind == "max":
            maxima.extend(mirrored)
    minima.sort()
    maxima.sort()
    degenerate.sort()
    g_values = [free_energy(beta, k, z) for z in minima]
    g_min = min(g_values)
    global_min = [z for z, g in zip(minima, g_values) if g <= g_min + 10.0 * tol]
    return MinimaReport(
        global_minimizers=global_min,
        local_minimizers=minima,
        g_values=g_values,
        tolerance=tol,
        local_maximizers=maxima,
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# critical curves
# ---------------------------------------------------------------------------


def kc2(beta):
    """Second-order critical curve ``(e^beta + 2) / (4 beta)`` for ``beta <= beta_c``."""
    _check_beta(beta)
    if beta > BETA_C:
        raise DomainError(f"kc2 is the transition only for beta <= log 4, got {beta!r}")
    return (math.exp(beta) + 2.0) / (4.0 * beta)


def wc(beta):
    """Inflection point ``arccosh(e^beta/2 - 4 e^{-beta})`` of ``c_beta'`` for ``beta >= beta_c``."""
    _check_beta(beta)
    arg = 0.5 * math.exp(beta) - 4.0 * math.exp(-beta)
    if beta < BETA_C or arg < 1.0 - 1e-12:
        raise DomainError(f"wc needs beta >= log 4 (argument {arg!r} < 1)")
    return math.acosh(max(arg, 1.0))


def _slope_ratio(beta, x):
    """``c_beta'(x) / x`` with its limit ``c_beta''(0)`` at ``x = 0``."""
    if x == 0.0:
        return cgf_derivs(beta, 0.0)[1]
    return cgf_derivs(beta, x)[0] / x


def _tangency_residual(beta, x):
    """``x c''(x) - c'(x)``: positive left of the ratio's maximum, negative right."""
    c1, c2 = cgf_derivs(beta, x)
    return x * c2 - c1


def _ratio_upper_bracket(beta):
    lo = wc(beta)
    hi = lo + 1.0
    while _tangency_residual(beta, hi) >= 0.0:
        hi = lo + 2.0 * (hi - lo)
        if hi > 1e3:
            raise SolverError("no upper bracket for sup c'(x)/x", (lo, hi))
    return lo, hi


def _golden_max(f, lo, hi, xtol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _k1_variational(beta):
    lo, hi = _ratio_upper_bracket(beta)
    x, sup = _golden_max(lambda s: _slope_ratio(beta, s), lo, hi, 1e-10)
    return 1.0 / (2.0 * beta * sup), x


def _k1_newton(beta, tol, max_iter=100):
    """Damped Newton on ``z = c'(2 beta K z)``, ``2 beta K c''(2 beta K z) = 1``."""
    lo, hi = _ratio_upper_bracket(beta)
    xs = np.linspace(lo, hi, 65)
    resid = np.array([_tangency_residual(beta, x) for x in xs])
    idx = int(np.argmax(resid < 0.0))
    x0 = 0.5 * (xs[idx - 1] + xs[idx]) if idx > 0 else xs[0]
    z = cgf_derivs(beta, x0)[0]
    kk = x0 / (2.0 * beta * z)

    def residual(z, kk):
        x = 2.0 * beta * kk * z
        c1, c2 = cgf_derivs(beta, x)
        return np.array([z - c1, 2.0 * beta * kk * c2 - 1.0])

    r = residual(z, kk)
    for _ in range(max_iter):
        x = 2.0 * beta * kk * z
        _, c2 = cgf_derivs(beta, x)
        c3 = cgf_third(beta, x)
        a = 2.0 * beta * kk
        jac = np.array(
            [
                [1.0 - a * c2, -2.0 * beta * z * c2],
                [a * a * c3, 2.0 * beta * c2 + a * 2.0 * beta * z * c3],
            ]
        )
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None
        damp = 1.0
        while damp > 1e-6:
            z_new, k_new = z + damp * step[0], kk + damp * step[1]
            if z_new > 0 and k_new > 0:
                r_new = residual(z_new, k_new)
                if np.linalg.norm(r_new) < np.linalg.norm(r) or np.linalg.norm(r_new) < 1e-15:
                    break
            damp *= 0.5
        else:
            return None
        z, kk, r = z_new, k_new, r_new
        if abs(damp * step[1]) <= tol * 1e-2 * kk and np.linalg.norm(r) < 1e-12:
            return kk, z
    return None


def metastable_tangency(beta, tol=1e-8):
    """Return ``(K_1(beta), z*)``: the metastable critical value and the tangency point.

    Solved twice: damped Newton on the 2x2 tangency system, and golden-section
    on ``sup_{x>0} c_beta'(x)/x = 1/(2 beta K_1)``. If Newton fails the
    variational value is refined by bisection on ``x c''(x) = c'(x)``.
    """
    _check_beta(beta)
    if beta <= BETA_C:
        raise DomainError(f"K_1 exists only for beta > log 4, got {beta!r}")
    k_var, x_var = _k1_variational(beta)
    newton = _k1_newton(beta, tol)
    if newton is None:
        lo, hi = _ratio_upper_bracket(beta)
        x_star = brentq(lambda x: _tangency_residual(beta, x), lo, hi, xtol=1e-14)
        newton = (1.0 / (2.0 * beta * _slope_ratio(beta, x_star)), cgf_derivs(beta, x_star)[0])
    k_newton, z_star = newton
    if abs(k_newton - k_var) > 10.0 * tol:
        raise SolverError(
            f"K_1 routes disagree at beta={beta}: newton={k_newton!r}, variational={k_var!r}",
            (k_newton, k_var),
        )
    return float(k_newton), float(z_star)


@functools.lru_cache(maxsize=512)
def k1(beta, tol=1e-8):
    """Metastable critical value ``K_1(beta)`` for ``beta > beta_c``."""
    return metastable_tangency(beta, tol)[0]


def _metastable_minimum(beta, k, x_star):
    """Positive local minimizer of ``G_{beta,K}`` for ``K > K_1(beta)``.

    It is ``x/(2 beta K)`` where ``x > x*`` solves ``c'(x)/x = 1/(2 beta K)``;
    the ratio is strictly decreasing beyond its maximizer ``x*``.
    """
    target = 1.0 / (2.0 * beta * k)
    hi = x_star + 1.0
    while _slope_ratio(beta, hi) > target:
        hi *= 2.0
    x = brentq(lambda s: _slope_ratio(beta, s) - target, x_star, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return x / (2.0 * beta * k)


@functools.lru_cache(maxsize=512)
def kc1(beta, tol=1e-10):
    """First-order critical curve ``K_c^(1)(beta)`` for ``beta > beta_c``.

    The value of ``K > K_1(beta)`` at which the positive local minimum of
    ``G_{beta,K}`` is exactly as deep as the one at zero (``G = 0``).
    """
    k_meta, z_star = metastable_tangency(beta)
    x_star = 2.0 * beta * k_meta * z_star

    def depth(kk):
        return free_energy(beta, kk, _metastable_minimum(beta, kk, x_star))

    lo = k_meta * (1.0 + 1e-9)
    hi = k_meta + 1.0
    if depth(lo) <= 0.0:
        raise SolverError(f"metastable well not above zero at K_1(beta={beta})", (lo, hi))
    while depth(hi) >= 0.0:
        hi = lo + 2.0 * (hi - lo)
        if hi > 1e3:
            raise SolverError(f"no sign change of the well depth at beta={beta}", (lo, hi))
    return float(brentq(depth, lo, hi, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps))


# ---------------------------------------------------------------------------
# contraction coefficients and classification
# ---------------------------------------------------------------------------


@dataclass
class ContractionProfile:
    """Local and aggregate contraction coefficients on a magnetization grid.

    ``local > 1`` means neighbouring pairs at that magnetization expand under
    the threshold coupling; ``aggregate < 1`` means a pair joined to the zero
    magnetization contracts in aggregate.
    """

    beta: float
    k: float
    z: np.ndarray
    local: np.ndarray
    aggregate: np.ndarray

    @property
    def local_expands(self):
        return self.local > 1.0

    @property
    def aggregate_contracts(self):
        return self.aggregate < 1.0

    def rows(self):
        for z, loc, agg in zip(self.z, self.local, self.aggregate):
            yield {
                "beta": self.beta,
                "k": self.k,
                "z": float(z),
                "local": float(loc),
                "aggregate": float(agg),
                "local_expands": bool(loc > 1.0),
                "aggregate_contracts": bool(agg < 1.0),
            }


def contraction_profile(beta, k, grid):
    """Evaluate ``2 beta K c''(2 beta K z)`` and ``c'(2 beta K z) / z`` on ``grid``."""
    ModelTemperature(beta, k)
    z = np.asarray(grid, dtype=float)
    if np.any(z <= 0) or np.any(z > 1):
        raise DomainError("contraction grid points must lie in (0, 1]")
    a = 2.0 * beta * k
    c1, c2 = cgf_derivs(beta, a * z)
    return ContractionProfile(beta, k, z, a * np.asarray(c2), np.asarray(c1) / z)


class Phase(str, enum.Enum):
    SINGLE_PHASE = "SinglePhase"
    SECOND_ORDER_CRITICAL = "SecondOrderCritical"
    TWO_PHASE = "TwoPhase"
    METASTABLE_SINGLE_PHASE = "MetastableSinglePhase"
    FIRST_ORDER_COEXISTENCE = "FirstOrderCoexistence"


class MixingPrediction(str, enum.Enum):
    RAPID = "Rapid"
    SLOW = "Slow"
    BOUNDARY = "Boundary"


@dataclass
class PhaseReport:
    beta: float
    k: float
    minima: MinimaReport
    kc2: float | None
    k1: float | None
    kc1: float | None
    wc: float | None
    phase: Phase
    mixing_prediction: MixingPrediction
    alpha_max: float

    def to_dict(self):
        out = asdict(self)
        out["phase"] = self.phase.value
        out["mixing_prediction"] = self.mixing_prediction.value
        return out


def _boundary_band(tol, value):
    return max(10.0 * tol, 1e-8) * max(1.0, abs(value))


def classify(beta, k, tol=1e-10):
    """Phase label, curve values and predicted mixing regime at ``(beta, k)``."""
    ModelTemperature(beta, k)
    minima = minimize_g(beta, k, tol)
    kc2_val = k1_val = kc1_val = wc_val = None
    if beta <= BETA_C:
        kc2_val = kc2(beta)
        if beta == BETA_C:
            wc_val = wc(beta)
        band = _boundary_band(tol, kc2_val)
        if abs(k - kc2_val) <= band:
            phase, mixing, alpha = Phase.SECOND_ORDER_CRITICAL, MixingPrediction.BOUNDARY, 0.0
        elif k < kc2_val:
            phase, mixing = Phase.SINGLE_PHASE, MixingPrediction.RAPID
            alpha = (kc2_val - k) / kc2_val
        else:
            phase, mixing, alpha = Phase.TWO_PHASE, MixingPrediction.SLOW, 0.0
    else:
        k1_val, kc1_val, wc_val = k1(beta), kc1(beta), wc(beta)
        band1 = _boundary_band(tol, k1_val)
        if abs(k - k1_val) <= band1:
            mixing, alpha = MixingPrediction.BOUNDARY, 0.0
        elif k < k1_val:
            mixing, alpha = MixingPrediction.RAPID, (k1_val - k) / k1_val
        else:
            mixing, alpha = MixingPrediction.SLOW, 0.0
        if abs(k - kc1_val) <= _boundary_band(tol, kc1_val):
            phase = Phase.FIRST_ORDER_COEXISTENCE
        elif k > kc1_val:
            phase = Phase.TWO_PHASE
        elif k > k1_val + band1:
            phase = Phase.METASTABLE_SINGLE_PHASE
        else:
            phase = Phase.SINGLE_PHASE
    return PhaseReport(
        beta=beta,
        k=k,
        minima=minima,
        kc2=kc2_val,
        k1=k1_val,
        kc1=kc1_val,
        wc=wc_val,
        phase=phase,
        mixing_prediction=mixing,
        alpha_max=alpha,
    )


def slow_mixing_rate(beta, k, tol=1e-10):
    """Exponential bottleneck rate ``I(z') - I(z~)`` when ``G`` has a positive local minimum.

    ``z~`` is the outermost positive local minimizer and ``z'`` the largest
    local maximizer in ``[0, z~)``. Returns ``(z', z~, rate)``, or ``None``
    when no positive local minimum exists (no bottleneck, rapid mixing).
    """
    report = minimize_g(beta, k, tol)
    positive = [z for z in report.local_minimizers if z > 0]
    if not positive:
        return None
    z_tilde = max(positive)
    below = [z for z in report.local_maximizers if 0 <= z < z_tilde]
    z_prime = max(below) if below else 0.0
    rate = rate_function(beta, k, z_prime, tol) - rate_function(beta, k, z_tilde, tol)
    return z_prime, z_tilde, float(rate)
