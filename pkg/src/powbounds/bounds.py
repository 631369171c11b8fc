"""Analytic latency-security bounds for longest-chain proof-of-work consensus.

Covers the achievable (upper) and unachievable (lower) violation-probability
bounds with and without propagation delay, the general renewal-vs-Poisson race
bound, chain growth and liveness bounds, and the confirmation depth/time
conversion.

All public operations take times in seconds and rates in blocks per second.
The delay-bound theorems normalize time by the propagation delay bound
internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .distributions import (
    PowerSeries,
    erlang_ccdf_vec,
    erlang_cdf,
    geometric_sum_ccdf,
    log_poisson_pmf_vec,
    poisson_pmf,
    series_div,
    series_exp_affine,
    series_from_poly,
    series_mul,
    skellam_pmf,
)
from .errors import BracketError, InfeasibleParametersError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ProtocolParams:
    """Mining model: honest rate alpha, adversarial rate beta (blocks/s), delay bound delta (s)."""

    alpha: float
    beta: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"honest rate must be positive, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"adversarial rate must be nonnegative, got {self.beta}")
        if self.delta < 0:
            raise ValueError(f"delay bound must be nonnegative, got {self.delta}")

    @classmethod
    def from_adversary_share(cls, total_rate: float, share: float, delta: float) -> "ProtocolParams":
        """Split a total mining rate into honest/adversarial parts."""
        if not 0 <= share < 1:
            raise ValueError(f"adversarial share must be in [0,1), got {share}")
        return cls(alpha=(1.0 - share) * total_rate, beta=share * total_rate, delta=delta)

    @property
    def total_rate(self) -> float:
        return self.alpha + self.beta


@dataclass(frozen=True)
class BoundResult:
    """A probability bound plus diagnostics from its evaluation."""

    raw_value: float
    probability: float
    optimizer_v: Optional[float] = None
    theta: Optional[float] = None
    truncation_tail: float = 0.0

    @classmethod
    def from_raw(cls, raw: float, **kw) -> "BoundResult":
        return cls(raw_value=raw, probability=min(max(raw, 0.0), 1.0), **kw)


@dataclass(frozen=True)
class RaceSpec:
    """Renewal-vs-Poisson race window: head start mu, tail extension nu, advantage n, duration t.

    All times are in the renewal process's (normalized) time unit.
    """

    mu: float = 0.0
    nu: float = 0.0
    n: int = 0
    t: float = 1.0

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0 or self.n < 0:
            raise ValueError("mu, nu and n must be nonnegative")
        if not self.t > 0:
            raise ValueError(f"race duration must be positive, got {self.t}")


@dataclass(frozen=True)
class Mgf:
    """Moment generating function of a renewal time, with its convergence limit and mean."""

    eval: Callable[[float], float]
    roc_sup: float
    mean: float


# ---------------------------------------------------------------------------
# zero-delay theorems


def _require_minority(params: ProtocolParams):
    if params.beta >= params.alpha:
        raise InfeasibleParametersError(
            f"requires beta < alpha (got alpha={params.alpha}, beta={params.beta})"
        )


def zero_delay_upper(params: ProtocolParams, t: float) -> BoundResult:
    """Achievable security level for the zero-delay race between two Poisson processes.

    (1 + sqrt(beta/alpha))^2 * exp(-(sqrt(alpha) - sqrt(beta))^2 t)
    """
    _require_minority(params)
    a, b = params.alpha, params.beta
    prefactor = (1.0 + math.sqrt(b / a)) ** 2
    raw = prefactor * math.exp(-((math.sqrt(a) - math.sqrt(b)) ** 2) * t)
    return BoundResult.from_raw(raw)


def zero_delay_lower(params: ProtocolParams, t: float, k_max: int = 512) -> BoundResult:
    """Success probability of the private attack with zero delay (unachievable level).

    sum_k skellam(k-1; alpha t, beta t) (beta/alpha)^k (1 + k (1 - beta/alpha)).
    Truncation discards nonnegative terms only, so the partial sum stays a
    valid unachievable level.
    """
    _require_minority(params)
    a, b = params.alpha, params.beta
    if b == 0:
        return BoundResult.from_raw(0.0)
    r = b / a
    total = 0.0
    last = 0.0
    for k in range(k_max + 1):
        last = skellam_pmf(k - 1, a * t, b * t) * geometric_sum_ccdf(k, r)
        total += last
    tail = last * r / (1.0 - r)  # geometric envelope on the discarded terms
    return BoundResult.from_raw(total, truncation_tail=tail)


# ---------------------------------------------------------------------------
# delay-bound machinery (normalized units: one time unit = one delay bound)


def _g_norm(u, a):
    """Denominator polynomial-exponential g_a(u) = u^2 - a u - a u e^{u-a} + a^2 e^{2(u-a)}."""
    u = np.asarray(u, dtype=float)
    return u * u - a * u - a * u * np.exp(u - a) + a * a * np.exp(2.0 * (u - a))


def _smallest_root_norm(a: float) -> float:
    """Smallest positive zero of g_a on (0, a].

    g_a(0) > 0 and g_a(a) = 0 with positive slope, so the first zero sits at
    the left edge of a narrow negative dip just below a (width of order a^2
    for small a).  A uniform grid alone can miss it, hence the geometric
    refinement toward a.
    """
    grid = np.unique(
        np.concatenate(
            [
                np.linspace(0.0, a, 8193)[1:-1],
                a * (1.0 - 0.5 ** np.arange(1, 53)),
            ]
        )
    )
    vals = _g_norm(grid, a)
    neg = np.flatnonzero(vals < 0.0)
    if neg.size == 0:
        return a
    i = neg[0]
    lo = grid[i - 1] if i > 0 else 0.0
    hi = grid[i]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _g_norm(mid, a) < 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def _zeta_norm(u, a):
    """phi(u) - 1 for the inter-double-lagger MGF in normalized units."""
    u = np.asarray(u, dtype=float)
    return (a * u - u * u) / _g_norm(u, a)


def g_denominator(v: float, params: ProtocolParams) -> float:
    """Denominator of the delay-bound rate function, in original time units."""
    a, d = params.alpha, params.delta
    return v * v - a * v - a * v * math.exp((v - a) * d) + a * a * math.exp(2.0 * (v - a) * d)


def find_theta(params: ProtocolParams) -> float:
    """Smallest positive zero of ``g_denominator`` (per-second rate)."""
    if params.delta == 0:
        # g degenerates to (v - alpha)^2
        return params.alpha
    return _smallest_root_norm(params.alpha * params.delta) / params.delta


def eta(v: float, params: ProtocolParams) -> float:
    """Expected adversarial matching cost rate (alpha v - v^2) / g(v); domain (0, theta)."""
    theta = find_theta(params)
    if not 0 < v < theta:
        raise ValueError(f"v must lie in (0, theta={theta}), got {v}")
    return float(_zeta_norm(v * params.delta, params.alpha * params.delta))


def double_lagger_mgf(alpha_norm: float) -> Mgf:
    """MGF of the inter-double-lagger time at normalized honest rate alpha_norm.

    phi(u) = 1 + (a u - u^2) / g_a(u), convergent on (-inf, u0) where u0 is
    the smallest positive zero of g_a; mean e^{2a} / a.
    """
    if not alpha_norm > 0:
        raise ValueError(f"normalized rate must be positive, got {alpha_norm}")
    a = alpha_norm
    u0 = _smallest_root_norm(a)

    def phi(u: float) -> float:
        if u >= u0:
            raise ValueError(f"MGF argument {u} outside region of convergence (-inf, {u0})")
        return 1.0 + float(_zeta_norm(u, a))

    return Mgf(eval=phi, roc_sup=u0, mean=math.exp(2.0 * a) / a)


def renewal_race_bound(mgf: Mgf, beta: float, spec: RaceSpec, u: float) -> BoundResult:
    """Chernoff bound on a renewal process losing a race against a Poisson process.

    exp((phi(u)-1) beta (mu+nu)) phi(u)^{n+1} L^2(phi(u)) exp(-psi(u) t)
    with psi(u) = u + beta - beta phi(u) and L the transform of the maximum
    post-window deficit.  All quantities in the renewal time unit.
    """
    if beta < 0:
        raise ValueError(f"Poisson rate must be nonnegative, got {beta}")
    if not 0 < u < mgf.roc_sup:
        raise ValueError(f"u must lie in (0, {mgf.roc_sup}), got {u}")
    phi_u = mgf.eval(u)
    if beta == 0:
        lap = 1.0  # limit of L(r) as the Poisson rate vanishes
    else:
        arg = beta * (phi_u - 1.0)
        if arg >= mgf.roc_sup:
            raise ValueError(
                f"nested MGF argument {arg} outside region of convergence (-inf, {mgf.roc_sup})"
            )
        lap = (phi_u - 1.0) * (1.0 - beta * mgf.mean) / (phi_u / mgf.eval(arg) - 1.0)
    psi = u + beta - beta * phi_u
    log_raw = (
        (phi_u - 1.0) * beta * (spec.mu + spec.nu)
        + (spec.n + 1) * math.log(phi_u)
        + 2.0 * math.log(abs(lap))
        - psi * spec.t
    )
    raw = math.exp(log_raw) if log_raw < 700 else math.inf
    return BoundResult.from_raw(raw, optimizer_v=u)


def _delay_feasible(params: ProtocolParams):
    if params.delta <= 0:
        raise ValueError("delay-bound theorems require delta > 0; use the zero-delay forms")
    a, b, d = params.alpha, params.beta, params.delta
    if b >= a * math.exp(-2.0 * a * d):
        raise InfeasibleParametersError(
            "requires beta < alpha * exp(-2 alpha delta) "
            f"(beta={b}, alpha*exp(-2 alpha delta)={a * math.exp(-2.0 * a * d)})"
        )


def _delay_log_objective(u, a, b, u0):
    """log of c^2(u) e^{-psi(u) t} without the -psi t part: returns (log c^2, psi).

    Vectorized over u (normalized units).  Inadmissible points come back nan.
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(all="ignore"):
        z = _zeta_norm(u, a)
        w = z * b
        ok = (u > 0) & (u < u0) & (z > 0) & (w > 0) & (w < u0)
        zw = np.where(ok, _zeta_norm(np.where(ok, w, 0.5 * u0), a), np.nan)
        bracket = 1.0 / (1.0 + zw) - 1.0 / (1.0 + z)
        ok &= bracket > 0
        c = np.exp(w) * (1.0 - (b / a) * math.exp(2.0 * a)) * z / bracket
        ok &= c > 0
        log_c2 = np.where(ok, 2.0 * np.log(np.where(ok, c, 1.0)), np.nan)
        psi = np.where(ok, u - w, np.nan)
    return log_c2, psi


def delay_upper_objective(params: ProtocolParams, v: float, t: float) -> float:
    """The per-v objective c^2(v) exp(-(v - eta(v) beta) t) of the delay-bound theorem."""
    _delay_feasible(params)
    a, b, d = params.alpha * params.delta, params.beta * params.delta, params.delta
    u0 = _smallest_root_norm(a)
    log_c2, psi = _delay_log_objective(np.array([v * d]), a, b, u0)
    if math.isnan(log_c2[0]):
        raise ValueError(f"v={v} is outside the admissible interval")
    return float(np.exp(log_c2[0] - psi[0] * (t / d)))


def _minimize_log_objective(a, b, u0, tau):
    """Coarse grid plus golden-section refinement of log c^2(u) - psi(u) tau."""
    us = u0 * np.arange(1, 512) / 512.0
    log_c2, psi = _delay_log_objective(us, a, b, u0)
    obj = log_c2 - psi * tau
    finite = np.isfinite(obj)
    if not finite.any():
        raise BracketError("no admissible point for the delay-bound optimization")
    i = int(np.nanargmin(np.where(finite, obj, np.nan)))

    def f(u):
        lc, ps = _delay_log_objective(np.array([u]), a, b, u0)
        val = lc[0] - ps[0] * tau
        return val if math.isfinite(val) else math.inf

    lo = us[i - 1] if i > 0 else 0.0
    hi = us[i + 1] if i < us.size - 1 else u0
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(100):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        if hi - lo <= 1e-12 * u0:
            break
    u_best = x1 if f1 <= f2 else x2
    return u_best, min(f1, f2)


def delay_upper(params: ProtocolParams, t: float) -> BoundResult:
    """Achievable security level with propagation delay (minimized over the Chernoff rate)."""
    _delay_feasible(params)
    d = params.delta
    a, b = params.alpha * d, params.beta * d
    u0 = _smallest_root_norm(a)
    u_best, log_obj = _minimize_log_objective(a, b, u0, t / d)
    raw = math.exp(log_obj) if log_obj < 700 else math.inf
    return BoundResult.from_raw(raw, optimizer_v=u_best / d, theta=u0 / d)


def delay_upper_universal(params: ProtocolParams, t: float) -> BoundResult:
    """Weaker t-independent-exponent variant: evaluates at the u maximizing u - eta(u) beta."""
    _delay_feasible(params)
    d = params.delta
    a, b = params.alpha * d, params.beta * d
    u0 = _smallest_root_norm(a)

    def neg_psi(u):
        _, psi = _delay_log_objective(np.array([u]), a, b, u0)
        return -psi[0] if math.isfinite(psi[0]) else math.inf

    us = u0 * np.arange(1, 512) / 512.0
    _, psis = _delay_log_objective(us, a, b, u0)
    if not np.isfinite(psis).any():
        raise BracketError("no admissible point for the exponent maximization")
    i = int(np.nanargmax(np.where(np.isfinite(psis), psis, np.nan)))
    lo = us[i - 1] if i > 0 else 0.0
    hi = us[i + 1] if i < us.size - 1 else u0
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = neg_psi(x1), neg_psi(x2)
    for _ in range(100):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = neg_psi(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = neg_psi(x2)
        if hi - lo <= 1e-12 * u0:
            break
    u_best = x1 if f1 <= f2 else x2
    log_c2, psi = _delay_log_objective(np.array([u_best]), a, b, u0)
    log_obj = log_c2[0] - psi[0] * (t / d)
    raw = math.exp(log_obj) if log_obj < 700 else math.inf
    return BoundResult.from_raw(raw, optimizer_v=u_best / d, theta=u0 / d)


# ---------------------------------------------------------------------------
# private-attack lower bound with delay


def postmine_gain_pmf(params: ProtocolParams, n_max: int = 128) -> np.ndarray:
    """pmf q(0..n_max) of the attacker's post-mining gain against the jumper chain.

    Extracted as Taylor coefficients of the deficit transform
    xi(rho) = (1-rho)(a-b-ab) / (a - e^{(1-rho)b} (a+b-b rho) rho)
    in normalized units a = alpha*delta, b = beta*delta.
    """
    if params.delta <= 0:
        raise ValueError("post-mining gain pmf requires delta > 0")
    a = params.alpha * params.delta
    b = params.beta * params.delta
    if a - b - a * b <= 0:
        raise InfeasibleParametersError(
            f"requires alpha - beta - alpha*beta*delta > 0 (normalized a-b-ab={a - b - a * b})"
        )
    order = n_max + 1
    num = series_from_poly([a - b - a * b, -(a - b - a * b)], order)
    expo = series_exp_affine(b, -b, order)  # e^{(1-rho) b}
    poly = series_from_poly([0.0, a + b, -b], order)  # (a+b-b rho) rho
    den_coeffs = -series_mul(expo, poly).coeffs
    den_coeffs[0] += a
    xi = series_div(num, PowerSeries(den_coeffs))
    q = np.empty(n_max + 1)
    q[0] = xi.coeffs[0] + xi.coeffs[1]
    q[1:] = xi.coeffs[2 : n_max + 2]
    return q


def delay_lower(
    params: ProtocolParams, t: float, n_max: int = 128, k_max: int = 512
) -> BoundResult:
    """Success probability of the delay-manipulating private attack (unachievable level).

    sum_{n,k, n+k>0} q(n) P(A_{0,t}+L = k) ErlangCCDF(t-(n+k)delta; n+k, alpha),
    with P(A_{0,t}+L = k) evaluated as the geometric-Poisson convolution so no
    e^{(alpha-beta)t} factor is ever formed.  Partial sums remain valid
    unachievable levels.
    """
    _require_minority(params)
    q = postmine_gain_pmf(params, n_max)
    if q.min() < -1e-9:
        raise InfeasibleParametersError(
            "post-mining gain transform produced materially negative pmf values"
        )
    r = params.beta / params.alpha
    ks = np.arange(k_max + 1)
    geo = (1.0 - r) * r**ks
    pois = np.exp(log_poisson_pmf_vec(ks, params.beta * t))
    pk = np.convolve(geo, pois)[: k_max + 1]
    s = np.convolve(q, pk)  # s[m] = sum_{n+k=m} q(n) pk(k)
    m = np.arange(1, s.size)
    ccdf = erlang_ccdf_vec(t - m * params.delta, m, params.alpha)
    raw = float(np.dot(s[1:], ccdf))  # m = 0 term (n = k = 0) is excluded
    tail = float((1.0 - pois.sum()) + (1.0 - geo.sum()) + max(0.0, 1.0 - q.sum()))
    return BoundResult.from_raw(raw, truncation_tail=tail)


# ---------------------------------------------------------------------------
# growth, liveness, depth conversion, inversion


def growth_bound(params: ProtocolParams, n: int, t: float) -> float:
    """Lower bound on P(every honest chain grows by >= n blocks over t seconds)."""
    if n < 1:
        raise ValueError(f"block count must be >= 1, got {n}")
    x = t - (n + 1) * params.delta
    if x <= 0:
        return 0.0
    return erlang_cdf(x, n, params.alpha)


def liveness_bound(params: ProtocolParams, n: int, t: float) -> float:
    """Lower bound on P(>= n honest blocks from (s, s+t] enter every honest chain)."""
    if n < 1:
        raise ValueError(f"block count must be >= 1, got {n}")
    if t <= params.delta:
        raise ValueError("liveness bound requires t > delta")
    a, b, d = params.alpha, params.beta, params.delta
    total = 0.0
    cum = 0.0
    i = 0
    while True:
        p = poisson_pmf(i, b * t)
        x = t - (i + n + 1) * d
        if x > 0:
            total += p * erlang_cdf(x, i + n, a)
        cum += p
        i += 1
        if 1.0 - cum < 1e-15 and i > b * t:
            break
    return total


def depth_from_time(params: ProtocolParams, tau: float, eps: float) -> int:
    """Confirmation depth whose observation implies >= tau seconds elapsed except w.p. eps."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must be in (0,1), got {eps}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    lam = params.total_rate * tau
    k = 1
    cap = int(lam + 60.0 * math.sqrt(lam + 1.0) + 1000)
    while k <= cap:
        if special.gammainc(k, lam) <= eps:  # upper Poisson tail P(X >= k)
            return k
        k += 1
    raise BracketError("confirmation depth search did not terminate")


def invert_latency(
    bound_fn: Callable[[ProtocolParams, float], BoundResult],
    params: ProtocolParams,
    eps: float,
) -> int:
    """Smallest whole-second latency t with bound_fn(params, t).probability <= eps."""
    if not 0 < eps < 1:
        raise ValueError(f"target level must be in (0,1), got {eps}")

    def f(t):
        return bound_fn(params, t).probability

    hi = 600
    while f(hi) > eps:
        hi *= 2
        if hi > 2**40:
            raise BracketError("latency target unreachable within the search horizon")
    lo = 0  # f may already be <= eps at tiny t
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi
