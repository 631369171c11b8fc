"""Monte Carlo engine for the two-Poisson mining model.

Generates mining traces, classifies honest blocks into species (laggers,
loners, double-laggers, jumpers), replays the private attack with maximal
delay manipulation, and measures existential race-loss frequencies.  Serves
as an independent oracle for the analytic bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import ProtocolParams, RaceSpec
from .errors import InsufficientDataError

_STOP_GAP = 60  # random-walk pursuit abandoned once this far behind its peak


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign: model parameters, time window, trial plan."""

    params: ProtocolParams
    horizon: float
    warmup_s: float = 0.0
    trials: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.warmup_s < self.horizon:
            raise ValueError("need horizon > warmup_s >= 0")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class MiningTrace:
    """Arrival times of honest and adversarial blocks over [0, horizon]."""

    honest_times: np.ndarray
    adversarial_times: np.ndarray
    horizon: float

    def dump_lines(self):
        """One tab-separated line per block, merged in time order."""
        merged = [(t, "honest") for t in self.honest_times]
        merged += [(t, "adversarial") for t in self.adversarial_times]
        merged.sort()
        for t, kind in merged:
            yield f"{t:.6f}\t{kind}"


@dataclass(frozen=True)
class SpeciesCounts:
    """Per-interval block census: honest, adversarial, jumpers, laggers, double-laggers, loners."""

    H: int
    A: int
    J: int
    X: int
    V: int
    Y: int


@dataclass(frozen=True)
class AttackOutcome:
    premine_gain_L: int
    race_deficit: int
    postmine_gain_N: int
    success: bool


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo point estimate with its standard error."""

    value: float
    stderr: float
    trials: int


def _trial_rng(config: SimConfig, trial: int) -> np.random.Generator:
    # scheduling-independent determinism: every trial hashes its own seed
    return np.random.default_rng(np.random.SeedSequence([config.master_seed, trial]))


def _poisson_arrivals(rng, rate: float, horizon: float) -> np.ndarray:
    if rate == 0 or horizon <= 0:
        return np.empty(0)
    times = []
    t = 0.0
    n = int(rate * horizon + 10.0 * math.sqrt(rate * horizon + 1.0) + 50.0)
    while t < horizon:
        gaps = rng.exponential(1.0 / rate, n)
        arr = t + np.cumsum(gaps)
        times.append(arr)
        t = arr[-1]
    all_times = np.concatenate(times)
    return all_times[all_times <= horizon]


def generate_trace(config: SimConfig, trial: int) -> MiningTrace:
    """Two independent Poisson streams at rates alpha and beta, deterministic per (seed, trial)."""
    rng = _trial_rng(config, trial)
    h = _poisson_arrivals(rng, config.params.alpha, config.horizon)
    a = _poisson_arrivals(rng, config.params.beta, config.horizon)
    return MiningTrace(honest_times=h, adversarial_times=a, horizon=config.horizon)


# ---------------------------------------------------------------------------
# species classification


def _species_masks(h: np.ndarray, delta: float, horizon: float):
    """Boolean masks (lagger, loner, double_lagger) aligned with honest times.

    The genesis block at time 0 acts as the 0-th lagger for gap purposes.
    Blocks within delta of the horizon are excluded from the loner mask
    (their future window is unobserved).
    """
    prev_gap = np.diff(h, prepend=0.0)
    next_gap = np.diff(h, append=np.inf)
    lagger = prev_gap > delta
    loner = lagger & (next_gap > delta) & (h <= horizon - delta)
    double_lagger = np.zeros_like(lagger)
    double_lagger[1:] = loner[:-1]
    return lagger, loner, double_lagger


def _jumper_times(h: np.ndarray, delta: float) -> np.ndarray:
    """Arrival times of jumpers (genesis at 0 is the 0-th jumper, not listed)."""
    out = []
    prev = 0.0
    i = 0
    while True:
        i = int(np.searchsorted(h, prev + delta, side="right"))
        if i >= h.size:
            break
        prev = h[i]
        out.append(prev)
        i += 1
    return np.asarray(out)


def species_times(trace: MiningTrace, delta: float, species: str) -> np.ndarray:
    """Arrival times of one block species over the whole trace."""
    h = trace.honest_times
    if species == "honest":
        return h
    if species == "adversarial":
        return trace.adversarial_times
    if species == "jumper":
        return _jumper_times(h, delta)
    lagger, loner, dl = _species_masks(h, delta, trace.horizon)
    mask = {"lagger": lagger, "loner": loner, "double-lagger": dl}.get(species)
    if mask is None:
        raise ValueError(f"unknown species {species!r}")
    return h[mask]


def classify_species(trace: MiningTrace, delta: float, interval: tuple) -> SpeciesCounts:
    """Count each species over (lo, hi] per the census semantics."""
    lo, hi = interval
    if not 0 <= lo < hi <= trace.horizon:
        raise ValueError(f"interval {interval} not within [0, {trace.horizon}]")

    def count(times):
        return int(np.searchsorted(times, hi, "right") - np.searchsorted(times, lo, "right"))

    h = trace.honest_times
    lagger, loner, dl = _species_masks(h, delta, trace.horizon)
    return SpeciesCounts(
        H=count(h),
        A=count(trace.adversarial_times),
        J=count(_jumper_times(h, delta)),
        X=count(h[lagger]),
        V=count(h[dl]),
        Y=count(h[loner]),
    )


# ---------------------------------------------------------------------------
# empirical statistics


def empirical_mgf(samples: np.ndarray, u: float) -> Estimate:
    """Sample MGF mean(e^{u X}) with a jackknife standard error."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 1000:
        raise InsufficientDataError(f"need at least 1000 samples, got {n}")
    vals = np.exp(u * samples)
    total = float(vals.sum())
    # leave-one-out means
    loo = (total - vals) / (n - 1)
    center = loo.mean()
    se = math.sqrt((n - 1) / n * float(np.sum((loo - center) ** 2)))
    return Estimate(value=total / n, stderr=se, trials=n)


def _max_pursuit_gain(rng, up_rate: float, down_rate: float, horizon: float,
                      first_down_extra: float = 0.0, down_spacing: float = 0.0) -> int:
    """Maximum of (up-count minus down-count) over [0, horizon], floored at 0.

    Up events are Poisson(up_rate).  Down events renew with gaps
    down_spacing + Exp(down_rate) (first gap first_down_extra + Exp).
    Abandons early once the walk falls _STOP_GAP below its running maximum.
    """
    best = 0
    cur = 0
    t_up = rng.exponential(1.0 / up_rate) if up_rate > 0 else math.inf
    t_down = first_down_extra + rng.exponential(1.0 / down_rate)
    while True:
        if t_up <= t_down:
            if t_up > horizon:
                break
            cur += 1
            if cur > best:
                best = cur
            t_up += rng.exponential(1.0 / up_rate)
        else:
            if t_down > horizon:
                break
            cur -= 1
            if best - cur >= _STOP_GAP:
                break
            t_down += down_spacing + rng.exponential(1.0 / down_rate)
    return best


def _premine_gain(rng, params: ProtocolParams, warmup_s: float) -> int:
    """Lead of the pre-mining birth-death process (birth beta, death alpha) after warmup."""
    if params.beta == 0 or warmup_s <= 0:
        return 0
    rate = params.total_rate
    n = rng.poisson(rate * warmup_s)
    if n == 0:
        return 0
    steps = np.where(rng.random(n) < params.beta / rate, 1, -1)
    s = np.cumsum(steps)
    # reflected walk at 0: final state = S_n - min(0, min_k S_k)
    return int(s[-1] - min(0, int(s.min())))


def run_private_attack(
    config: SimConfig, t: float, post_horizon: Optional[float] = None, trial: int = 0
) -> AttackOutcome:
    """Replay one trial of the private attack with maximal delay manipulation.

    The attacker pre-mines during the warmup, races the honest chain over
    (0, t], then keeps mining in private hoping to catch up within the
    post-horizon (default 20/(alpha-beta); truncation loses a geometric tail).
    """
    p = config.params
    if post_horizon is None:
        post_horizon = 20.0 / (p.alpha - p.beta) if p.alpha > p.beta else config.horizon
    rng = _trial_rng(config, trial)
    big_l = _premine_gain(rng, p, config.warmup_s)
    adv = int(rng.poisson(p.beta * t))
    if p.delta == 0:
        honest = int(rng.poisson(p.alpha * t))
        n_post = (
            _max_pursuit_gain(rng, p.beta, p.alpha, post_horizon) if p.beta > 0 else 0
        )
        deficit = honest + 1 - adv
        success = deficit <= big_l + n_post
    else:
        h = _poisson_arrivals(rng, p.alpha, t)
        jumpers = _jumper_times(h, p.delta).size
        # one count is forfeited for decoupling the post-race jumpers from the
        # in-race ones, matching the analytic lower bound's accounting
        n_post = (
            max(
                0,
                _max_pursuit_gain(
                    rng, p.beta, p.alpha, post_horizon,
                    first_down_extra=p.delta, down_spacing=p.delta,
                )
                - 1,
            )
            if p.beta > 0
            else 0
        )
        deficit = jumpers - adv
        success = deficit <= big_l + n_post - 1
    return AttackOutcome(
        premine_gain_L=big_l, race_deficit=deficit, postmine_gain_N=n_post, success=success
    )


def estimate_attack_success(
    config: SimConfig, t: float, post_horizon: Optional[float] = None
) -> Estimate:
    """Private-attack success frequency over all configured trials."""
    wins = 0
    for trial in range(config.trials):
        wins += run_private_attack(config, t, post_horizon, trial).success
    n = config.trials
    p = wins / n
    return Estimate(value=p, stderr=math.sqrt(p * (1.0 - p) / n), trials=n)


def estimate_race_loss(config: SimConfig, spec: RaceSpec, species: str) -> Estimate:
    """Frequency of the existential race-loss event for one renewal stream.

    Per trial: does some window (c, d] with c in [0, s], d in [s+t, horizon]
    see at most spec.n more stream renewals than adversarial arrivals over the
    enlarged window (c-mu, d+nu]?  Evaluated with running extrema over the
    step functions, never a quadratic scan.  The finite d-horizon makes this a
    slightly low estimate of the unbounded event.
    """
    s = config.warmup_s
    if config.horizon < s + spec.t:
        raise ValueError("horizon too short for the requested race window")
    losses = 0
    for trial in range(config.trials):
        trace = generate_trace(config, trial)
        w = species_times(trace, config.params.delta, species)
        a = trace.adversarial_times

        def w_minus_a(points, shift):
            return np.searchsorted(w, points, "right") - np.searchsorted(a, points + shift, "right")

        # max over c of W(c) - A(c - mu): attained at 0 or just after a renewal
        cands = np.concatenate([[0.0], w[w <= s]])
        best_start = int(np.max(w_minus_a(cands, -spec.mu)))
        # min over d of W(d) - A(d + nu): attained at the window start or just
        # after an adversarial arrival
        d0 = s + spec.t
        a_jumps = a - spec.nu
        cands = np.concatenate([[d0], a_jumps[(a_jumps >= d0) & (a_jumps <= config.horizon)]])
        worst_end = int(np.min(w_minus_a(cands, spec.nu)))
        losses += worst_end - best_start <= spec.n
    n = config.trials
    p = losses / n
    return Estimate(value=p, stderr=math.sqrt(p * (1.0 - p) / n), trials=n)


def empirical_postmine_pmf(config: SimConfig, n_max: int = 32) -> tuple:
    """Histogram of the attacker's post-mining gain with multinomial standard errors.

    With delta = 0 this is the maximum catch-up of the adversarial walk (the
    geometric law); with delta > 0 it is the gain against the jumper-paced
    honest chain.  Returns (probs, stderr) arrays over 0..n_max.
    """
    p = config.params
    horizon = config.horizon - config.warmup_s
    counts = np.zeros(n_max + 1, dtype=int)
    for trial in range(config.trials):
        rng = _trial_rng(config, trial)
        if p.delta == 0:
            n = _max_pursuit_gain(rng, p.beta, p.alpha, horizon)
        else:
            n = max(
                0,
                _max_pursuit_gain(
                    rng, p.beta, p.alpha, horizon,
                    first_down_extra=p.delta, down_spacing=p.delta,
                )
                - 1,
            )
        counts[min(n, n_max)] += 1
    probs = counts / config.trials
    stderr = np.sqrt(probs * (1.0 - probs) / config.trials)
    return probs, stderr
