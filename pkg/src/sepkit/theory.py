"""Closed-form separation probability bounds and their Monte Carlo checks.

All evaluators take i.i.d. samples with independent, zero-mean coordinates
bounded in [-1, 1], summarized by ``R0^2 = sum of coordinate variances``.
For the uniform cube that is n/3. Bounds are exact right-hand sides of
Hoeffding-type estimates; they may be negative (vacuous) and are returned
raw together with a vacuity flag.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import RngSpec
from .errors import ValidationError


class Bound(NamedTuple):
    value: float
    vacuous: bool


def _bound(value: float) -> Bound:
    return Bound(value, value < 0.0)


@dataclass(frozen=True)
class TheoryConfig:
    """Parameter bundle for the bound evaluators.

    ``delta`` / ``mu`` / ``m_allow`` are only needed by the evaluators that
    use them and may stay None otherwise.
    """

    n: int
    M: int
    eps: float
    R0: float
    k: int = 1
    beta: float = 0.0
    delta: float | None = None
    mu: float | None = None
    m_allow: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.M < 0:
            raise ValidationError("M must be >= 0")
        if not 0.0 < self.eps < 1.0:
            raise ValidationError("eps must be in (0, 1)")
        if not self.R0 > 0.0:
            raise ValidationError("R0 must be positive")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValidationError("delta must be in (0, 1)")
        if self.mu is not None and not 0.0 < self.mu < 1.0:
            raise ValidationError("mu must be in (0, 1)")
        if self.m_allow is not None and self.m_allow < 1:
            raise ValidationError("m_allow must be >= 1")

    @classmethod
    def cube(cls, n: int, M: int, eps: float, **kwargs) -> "TheoryConfig":
        """Uniform product distribution on [-1, 1]^n: R0 = sqrt(n/3)."""
        return cls(n=n, M=M, eps=eps, R0=math.sqrt(n / 3.0), **kwargs)


def _r04(cfg: TheoryConfig) -> float:
    return (cfg.R0 * cfg.R0) ** 2


def bound_norm(cfg: TheoryConfig) -> tuple[Bound, Bound]:
    """Concentration of the squared norm around R0^2.

    Returns (two_sided, one_sided): probabilities that the normalized
    squared norm lies within +-eps of 1, respectively at least 1 - eps.
    """
    tail = math.exp(-2.0 * _r04(cfg) * cfg.eps**2 / cfg.n)
    return _bound(1.0 - 2.0 * tail), _bound(1.0 - tail)


def bound_pairwise_dot(cfg: TheoryConfig) -> Bound:
    """Probability that a normalized pairwise inner product stays below delta."""
    if cfg.delta is None:
        raise ValidationError("delta is required")
    return _bound(1.0 - math.exp(-_r04(cfg) * cfg.delta**2 / (2.0 * cfg.n)))


def bound_one_element(cfg: TheoryConfig) -> Bound:
    """Probability that one sample's own hyperplane cuts it off from M others."""
    r04 = _r04(cfg)
    norm_tail = math.exp(-2.0 * r04 * cfg.eps**2 / cfg.n)
    dot_tail = math.exp(-r04 * (1.0 - cfg.eps) ** 2 / (2.0 * cfg.n))
    return _bound(1.0 - norm_tail - cfg.M * dot_tail)


def bound_k_element(cfg: TheoryConfig) -> Bound:
    """Separating a group of k samples whose mutual normalized inner
    products are at least beta, via a hyperplane through their mean."""
    margin = 1.0 - cfg.eps + cfg.beta * (cfg.k - 1)
    if not margin > 0.0:
        raise ValidationError("need 1 - eps + beta*(k-1) > 0")
    r04 = _r04(cfg)
    norm_tail = cfg.k * math.exp(-2.0 * r04 * cfg.eps**2 / cfg.n)
    dot_tail = cfg.M * math.exp(-r04 * margin**2 / (2.0 * cfg.k**2 * cfg.n))
    return _bound(1.0 - norm_tail - dot_tail)


def bound_k_element_uncorrelated(cfg: TheoryConfig) -> Bound:
    """Group separation without a correlation floor: the pairwise terms are
    bounded probabilistically with delta instead, costing an extra term."""
    if cfg.delta is None:
        raise ValidationError("delta is required")
    margin = 1.0 - cfg.eps - cfg.delta * (cfg.k - 1)
    if not margin > 0.0:
        raise ValidationError("need 1 - eps - delta*(k-1) > 0")
    r04 = _r04(cfg)
    norm_tail = cfg.k * math.exp(-2.0 * r04 * cfg.eps**2 / cfg.n)
    pair_tail = cfg.k * (cfg.k - 1) / 2.0 * math.exp(-r04 * cfg.delta**2 / (2.0 * cfg.n))
    dot_tail = cfg.M * math.exp(-r04 * margin**2 / (2.0 * cfg.k**2 * cfg.n))
    return _bound(1.0 - norm_tail - pair_tail - dot_tail)


def bound_k_element_localized(cfg: TheoryConfig) -> Bound:
    """Separation of one sample together with its mu-neighborhood on the
    sample's own hyperplane, shifted by mu."""
    if cfg.mu is None:
        raise ValidationError("mu is required")
    if not cfg.mu < 1.0 - cfg.eps:
        raise ValidationError("need 0 < mu < 1 - eps")
    r04 = _r04(cfg)
    norm_tail = cfg.k * math.exp(-2.0 * r04 * cfg.eps**2 / cfg.n)
    dot_tail = cfg.M * math.exp(-r04 * (1.0 - cfg.eps - cfg.mu) ** 2 / (2.0 * cfg.n))
    return _bound(1.0 - norm_tail - dot_tail)


def spurious_pickups_exact(M: int, m: int, p_star: float) -> float:
    """Exact binomial partial sum: probability that fewer than m of M
    independent events fire, each with probability at most p_star.

    This is the brute-force oracle for :func:`spurious_pickups_lower_bound`.
    Uses exact binomial coefficients; intended for moderate M.
    """
    _validate_pickup_args(M, m, p_star)
    if p_star == 0.0:
        return 1.0
    return math.fsum(
        math.comb(M, k) * (1.0 - p_star) ** (M - k) * p_star**k for k in range(min(m, M + 1))
    )


def spurious_pickups_lower_bound(M: int, m: int, p_star: float) -> float:
    """Closed-form lower bound for :func:`spurious_pickups_exact`.

    Evaluated in log space so large M and m do not overflow.
    """
    _validate_pickup_args(M, m, p_star)
    if p_star == 0.0:
        return 1.0
    x = (M - m + 1) * p_star / (1.0 - p_star)
    log_a = M * math.log1p(-p_star) + x
    if x == 0.0:
        return math.exp(log_a)
    log_b = m * math.log(x) - math.lgamma(m + 1)
    if log_b > 0.0:
        # Correction factor 1 - x^m/m! is negative: the bound is vacuous.
        log_mag = log_a + log_b + math.log1p(-math.exp(-log_b))
        return -math.inf if log_mag > 709.0 else -math.exp(log_mag)
    if log_b == 0.0:
        return 0.0
    return math.exp(log_a + math.log1p(-math.exp(log_b)))


def _validate_pickup_args(M: int, m: int, p_star: float) -> None:
    if M < 0:
        raise ValidationError("M must be >= 0")
    if not 1 <= m <= M + 1:
        raise ValidationError("m must be in [1, M + 1]")
    if not 0.0 <= p_star < 1.0:
        raise ValidationError("p_star must be in [0, 1)")


def bound_cascade(cfg: TheoryConfig) -> Bound:
    """Probability that one sample's hyperplane overshoots on at most
    ``m_allow`` (default n) background points, which a second hyperplane can
    then separate away with probability one."""
    m = cfg.n if cfg.m_allow is None else cfg.m_allow
    r04 = _r04(cfg)
    p_star = math.exp(-r04 * (1.0 - cfg.eps) ** 2 / (2.0 * cfg.n))
    if m > cfg.M + 1:
        m = cfg.M + 1
    lemma = spurious_pickups_lower_bound(cfg.M, m, p_star)
    return _bound(lemma - math.exp(-2.0 * r04 * cfg.eps**2 / cfg.n))


def mc_separation_frequencies(
    n: int,
    M: int,
    trials: int,
    eps: float,
    rng: RngSpec,
    threads: int = 1,
) -> tuple[float, float]:
    """Empirical single-point separability frequencies on the uniform cube.

    Each trial samples M points from [-1, 1]^n, picks one at random, and
    records two events. Event A: every other point's inner product with the
    pick stays below the pick's squared norm. Event B: the pick's squared
    norm reaches (1 - eps) R0^2 and every normalized inner product stays
    below 1 - eps. Returns (freq_A, freq_B).
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if M < 2 or n < 1:
        raise ValidationError("need M >= 2 and n >= 1")
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must be in (0, 1)")
    r0_sq = n / 3.0
    level = (1.0 - eps) * r0_sq

    def one_trial(t: int) -> tuple[bool, bool]:
        g = rng.child(t).generator()
        points = g.uniform(-1.0, 1.0, size=(M, n))
        i = int(g.integers(M))
        dots = points @ points[i]
        norm_sq = dots[i]
        others = np.delete(dots, i)
        event_a = bool((others < norm_sq).all())
        event_b = bool(norm_sq >= level and (others < level).all())
        return event_a, event_b

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one_trial, range(trials)))
    else:
        outcomes = [one_trial(t) for t in range(trials)]
    hits_a = sum(a for a, _ in outcomes)
    hits_b = sum(b for _, b in outcomes)
    return hits_a / trials, hits_b / trials


def _rho(eps: float) -> float:
    if not 0.0 < eps <= 1.0:
        raise ValidationError("eps must be in (0, 1]")
    return math.sqrt(1.0 - (1.0 - eps) ** 2)


def cap_volume_bounds(n: int, eps: float) -> tuple[float, float]:
    """Lower and upper bounds on V(cap) / V(unit ball).

    The cap is the part of the unit ball whose projection on a fixed
    direction is at least 1 - eps; rho(eps) = sqrt(1 - (1-eps)^2) is the
    radius of the smallest ball containing it.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    rho = _rho(eps)
    log_rho = math.log(rho)
    lower = math.exp(
        (n + 1) * log_rho - math.log(2.0)
        + math.lgamma(n / 2.0 + 1.0) - 0.5 * math.log(math.pi) - math.lgamma(n / 2.0 + 1.5)
    )
    upper = math.exp(n * log_rho - math.log(2.0))
    return lower, upper


_CAP_CHUNK = 250_000


def mc_cap_ratio(n: int, eps: float, samples: int, rng: RngSpec, threads: int = 1) -> float:
    """Hit-or-miss estimate of V(cap) / V(unit ball).

    Samples uniformly in the unit ball (normal direction times a radius with
    density r^(n-1)) and counts the fraction landing in the cap. Chunked on
    fixed-size substreams, so the estimate is independent of thread count.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if n < 1:
        raise ValidationError("n must be >= 1")
    level = 1.0 - eps
    _rho(eps)  # validates eps

    chunks = [(i, min(_CAP_CHUNK, samples - i * _CAP_CHUNK))
              for i in range((samples + _CAP_CHUNK - 1) // _CAP_CHUNK)]

    def one_chunk(job: tuple[int, int]) -> int:
        idx, count = job
        g = rng.child(idx).generator()
        z = g.standard_normal(size=(count, n))
        norms = np.linalg.norm(z, axis=1)
        radii = g.random(count) ** (1.0 / n)
        first = z[:, 0] / norms * radii
        return int((first >= level).sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(one_chunk, chunks))
    else:
        hits = sum(one_chunk(job) for job in chunks)
    return hits / samples


def ball_cap_ratio_bound(n: int, eps: float, k: float) -> float:
    """Upper bound on V(ball of radius k*rho) / V(cap).

    For k < 1 the bound decays exponentially with n: distance-based
    detectors occupy a vanishing fraction of the volume a hyperplane cap
    responds to.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not k > 0.0:
        raise ValidationError("k must be positive")
    rho = _rho(eps)
    return math.exp(
        n * math.log(k) + math.log(2.0) + 0.5 * math.log(math.pi) - math.log(rho)
        + math.lgamma(n / 2.0 + 1.5) - math.lgamma(n / 2.0 + 1.0)
    )
