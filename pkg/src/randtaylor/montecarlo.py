"""Monte Carlo estimates of F_r and G_r from sampled uniform nodes.

Samples are drawn in fixed-size blocks, each from its own counter-based
Philox stream keyed by ``(stream_id, block)``, and block sums are combined in
block order. Statistics therefore depend only on the seed, never on how the
blocks were distributed across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import check_finite, check_order, step_coeffs
from .stability import Membership, classify

BLOCK = 1 << 16
ABSORB_LEVEL = 1e-300
CI_SIGMAS = 3.0


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for v in (self.seed, self.stream_id):
            if not 0 <= v < 2 ** 64:
                raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self, block: Optional[int] = None) -> np.random.Generator:
        key = (self.stream_id,) if block is None else (self.stream_id, block)
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngSeed":
        """Independent stream for replication ``index``."""
        return RngSeed(self.seed, (self.stream_id * 1_000_003 + index + 1) % 2 ** 64)


def sample_uniform(rng: np.random.Generator, size=None):
    """Uniform variate(s) on [0, 1)."""
    return rng.random(size)


def uniform_block(seed: RngSeed, block: int, size: int = BLOCK) -> np.ndarray:
    return seed.generator(block).random(size)


class TrajectoryStats(NamedTuple):
    k_steps: int
    log_mag: float
    per_step_mean: float
    per_step_var: float
    absorbed: bool


def _log_abs_f(r, z, t):
    c = step_coeffs(r, z)
    a = np.abs(c.head + c.tail * t ** (r + 1))
    absorbed = a < ABSORB_LEVEL
    with np.errstate(divide="ignore"):
        return np.log(a), absorbed


def simulate_log_trajectory(r: int, z, k: int, seed: RngSeed = RngSeed(0),
                            taus=None) -> TrajectoryStats:
    """``ln|v_k / eta| = sum_l ln|f(tau_l)|`` for ``k`` steps of the test
    problem. ``taus`` overrides the sampled nodes (stubbing)."""
    r = check_order(r)
    z = check_finite(z)
    if k < 1:
        raise ValueError("k must be at least 1")
    if taus is None:
        nblocks = -(-k // BLOCK)
        t = np.concatenate([uniform_block(seed, b) for b in range(nblocks)])[:k]
    else:
        t = np.broadcast_to(np.asarray(taus, dtype=float), (k,))
    logs, absorbed = _log_abs_f(r, z, t)
    if np.any(absorbed):
        return TrajectoryStats(k, -math.inf, -math.inf, math.nan, True)
    total = float(np.sum(logs))
    return TrajectoryStats(k, total, total / k, float(np.var(logs)), False)


class Estimate(NamedTuple):
    mean: float
    ci_halfwidth: float
    n_used: int
    absorbed: int


def _moments(r, z, n_samples, seed, statistic, threads):
    """Per-block ``(count, mean, M2)`` merged in block order (Chan et al.)."""
    nblocks = -(-n_samples // BLOCK)
    c = step_coeffs(r, z)

    def block_stats(b):
        size = min(BLOCK, n_samples - b * BLOCK)
        t = uniform_block(seed, b, size)
        fv = c.head + c.tail * t ** (r + 1)
        a = np.abs(fv)
        keep = a >= ABSORB_LEVEL
        x = np.log(a[keep]) if statistic == "log" else a[keep] ** 2
        m = float(x.mean()) if x.size else 0.0
        return x.size, m, float(((x - m) ** 2).sum()), size - x.size, complex(fv.sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block_stats, range(nblocks)))
    else:
        parts = [block_stats(b) for b in range(nblocks)]
    n, mean, m2, bad, fsum = 0, 0.0, 0.0, 0, 0j
    for cnt, mb, m2b, dropped, fs in parts:
        bad += dropped
        fsum += fs
        if cnt == 0:
            continue
        tot = n + cnt
        delta = mb - mean
        mean += delta * cnt / tot
        m2 += m2b + delta * delta * n * cnt / tot
        n = tot
    return n, mean, m2, bad, fsum


def _estimate(n, mean, m2, bad) -> Estimate:
    if n == 0:
        return Estimate(math.nan, math.inf, 0, bad)
    var = m2 / max(n - 1, 1)
    return Estimate(mean, CI_SIGMAS * math.sqrt(var / n), n, bad)


def _check_n(n_samples):
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")


def empirical_G(r: int, z, n_samples: int = 10 ** 6, seed: RngSeed = RngSeed(0),
                threads: int = 1) -> Estimate:
    """Sample mean of ``ln|f(tau)|`` with a 3-sigma CLT half-width. Exact
    zeros of ``f`` are excluded and counted in ``absorbed``."""
    r = check_order(r)
    z = check_finite(z)
    _check_n(n_samples)
    if z == 0:
        return Estimate(0.0, 0.0, n_samples, 0)
    return _estimate(*_moments(r, z, n_samples, seed, "log", threads)[:4])


def empirical_F(r: int, z, n_samples: int = 10 ** 6, seed: RngSeed = RngSeed(0),
                threads: int = 1) -> Estimate:
    r = check_order(r)
    z = check_finite(z)
    _check_n(n_samples)
    if z == 0:
        return Estimate(1.0, 0.0, n_samples, 0)
    return _estimate(*_moments(r, z, n_samples, seed, "sq", threads)[:4])


def empirical_jensen_gap(r: int, z, n_samples: int = 10 ** 6, seed: RngSeed = RngSeed(0)):
    """``(mean |f|^2, |mean f|^2)`` over one sample; the first never falls below the second."""
    r = check_order(r)
    z = check_finite(z)
    _check_n(n_samples)
    n, mean, _, _, fsum = _moments(r, z, n_samples, seed, "sq", 1)
    return mean, abs(fsum / n) ** 2


def _decide(est: Estimate, threshold: float) -> Optional[Membership]:
    lo, hi = est.mean - est.ci_halfwidth, est.mean + est.ci_halfwidth
    if hi < threshold:
        return Membership.IN
    if lo > threshold:
        return Membership.OUT
    return None


@dataclass
class ComparisonReport:
    r: int
    z: complex
    analytic_F: float
    analytic_G: float
    F: Estimate
    G: Estimate
    ms_empirical: Optional[Membership]
    as_empirical: Optional[Membership]
    ms_analytic: Membership
    as_analytic: Membership
    trajectory: Optional[TrajectoryStats] = None

    @property
    def ms_agrees(self) -> Optional[bool]:
        return None if self.ms_empirical is None else self.ms_empirical == self.ms_analytic

    @property
    def as_agrees(self) -> Optional[bool]:
        return None if self.as_empirical is None else self.as_empirical == self.as_analytic

    def to_dict(self) -> dict:
        def word(m):
            return "abstain" if m is None else m.name.lower()

        def agree(a):
            return "abstain" if a is None else ("agree" if a else "disagree")

        return {
            "r": self.r, "z": [self.z.real, self.z.imag],
            "analytic": {"F": self.analytic_F, "G": self.analytic_G,
                         "ms": word(self.ms_analytic), "as": word(self.as_analytic)},
            "empirical": {"F_mean": self.F.mean, "F_ci": self.F.ci_halfwidth,
                          "G_mean": self.G.mean, "G_ci": self.G.ci_halfwidth,
                          "absorbed": self.G.absorbed, "n": self.G.n_used + self.G.absorbed,
                          "ms": word(self.ms_empirical), "as": word(self.as_empirical)},
            "verdict_agreement": {"ms": agree(self.ms_agrees), "as": agree(self.as_agrees)},
            "trajectory": None if self.trajectory is None else self.trajectory._asdict(),
        }


def empirical_classification(r: int, z, n_samples: int = 10 ** 6, k_horizon: Optional[int] = None,
                             seed: RngSeed = RngSeed(0), threads: int = 1) -> ComparisonReport:
    """Empirical MS/AS decisions (abstaining when the CI straddles the
    threshold) next to :func:`classify`.

    With ``k_horizon`` a single trajectory of that length is simulated as
    well and attached to the report; decisions use the per-step moments only.
    """
    z = check_finite(z)
    F = empirical_F(r, z, n_samples, seed, threads)
    G = empirical_G(r, z, n_samples, RngSeed(seed.seed, seed.stream_id + 1), threads)
    v = classify(r, z)
    ms_emp = _decide(F, 1.0)
    as_emp = _decide(G, 0.0)
    if z == 0:
        ms_emp = as_emp = None
    traj = None
    if k_horizon:
        traj = simulate_log_trajectory(r, z, k_horizon, RngSeed(seed.seed, seed.stream_id + 2))
    return ComparisonReport(r, z, v.f_value, v.g_value, F, G, ms_emp, as_emp, v.in_ms, v.in_as,
                            traj)
