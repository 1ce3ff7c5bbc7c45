"""Randomized Taylor scheme for ``y' = f(t, y)`` on a uniform mesh.

One step from ``(t, v)`` with step ``h`` and node ``theta = t + tau*h``:

    p(s)   = sum_{j=0}^{r+1} u^(j)/j! (s - t)^j
    v_next = p(t + h) + h * (f(theta, p(theta)) - p'(theta))

where ``u^(j)`` are derivatives of the local solution through ``(t, v)``,
supplied by a derivative oracle. Dropping the correction term gives the
classical Taylor method of order ``r + 1``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .core import RandTaylorError, check_order
from .montecarlo import RngSeed

Oracle = Callable[[float, np.ndarray, int], List[np.ndarray]]


class OracleError(RandTaylorError):
    pass


class Diverged(RandTaylorError):
    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


@dataclass(frozen=True)
class IVPSpec:
    a: float
    b: float
    eta: np.ndarray
    rhs: Callable[[float, np.ndarray], np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, dtype=float)))
        if not self.a < self.b:
            raise ValueError("need a < b")

    @property
    def d(self) -> int:
        return self.eta.shape[-1]


@dataclass(frozen=True)
class SchemeConfig:
    r: int
    n: int
    seed: RngSeed = RngSeed(0)
    mode: str = "randomized"
    debug: bool = False

    def __post_init__(self):
        check_order(self.r)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.mode not in ("randomized", "deterministic"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class SolutionPath:
    t: np.ndarray
    v: np.ndarray
    taus: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def nodes(self):
        return list(zip(self.t, self.v))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"y{i}" for i in range(self.v.shape[1])])
            for t, row in zip(self.t, self.v):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in row])


# -- oracles --------------------------------------------------------------------

def linear_oracle(A) -> Oracle:
    """Derivatives ``u^(j) = A^j v`` for ``y' = A y``; works on batched ``v``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))

    def oracle(t, v, m):
        out = [v]
        for _ in range(m):
            out.append(out[-1] @ A.T)
        return out

    return oracle


def linear_rhs(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return lambda t, y: y @ A.T


def rotation_scaling(lam: complex) -> np.ndarray:
    """Real 2x2 matrix acting like multiplication by ``lam`` on (Re, Im)."""
    return np.array([[lam.real, -lam.imag], [lam.imag, lam.real]])


def square_oracle(t, v, m):
    """``y' = y^2``: ``u^(j) = j! u^(j+1)``."""
    return [math.factorial(j) * v ** (j + 1) for j in range(m + 1)]


def square_rhs(t, y):
    return y * y


# -- the scheme -----------------------------------------------------------------

def step(r: int, h: float, t_prev: float, v_prev, oracle: Oracle, tau, rhs,
         deterministic: bool = False, debug: bool = False):
    """Advance one step. ``v_prev`` may carry leading batch axes, in which
    case ``tau`` must broadcast against ``v_prev[..., :1]``."""
    v_prev = np.asarray(v_prev, dtype=float)
    derivs = oracle(t_prev, v_prev, r + 1)
    if len(derivs) != r + 2:
        raise OracleError(f"oracle returned {len(derivs)} derivatives, expected {r + 2}")
    if debug:
        if not np.allclose(derivs[0], v_prev, rtol=1e-12, atol=0):
            raise OracleError("zeroth derivative differs from the state")
        if not np.allclose(derivs[1], rhs(t_prev, v_prev), rtol=1e-10, atol=1e-14):
            raise OracleError("first derivative differs from rhs(t, v)")

    p_end = sum(d * (h ** j / math.factorial(j)) for j, d in enumerate(derivs))
    if deterministic:
        return p_end
    if not np.all((np.asarray(tau) >= 0) & (np.asarray(tau) <= 1)):
        raise ValueError("tau must lie in [0, 1]")
    s = np.asarray(tau, dtype=float) * h
    p_node = sum(d * (s ** j / math.factorial(j)) for j, d in enumerate(derivs))
    dp_node = sum(d * (s ** (j - 1) / math.factorial(j - 1))
                  for j, d in enumerate(derivs) if j >= 1)
    return p_end + h * (rhs(t_prev + s, p_node) - dp_node)


def _mesh(ivp: IVPSpec, n: int):
    h = (ivp.b - ivp.a) / n
    return h, ivp.a + h * np.arange(n + 1)


def integrate(ivp: IVPSpec, cfg: SchemeConfig, oracle: Oracle, taus=None) -> SolutionPath:
    """Run the scheme over ``n`` uniform steps.

    Nodes are drawn from ``cfg.seed``; ``taus`` (length ``n``) overrides them.
    """
    h, t = _mesh(ivp, cfg.n)
    deterministic = cfg.mode == "deterministic"
    if deterministic:
        taus = np.empty(0)
    elif taus is None:
        taus = cfg.seed.generator().random(cfg.n)
    else:
        taus = np.broadcast_to(np.asarray(taus, dtype=float), (cfg.n,)).copy()
    v = np.empty((cfg.n + 1, ivp.d))
    v[0] = ivp.eta
    for k in range(1, cfg.n + 1):
        tau = None if deterministic else taus[k - 1]
        # overflow is reported as Diverged below rather than as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            v[k] = step(cfg.r, h, t[k - 1], v[k - 1], oracle, tau, ivp.rhs,
                        deterministic=deterministic, debug=cfg.debug)
        if not np.all(np.isfinite(v[k])):
            raise Diverged(k)
    return SolutionPath(t, v, taus)


def _endpoints_batch(ivp, r, n, reps, seed, oracle, mode):
    """End values of ``reps`` independent runs, advanced together."""
    h, t = _mesh(ivp, n)
    deterministic = mode == "deterministic"
    gen = seed.generator()
    v = np.broadcast_to(ivp.eta, (reps, ivp.d)).copy()
    for k in range(1, n + 1):
        tau = None if deterministic else gen.random((reps, 1))
        v = step(r, h, t[k - 1], v, oracle, tau, ivp.rhs, deterministic=deterministic)
    return v


def _slope(ns, errs):
    h = 1.0 / np.asarray(ns, dtype=float)
    return float(np.polyfit(np.log(h), np.log(np.asarray(errs)), 1)[0])


@dataclass
class ConvergenceReport:
    n: List[int]
    l2_error: List[float]
    mean_error: List[float]
    l2_slope: float
    mean_slope: float
    r: int
    mode: str
    replications: int

    def to_dict(self) -> dict:
        return {"r": self.r, "mode": self.mode, "replications": self.replications,
                "n": self.n, "l2_error": self.l2_error, "mean_error": self.mean_error,
                "slopes": {"l2": self.l2_slope, "mean": self.mean_slope}}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def convergence_study(ivp: IVPSpec, r: int, n_list: Sequence[int], replications: int,
                      seed: RngSeed, exact: Callable[[float], np.ndarray],
                      oracle: Oracle, mode: str = "randomized") -> ConvergenceReport:
    """Endpoint errors over a list of step counts and their log-log slopes.

    ``l2_error`` is the root-mean-square error over replications and
    ``mean_error`` the norm of the mean error. The oracle and rhs must accept
    batched states of shape ``(replications, d)``.
    """
    r = check_order(r)
    if mode == "randomized" and replications < 1000:
        raise ValueError("randomized studies need at least 1000 replications")
    reps = replications if mode == "randomized" else 1
    target = np.atleast_1d(exact(ivp.b))
    l2, mean = [], []
    for i, n in enumerate(n_list):
        v = _endpoints_batch(ivp, r, n, reps, seed.child(i), oracle, mode)
        err = v - target
        l2.append(float(np.sqrt(np.mean(np.sum(err ** 2, axis=1)))))
        mean.append(float(np.linalg.norm(err.mean(axis=0))))
    return ConvergenceReport(list(n_list), l2, mean, _slope(n_list, l2), _slope(n_list, mean),
                             r, mode, reps)


def linear_ivp(lam: float, eta: float = 1.0, a: float = 0.0, b: float = 1.0) -> IVPSpec:
    return IVPSpec(a, b, np.array([eta]), linear_rhs([[lam]]))
