"""Integration on [0, 1] for integrands with logarithmic singularities.

``adaptive_integrate`` is a globally adaptive Gauss-Kronrod (7/15) scheme.
Known singular points are split off and the neighbouring panels are graded
geometrically toward them before refinement starts. The closed-form
``log_abs_linear_primitive`` and the root finder ``locate_step_root`` serve
the root decomposition of ``E ln|f(tau)|``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .core import DomainError, RandTaylorError, check_finite, check_order, step_coeffs

# Kronrod 15-point abscissae (nonnegative half) and weights; the Gauss 7-point
# rule uses every second abscissa.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[1:7:2] = _WG[:3]
_GWEIGHTS[7] = _WG[3]
_GWEIGHTS[9:15:2] = _WG[2::-1]

_MAX_PANELS = 20000
_GRADE_LEVELS = 30
# panels narrower than this (relative to their location) are never split:
# nodes would collide with the singular endpoint in double precision
_MIN_REL_WIDTH = 1024 * np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 60
    singular_window: float = 1e-3

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 10:
            raise ValueError("max_depth must be at least 10")
        if not 0 < self.singular_window < 0.5:
            raise ValueError("singular_window must lie in (0, 1/2)")


DEFAULT_CONFIG = QuadratureConfig()


class NonConvergent(RandTaylorError):
    """Refinement depth exhausted before the tolerance was met.

    ``estimate`` and ``error`` carry the best available result.
    """

    def __init__(self, estimate: float, error: float, message: str = ""):
        self.estimate = estimate
        self.error = error
        super().__init__(message or f"quadrature did not converge: "
                                    f"estimate={estimate!r}, error bound={error!r}")


def _gk15(g, lo: np.ndarray, hi: np.ndarray):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(g(x.ravel()), dtype=float).reshape(x.shape)
    k = half * (y @ _KWEIGHTS)
    gauss = half * (y @ _GWEIGHTS)
    return k, np.abs(k - gauss)


def _graded(lo: float, hi: float, toward_lo: bool, levels: int):
    """Breakpoints of [lo, hi] refined geometrically (ratio 1/2) toward one end."""
    width = hi - lo
    floor = _MIN_REL_WIDTH * max(1.0, abs(lo), abs(hi))
    cuts = [c for c in (width * 0.5 ** k for k in range(1, levels + 1)) if c > floor]
    if toward_lo:
        pts = [lo + c for c in cuts]
    else:
        pts = [hi - c for c in cuts]
    return sorted(p for p in pts if lo < p < hi)


def _initial_panels(a, b, points, singular, levels):
    cuts = sorted({a, b, *[p for p in points if a < p < b],
                   *[s for s in singular if a <= s <= b]})
    sing = set(s for s in singular if a <= s <= b)
    edges = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        left, right = lo in sing, hi in sing
        if left and right:
            m = 0.5 * (lo + hi)
            inner = _graded(lo, m, True, levels) + [m] + _graded(m, hi, False, levels)
        elif left:
            inner = _graded(lo, hi, True, levels)
        elif right:
            inner = _graded(lo, hi, False, levels)
        else:
            inner = []
        edges.append([lo, *inner])
    flat = [p for seg in edges for p in seg] + [cuts[-1]]
    flat = np.array(sorted(set(flat)))
    # depth proxy: how many halvings the panel is away from the full interval
    widths = np.diff(flat)
    depth = np.maximum(0, np.round(np.log2((b - a) / widths))).astype(int)
    return flat[:-1], flat[1:], depth


def adaptive_integrate(g: Callable[[np.ndarray], np.ndarray], a: float = 0.0, b: float = 1.0,
                       cfg: QuadratureConfig = DEFAULT_CONFIG, points: Iterable[float] = (),
                       singular: Iterable[float] = ()) -> float:
    """Integrate a vectorized ``g`` over ``[a, b]``.

    ``points`` are extra breakpoints; ``singular`` are breakpoints toward which
    the initial mesh is graded (``g`` need not be finite there, it is never
    evaluated at panel endpoints). Refinement always bisects the panel with
    the largest error estimate until the summed estimate drops below
    ``max(abs_tol, rel_tol * |I|)``.
    """
    if not a < b:
        raise DomainError("need a < b")
    levels = min(_GRADE_LEVELS, cfg.max_depth)
    lo, hi, depth = _initial_panels(float(a), float(b), list(points), list(singular), levels)
    vals, errs = _gk15(g, lo, hi)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(errs))):
        raise NonConvergent(float("nan"), float("inf"), "integrand not finite on a panel")
    heap = [(-e, float(l), float(h), int(d), float(v))
            for e, l, h, d, v in zip(errs, lo, hi, depth, vals)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    err = float(np.sum(errs))
    frozen_err = 0.0
    frozen_val = 0.0
    while heap:
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total))
        if err <= tol:
            return total
        if len(heap) > _MAX_PANELS:
            break
        neg_e, l, h, d, v = heapq.heappop(heap)
        if d >= cfg.max_depth or h - l <= _MIN_REL_WIDTH * max(1.0, abs(l), abs(h)):
            frozen_err += -neg_e
            frozen_val += v
            if frozen_err > tol:
                break
            continue
        m = 0.5 * (l + h)
        pv, pe = _gk15(g, np.array([l, m]), np.array([m, h]))
        if not (np.all(np.isfinite(pv)) and np.all(np.isfinite(pe))):
            break
        total += float(pv.sum()) - v
        err += float(pe.sum()) + neg_e
        heapq.heappush(heap, (-float(pe[0]), l, m, d + 1, float(pv[0])))
        heapq.heappush(heap, (-float(pe[1]), m, h, d + 1, float(pv[1])))
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(total))
    if err <= tol:
        return total
    raise NonConvergent(total, err)


def log_abs_linear_primitive(rho):
    """Closed form of ``int_0^1 ln|t - rho| dt`` (vectorized over complex ``rho``).

    Near the unit interval it uses ``int 1/2 ln(u^2 + b^2) du =
    u ln(u^2 + b^2)/2 - u + b atan(u/b)`` with ``u = t - Re(rho)``,
    ``b = |Im(rho)|``. For ``|rho| > 2`` it uses
    ``ln|rho| + Re(-(1 - s) log(1 - s)/s - 1)`` with ``s = 1/rho``, which
    does not lose digits when ``rho`` is large.
    """
    rho = np.asarray(rho, dtype=complex)
    scalar = rho.ndim == 0
    rho = np.atleast_1d(rho)
    out = np.empty(rho.shape, dtype=float)

    far = np.abs(rho) > 2.0
    if np.any(far):
        rf = rho[far]
        s = 1.0 / rf
        corr = (-(1.0 - s) * np.log1p(-s) / s - 1.0).real
        out[far] = np.log(np.abs(rf)) + corr

    near = ~far
    if np.any(near):
        a = rho[near].real
        b = np.abs(rho[near].imag)

        def prim(u):
            sq = u * u + b * b
            with np.errstate(divide="ignore", invalid="ignore"):
                ulog = np.where(sq > 0, 0.5 * u * np.log(np.where(sq > 0, sq, 1.0)), 0.0)
            return ulog - u + b * np.arctan2(u, b)

        out[near] = prim(1.0 - a) - prim(-a)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class SingularityReport:
    has_real_root: bool
    root_t: Optional[float]
    w_value: complex


def real_root_tolerance(w: complex, tol: float = 1e-8) -> float:
    return tol * (1.0 + abs(w))


def locate_step_root(r: int, z, tol: float = 1e-8) -> SingularityReport:
    """Find the zero of ``t -> f(t)`` on [0, 1], if any.

    ``f(t) = tail * (t^(r+1) - w)`` with ``w = -head/tail``, so a zero in
    [0, 1] exists exactly when ``w`` is (numerically) real and in [0, 1].
    """
    r = check_order(r)
    z = check_finite(z)
    if z == 0:
        raise DomainError("f is identically 1 at z = 0; there is no root to locate")
    c = step_coeffs(r, z)
    if c.tail == 0:
        raise DomainError("tail coefficient underflowed to zero")
    w = -c.head / c.tail
    eps = real_root_tolerance(w, tol)
    if abs(w.imag) <= eps and -eps <= w.real <= 1.0 + eps:
        x = min(max(w.real, 0.0), 1.0)
        return SingularityReport(True, x ** (1.0 / (r + 1)), w)
    return SingularityReport(False, None, w)


def step_roots(r: int, w: complex) -> np.ndarray:
    """All ``r+1`` solutions of ``t^(r+1) = w`` (principal modulus root,
    arguments ``(arg w + 2 pi m)/(r+1)``)."""
    k = r + 1
    mag = abs(w) ** (1.0 / k)
    args = (np.angle(w) + 2.0 * math.pi * np.arange(k)) / k
    return mag * np.exp(1j * args)
