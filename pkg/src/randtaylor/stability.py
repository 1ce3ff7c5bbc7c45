"""Mean-square, asymptotic and reference stability functions.

For order ``r`` and ``z = lam*h``:

* ``F_r(z) = E|f(tau)|^2`` (mean-square region ``F_r < 1``),
* ``G_r(z) = E ln|f(tau)|`` (asymptotic region ``G_r < 0``, which is also the
  region of stability in probability),
* ``|sum_{j<=r+2} z^j/j!|^2`` (reference region of the deterministic Taylor
  method of order ``r+2``).

``F_r`` has the closed form ``|P|^2 + 2 Re(P conj Q)/(r+2) + |Q|^2/(2r+3)``
with ``P``/``Q`` the head/tail coefficients. ``G_r`` is computed by adaptive
quadrature and cross-checked against the root decomposition

    G_r(z) = ln(|z|^{r+2}/(r+1)!) + sum_m int_0^1 ln|t - rho_m| dt,

where ``rho_m`` are the ``r+1`` roots of ``t^{r+1} = w`` and
``w = -head/tail``.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .core import (RationalComplex, check_finite, check_order, exp_taylor_partial,
                   step_coeffs)
from .quadrature import (DEFAULT_CONFIG, NonConvergent, QuadratureConfig, adaptive_integrate,
                         locate_step_root, log_abs_linear_primitive, step_roots)

log = logging.getLogger(__name__)

# paths (a) and (b) of G must agree to this
G_PATH_AGREEMENT = 1e-6
# distance from [0, 1] below which a complex root is treated as a near-singularity
_NEAR_ROOT = 1e-2


class Membership(enum.IntEnum):
    OUT = 0
    IN = 1
    MARGINAL = 2


def tristate(value, threshold: float, band: float):
    """``IN`` if ``value < threshold - band``, ``OUT`` if ``value > threshold + band``."""
    if np.ndim(value):
        v = np.asarray(value, dtype=float)
        out = np.full(v.shape, Membership.MARGINAL, dtype=np.int8)
        out[v < threshold - band] = Membership.IN
        out[v > threshold + band] = Membership.OUT
        return out
    if value < threshold - band:
        return Membership.IN
    if value > threshold + band:
        return Membership.OUT
    return Membership.MARGINAL


def ms_function(r: int, z):
    """``F_r(z)`` in closed form (elementwise for arrays)."""
    r = check_order(r)
    if isinstance(z, (RationalComplex, Fraction, int)):
        return ms_function_exact(r, RationalComplex.coerce(z))
    c = step_coeffs(r, z)
    p, q = c.head, c.tail
    return (np.abs(p) ** 2 + 2.0 * (p * np.conj(q)).real / (r + 2)
            + np.abs(q) ** 2 / (2 * r + 3))


def ms_function_exact(r: int, z) -> Fraction:
    r = check_order(r)
    c = step_coeffs(r, RationalComplex.coerce(z))
    p, q = c.head, c.tail
    cross = p * q.conjugate()
    return p.abs2() + 2 * cross.re / (r + 2) + q.abs2() / (2 * r + 3)


def ref_sq(r: int, z):
    """``|sum_{j=0}^{r+2} z^j/j!|^2``; exact for rational input."""
    r = check_order(r)
    s = exp_taylor_partial(z, r + 2)
    if isinstance(s, RationalComplex):
        return s.abs2()
    return np.abs(s) ** 2


class HMapParams(NamedTuple):
    w: complex
    log_prefactor: float


def h_map(r: int, z) -> HMapParams:
    """``w = h_r(z) = -head/tail`` and ``ln(|z|^{r+2}/(r+1)!)`` for ``z != 0``."""
    r = check_order(r)
    z = check_finite(z)
    if z == 0:
        raise ValueError("h_r is undefined at z = 0")
    c = step_coeffs(r, z)
    logpre = (r + 2) * math.log(abs(z)) - math.lgamma(r + 2)
    return HMapParams(-c.head / c.tail, logpre)


def as_function_decomposed(r: int, z):
    """``G_r`` via the root decomposition; vectorized, closed form per point.

    When every root satisfies ``|rho| > 2`` the ``ln|rho_m|`` terms are folded
    into ``ln|head|`` so small ``|z|`` does not cancel catastrophically.
    """
    r = check_order(r)
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    k = r + 1
    out = np.zeros(z.shape, dtype=float)
    nz = z != 0
    if np.any(nz):
        zz = z[nz]
        c = step_coeffs(r, zz)
        head, tail = c.head, c.tail
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w = -head / tail
            mag = np.abs(w) ** (1.0 / k)
        g = np.empty(zz.shape, dtype=float)
        huge = ~np.isfinite(mag) | (tail == 0)
        # f = head + O(|z|^{r+2}) below double precision
        g[huge] = np.log(np.abs(head[huge]))
        ok = ~huge
        if np.any(ok):
            wk, mk = w[ok], mag[ok]
            args = (np.angle(wk)[:, None] + 2.0 * np.pi * np.arange(k)[None, :]) / k
            rho = mk[:, None] * np.exp(1j * args)
            prim = log_abs_linear_primitive(rho.ravel()).reshape(rho.shape)
            far = mk > 2.0
            logtail = np.log(np.abs(tail[ok]))
            gk = np.empty(wk.shape, dtype=float)
            gk[~far] = logtail[~far] + prim[~far].sum(axis=1)
            if np.any(far):
                corr = prim[far] - np.log(np.abs(rho[far]))
                gk[far] = np.log(np.abs(head[ok][far])) + corr.sum(axis=1)
            g[ok] = gk
        out[nz] = g
    return float(out[0]) if scalar else out


def _direct_G(r: int, z: complex, cfg: QuadratureConfig) -> float:
    c = step_coeffs(r, z)
    head, tail, k = c.head, c.tail, r + 1

    def integrand(t):
        return np.log(np.abs(head + tail * t ** k))

    singular = []
    rep = locate_step_root(r, z)
    if rep.has_real_root:
        singular.append(rep.root_t)
    elif np.isfinite(rep.w_value):
        for rho in step_roots(r, rep.w_value):
            if 0.0 <= rho.real <= 1.0 and abs(rho.imag) < _NEAR_ROOT:
                singular.append(float(rho.real))
    return adaptive_integrate(integrand, 0.0, 1.0, cfg, singular=singular)


class GPaths(NamedTuple):
    direct: float
    decomposed: float

    @property
    def disagreement(self) -> float:
        return abs(self.direct - self.decomposed)


def as_function_paths(r: int, z, cfg: QuadratureConfig = DEFAULT_CONFIG) -> GPaths:
    """Both evaluations of ``G_r``: (a) adaptive quadrature of ``ln|f|``,
    (b) root decomposition. Raises :class:`NonConvergent` from (a)."""
    r = check_order(r)
    z = check_finite(z)
    if z == 0:
        return GPaths(0.0, 0.0)
    return GPaths(_direct_G(r, z, cfg), as_function_decomposed(r, z))


def as_function(r: int, z, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``G_r(z) = E ln|f(tau)|`` by adaptive quadrature.

    The decomposition is evaluated alongside; a disagreement above
    ``G_PATH_AGREEMENT`` is logged as a warning rather than raised.
    """
    paths = as_function_paths(r, z, cfg)
    if paths.disagreement > G_PATH_AGREEMENT:
        log.warning("G_%d(%s): quadrature %.12g vs decomposition %.12g", r, z,
                    paths.direct, paths.decomposed)
    return paths.direct


@dataclass(frozen=True)
class StabilityVerdict:
    in_ms: Membership
    in_as: Membership
    in_ref: Membership
    f_value: float
    g_value: float
    ref_sq_value: float
    marginal_band: float
    g_band: float

    def as_dict(self) -> dict:
        return {
            "ms": self.in_ms.name.lower(), "as": self.in_as.name.lower(),
            "ref": self.in_ref.name.lower(), "F": self.f_value, "G": self.g_value,
            "ref_sq": self.ref_sq_value, "band": self.marginal_band, "g_band": self.g_band,
        }


class InclusionViolation(AssertionError):
    pass


def check_first_inclusion(ms, as_, ref) -> bool:
    """``MS`` must imply ``AS`` and ``ref`` unless those are marginal."""
    return not (ms == Membership.IN and (as_ == Membership.OUT or ref == Membership.OUT))


def classify(r: int, z, band: float = 1e-9, cfg: QuadratureConfig = DEFAULT_CONFIG,
             g_band: Optional[float] = None) -> StabilityVerdict:
    if band < 0:
        raise ValueError("band must be nonnegative")
    g_band = band if g_band is None else g_band
    r = check_order(r)
    z = check_finite(z)
    f = float(ms_function(r, z))
    q = float(ref_sq(r, z))
    try:
        g = as_function(r, z, cfg)
        in_as = tristate(g, 0.0, g_band)
    except NonConvergent as exc:
        g = exc.estimate
        in_as = Membership.MARGINAL
    verdict = StabilityVerdict(tristate(f, 1.0, band), in_as, tristate(q, 1.0, band),
                               f, g, q, band, g_band)
    if not check_first_inclusion(verdict.in_ms, verdict.in_as, verdict.in_ref):
        raise InclusionViolation(f"MS point outside AS/ref at r={r}, z={z}: {verdict}")
    return verdict


def stability_values(r: int, z):
    """``(F, G, ref_sq)`` arrays over an array of points; ``G`` by decomposition."""
    z = np.asarray(z, dtype=complex)
    return ms_function(r, z), as_function_decomposed(r, z), ref_sq(r, z)
