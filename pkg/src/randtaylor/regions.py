"""Rasters, contours and global properties of the stability regions."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from .core import RandTaylorError, RationalComplex, check_finite, check_order
from .quadrature import DEFAULT_CONFIG, NonConvergent, QuadratureConfig
from .stability import (Membership, StabilityVerdict, as_function, classify,
                        ms_function, ms_function_exact,
                        stability_values, tristate)

REGIONS = ("ms", "as", "ref")
MAX_CELLS = 10 ** 8
DEFAULT_BAND = 1e-9
DEFAULT_G_BAND = 1e-6
# double-precision F loses digits beyond this order; exact arithmetic takes over
EXACT_ORDER_THRESHOLD = 16


class GridTooLarge(RandTaylorError, ValueError):
    pass


class SearchOverflow(RandTaylorError):
    pass


@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int
    band: float = DEFAULT_BAND
    g_band: float = DEFAULT_G_BAND
    max_cells: int = MAX_CELLS

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("empty window")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be positive")
        if self.nx * self.ny > self.max_cells:
            raise GridTooLarge(f"{self.nx}x{self.ny} exceeds the cap of {self.max_cells} cells")

    @classmethod
    def standard(cls, n: int = 800, **kw) -> "GridSpec":
        """The default window [-6, 2] x [-6, 6]."""
        return cls(-6.0, 2.0, -6.0, 6.0, n, n, **kw)

    @property
    def symmetric(self) -> bool:
        return self.im_min == -self.im_max

    def axes(self):
        xs = np.linspace(self.re_min, self.re_max, self.nx)
        ys = np.linspace(self.im_min, self.im_max, self.ny)
        if self.symmetric:
            # exact antisymmetry so mirrored rows land on the same nodes
            ys = 0.5 * (ys - ys[::-1])
        return xs, ys

    @property
    def cell_area(self) -> float:
        dx = (self.re_max - self.re_min) / max(self.nx - 1, 1)
        dy = (self.im_max - self.im_min) / max(self.ny - 1, 1)
        return dx * dy

    def contains(self, z: complex) -> bool:
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("max_cells")
        return d


@dataclass(frozen=True)
class RegionRaster:
    """Classified nodes, stored row-major with rows indexed by imaginary part."""

    r: int
    spec: GridSpec
    xs: np.ndarray
    ys: np.ndarray
    F: np.ndarray
    G: np.ndarray
    ref_sq: np.ndarray
    ms: np.ndarray
    as_: np.ndarray
    ref: np.ndarray

    def state(self, region: str) -> np.ndarray:
        return {"ms": self.ms, "as": self.as_, "ref": self.ref}[region]

    def field(self, region: str) -> np.ndarray:
        """Scalar field whose negative part is the region."""
        return {"ms": self.F - 1.0, "as": self.G, "ref": self.ref_sq - 1.0}[region]

    def mask(self, region: str) -> np.ndarray:
        return self.state(region) == Membership.IN

    def verdict(self, ix: int, iy: int) -> StabilityVerdict:
        return StabilityVerdict(Membership(int(self.ms[iy, ix])), Membership(int(self.as_[iy, ix])),
                                Membership(int(self.ref[iy, ix])), float(self.F[iy, ix]),
                                float(self.G[iy, ix]), float(self.ref_sq[iy, ix]),
                                self.spec.band, self.spec.g_band)

    def verdicts(self):
        for iy in range(self.spec.ny):
            for ix in range(self.spec.nx):
                yield self.verdict(ix, iy)

    def nearest(self, z: complex):
        ix = int(np.argmin(np.abs(self.xs - z.real)))
        iy = int(np.argmin(np.abs(self.ys - z.imag)))
        return ix, iy

    def area(self, region: str) -> float:
        return float(self.mask(region).sum()) * self.spec.cell_area

    def points(self) -> np.ndarray:
        return self.xs[None, :] + 1j * self.ys[:, None]

    # -- export ---------------------------------------------------------------
    def write_csv(self, path) -> None:
        names = {int(m): m.name.lower() for m in Membership}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["re", "im", "F", "G", "ref_sq", "ms", "as", "ref"])
            for iy, y in enumerate(self.ys):
                for ix, x in enumerate(self.xs):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(self.F[iy, ix])),
                                repr(float(self.G[iy, ix])), repr(float(self.ref_sq[iy, ix])),
                                names[int(self.ms[iy, ix])], names[int(self.as_[iy, ix])],
                                names[int(self.ref[iy, ix])]])

    def to_json_dict(self) -> dict:
        names = {int(m): m.name.lower() for m in Membership}
        cells = []
        for iy, y in enumerate(self.ys):
            for ix, x in enumerate(self.xs):
                cells.append([float(x), float(y), float(self.F[iy, ix]), float(self.G[iy, ix]),
                              float(self.ref_sq[iy, ix]), names[int(self.ms[iy, ix])],
                              names[int(self.as_[iy, ix])], names[int(self.ref[iy, ix])]])
        return {"spec": self.spec.to_dict(), "r": self.r,
                "columns": ["re", "im", "F", "G", "ref_sq", "ms", "as", "ref"], "cells": cells}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def _rows_values(r, xs, ys, g_method, cfg):
    z = xs[None, :] + 1j * ys[:, None]
    F, G, R = stability_values(r, z)
    if g_method == "quadrature":
        for idx in np.ndindex(z.shape):
            try:
                G[idx] = as_function(r, complex(z[idx]), cfg)
            except NonConvergent as exc:
                G[idx] = exc.estimate
    return F, G, R


def scan(r: int, spec: GridSpec, cfg: QuadratureConfig = DEFAULT_CONFIG, *,
         threads: int = 1, use_symmetry: bool = True,
         g_method: str = "decomposition") -> RegionRaster:
    """Classify every node of ``spec``.

    ``G`` comes from the closed-form root decomposition by default
    (``g_method="quadrature"`` switches to per-node adaptive quadrature).
    Symmetric windows are computed for ``im >= 0`` only and mirrored.
    The result does not depend on ``threads``.
    """
    r = check_order(r)
    if g_method not in ("decomposition", "quadrature"):
        raise ValueError(f"unknown g_method {g_method!r}")
    xs, ys = spec.axes()
    mirror = use_symmetry and spec.symmetric
    if mirror:
        upper = np.nonzero(ys >= 0)[0]
        rows = ys[upper]
    else:
        rows = ys

    chunks = np.array_split(np.arange(rows.size), max(1, min(threads * 4, rows.size)))
    chunks = [c for c in chunks if c.size]

    def work(c):
        return _rows_values(r, xs, rows[c], g_method, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    F = np.concatenate([p[0] for p in parts], axis=0)
    G = np.concatenate([p[1] for p in parts], axis=0)
    R = np.concatenate([p[2] for p in parts], axis=0)

    if mirror:
        # nodes with im < 0 take the values of their conjugates
        src = np.searchsorted(rows, np.abs(ys))
        F, G, R = F[src], G[src], R[src]

    ms = tristate(F, 1.0, spec.band)
    as_ = tristate(G, 0.0, spec.g_band)
    ref = tristate(R, 1.0, spec.band)
    return RegionRaster(r, spec, xs, ys, F, G, R, ms, as_, ref)


# -- contours -----------------------------------------------------------------

@dataclass
class ContourSet:
    """Level-set polylines per region; each polyline is an (N, 2) array of
    (re, im) vertices, closed ones repeat their first vertex."""

    polylines: Dict[str, List[np.ndarray]] = field(default_factory=dict)

    def closed(self, region: str) -> List[np.ndarray]:
        return [p for p in self.polylines.get(region, []) if len(p) > 2 and np.array_equal(p[0], p[-1])]

    def is_empty(self) -> bool:
        return not any(self.polylines.values())

    def to_json_dict(self) -> dict:
        return {k: [p.tolist() for p in v] for k, v in self.polylines.items()}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    def write_svg(self, path, window: GridSpec, width: int = 800) -> None:
        """Stroke-only SVG, one ``<g>`` per region, imaginary axis pointing up."""
        sx = width / (window.re_max - window.re_min)
        height = int(round((window.im_max - window.im_min) * sx))
        colors = {"ref": "#1f77b4", "ms": "#d62728", "as": "#2ca02c"}
        lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
                 f'viewBox="0 0 {width} {height}">']
        for region, polys in self.polylines.items():
            lines.append(f'  <g id="{region}" fill="none" stroke="{colors.get(region, "black")}" '
                         f'stroke-width="1">')
            for p in polys:
                px = (p[:, 0] - window.re_min) * sx
                py = (window.im_max - p[:, 1]) * sx
                d = "M " + " L ".join(f"{x:.3f},{y:.3f}" for x, y in zip(px, py))
                lines.append(f'    <path d="{d}"/>')
            lines.append("  </g>")
        lines.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def marching_squares(xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> List[np.ndarray]:
    """Zero level set of ``values[iy, ix]`` as polylines.

    Inside means ``value < 0``. Saddle cells are split by the sign of the
    cell-centre value (mean of the four corners).
    """
    v = np.asarray(values, dtype=float)
    ny, nx = v.shape
    if nx < 2 or ny < 2:
        return []
    inside = v < 0
    b0 = inside[:-1, :-1]
    b1 = inside[:-1, 1:]
    b2 = inside[1:, 1:]
    b3 = inside[1:, :-1]
    code = b0 * 1 + b1 * 2 + b2 * 4 + b3 * 8
    active = np.argwhere((code != 0) & (code != 15))

    def point(edge):
        kind, i, j = edge
        if kind == "h":
            va, vb = v[j, i], v[j, i + 1]
            t = va / (va - vb)
            return (xs[i] + t * (xs[i + 1] - xs[i]), ys[j])
        va, vb = v[j, i], v[j + 1, i]
        t = va / (va - vb)
        return (xs[i], ys[j] + t * (ys[j + 1] - ys[j]))

    segments = []
    for j, i in active:
        c = int(code[j, i])
        B, R, T, L = ("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)
        if c in (5, 10):
            centre_in = 0.25 * (v[j, i] + v[j, i + 1] + v[j + 1, i + 1] + v[j + 1, i]) < 0
            if (c == 5) == centre_in:
                segments += [(B, R), (T, L)]
            else:
                segments += [(L, B), (R, T)]
            continue
        crossing = []
        bits = [(c >> k) & 1 for k in range(4)]
        # edges in cyclic order with their corner pairs
        for edge, (p, q) in ((B, (0, 1)), (R, (1, 2)), (T, (2, 3)), (L, (3, 0))):
            if bits[p] != bits[q]:
                crossing.append(edge)
        segments.append((crossing[0], crossing[1]))

    adj: Dict[tuple, List[int]] = {}
    for k, (e1, e2) in enumerate(segments):
        adj.setdefault(e1, []).append(k)
        adj.setdefault(e2, []).append(k)

    used = np.zeros(len(segments), dtype=bool)

    def walk(start_edge, seg):
        chain = [start_edge]
        edge = start_edge
        while seg is not None and not used[seg]:
            used[seg] = True
            a, b = segments[seg]
            edge = b if a == edge else a
            chain.append(edge)
            nxt = [s for s in adj[edge] if not used[s]]
            seg = nxt[0] if nxt else None
        return chain

    chains = []
    # open polylines start at edges of degree one (window border)
    for edge, segs in adj.items():
        if len(segs) == 1 and not used[segs[0]]:
            chains.append(walk(edge, segs[0]))
    for k in range(len(segments)):
        if not used[k]:
            chains.append(walk(segments[k][0], k))
    return [np.array([point(e) for e in chain]) for chain in chains]


def contours(raster: RegionRaster, regions: Sequence[str] = REGIONS) -> ContourSet:
    if raster.spec.nx < 2 or raster.spec.ny < 2:
        raise ValueError("contouring needs at least 2x2 nodes")
    return ContourSet({reg: marching_squares(raster.xs, raster.ys, raster.field(reg))
                       for reg in regions})


def component_count(raster: RegionRaster, region: str, half: Optional[str] = None) -> int:
    """Number of 4-connected components of the region's ``IN`` cells,
    optionally restricted to ``half in {"left", "right"}``."""
    mask = raster.mask(region).copy()
    if half == "left":
        mask &= raster.xs[None, :] < 0
    elif half == "right":
        mask &= raster.xs[None, :] > 0
    elif half is not None:
        raise ValueError("half must be 'left', 'right' or None")
    _, n = ndimage.label(mask)
    return int(n)


# -- boundedness and coverage -------------------------------------------------

@dataclass(frozen=True)
class BoundEstimate:
    """Radius beyond which no sampled direction is stable. A sampling estimate."""

    r: int
    gamma: float
    angular_samples: int
    radial_samples: int = 0


def _stable_any(r: int, radius, angles: np.ndarray) -> np.ndarray:
    radius = np.atleast_1d(np.asarray(radius, dtype=float))
    z = radius[:, None] * np.exp(1j * angles)[None, :]
    F, G, R = stability_values(r, z)
    return np.any((F < 1.0) | (G < 0.0) | (R < 1.0), axis=1)


def estimate_gamma(r: int, angular_samples: int = 1024, cfg: QuadratureConfig = DEFAULT_CONFIG,
                   radial_samples: int = 1024, max_radius: float = 2.0 ** 16) -> BoundEstimate:
    """Doubling search for a radius with every sampled direction unstable, a
    dense radial sweep below it, then 30 bisection steps on the outermost
    stable/unstable bracket."""
    r = check_order(r)
    if angular_samples < 64:
        raise ValueError("angular_samples must be at least 64")
    angles = 2.0 * np.pi * np.arange(angular_samples) / angular_samples
    radius = 1.0
    while _stable_any(r, radius, angles)[0]:
        radius *= 2.0
        if radius > max_radius:
            raise SearchOverflow(f"still stable at radius {radius}")
    radii = radius * np.arange(1, radial_samples + 1) / radial_samples
    stable = np.concatenate([_stable_any(r, chunk, angles)
                             for chunk in np.array_split(radii, max(1, radial_samples // 64))])
    idx = np.nonzero(stable)[0]
    if idx.size == 0:
        lo, hi = 0.0, radii[0]
    else:
        last = idx[-1]
        lo, hi = radii[last], radii[last + 1]
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _stable_any(r, mid, angles)[0]:
            lo = mid
        else:
            hi = mid
    return BoundEstimate(r, float(hi), angular_samples, radial_samples)


def min_order_for_ms(z, r_max: int = 24) -> Optional[int]:
    """Smallest ``r <= r_max`` with ``F_r(z) < 1``, or ``None``."""
    z = check_finite(z)
    check_order(r_max)
    exact_z = None
    for r in range(r_max + 1):
        if r > EXACT_ORDER_THRESHOLD:
            if exact_z is None:
                exact_z = RationalComplex(Fraction(z.real), Fraction(z.imag))
            if ms_function_exact(r, exact_z) < 1:
                return r
        elif ms_function(r, z) < 1.0:
            return r
    return None


# -- inclusion audit ------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """A point claimed to lie in one region but not another."""

    name: str
    z: complex
    orders: tuple
    claims: tuple  # ((region, order, expect_in), ...)


KNOWN_WITNESSES = (
    Witness("ref^2 not in ref^3", -0.6 + 2.8j, (2, 3), (("ref", 2, True), ("ref", 3, False))),
    Witness("MS^2 not in MS^3", -0.03 + 1.9j, (2, 3), (("ms", 2, True), ("ms", 3, False))),
    Witness("AS^3 not in AS^4", -0.25 + 2.75j, (3, 4), (("as", 3, True), ("as", 4, False))),
    Witness("AS^0 not in ref^0", -2.1 + 0j, (0,), (("as", 0, True), ("ref", 0, False))),
    Witness("ref^0 not in AS^0", -1 + 1.6j, (0,), (("ref", 0, True), ("as", 0, False))),
)


@dataclass
class InclusionAudit:
    r: int
    violations: int
    counts: Dict[str, int]
    non_inclusion_cells: Dict[str, int]
    witnesses: List[dict]
    components: Dict[str, Dict[str, int]]

    def to_dict(self) -> dict:
        return asdict(self)


def confirm_witness(w: Witness, cfg: QuadratureConfig = DEFAULT_CONFIG) -> dict:
    results = []
    for region, order, expect_in in w.claims:
        v = classify(order, w.z, DEFAULT_BAND, cfg, g_band=DEFAULT_G_BAND)
        state = {"ms": v.in_ms, "as": v.in_as, "ref": v.in_ref}[region]
        want = Membership.IN if expect_in else Membership.OUT
        results.append({"region": region, "r": order, "state": state.name.lower(),
                        "ok": state == want})
    return {"name": w.name, "z": [w.z.real, w.z.imag],
            "confirmed": all(x["ok"] for x in results), "checks": results}


def audit_inclusions(r: int, spec: GridSpec, cfg: QuadratureConfig = DEFAULT_CONFIG,
                     raster: Optional[RegionRaster] = None) -> InclusionAudit:
    """Count ``MS not-subset ref & AS`` violations (marginal cells excluded)
    and confirm the known non-inclusion witnesses inside the window."""
    raster = raster if raster is not None else scan(r, spec, cfg)
    ms_in = raster.ms == Membership.IN
    bad = int(np.count_nonzero(ms_in & ((raster.as_ == Membership.OUT) |
                                        (raster.ref == Membership.OUT))))
    as_in, ref_in = raster.mask("as"), raster.mask("ref")
    as_out = raster.as_ == Membership.OUT
    ref_out = raster.ref == Membership.OUT
    witnesses = [confirm_witness(w, cfg) for w in KNOWN_WITNESSES
                 if r in w.orders and spec.contains(w.z)]
    components = {reg: {half: component_count(raster, reg, half) for half in ("left", "right")}
                  for reg in REGIONS}
    return InclusionAudit(
        r=r, violations=bad,
        counts={reg: int(raster.mask(reg).sum()) for reg in REGIONS},
        non_inclusion_cells={"as_not_ref": int(np.count_nonzero(as_in & ref_out)),
                             "ref_not_as": int(np.count_nonzero(ref_in & as_out))},
        witnesses=witnesses, components=components)
