"""Command-line interface: ``randtaylor <command> [options]``.

Exit codes: 0 success, 1 failed check, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from . import remarks as remarks_mod
from .core import RandTaylorError, RationalComplex, parse_complex
from .montecarlo import RngSeed, empirical_classification
from .regions import (REGIONS, GridSpec, audit_inclusions, component_count, contours,
                      estimate_gamma, scan)
from .scheme import IVPSpec, convergence_study, linear_oracle, linear_rhs, rotation_scaling
from .stability import classify, ms_function_exact, ref_sq

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

# options whose value may legitimately start with "-"
_SIGNED_OPTS = ("-z", "--z", "--window", "--lambda")


def _merge_signed(argv: Sequence[str]) -> List[str]:
    """Turn ``--window -3,1,-3,3`` into ``--window=-3,1,-3,3`` so argparse
    does not mistake the value for an option."""
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            sep = "" if a == "-z" else "="
            out.append(f"{a}{sep}{argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def _complex_arg(text: str) -> RationalComplex:
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _window_arg(text: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window {text!r}")
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("window must be re_min,re_max,im_min,im_max")
    return tuple(vals)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}")


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> np.uint64(1))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, RationalComplex):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_manifest(out_dir: Path, stem: str, args: argparse.Namespace, files: Sequence[Path],
                   t0: float, seed: Optional[int] = None) -> Path:
    params = {k: _jsonable(v) for k, v in vars(args).items() if k not in ("func", "out")}
    manifest = {
        "command": args.command,
        "params": params,
        "seed": seed,
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "files": {p.name: _sha256(p) for p in files},
    }
    path = out_dir / f"{stem}.manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _dump(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)


# -- commands ---------------------------------------------------------------------

def cmd_eval(args) -> int:
    z = args.z
    v = classify(args.r, complex(z), band=args.band)
    print(f"r      = {args.r}")
    print(f"z      = {z}")
    if args.exact:
        print(f"F      = {ms_function_exact(args.r, z)}")
        print(f"ref_sq = {ref_sq(args.r, z)}")
    print(f"F      ~ {v.f_value!r}")
    print(f"G      ~ {v.g_value!r}")
    print(f"ref_sq ~ {v.ref_sq_value!r}")
    print(f"ms={v.in_ms.name.lower()} as={v.in_as.name.lower()} ref={v.in_ref.name.lower()}")
    return EXIT_OK


def _spec_from(args) -> GridSpec:
    re_min, re_max, im_min, im_max = args.window
    ny = args.res_y or args.res
    return GridSpec(re_min, re_max, im_min, im_max, args.res, ny, band=args.band)


def cmd_region(args) -> int:
    t0 = time.perf_counter()
    spec = _spec_from(args)
    raster = scan(args.r, spec, threads=args.threads)
    out = _out_dir(args)
    stem = f"region_r{args.r}"
    files = [out / f"{stem}.csv", out / f"{stem}.json"]
    raster.write_csv(files[0])
    raster.write_json(files[1])
    write_manifest(out, stem, args, files, t0)
    for reg in REGIONS:
        print(f"{reg}: {int(raster.mask(reg).sum())} cells in, area {raster.area(reg):.6g}")
    return EXIT_OK


def cmd_contour(args) -> int:
    t0 = time.perf_counter()
    spec = _spec_from(args)
    raster = scan(args.r, spec, threads=args.threads)
    cs = contours(raster, args.regions)
    out = _out_dir(args)
    stem = f"contour_r{args.r}"
    files = [out / f"{stem}.svg", out / f"{stem}.json"]
    cs.write_svg(files[0], spec)
    cs.write_json(files[1])
    write_manifest(out, stem, args, files, t0)
    for reg in args.regions:
        print(f"{reg}: {len(cs.polylines.get(reg, []))} polylines "
              f"({len(cs.closed(reg))} closed), {component_count(raster, reg)} components")
    return EXIT_OK


def cmd_remarks(args) -> int:
    results = remarks_mod.run_checks(exact_only=args.exact_only)
    print(remarks_mod.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_mc(args) -> int:
    t0 = time.perf_counter()
    seed = _fresh_seed() if args.seed is None else args.seed
    rep = empirical_classification(args.r, complex(args.z), args.n, args.k, RngSeed(seed),
                                   threads=args.threads)
    d = rep.to_dict()
    d["seed"] = seed
    if args.out:
        out = _out_dir(args)
        stem = f"mc_r{args.r}"
        path = out / f"{stem}.json"
        _dump(d, path)
        write_manifest(out, stem, args, [path], t0, seed)
    print(json.dumps(d, indent=2))
    return EXIT_OK


def cmd_converge(args) -> int:
    t0 = time.perf_counter()
    seed = _fresh_seed() if args.seed is None else args.seed
    lam = complex(args.lam)
    if lam.imag == 0:
        A, eta = np.array([[lam.real]]), np.array([1.0])
    else:
        A, eta = rotation_scaling(lam), np.array([1.0, 0.0])

    def exact(t):
        y = np.exp(lam * t)
        return np.array([y.real]) if lam.imag == 0 else np.array([y.real, y.imag])

    ivp = IVPSpec(0.0, 1.0, eta, linear_rhs(A))
    rep = convergence_study(ivp, args.r, args.n_list, args.reps, RngSeed(seed), exact,
                            linear_oracle(A), mode=args.mode)
    d = rep.to_dict()
    d["seed"] = seed
    d["lambda"] = [lam.real, lam.imag]
    if args.out:
        out = _out_dir(args)
        stem = f"converge_r{args.r}_{args.mode}"
        path = out / f"{stem}.json"
        _dump(d, path)
        write_manifest(out, stem, args, [path], t0, seed)
    print(json.dumps(d, indent=2))
    return EXIT_OK


def cmd_audit(args) -> int:
    t0 = time.perf_counter()
    spec = _spec_from(args)
    reports, total = [], 0
    for r in args.orders:
        raster = scan(r, spec, threads=args.threads)
        a = audit_inclusions(r, spec, raster=raster)
        reports.append(a.to_dict())
        total += a.violations
        print(f"r={r}: {a.violations} violations, witnesses confirmed: "
              f"{sum(w['confirmed'] for w in a.witnesses)}/{len(a.witnesses)}")
    if args.out:
        out = _out_dir(args)
        path = out / "audit.json"
        _dump(reports, path)
        write_manifest(out, "audit", args, [path], t0)
    return EXIT_OK if total == 0 else EXIT_CHECK


def cmd_gamma(args) -> int:
    for r in args.orders:
        b = estimate_gamma(r, angular_samples=args.angles)
        print(f"r={r}: gamma ~ {b.gamma:.6f}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _add_grid(p, default_window=(-6.0, 2.0, -6.0, 6.0), default_res=800):
    p.add_argument("--window", type=_window_arg, default=default_window,
                   help="re_min,re_max,im_min,im_max")
    p.add_argument("--res", type=int, default=default_res, help="nodes along the real axis")
    p.add_argument("--res-y", type=int, default=None, help="nodes along the imaginary axis")
    p.add_argument("--band", type=float, default=1e-9)
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randtaylor",
                                description="Stability regions of randomized Taylor schemes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate F, G and the reference function at one point")
    e.add_argument("-r", type=int, required=True)
    e.add_argument("-z", "--z", type=_complex_arg, required=True)
    e.add_argument("--exact", action="store_true", help="print exact fractions for F and ref_sq")
    e.add_argument("--band", type=float, default=1e-9)
    e.set_defaults(func=cmd_eval)

    for name, func, helptext in (("region", cmd_region, "classify a grid, write CSV/JSON"),
                                 ("contour", cmd_contour, "region boundaries as SVG/JSON")):
        g = sub.add_parser(name, help=helptext)
        g.add_argument("-r", type=int, required=True)
        _add_grid(g)
        g.add_argument("--out", required=True)
        if name == "contour":
            g.add_argument("--regions", type=lambda s: s.split(","), default=list(REGIONS))
        g.set_defaults(func=func)

    rm = sub.add_parser("remarks", help="recompute the reference counterexample values")
    rm.add_argument("--exact-only", action="store_true")
    rm.set_defaults(func=cmd_remarks)

    m = sub.add_parser("mc", help="Monte Carlo estimates of F and G against the analytic values")
    m.add_argument("-r", type=int, required=True)
    m.add_argument("-z", "--z", type=_complex_arg, required=True)
    m.add_argument("-n", type=int, default=10 ** 6, help="samples")
    m.add_argument("-k", type=int, default=None, help="trajectory length to simulate")
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--out", default=None)
    m.set_defaults(func=cmd_mc)

    c = sub.add_parser("converge", help="empirical convergence slopes on y' = lambda*y")
    c.add_argument("-r", type=int, required=True)
    c.add_argument("--lambda", dest="lam", type=_complex_arg, default=parse_complex("-2"))
    c.add_argument("--mode", choices=("randomized", "deterministic"), default="randomized")
    c.add_argument("--n-list", type=_int_list, default=[8, 16, 32, 64, 128, 256, 512])
    c.add_argument("--reps", type=int, default=1000)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_converge)

    a = sub.add_parser("audit", help="count inclusion violations on a grid")
    a.add_argument("--orders", type=_int_list, default=[0, 1, 2, 3, 4])
    _add_grid(a)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_audit)

    gm = sub.add_parser("gamma", help="estimate the radius bounding all regions")
    gm.add_argument("--orders", type=_int_list, default=[0, 1, 2, 3, 4])
    gm.add_argument("--angles", type=int, default=1024)
    gm.set_defaults(func=cmd_gamma)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_signed(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RandTaylorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
