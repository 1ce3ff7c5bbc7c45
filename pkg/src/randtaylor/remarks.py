"""Reference counterexample values, recomputed.

Fractions are compared bitwise in rational arithmetic; quadrature values are
compared to their printed five decimals at +-1e-4.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

from .core import RationalComplex, exp_taylor_partial
from .quadrature import DEFAULT_CONFIG
from .stability import as_function, ms_function_exact, ref_sq

DECIMAL_TOL = 1e-4

Q = Fraction
Z_A = RationalComplex(Q("-0.6"), Q("2.8"))
Z_B = RationalComplex(Q("-0.03"), Q("1.9"))
Z_C = -0.25 + 2.75j
Z_AR_1 = RationalComplex(Q("-2.1"))
Z_AR_2 = RationalComplex(Q(-1), Q("1.6"))
Z_RH = RationalComplex(Q("0.01"), Q(1))
Z_CN_1 = RationalComplex(Q("0.75"), Q("3.5"))
Z_CN_2 = RationalComplex(Q("-0.25"), Q("2.5"))
Z_CN_3 = -0.5 + 2j
Z_CN_4 = 0.25 + 3.25j


@dataclass(frozen=True)
class Check:
    name: str
    kind: str  # "exact", "decimal" or "property"
    compute: Callable[[], object]
    expected: object = None
    tol: float = 0.0


@dataclass
class CheckResult:
    name: str
    kind: str
    passed: bool
    computed: object
    expected: object
    note: str = ""


def _modulus_sq_partial(z, m):
    return exp_taylor_partial(z, m).abs2()


def _midpoint_excluded():
    # r = 1 at the midpoint of 0.01 +- i: outside MS, ref and AS
    z = RationalComplex(Q("0.01"))
    f = ms_function_exact(1, z)
    q = ref_sq(1, z)
    g = as_function(1, 0.01, DEFAULT_CONFIG)
    return {"F": f, "ref_sq": q, "G": g, "excluded": f > 1 and q > 1 and g > 0}


def default_checks() -> List[Check]:
    return [
        Check("monotonicity: ref_sq_2(-0.6+2.8i)", "exact", lambda: ref_sq(2, Z_A), Q(253409, 360000)),
        Check("monotonicity: ref_sq_3(-0.6+2.8i)", "exact", lambda: ref_sq(3, Z_A), Q(5828357, 5625000)),
        Check("monotonicity: F_2(-0.03+1.9i)", "exact", lambda: ms_function_exact(2, Z_B),
              Q(2460549996776228711, 2520000000000000000)),
        Check("monotonicity: F_3(-0.03+1.9i)", "exact", lambda: ms_function_exact(3, Z_B),
              Q(531703423127449318399669, 518400000000000000000000)),
        # printed as moduli 1.105 and 0.78; compared through their squares
        Check("as-vs-ref: |1+z+z^2/2|^2 at -2.1", "exact", lambda: _modulus_sq_partial(Z_AR_1, 2),
              Q(221, 200) ** 2),
        Check("as-vs-ref: |1+z+z^2/2|^2 at -1+1.6i", "exact", lambda: _modulus_sq_partial(Z_AR_2, 2),
              Q(39, 50) ** 2),
        Check("right-half-plane: F_1(0.01+i)", "exact", lambda: ms_function_exact(1, Z_RH),
              Q(19772000147001, 20000000000000)),
        Check("connectivity: ref_sq_4(0.75+3.5i)", "exact", lambda: ref_sq(4, Z_CN_1),
              Q(27473196877335817540321, 121029087867608368152576)),
        Check("connectivity: ref_sq_4(-0.25+2.5i)", "exact", lambda: ref_sq(4, Z_CN_2),
              Q(48715333577673689545536241, 75643179917255230095360000)),
        Check("connectivity: ref_sq_4(0.25+3i)", "exact", lambda: ref_sq(4, (Z_CN_1 + Z_CN_2) * Q(1, 2)),
              Q(9427129581150440422815049, 3025727196690209203814400)),
        Check("monotonicity: G_3(-0.25+2.75i)", "decimal", lambda: as_function(3, Z_C), -0.41731, DECIMAL_TOL),
        Check("monotonicity: G_4(-0.25+2.75i)", "decimal", lambda: as_function(4, Z_C), 0.06505, DECIMAL_TOL),
        Check("as-vs-ref: G_0(-2.1)", "decimal", lambda: as_function(0, -2.1), -0.07784, DECIMAL_TOL),
        Check("as-vs-ref: G_0(-1+1.6i)", "decimal", lambda: as_function(0, -1 + 1.6j), 0.13565, DECIMAL_TOL),
        Check("connectivity: G_4(-0.5+2i)", "decimal", lambda: as_function(4, Z_CN_3), -0.50028, DECIMAL_TOL),
        Check("connectivity: G_4(0.25+3.25i)", "decimal", lambda: as_function(4, Z_CN_4), -0.47024, DECIMAL_TOL),
        Check("connectivity: G_4(-0.125+2.625i)", "decimal",
              lambda: as_function(4, 0.5 * (Z_CN_3 + Z_CN_4)), 0.03656, DECIMAL_TOL),
        Check("convexity: 0.01 outside all r=1 regions", "property", _midpoint_excluded, True),
    ]


def run_check(check: Check) -> CheckResult:
    value = check.compute()
    note = ""
    if check.kind == "exact":
        passed = value == check.expected
        if not passed and value * value == check.expected:
            note = "expected value equals the square of the computed one"
    elif check.kind == "decimal":
        passed = abs(value - check.expected) <= check.tol
    else:
        passed = bool(value["excluded"]) == check.expected
    return CheckResult(check.name, check.kind, passed, value, check.expected, note)


def run_checks(checks: Optional[Sequence[Check]] = None, exact_only: bool = False) -> List[CheckResult]:
    checks = default_checks() if checks is None else list(checks)
    if exact_only:
        checks = [c for c in checks if c.kind == "exact"]
    return [run_check(c) for c in checks]


def format_table(results: Sequence[CheckResult]) -> str:
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(f"{status}  {res.name}")
        if not res.passed:
            lines.append(f"      computed: {res.computed}")
            lines.append(f"      expected: {res.expected}")
            if res.note:
                lines.append(f"      note: {res.note}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks pass")
    return "\n".join(lines)
