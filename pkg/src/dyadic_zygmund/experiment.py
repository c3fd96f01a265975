"""Lower-bound sweeps, slope fits and the self-check suite.

Outputs are written with fixed column order, fixed float formatting and
sorted JSON keys so reruns are byte-identical; no timings are recorded.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import random
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import gmpy2
import numpy as np

from . import __version__
from .bases import (
    IndexNotFoundError,
    _tuples_for_scale,
    beta_concat,
    beta_index_find,
    beta_shell,
    select_cd,
    theorem1_basis,
    theorem2_family,
)
from .dyadic import AnchoredBox, DyadicRational, contains_cube
from .extension import MonotoneExtension, SeedFunction, antidiagonal_mismatches, verify_monotone
from .maximal import TestFunction, average_over_box, orlicz_rhs
from .measure import sparseness_witness, union_volume, union_volume_oracle

__all__ = [
    "ExperimentConfig",
    "LowerBoundRow",
    "LowerBoundReport",
    "SlopeFit",
    "CheckResult",
    "SuiteReport",
    "DegenerateFitError",
    "fit_loglog_slope",
    "run_lowerbound",
    "run_suite",
    "parse_alpha_list",
    "BETA_D4_DISPLAY",
]

# first three shells for d = 4, as fixed by the construction
BETA_D4_DISPLAY = (
    [(0, 0)],
    [(0, 0), (1, -1)],
    [(0, 0), (1, -1), (2, -2)],
)


def parse_alpha_list(text: Union[str, Sequence]) -> tuple[Fraction, ...]:
    if isinstance(text, str):
        parts = [p for p in text.replace(" ", "").split(",") if p]
    else:
        parts = list(text)
    out = tuple(Fraction(p) if not isinstance(p, float) else Fraction(str(p)) for p in parts)
    if any(a < 0 for a in out):
        raise ValueError("alpha values must be >= 0")
    return out


def _fmt_alpha(a: Fraction) -> str:
    return str(a.numerator) if a.denominator == 1 else f"{float(a):g}"


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 4
    kmin: int = 50
    kmax: int = 400
    kstep: int = 25
    cd: Union[int, str] = "auto"
    alphas: tuple = (Fraction(0), Fraction(1), Fraction(2))
    precision: int = 64
    out: Optional[str] = None
    summary: Optional[str] = None
    seed: int = 0
    tolerance: float = 0.15
    # suite parameters
    trials: int = 200
    window: int = 64
    oracle_trials: int = 500
    max_boxes: int = 12
    index_j: int = 60
    mutate_beta: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alphas", parse_alpha_list(self.alphas))
        if self.cd != "auto":
            object.__setattr__(self, "cd", int(self.cd))
            if self.cd < 2:
                raise ValueError("cd must be an integer >= 2 or 'auto'")
        if self.precision < 64:
            raise ValueError("precision must be >= 64 bits")
        if self.kmin < 0 or self.kmax < self.kmin:
            raise ValueError("k range is empty")
        if self.kstep < 1:
            raise ValueError("kstep must be >= 1")

    @property
    def k_values(self) -> list[int]:
        ks = list(range(self.kmin, self.kmax + 1, self.kstep))
        if ks[-1] != self.kmax:
            ks.append(self.kmax)
        return ks

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class LowerBoundRow:
    k: int
    family_size: int
    union: float
    union_error: float
    sum_volumes: float
    c_min: float
    rhs: dict  # alpha -> value
    ratio: dict  # alpha -> |union| / rhs


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    n_points: int


class DegenerateFitError(ValueError):
    pass


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of ``log y`` against ``log x``.

    ``residual`` is the largest absolute deviation from the fitted line in
    log space.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    xs = np.array([float(p[0]) for p in points])
    ys = np.array([float(p[1]) for p in points])
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("points must be positive")
    if np.all(xs == xs[0]):
        raise DegenerateFitError("all x values are equal")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("x values must be strictly increasing")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return SlopeFit(float(slope), float(intercept), resid, len(points))


# ------------------------------------------------------------------ lowerbound


def _g(x) -> str:
    return format(float(x), ".17g")


@dataclass
class LowerBoundReport:
    rows: list[LowerBoundRow]
    summary: dict

    def csv_text(self) -> str:
        buf = io.StringIO()
        _write_csv(buf, self.rows, self.summary["alphas"])
        return buf.getvalue()

    def summary_text(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2) + "\n"


def _csv_header(alphas) -> list[str]:
    cols = ["k", "family_size", "union", "union_error", "sum_volumes", "c_min"]
    cols += [f"rhs_alpha_{a}" for a in alphas]
    cols += [f"ratio_alpha_{a}" for a in alphas]
    return cols


def _csv_row(row: LowerBoundRow, alphas) -> list[str]:
    vals = [str(row.k), str(row.family_size), _g(row.union), _g(row.union_error), _g(row.sum_volumes), _g(row.c_min)]
    vals += [_g(row.rhs[a]) for a in alphas]
    vals += [_g(row.ratio[a]) for a in alphas]
    return vals


def _write_csv(fh, rows, alphas):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(_csv_header(alphas))
    for r in rows:
        w.writerow(_csv_row(r, alphas))


class ExperimentError(RuntimeError):
    pass


def _versions() -> dict:
    return {
        "dyadic_zygmund": __version__,
        "gmpy2": gmpy2.version(),
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def lowerbound_row(d: int, k: int, cd: int, alphas, precision: int) -> LowerBoundRow:
    fam = theorem2_family(d, k, cd)
    f = TestFunction(k, d)
    for b in fam:
        if not contains_cube(b, k):
            raise ExperimentError(f"box {b} misses the support of f_{k}")
        avg = average_over_box(b, f)
        if not (isinstance(avg, DyadicRational) and avg == 1):
            raise ExperimentError(f"box {b} has average {avg!r}, expected exactly 1")
    rep = sparseness_witness(fam, precision=precision)
    union = rep.union
    names = [_fmt_alpha(a) for a in alphas]
    rhs = {}
    ratio = {}
    value = union.value.to_fraction() if isinstance(union.value, DyadicRational) else union.value
    prec = max(precision, 128)
    for a, name in zip(alphas, names):
        r = orlicz_rhs(f, a, prec)
        rhs[name] = float(r)
        with gmpy2.context(precision=prec):
            ratio[name] = float(gmpy2.mpfr(value) / r)
    return LowerBoundRow(k, len(fam), float(union.value), float(union.error), rep.total_volume, rep.c_min, rhs, ratio)


def _fit_window(ks: list[int]) -> list[int]:
    mid = (ks[0] + ks[-1]) / 2
    upper = [k for k in ks if k >= mid]
    return upper if len(upper) >= 3 else ks


def _summarize(cfg: ExperimentConfig, cd: int, rows: list[LowerBoundRow], names: list[str]) -> dict:
    ks = [r.k for r in rows]
    window = _fit_window(ks)
    by_k = {r.k: r for r in rows}
    summary = {
        "dim": cfg.dim,
        "k_values": ks,
        "cd": cd,
        "cd_mode": "auto" if cfg.cd == "auto" else "fixed",
        "alphas": names,
        "precision": cfg.precision,
        "tolerance": cfg.tolerance,
        "fit_window": [window[0], window[-1]] if window else None,
        "versions": _versions(),
        "union_slope": None,
        "ratio_slopes": {},
        "alpha_threshold": None,
        "max_relative_error": max((r.union_error / r.union for r in rows), default=None),
        "c_min": min((r.c_min for r in rows), default=None),
    }
    if len(window) < 3:
        return summary
    u = fit_loglog_slope([(k, by_k[k].union) for k in window])
    summary["union_slope"] = {"slope": u.slope, "residual": u.residual}
    threshold = None
    for name, a in zip(names, cfg.alphas):
        fit = fit_loglog_slope([(k, by_k[k].ratio[name]) for k in window])
        summary["ratio_slopes"][name] = {"slope": fit.slope, "residual": fit.residual}
        if fit.slope <= cfg.tolerance and (threshold is None or a < threshold[1]):
            threshold = (name, a)
    summary["alpha_threshold"] = threshold[0] if threshold else None
    return summary


def resolve_cd(cfg: ExperimentConfig) -> int:
    if cfg.cd == "auto":
        return select_cd(cfg.dim, cfg.kmax)
    return cfg.cd


def run_lowerbound(cfg: ExperimentConfig, progress: Optional[Callable[[LowerBoundRow], None]] = None) -> LowerBoundReport:
    """One row per k; CSV rows are flushed as they are produced."""
    if cfg.dim < 4:
        raise ValueError("the lower-bound family needs dim >= 4")
    names = [_fmt_alpha(a) for a in cfg.alphas]
    rows: list[LowerBoundRow] = []
    fh = open(cfg.out, "w", newline="", encoding="utf-8") if cfg.out else None
    try:
        if fh:
            csv.writer(fh, lineterminator="\n").writerow(_csv_header(names))
            fh.flush()
        cd = resolve_cd(cfg)
        for k in cfg.k_values:
            row = lowerbound_row(cfg.dim, k, cd, cfg.alphas, cfg.precision)
            rows.append(row)
            if fh:
                csv.writer(fh, lineterminator="\n").writerow(_csv_row(row, names))
                fh.flush()
            if progress:
                progress(row)
    finally:
        if fh:
            fh.close()
    report = LowerBoundReport(rows, _summarize(cfg, cd, rows, names))
    if cfg.summary:
        with open(cfg.summary, "w", encoding="utf-8") as out:
            out.write(report.summary_text())
    return report


# ----------------------------------------------------------------------- suite


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    checks: list[CheckResult]
    seed: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        data = {
            "seed": self.seed,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }
        return json.dumps(data, sort_keys=True, indent=2) + "\n"


def check_extension(seed: int, trials: int, window: int) -> CheckResult:
    rng = random.Random(seed)
    failures = []
    for t in range(trials):
        vals = tuple(rng.randint(-window, window) for _ in range(2 * window + 1))
        ext = MonotoneExtension(SeedFunction(vals, -window))
        bad = antidiagonal_mismatches(ext, range(-window, window + 1))
        mono = verify_monotone(ext, window)
        if bad or not mono.ok:
            failures.append({"trial": t, "antidiagonal": bad[:5], "violation": mono.violation})
    return CheckResult("extension", not failures, {"trials": trials, "window": window, "failures": failures[:5]})


def check_coverage(cases=((2, 3), (3, 2), (4, 2))) -> CheckResult:
    detail = {}
    ok = True
    for d, n in cases:
        _, rep = theorem1_basis(d, n)
        detail[f"d{d}_N{n}"] = {"missing": len(rep.missing), "monotone": all(m.ok for m in rep.monotone)}
        ok &= rep.ok
    return CheckResult("coverage", ok, detail)


def mutated_shells(seed: int) -> Callable[[int, int], list]:
    """A beta_shell replacement whose shells are shuffled (never left intact)."""
    rng = random.Random(seed)

    def shell(d: int, n: int) -> list:
        s = beta_shell(d, n)
        if len(s) < 2:
            return s
        perm = s[:]
        rng.shuffle(perm)
        return perm if perm != s else s[::-1]

    return shell


def check_beta_prefix(shell_fn=beta_shell) -> CheckResult:
    shells = [shell_fn(4, n) for n in range(3)]
    prefix = [beta_concat(4, m) for m in range(6)]
    want = [list(s) for s in BETA_D4_DISPLAY]
    ok = shells == want and prefix == [t for s in want for t in s]
    return CheckResult("beta_prefix", ok, {"shells": [[list(t) for t in s] for s in shells], "prefix": [list(t) for t in prefix]})


def check_index_bounds(dims=(4, 5), jmax: int = 60) -> CheckResult:
    detail = {}
    ok = True
    for d in dims:
        try:
            cd = select_cd(d, jmax)
        except IndexNotFoundError as exc:
            detail[f"d{d}"] = {"error": str(exc)}
            ok = False
            continue
        checked = 0
        bad = []
        for j in range(1, jmax + 1):
            for tup in _tuples_for_scale(d, j, cd):
                m = beta_index_find(d, tup, j, cd, list_all=False)
                checked += 1
                if not (cd * m.n >= (j - 1) ** (d - 2) and m.n <= j ** (d - 2) and beta_concat(d, m.n) == tuple(tup)):
                    bad.append([j, list(tup)])
        # minimality: the next smaller candidate must fail somewhere
        smaller_fails = True
        if cd - 1 >= 2:
            try:
                select_cd(d, jmax, start=cd - 1, limit=cd - 1)
                smaller_fails = False
            except IndexNotFoundError:
                pass
        detail[f"d{d}"] = {"cd": cd, "tuples": checked, "bad": bad[:5], "smaller_cd_fails": smaller_fails}
        ok &= not bad and smaller_fails
    return CheckResult("index_bounds", ok, detail)


def random_dyadic_boxes(rng: random.Random, max_boxes: int, max_dim: int = 5, lo: int = -6, hi: int = 6) -> list[AnchoredBox]:
    d = rng.randint(1, max_dim)
    n = rng.randint(1, max_boxes)
    return [AnchoredBox([rng.randint(lo, hi) for _ in range(d)]) for _ in range(n)]


def check_oracle(seed: int, trials: int, max_boxes: int) -> CheckResult:
    rng = random.Random(seed)
    mismatches = []
    for t in range(trials):
        boxes = random_dyadic_boxes(rng, max_boxes)
        exact = union_volume(boxes, "exact").value
        ie = union_volume_oracle(boxes, "inclusion-exclusion")
        if exact != ie:
            mismatches.append({"trial": t, "exact": str(exact), "oracle": str(ie)})
    return CheckResult("oracle_equivalence", not mismatches, {"trials": trials, "max_boxes": max_boxes, "mismatches": mismatches[:5]})


def check_certified(seed: int, trials: int = 100) -> CheckResult:
    rng = random.Random(seed + 1)
    bad = []
    for t in range(trials):
        boxes = random_dyadic_boxes(rng, 8, 4)
        exact = union_volume(boxes, "exact").value
        cert = union_volume(boxes, "certified", 64)
        if not cert.contains(exact.to_fraction()):
            bad.append(t)
    return CheckResult("certified_contains_exact", not bad, {"trials": trials, "failures": bad[:5]})


def check_witness_sum(seed: int, trials: int = 100) -> CheckResult:
    rng = random.Random(seed + 2)
    bad = []
    for t in range(trials):
        boxes = random_dyadic_boxes(rng, 8, 4)
        union = union_volume(boxes, "exact").value
        order = list(range(len(boxes)))
        rng.shuffle(order)
        for o in (None, order):
            rep = sparseness_witness(boxes, o)
            if sum(rep.witnesses, DyadicRational(0)) != union:
                bad.append(t)
    return CheckResult("witness_sum", not bad, {"trials": trials, "failures": bad[:5]})


def check_averages(d: int = 4, ks=(5, 10, 20)) -> CheckResult:
    detail = {}
    ok = True
    for k in ks:
        cd = select_cd(d, k)
        fam = theorem2_family(d, k, cd)
        f = TestFunction(k, d)
        bad = sum(1 for b in fam if not (contains_cube(b, k) and average_over_box(b, f) == 1))
        detail[f"k{k}"] = {"boxes": len(fam), "bad": bad, "cd": cd}
        ok &= bad == 0
    return CheckResult("exact_averages", ok, detail)


def run_suite(cfg: ExperimentConfig) -> SuiteReport:
    """Run every self-check; a failing or crashing check never stops the rest."""
    shell_fn = mutated_shells(cfg.seed) if cfg.mutate_beta else beta_shell
    jobs = [
        ("extension", lambda: check_extension(cfg.seed, cfg.trials, cfg.window)),
        ("coverage", check_coverage),
        ("beta_prefix", lambda: check_beta_prefix(shell_fn)),
        ("index_bounds", lambda: check_index_bounds(jmax=cfg.index_j)),
        ("oracle_equivalence", lambda: check_oracle(cfg.seed, cfg.oracle_trials, cfg.max_boxes)),
        ("certified_contains_exact", lambda: check_certified(cfg.seed)),
        ("witness_sum", lambda: check_witness_sum(cfg.seed)),
        ("exact_averages", check_averages),
    ]
    results = []
    for name, job in jobs:
        try:
            results.append(job())
        except Exception as exc:  # reported, not raised
            results.append(CheckResult(name, False, {"error": f"{type(exc).__name__}: {exc}"}))
    return SuiteReport(results, cfg.seed)
