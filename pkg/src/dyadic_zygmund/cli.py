"""Command-line driver.

Exit status: 0 success, 1 a check failed, 2 bad usage or configuration.
Every subcommand accepts ``--config FILE`` holding flat ``key = value``
lines named like the long flags; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from typing import Optional, Sequence

from ._interval import to_fraction
from .bases import IndexNotFoundError, beta_concat, select_cd, theorem1_basis, theorem2_family
from .dyadic import AnchoredBox, DyadicRational, Exponent, RootExponent, normalize_exponent
from .experiment import (
    ExperimentConfig,
    ExperimentError,
    check_extension,
    check_oracle,
    run_lowerbound,
    run_suite,
)
from .measure import sparseness_witness, union_volume, union_volume_oracle

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


_EXP_RE = re.compile(r"^(-?)(?:root\((\d+),(\d+)\)|sqrt\((\d+)\))$")


def parse_exponent(text: str) -> Exponent:
    """``3``, ``-2``, ``sqrt(5)``, ``-root(7,3)`` (the real cube root of -7)."""
    t = text.replace(" ", "")
    if re.fullmatch(r"-?\d+", t):
        return int(t)
    m = _EXP_RE.match(t)
    if not m:
        raise UsageError(f"bad exponent {text!r}")
    sign = -1 if m.group(1) else 1
    if m.group(4):
        return normalize_exponent(RootExponent(sign * int(m.group(4)), 2))
    return normalize_exponent(RootExponent(sign * int(m.group(2)), int(m.group(3))))


def format_exponent(e: Exponent) -> str:
    if isinstance(e, int):
        return str(e)
    sign = "-" if e.q < 0 else ""
    if e.r == 2:
        return f"{sign}sqrt({abs(e.q)})"
    return f"{sign}root({abs(e.q)},{e.r})"


def parse_boxes(text: str) -> list[AnchoredBox]:
    boxes = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            boxes.append(AnchoredBox(parse_exponent(x) for x in _split_top(part)))
    if not boxes:
        raise UsageError("no boxes given")
    return boxes


def _split_top(text: str) -> list[str]:
    """Split on commas outside parentheses."""
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    out.append(cur)
    return out


def _num(x) -> str:
    if isinstance(x, DyadicRational):
        return str(x)
    return format(float(x), ".17g")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dyadic-zygmund", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def cmd(name, help_):
        sp = sub.add_parser(name, help=help_, argument_default=S)
        sp.add_argument("--config", help="key = value file; flags override it")
        return sp

    lb = cmd("lowerbound", "union measure and Orlicz ratios over a k range")
    lb.add_argument("--dim", type=int)
    lb.add_argument("--kmin", type=int)
    lb.add_argument("--kmax", type=int)
    lb.add_argument("--kstep", type=int)
    lb.add_argument("--cd", help="integer or 'auto'")
    lb.add_argument("--alpha", dest="alphas", help="comma-separated list, e.g. 0,1,2")
    lb.add_argument("--precision", type=int, help="mantissa bits (>= 64)")
    lb.add_argument("--tolerance", type=float)
    lb.add_argument("--out", help="CSV file (default: stdout)")
    lb.add_argument("--summary", help="JSON summary file (default: stderr)")

    cov = cmd("coverage", "all-shapes basis sweeps [-N, N]^d")
    cov.add_argument("--dim", type=int)
    cov.add_argument("--window", type=int)

    bt = cmd("beta", "print the first terms of the beta sequence")
    bt.add_argument("--dim", type=int)
    bt.add_argument("--count", type=int)

    fam = cmd("family", "list the exponent vectors of the lower-bound family")
    fam.add_argument("--dim", type=int)
    fam.add_argument("--k", type=int)
    fam.add_argument("--cd")

    ms = cmd("measure", "union measure of boxes given as 'e1,e2;e1,e2;...'")
    ms.add_argument("--boxes")
    ms.add_argument("--mode", choices=["auto", "exact", "certified"])
    ms.add_argument("--precision", type=int)
    ms.add_argument("--oracle", choices=["none", "inclusion-exclusion", "grid"])

    ext = cmd("check-extension", "random seeds: antidiagonal identity and monotonicity")
    ext.add_argument("--seed", type=int)
    ext.add_argument("--window", type=int)
    ext.add_argument("--trials", type=int)

    sp = cmd("sparseness", "greedy witnesses for the lower-bound family")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--cd")
    sp.add_argument("--precision", type=int)

    orc = cmd("oracle-check", "exact union measure against inclusion-exclusion")
    orc.add_argument("--trials", type=int)
    orc.add_argument("--max-boxes", dest="max_boxes", type=int)
    orc.add_argument("--seed", type=int)

    su = cmd("suite", "run every self-check")
    su.add_argument("--seed", type=int)
    su.add_argument("--out", help="JSON report file (default: stdout)")
    su.add_argument("--mutate-beta", dest="mutate_beta", action="store_true")
    return p


_DEFAULTS = {
    "coverage": {"dim": 3, "window": 2},
    "beta": {"dim": 4, "count": 10},
    "family": {"dim": 4, "k": 5, "cd": "auto"},
    "measure": {"mode": "auto", "precision": 64, "oracle": "none"},
    "check-extension": {"seed": 0, "window": 64, "trials": 200},
    "sparseness": {"dim": 4, "k": 25, "cd": "auto", "precision": 64},
    "oracle-check": {"trials": 500, "max_boxes": 12, "seed": 0},
}

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _merge(command: str, ns: argparse.Namespace) -> dict:
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    conf = read_config(ns.config) if getattr(ns, "config", None) else {}
    if command in ("lowerbound", "suite"):
        known = set(ExperimentConfig.field_names())
        if "alpha" in conf:
            conf["alphas"] = conf.pop("alpha")
    else:
        known = set(_DEFAULTS[command])
    unknown = sorted(set(conf) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    merged = dict(_DEFAULTS.get(command, {}))
    merged.update(conf)
    merged.update(flags)
    return merged


def _coerce_config(values: dict) -> ExperimentConfig:
    types = {f: type(getattr(ExperimentConfig(), f)) for f in ExperimentConfig.field_names()}
    kw = {}
    for key, v in values.items():
        if isinstance(v, str):
            t = types[key]
            if t is bool:
                if v.lower() not in _BOOL:
                    raise UsageError(f"{key}: expected a boolean, got {v!r}")
                v = _BOOL[v.lower()]
            elif t in (int, float):
                try:
                    v = t(v)
                except ValueError as exc:
                    raise UsageError(f"{key}: {exc}") from exc
        kw[key] = v
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _cd(value, d: int, k: int) -> int:
    if str(value) == "auto":
        return select_cd(d, k)
    try:
        c = int(value)
    except ValueError as exc:
        raise UsageError(f"cd must be an integer or 'auto', got {value!r}") from exc
    if c < 2:
        raise UsageError("cd must be >= 2")
    return c


def _as_int(opts: dict, *keys: str) -> None:
    for k in keys:
        try:
            opts[k] = int(opts[k])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{k} must be an integer") from exc


def cmd_lowerbound(opts: dict) -> int:
    cfg = _coerce_config(opts)
    try:
        report = run_lowerbound(cfg)
    except (ExperimentError, IndexNotFoundError) as exc:
        print(f"lowerbound failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if not cfg.out:
        sys.stdout.write(report.csv_text())
    if not cfg.summary:
        sys.stderr.write(report.summary_text())
    return EXIT_OK


def cmd_coverage(opts: dict) -> int:
    _as_int(opts, "dim", "window")
    if opts["dim"] < 2 or opts["window"] < 1:
        raise UsageError("coverage needs dim >= 2 and window >= 1")
    _, rep = theorem1_basis(opts["dim"], opts["window"])
    _emit({
        "dim": rep.d,
        "window": rep.window,
        "index_range": list(rep.index_range),
        "targets": rep.n_targets,
        "missing": [list(m) for m in rep.missing[:20]],
        "monotone": [m.ok for m in rep.monotone],
        "ok": rep.ok,
    })
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_beta(opts: dict) -> int:
    _as_int(opts, "dim", "count")
    if opts["dim"] < 4 or opts["count"] < 0:
        raise UsageError("beta needs dim >= 4 and count >= 0")
    for m in range(opts["count"]):
        print(m, " ".join(str(x) for x in beta_concat(opts["dim"], m)))
    return EXIT_OK


def cmd_family(opts: dict) -> int:
    _as_int(opts, "dim", "k")
    d, k = opts["dim"], opts["k"]
    if d < 4 or k < 0:
        raise UsageError("family needs dim >= 4 and k >= 0")
    cd = _cd(opts["cd"], d, k)
    try:
        fam = theorem2_family(d, k, cd)
    except IndexNotFoundError as exc:
        print(f"family failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for b in fam:
        print(" ".join(format_exponent(e) for e in b.exps))
    return EXIT_OK


def cmd_measure(opts: dict) -> int:
    if "boxes" not in opts:
        raise UsageError("measure needs --boxes")
    boxes = parse_boxes(opts["boxes"])
    _as_int(opts, "precision")
    if len({b.d for b in boxes}) != 1:
        raise UsageError("all boxes must have the same dimension")
    mode = None if opts["mode"] == "auto" else opts["mode"]
    try:
        res = union_volume(boxes, mode, opts["precision"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = {"value": _num(res.value), "error": _num(res.error), "mode": res.mode, "count": res.count}
    ok = True
    if opts["oracle"] != "none":
        ref = union_volume_oracle(boxes, opts["oracle"])
        if isinstance(ref, DyadicRational):
            out["oracle"] = str(ref)
            ok = res.contains(ref.to_fraction())
        else:
            out["oracle"] = {"lower": _num(ref.lower), "upper": _num(ref.upper)}
            ok = res.lower <= to_fraction(ref.upper) and to_fraction(ref.lower) <= res.upper
        out["oracle_agrees"] = ok
    _emit(out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_extension(opts: dict) -> int:
    _as_int(opts, "seed", "window", "trials")
    res = check_extension(opts["seed"], opts["trials"], opts["window"])
    _emit({"name": res.name, "passed": res.passed, "detail": res.detail})
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_sparseness(opts: dict) -> int:
    _as_int(opts, "dim", "k", "precision")
    d, k = opts["dim"], opts["k"]
    if d < 4 or k < 0:
        raise UsageError("sparseness needs dim >= 4 and k >= 0")
    cd = _cd(opts["cd"], d, k)
    rep = sparseness_witness(theorem2_family(d, k, cd), precision=opts["precision"])
    _emit({
        "dim": d,
        "k": k,
        "cd": cd,
        "boxes": len(rep.order),
        "union": _num(rep.union.value),
        "union_error": _num(rep.union.error),
        "sum_volumes": _num(rep.total_volume),
        "c_min": _num(rep.c_min),
        "c_min_error": _num(rep.c_min_error),
        "carleson_ratio": _num(rep.carleson_ratio),
    })
    return EXIT_OK if rep.c_min - rep.c_min_error > 0 else EXIT_FAIL


def cmd_oracle_check(opts: dict) -> int:
    _as_int(opts, "trials", "max_boxes", "seed")
    if not 1 <= opts["max_boxes"] <= 20:
        raise UsageError("max-boxes must be between 1 and 20")
    res = check_oracle(opts["seed"], opts["trials"], opts["max_boxes"])
    _emit({"name": res.name, "passed": res.passed, "detail": res.detail})
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_suite(opts: dict) -> int:
    out = opts.pop("out", None)
    cfg = _coerce_config(opts)
    report = run_suite(cfg)
    text = report.to_json()
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "lowerbound": cmd_lowerbound,
    "coverage": cmd_coverage,
    "beta": cmd_beta,
    "family": cmd_family,
    "measure": cmd_measure,
    "check-extension": cmd_check_extension,
    "sparseness": cmd_sparseness,
    "oracle-check": cmd_oracle_check,
    "suite": cmd_suite,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        opts = _merge(ns.command, ns)
        return COMMANDS[ns.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
