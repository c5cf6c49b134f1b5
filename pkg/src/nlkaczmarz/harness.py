"""Experiment runner: single runs, parameter sweeps and result files.

Run ``python -m nlkaczmarz --help`` for the command line.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field


from .core import ConfigError, Method, SolverConfig, validate_config
from .problems import PROBLEMS, BenchmarkSpec
from .solver import DivergenceError, solve, solve_with_timing

log = logging.getLogger(__name__)

CSV_FIELDS = ["problem", "n", "method", "q", "rho", "omega", "IT", "converged",
              "final_res_norm_sq", "cpu_mean_seconds", "breakdown"]


def parse_grid(text, kind=float):
    """Parse ``"0.5"``, ``"0.1,0.2"`` or an inclusive range ``"a:b:step"``."""
    if isinstance(text, (int, float)):
        return [kind(text)]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = part.split(":")
            if len(bits) != 3:
                raise ValueError(f"grid {part!r} is not of the form a:b:step")
            a, b, step = (float(v) for v in bits)
            if step <= 0 or b < a:
                raise ValueError(f"grid {part!r} needs a <= b and step > 0")
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            # round away the drift of a + i*step so 0.01:0.99:0.01 gives 0.07, not 0.07000000000000001
            out.extend(round(a + i * step, 12) for i in range(count))
        else:
            out.append(float(part))
    if not out:
        raise ValueError(f"empty grid {text!r}")
    if kind is int and any(v != int(v) for v in out):
        raise ValueError(f"grid {text!r} must hold integers")
    return [kind(v) for v in out]


@dataclass(frozen=True)
class PlanEntry:
    problem: str
    n: int
    method: Method
    q: int
    rho: float
    omega: float
    c: float = 0.9
    eps: float = 1e-6
    max_iter: int = 10000

    def config(self):
        return SolverConfig(self.method, self.q, self.omega, self.rho, self.eps, self.max_iter)

    def spec(self):
        return BenchmarkSpec(self.problem, self.n, self.c)


@dataclass
class ExperimentPlan:
    problems: list
    ns: list
    methods: list
    qs: list = field(default_factory=lambda: [2])
    rhos: list = field(default_factory=lambda: [1.0])
    omegas: list = field(default_factory=lambda: [0.0])
    c: float = 0.9
    eps: float = 1e-6
    max_iter: int = 10000
    repeats: int = 10
    out: str | None = None
    fmt: str = "csv"
    history: str | None = None

    def entries(self):
        """Validated Cartesian product of the grids.

        Plain methods run with omega = 0 only, and the greedy rule ignores
        rho (reported as 1.0), so duplicate combinations are dropped.
        """
        if self.repeats < 1:
            raise ConfigError(["repeats must be at least 1"])
        errors = []
        for name in self.problems:
            if name not in PROBLEMS:
                errors.append(f"unknown problem {name!r}")
        if errors:
            raise ConfigError(errors)
        seen = set()
        out = []
        for name, n, method, q, rho, omega in itertools.product(
                self.problems, self.ns, self.methods, self.qs, self.rhos, self.omegas):
            method = Method.parse(method)
            if not method.momentum:
                omega = 0.0
            if method.rule == "greedy":
                rho = 1.0
            entry = PlanEntry(name, int(n), method, int(q), float(rho), float(omega),
                              self.c, self.eps, self.max_iter)
            if entry in seen:
                continue
            seen.add(entry)
            try:
                validate_config(entry.config())
                entry.spec()
            except (ConfigError, ValueError) as exc:
                errors.append(f"{entry.problem} n={entry.n} {entry.method.value}: {exc}")
                continue
            out.append(entry)
        if errors:
            raise ConfigError(errors)
        return out


@dataclass
class ResultRow:
    problem: str
    n: int
    method: str
    q: int
    rho: float
    omega: float
    IT: int
    converged: bool
    final_res_norm_sq: float
    cpu_mean_seconds: float
    breakdown: bool
    error: str | None = field(default=None, compare=False)

    @property
    def key(self):
        return (self.problem, self.n, self.method, self.q, self.rho, self.omega)


def _row(entry, report=None, error=None):
    base = dict(problem=entry.problem, n=entry.n, method=entry.method.value, q=entry.q,
                rho=entry.rho, omega=entry.omega)
    if report is None:
        return ResultRow(**base, IT=error.k if isinstance(error, DivergenceError) else 0,
                         converged=False, final_res_norm_sq=math.inf,
                         cpu_mean_seconds=math.nan, breakdown=False, error=str(error))
    return ResultRow(**base, IT=report.iterations, converged=report.converged,
                     final_res_norm_sq=report.final_res_norm_sq,
                     cpu_mean_seconds=report.wall_time_seconds, breakdown=report.breakdown)


def run_single(entry: PlanEntry, repeats=10, history_path=None) -> ResultRow:
    """Solve one plan entry ``repeats`` times and report IT and mean wall time.

    Solver failures are recorded in the row (``error``) rather than raised.
    """
    problem = entry.spec().build()
    try:
        report = solve_with_timing(problem, entry.config(), repeats=repeats)
    except (ArithmeticError, ValueError) as exc:
        log.warning("%s n=%d %s failed: %s", entry.problem, entry.n, entry.method.value, exc)
        return _row(entry, error=exc)
    if history_path is not None:
        emit_history(report, history_path)
    return _row(entry, report)


def _determine(entry):
    problem = entry.spec().build()
    try:
        return _row(entry, solve(problem, entry.config()))
    except (ArithmeticError, ValueError) as exc:
        return _row(entry, error=exc)


def run_sweep(plan: ExperimentPlan, workers=None, timing=True):
    """Run every plan entry; return ``(rows, best)``.

    Iteration counts are found first, in parallel across ``workers``
    processes (default: all cores). Wall times then come from a separate,
    sequential ``repeats``-fold run of each entry so that workers do not
    compete for the clock. ``timing=False`` skips that pass.
    """
    entries = plan.entries()
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(entries))) as pool:
            rows = list(pool.map(_determine, entries))
    else:
        rows = [_determine(e) for e in entries]
    if timing:
        timed = []
        for entry, row in zip(entries, rows):
            if row.error is not None:
                timed.append(row)
                continue
            t = run_single(entry, repeats=plan.repeats)
            if (t.IT, t.converged) != (row.IT, row.converged):
                raise RuntimeError(f"timing run disagrees with sweep run for {entry}")
            timed.append(t)
        rows = timed
    rows.sort(key=lambda r: r.key)
    return rows, best_omega(rows)


@dataclass
class BestOmega:
    problem: str
    n: int
    method: str
    q: int
    rho: float
    omega: float | None
    IT: int | None
    note: str = ""


def best_omega(rows):
    """Fewest-iteration omega per (problem, n, method, q, rho); ties go to the smaller omega."""
    groups = {}
    for r in rows:
        groups.setdefault((r.problem, r.n, r.method, r.q, r.rho), []).append(r)
    out = []
    for key in sorted(groups):
        good = [r for r in groups[key] if r.converged]
        if not good:
            out.append(BestOmega(*key, omega=None, IT=None, note="no convergent configuration"))
            continue
        win = min(good, key=lambda r: (r.IT, r.omega))
        out.append(BestOmega(*key, omega=win.omega, IT=win.IT))
    return out


def format_it(row):
    if not row.converged and not row.breakdown and row.error is None:
        return f">{row.IT}"
    return str(row.IT)


def emit_results(rows, fmt, path):
    """Write rows as CSV (capped runs shown as ``>K``) or as a JSON array."""
    if not rows:
        raise ValueError("no rows to write")
    fmt = fmt.lower()
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            for r in rows:
                d = asdict(r)
                d["IT"] = format_it(r)
                w.writerow([_fmt(d[k]) for k in CSV_FIELDS])
    elif fmt == "json":
        payload = []
        for r in rows:
            d = asdict(r)
            payload.append({k: _json_value(d[k]) for k in CSV_FIELDS})
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)  # "inf" / "nan": JSON has no literal for them
    return v


def _parse_float(v):
    return float(v) if not isinstance(v, (int, float)) else float(v)


def read_results(path):
    """Inverse of :func:`emit_results`; the format is taken from the extension."""
    def build(d):
        it = str(d["IT"])
        return ResultRow(
            problem=d["problem"], n=int(d["n"]), method=d["method"], q=int(d["q"]),
            rho=_parse_float(d["rho"]), omega=_parse_float(d["omega"]),
            IT=int(it.lstrip(">")), converged=_parse_bool(d["converged"]),
            final_res_norm_sq=_parse_float(d["final_res_norm_sq"]),
            cpu_mean_seconds=_parse_float(d["cpu_mean_seconds"]),
            breakdown=_parse_bool(d["breakdown"]))
    if str(path).endswith(".json"):
        with open(path) as fh:
            return [build(d) for d in json.load(fh)]
    with open(path, newline="") as fh:
        return [build(d) for d in csv.DictReader(fh)]


def _parse_bool(v):
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("true", "1", "yes")


def emit_history(report, path):
    """Write ``iter,res_norm_sq`` rows, one per iterate (k = 0 .. IT)."""
    if not report.history:
        raise ValueError("report has no history")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "res_norm_sq"])
        for k, r in report.history:
            w.writerow([k, repr(float(r))])


def read_config_file(path):
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError([f"{path}:{lineno}: expected key=value"])
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


DEFAULTS = dict(problem="singular-broyden", n="100", method="mrwnk-m", q="2", omega="0.0",
                rho="1.0", eps="1e-6", max_iter="10000", repeats="10", c="0.9",
                out=None, format="csv", history=None, workers=None)


def build_parser():
    p = argparse.ArgumentParser(
        prog="python -m nlkaczmarz",
        description="Greedy block nonlinear Kaczmarz experiments (RBWNK, MRWNK and momentum variants).")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--problem", help=f"comma list of {', '.join(sorted(PROBLEMS))}")
    p.add_argument("--n", help="dimension(s), comma list")
    p.add_argument("--method", help="rbwnk, mrwnk, rbwnk-m, mrwnk-m (comma list)")
    p.add_argument("--q", help="weight exponent(s): int, list or a:b:step")
    p.add_argument("--omega", help="momentum: float, list or a:b:step")
    p.add_argument("--rho", help="max-residual relaxation: float, list or a:b:step")
    p.add_argument("--eps", help="tolerance on ||f||^2 (default 1e-6)")
    p.add_argument("--max-iter", dest="max_iter", help="iteration cap (default 10000)")
    p.add_argument("--repeats", help="timed repetitions per entry (default 10)")
    p.add_argument("--c", help="H-equation constant (default 0.9)")
    p.add_argument("--out", help="result file; omitted = table on stdout")
    p.add_argument("--format", choices=["csv", "json"], help="result file format (default csv)")
    p.add_argument("--history", help="residual history CSV (single run only)")
    p.add_argument("--workers", help="parallel processes for sweeps (default: all cores)")
    return p


def plan_from_settings(s):
    try:
        plan = ExperimentPlan(
            problems=[v.strip() for v in s["problem"].split(",") if v.strip()],
            ns=parse_grid(s["n"], int),
            methods=[Method.parse(v) for v in s["method"].split(",") if v.strip()],
            qs=parse_grid(s["q"], int),
            rhos=parse_grid(s["rho"]),
            omegas=parse_grid(s["omega"]),
            c=float(s["c"]),
            eps=float(s["eps"]),
            max_iter=int(s["max_iter"]),
            repeats=int(s["repeats"]),
            out=s["out"],
            fmt=s["format"],
            history=s["history"],
        )
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    return plan


def _print_table(rows, best, stream):
    header = f"{'problem':<20}{'n':>6}  {'method':<8}{'q':>3}{'rho':>6}{'omega':>7}{'IT':>8}{'res^2':>12}{'cpu[s]':>11}"
    print(header, file=stream)
    for r in rows:
        note = f"  ({r.error})" if r.error else ("  breakdown" if r.breakdown else "")
        print(f"{r.problem:<20}{r.n:>6}  {r.method:<8}{r.q:>3}{r.rho:>6.2f}{r.omega:>7.2f}"
              f"{format_it(r):>8}{r.final_res_norm_sq:>12.3e}{r.cpu_mean_seconds:>11.5f}{note}",
              file=stream)
    swept = {}
    for r in rows:
        swept.setdefault((r.problem, r.n, r.method, r.q, r.rho), set()).add(r.omega)
    if any(len(v) > 1 for v in swept.values()):
        print("\nbest omega:", file=stream)
        for b in best:
            if len(swept[(b.problem, b.n, b.method, b.q, b.rho)]) < 2:
                continue
            what = b.note if b.omega is None else f"omega={b.omega:g} IT={b.IT}"
            print(f"  {b.problem} n={b.n} {b.method} q={b.q} rho={b.rho:g}: {what}", file=stream)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    settings = dict(DEFAULTS)
    try:
        if args.config:
            try:
                from_file = read_config_file(args.config)
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return 3
            unknown = set(from_file) - set(DEFAULTS)
            if unknown:
                raise ConfigError([f"unknown config key(s): {', '.join(sorted(unknown))}"])
            settings.update(from_file)
        settings.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})
        plan = plan_from_settings(settings)
        entries = plan.entries()
        if plan.history and len(entries) != 1:
            raise ConfigError(["--history needs exactly one run"])
        workers = int(settings["workers"]) if settings["workers"] else None
    except ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if len(entries) == 1:
            rows = [run_single(entries[0], repeats=plan.repeats, history_path=plan.history)]
            best = best_omega(rows)
        else:
            rows, best = run_sweep(plan, workers=workers)
        if plan.out:
            emit_results(rows, plan.fmt, plan.out)
        else:
            _print_table(rows, best, sys.stdout)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0
