"""Command-line front end: instance generation, estimator runs, exact
baselines, and seeded multi-trial sweeps with CSV/JSON output.

Every estimator run prints the final query-ledger breakdown.  Sweep output
uses the fixed column set

    family,n,delta,param,trial,estimate,exact,abs_err,rel_err,queries,success

and files are written via a temporary name plus rename, so a failed run
never leaves a partial file.  Per-trial RNG streams are spawned from
(master seed, trial index), making trials order-independent.  Wall times
are printed to stdout but kept out of output files so identical seeds give
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from .cells import estimate_nonempty_count, cell_sampling
from .domain import BLUE, RED, DomainSpec, is_pow2
from .emd import (EmdConfig, EXACT_EMD_CAP, estimate_emd, estimate_emd_1d,
                  exact_emd, exact_emd_1d)
from .gadgets import gen_cellsampling_lb, gen_emd_lb, gen_mst_lb
from .mst import MstConfig, estimate_mst, exact_mst, spanner_mst_exact
from .oracle import ColoredOracle, ExactCounter, QueryLedger
from .pointset import PointSet

CSV_COLUMNS = ["family", "n", "delta", "param", "trial", "estimate", "exact",
               "abs_err", "rel_err", "queries", "success"]


@dataclass
class TrialRecord:
    trial: int
    estimate: float
    exact: float | None
    queries_used: int
    wall_time: float
    success: bool | None

    def row(self, family: str, n: int, delta: int, param) -> dict:
        ex = "" if self.exact is None else repr(float(self.exact))
        abs_err = rel_err = ""
        if self.exact is not None:
            abs_err = repr(float(abs(self.estimate - self.exact)))
            if self.exact != 0:
                rel_err = repr(float(abs(self.estimate - self.exact)
                                     / self.exact))
        return {"family": family, "n": n, "delta": delta, "param": param,
                "trial": self.trial, "estimate": repr(float(self.estimate)),
                "exact": ex, "abs_err": abs_err, "rel_err": rel_err,
                "queries": self.queries_used,
                "success": "" if self.success is None else int(self.success)}


@dataclass
class ExperimentConfig:
    command: str
    family: str
    n: int
    delta: int
    params: list                      # sweep values (s or eps)
    trials: int
    seed: int
    out: str | None = None
    fmt: str = "csv"
    instance: PointSet | None = None  # fixed instance; None -> fresh per trial
    extra: dict = field(default_factory=dict)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def _write_atomic(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rcgeo-tmp-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(rows: list[dict], summary: dict, out: str | None, fmt: str) -> None:
    if out is None:
        return
    if fmt == "json":
        _write_atomic(out, json.dumps({"records": rows, "summary": summary},
                                      indent=2, sort_keys=True) + "\n")
    else:
        import io
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _write_atomic(out, buf.getvalue())


def _print_ledger(ledger: QueryLedger) -> None:
    parts = " ".join(f"{k}={v}" for k, v in sorted(ledger.breakdown().items())
                     if k != "total")
    print(f"queries total={ledger.total} {parts}")


def _random_emd_instance(n: int, delta: int, d: int,
                         rng: np.random.Generator) -> PointSet:
    coords = rng.integers(0, delta, size=(2 * n, d))
    colors = np.concatenate([np.full(n, RED, np.int8), np.full(n, BLUE, np.int8)])
    return PointSet(coords, colors, DomainSpec(d, delta))


def _random_plain_instance(n: int, delta: int, d: int,
                           rng: np.random.Generator) -> PointSet:
    coords = rng.integers(0, delta, size=(n, d))
    return PointSet(coords, np.full(n, 0, np.int8), DomainSpec(d, delta))


def _slope(xs: list[float], ys: list[float]):
    """Least-squares slope of log(y) vs log(x) over positive entries."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if y > 0]
    if len(pts) < 2:
        return None
    lx = [p[0] for p in pts]
    ly = [p[1] for p in pts]
    return float(np.polyfit(lx, ly, 1)[0])


def run_sweep(config: ExperimentConfig):
    """Run trials for every sweep value; returns (records, summary) and
    writes the configured output file."""
    rows = []
    all_records = []
    med_errors = []
    max_queries = 0
    successes = total = 0
    for param in config.params:
        errs = []
        for trial in range(config.trials):
            rng = _trial_rng(config.seed, trial)
            rec = _run_trial(config, param, trial, rng)
            all_records.append(rec)
            n, delta = config.n, config.delta
            rows.append(rec.row(config.family, n, delta, param, ))
            max_queries = max(max_queries, rec.queries_used)
            if rec.exact is not None:
                errs.append(abs(rec.estimate - rec.exact))
            if rec.success is not None:
                successes += int(rec.success)
                total += 1
        med_errors.append(float(np.median(errs)) if errs else None)
    summary = {
        "trials": config.trials * len(config.params),
        "success_rate": (successes / total) if total else None,
        "median_abs_err": med_errors,
        "max_queries": max_queries,
        "slope": _slope([float(p) for p in config.params],
                        [e for e in med_errors if e is not None]
                        ) if all(e is not None for e in med_errors) else None,
    }
    _emit(rows, summary, config.out, config.fmt)
    return all_records, summary


def _run_trial(config: ExperimentConfig, param, trial: int,
               rng: np.random.Generator) -> TrialRecord:
    family = config.family
    t0 = time.perf_counter()
    if family.startswith("emd"):
        d = config.extra.get("d", 1)
        ps = config.instance or _random_emd_instance(config.n, config.delta,
                                                     d, rng)
        co = ColoredOracle.from_pointset(ps)
        ledger = QueryLedger()
        s = int(param)
        cfg = EmdConfig(reps=config.extra.get("reps"),
                        shifts=config.extra.get("shifts"))
        if ps.domain.d == 1:
            est = estimate_emd_1d(co, s, rng, ledger, cfg)
            opt = float(exact_emd_1d(ps.reds[:, 0], ps.blues[:, 0]))
            band = config.n * config.delta / s ** 2
            lo = opt / 4 - 8 * band
            hi = 4 * opt + 8 * band
        else:
            est = estimate_emd(co, s, rng, ledger, cfg)
            opt = (exact_emd(ps.reds, ps.blues)
                   if ps.reds.shape[0] <= EXACT_EMD_CAP else None)
            p = 1 + 1 / ps.domain.d
            band = config.n * config.delta / s ** p
            lo = (opt / 4 - 8 * band) if opt is not None else None
            hi = (4 * math.log2(config.delta) * opt + 8 * band
                  if opt is not None else None)
        success = (lo <= est.value <= hi) if opt is not None else None
        rec = TrialRecord(trial, est.value, opt, est.queries_used,
                          time.perf_counter() - t0, success)
        _print_ledger(ledger)
        return rec
    if family == "mst":
        ps = config.instance or _random_plain_instance(config.n, config.delta,
                                                       config.extra.get("d", 2),
                                                       rng)
        cnt = ExactCounter(ps.coords, ps.domain)
        ledger = QueryLedger()
        eps = float(param)
        est = estimate_mst(cnt, eps, rng, ledger,
                           MstConfig(level_reps=config.extra.get("reps")))
        opt = exact_mst(ps.coords) if ps.n <= 8192 else None
        success = (abs(est.value - opt) <= 3 * eps * opt) if opt else None
        rec = TrialRecord(trial, est.value, opt, est.queries_used,
                          time.perf_counter() - t0, success)
        _print_ledger(ledger)
        return rec
    if family == "cellcount":
        ps = config.instance
        if ps is None:
            raise ValueError("cell-count sweeps need an instance file")
        cnt = ExactCounter(ps.coords, ps.domain)
        ledger = QueryLedger()
        est = estimate_nonempty_count(cnt, int(param), rng, ledger)
        grid = (ps.coords // int(param))
        exact = float(len(np.unique(grid, axis=0)))
        success = 0.9 * exact <= est.value <= 1.1 * exact
        rec = TrialRecord(trial, est.value, exact, est.queries_used,
                          time.perf_counter() - t0, success)
        _print_ledger(ledger)
        return rec
    raise ValueError(f"unknown sweep family {family!r}")


# ---------------------------------------------------------------------------
# subcommands


def _load(path: str) -> PointSet:
    return PointSet.load(path)


def _cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    witness = args.witness
    if witness not in (None, "random"):
        witness = int(witness)
    if args.family in ("emd1d", "emd2d", "emd3d"):
        d = int(args.family[3])
        gi = gen_emd_lb(d, args.n, args.s, witness=witness, rng=rng,
                        delta=args.delta)
    elif args.family == "cellsampling":
        gi = gen_cellsampling_lb(args.n, args.c, witness=witness, rng=rng)
    elif args.family == "mst":
        gi = gen_mst_lb(args.n, witness=witness, rng=rng)
    else:
        raise ValueError(f"unknown family {args.family!r}")
    gi.points.save(args.out)
    print(f"wrote {args.out}: family={gi.family} params={gi.params} "
          f"declared_cost={gi.declared_cost}")
    return 0


def _sweep_from_args(args, family: str, params: list,
                     instance: PointSet | None, extra: dict | None = None):
    n = args.n if instance is None else instance.n // (
        2 if family.startswith("emd") else 1)
    delta = args.delta if instance is None else instance.domain.delta
    cfg = ExperimentConfig(command=family, family=family, n=n, delta=delta,
                           params=params, trials=args.trials, seed=args.seed,
                           out=args.out,
                           fmt="json" if (args.out or "").endswith(".json")
                           else "csv",
                           instance=instance, extra=extra or {})
    records, summary = run_sweep(cfg)
    print(json.dumps({"summary": summary}, sort_keys=True))
    return 0


def _cmd_estimate_emd(args) -> int:
    instance = _load(args.infile) if args.infile else None
    extra = {"d": args.d, "reps": args.reps, "shifts": args.shifts}
    return _sweep_from_args(args, f"emd{args.d}d" if instance is None
                            else f"emd{instance.domain.d}d",
                            [args.s], instance, extra)


def _cmd_estimate_mst(args) -> int:
    instance = _load(args.infile) if args.infile else None
    return _sweep_from_args(args, "mst", [args.eps], instance,
                            {"d": args.d, "reps": args.reps})


def _cmd_sample_cell(args) -> int:
    ps = _load(args.infile)
    cnt = ExactCounter(ps.coords, ps.domain)
    ledger = QueryLedger()
    rng = _trial_rng(args.seed, 0)
    s = cell_sampling(cnt, args.r, rng, ledger)
    print(f"cell level={s.cell.level} index={s.cell.index} "
          f"branch={s.branch} m_estimate={s.m_estimate}")
    _print_ledger(ledger)
    return 0


def _cmd_count_cells(args) -> int:
    ps = _load(args.infile)
    cnt = ExactCounter(ps.coords, ps.domain)
    ledger = QueryLedger()
    rng = _trial_rng(args.seed, 0)
    est = estimate_nonempty_count(cnt, args.r, rng, ledger)
    print(f"{est.value:g}")
    _print_ledger(ledger)
    return 0


def _cmd_exact_emd(args) -> int:
    ps = _load(args.infile)
    if ps.domain.d == 1:
        print(f"{exact_emd_1d(ps.reds[:, 0], ps.blues[:, 0]):g}")
    else:
        print(f"{exact_emd(ps.reds, ps.blues):g}")
    return 0


def _cmd_exact_mst(args) -> int:
    ps = _load(args.infile)
    print(f"{exact_mst(ps.coords):g}")
    return 0


def _cmd_spanner_mst(args) -> int:
    ps = _load(args.infile)
    print(f"{spanner_mst_exact(ps.coords, ps.domain, args.eps):g}")
    return 0


def _cmd_bench(args) -> int:
    if args.family == "emd1d":
        params = args.sweep or [8, 16, 32, 64]
        return _sweep_from_args(args, "emd1d",
                                [int(p) for p in params], None, {"d": 1})
    if args.family == "mst":
        params = args.sweep or [0.5, 0.25]
        return _sweep_from_args(args, "mst", [float(p) for p in params],
                                None, {"d": 2})
    raise ValueError(f"bench supports emd1d and mst, not {args.family!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcgeo",
                                description="estimators over a range-counting"
                                            " oracle")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, trials=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        if trials:
            sp.add_argument("--trials", type=int, default=1)

    g = sub.add_parser("gen", help="generate an instance family file")
    g.add_argument("--family", required=True,
                   choices=["emd1d", "emd2d", "emd3d", "cellsampling", "mst"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--s", type=int, default=16)
    g.add_argument("--c", type=int, default=2)
    g.add_argument("--delta", type=int, default=None)
    g.add_argument("--witness", default=None,
                   help="slot index, 'random', or omit for no witness")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_gen)

    e = sub.add_parser("estimate-emd", help="run the transport-cost estimator")
    e.add_argument("--in", dest="infile", default=None)
    e.add_argument("--n", type=int, default=4096)
    e.add_argument("--delta", type=int, default=1 << 16)
    e.add_argument("--d", type=int, default=1, choices=[1, 2, 3])
    e.add_argument("--s", type=int, required=True)
    e.add_argument("--reps", type=int, default=None)
    e.add_argument("--shifts", type=int, default=None)
    common(e)
    e.set_defaults(fn=_cmd_estimate_emd)

    m = sub.add_parser("estimate-mst", help="run the MST weight estimator")
    m.add_argument("--in", dest="infile", default=None)
    m.add_argument("--n", type=int, default=1024)
    m.add_argument("--delta", type=int, default=1 << 10)
    m.add_argument("--d", type=int, default=2, choices=[1, 2, 3])
    m.add_argument("--eps", type=float, required=True)
    m.add_argument("--reps", type=int, default=None)
    common(m)
    m.set_defaults(fn=_cmd_estimate_mst)

    sc = sub.add_parser("sample-cell", help="draw one occupied grid cell")
    sc.add_argument("--in", dest="infile", required=True)
    sc.add_argument("--r", type=int, required=True)
    common(sc, trials=False)
    sc.set_defaults(fn=_cmd_sample_cell)

    cc = sub.add_parser("count-cells", help="estimate the occupied-cell count")
    cc.add_argument("--in", dest="infile", required=True)
    cc.add_argument("--r", type=int, required=True)
    common(cc, trials=False)
    cc.set_defaults(fn=_cmd_count_cells)

    xe = sub.add_parser("exact-emd", help="exact transport cost baseline")
    xe.add_argument("--in", dest="infile", required=True)
    xe.set_defaults(fn=_cmd_exact_emd)

    xm = sub.add_parser("exact-mst", help="exact MST weight baseline")
    xm.add_argument("--in", dest="infile", required=True)
    xm.set_defaults(fn=_cmd_exact_mst)

    sm = sub.add_parser("spanner-mst", help="MST weight of the explicit spanner")
    sm.add_argument("--in", dest="infile", required=True)
    sm.add_argument("--eps", type=float, default=0.25)
    sm.set_defaults(fn=_cmd_spanner_mst)

    b = sub.add_parser("bench", help="sweep a parameter over random instances")
    b.add_argument("--family", required=True, choices=["emd1d", "mst"])
    b.add_argument("--n", type=int, default=4096)
    b.add_argument("--delta", type=int, default=1 << 16)
    b.add_argument("--sweep", nargs="*", default=None)
    common(b)
    b.set_defaults(fn=_cmd_bench)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
