"""Command-line front end.

Subcommands
-----------
simulate   run the configured chain(s); write intervals, summary and optional analyses
sweep      step-length sweep; write the sweep table and the optimum
reproduce  run one canonical experiment and write a comparison table
fit        Weibull/exponential fits of an intervals CSV
bounds     variance bounds from an intervals CSV or from configured replicates

Exit codes: 0 ok, 1 internal error, 2 invalid configuration or arguments,
3 no completed recurrence.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import reproduce as rp
from ._format import dumps_csv, dumps_json
from .config import ExperimentConfig, load_config
from .errors import (ConfigError, DegenerateDataError, DimensionMismatchError, DomainError,
                     InsufficientReplicatesError, NoRecurrenceError, TruncationError,
                     UnsupportedError)
from .inference import (covariance_diagnostics, fit_exponential, fit_weibull, group_intervals,
                        interval_arrays, quantile_pairs, variance_bounds, variance_curve)
from .recurrence import INTERVAL_COLUMNS, RecurrenceDetector, interval_rows, read_intervals_csv
from .rng import RNG_ALGORITHM, check_seed
from .sampler import (MembershipRecorder, cycle_chain, independence_chain, map_ordered,
                      run_chain)
from .tuning import acceptance_profile, optimal_sigma, refine_minimum, sweep, sweep_csv

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_NO_RECURRENCE = 0, 1, 2, 3

log = logging.getLogger("recurmix")


class Outputs:
    """Single collector for every file a command writes; feeds the manifest."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str):
        data = text.encode()
        (self.dir / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def table(self, stem: str, fmt: str, header, rows):
        rows = [list(r) for r in rows]
        if fmt == "json":
            self.write(f"{stem}.json", dumps_json([dict(zip(header, r)) for r in rows]))
        else:
            self.write(f"{stem}.csv", dumps_csv(header, rows))

    def manifest(self, command, config=None, seed=None, started=None):
        doc = {
            "command": command,
            "config": None if config is None else config.model_dump(mode="json"),
            "rng": {"algorithm": RNG_ALGORITHM, "seed": seed},
            "software": {"package": "recurmix", "version": __version__,
                         "python": platform.python_version(), "numpy": np.__version__},
            "wall_clock_seconds": None if started is None else time.time() - started,
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "files": [{"path": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        (self.dir / "manifest.json").write_text(dumps_json(doc))


# -- simulate -----------------------------------------------------------------

def _run_replicates(cfg: ExperimentConfig, seed: int, jobs: int, record: bool = False):
    target = cfg.build_target()
    subsets = cfg.build_subsets()
    sampler = cfg.chain.sampler

    def one(r):
        det = RecurrenceDetector(cfg.chain.start_counts_as_entry)
        observers = [det]
        rec = None
        if record:
            rec = MembershipRecorder()
            observers.append(rec)
        chain = cfg.build_chain(r, seed=seed)
        if sampler == "cycle":
            stats = cycle_chain(target, chain, observers)
        elif sampler == "independence":
            stats = independence_chain(chain, target, subsets, observers)
        else:
            stats = run_chain(chain, target, cfg.build_proposal(), subsets, observers)
        return stats, det, rec

    results = map_ordered(one, range(cfg.chain.replicates), jobs)
    if sampler == "cycle":
        pA, pB = target.pi_A, target.pi_B
    else:
        pA, pB = subsets.pi_A, subsets.pi_B
    return results, pA, pB


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    seed = cfg.chain.seed if args.seed is None else args.seed
    want_curve = cfg.analysis.variance_curve_k_max is not None
    results, pA, pB = _run_replicates(cfg, seed, args.jobs, record=want_curve)
    summaries = [det.summary(pA, pB) for _, det, _ in results]  # raises NoRecurrenceError
    out = Outputs(args.out)
    out.table("intervals", args.format, INTERVAL_COLUMNS, interval_rows(enumerate(summaries)))
    chains = []
    for r, ((stats, _, _), s) in enumerate(zip(results, summaries)):
        d = s.to_dict()
        d.update({"chain_id": r, "acceptance_rate": stats.acceptance_rate, "S1": stats.mean_jump_S1,
                  "initial_state": stats.metadata.get("initial_state")})
        chains.append(d)
    M = [s.M_hat for s in summaries]
    summary = {"chains": chains, "M_hat": float(np.mean(M)),
               "M_se": float(np.std(M, ddof=1) / math.sqrt(len(M))) if len(M) > 1 else None,
               "H_hat": None if summaries[0].H_hat is None else float(np.mean([s.H_hat for s in summaries])),
               "acceptance_rate": float(np.mean([st.acceptance_rate for st, _, _ in results])),
               "S1": float(np.mean([st.mean_jump_S1 for st, _, _ in results])),
               "m": int(sum(s.m for s in summaries)), "pi_A": pA, "pi_B": pB}
    out.write("summary.json", dumps_json(summary))
    a = cfg.analysis
    if a.fit:
        out.write("fits.json", dumps_json(_fits(summaries, pA)))
    if a.bounds:
        if pA is None:
            raise ConfigError("bounds need an exact pi(A); this target/subset has none")
        rep = variance_bounds(group_intervals(summaries, a.bounds_k), pA, a.c)
        out.write("bounds.json", dumps_json(rep.to_dict()))
    if want_curve:
        if pA is None:
            raise ConfigError("the variance curve needs an exact pi(A)")
        curve = variance_curve([rec.in_A for _, _, rec in results], summary["M_hat"],
                               a.variance_curve_k_max, pA)
        out.table("variance_curve", args.format, ("k", "sd", "envelope"),
                  zip(curve.k, curve.sd, curve.envelope))
    out.manifest("simulate", cfg, seed, started)
    return EXIT_OK


def _fits(summaries, pA):
    L = np.concatenate([s.lengths for s in summaries])
    doc = {"L": fit_weibull(L).to_dict()}
    if pA is not None:
        R = np.concatenate([s.ratios for s in summaries])
        doc["R"] = fit_exponential(R).to_dict()
    return doc


# -- sweep --------------------------------------------------------------------

def cmd_sweep(args) -> int:
    started = time.time()
    cfg = load_config(args.config)
    seed = cfg.chain.seed if args.seed is None else args.seed
    scfg = cfg.build_sweep(seed)
    rows = sweep(scfg, args.jobs)
    out = Outputs(args.out)
    if args.format == "json":
        out.write("sweep.json", dumps_json([r.to_dict() for r in rows]))
    else:
        out.write("sweep.csv", sweep_csv(rows))
    sigma, best = optimal_sigma(rows)
    prof = acceptance_profile(rows)
    out.write("optimum.json", dumps_json({
        "sigma2": sigma, "refined_sigma2": refine_minimum(rows), "row": best.to_dict(),
        "acceptance_decreasing": prof.decreasing, "grid": list(scfg.sigma_grid)}))
    out.manifest("sweep", cfg, seed, started)
    return EXIT_OK


# -- reproduce ----------------------------------------------------------------

def cmd_reproduce(args) -> int:
    started = time.time()
    seed = 0 if args.seed is None else args.seed
    fn = rp.EXPERIMENTS[args.name]
    kwargs = {"seed": seed}
    if "jobs" in fn.__code__.co_varnames:
        kwargs["jobs"] = args.jobs
    rep = fn(**kwargs)
    out = Outputs(args.out)
    if args.format == "json":
        out.write(f"{args.name}.json", dumps_json([dict(zip(rp.COMPARISON_COLUMNS, r.as_tuple()))
                                                   for r in rep.rows]))
    else:
        out.write(f"{args.name}.csv", rep.to_csv())
    for stem, text in rep.tables.items():
        out.write(f"{args.name}_{stem}.csv", text)
    out.manifest(f"reproduce {args.name}", None, seed, started)
    return EXIT_OK


# -- fit / bounds -------------------------------------------------------------

def _read_chains(path):
    try:
        return read_intervals_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read intervals file {path}: {exc}") from exc


def cmd_fit(args) -> int:
    started = time.time()
    chains = _read_chains(args.intervals)
    ivs = [iv for cid in sorted(chains) for iv in chains[cid]]
    L, P = interval_arrays(ivs)
    w = fit_weibull(L)
    doc = {"L": w.to_dict()}
    out = Outputs(args.out)
    R = [iv.ratio_R for iv in ivs]
    if all(r is not None for r in R) and R:
        e = fit_exponential(R)
        doc["R"] = e.to_dict()
        out.table("qq_R", args.format, ("sample", "fitted"), quantile_pairs(R, e))
    out.table("qq_L", args.format, ("sample", "fitted"), quantile_pairs(L, w))
    out.write("fits.json", dumps_json(doc))
    out.manifest("fit", None, None, started)
    return EXIT_OK


def cmd_bounds(args) -> int:
    started = time.time()
    out = Outputs(args.out)
    cfg = None
    seed = None
    if args.intervals is not None:
        if args.pi_a is None:
            raise ConfigError("--pi-a is required with --intervals")
        chains = _read_chains(args.intervals)
        reps = [chains[c] for c in sorted(chains)]
        pA, k, c = args.pi_a, args.k, args.c
    elif args.config is not None:
        cfg = load_config(args.config)
        seed = cfg.chain.seed if args.seed is None else args.seed
        results, pA, pB = _run_replicates(cfg, seed, args.jobs)
        reps = [det.summary(pA, pB) for _, det, _ in results]
        k = cfg.analysis.bounds_k if args.k is None else args.k
        c = cfg.analysis.c if args.c is None else args.c
        if pA is None:
            raise ConfigError("bounds need an exact pi(A); this target/subset has none")
    else:
        raise ConfigError("bounds needs --intervals or --config")
    k = 10 if k is None else k
    c = 0.0 if c is None else c
    report = variance_bounds(group_intervals(reps, k), pA, c)
    pooled = [iv for r in reps for iv in (r.intervals if hasattr(r, "intervals") else r)]
    diag = covariance_diagnostics(pooled, pA)
    out.write("bounds.json", dumps_json({**report.to_dict(), "diagnostics": diag.to_dict()}))
    out.manifest("bounds", cfg, seed, started)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def _seed(text):
    try:
        return check_seed(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _jobs(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--jobs must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--seed", type=_seed, metavar="U64", help="override the root seed")
    common.add_argument("--jobs", type=_jobs, default=1, metavar="N", help="parallel chains")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="tabular output format")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="recurmix", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"recurmix {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run chains from a config")
    sub.add_parser("sweep", parents=[common], help="step-length sweep from a config")
    r = sub.add_parser("reproduce", parents=[common], help="canonical experiment")
    r.add_argument("name", choices=sorted(rp.EXPERIMENTS))
    f = sub.add_parser("fit", parents=[common], help="fit interval distributions")
    f.add_argument("--intervals", required=True, metavar="CSV")
    b = sub.add_parser("bounds", parents=[common], help="variance bounds on pi_hat")
    b.add_argument("--intervals", metavar="CSV")
    b.add_argument("--pi-a", type=float, dest="pi_a")
    b.add_argument("--k", type=int)
    b.add_argument("--c", type=float)
    return p


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "reproduce": cmd_reproduce,
            "fit": cmd_fit, "bounds": cmd_bounds}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("simulate", "sweep") and args.config is None:
        parser.error(f"{args.command} requires --config")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoRecurrenceError as exc:
        print(f"no recurrence: {exc}", file=sys.stderr)
        return EXIT_NO_RECURRENCE
    except (DomainError, DimensionMismatchError, TruncationError, InsufficientReplicatesError,
            DegenerateDataError, UnsupportedError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to exit 1
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
