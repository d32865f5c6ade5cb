"""Exit criteria, each run at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line (also collected into the
terminal summary) before asserting, so a red criterion still reports the
numbers it was judged on.
"""
from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from recurmix import reproduce as rp
from recurmix.cli import main as cli_main

from .conftest import ACCEPTANCE_LINES

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


@pytest.fixture(scope="module", autouse=True)
def warm_jit():
    """Load the compiled kernels once so budgets measure simulation, not compilation."""
    rp.proposition(n_iter=20_000)
    rp.cycle(n_iter=20_000, sizes=(1,))
    rp.table3mn(n_iter=20_000, replicates=1, rows=[0])


def judge(number: int, title: str, checks: dict[str, bool], detail: str, elapsed: float, budget: float):
    checks = dict(checks)
    checks[f"time<{budget:g}s"] = elapsed < budget
    failed = [k for k, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL"
    line = f"criterion {number:>2} {status} {title}: {detail} [{elapsed:.1f}s]"
    if failed:
        line += f" failed: {', '.join(failed)}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not failed, line


def test_c01_proposition_oracle():
    t0 = time.perf_counter()
    rep = rp.proposition(n_iter=1_000_000)
    elapsed = time.perf_counter() - t0
    checks, parts = {}, []
    for a, d in rep.details.items():
        z = (d["M_hat"] - d["expected"]) / d["se"]
        checks[f"a={a}"] = abs(z) <= 3
        parts.append(f"a={a} M={d['M_hat']:.3f} vs {d['expected']:.3f} z={z:+.2f}")
    judge(1, "independence sampler M within 3 SE", checks, "; ".join(parts), elapsed, 5)


def test_c02_cycle_counterexample():
    t0 = time.perf_counter()
    rep = rp.cycle(n_iter=1_000_000)
    elapsed = time.perf_counter() - t0
    checks, parts = {}, []
    for n, d in rep.details.items():
        dM = d["M_hat"] / d["M_published"] - 1
        dH = d["H_hat"] / d["H_published"] - 1
        checks[f"n={n} M 2%"] = abs(dM) <= 0.02
        checks[f"n={n} H 2%"] = abs(dH) <= 0.02
        checks[f"n={n} H<1"] = d["H_hat"] < 1
        parts.append(f"n={n} M={d['M_hat']:.4f} ({dM:+.2%}) H={d['H_hat']:.4f} ({dH:+.2%})")
    judge(2, "cyclic chain closed forms", checks, "; ".join(parts), elapsed, 5)


def test_c03_table1_two_modes():
    t0 = time.perf_counter()
    rep = rp.table1(n_iter=100_000, replicates=4, rows=(2, 4, 6))
    elapsed = time.perf_counter() - t0
    published = {row[0]: row for row in rp.TABLE1}
    step = 10 ** (1 / 15)
    checks, parts = {}, []
    for a, d in rep.details.items():
        _, _, acc, _, M, _ = published[a]
        ap = d["at_published"]
        checks[f"a={a} M 15%"] = abs(ap["M_hat"] / M - 1) <= 0.15
        checks[f"a={a} acceptance 0.06"] = abs(ap["acceptance"] - acc) <= 0.06
        grid = d["grid"]
        interior = grid[0] < d["sigma_refined"] < grid[-1]
        near = abs(math.log(d["sigma_opt"] / d["sigma_refined"])) <= math.log(step) + 1e-12
        checks[f"a={a} optimum bracketed"] = interior and near
        parts.append(f"a={a} acc={ap['acceptance']:.3f}/{acc} M={ap['M_hat']:.2f}/{M} "
                     f"sigma_opt={d['sigma_opt']:.3g} vertex={d['sigma_refined']:.3g}")
    judge(3, "two-mode rows at published step length", checks, "; ".join(parts), elapsed, 120)


def test_c04_table2_scale_problem():
    t0 = time.perf_counter()
    rep = rp.table2(n_iter=100_000, replicates=4, regions=("ordered",), rows=(1.0, 0.25, 0.05, 0.01))
    elapsed = time.perf_counter() - t0
    published = {row[0]: row for row in rp.TABLE2}
    checks, parts = {}, []
    for s1 in (1.0, 0.25, 0.05):
        d = rep.details[("ordered", s1)]
        _, _, acc, _, M, _ = published[s1]
        checks[f"sigma1={s1} M 20%"] = math.isfinite(d["M_opt"]) and abs(d["M_opt"] / M - 1) <= 0.20
        checks[f"sigma1={s1} acceptance 0.05"] = (math.isfinite(d["acceptance_opt"])
                                                 and abs(d["acceptance_opt"] - acc) <= 0.05)
        parts.append(f"sigma1={s1} acc_opt={d['acceptance_opt']:.3f}/{acc} M_opt={d['M_opt']:.1f}/{M}")
    opt = rep.details[("ordered", "optimal_acceptance")]
    seq = [opt[s] for s in (1.0, 0.25, 0.05, 0.01)]
    checks["monotone decrease"] = all(math.isfinite(x) for x in seq) and all(
        b < a for a, b in zip(seq, seq[1:]))
    checks["sigma1=0.01 acceptance<0.10"] = math.isfinite(seq[-1]) and seq[-1] < 0.10
    parts.append("optimal acceptance " + ", ".join(f"{x:.3f}" for x in seq))
    judge(4, "scale problem optimal acceptance", checks, "; ".join(parts), elapsed, 300)


def test_c05_table3_multinormal():
    t0 = time.perf_counter()
    rep = rp.table3mn(n_iter=300_000, replicates=4, rows=[0, 2])
    elapsed = time.perf_counter() - t0
    expect = {(3, 1.0, 1.0): (0.36, 110), (3, 0.2, 1.0): (0.20, 305)}
    checks, parts = {}, []
    for key, (acc, M) in expect.items():
        d = rep.details[key]
        checks[f"sigma1={key[1]} acceptance 0.05"] = abs(d["acceptance"] - acc) <= 0.05
        checks[f"sigma1={key[1]} M 25%"] = abs(d["M_hat"] / M - 1) <= 0.25
        checks[f"sigma1={key[1]} H finite"] = math.isfinite(d["H_hat"])
        parts.append(f"sigma1={key[1]} acc={d['acceptance']:.3f}/{acc} M={d['M_hat']:.1f}/{M} "
                     f"H={d['H_hat']:.2f} pi_A={d['pi_A']:.4f}")
    judge(5, "multi-normal rows at published step length", checks, "; ".join(parts), elapsed, 120)


def test_c06_variance_bound():
    t0 = time.perf_counter()
    checks, parts = {}, []
    for k in (10, 100):
        reps = rp.synthetic_bound_ensembles(k=k, groups=1000, ensembles=100)
        frac = np.mean([r.holds_general for r in reps])
        checks[f"synthetic k={k} >=99%"] = frac >= 0.99
        parts.append(f"synthetic k={k} holds {frac:.0%}")
        report, pA = rp.multinormal_bound_ensemble(k=k, groups=1000)
        scaled = k * report.empirical_var / pA ** 2
        checks[f"multi-normal k={k} bound"] = report.holds_general
        checks[f"multi-normal k={k} kVAR/pi^2<4"] = scaled < 4
        parts.append(f"multi-normal k={k} var/bound={report.empirical_var / report.bound_general:.3f} "
                     f"kVAR/pi^2={scaled:.3f}")
    elapsed = time.perf_counter() - t0
    judge(6, "variance of pi_hat under its bound", checks, "; ".join(parts), elapsed, 600)


def test_c07_variance_curve():
    t0 = time.perf_counter()
    rep = rp.fig3curve(replicates=1000, k_max=100)
    elapsed = time.perf_counter() - t0
    c = rep.details["curve"]
    slope = rep.details["slope"]
    worst = float(np.max(c.sd / c.envelope))
    checks = {"sd<=2/sqrt(k) all k": bool(np.all(c.below_envelope())), "slope in [-0.6,-0.4]": -0.6 <= slope <= -0.4}
    judge(7, "replicate sd of pi_hat/pi", checks,
          f"1000 replicates, max sd/envelope={worst:.3f}, log-log slope={slope:.3f}", elapsed, 900)


def test_c08_distribution_fits():
    t0 = time.perf_counter()
    rep = rp.fig4fits(n_iter=1_000_000)
    elapsed = time.perf_counter() - t0
    w, e, syn = rep.details["weibull"], rep.details["exponential"], rep.details["synthetic"]
    checks = {"L shape in [1.2,2.0]": 1.2 <= w.shape_k <= 2.0,
              "R rate in [0.85,1.15]": 0.85 <= e.rate <= 1.15,
              "sum-of-exponentials shape in [1.3,1.6]": 1.3 <= syn.shape_k <= 1.6}
    judge(8, "interval distribution fits", checks,
          f"L shape={w.shape_k:.3f} R rate={e.rate:.3f} synthetic shape={syn.shape_k:.3f} "
          f"M={rep.details['summary'].M_hat:.0f}", elapsed, 180)


def test_c09_covariance_diagnostics():
    t0 = time.perf_counter()
    fig4 = rp.fig4fits(n_iter=1_000_000).details["covariance"].cor_invL2_vs_dev2
    grid = rp.covariance_stress(n_iter=1_000_000)
    elapsed = time.perf_counter() - t0
    neg = sum(1 for _, d in grid if d.cor_invL2_vs_dev2 is not None and d.cor_invL2_vs_dev2 < 0)
    checks = {"figure configuration < 0": fig4 is not None and fig4 < 0,
              "stress grid >= 95% negative": neg / len(grid) >= 0.95}
    judge(9, "cor(L^-2, dev^2) negative", checks,
          f"figure configuration {fig4:.3f}; stress grid {neg}/{len(grid)} negative", elapsed, 600)


def test_c10_cauchy():
    t0 = time.perf_counter()
    rep = rp.cauchy(n_iter=1_000_000)
    elapsed = time.perf_counter() - t0
    a = sorted(rep.details)
    H = [rep.details[x]["H_hat"] for x in a]
    shapes = [rep.details[x]["shape"] for x in a]
    checks = {"H strictly increasing": all(q > p for p, q in zip(H, H[1:])),
              "Weibull shape < 1": all(s < 1 for s in shapes)}
    judge(10, "Cauchy target", checks,
          "; ".join(f"a={x} H={h:.2f} shape={s:.2f}" for x, h, s in zip(a, H, shapes)), elapsed, 180)


def test_c11_climate_model_excluded():
    line = ("criterion 11 EXCLUDED climate model: proprietary model and month-long runs; "
            "its statistical claims are covered by criteria 6 to 9")
    ACCEPTANCE_LINES.append(line)
    print(line)
    pytest.skip("climate model runs are not reproducible at desk scale")


def _tree(path):
    files = {}
    for p in sorted(path.iterdir()):
        if p.name == "manifest.json":
            doc = json.loads(p.read_text())
            doc.pop("created_utc")
            doc.pop("wall_clock_seconds")
            files[p.name] = json.dumps(doc, sort_keys=True).encode()
        else:
            files[p.name] = p.read_bytes()
    return files


def test_c12_cli_determinism(tmp_path, two_mode_config):
    cfg_path, _ = two_mode_config
    t0 = time.perf_counter()
    first_dir = tmp_path / "first"
    first_dir.mkdir()
    runs = {
        "simulate": ["simulate", "--config", str(cfg_path)],
        "sweep": ["sweep", "--config", str(cfg_path)],
        "reproduce": ["reproduce", "proposition", "--seed", "3"],
        "bounds": ["bounds", "--config", str(cfg_path)],
    }
    checks, parts = {}, []
    outputs = {}
    for name, argv in runs.items():
        trees = []
        for rep in (0, 1):
            out = tmp_path / f"{name}{rep}"
            code = cli_main(argv + ["--out", str(out)])
            checks[f"{name} exit 0"] = checks.get(f"{name} exit 0", True) and code == 0
            trees.append(_tree(out))
        outputs[name] = tmp_path / f"{name}0"
        checks[f"{name} identical"] = trees[0] == trees[1]
        parts.append(f"{name}: {len(trees[0])} files")
    trees = []
    for rep in (0, 1):
        out = tmp_path / f"fit{rep}"
        code = cli_main(["fit", "--intervals", str(outputs["simulate"] / "intervals.csv"), "--out", str(out)])
        checks["fit exit 0"] = checks.get("fit exit 0", True) and code == 0
        trees.append(_tree(out))
    checks["fit identical"] = trees[0] == trees[1]
    parts.append(f"fit: {len(trees[0])} files")
    elapsed = time.perf_counter() - t0
    judge(12, "byte-identical CLI outputs", checks, "; ".join(parts), elapsed, 60)
