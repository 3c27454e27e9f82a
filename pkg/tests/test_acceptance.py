"""Acceptance runs A1 to A9. Each prints one PASS/FAIL line; run directly for a summary."""
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from shadowlab import config as cfgmod
from shadowlab.cli import main as cli_main
from shadowlab.core.spaces import cantor_endpoints
from shadowlab.models import registry
from shadowlab.pseudo_orbit import (coarsen_steps, generate_noisy, prepend_chain, refine_to_bounded_steps,
                                    star_many, validate)
from shadowlab.shadowing import (FAIL, PASS, EstimateConfig, SearchConfig, check_certificate,
                                 decide_forward_shadowing, estimate_shadowable_set, invariance_check,
                                 transport_certificate)
from shadowlab.suspension import discrete_shadowable_estimate

sys.path.insert(0, str(Path(__file__).parent))
from test_decide import compare_with_oracle  # noqa: E402

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ANALYTIC = ["rotation", "sin2", "north-south", "product-rotation", "irrational-linear", "two-point-identity"]


@pytest.fixture
def say(capsys):
    def emit(tag, ok, detail, started):
        with capsys.disabled():
            print(f"\n{tag} {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.1f}s) {detail}")
    return emit


def run_config(name, out):
    cfg = cfgmod.load(CONFIGS / name)
    code = cli_main(["run", str(CONFIGS / name), "--output", str(out)])
    rows = list(csv.DictReader((out / "results.csv").open(newline="", encoding="utf-8")))
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    return cfg, code, rows, report


def test_a1_rotation_positivity(tmp_path, say):
    t0 = time.perf_counter()
    _, code, rows, report = run_config("rotation-shadow.toml", tmp_path)
    n_pass = sum(r["label"] == PASS for r in rows)
    trials = {int(r["trials"]) for r in rows}
    ok = code == 0 and len(rows) == 150 and n_pass == 150 and trials == {20}
    say("A1", ok, f"{n_pass}/{len(rows)} PASS over 50 points x 3 eps, 20 pseudo-orbits each, exit {code}", t0)
    assert ok, report["failed_checks"]


def test_a2_decision_matches_brute_force(say):
    t0 = time.perf_counter()
    results = [compare_with_oracle(seed) for seed in range(200)]
    agree = sum(ok for ok, _ in results)
    shadowed = sum(d[1].value == "SHADOWED" for _, d in results)
    say("A2", agree == 200, f"{agree}/200 agree ({shadowed} shadowed, {200 - shadowed} not)", t0)
    assert agree == 200


def test_a3_sin2_chain_transitive_without_shadowable_points(tmp_path, say):
    t0 = time.perf_counter()
    _, code, rows, report = run_config("sin2-transitivity.toml", tmp_path)
    witnesses = sum(bool(r["witness"]) and (tmp_path / r["witness"]).is_file() for r in rows)
    starts = report["summary"]["transitivity_probes"]
    ok = (code == 0 and report["chainTransitive"] is True and report["transitive"] is False
          and report["shAllFail"] is True and len(rows) == 20 and witnesses == 20 and len(starts) == 20
          and not any(s["ok"] for s in starts))
    say("A3", ok, f"chainTransitive={report['chainTransitive']} transitive={report['transitive']} "
                  f"shAllFail={report['shAllFail']} witnesses={witnesses}/20, exit {code}", t0)
    assert ok, report["failed_checks"]


def test_a4_suspension_correspondence(tmp_path, say):
    t0 = time.perf_counter()
    _, code, rows, report = run_config("suspension-correspondence.toml", tmp_path)
    s = report["summary"]
    heights = {float(r["height"]) for r in rows}
    fibers = next(c for c in report["checks"] if c["name"] == "fiber_invariance")
    conflicts = s["matrix"]["PASS"]["FAIL"] + s["matrix"]["FAIL"]["PASS"]
    only_unknown = all("UNKNOWN" in (d["base_label"], d["suspension_label"]) for d in s["disagreements"])
    ok = (code == 0 and s["n"] == 40 and s["agree"] >= 38 and conflicts == 0 and only_unknown
          and fibers["ok"] and len(fibers["fibers"]) == 10 and heights == {0.25, 0.5, 0.75})
    say("A4", ok, f"{s['agree']}/40 agree, PASS-vs-FAIL conflicts {conflicts}, "
                  f"fiber invariance {fibers['ok']} on {len(fibers['fibers'])} fibers, exit {code}", t0)
    assert ok, report["failed_checks"]


def test_a5_identity_on_cantor_and_interval(say):
    t0 = time.perf_counter()
    base = registry.build("cantor-interval-identity", level=6)
    ends = cantor_endpoints(6)
    ends = ends[np.abs(ends - 1.0) >= 3.0 ** -6 - 1e-15]
    cantor = ends[np.linspace(0, len(ends) - 1, 20).round().astype(int)]
    interval = np.concatenate([[1.0], np.linspace(1.1, 2.0, 9)])
    cfg = EstimateConfig(trials=20, adversarial_reach=0.3)
    passes = [discrete_shadowable_estimate(base, [x], 0.05, [3.0 ** -7], cfg, seed=j).label
              for j, x in enumerate(cantor)]
    sched = [0.05 / 2 ** k for k in range(7)] + [3.0 ** -7]
    fails = [discrete_shadowable_estimate(base, [x], 0.1, sched, cfg, seed=100 + j) for j, x in enumerate(interval)]
    n_pass = passes.count(PASS)
    n_fail = sum(r.label == FAIL and r.witness is not None for r in fails)
    drift = min(float(np.ptp(r.witness)) for r in fails if r.witness is not None) if n_fail else 0.0
    ok = n_pass == 20 and n_fail == 10 and fails[0].label == FAIL
    say("A5", ok, f"Cantor part {n_pass}/20 PASS at eps=0.05, delta=3^-7; interval {n_fail}/10 FAIL "
                  f"(p=1 {fails[0].label}), smallest witness drift {drift:.3f}", t0)
    assert ok


def test_a6_certificate_transport(say):
    t0 = time.perf_counter()
    eps = 0.1
    good, worst = 0, 0.0
    for j in range(50):
        sys_ = registry.build("rotation" if j % 2 == 0 else "product-rotation")
        rng = np.random.default_rng(j)
        m = int(rng.integers(1, 5))
        chain = generate_noisy(sys_, sys_.space.sample(1, seed=j)[0], 0.01, n=m, seed=j)
        start = sys_.space.perturb(sys_.evolve(chain.points[-1], chain.durations[-1]), 0.01, rng)
        F = generate_noisy(sys_, start, 0.01, n=int(rng.integers(2, 7)), seed=1000 + j)
        Z = prepend_chain(chain, F)
        v = decide_forward_shadowing(sys_, Z, eps, SearchConfig(exhaustive=False))
        if not v.shadowed:
            continue
        cert = transport_certificate(sys_, v.certificate, m, Z)
        ok, sup = check_certificate(sys_, F, eps, cert, forward_only=True)
        worst = max(worst, sup)
        good += ok and sup <= eps + 1e-6
    say("A6", good == 50, f"{good}/50 transported certificates replay, worst sup {worst:.4f} <= {eps}", t0)
    assert good == 50


def test_a7_invariance_and_nesting(say):
    t0 = time.perf_counter()
    cfg = EstimateConfig(trials=6, n_forward=4, n_backward=4, adversarial_reach=0.5)
    search = SearchConfig(exhaustive=False)
    eps_list = [0.05, 0.1, 0.2]

    def sched(eps):
        return [eps / 2 / 2 ** k for k in range(5)]

    inv_bad, nest_bad, premises, detail = 0, 0, 0, []
    for name in ANALYTIC:
        sys_ = registry.build(name)
        rng = np.random.default_rng(7)
        pts = sys_.space.sample(30, seed=7)
        for j, p in enumerate(pts):
            s = float(rng.uniform(-3, 3))
            out = invariance_check(sys_, p, s, 0.1, sched(0.1), cfg, search, seed=j)
            premises += out["premise"]
            inv_bad += not out["holds"]
        se = estimate_shadowable_set(sys_, sys_.space.sample(6, seed=8), eps_list, sched, cfg, search, seed=8)
        nest_bad += sum(len(n["violations"]) for n in se.nesting)
        detail.append(f"{name}:{se.pass_fraction(0.1):.2f}")
    ok = inv_bad == 0 and nest_bad == 0
    say("A7", ok, f"invariance violations {inv_bad} (30 pairs x {len(ANALYTIC)} models, {premises} with premise), "
                  f"nesting violations {nest_bad}; pass fractions at 0.1 {' '.join(detail)}", t0)
    assert ok


def test_a8_lorenz_falsification(tmp_path, say):
    t0 = time.perf_counter()
    _, code, rows, report = run_config("lorenz-falsify.toml", tmp_path)
    checks = {c["name"]: c for c in report["checks"]}
    not_sh = sum(r["outcome"] == "NOT_SHADOWED_AT_RESOLUTION" for r in rows)
    horizon_ok = all(int(r["returns"]) >= 30 for r in rows)
    grid_ok = all(abs(float(r["grid_spacing"]) - 0.05 / 5) <= 1e-12 for r in rows)
    witnesses = all((tmp_path / r["witness"]).is_file() for r in rows)
    stated = "falsification at resolution" in report["summary"]["claim"]
    ok = (code == 0 and checks["return_map_boundary"]["ok"] and len(rows) == 10 and not_sh == 10 and horizon_ok
          and grid_ok and witnesses and stated)
    pre = checks["return_map_boundary"]["detail"]
    controls = [(c["exact"][:3], c["uniform"][:3]) for c in report["summary"]["controls"]]
    say("A8", ok, f"f(0)={pre['f0']:.4f} f(1)={pre['f1']:.4f}; {not_sh}/10 NOT_SHADOWED_AT_RESOLUTION "
                  f"at >=30 returns, grid eps/5; controls (exact, uniform) {controls}", t0)
    assert ok, report["failed_checks"]


def test_a9_step_transformations(say):
    t0 = time.perf_counter()
    bad_refine = bad_coarsen = 0
    worst_trace = 0.0
    models = ["rotation", "sin2", "north-south", "product-rotation", "irrational-linear"]
    for j in range(100):
        sys_ = registry.build(models[j % len(models)])
        rng = np.random.default_rng(j)
        delta = float(rng.uniform(1e-4, 0.05))
        a = float(rng.uniform(0.1, 0.5))
        P = generate_noisy(sys_, sys_.space.sample(1, seed=j)[0], delta, n=int(rng.integers(2, 8)),
                           n_backward=int(rng.integers(0, 5)), seed=j)
        Q = refine_to_bounded_steps(P, sys_, a)
        s = P.partial_sums()
        t = np.linspace(s[0] + 1e-9, s[-1] - 1e-9, 50)
        gap = float(np.max(sys_.space.paired(star_many(P, sys_, t), star_many(Q, sys_, t))))
        worst_trace = max(worst_trace, gap)
        bad_refine += not (validate(Q, sys_, delta, a, 2 * a).ok and gap <= sys_.group_tolerance * 10)
    for j in range(100):
        sys_ = registry.build(["rotation", "product-rotation", "irrational-linear"][j % 3])
        rng = np.random.default_rng(1000 + j)
        m = int(rng.integers(1, 5))
        P = generate_noisy(sys_, sys_.space.sample(1, seed=j)[0], 1e-4, n=int(rng.integers(m, 14)),
                           n_backward=int(rng.integers(0, 6)), seed=j)
        Q, rep = coarsen_steps(P, sys_, m, 0.01)
        bad_coarsen += not validate(Q, sys_, rep["jump_bound"], m * 1.0).ok
    ok = bad_refine == 0 and bad_coarsen == 0
    say("A9", ok, f"refine violations {bad_refine}/100 (worst trace gap {worst_trace:.1e}), "
                  f"coarsen violations {bad_coarsen}/100", t0)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
