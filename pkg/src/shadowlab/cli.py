"""Batch driver: ``shadowlab run``, ``shadowlab replay`` and ``shadowlab models list``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import io
from .errors import ConfigError, GridError, ModelError, ShadowLabError
from .models import registry
from .models.lorenz import GeometricLorenz, falsify
from .pseudo_orbit import read_csv, write_csv
from .recurrence import (BoxCover, build_transition_graph, chain_recurrent_estimate, chain_transitive_check,
                         nonwandering_estimate, omega_in_cr_check, transitivity_probe, transitivity_theorem_check)
from .shadowing import (FAIL, PASS, UNKNOWN, check_certificate, estimate_shadowable_point, estimate_shadowable_set,
                        trace_step)
from .suspension import discrete_shadowable_estimate, suspension_correspondence_check

__all__ = ["main", "run", "replay"]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_UNKNOWN = 0, 1, 2, 3


class Run:
    """Accumulates rows, checks and files for one configuration; writes everything at the end."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = Path(cfg["output"])
        self.rows: list = []
        self.checks: list = []
        self.files: dict = {}  # relative path -> writer
        self.summary: dict = {}
        self.extra: dict = {}

    def check(self, name: str, ok: bool, **detail):
        self.checks.append({"name": name, "ok": bool(ok), **detail})

    def expect(self, key: str, value, name: str | None = None):
        want = self.cfg["expect"].get(key)
        if want is not None:
            self.check(name or f"expect.{key}", value == want, value=value, expected=want)

    def file(self, rel: str, writer):
        self.files[rel] = writer
        return rel


# shared pieces ----------------------------------------------------------------

def _model(cfg: dict):
    name, params = cfg["model"]["name"], cfg["model"]["params"]
    try:
        e = registry.entry(name)
        return e, registry.build(name, **params)
    except ModelError as exc:
        raise ConfigError(str(exc)) from None


def _model_ref(name: str, params: dict) -> dict:
    return {"name": name, "params": dict(params)}


def _samples(system, cfg: dict, space=None) -> np.ndarray:
    s = cfg["sampling"]
    if s.get("points") is not None:
        pts = np.atleast_2d(np.asarray(s["points"], float))
        space = space or system.space
        if pts.shape[1] != space.dim:
            raise ConfigError(f"sampling.points must have {space.dim} coordinates each")
        return pts
    if isinstance(system, GeometricLorenz):
        return system.sample_attractor(s["count"], seed=cfg["seed"])
    return (space or system.space).sample(s["count"], seed=cfg["seed"])


def _coords(p) -> dict:
    return {f"x{k}": float(v) for k, v in enumerate(np.ravel(p))}


def _coord_header(dim: int) -> list:
    return [f"x{k}" for k in range(dim)]


def _params_row(cfg: dict, eps: float) -> dict:
    e, s = cfg["estimate"], cfg["search"]
    sched = cfgmod.delta_schedule(cfg, eps)
    return {"model": cfg["model"]["name"], "operation": cfg["operation"], "seed": cfg["seed"], "eps": eps,
            "delta_schedule": ";".join(io.fmt(d) for d in sched), "trials_per_delta": e["trials"],
            "n_forward": e["n_forward"], "n_backward": e["n_backward"], "t_min": e["t_range"][0],
            "t_max": e["t_range"][1], "adversarial_reach": e["adversarial_reach"],
            "forward_only": e["forward_only"], "dt": trace_step(eps, s.get("dt")),
            "grid_spacing": s.get("grid_spacing") if s.get("grid_spacing") is not None else eps / 5}


PARAM_COLS = ["model", "operation", "seed", "eps", "delta_schedule", "trials_per_delta", "n_forward", "n_backward",
              "t_min", "t_max", "adversarial_reach", "forward_only", "dt", "grid_spacing"]


def _emit_point(run: Run, system, j: int, ei: int, r, model_ref: dict, forward_only: bool) -> dict:
    """Row for one PointEstimate plus its certificate and witness files."""
    row = {"index": j, **_coords(r.point), **_params_row(run.cfg, r.eps), "label": r.label, "delta": r.delta,
           "trials": r.row()["trials"], "witness": "", "certificates": ""}
    if r.label == PASS:
        names = []
        for (delta, k), cert in sorted(r.certificates.items()):
            stem = f"certificates/p{j:04d}_e{ei}_t{k:02d}"
            P = r.orbits[(delta, k)]
            run.file(stem + ".json", lambda p, c=cert: io.write_certificate(p, c, model_ref, forward_only))
            run.file(stem + ".csv", lambda p, P=P: write_csv(P, p))
            names.append(stem)
        row["certificates"] = ";".join(names)
    elif r.witness is not None:
        rel = f"witnesses/p{j:04d}_e{ei}.csv"
        run.file(rel, lambda p, W=r.witness: write_csv(W, p))
        row["witness"] = rel
        if r.witness_verdict is not None:
            row["witness_outcome"] = r.witness_verdict.outcome.value
    return row


def _soundness(run: Run, system, results, forward_only: bool):
    """Every certificate behind a PASS row replays on its pseudo-orbit."""
    bad = []
    for r in results:
        for key, cert in r.certificates.items():
            try:
                ok, _ = check_certificate(system, r.orbits[key], r.eps, cert, forward_only=forward_only)
            except GridError:
                ok = False
            if not ok:
                bad.append({"point": r.point.tolist(), "eps": r.eps, "delta": key[0], "trial": key[1]})
    run.check("certificate_soundness", not bad, failures=bad)


def _labels_summary(labels) -> dict:
    labels = list(labels)
    return {"n": len(labels), "pass": labels.count(PASS), "fail": labels.count(FAIL),
            "unknown": labels.count(UNKNOWN)}


# operations -------------------------------------------------------------------

_DEFECTS = ("symmetry", "identity", "negativity", "triangle", "identity_defect", "group_defect")


def _max_defect(d: dict):
    vals = [float(d[k]) for k in _DEFECTS if k in d]
    return max(vals) if vals else None


def op_verify(run: Run):
    cfg = run.cfg
    e, _ = _model(cfg)
    report = registry.axiom_report(e.name, **cfg["model"]["params"])
    for part, res in report.items():
        run.check(f"{part}_axioms", res["ok"], detail=res)
        run.rows.append({"model": e.name, "operation": "verify", "seed": cfg["seed"], "suite": part,
                         "ok": res["ok"], "max_defect": _max_defect(res)})
    run.header = ["model", "operation", "seed", "suite", "ok", "max_defect"]


def _estimate_flow(run: Run, system, e, samples, eps_list):
    cfg = run.cfg
    ecfg, search = cfgmod.estimate_config(cfg), cfgmod.search_config(cfg)
    fwd = ecfg.forward_only
    ref = _model_ref(e.name, cfg["model"]["params"])
    se = estimate_shadowable_set(system, samples, eps_list, lambda eps: cfgmod.delta_schedule(cfg, eps),
                                 ecfg, search, seed=cfg["seed"])
    all_results = []
    for ei, eps in enumerate(se.eps_schedule):
        for j, r in enumerate(se.results[eps]):
            run.rows.append(_emit_point(run, system, j, ei, r, ref, fwd))
            all_results.append(r)
    _soundness(run, system, all_results, fwd)
    return se, all_results


def _estimate_base(run: Run, base, samples, eps_list):
    cfg = run.cfg
    ecfg = cfgmod.estimate_config(cfg)
    results = []
    for ei, eps in enumerate(eps_list):
        for j, p in enumerate(samples):
            r = discrete_shadowable_estimate(base, p, eps, cfgmod.delta_schedule(cfg, eps), ecfg, seed=cfg["seed"] + j)
            row = {"index": j, **_coords(p), **_params_row(cfg, eps), "label": r.label, "delta": r.delta,
                   "trials": sum(l["trials"] for l in r.levels), "witness": "", "certificates": ""}
            if r.witness is not None:
                rel = f"witnesses/p{j:04d}_e{ei}.csv"
                W, lo = r.witness, r.witness_index_low
                run.file(rel, lambda path, W=W, lo=lo: io.write_csv(
                    path, ["index"] + _coord_header(W.shape[1]),
                    [{"index": lo + i, **_coords(w)} for i, w in enumerate(W)]))
                row["witness"] = rel
            run.rows.append(row)
            results.append(r)
    return results


def _point_header(dim: int) -> list:
    return ["index"] + _coord_header(dim) + PARAM_COLS + ["label", "delta", "trials", "witness", "witness_outcome",
                                                           "certificates"]


def _sh_plot(run: Run, rows, dim: int):
    run.file("plotdata/shadowable_set.csv", lambda p: io.write_csv(
        p, _coord_header(dim) + ["eps", "label", "pass"],
        [{**{k: r[k] for k in _coord_header(dim)}, "eps": r["eps"], "label": r["label"],
          "pass": int(r["label"] == PASS)} for r in rows]))


def op_estimate(run: Run):
    cfg = run.cfg
    e, obj = _model(cfg)
    eps_list = list(cfg["schedules"]["eps"])
    if cfg["operation"] == "estimate-point":
        eps_list = eps_list[:1]
    if e.family == "base":
        samples = _samples(obj, cfg)
        results = _estimate_base(run, obj, samples, eps_list)
        labels = [r.label for r in results]
    else:
        samples = _samples(obj, cfg)
        se, results = _estimate_flow(run, obj, e, samples, eps_list)
        labels = [r.label for r in results]
        if cfg["operation"] == "estimate-set":
            run.check("nesting", se.nesting_ok, detail=se.nesting)
            run.summary["pass_fraction"] = {io.fmt(eps): se.pass_fraction(eps) for eps in se.eps_schedule}
    dim = samples.shape[1]
    run.header = _point_header(dim)
    _sh_plot(run, run.rows, dim)
    run.summary["labels"] = _labels_summary(labels)
    run.expect("all_pass", all(l == PASS for l in labels))
    run.expect("all_fail", all(l == FAIL for l in labels))
    run.labels = labels


def op_recurrence(run: Run):
    cfg = run.cfg
    rc = cfg["recurrence"]
    e, system = _model(cfg)
    if e.family != "flow":
        raise ConfigError("recurrence needs a flow model")
    seed = cfg["seed"]
    T = cfg["schedules"]["T"][0]
    try:
        cover = BoxCover(system.space, rc["rho"])
    except (TypeError, AttributeError, ValueError) as exc:
        raise ConfigError(f"model {e.name} has no box cover: {exc}") from None
    G = build_transition_graph(system, cover, T, rc["delta"], rc["samples_per_box"], seed=seed)
    ct = chain_transitive_check(G)
    cr = chain_recurrent_estimate(G)
    targets = system.space.sample(rc["targets"], seed=seed + 1)
    starts = system.space.sample(rc["starts"], seed=seed + 2)
    probes = [transitivity_probe(system, x, rc["horizon"], rc["eps_dense"], targets) for x in starts]
    transitive = any(ok for ok, _ in probes)
    # shadowability of sampled points at the first epsilon
    samples = _samples(system, cfg)
    eps = cfg["schedules"]["eps"][0]
    ecfg, search = cfgmod.estimate_config(cfg), cfgmod.search_config(cfg)
    ref = _model_ref(e.name, cfg["model"]["params"])
    results = []
    for j, p in enumerate(samples):
        r = estimate_shadowable_point(system, p, eps, cfgmod.delta_schedule(cfg, eps), ecfg, search, seed=seed + j)
        results.append(r)
        run.rows.append(_emit_point(run, system, j, 0, r, ref, ecfg.forward_only))
    _soundness(run, system, results, ecfg.forward_only)
    labels = [r.label for r in results]
    sh_all_fail = all(l == FAIL for l in labels)
    thm = transitivity_theorem_check(ct, labels, transitive)
    run.check("transitivity_theorem", thm["holds"], detail=thm)
    nw_pts = system.space.sample(rc["nonwandering_samples"], seed=seed + 3)
    nw, when = nonwandering_estimate(system, nw_pts, rc["nonwandering_t_max"], rc["eps_nbhd"])
    om = omega_in_cr_check(G, nw_pts, nw)
    run.check("nonwandering_in_chain_recurrent", om["holds"], detail=om)
    run.extra.update(chainTransitive=ct, transitive=transitive, shAllFail=sh_all_fail)
    run.summary.update(graph={"nodes": G.n, "edges": int(len(G.edges)), "components": int(G.n_scc),
                              "chain_recurrent_cells": int(len(cr)), "T": T, "delta": rc["delta"], "rho": rc["rho"]},
                       transitivity_probes=[{"start": x.tolist(), "ok": ok, "coverage": f}
                                            for x, (ok, f) in zip(starts, probes)],
                       labels=_labels_summary(labels),
                       note="chain recurrence is an outer box estimate; nonwandering points are an inner "
                            "estimate from witnessed returns")
    run.expect("chain_transitive", ct)
    run.expect("transitive", transitive)
    run.expect("sh_all_fail", sh_all_fail)
    run.expect("all_pass", all(l == PASS for l in labels))
    run.expect("all_fail", sh_all_fail)
    dim = system.space.dim
    run.header = _point_header(dim)
    in_cr = np.zeros(G.n, dtype=bool)
    in_cr[cr] = True
    centers = cover.centers()
    run.file("plotdata/boxes.csv", lambda p: io.write_csv(
        p, ["node"] + _coord_header(dim) + ["component", "chain_recurrent"],
        [{"node": i, **_coords(c), "component": int(G.scc[i]), "chain_recurrent": int(in_cr[i])}
         for i, c in enumerate(centers)]))
    run.file("plotdata/nonwandering.csv", lambda p: io.write_csv(
        p, _coord_header(dim) + ["nonwandering", "return_time"],
        [{**_coords(x), "nonwandering": int(l), "return_time": t} for x, l, t in zip(nw_pts, nw, when)]))
    _sh_plot(run, run.rows, dim)
    run.labels = labels


def op_suspension(run: Run):
    cfg = run.cfg
    e, base = _model(cfg)
    if e.family != "base":
        raise ConfigError("suspension-check needs a base model (a homeomorphism with its roof)")
    flow_name = "suspension-" + e.name
    flow = registry.build(flow_name, **cfg["model"]["params"])
    sp = cfg["suspension"]
    eps = cfg["schedules"]["eps"][0]
    pts = _samples(base, cfg, base.space)
    ecfg, search = cfgmod.estimate_config(cfg), cfgmod.search_config(cfg)
    res = suspension_correspondence_check(flow, pts, sp["heights"], eps, cfgmod.delta_schedule(cfg, eps), ecfg,
                                          search, seed=cfg["seed"], fiber_heights=sp["fiber_heights"],
                                          fiber_count=sp["fiber_count"])
    dim = base.space.dim
    for r in res["rows"]:
        run.rows.append({"index": r["index"], **_coords(r["base"]), "height": r["height"],
                         **_params_row(cfg, eps), "base_label": r["base_label"],
                         "suspension_label": r["suspension_label"], "base_delta": r["base_delta"],
                         "suspension_delta": r["suspension_delta"]})
    run.header = (["index"] + _coord_header(dim) + ["height"] + PARAM_COLS
                  + ["base_label", "suspension_label", "base_delta", "suspension_delta"])
    frac = res["agree"] / max(res["n"], 1)
    run.check("no_pass_fail_conflict", res["pass_fail_conflicts"] == 0, conflicts=res["pass_fail_conflicts"])
    run.check("fiber_invariance", res["fiber_invariance"], fibers=res["fibers"])
    want = cfg["expect"].get("min_agreement")
    if want is not None:
        run.check("agreement", frac >= want, value=frac, expected_at_least=want)
    run.summary.update(agreement=frac, agree=res["agree"], n=res["n"], matrix=res["matrix"],
                       disagreements=res["disagreements"], suspension_model=flow_name)
    run.file("plotdata/correspondence.csv", lambda p: io.write_csv(
        p, _coord_header(dim) + ["height", "base_pass", "suspension_pass"],
        [{**_coords(r["base"]), "height": r["height"], "base_pass": int(r["base_label"] == PASS),
          "suspension_pass": int(r["suspension_label"] == PASS)} for r in res["rows"]]))
    run.labels = [r["suspension_label"] for r in res["rows"]]


def op_lorenz(run: Run):
    cfg = run.cfg
    lz = cfg["lorenz"]
    e, model = _model(cfg)
    if not isinstance(model, GeometricLorenz):
        raise ConfigError("lorenz-falsify needs a Lorenz model")
    s = cfg["sampling"]
    if s.get("points") is not None:
        pts = _samples(model, cfg)
    else:
        pts = model.sample_attractor(lz["points"], seed=cfg["seed"])
    search = cfgmod.search_config(cfg)
    if search.grid_spacing is None:
        search.grid_spacing = lz["grid_factor"] * lz["eps"]
    try:
        res = falsify(model, pts, lz["eps"], lz["delta"], lz["returns"], lz["grid_factor"], cfg["seed"],
                      tuple(cfg["estimate"]["t_range"]), lz["controls"], search)
    except ModelError as exc:
        run.check("return_map_boundary", False, detail=str(exc))
        run.header, run.labels = ["index"], []
        return
    rmap = model.return_map()
    slopes = model.expansion_slopes()
    run.check("return_map_boundary", res["precondition"]["holds"], detail=res["precondition"])
    run.check("return_map_expanding", float(np.min(slopes)) > 1.0, min_slope=float(np.min(slopes)))
    controls = {c["index"]: c for c in res["controls"]}
    for r, (P, v) in zip(res["rows"], res["witnesses"]):
        j = r["index"]
        rel = f"witnesses/p{j:04d}.csv"
        run.file(rel, lambda p, P=P: write_csv(P, p))
        row = {"index": j, **_coords(r["point"]), "model": e.name, "operation": "lorenz-falsify",
               "seed": cfg["seed"], "eps": lz["eps"], "delta": lz["delta"], "returns_target": lz["returns"],
               "steps": r["steps"], "returns": r["returns"], "horizon": r["horizon"], "dt": r["dt"],
               "grid_spacing": r["grid_spacing"], "candidates": r["candidates"], "outcome": r["outcome"],
               "kick": res["strategy"], "witness": rel}
        if j in controls:
            row.update(exact_control=controls[j]["exact"], uniform_control=controls[j]["uniform"])
        run.rows.append(row)
    run.header = (["index"] + _coord_header(3) + ["model", "operation", "seed", "eps", "delta", "returns_target",
                                                  "steps", "returns", "horizon", "dt", "grid_spacing", "candidates",
                                                  "outcome", "kick", "witness", "exact_control", "uniform_control"])
    run.check("all_not_shadowed", res["all_not_shadowed"])
    run.summary.update(claim=res["claim"], strategy=res["strategy"], controls=res["controls"],
                       controls_note="controls are reported, not checked: the exact orbit and uniform noise "
                                     "probe how much of the verdict the resolution explains",
                       expansion_min=float(np.min(slopes)), mean_return_time=float(np.mean(rmap.return_times)))
    run.file("plotdata/return_map.csv", lambda p: io.write_csv(
        p, ["u", "v", "return_time"],
        [{"u": u, "v": v, "return_time": t} for u, v, t in zip(rmap.u, rmap.v, rmap.return_times)]))
    run.labels = [UNKNOWN if r["outcome"] == "UNKNOWN" else FAIL for r in res["rows"]]


OPS = {"verify": op_verify, "estimate-point": op_estimate, "estimate-set": op_estimate, "recurrence": op_recurrence,
       "suspension-check": op_suspension, "lorenz-falsify": op_lorenz}


# entry points -----------------------------------------------------------------

def run(cfg: dict) -> int:
    """Execute a normalized configuration and write its artifacts; returns the exit code."""
    r = Run(cfg)
    r.labels = []
    OPS[cfg["operation"]](r)
    unknown = sum(l == UNKNOWN for l in r.labels)
    dominated = bool(r.labels) and unknown / len(r.labels) > 0.5
    failed = [c["name"] for c in r.checks if not c["ok"]]
    code = EXIT_UNKNOWN if dominated else (EXIT_CHECK if failed else EXIT_OK)
    report = {"config": cfg, "checks": r.checks, "failed_checks": failed, "summary": r.summary,
              "unknown_fraction": unknown / len(r.labels) if r.labels else 0.0, "exit_code": code, **r.extra}
    r.out.mkdir(parents=True, exist_ok=True)
    io.write_csv(r.out / "results.csv", r.header, r.rows)
    for rel, writer in r.files.items():
        path = r.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
    io.write_json(r.out / "report.json", report)
    return code


def replay(cert_path, orbit_path, eps: float, model: str | None = None, params: dict | None = None) -> tuple:
    """Returns ``(exit_code, message)``."""
    for p in (cert_path, orbit_path):
        if not Path(p).is_file():
            return EXIT_CONFIG, f"file not found: {p}"
    try:
        cert, ref, forward_only = io.read_certificate(cert_path)
        P = read_csv(orbit_path)
    except (ValueError, KeyError, TypeError, IndexError, json.JSONDecodeError) as exc:
        return EXIT_CONFIG, f"cannot parse input: {exc}"
    if model is not None:
        ref = {"name": model, "params": params or {}}
    if ref is None:
        return EXIT_CONFIG, "certificate names no model; pass --model"
    try:
        system = registry.build(ref["name"], **ref.get("params", {}))
    except ModelError as exc:
        return EXIT_CONFIG, str(exc)
    try:
        ok, sup = check_certificate(system, P, eps, cert, forward_only=forward_only)
    except GridError as exc:
        return EXIT_CHECK, f"certificate rejected: {exc}"
    except ShadowLabError as exc:
        return EXIT_CHECK, f"certificate rejected: {exc}"
    verdict = "accepted" if ok else "rejected"
    return (EXIT_OK if ok else EXIT_CHECK), f"certificate {verdict}: achieved sup {sup:.17g} vs eps {eps:.17g}"


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shadowlab", description="Numerical shadowing experiments for flows.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment configuration")
    r.add_argument("config")
    r.add_argument("--output", help="override the output directory")
    p = sub.add_parser("replay", help="audit a certificate against a pseudo-orbit")
    p.add_argument("certificate")
    p.add_argument("orbit")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--model", help="model name, if the certificate does not carry one")
    p.add_argument("--params", default="{}", help="model parameters as JSON")
    m = sub.add_parser("models", help="model gallery")
    msub = m.add_subparsers(dest="action", required=True)
    ls = msub.add_parser("list")
    ls.add_argument("--json", action="store_true", help="one JSON array instead of a table")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "models":
        rows = registry.listing()
        if args.json:
            print(json.dumps(rows, indent=1))
        else:
            for row in rows:
                print(f"{row['name']:40s} {row['space']:50s} {row['kind']:14s} {row['claim']}")
                print(f"{'':40s} parameters: {json.dumps(row['parameters'], sort_keys=True)}")
        return EXIT_OK
    if args.command == "replay":
        try:
            params = json.loads(args.params)
        except json.JSONDecodeError as exc:
            print(f"error: --params is not JSON: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        code, msg = replay(args.certificate, args.orbit, args.eps, args.model, params)
        print(msg, file=sys.stdout if code == EXIT_OK else sys.stderr)
        return code
    try:
        cfg = cfgmod.load(args.config)
        if args.output:
            cfg["output"] = args.output
        code = run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = Path(cfg["output"]) / "report.json"
    print(f"exit {code}; report at {report}")
    return code


if __name__ == "__main__":
    sys.exit(main())
