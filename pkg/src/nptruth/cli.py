"""``nptruth <subcommand> --config scenario.json [--seed N] [--out DIR] [--jobs K]``

Each subcommand is a thin adapter over a library call.  Every CSV gets a JSON
sidecar (``name.csv`` -> ``name.json``) with the scenario echo and the
package version.  Exit codes: 0 success, 2 bad scenario or domain error,
3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .belief import contour_grid, l_D_profile, l_P_profile
from .bias import PValueGate, biased_expected_logrho, biased_expected_V, biased_size, run_biased_sequential, slope_crossing
from .config import Scenario, load_scenario, parse_value
from .engine import build_rule, decide, p_functional
from .errors import DomainError, SolverError
from .los import (TABLE1_COLUMNS, risk_curves, sample_size, solve_bayes, solve_discrimination, solve_minimax,
                  table1)
from .models import TeaTastingBinomial, TeaTastingFisher
from .output import csv_text, json_text
from .rng import RngStream
from .sequential import run_replication_study, run_sequential

EXIT_OK, EXIT_DOMAIN, EXIT_SOLVER = 0, 2, 3


class Emitter:
    """Writes CSVs with their sidecars into the output directory."""

    def __init__(self, out: Path, command: str, scenario: Scenario):
        self.out = Path(out)
        self.command = command
        self.echo = scenario.model_dump(mode="json", exclude={"out", "jobs"})
        self.written = []

    def csv(self, name: str, header, rows, extra: dict | None = None) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / f"{name}.csv"
        path.write_text(csv_text(header, rows), encoding="utf-8")
        side = {"artifact": name, "command": self.command, "version": __version__, "columns": list(header),
                "scenario": self.echo}
        if extra:
            side["result"] = extra
        (self.out / f"{name}.json").write_text(json_text(side), encoding="utf-8")
        self.written.append(path)
        return path


def _map(fn, tasks, jobs: int):
    """Ordered map; output order never depends on the worker count."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------- roc


def cmd_roc(sc: Scenario, em: Emitter):
    prob = sc.model.problem()
    a = np.linspace(0.0, 1.0, sc.roc.points)
    rho = np.asarray(prob.roc(a), dtype=float)
    rp = np.full(a.size, math.nan)
    rp[1:-1] = np.asarray(prob.roc_deriv(a[1:-1]), dtype=float)
    em.csv("roc", ["alpha", "rho", "rho_prime"], zip(a, rho, rp))
    if prob.discrete:
        em.csv("pmf", ["statistic", "null_pmf", "alt_pmf"],
               ([s, float(p0), float(p1)] for s, p0, p1 in zip(prob.support, prob.null_pmf, prob.alt_pmf)))
    else:
        lo = float(prob.null_isf(0.999))
        hi = max(float(prob.null_isf(0.001)), _alt_upper(prob))
        s = np.linspace(lo, hi, sc.roc.pdf_points)
        em.csv("pdf", ["statistic", "null_pdf", "alt_pdf"], zip(s, prob.null_pdf(s), prob.alt_pdf(s)))
    print(f"roc: {sc.roc.points} grid points written to {em.out}")


def _alt_upper(prob) -> float:
    hi = float(prob.null_isf(0.001))
    while float(prob.alt_tail(hi)) > 0.001:
        hi += 1.0
    return hi


# ---------------------------------------------------------------- tea


def cmd_tea(sc: Scenario, em: Emitter):
    t = sc.tea
    cls, kind, top = (TeaTastingBinomial, "tea-binomial", 8) if t.version == 1 else (TeaTastingFisher, "tea-fisher", 4)
    if not (0 <= t.count <= top):
        raise DomainError(f"count {t.count} is outside the support 0..{top} of version {t.version}")
    prob = cls(sc.model.theta1, exact=True)
    alpha = Fraction(repr(t.alpha))
    u = Fraction(repr(t.u))
    rule = build_rule(prob, alpha)
    d = decide(rule, t.count, u)
    p = p_functional(prob, t.count, u)
    report = {"version": t.version, "count": t.count, "u": t.u, "alpha": t.alpha, "c": rule.c,
              "gamma": float(rule.gamma), "d": d, "p": float(p), "p_exact": str(p)}
    print(f"version {t.version}: count={t.count} u={t.u} alpha={t.alpha} -> d={d} p={float(p):.4f}")
    grid = t.theta_grid
    ld = l_D_profile(kind, d, t.alpha, grid)
    em.csv("l_D", ["theta1", "logit", "alpha", "l_D"], ld.rows(), report)
    if 0.0 < float(p) < 1.0:
        lp = l_P_profile(kind, float(p), grid)
        em.csv("l_P", ["theta1", "logit", "p", "l_P"], lp.rows(), report)
    else:
        print("p is at the edge of [0, 1]; the l_P profile is not defined and was skipped")


# ---------------------------------------------------------------- replicate


def _replicate_task(args):
    doc, run = args
    sc = Scenario.model_validate_json(doc)
    r = sc.replicate
    res = run_replication_study(r.scientists, sc.model.model_family(), r.lam, r.alpha, sc.truth,
                                RngStream(sc.seed, run), r.kappa0_init)
    return res


def cmd_replicate(sc: Scenario, em: Emitter):
    if sc.replicate.lam is None:
        raise DomainError("replicate.lam is required (sample sizes are Poisson(lam) + 5)")
    doc = sc.model_dump_json()
    results = _map(_replicate_task, [(doc, k) for k in range(sc.replicate.runs)], sc.jobs)
    first = results[0]
    em.csv("studies", ["scientist", "n", "statistic", "d", "p", "kappa0_d", "kappa0_p"], first.study_rows())
    em.csv("p_histogram", ["lo", "hi", "count"], first.hist_rows())
    em.csv("runs", ["run", "rejections", "kappa0_d_final", "kappa0_p_final"],
           ([k, r.rejections, r.kappa0_d[-1], r.kappa0_p[-1]] for k, r in enumerate(results)))
    print(f"replicate: {sc.replicate.runs} run(s), rejections in run 0: {first.rejections}/{sc.replicate.scientists}")


# ---------------------------------------------------------------- sequential / bias


def _sequential_task(args):
    doc, run, biased = args
    sc = Scenario.model_validate_json(doc)
    rng = RngStream(sc.seed, run)
    if biased:
        return run_biased_sequential(sc.bias.sequential.config(), sc.bias.gate.gate(), sc.truth,
                                     sc.model.model_family(), rng)
    return run_sequential(sc.sequential.config(), sc.truth, sc.model.model_family(), rng)


def _emit_runs(em, trajs):
    first = trajs[0]
    em.csv("trajectory", list(first.columns), first.rows(), first.summary())
    em.csv("runs", ["run", "verdict", "studies", "kappa0_final"],
           ([k, t.verdict, len(t), t.final_kappa0] for k, t in enumerate(trajs)))
    verdicts = {}
    for t in trajs:
        verdicts[t.verdict] = verdicts.get(t.verdict, 0) + 1
    return first, verdicts


def cmd_sequential(sc: Scenario, em: Emitter):
    sc.sequential.config()  # validate before fanning out
    doc = sc.model_dump_json()
    trajs = _map(_sequential_task, [(doc, k, False) for k in range(sc.sequential.runs)], sc.jobs)
    first, verdicts = _emit_runs(em, trajs)
    print(f"sequential: run 0 {first.verdict} after {len(first)} studies, kappa0={first.final_kappa0:.6g}; "
          f"verdicts {dict(sorted(verdicts.items()))}")


def cmd_bias(sc: Scenario, em: Emitter):
    gate = sc.bias.gate.gate()
    cfg = sc.bias.sequential.config()
    doc = sc.model_dump_json()
    trajs = _map(_sequential_task, [(doc, k, True) for k in range(sc.bias.sequential.runs)], sc.jobs)
    first, verdicts = _emit_runs(em, trajs)
    prob = sc.model.model_family().problem(cfg.typical_n())
    alpha = float(np.atleast_1d(cfg.alpha)[0])
    if isinstance(gate, PValueGate):
        summary = {"gate_mass": gate.mass, "expected_log_rho_prime": biased_expected_logrho(gate, prob)}
        if not prob.discrete:
            summary["slope_crossing"] = slope_crossing(prob)
    else:
        rho = float(prob.roc(alpha))
        summary = {"biased_size": biased_size(gate, alpha), "rho": rho}
        if alpha < rho < 1.0:
            summary["expected_V"] = biased_expected_V(gate, alpha, rho)
    em.csv("expectations", sorted(summary), [[summary[k] for k in sorted(summary)]])
    print(f"bias: run 0 {first.verdict} after {len(first)} studies ({first.meta['published']} published); "
          f"verdicts {dict(sorted(verdicts.items()))}")


# ---------------------------------------------------------------- LoS


def cmd_optimize_los(sc: Scenario, em: Emitter):
    prob = sc.model.problem()
    costs = sc.los.costs()
    sols = [solve_minimax(prob, costs), solve_bayes(prob, costs, sc.los.kappa0), solve_discrimination(prob)]
    em.csv("los", ["method", "alpha_star", "power", "iterations", "residual", "flags"],
           ([s.method, s.alpha_star, s.power_at_alpha, s.iterations, s.residual, ";".join(s.flags)] for s in sols))
    risks = risk_curves(prob, costs, np.linspace(0.0, 1.0, sc.los.points), sc.los.kappa0)
    em.csv("risks", ["alpha", "R0", "R1", "bayes_risk"], risks.rows())
    for s in sols:
        print(f"{s.method}: alpha*={s.alpha_star:.6g} power={s.power_at_alpha:.6g}")


def cmd_sample_size(sc: Scenario, em: Emitter):
    s = sc.sample_size
    costs = sc.los.costs() if s.method != "discrimination" else None
    if sc.model.family == "normal" or (s.xi is not None or s.mu_diff is not None):
        if s.xi is None and s.mu_diff is None:
            raise DomainError("sample_size needs xi or mu_diff")
        res = sample_size(s.b, xi=s.xi, sigma=s.sigma, mu_diff=s.mu_diff, method=s.method, costs=costs,
                          kappa0=sc.los.kappa0)
    else:
        res = sample_size(s.b, family=sc.model.problem, method=s.method, costs=costs, kappa0=sc.los.kappa0)
    cols = ["n_star", "n_bar", "alpha_design", "rho_design", "alpha_at_n", "rho_at_n", "log_odds_ratio_at_n", "method"]
    em.csv("sample_size", cols, [[_blank(getattr(res, c)) for c in cols]])
    alpha = res.alpha_design if res.alpha_design is not None else res.alpha_at_n
    rho = res.rho_design if res.rho_design is not None else res.rho_at_n
    print(f"n*={res.n_star} alpha={alpha:.4f} rho={rho:.4f}")


def _blank(v):
    return "" if v is None else v


# ---------------------------------------------------------------- profile / table1


def cmd_profile(sc: Scenario, em: Emitter):
    pr = sc.profile
    grid = contour_grid(sc.model.family, sc.model.n, pr.effect_range, pr.logit_range, pr.resolution, pr.d)
    em.csv("profile", [grid.effect_name, "logit", "level", grid.kind], grid.rows())
    print(f"profile: {grid.kind} on {grid.values.shape[0]}x{grid.values.shape[1]} grid")


def cmd_table1(sc: Scenario, em: Emitter):
    rows = table1()
    em.csv("table1", TABLE1_COLUMNS, ([r[c] for c in TABLE1_COLUMNS] for r in rows))
    print(f"table1: {len(rows)} rows written to {em.out}")


COMMANDS = {
    "roc": cmd_roc,
    "tea": cmd_tea,
    "replicate": cmd_replicate,
    "sequential": cmd_sequential,
    "bias": cmd_bias,
    "optimize-los": cmd_optimize_los,
    "sample-size": cmd_sample_size,
    "profile": cmd_profile,
    "table1": cmd_table1,
}

# subcommand flag -> dotted scenario key
FLAG_KEYS = {
    "tea": {"version": "tea.version", "count": "tea.count", "u": "tea.u", "alpha": "tea.alpha",
            "theta1": "model.theta1"},
    "sample-size": {"b": "sample_size.b", "mu_diff": "sample_size.mu_diff", "sigma": "sample_size.sigma",
                    "xi": "sample_size.xi"},
    "sequential": {"max_studies": "sequential.max_studies", "runs": "sequential.runs", "truth": "truth"},
    "replicate": {"runs": "replicate.runs", "truth": "truth", "lam": "replicate.lam"},
    "bias": {"runs": "bias.sequential.runs", "truth": "truth"},
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nptruth", description="Decision and P-value evidence under Neyman-Pearson tests.")
    ap.add_argument("--version", action="version", version=f"nptruth {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="scenario JSON (defaults are used if omitted)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any scenario field by dotted key, e.g. sequential.max_studies=0")
        if name == "tea":
            p.add_argument("--version", dest="version", type=int, choices=(1, 2))
            p.add_argument("--count", type=int)
            p.add_argument("--u", type=float)
            p.add_argument("--alpha", type=float)
            p.add_argument("--theta1", type=float)
        if name == "sample-size":
            p.add_argument("--b", type=float)
            p.add_argument("--mu-diff", dest="mu_diff", type=float)
            p.add_argument("--sigma", type=float)
            p.add_argument("--xi", type=float)
        if name == "sequential":
            p.add_argument("--max-studies", dest="max_studies", type=int)
        if name == "replicate":
            p.add_argument("--lam", type=float, help="Poisson mean of the per-study sample size offset (required)")
        if name in ("sequential", "replicate", "bias"):
            p.add_argument("--runs", type=int)
            p.add_argument("--truth", choices=("H0", "H1"))
    return ap


def _overrides(ns) -> dict:
    out = {"seed": ns.seed, "jobs": ns.jobs, "out": None if ns.out is None else str(ns.out)}
    for item in ns.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = parse_value(value)
    for flag, key in FLAG_KEYS.get(ns.command, {}).items():
        if getattr(ns, flag, None) is not None:
            out[key] = getattr(ns, flag)
    return out


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        sc = load_scenario(ns.config, _overrides(ns))
        em = Emitter(Path(sc.out), ns.command, sc)
        COMMANDS[ns.command](sc, em)
    except (ValidationError, DomainError, json.JSONDecodeError, OSError) as exc:
        print(f"nptruth {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SolverError as exc:
        print(f"nptruth {ns.command}: solver failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
