"""Command-line front end.

Exit codes: 0 success, 1 an audited bound failed, 2 bad usage or config,
3 a resource cap was hit.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSystem, audit_claim
from .errors import (ConvergenceError, OutOfRangeError, ResourceError, UnsupportedError,
                     ValidationError)
from .freespace import Molecule, kr_norm, kr_norm_float
from .groups import DEFAULT_ELEMENT_CAP, GroupSpec, audit_combability, build_ball
from .harmonic import (CircleFunction, SphereFunction, SphereGrid, SphereKernelSpec,
                       audit_pointwise_convergence, audit_young, cesaro_kernel, sphere_convolve)
from .metric import greedy_net, random_hyperboloid_samples, validate
from .quotient import FiniteMetricGroup, audit_projection, biinvariant_majorant, tower_convergence

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

DEFAULT_CONFIG = {
    "ball": "z2.json",
    "comb-audit": "z2.json",
    "norm": "three_point.json",
    "basis-audit": "f2.json",
    "quotient-audit": "quotient_corpus.json",
    "tower": "tower_z8.json",
    "fejer": "fejer.json",
    "sphere-kernel": "sphere.json",
    "net": "net.json",
}


def data_path(name: str) -> Path:
    return Path(str(resources.files("lipfree") / "data" / name))


def load_config(args) -> dict:
    path = Path(args.config) if args.config else data_path(DEFAULT_CONFIG[args.command])
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read config {path}: {e}") from None


class Result:
    def __init__(self, payload: dict, ok: bool = True, summary: str = "", scalar: str = "rational",
                 rows: list | None = None, header: list | None = None):
        self.payload, self.ok, self.summary, self.scalar = payload, ok, summary, scalar
        self.rows, self.header = rows, header


# -- commands ---------------------------------------------------------------

def _radius(args, cfg, default):
    return int(args.radius if args.radius is not None else cfg.get("radius", default))


def _ball(args, cfg, default_radius):
    cap = int(cfg.get("cap", DEFAULT_ELEMENT_CAP))
    return build_ball(GroupSpec.from_json(cfg), _radius(args, cfg, default_radius), cap)


def cmd_ball(args, cfg) -> Result:
    ball = _ball(args, cfg, 3)
    elements = [{"index": g, "word": ball.name(g), "length": int(ball.length[g]),
                 "parent": int(ball.parent[g]) if g else None} for g in range(len(ball))]
    return Result({"size": len(ball), "elements": elements, "edges": ball.edges},
                  summary=f"{len(ball)} elements")


def cmd_comb_audit(args, cfg) -> Result:
    ball = _ball(args, cfg, 5)
    rep = audit_combability(ball)
    return Result(rep.to_json(ball), summary=f"max_divergence {rep.max_divergence}")


def cmd_norm(args, cfg) -> Result:
    m = Molecule.from_json(cfg)
    if m.space.is_rational:
        cert = kr_norm(m)
    else:
        cert = kr_norm_float(m, tol=args.tol if args.tol is not None else 1e-9)
    problems = cert.verify(m)
    out = cert.to_json()
    out["problems"] = problems
    return Result(out, ok=not problems, summary=out["value"], scalar=m.space.scalar)


def cmd_basis_audit(args, cfg) -> Result:
    ball = _ball(args, cfg, 6)
    comb = audit_combability(ball)
    system = BasisSystem.from_ball(ball, comb.constant)
    if args.nmax is not None:
        system = system.truncated(min(int(args.nmax), system.n_max))
    rep = audit_claim(system, threads=args.threads)
    out = rep.to_json()
    out["combability"] = comb.to_json(ball)
    rows = [[r["n"], str(r["lip"]), r["case1_max"]] for r in rep.records]
    return Result(out, ok=rep.ok, rows=rows, header=["n", "lip_exact", "case1_max"],
                  summary=f"K={rep.K} lip_max={rep.lip_max} ok={rep.ok}")


def _group(obj) -> FiniteMetricGroup:
    return FiniteMetricGroup.from_json(obj)


def cmd_quotient_audit(args, cfg) -> Result:
    cases = cfg["cases"] if "cases" in cfg else [cfg]
    reports = []
    for case in cases:
        G = _group(case["group"])
        rep = audit_projection(G, case["subgroup"])
        maj = biinvariant_majorant(G) if G.left_invariant else None
        reports.append({"name": case.get("name", ""), "subgroup": list(case["subgroup"]),
                        "order": len(G), **rep.to_json(),
                        "majorant_bi_invariant": None if maj is None else maj.bi_invariant})
    ok = all(r["ok"] for r in reports)
    return Result({"cases": reports, "ok": ok},
                  ok=ok, summary=f"{sum(r['ok'] for r in reports)}/{len(reports)} cases ok")


def cmd_tower(args, cfg) -> Result:
    G = _group(cfg["group"])
    m = Molecule.from_json(cfg["molecule"], G.space)
    rep = tower_convergence(G, cfg["chain"], m)
    rows = [[list(lv.subgroup), str(lv.error), str(lv.bound)] for lv in rep.levels]
    return Result(rep.to_json(), ok=rep.ok, rows=rows, header=["subgroup", "error", "bound"],
                  summary=f"final error {rep.levels[-1].error} ok={rep.ok}")


def _circle_function(spec: dict, M: int, rng) -> CircleFunction:
    kind = spec.get("kind")
    if kind == "cos":
        return CircleFunction.cosine()
    if kind == "abs":
        return CircleFunction.from_callable(lambda t: np.abs(t - np.pi), M)
    if kind == "random_trig":
        deg = int(spec.get("degree", 20))
        c = rng.standard_normal(2 * deg + 1) + 1j * rng.standard_normal(2 * deg + 1)
        return CircleFunction((c + np.conj(c[::-1])) / 2)
    if kind == "coefficients":
        return CircleFunction([complex(re, im) for re, im in spec["coefficients"]])
    if kind == "samples":
        return CircleFunction.from_grid(spec["samples"])
    raise ValidationError(f"unknown function kind {kind!r}")


def cmd_fejer(args, cfg) -> Result:
    M = int(args.grid or cfg.get("grid", 4096))
    rng = np.random.default_rng(args.seed)
    out, rows, ok = [], [], True
    for spec in cfg["functions"]:
        f = _circle_function(spec, M, rng)
        entry = {"name": spec.get("name", spec.get("kind")), "young": []}
        for n in spec.get("young_n", []):
            y = audit_young(f, int(n), M)
            entry["young"].append(y.to_json())
            ok &= y.ok
        if spec.get("n_list"):
            conv = audit_pointwise_convergence(f, spec["n_list"], M, float(spec.get("target", 0.02)))
            entry["convergence"] = conv.to_json()
            ok &= conv.ok
            lip_f = audit_young(f, 0, M, alphas=(1.0,)).rows[0][1]
            for n, err in conv.rows:
                lt = audit_young(f, n, M, alphas=(1.0,)).rows[0][2]
                rows.append([entry["name"], n, repr(err), repr(lt / lip_f if lip_f else 0.0)])
        out.append(entry)
    return Result({"grid": M, "functions": out, "ok": bool(ok)}, ok=bool(ok), scalar="float",
                  rows=rows, header=["function", "n", "sup_error", "lip_ratio"],
                  summary=f"fejer ok={bool(ok)}")


def _random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def cmd_sphere_kernel(args, cfg) -> Result:
    d, delta = int(cfg.get("d", 3)), float(cfg.get("delta", 2))
    n_max = int(args.nmax if args.nmax is not None else cfg.get("n_max", 50))
    tol = float(args.tol if args.tol is not None else 1e-8)
    rows, kernels = [], []
    ok = True
    for n in range(n_max + 1):
        k = cesaro_kernel(SphereKernelSpec(n, delta, d))
        good = k.min_value >= -1e-10 and abs(k.norm - 1) <= tol
        ok &= good
        kernels.append({"n": n, "min_value": k.min_value, "weighted_norm": k.norm, "ok": good})
        rows.append([n, repr(k.min_value), repr(k.norm)])
    nlat = int(args.grid or cfg.get("nlat", 32))
    grid = SphereGrid(nlat)
    spec = SphereKernelSpec(int(cfg.get("equivariance_n", 10)), delta, d)
    rng = np.random.default_rng(args.seed)
    c = rng.standard_normal(10)

    def f(P):
        x, y, z = P[:, 0], P[:, 1], P[:, 2]
        return (c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * y + c[5] * z * z
                + c[6] * x ** 3 + c[7] * y * z * z + c[8] * x * y * z + c[9] * z ** 4)

    base = sphere_convolve(SphereFunction.from_callable(grid, f), spec)
    worst = 0.0
    pts = grid.points().reshape(-1, 3)
    for _ in range(int(cfg.get("rotations", 3))):
        R = _random_rotation(rng)
        rot = sphere_convolve(SphereFunction.from_callable(grid, lambda P: f(P @ R)), spec)
        worst = max(worst, float(np.abs(rot.to_grid(grid).reshape(-1) - base.evaluate(pts @ R)).max()))
    equi_ok = worst <= 1e-8 and base.rank <= (spec.n + 1) ** 2
    ok &= equi_ok
    return Result({"d": d, "delta": delta, "kernels": kernels,
                   "equivariance": {"n": spec.n, "nlat": nlat, "max_error": worst,
                                    "rank": base.rank, "rank_bound": (spec.n + 1) ** 2,
                                    "ok": equi_ok},
                   "ok": bool(ok)},
                  ok=bool(ok), scalar="float", rows=rows, header=["n", "min_value", "weighted_norm"],
                  summary=f"sphere-kernel ok={bool(ok)}")


def cmd_net(args, cfg) -> Result:
    rng = np.random.default_rng(args.seed)
    samples = random_hyperboloid_samples(int(cfg.get("dim", 2)), int(cfg.get("count", 200)),
                                         float(cfg.get("radius", 3.0)), rng)
    space = greedy_net(samples, float(cfg.get("eps", 0.5)))
    problems = validate(space)
    return Result({"size": len(space), "space": space.to_json(), "problems": problems},
                  ok=not problems, scalar="float", summary=f"{len(space)} net points")


COMMANDS = {
    "ball": cmd_ball,
    "comb-audit": cmd_comb_audit,
    "norm": cmd_norm,
    "basis-audit": cmd_basis_audit,
    "quotient-audit": cmd_quotient_audit,
    "tower": cmd_tower,
    "fejer": cmd_fejer,
    "sphere-kernel": cmd_sphere_kernel,
    "net": cmd_net,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lipfree", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lipfree {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config (defaults to the bundled example)")
    p.add_argument("--out", help="directory for report files (stdout when omitted)")
    p.add_argument("--radius", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", action="store_true", help="also write a CSV table (needs --out)")
    return p


def _config_echo(args, cfg) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "out") and v is not None}
    return {"flags": flags, "input": cfg}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.csv and not args.out:
        print("error: --csv needs --out", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args)
        res = COMMANDS[args.command](args, cfg)
    except ResourceError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValidationError, OutOfRangeError, UnsupportedError, KeyError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as e:
        print(f"solver did not certify: {e}", file=sys.stderr)
        return EXIT_FAILED

    report = {"command": args.command, "version": __version__, "scalar": res.scalar,
              "config": _config_echo(args, cfg), "ok": res.ok, "result": res.payload}
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text)
        if args.csv and res.rows is not None:
            with open(out / f"{args.command}.csv", "w", newline="") as f:
                wr = csv.writer(f)
                wr.writerow(res.header)
                wr.writerows(res.rows)
        print(res.summary)
    else:
        sys.stdout.write(text)
    return EXIT_OK if res.ok else EXIT_FAILED


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
