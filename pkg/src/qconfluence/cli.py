"""Command-line interface.

    qconfluence verify      [--config PATH] [--tol X]
    qconfluence directions  [--config PATH | --example NAME] [--out DIR]
    qconfluence deform      [--config PATH | --example NAME] [--q LIST]
    qconfluence eval        --config PATH [--out DIR]
    qconfluence confluence  [--config PATH | --example NAME] [--out DIR]
                            [--q LIST] [--mode pure|with-constants]
                            [--grid NAME] [--threads N]

`confluence` writes matrices.csv, errors.csv, report.json and two SVG
figures into the output directory; re-running with the same inputs
reproduces the CSV byte for byte.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig, default_config, load_config
from .deformation import build_q_family
from .report import (MATRIX_HEADER, RunReport, matrix_rows, plot_direction_arcs,
                     plot_entry_profiles, plot_error_decay, write_csv)
from .solutions import (ConfluenceAbort, DiagonalSolutionFamily,
                        DifferentialFundamentalMatrix, QFundamentalMatrix)
from .summation import admissible_direction
from . import verification


def _load(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "example", None):
        cfg = default_config(args.example)
    else:
        cfg = default_config("sec43")
    if getattr(args, "q", None):
        cfg.q_values = tuple(float(x) for x in args.q.split(","))
    if getattr(args, "tol", None):
        cfg.functional_tol = float(args.tol)
    if getattr(args, "mode", None):
        cfg.connection_mode = args.mode
    if getattr(args, "grid", None):
        cfg.grid_name = args.grid
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    return cfg


def _families(cfg: ExperimentConfig, q: float):
    ex = cfg.resolve_example()
    if cfg.deformation == "registry" and ex is not None and ex.registry_family:
        return ex.family(q, "registry")
    op = cfg.resolve_operator()
    return build_q_family(op, q, cfg.level_spec)


def _diff_positive_entries(cfg: ExperimentConfig, op, direction: float):
    """Positive-part descriptions per factor for the differential matrix,
    mirroring the q-side level declarations."""
    from .summation import sum_in_direction
    entries = []
    for j in range(op.order):
        pos = op.positive_part(j)
        spec = cfg.level_spec[j] if cfg.level_spec else []
        images = [img for (_, _, img) in spec if img is not None]
        if images:
            if any(img is None and not comp.is_zero for (comp, _, img) in spec):
                raise ConfigError(
                    f"factor {j + 1}: mixed image/no-image level declarations "
                    f"are not supported on the differential side")
            entries.append(images)
        elif pos.is_zero:
            entries.append(None)
        else:
            entries.append(sum_in_direction(pos, [], direction,
                                            quad_tol=cfg.quad_tol * cfg.tol_scale))
    return entries


def _q_matrix_factory(cfg: ExperimentConfig) -> Callable[[float], QFundamentalMatrix]:
    op = cfg.resolve_operator()

    def factory(q: float) -> QFundamentalMatrix:
        fam = DiagonalSolutionFamily(op, _families(cfg, q), q)
        return QFundamentalMatrix(fam, mode=cfg.connection_mode,
                                  tol=cfg.functional_tol * cfg.tol_scale)

    return factory


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    cfg = _load(args)
    t0 = time.time()
    results = verification.run_suite(cfg, inject_resonant=args.inject_resonant)
    report = RunReport("verify", cfg.digest())
    ok_all = True
    for name, ok, detail in results:
        report.invariants[name] = ok
        ok_all &= ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    report.timing_seconds = time.time() - t0
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report.write(os.path.join(args.out, "verify_report.json"))
    print(f"{'OK' if ok_all else 'FAILED'} ({len(results)} checks, "
          f"{report.timing_seconds:.1f}s)")
    return 0 if ok_all else 1


def cmd_directions(args) -> int:
    cfg = _load(args)
    op = cfg.resolve_operator()
    try:
        sector = admissible_direction(op)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("admissible intervals (radians):")
    for a, b in sector.intervals:
        print(f"  ({a:.12f}, {b:.12f})   = ({a / math.pi:.6f} pi, {b / math.pi:.6f} pi)")
    print(f"chosen direction d = {sector.direction:.12f} "
          f"({sector.direction / math.pi:.6f} pi), margin eps = {sector.half_width:.12f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        rows = [["intersection", f"{a:.17g}", f"{b:.17g}"] for a, b in sector.intervals]
        for j, fam in enumerate(sector.per_factor_arcs):
            rows += [[f"factor{j + 1}", f"{a:.17g}", f"{b:.17g}"] for a, b in fam]
        path = os.path.join(args.out, "directions.csv")
        write_csv(path, ["family", "lo", "hi"], rows)
        plot_direction_arcs(path, os.path.join(args.out, "directions.svg"))
        print(f"wrote {path} and directions.svg")
    return 0


def cmd_deform(args) -> int:
    cfg = _load(args)
    op = cfg.resolve_operator()
    ex = cfg.resolve_example()
    routes = ["eq17"]
    if ex is not None and ex.registry_family is not None:
        routes.append("registry")
    for q in cfg.q_values:
        print(f"q = {q}:")
        for route in routes:
            print(f" route {route}:")
            fams = (build_q_family(op, q, cfg.level_spec) if route == "eq17"
                    else ex.family(q, "registry"))
            for j, fam in enumerate(fams):
                print(f"  1+(q-1)f_{j + 1}^(<=0) = {fam.nonpos}")
                print(f"    boundary constant: {fam.boundary_constant():.12g}")
                if fam.positive is not None:
                    for lv in fam.positive.levels:
                        tag = lv.image.name if lv.image else "series"
                        print(f"    positive level {lv.level} via {tag}, "
                              f"radius ~ {lv.radius:.3g}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    from .qfunctions import ThetaEvaluator, gamma, gamma_p, qexp_entire
    rows: List[List[str]] = []
    try:
        for q in cfg.eval_q:
            th = ThetaEvaluator(q)
            for z in cfg.eval_points.get("theta", []):
                v = th.theta(z)
                rows.append(["theta", f"{q:g}", f"{z:g}", f"{v:.12g}"])
            for z in cfg.eval_points.get("qexp", []):
                v = qexp_entire(z, q)
                rows.append(["qexp", f"{q:g}", f"{z:g}", f"{v:.12g}"])
            for x in cfg.eval_points.get("gamma_p", []):
                v = gamma_p(x, 1.0 / q)
                rows.append(["gamma_p", f"{q:g}", f"{x:g}", f"{v:.12g}"])
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not rows:
        print("nothing to evaluate: give an [eval] table in the config",
              file=sys.stderr)
        return 1
    for r in rows:
        print("  ".join(r))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "eval.csv"),
                  ["function", "q", "argument", "value"], rows)
    return 0


def cmd_confluence(args) -> int:
    cfg = _load(args)
    op = cfg.resolve_operator()
    grid = cfg.resolve_grid()
    t0 = time.time()
    if cfg.direction == "auto":
        direction = float(np.median([z.argument for z in grid]))
    else:
        direction = float(cfg.direction)
    diff = DifferentialFundamentalMatrix(op, direction,
                                         _diff_positive_entries(cfg, op, direction),
                                         tol=cfg.quad_tol * cfg.tol_scale,
                                         anchor=4.0 * max(z.modulus for z in grid))
    factory = _q_matrix_factory(cfg)
    threads = max(1, int(getattr(args, "threads", 1) or 1))

    report = RunReport("confluence", cfg.digest())
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)

    # the declared valuations of 1+(q-1)f_j must be constant across the
    # experiment's q grid (checked here, at these q, not symbolically)
    val_sets = {}
    for q in cfg.q_values:
        val_sets[q] = [c.leading_data()[0] for c in _families(cfg, q)]
    if len({tuple(v) for v in val_sets.values()}) != 1:
        print(f"error: coefficient valuations vary across the q grid: {val_sets}",
              file=sys.stderr)
        return 1

    try:
        targets = [diff.matrix(z) for z in grid]
        all_rows = matrix_rows(grid, targets, "differential", None)
        errors: Dict[float, float] = {}
        for q in cfg.q_values:
            qmat = factory(q)
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    mats = list(pool.map(qmat.matrix, grid))
            else:
                mats = [qmat.matrix(z) for z in grid]
            worst = max(float(np.max(np.abs(U - T))) for U, T in zip(mats, targets))
            errors[q] = worst
            all_rows += matrix_rows(grid, mats, "q-difference", q)
        res_q = factory(cfg.q_values[0]).residual(grid[0])
        res_d = diff.residual(grid[0])
    except (ConfluenceAbort, ArithmeticError) as exc:
        print(f"confluence aborted: {exc}", file=sys.stderr)
        report.extra["abort"] = str(exc)
        report.timing_seconds = time.time() - t0
        report.write(os.path.join(out, "report.json"))
        return 1

    write_csv(os.path.join(out, "matrices.csv"), MATRIX_HEADER, all_rows)
    err_rows = [[f"{q:.17g}", f"{errors[q]:.17g}"] for q in cfg.q_values]
    write_csv(os.path.join(out, "errors.csv"), ["q", "E"], err_rows)
    plot_error_decay(os.path.join(out, "errors.csv"),
                     os.path.join(out, "error_decay.svg"))
    plot_entry_profiles(os.path.join(out, "matrices.csv"),
                        os.path.join(out, "entry_profiles.svg"))

    qs = sorted(cfg.q_values, reverse=True)
    decreasing = all(errors[a] > errors[b] for a, b in zip(qs, qs[1:]))
    report.q_values = list(cfg.q_values)
    report.errors = {f"{q:g}": errors[q] for q in cfg.q_values}
    report.invariants["error_strictly_decreasing"] = decreasing
    report.invariants["q_system_residual"] = res_q < 1e-9
    report.invariants["differential_residual"] = res_d < 1e-6
    report.extra["grid_points"] = len(grid)
    report.extra["direction"] = direction
    report.extra["connection_mode"] = cfg.connection_mode
    report.timing_seconds = time.time() - t0
    report.write(os.path.join(out, "report.json"))

    print("E(q):")
    for q in cfg.q_values:
        print(f"  q = {q:<6g} E = {errors[q]:.6g}")
    print(f"strictly decreasing: {decreasing}")
    print(f"wrote matrices.csv, errors.csv, report.json, *.svg under {out}/")
    return 0 if decreasing else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qconfluence",
        description="factored q-difference systems and their q->1 confluence")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, example_flag=True):
        p.add_argument("--config", help="TOML config path")
        if example_flag:
            p.add_argument("--example", help="registry preset name")
        p.add_argument("--out", help="output directory")
        p.add_argument("--q", help="comma-separated q overrides")
        p.add_argument("--tol", help="functional tolerance override")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--mode", choices=["pure", "with-constants"])

    p = sub.add_parser("verify", help="run the invariant suite")
    common(p)
    p.add_argument("--inject-resonant", action="store_true",
                   help="add a deliberately resonant operator to the suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("directions", help="admissible-direction finder")
    common(p)
    p.set_defaults(func=cmd_directions)

    p = sub.add_parser("deform", help="print the deformed coefficient family")
    common(p)
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("eval", help="evaluate special functions from a config")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("confluence", help="run the confluence experiment")
    common(p)
    p.add_argument("--grid", help="named preset grid (e.g. valid, published)")
    p.set_defaults(func=cmd_confluence)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
