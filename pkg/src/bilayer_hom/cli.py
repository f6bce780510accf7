"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numeric check failure.
"""
from __future__ import annotations

import argparse
import math
import sys as _sys
from pathlib import Path

import numpy as np

from .algebra import SET_IDS, Rotation, membership
from .cell_problem import w_cell_ansatz
from .config import RunConfig
from .energetics import build_field, convergence_sweep, energy_eps, energy_hom
from .errors import ConfigError, HomogError
from .export import csv_text, fmt, write_csv, write_pgm, write_raster_csv
from .microstructure import LayerGeometry, rasterize_gradient
from .rank_one import laminate_decompose_Ns, laminate_residuals
from .rigidity import (
    fit_layer_rotations, interpolant_bound, one_d_bound_check, sigma_vs_interpolant,
    synthetic_layer_field, trace_rows,
)

LAMINATE_RESIDUAL_TOL = 1e-10
CELL_GAP_RANGE = (-1e-9, 1e-6)


class NumericFailure(Exception):
    pass


class Context:
    def __init__(self, cfg: RunConfig, out: Path | None, quiet: bool):
        self.cfg = cfg
        self.out = out
        self.quiet = quiet

    def emit(self, name, header, rows):
        rows = list(rows)
        if not self.quiet:
            print(csv_text(header, rows), end="")
        if self.out is not None and self.cfg.outputs.csv:
            write_csv(self.out / name, header, rows, seed=self.cfg.seed)
        return rows


def _matrices(cfg):
    return [np.array(M, dtype=float) for M in cfg.matrices]


def cmd_membership(ctx: Context) -> None:
    cfg = ctx.cfg
    s = cfg.sys
    rows = []
    for F in _matrices(cfg):
        flags = [membership(F, sid, s, cfg.lam if sid == "Me1capNs" else None, cfg.tol)
                 for sid in SET_IDS]
        rows.append((*F.ravel(), *flags))
    ctx.emit("membership.csv", ("F11", "F12", "F21", "F22", *SET_IDS), rows)


def cmd_laminate(ctx: Context) -> None:
    cfg = ctx.cfg
    s = cfg.sys
    rows = []
    worst = 0.0
    for N in _matrices(cfg):
        try:
            spec = laminate_decompose_Ns(N, s, cfg.tol)
        except HomogError as exc:
            raise ConfigError("matrices", f"{N.tolist()}: {exc}") from None
        res = laminate_residuals(spec, N, s)
        r = max(res.values())
        worst = max(worst, r)
        rows.append((*N.ravel(), *spec.F.ravel(), *spec.G.ravel(), spec.mu,
                     *spec.normal, spec.degenerate, r))
    header = ("N11", "N12", "N21", "N22", "F11", "F12", "F21", "F22",
              "G11", "G12", "G21", "G22", "mu", "n1", "n2", "degenerate", "residual")
    ctx.emit("laminate.csv", header, rows)
    if worst > LAMINATE_RESIDUAL_TOL:
        raise NumericFailure(f"laminate residual {worst:.3e} exceeds {LAMINATE_RESIDUAL_TOL}")


def _inner_h(cfg):
    if cfg.builder in ("nested_laminate", "piecewise"):
        return cfg.hrule(cfg.epsilon_list[0])
    return None


def _rasters(ctx, fld, stem):
    cfg = ctx.cfg
    if ctx.out is None or not (cfg.outputs.pgm or cfg.outputs.raster_csv):
        return
    raster = rasterize_gradient(fld, cfg.outputs.resolution)
    if cfg.outputs.pgm:
        write_pgm(ctx.out / f"{stem}.pgm", raster, cfg.outputs.component)
    if cfg.outputs.raster_csv:
        write_raster_csv(ctx.out / f"{stem}_raster.csv", raster, seed=cfg.seed)


def cmd_recover(ctx: Context) -> None:
    cfg = ctx.cfg
    s, R, prof, dom = cfg.sys, cfg.rotation, cfg.profile, cfg.rect
    eps = cfg.epsilon_list[0]
    geom = LayerGeometry(cfg.lam, eps)
    h = _inner_h(cfg)
    fld = build_field(cfg.builder, prof, R, s, geom, h, dom)
    rep = energy_eps(fld, s, geom, cfg.tau, cfg.tol)
    hom = energy_hom(R, prof, s, cfg.lam, cfg.tau, dom, cfg.tol)
    header = ("epsilon", "h", "pieces", "energy", "hom_energy", "gap", "ledger",
              "admissible", "violation")
    ctx.emit("recover.csv", header, [(eps, h, len(fld.pieces), rep.value, hom,
                                      rep.value - hom, fld.ledger_total, rep.admissible,
                                      rep.constraint_violation_max)])
    _rasters(ctx, fld, "recover")


def cmd_sweep(ctx: Context) -> None:
    cfg = ctx.cfg
    s, R, prof, dom = cfg.sys, cfg.rotation, cfg.profile, cfg.rect
    rows = convergence_sweep(cfg.builder, cfg.epsilon_list, cfg.hrule, s, cfg.lam, cfg.tau,
                             R, prof, dom, cfg.tol)
    ctx.emit("sweep.csv", ("epsilon", "h", "energy", "hom_energy", "gap", "ledger"),
             [(r.epsilon, r.inner_h, r.energy, r.hom_energy, r.gap, r.ledger) for r in rows])
    if ctx.out is not None and (cfg.outputs.pgm or cfg.outputs.raster_csv):
        for i, eps in enumerate(cfg.epsilon_list):
            geom = LayerGeometry(cfg.lam, eps)
            h = cfg.hrule(eps) if cfg.builder in ("nested_laminate", "piecewise") else None
            _rasters(ctx, build_field(cfg.builder, prof, R, s, geom, h, dom), f"sweep_eps{i}")


def cmd_cell(ctx: Context) -> None:
    cfg = ctx.cfg
    s = cfg.sys
    rows = []
    bad = []
    for F in _matrices(cfg):
        res = w_cell_ansatz(F, s, cfg.lam, cfg.tau, cfg.cell.n_soft_bands, cfg.tol)
        rows.append((*F.ravel(), res.hom_value, res.ansatz_min, res.gap))
        finite = math.isfinite(res.hom_value) and math.isfinite(res.ansatz_min)
        if finite and not (CELL_GAP_RANGE[0] <= res.gap <= CELL_GAP_RANGE[1]):
            bad.append(res.gap)
        if math.isfinite(res.hom_value) != math.isfinite(res.ansatz_min):
            bad.append(res.gap)
    ctx.emit("cell.csv", ("F11", "F12", "F21", "F22", "hom", "ansatz", "gap"), rows)
    if bad:
        raise NumericFailure(f"cell gaps outside {CELL_GAP_RANGE}: {bad}")


def cmd_rigidity(ctx: Context) -> None:
    cfg = ctx.cfg
    rc = cfg.rigidity
    if rc.thetas is not None:
        eps = rc.epsilon or cfg.epsilon_list[0]
        geom = LayerGeometry(cfg.lam, eps)
        fld = synthetic_layer_field(rc.thetas, geom, cfg.rect.width)
    else:
        eps = cfg.epsilon_list[0]
        geom = LayerGeometry(cfg.lam, eps)
        fld = build_field(cfg.builder, cfg.profile, cfg.rotation, cfg.sys, geom,
                          _inner_h(cfg), cfg.rect)
    trace = fit_layer_rotations(fld, geom, fld.domain)
    ctx.emit("trace.csv", ("layer", "theta", "gap_to_prev"), trace_rows(trace))
    gap = sigma_vs_interpolant(trace, eps)
    bound = interpolant_bound(trace, eps)
    ctx.emit("interpolant.csv", ("epsilon", "total_variation", "step_l2_gap", "bound", "ratio"),
             [(eps, trace.total_variation, gap, bound, gap / bound if bound > 0 else 0.0)])

    rng = np.random.default_rng(cfg.seed)
    cases = [tuple(c) for c in rc.cases]
    for _ in range(rc.random_cases):
        L, H = rng.uniform(0.25, 2.0, size=2)
        t1, t2 = rng.uniform(-math.pi, math.pi, size=2)
        cases.append((L, H, t1, t2))
    rows = []
    bad = []
    for L, H, t1, t2 in cases:
        lhs, rhs = one_d_bound_check(L, H, Rotation(t1), Rotation(t2), rc.n_grid)
        rows.append((L, H, t1, t2, lhs, rhs, rhs / lhs if lhs > 0 else 0.0))
        if lhs < rhs - 1e-12:
            bad.append((L, H, t1, t2))
    ctx.emit("bounds.csv", ("L", "H", "theta1", "theta2", "lhs_min", "rhs", "ratio"), rows)
    if bad:
        raise NumericFailure(f"one-dimensional bound violated for {bad}")


COMMANDS = {
    "membership": cmd_membership,
    "laminate": cmd_laminate,
    "recover": cmd_recover,
    "sweep": cmd_sweep,
    "cell": cmd_cell,
    "rigidity": cmd_rigidity,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bilayer-hom",
                                description="Homogenization experiments for rigid/soft bilayers.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="directory for CSV/PGM output")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--tol", type=float, help="membership tolerance (overrides the config)")
    p.add_argument("--quiet", action="store_true", help="do not print tables")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tol is not None:
            cfg.tolerances = {**cfg.tolerances, "membership": args.tol}
        cfg.validate()
        COMMANDS[args.command](Context(cfg, args.out, args.quiet))
    except ConfigError as exc:
        print(f"config error [{exc.name}]: {exc}", file=_sys.stderr)
        return 1
    except NumericFailure as exc:
        print(f"numeric check failed: {exc}", file=_sys.stderr)
        return 2
    except (HomogError, AssertionError) as exc:
        print(f"numeric error: {exc}", file=_sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
