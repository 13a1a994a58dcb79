"""Command line: ``hc3lab <subcommand> [--config PATH] [--set section.key=value ...]``.

Every subcommand writes CSV/JSON artifacts and a ``manifest.json`` into the
output directory.  Exit status: 0 on success (partial scan failures are
reported as unknown points and counted as warnings), 1 on usage or
configuration errors (nothing is written), 2 on a numerical hard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence

from . import __version__
from .band import ScanRange, alpha0, band_profile
from .config import ConfigError, RunConfig, default_config_text, load_config
from .constants import model_constants
from .fields import classify_sets, condition_m_check, db_lambda1_pm, disc_mode_crossings, hc3_star
from .glflow import GLGrid, critical_point_diagnostics, minimize
from .io import write_csv, write_json, write_manifest
from .model1d import Grid1D, Material, theta0, theta0_minimizer
from .planar import concentric_discs, disc_expansion_fit, ellipse_pair, mu1_2d_fd, mu1_disc_fourier
from .tridiag import ConvergenceError

__all__ = ["main", "build_parser", "run"]

log = logging.getLogger("hc3lab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2
HARD_ERRORS = (ConvergenceError, ArpackNoConvergence, np.linalg.LinAlgError, FloatingPointError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers


class Context:
    """Resolved configuration plus the bookkeeping of one invocation."""

    def __init__(self, cfg: RunConfig, out: Path, seed: int, threads: int):
        self.cfg, self.out, self.seed, self.threads = cfg, out, seed, threads
        self.artifacts: list[Path] = []
        self.warnings = 0

    @property
    def material(self) -> Material:
        return Material(self.cfg["material.a"], self.cfg["material.m"])

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.cfg["grid.lo"], self.cfg["grid.hi"], self.cfg["grid.n"])

    @property
    def extrapolate(self) -> bool:
        return self.cfg["grid.extrapolate"]

    @property
    def scan(self) -> ScanRange:
        return ScanRange(self.cfg["scan.xi_lo"], self.cfg["scan.xi_hi"], self.cfg["scan.xi_step"])

    @property
    def geometry(self):
        g = self.cfg.section("geometry")
        if g["kind"] == "concentric_discs":
            return concentric_discs(g["r_inner"], g["r_outer"])
        if len(g["inner_axes"]) != 2 or len(g["outer_axes"]) != 2:
            raise UsageError("geometry.inner_axes and geometry.outer_axes need two semi-axes each")
        return ellipse_pair(tuple(g["inner_axes"]), tuple(g["outer_axes"]))

    def alpha0(self) -> float:
        return alpha0(self.material, self.grid, extrapolate=self.extrapolate)

    def alpha(self) -> float:
        policy = self.cfg["alpha.policy"]
        if policy == "explicit":
            al = self.cfg["alpha.value"]
        elif policy == "at_alpha0":
            al = self.alpha0()
        else:
            al = self.alpha0() + self.cfg["alpha.offset"]
        if not al > 0:
            raise UsageError(f"alpha must be positive, got {al}")
        return float(al)

    def B_range(self) -> np.ndarray:
        return np.linspace(self.cfg["scan.B_lo"], self.cfg["scan.B_hi"], self.cfg["scan.B_count"])

    def fd_opts(self) -> dict:
        ppu = self.cfg["grid.points_per_unit"]
        return {"points_per_unit": ppu} if ppu > 0 else {}

    def map(self, fn, items):
        """Apply fn to items, in order; concurrently when threads > 1."""
        items = list(items)
        if self.threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    def guarded(self, fn, x):
        """fn(x), or None with a warning when it hits a numerical hard error."""
        try:
            return fn(x)
        except HARD_ERRORS as exc:
            log.warning("point %r failed: %s", x, exc)
            return None

    def json(self, name, obj):
        self.artifacts.append(write_json(self.out / name, obj))

    def csv(self, name, header, rows):
        self.artifacts.append(write_csv(self.out / name, header, rows))


# ---------------------------------------------------------------------------
# subcommands


def cmd_theta0(ctx: Context):
    g = ctx.grid
    val = theta0(g, ctx.cfg["scan.xi_step"], extrapolate=ctx.extrapolate)
    ctx.json("theta0.json", {"theta0": val, "xi": theta0_minimizer(g, ctx.cfg["scan.xi_step"]),
                             "h": g.h, "extrapolated": ctx.extrapolate})


def cmd_band(ctx: Context):
    mat, al = ctx.material, ctx.alpha()
    prof = band_profile(mat, al, ctx.scan, ctx.grid)
    ctx.csv("band_profile.csv", ("xi", "mu1"), prof.samples.tolist())
    ctx.json("band.json", {
        "a": mat.a, "m": mat.m, "alpha": al, "alpha0": ctx.alpha0(), "theta0": theta0(ctx.grid, extrapolate=ctx.extrapolate),
        "xi_star": prof.xi_star, "beta": prof.beta, "mu_second_deriv": prof.mu_second_deriv,
        "minimizer_unique": prof.minimizer_unique, "edge_minimum": prof.edge_minimum,
        "local_minima": [list(p) for p in prof.local_minima],
    })


def cmd_alpha0(ctx: Context):
    mat = ctx.material
    ctx.json("alpha0.json", {"a": mat.a, "m": mat.m, "theta0": theta0(ctx.grid, extrapolate=ctx.extrapolate),
                             "alpha0": ctx.alpha0()})


def cmd_constants(ctx: Context):
    mat = ctx.material
    policy = ctx.cfg["alpha.policy"]
    al = None if policy == "at_alpha0" else ctx.alpha()
    c = model_constants(mat, al, ctx.grid, extrapolate=ctx.extrapolate, scan=ctx.scan)
    doc = c.as_dict()
    doc["condition_m"] = condition_m_check(mat, c)
    ctx.json("constants.json", doc)


def cmd_disc_spectrum(ctx: Context):
    geo, mat, al = ctx.geometry, ctx.material, ctx.alpha()
    h_scaled = ctx.cfg["grid.radial_h_scaled"]

    def one(B):
        if geo.kind == "concentric_discs":
            return mu1_disc_fourier(geo, mat, B, al, h_scaled=h_scaled)
        return mu1_2d_fd(geo, mat, B, al, **ctx.fd_opts())

    Bs = [float(b) for b in ctx.cfg["scan.B_values"]]
    res = ctx.map(lambda b: ctx.guarded(one, b), Bs)
    rows = []
    for B, e in zip(Bs, res):
        if e is None:
            ctx.warnings += 1
            rows.append((B, al, "unknown", "", "", "", ""))
        else:
            rows.append((B, al, e.mu1, e.mu1 + al * B, e.winning_mode, e.delta, e.boundary_mass_fraction))
    ctx.csv("disc_spectrum.csv", ("B", "alpha", "mu1", "lambda1", "winning_mode", "delta", "boundary_mass_fraction"), rows)


def cmd_expansion_fit(ctx: Context):
    if ctx.geometry.kind != "concentric_discs":
        raise UsageError("expansion-fit needs geometry.kind = concentric_discs")
    mat, al = ctx.material, ctx.alpha()
    c = model_constants(mat, al, ctx.grid, extrapolate=ctx.extrapolate, scan=ctx.scan)
    fit = disc_expansion_fit(mat, al, ctx.B_range(), c, ctx.geometry, h_scaled=ctx.cfg["grid.radial_h_scaled"])
    rows = zip(fit["B"], fit["mu1"], fit["Delta_B"], fit["residual"])
    ctx.csv("expansion_fit.csv", ("B", "mu1", "Delta_B", "residual"), rows)
    summary = {k: v for k, v in fit.items() if k not in ("B", "mu1", "Delta_B", "residual")}
    summary.update(alpha=al, beta=c.beta, C1=c.C1, xi_star=c.xi_star, delta0=c.delta0)
    ctx.json("expansion_fit.json", summary)


def cmd_hc3(ctx: Context):
    geo, mat = ctx.geometry, ctx.material
    c = model_constants(mat, None, ctx.grid, extrapolate=ctx.extrapolate, scan=ctx.scan)
    opts = {} if geo.kind == "concentric_discs" else ctx.fd_opts()
    kappas = [float(k) for k in ctx.cfg["scan.kappa_values"]]
    reps = ctx.map(lambda k: ctx.guarded(lambda kk: hc3_star(kk, geo, mat, constants=c, **opts), k), kappas)
    curve, scan, docs = [], [], []
    for k, rep in zip(kappas, reps):
        if rep is None:
            ctx.warnings += 1
            curve.append((k, "unknown", "", "", ""))
            continue
        curve.append((k, rep.H_star, rep.H_asym, rep.positive_above, rep.monotone_after))
        scan.extend((k, h, v) for h, v in rep.scan)
        docs.append(rep.as_dict())
    ctx.csv("hc3_curve.csv", ("kappa", "H_star", "H_asym", "positive_above", "monotone_after"), curve)
    ctx.csv("hc3_scan.csv", ("kappa", "H", "mu"), scan)
    ctx.json("hc3_reports.json", {"alpha0": c.alpha0, "calC1": c.calC1, "reports": docs})


def cmd_monotonicity(ctx: Context):
    geo, mat, al = ctx.geometry, ctx.material, ctx.alpha()
    c = model_constants(mat, al, ctx.grid, extrapolate=ctx.extrapolate, scan=ctx.scan)
    bound = al - 0.5 * c.C2
    opts = {} if geo.kind == "concentric_discs" else ctx.fd_opts()
    Bs = [float(b) for b in ctx.B_range()]
    res = ctx.map(lambda b: ctx.guarded(lambda bb: db_lambda1_pm(bb, al, geo, mat, **opts), b), Bs)
    rows = []
    for B, d in zip(Bs, res):
        if d is None or not d.converged:
            ctx.warnings += 1
        if d is None:
            rows.append((B, "unknown", "", bound, ""))
        else:
            rows.append((B, d.left, d.right, bound, d.converged))
    ctx.csv("monotonicity.csv", ("B", "left", "right", "alpha_minus_C2_half", "converged"), rows)
    doc = {"alpha": al, "C2": c.C2, "beta": c.beta, "condition_m": condition_m_check(mat, c)}
    if geo.kind == "concentric_discs":
        cr = disc_mode_crossings(Bs[0], min(Bs[0] + 10.0, Bs[-1]), al, geo, mat)
        doc["crossings"] = [{"B": x.B, "left": x.left, "right": x.right, "modes": list(x.modes)} for x in cr]
    ctx.json("monotonicity.json", doc)


def cmd_classify(ctx: Context):
    geo, mat = ctx.geometry, ctx.material
    kappa = ctx.cfg["gl.kappa"]
    H = ctx.cfg["scan.H_values"] or tuple(np.round(kappa * np.arange(1.1, 1.61, 0.0625), 10))
    grid = GLGrid.build(geo, ctx.cfg["grid.gl_nodes"])
    tol = ctx.cfg["gl.tol"] or None
    rep = classify_sets(kappa, geo, mat, H, grid, ctx.cfg["tolerances.energy"], ctx.cfg["tolerances.psi"],
                        seed=ctx.seed, max_iter=ctx.cfg["gl.max_iter"], tol=tol)
    ctx.warnings += len(rep.unknown)
    rows = [(s["H"], s["mu"], s["energy"], s["psi_l2"], s["converged"], s["N_loc"],
             "unknown" if s["N"] is None else s["N"]) for s in rep.scan]
    ctx.csv("classify.csv", ("H", "mu", "energy", "psi_l2", "converged", "N_loc", "N"), rows)
    doc = rep.as_dict()
    doc.pop("scan")
    ctx.json("classify.json", doc)


def cmd_gl_minimize(ctx: Context):
    geo, mat = ctx.geometry, ctx.material
    kappa, H = ctx.cfg["gl.kappa"], ctx.cfg["gl.H"]
    grid = GLGrid.build(geo, ctx.cfg["grid.gl_nodes"])
    tol = ctx.cfg["gl.tol"] or None
    st = minimize(kappa, H, mat, grid, init=ctx.cfg["gl.init"], seed=ctx.seed, tol=tol, max_iter=ctx.cfg["gl.max_iter"])
    if not st.converged:
        ctx.warnings += 1
    d = grid.disc
    ctx.csv("gl_psi.csv", ("node", "x", "y", "re_psi", "im_psi"),
            zip(range(grid.n_nodes), d.nodes_x, d.nodes_y, st.psi.real, st.psi.imag))
    ctx.csv("gl_links.csv", ("edge", "node_i", "node_j", "phase"),
            zip(range(grid.n_edges), d.edges[:, 0], d.edges[:, 1], st.link))
    ctx.json("gl_minimize.json", {
        "grid": {"nodes": ctx.cfg["grid.gl_nodes"], "h": grid.h, "active_nodes": grid.n_nodes, "edges": grid.n_edges},
        "kappa": kappa, "H": H, "init": st.init, "seed": ctx.seed, "energy": st.energy,
        "grad_norm": st.grad_norm, "converged": st.converged, "iterations": st.iterations,
        "diagnostics": critical_point_diagnostics(st, mat),
    })


def cmd_verify_all(ctx: Context):
    from .verify import run_battery

    def echo(r):
        print(f"criterion {r.number:2d}  {'PASS' if r.passed else 'FAIL'}  {r.title}"
              + (f"  [{r.error}]" if r.error else ""), flush=True)

    results, paths = run_battery(ctx.out, ctx.cfg["verify.criteria"], ctx.seed, echo)
    ctx.artifacts.extend(paths)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    ctx.failed_criteria = n_fail


COMMANDS = {
    "theta0": (cmd_theta0, "de Gennes constant Theta_0"),
    "band": (cmd_band, "band function profile and its minimum"),
    "alpha0": (cmd_alpha0, "threshold alpha_0(a, m)"),
    "constants": (cmd_constants, "spectral constants at the band minimum"),
    "disc-spectrum": (cmd_disc_spectrum, "lowest planar eigenvalue over scan.B_values"),
    "expansion-fit": (cmd_expansion_fit, "disc eigenvalue expansion fit over [B_lo, B_hi]"),
    "hc3": (cmd_hc3, "critical field H_* for scan.kappa_values"),
    "monotonicity": (cmd_monotonicity, "one-sided B-derivatives of lambda_1"),
    "classify": (cmd_classify, "local vs global nucleation sets from GL minimization"),
    "gl-minimize": (cmd_gl_minimize, "one Ginzburg-Landau minimization with diagnostics"),
    "verify-all": (cmd_verify_all, "acceptance battery with a pass/fail table"),
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hc3lab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"hc3lab {__version__}")
    p.add_argument("--print-default-config", action="store_true", help="print the documented default config and exit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file with [sections]")
    common.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[], help="override one config key")
    common.add_argument("--out", metavar="DIR", help="output directory (run.out)")
    common.add_argument("--seed", type=int, help="random seed (run.seed)")
    common.add_argument("--threads", type=int, help="worker threads for scans (run.threads)")
    common.add_argument("--a", type=float, help="material.a")
    common.add_argument("--m", type=float, help="material.m")
    common.add_argument("--alpha", type=float, help="explicit alpha (sets alpha.policy = explicit)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return p


def _overrides(args) -> list[str]:
    out = list(args.set)
    for flag, key in (("a", "material.a"), ("m", "material.m"), ("out", "run.out"),
                      ("seed", "run.seed"), ("threads", "run.threads")):
        v = getattr(args, flag)
        if v is not None:
            out.append(f"{key}={v}")
    if args.alpha is not None:
        out += ["alpha.policy=explicit", f"alpha.value={args.alpha!r}"]
    return out


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version, or a usage error
        return int(exc.code or 0)
    if args.print_default_config:
        print(default_config_text())
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        if cfg["run.threads"] < 1:
            raise ConfigError("run.threads must be >= 1")
    except ConfigError as exc:
        print(f"hc3lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg["run.out"])
    ctx = Context(cfg, out, cfg["run.seed"], cfg["run.threads"])
    fn = COMMANDS[args.command][0]
    start = time.perf_counter()
    try:
        with np.errstate(invalid="ignore", divide="ignore"):
            fn(ctx)
    except (UsageError, ValueError) as exc:
        print(f"hc3lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HARD_ERRORS as exc:
        print(f"hc3lab: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall = time.perf_counter() - start
    write_manifest(out, args.command, cfg.text, ctx.artifacts, wall,
                   {"seed": ctx.seed, "threads": ctx.threads, "warnings": ctx.warnings, "config": cfg.text})
    if ctx.warnings:
        print(f"hc3lab: {ctx.warnings} warning(s): some points are unknown or unconverged", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
