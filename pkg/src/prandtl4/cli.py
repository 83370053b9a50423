"""Command-line front end: kernel tables, property verification, evolution runs and the
doubling-snapshot figure.

Configuration is one flat JSON object whose keys mirror :class:`RunConfig`
(camelCase, e.g. ``{"N": 2048, "dtInitial": 5e-4}``).  Exit codes:

* 0 success
* 1 a verified property failed, or the configuration was rejected
* 2 quadrature failure (no convergence, or a kernel tail not negligible on the grid)
* 3 the datum violates the wall compatibility conditions
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import CompatibilityViolated, QuadratureNotConverged, TailNotNegligible, TimeBelowMinimum
from .grid import Grid, Profile, bump
from .kernel import (TRANSFER_KIND, KernelKind, QuadratureSpec, kernel_mass, kernel_matrix,
                     kernel_row_l1, kernel_tail_mass, kernel_value)
from .semigroup import apply, build_operator, check_time, smoothing_rate_fit, verify_semigroup
from .solver import SolverConfig, Termination, evolve

THREADS_ENV = "PRANDTL4_THREADS"
EXIT_OK, EXIT_PROPERTY, EXIT_QUADRATURE, EXIT_COMPATIBILITY = 0, 1, 2, 3
FIGURE_BLOWUP_FACTOR = 2.0**4
SUPPORT_FRACTION = 1e-6


@dataclasses.dataclass
class RunConfig:
    L: float = 150.0
    N: int = 1024
    sMax: float | None = None
    absTol: float = 1e-10
    panelsPerWavelength: int = 4
    maxSubdivisions: int = 200_000
    dtInitial: float = 1e-3
    dtMin: float = 1e-6
    picardIters: int = 6
    picardTol: float = 1e-12
    blowupThreshold: float | None = None
    snapshotFactor: float = 2.0
    maxSteps: int = 200_000
    datum: str = "bump"  # bump | zero | file
    amplitude: float = 10.0
    center: float = 20.0
    halfWidth: float = 10.0
    datumPath: str | None = None
    beta: float = 1.2
    tEnd: float = 1.0
    outputDir: str = "out"
    # kernel-table sweep
    tList: list = dataclasses.field(default_factory=lambda: [1e-3, 1e-2, 0.1, 1.0])
    xList: list = dataclasses.field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    yList: list = dataclasses.field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    m: int = 0
    kind: str = "K"

    def __post_init__(self):
        for name in ("absTol", "dtInitial", "dtMin", "picardTol", "L", "tEnd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.datum not in ("bump", "zero", "file"):
            raise ValueError(f"unknown datum {self.datum!r}")
        if self.datum == "file" and not self.datumPath:
            raise ValueError("datum 'file' needs datumPath")
        KernelKind(self.kind)

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    @property
    def grid(self) -> Grid:
        return Grid(float(self.L), int(self.N))

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(self.absTol, self.panelsPerWavelength, self.maxSubdivisions, self.sMax)

    def solver(self, **overrides) -> SolverConfig:
        kw = dict(dt_initial=self.dtInitial, dt_min=self.dtMin, picard_iters=self.picardIters,
                  picard_tol=self.picardTol, blowup_threshold=self.blowupThreshold,
                  snapshot_factor=self.snapshotFactor, max_steps=self.maxSteps, beta=self.beta,
                  quad=self.quad)
        kw.update(overrides)
        return SolverConfig(**kw)

    def datum_profile(self, grid: Grid | None = None) -> Profile:
        grid = grid or self.grid
        if self.datum == "zero":
            return Profile.zeros(grid)
        if self.datum == "bump":
            return bump(grid, self.amplitude, self.center, self.halfWidth)
        y, a = read_profile_csv(self.datumPath)[:2]
        return Profile(grid, np.interp(grid.nodes, y, a, left=0.0, right=0.0))


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("configuration must be a JSON object")
    return RunConfig.from_mapping(data)


# ---------------------------------------------------------------- file formats

def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_profile_csv(path) -> tuple[np.ndarray, ...]:
    """Columns of a profile CSV (header row skipped), as float arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return tuple(data[:, k] for k in range(data.shape[1]))


def profile_from_csv(path) -> Profile:
    y, a = read_profile_csv(path)[:2]
    return Profile(Grid(float(y[-1]), len(y)), a)


def write_profile_csv(path: Path, a: Profile):
    g = a.grid
    ay = g.derivative(a.values, 1)
    ayy = g.derivative(a.values, 2)
    write_csv(path, ["y", "a", "a_y", "a_yy"], zip(g.nodes, a.values, ay, ayy))


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, default=lambda o: o.value if hasattr(o, "value") else str(o))
        fh.write("\n")


def render_svg(curves, title: str, caption: str, width: int = 720, height: int = 440) -> str:
    """Overlaid line plot; ``curves`` is a list of ``(label, x, y)``."""
    pad_l, pad_r, pad_t, pad_b = 60, 170, 40, 50
    xs = np.concatenate([c[1] for c in curves])
    ys = np.concatenate([c[2] for c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + ph - (y - y0) / (y1 - y0) * ph

    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
               "#7f7f7f", "#bcbd22", "#17becf"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f"<title>{title}</title>", f"<desc>{caption}</desc>",
           '<rect width="100%" height="100%" fill="white"/>',
           f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{pad_l}" y="{pad_t - 12}" font-size="14" font-family="sans-serif">{title}</text>',
           f'<text x="{pad_l + pw / 2}" y="{height - 12}" font-size="12" text-anchor="middle" '
           f'font-family="sans-serif">y</text>']
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{pad_t + ph + 16}" font-size="11" text-anchor="middle" '
                   f'font-family="sans-serif">{xv:.4g}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{py(yv) + 4:.1f}" font-size="11" text-anchor="end" '
                   f'font-family="sans-serif">{yv:.4g}</text>')
    for k, (label, x, y) in enumerate(curves):
        color = palette[k % len(palette)]
        # Thin out long curves; the polyline stays visually identical.
        step = max(1, len(x) // 2000)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[::step], y[::step]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = pad_t + 16 + 18 * k
        out.append(f'<line x1="{pad_l + pw + 12}" y1="{ly - 4}" x2="{pad_l + pw + 32}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{pad_l + pw + 38}" y="{ly}" font-size="11" font-family="sans-serif">'
                   f"{label}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -------------------------------------------------------------------- commands

def cmd_kernel_table(config: RunConfig, t_list=None, x_list=None, m=None, kind=None) -> Path:
    """CSV of kernel values at ``(t, x, y)`` plus the ``L1`` norm of each ``(t, x)`` row."""
    t_list = config.tList if t_list is None else t_list
    x_list = config.xList if x_list is None else x_list
    m = config.m if m is None else m
    kind = KernelKind(config.kind if kind is None else kind)
    quad, grid = config.quad, config.grid
    for t in t_list:
        check_time(t, grid)
    y = np.asarray(config.yList, dtype=float)
    rows = []
    for t in t_list:
        vals = kernel_matrix(t, x_list, y, m, kind, quad)
        for i, x in enumerate(x_list):
            l1 = kernel_row_l1(t, x, m, kind, grid, quad)
            for j, yj in enumerate(y):
                rows.append((float(t), float(x), float(yj), m, kind.value, float(vals[i, j]),
                             l1, l1 * t ** (m / 4)))
    out = Path(config.outputDir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "kernel_table.csv"
    write_csv(path, ["t", "x", "y", "m", "kind", "value", "row_l1", "row_l1_scaled"], rows)
    return path


def _check(name, passed, **measured):
    return {"name": name, "passed": bool(passed), **measured}


def _fd_derivative_y(t, x, y, m, quad, h):
    """Central difference ``d_y^m K`` of sixth order with a Richardson error estimate."""
    from .grid import fd_weights
    offsets = np.arange(-4, 5, dtype=float)
    w = fd_weights(offsets, m)

    def d(step):
        vals = [kernel_value(t, x, y + o * step, 0, KernelKind.K, quad) for o in offsets]
        return float(np.dot(w, vals)) / step**m

    coarse, fine = d(2 * h), d(h)
    # Rounding of the quadrature is amplified by the stencil weights.
    noise = quad.abs_tol * t ** -0.25 * float(np.sum(np.abs(w))) / h**m
    return fine, abs(fine - coarse) + noise


def transfer_triples():
    """27 sample points: three times, each with a 3 x 3 block of positions in units of t^(1/4)."""
    scaled = (0.4, 1.3, 3.0)
    return [(t, X * t**0.25, Z * t**0.25) for t in (0.01, 0.1, 1.0) for X in scaled for Z in scaled]


def _check_mass(config, quad, grid):
    # A fine row grid of its own: the kernel concentrates on t^(1/4) ~ 0.06.
    row_grid = Grid(8.0, 16001)
    ts = [1e-3, 1e-4, 1e-5]
    masses = [kernel_mass(t, 1.0, row_grid, quad) for t in ts]
    dev = [abs(v - 1.0) for v in masses]
    return _check("mass", abs(masses[1] - 1) <= 0.01 and dev[0] > dev[1] > dev[2], t=ts, mass=masses)


def _check_concentration(config, quad, grid):
    row_grid = Grid(8.0, 16001)
    ts = [1e-3, 1e-4, 1e-5]
    tails = [kernel_tail_mass(t, 1.0, 0.5, row_grid, quad) for t in ts]
    return _check("concentration", tails[0] > tails[1] > tails[2] and tails[2] < 1e-2,
                  t=ts, delta=0.5, tail_mass=tails)


def _check_boundary(config, quad, grid):
    f = bump(grid)
    tol = 1e-6 * f.sup()
    ts = (1e-3, 0.1, 1.0)
    traces = []
    for t in ts:
        u = apply(build_operator(grid, t, quad=quad), f)
        traces.append(max(abs(u.values[0]), abs(grid.boundary_derivative(u.values, 1))))
    return _check("boundary", all(v <= tol for v in traces), t=list(ts), trace=traces, tol=tol)


def _check_semigroup(config, quad, grid):
    f = bump(grid)
    tol = 1e-4 * f.sup()
    gap = verify_semigroup(f, 0.1, 0.2, quad)
    return _check("semigroup", gap <= tol, tau=0.1, s=0.2, gap=gap, tol=tol)


def _check_smoothing(config, quad, grid):
    # An L1-normalised narrow bump at the configured resolution.
    narrow_grid = Grid(4.0, config.N)
    narrow = bump(narrow_grid, 1.0, 2.0, 0.01)
    t_fit = np.logspace(-4, -2, 9)
    if narrow.l1() == 0:
        return _check("smoothing", False, reason="narrow datum not resolved by the grid",
                      spacing=narrow_grid.spacing)
    narrow = narrow * (1.0 / narrow.l1())
    slopes = {m: smoothing_rate_fit(narrow, m, t_fit, quad) for m in (0, 1)}
    ok = all(abs(slopes[m] + (m + 1) / 4) <= 0.07 for m in slopes)
    return _check("smoothing", ok, t=[t_fit[0], t_fit[-1]],
                  slopes={str(m): s for m, s in slopes.items()})


def _check_transfer(config, quad, grid):
    # y-derivatives of K against x-derivatives of the companion kernels.
    fine_quad = QuadratureSpec(min(config.absTol, 1e-13), config.panelsPerWavelength,
                               config.maxSubdivisions)
    worst, ok = 0.0, True
    for m, kind in TRANSFER_KIND.items():
        for t, x, y in transfer_triples():
            fd, err = _fd_derivative_y(t, x, y, m, fine_quad, 0.02 * t**0.25)
            direct = kernel_value(t, x, y, m, kind, fine_quad)
            tol = max(1e-6, err)
            worst = max(worst, abs(fd - direct) / tol)
            ok &= abs(fd - direct) <= tol
    return _check("derivative_transfer", ok, triples=len(transfer_triples()), orders=list(TRANSFER_KIND),
                  worst_ratio=worst)


VERIFY_CHECKS = {
    "mass": _check_mass,
    "concentration": _check_concentration,
    "boundary": _check_boundary,
    "semigroup": _check_semigroup,
    "smoothing": _check_smoothing,
    "derivative_transfer": _check_transfer,
}


def cmd_verify(config: RunConfig) -> tuple[Path, bool]:
    """Run the linear property suite and write ``verify_report.json``.

    A check whose times the grid cannot resolve is reported as failed with
    the reason; quadrature failures propagate.
    """
    quad, grid = config.quad, config.grid
    checks = []
    for name, fn in VERIFY_CHECKS.items():
        try:
            checks.append(fn(config, quad, grid))
        except TimeBelowMinimum as exc:
            checks.append(_check(name, False, reason=str(exc)))
    passed = all(c["passed"] for c in checks)
    out = Path(config.outputDir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "verify_report.json"
    write_json(path, {"passed": passed, "grid": {"L": grid.length, "N": grid.points},
                      "checks": checks})
    return path, passed


def _support_inside(a: Profile) -> bool:
    """Whether ``|a|`` has dropped below ``SUPPORT_FRACTION`` of its peak before ``L``."""
    peak = a.sup()
    return peak == 0 or abs(a.values[-1]) < SUPPORT_FRACTION * peak


def cmd_evolve(config: RunConfig, t_end: float | None = None, solver: SolverConfig | None = None,
               stem: str = "profiles") -> dict:
    """Evolve the configured datum and write snapshot CSVs, ``summary.json`` and an SVG."""
    t_end = config.tEnd if t_end is None else t_end
    a0 = config.datum_profile()
    solver = solver or config.solver()
    trace = evolve(a0, t_end, solver)
    out = Path(config.outputDir)
    out.mkdir(parents=True, exist_ok=True)
    snaps, curves = [], []
    for idx, level in zip(trace.snapshots, trace.snapshot_levels):
        a = trace.profiles[idx]
        name = f"snapshot_{level:02d}.csv"
        write_profile_csv(out / name, a)
        rep = trace.reports[idx]
        snaps.append({"level": level, "index": idx, "t": float(trace.times[idx]), "sup": a.sup(),
                      "F": rep.F, "E": rep.E, "file": name})
        curves.append((f"t={trace.times[idx]:.5g}", a.grid.nodes, a.values))
    final = trace.final
    write_profile_csv(out / "final.csv", final)
    r0 = trace.reports[0]
    summary = {
        "termination": trace.termination.value,
        "t_final": float(trace.times[-1]),
        "steps": len(trace.steps),
        "grid": {"L": a0.grid.length, "N": a0.grid.points},
        "sup0": a0.sup(),
        "blowup_threshold": _json_safe(solver.threshold_for(a0)),
        "beta": solver.beta,
        "E0": r0.E,
        "F0": r0.F,
        "G0": r0.G,
        "riccati_bound": r0.riccati_bound,
        "times": trace.times.tolist(),
        "sup": trace.sups.tolist(),
        "F": trace.series("F").tolist(),
        "E": trace.series("E").tolist(),
        "G": [r.G for r in trace.reports],
        "dissipation": trace.series("dissipation").tolist(),
        "snapshots": snaps,
        "final": {"t": float(trace.times[-1]), "F": trace.reports[-1].F, "E": trace.reports[-1].E,
                  "file": "final.csv"},
        "support_inside": bool(all(_support_inside(trace.profiles[i]) for i in trace.snapshots)
        and _support_inside(final)),
    }
    write_json(out / "summary.json", summary)
    caption = (f"E(a0) = {r0.E:.6g}; termination {trace.termination.value} at t = {trace.times[-1]:.6g}; "
               f"snapshots at sup = {solver.snapshot_factor:g}^n x {a0.sup():.6g}")
    if not curves:
        curves = [("t=0", a0.grid.nodes, a0.values)]
    (out / f"{stem}.svg").write_text(render_svg(curves, "Snapshot profiles a(t_n, y)", caption))
    return summary


def cmd_figure1(config: RunConfig) -> tuple[dict, bool]:
    """Doubling-snapshot run of the bump until its sup norm has grown by 2^4."""
    a0 = config.datum_profile()
    threshold = config.blowupThreshold
    if threshold is None:
        threshold = FIGURE_BLOWUP_FACTOR * a0.sup() if a0.sup() > 0 else None
    solver = config.solver(snapshot_factor=2.0, blowup_threshold=threshold)
    summary = cmd_evolve(config, t_end=config.tEnd, solver=solver, stem="figure1")
    levels = [s["level"] for s in summary["snapshots"] if s["level"] > 0]
    checks = {
        "blowup_detected": summary["termination"] == Termination.BLOWUP_DETECTED.value,
        "doubling_snapshots": len(levels) >= 4,
        "support_inside": summary["support_inside"],
        "within_riccati_bound": summary["riccati_bound"] is not None
        and summary["t_final"] <= summary["riccati_bound"],
    }
    summary["figure_checks"] = checks
    write_json(Path(config.outputDir) / "summary.json", summary)
    return summary, all(checks.values())


# ------------------------------------------------------------------------ main

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prandtl4", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--output", help="output directory (overrides outputDir)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    kt = sub.add_parser("kernel-table", help="tabulate kernel values and row L1 norms")
    kt.add_argument("--t", type=float, nargs="+", dest="t_list")
    kt.add_argument("--x", type=float, nargs="+", dest="x_list")
    kt.add_argument("--m", type=int)
    kt.add_argument("--kind", choices=[k.value for k in KernelKind])
    sub.add_parser("verify", help="run the linear property suite")
    ev = sub.add_parser("evolve", help="evolve the configured datum")
    ev.add_argument("--t-end", type=float)
    sub.add_parser("figure1", help="doubling-snapshot blow-up figure for the bump datum")
    return p


def _limit_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(int(n))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.output:
            config.outputDir = args.output
        limiter = _limit_threads()
        try:
            if args.command == "kernel-table":
                path = cmd_kernel_table(config, args.t_list, args.x_list, args.m, args.kind)
                print(path)
                return EXIT_OK
            if args.command == "verify":
                path, passed = cmd_verify(config)
                print(f"{path}: {'all properties pass' if passed else 'property failure'}")
                return EXIT_OK if passed else EXIT_PROPERTY
            if args.command == "evolve":
                summary = cmd_evolve(config, args.t_end)
                print(f"{summary['termination']} at t={summary['t_final']:.6g} "
                      f"({len(summary['snapshots'])} snapshots)")
                return EXIT_OK
            summary, passed = cmd_figure1(config)
            print(f"{summary['termination']} at t={summary['t_final']:.6g}; E(a0)={summary['E0']:.6g}; "
                  f"checks {summary['figure_checks']}")
            return EXIT_OK if passed else EXIT_PROPERTY
        finally:
            if limiter is not None:
                limiter.restore_original_limits()
    except CompatibilityViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPATIBILITY
    except (QuadratureNotConverged, TailNotNegligible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except (TimeBelowMinimum, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())
