"""Command line entry point: ``orbitrace {quilt,flatspec,trace,geodesics}``.

Every subcommand writes its artifacts under ``--out`` (when given), prints a
short report, and exits 0 iff all requested checks pass.  Failures print a
JSON object ``{"error": ..., "message": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import flatspec, fuchsgeo, permquilt, selberg
from .errors import OrbitraceError, ParseError

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3, 4

# Edge-geodesic totals (recto, verso) expected for the (6,3,4) pair glued by
# the size-7 quilt seed.
PAIR_TOTALS = {
    "2c": (Fraction(3, 2), Fraction(3, 2)),
    "2a+2b": (Fraction(3, 2), Fraction(3, 2)),
    "4c": (Fraction(7, 4), Fraction(3, 4)),
    "4a+4b": (Fraction(7, 4), Fraction(3, 4)),
}


def fmt(x) -> str:
    """Rationals as ``p/q``, reals at 12 significant digits."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _write(out: Path | None, name: str, text: str) -> None:
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _positive(kind):
    def conv(text):
        v = kind(float(text)) if kind is int else kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v
    return conv


# ---------------------------------------------------------------------------
# quilt


def quilt_cmd(args) -> int:
    if args.action == "enumerate":
        treelike = {"auto": None, "yes": True, "no": False}[args.treelike]
        quilts = permquilt.enumerate_pairs(args.n, treelike=treelike)
        _write(args.out, "quilts.json", permquilt.quilts_to_json(quilts))
        for q in quilts:
            for key, pair in q.nodes.items():
                label = q.label(key).replace("(", "_").replace(")", "")
                _write(args.out, f"{label}.pair", permquilt.format_pair(pair))
                _write(args.out, f"{label}.svg", permquilt.emit_diagram(pair))
        print(f"n={args.n} quilts={len(quilts)} pairs={sum(len(q) for q in quilts)}")
        for q in quilts:
            print(f"quilt {q.name}: pairs={len(q)} group_order={q.group_order}")
        return EXIT_OK
    pair = permquilt.read_pair(args.pair)
    transplantable = permquilt.is_transplantable(pair)
    isomorphic = permquilt.is_permutation_isomorphic(pair)
    print(f"transplantable={transplantable} permutation_isomorphic={isomorphic}")
    T = permquilt.transplantation_matrix(pair)
    if T is not None:
        print("transplantation matrix:")
        for row in T:
            print(" ".join(fmt(v) for v in row))
    _write(args.out, "pair.svg", permquilt.emit_diagram(pair))
    return EXIT_OK if transplantable and not isomorphic else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# flatspec


def _space(name: str) -> flatspec.WallpaperQuotient:
    spaces = flatspec.standard_quotients()
    if name not in spaces:
        raise ParseError(f"unknown space {name!r}; choose from {', '.join(spaces)}")
    return spaces[name]


def flatspec_cmd(args) -> int:
    if args.action == "spectrum":
        spec = flatspec.quotient_spectrum(_space(args.space), args.lmax)
        if args.out is not None:
            _write(args.out, f"{args.space}.spec", flatspec.format_spectrum(spec))
        print(f"space={args.space} lmax={fmt(args.lmax)} eigenvalues={spec.total} "
              f"distinct={len(spec.values)}")
        return EXIT_OK
    if args.action == "verify":
        report = flatspec.verify_relation(*flatspec.parse_relation(args.relation), args.lmax)
        print(f"{args.relation}: {report}")
        _write(args.out, "relation.txt", f"{args.relation}: {report}\n")
        return EXIT_OK if report.equal else EXIT_CHECK_FAILED
    orders = flatspec.parse_signature(args.signature)
    print(f"{args.signature}: {fmt(flatspec.feature_total(orders))}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# trace


def _flat_features(name: str, qt: flatspec.WallpaperQuotient, character: str):
    """Feature set of a catalog quotient (cone points only, or the *333 mirror triangle)."""
    if name.startswith("star333"):
        side = math.sqrt(4 * qt.area / math.sqrt(3))
        return selberg.OrbifoldFeatureSet.from_signature(
            qt.area, 3 * side, corners=[3, 3, 3], geometry=selberg.Geometry.FLAT,
            character=character,
        )
    if name in flatspec.SIGNATURES:
        return selberg.OrbifoldFeatureSet.from_signature(
            qt.area, 0.0, cones=flatspec.SIGNATURES[name], geometry=selberg.Geometry.FLAT,
        )
    return None


def trace_cmd(args) -> int:
    geom = selberg.Geometry(args.geometry)
    features = None
    if args.spectrum is not None:
        spec = flatspec.read_spectrum(args.spectrum)
    else:
        name = args.space + ("-dirichlet" if args.dirichlet else "")
        qt = _space(name)
        spec = flatspec.quotient_spectrum(qt, args.lmax)
        features = _flat_features(name, qt, "det" if args.dirichlet else "trivial")
    kmax = math.sqrt(spec.cutoff)
    grid = np.arange(0.0, args.smax + args.ds / 2, args.ds)
    win = selberg.Window(args.window, kmax) if args.window == "quadratic" else selberg.Window("none")
    recon = selberg.reconstruct_trace(spec, grid, win, geom)
    curves = {"reconstructed": recon}
    report: dict = {"eigenvalues": int(spec.total), "kmax": fmt(kmax)}
    breaks = selberg.detect_breaks(recon)
    report["breaks"] = [{"s": fmt(b.s), "kind": b.kind, "bend": b.bend_direction} for b in breaks]
    # smooth range: past the ringing of the jump at 0, below the first later feature
    first = min([b.s for b in breaks if b.s > 0.05] or [args.smax])
    fit = (0.05, 0.9 * first)
    if features is not None:
        assembled = selberg.assemble_trace(features, grid)
        curves["features"] = assembled
        curves["residual"] = recon - assembled
        low = (grid >= fit[0]) & (grid <= fit[1])
        report["residual_max_smooth_range"] = fmt(np.max(np.abs(curves["residual"].values[low])))
    try:
        ro = selberg.readoff_features(recon, geom, s_range=fit)
        # the windowed curve rings just after s = 0, so C(0+) is the fitted intercept
        report["C(0+)"] = fmt(ro.volume)
        report["readoff"] = {"volume": fmt(ro.volume), "mirror_length": fmt(ro.mirror_length),
                             "cone_weight": fmt(ro.cone_weight),
                             "conepoints": {str(k): fmt(v) for k, v in ro.conepoints.items()}}
    except OrbitraceError as exc:
        report["readoff"] = {"error": str(exc)}
    if geom is selberg.Geometry.FLAT and args.heat_t is not None:
        t = args.heat_t
        if args.smax >= 12 * math.sqrt(t):
            report["heat"] = {"t": fmt(t),
                              "spectral": fmt(flatspec.heat_trace_spectral(spec, t)),
                              "from_curve": fmt(selberg.heat_trace_from_counting(recon, t))}
    _write(args.out, "trace.csv", selberg.curves_to_csv(curves))
    _write(args.out, "trace.svg", selberg.plot_curves_svg(curves, title="counting trace"))
    _write(args.out, "report.json", json.dumps(report, indent=2) + "\n")
    print(json.dumps(report, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# geodesics


def geodesics_cmd(args) -> int:
    if args.pattern is None:
        T, left, right = fuchsgeo.isospectral_triangle_pair()
        check = True
    else:
        pair = permquilt.read_pair(args.pattern)
        T = fuchsgeo.triangle_group(*args.orders)
        left = fuchsgeo.glue_subgroup(T, pair.left)
        right = fuchsgeo.glue_subgroup(T, pair.right)
        check = False
    rows = fuchsgeo.edge_length_rows(T, deep=args.deep)
    ok = True
    lmax = args.lmax if args.lmax is not None else rows["4c"] + 1e-6
    trace_curves = {}
    for side, S in (("left", left), ("right", right)):
        sig = fuchsgeo.orbifold_signature(S)
        table = fuchsgeo.edge_geodesic_table(S, rows)
        text = fuchsgeo.format_edge_table(f"{side} {sig.conway_symbol()}", table)
        print(text)
        _write(args.out, f"table_{side}.txt", text)
        census = fuchsgeo.geodesic_census(S, lmax)
        _write(args.out, f"census_{side}.csv", fuchsgeo.census_to_csv(census))
        if check:
            for r in table:
                want = PAIR_TOTALS[r.label]
                got = (r.total("recto"), r.total("verso"))
                if got != want:
                    ok = False
                    print(f"MISMATCH {side} {r.label}: got {got[0]}, {got[1]}; "
                          f"expected {want[0]}, {want[1]}")
        if args.montecarlo:
            grid = np.linspace(0.0, args.mc_smax, 201)[1:]
            mc = fuchsgeo.monte_carlo_trace(S, grid, args.samples, args.seed)
            feats = dataclasses.replace(
                sig.features(), geodesics=fuchsgeo.geodesic_census(S, grid[-1] + 1e-6))
            asm = selberg.assemble_trace(feats, grid)
            # near s = 0 only a few samples see any element besides the
            # identity, so their standard error is unreliable
            tested = grid >= args.mc_smin
            dev = np.abs(mc.values - asm.values) / np.maximum(mc.band, 1e-12)
            z = float(np.max(dev[tested])) if tested.any() else 0.0
            print(f"{side} Monte Carlo vs census: max |z| = {z:.3g} over {int(tested.sum())} points "
                  f"with s >= {fmt(args.mc_smin)}")
            ok &= z < args.sigmas
            trace_curves[f"{side}_montecarlo"] = mc
            trace_curves[f"{side}_stderr"] = selberg.TraceCurve(grid, mc.band)
            trace_curves[f"{side}_census"] = asm
    if trace_curves:
        _write(args.out, "montecarlo.csv", selberg.curves_to_csv(trace_curves))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbitrace", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="JSON file of option defaults (flags override)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", type=Path, help="output directory")

    q = sub.add_parser("quilt", help="transplantable pairs and quilts")
    qs = q.add_subparsers(dest="action", required=True)
    qe = qs.add_parser("enumerate", help="all quilts on n sheets")
    qe.add_argument("--n", type=_positive(int), required=True)
    qe.add_argument("--treelike", choices=["auto", "yes", "no"], default="auto")
    common(qe)
    qc = qs.add_parser("check", help="test a pair file")
    qc.add_argument("--pair", type=Path, required=True)
    common(qc)

    f = sub.add_parser("flatspec", help="flat orbifold spectra")
    fs = f.add_subparsers(dest="action", required=True)
    fsp = fs.add_parser("spectrum", help="write a quotient spectrum")
    fsp.add_argument("--space", required=True)
    fsp.add_argument("--lmax", type=_positive(float), default=2000.0)
    common(fsp)
    fv = fs.add_parser("verify", help="test a spectral relation such as H2+H6=2H3")
    fv.add_argument("--relation", required=True)
    fv.add_argument("--lmax", type=_positive(float), default=2000.0)
    common(fv)
    fw = fs.add_parser("weight", help="total conepoint weight of a signature such as 236")
    fw.add_argument("--signature", required=True)

    t = sub.add_parser("trace", help="counting trace from a spectrum")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--space")
    src.add_argument("--spectrum", type=Path, help="spectrum file")
    t.add_argument("--dirichlet", action="store_true", help="det character (Dirichlet spectrum)")
    t.add_argument("--lmax", type=_positive(float), default=1e6)
    t.add_argument("--smax", type=_positive(float), default=2.5)
    t.add_argument("--ds", type=_positive(float), default=0.005)
    t.add_argument("--window", choices=["quadratic", "none"], default="quadratic")
    t.add_argument("--geometry", choices=["flat", "hyperbolic"], default="flat")
    t.add_argument("--heat-t", type=_positive(float), default=0.01)
    common(t)

    g = sub.add_parser("geodesics", help="geodesic census of a glued triangle pair")
    g.add_argument("--pattern", type=Path, help="pair file (default: the (6,3,4) seven-sheet pair)")
    g.add_argument("--orders", type=lambda s: tuple(int(x) for x in s.split(",")),
                   default=(6, 3, 4), help="triangle angle orders p,q,r")
    g.add_argument("--lmax", type=_positive(float), help="census length cap for the CSV (default 4c)")
    g.add_argument("--deep", action="store_true", help="include the 4a+4b row")
    g.add_argument("--montecarlo", action="store_true")
    g.add_argument("--samples", type=_positive(int), default=2000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mc-smax", type=_positive(float), default=4.0)
    g.add_argument("--mc-smin", type=float, default=0.25, help="smallest s entering the z-test")
    g.add_argument("--sigmas", type=_positive(float), default=4.0)
    common(g)
    return p


PATH_OPTIONS = {"out", "pair", "spectrum", "pattern"}


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        defaults = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config {args.config}: {exc}") from exc
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for k, v in defaults.items():
        if k not in explicit and hasattr(args, k):
            setattr(args, k, Path(v) if k in PATH_OPTIONS else v)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        handler = {"quilt": quilt_cmd, "flatspec": flatspec_cmd, "trace": trace_cmd,
                   "geodesics": geodesics_cmd}[args.command]
        return handler(args)
    except (ParseError, FileNotFoundError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    except (OrbitraceError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
