"""Command-line entry point.

Subcommands::

    ph          point clouds -> persistence diagrams
    dist        d_FIM between two diagram files
    gram        Gram matrix over a manifest of diagrams
    gen-orbits  linked twist map orbits plus a labels manifest
    svm-cv      repeated stratified splits with inner cross-validation
    kfdr        change-point scores along an ordered manifest
    bench       exact vs fast Gauss transform timings

Every file output ``X`` gets a sidecar ``X.json`` with the parameters, seed
and the argv that reproduces it. Validation failures exit with status 1 and
a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import ORBIT_R_VALUES, orbit_dataset
from .diagram import EssentialPolicy, PersistenceDiagram, read_diagram, write_diagram
from .evaluate import C_GRID, SIGMA_GRID, T_QUANTILES, build_candidates, repeated_evaluation, stratified_splits
from .homology import load_point_cloud, rips_persistence, save_point_cloud
from .kernels import PSS, PWG, SW, gram, params_dict, quantile_t
from .learn import KfdrConfig, kfdr_argmax, kfdr_scan
from .measure import SmoothingParams
from .metric import fim, fim_matrix

log = logging.getLogger("pfkernel")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


# -- io helpers ---------------------------------------------------------------

def _fmt(x: float) -> str:
    return "%.17g" % x


def write_csv_matrix(path: Path, M: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in np.atleast_2d(M):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_sidecar(path: Path, argv, command: str, params: dict) -> Path:
    side = Path(str(path) + ".json")
    meta = {"command": command, "version": __version__, "argv": list(argv), "params": params}
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side


def read_manifest(path) -> list[tuple[Path, str | None]]:
    """Lines ``path [label]``; relative paths resolve against the manifest."""
    path = Path(path)
    if not path.is_file():
        raise CliError(f"manifest not found: {path}")
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) > 2:
            raise CliError(f"{path}:{lineno}: expected 'path [label]'")
        p = Path(parts[0])
        if not p.is_absolute():
            p = path.parent / p
        if not p.is_file():
            raise CliError(f"{path}:{lineno}: file not found: {p}")
        out.append((p, parts[1] if len(parts) == 2 else None))
    if not out:
        raise CliError(f"manifest {path} lists no files")
    return out


def _load_diagrams(manifest, policy):
    entries = read_manifest(manifest)
    dgs = [read_diagram(p, policy) for p, _ in entries]
    for (p, _), d in zip(entries, dgs):
        if not d.is_finite():
            raise CliError(f"{p}: diagram has essential points; pass --essential drop or cap:<v>")
    return entries, dgs


def _labels(entries) -> np.ndarray:
    if any(lab is None for _, lab in entries):
        raise CliError("every manifest line needs a label")
    raw = [lab for _, lab in entries]
    try:
        return np.array([int(x) for x in raw])
    except ValueError:
        return np.array(raw)


def _smoothing(args) -> SmoothingParams:
    if args.sigma is None:
        raise CliError("--sigma is required")
    accel = "fgt" if args.accel == "fgt" else "exact"
    return SmoothingParams(args.sigma, accel, args.fgt_eps)


def _pf_t(args, dist: np.ndarray) -> tuple[float, dict]:
    if args.t is not None:
        return args.t, {"t": args.t}
    s = args.t_quantile if args.t_quantile is not None else 50.0
    t = quantile_t(dist[np.triu_indices(len(dist), 1)], s)
    return t, {"t": t, "t_quantile": s}


def _kernel_params(args):
    if args.kernel == "pss":
        return PSS(args.sigma)
    if args.kernel == "pwg":
        return PWG(C=args.pwg_c, q=args.pwg_q, sigma=args.sigma, tau=args.tau)
    if args.kernel == "sw":
        return SW(args.directions, args.sigma)
    raise CliError(f"unknown kernel {args.kernel}")


def _gram_matrix(args, dgs) -> tuple[np.ndarray, dict]:
    if args.sigma is None:
        raise CliError("--sigma is required")
    if args.kernel == "pf":
        sp = _smoothing(args)
        D = fim_matrix(dgs, sp)
        t, tinfo = _pf_t(args, D)
        return np.exp(-t * D), {"kernel": "pf", **sp.to_dict(), **tinfo}
    kp = _kernel_params(args)
    return gram(dgs, kp).values, params_dict(kp)


# -- subcommands --------------------------------------------------------------

def cmd_ph(args, argv):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.manifest:
        entries = read_manifest(args.manifest)
    else:
        entries = [(Path(p), None) for p in args.clouds]
        for p, _ in entries:
            if not p.is_file():
                raise CliError(f"file not found: {p}")
    if not entries:
        raise CliError("no point clouds given")
    policy = EssentialPolicy.parse(args.essential)
    lines = []
    for p, lab in entries:
        dg = rips_persistence(load_point_cloud(p), max_dim=args.dim, max_scale=args.max_scale)[args.dim]
        dg = dg.resolve_essential(policy)
        target = out / (p.stem + ".dgm")
        write_diagram(target, dg)
        lines.append(target.name if lab is None else f"{target.name} {lab}")
    manifest = out / "diagrams.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_sidecar(manifest, argv, "ph", {"dim": args.dim, "max_scale": args.max_scale,
                                         "essential": args.essential, "inputs": [str(p) for p, _ in entries]})
    print(manifest)


def cmd_dist(args, argv):
    policy = EssentialPolicy.parse(args.essential)
    a, b = read_diagram(args.a, policy), read_diagram(args.b, policy)
    res = fim(a, b, _smoothing(args))
    print(_fmt(res.value))
    if args.out:
        Path(args.out).write_text(_fmt(res.value) + "\n", encoding="utf-8")
        write_sidecar(Path(args.out), argv, "dist", {**_smoothing(args).to_dict(), "a": args.a, "b": args.b,
                                                    "support_size": res.support_size, "accel_used": res.accel_used})


def cmd_gram(args, argv):
    entries, dgs = _load_diagrams(args.manifest, EssentialPolicy.parse(args.essential))
    K, params = _gram_matrix(args, dgs)
    out = Path(args.out)
    write_csv_matrix(out, K)
    write_sidecar(out, argv, "gram", {**params, "diagram_ids": [str(p) for p, _ in entries]})
    print(out)


def cmd_gen_orbits(args, argv):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rs = tuple(args.r) if args.r else ORBIT_R_VALUES
    data = orbit_dataset(rs, args.per_class, args.points, args.seed)
    lines = []
    for k, (cloud, label) in enumerate(data):
        name = f"orbit_{k:05d}.txt"
        save_point_cloud(out / name, cloud)
        lines.append(f"{name} {label}")
    manifest = out / "labels.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_sidecar(manifest, argv, "gen-orbits", {"r_values": list(rs), "per_class": args.per_class,
                                                 "points": args.points, "seed": args.seed,
                                                 "orbit_seeds": f"seed + index, index 0..{len(data) - 1}"})
    print(manifest)


def _grid(values, default):
    return tuple(values) if values else default


def cmd_svm_cv(args, argv):
    entries, dgs = _load_diagrams(args.manifest, EssentialPolicy.parse(args.essential))
    y = _labels(entries)
    if len(np.unique(y)) < 2:
        raise CliError("need at least two classes")
    sigmas = _grid([args.sigma] if args.sigma else args.sigma_grid, SIGMA_GRID)
    ts = [args.t] if args.t is not None else None
    quantiles = _grid([args.t_quantile] if args.t_quantile is not None else args.t_quantile_grid, T_QUANTILES)
    C_grid = _grid(args.C, C_GRID)
    cands = build_candidates(dgs, args.kernel, sigmas=sigmas, quantiles=quantiles, ts=ts,
                             bandwidths=_grid(args.bandwidth, SIGMA_GRID), taus=(args.tau,),
                             sw_directions=args.directions, accel=args.accel, epsilon=args.fgt_eps)
    splits = stratified_splits(y, args.repeats, args.test_size, args.seed)
    report = repeated_evaluation(cands, y, splits, C_grid, args.folds, args.seed)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("repeat,accuracy,selected\n")
        for r, (acc, sel) in enumerate(zip(report.accuracies, report.selected)):
            fh.write(f"{r},{_fmt(acc)},\"{json.dumps(sel, sort_keys=True).replace(chr(34), chr(39))}\"\n")
    write_sidecar(out, argv, "svm-cv", {
        "kernel": args.kernel, "sigma_grid": list(sigmas), "t": args.t, "t_quantile_grid": list(quantiles),
        "C_grid": list(C_grid), "folds": args.folds, "repeats": args.repeats, "test_size": args.test_size,
        "seed": args.seed, "split_seeds": [args.seed + r for r in range(args.repeats)],
        "accel": args.accel, "epsilon": args.fgt_eps,
        "mean": report.mean, "std": report.std})
    print(f"accuracy {report.summary()}")


def cmd_kfdr(args, argv):
    entries, dgs = _load_diagrams(args.manifest, EssentialPolicy.parse(args.essential))
    K, params = _gram_matrix(args, dgs)
    scores = kfdr_scan(K, KfdrConfig(args.gamma))
    best = kfdr_argmax(scores)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,score\n")
        for tau, s in scores:
            fh.write(f"{tau},{_fmt(s)}\n")
    write_sidecar(out, argv, "kfdr", {**params, "gamma": args.gamma, "argmax": best,
                                      "diagram_ids": [str(p) for p, _ in entries]})
    print(best)


def _synthetic_diagram(n: int, rng) -> PersistenceDiagram:
    b = rng.random(n)
    return PersistenceDiagram(np.column_stack([b, b + 0.5 * rng.random(n)]))


def cmd_bench(args, argv):
    if args.sigma is None:
        raise CliError("--sigma is required")
    rng = np.random.default_rng(args.seed)
    rows = []
    for n in args.sizes:
        a, b = _synthetic_diagram(n, rng), _synthetic_diagram(n, rng)
        t0 = time.perf_counter()
        d_exact = fim(a, b, SmoothingParams(args.sigma)).value
        t_exact = time.perf_counter() - t0
        t0 = time.perf_counter()
        res = fim(a, b, SmoothingParams(args.sigma, "fgt", args.fgt_eps))
        t_fgt = time.perf_counter() - t0
        rows.append((n, t_exact, t_fgt, abs(d_exact - res.value), res.accel_used))
    print(f"{'points':>8} {'exact [s]':>10} {'fgt [s]':>10} {'|diff|':>10} accel")
    for n, te, tf, diff, acc in rows:
        print(f"{n:>8} {te:>10.3f} {tf:>10.3f} {diff:>10.2e} {acc}")
    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("points,exact_seconds,fgt_seconds,abs_diff,accel_used\n")
            for n, te, tf, diff, acc in rows:
                fh.write(f"{n},{_fmt(te)},{_fmt(tf)},{_fmt(diff)},{int(acc)}\n")
        write_sidecar(out, argv, "bench", {"sizes": list(args.sizes), "sigma": args.sigma,
                                           "epsilon": args.fgt_eps, "seed": args.seed})


# -- parser -------------------------------------------------------------------

def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
    return v


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
    return v


def _add_smoothing(p, sigma_required=False):
    p.add_argument("--sigma", type=_positive_float, required=sigma_required, help="smoothing bandwidth")
    p.add_argument("--accel", choices=["exact", "fgt"], default="exact")
    p.add_argument("--fgt-eps", type=float, default=1e-6, help="relative FGT tolerance (default 1e-6)")
    p.add_argument("--essential", default="drop", help="drop | cap:<value> | keep (default drop)")


def _add_kernel(p, extra=()):
    p.add_argument("--kernel", choices=["pf", "pss", "pwg", "sw", *extra], default="pf")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=_positive_float, help="fixed PF scale t")
    g.add_argument("--t-quantile", type=_positive_float, help="t = 1 / s%% quantile of pairwise d_FIM")
    p.add_argument("--tau", type=_positive_float, default=1.0, help="pwg outer bandwidth")
    p.add_argument("--pwg-c", type=_positive_float, default=1.0)
    p.add_argument("--pwg-q", type=_positive_float, default=1.0)
    p.add_argument("--directions", type=_positive_int, default=10, help="sw directions M")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pfkernel", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ph", help="persistence diagrams of point clouds")
    p.add_argument("clouds", nargs="*")
    p.add_argument("--manifest", help="file with 'cloud [label]' lines")
    p.add_argument("--dim", type=int, choices=[0, 1], default=1)
    p.add_argument("--max-scale", type=_positive_float, default=math.inf)
    p.add_argument("--essential", default="keep", help="drop | cap:<value> | keep (default keep)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ph)

    p = sub.add_parser("dist", help="d_FIM between two diagram files")
    p.add_argument("a")
    p.add_argument("b")
    _add_smoothing(p, sigma_required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("gram", help="Gram matrix over a diagram manifest")
    p.add_argument("manifest")
    _add_smoothing(p)
    _add_kernel(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("gen-orbits", help="linked twist map orbits")
    p.add_argument("--r", type=float, nargs="+", help=f"parameters (default {' '.join(map(str, ORBIT_R_VALUES))})")
    p.add_argument("--per-class", type=_positive_int, default=50)
    p.add_argument("--points", type=_positive_int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_orbits)

    p = sub.add_parser("svm-cv", help="repeated stratified SVM evaluation")
    p.add_argument("manifest", help="file with 'diagram label' lines")
    _add_smoothing(p)
    _add_kernel(p, extra=("prob",))
    p.add_argument("--sigma-grid", type=_positive_float, nargs="+")
    p.add_argument("--t-quantile-grid", type=_positive_float, nargs="+")
    p.add_argument("--bandwidth", type=_positive_float, nargs="+", help="prob baseline bandwidths")
    p.add_argument("--C", type=_positive_float, nargs="+")
    p.add_argument("--folds", type=_positive_int, default=3, help="inner CV folds")
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--test-size", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_svm_cv)

    p = sub.add_parser("kfdr", help="KFDR change-point scan")
    p.add_argument("manifest", help="ordered diagram manifest")
    _add_smoothing(p)
    _add_kernel(p)
    p.add_argument("--gamma", type=_positive_float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kfdr)

    p = sub.add_parser("bench", help="exact vs FGT d_FIM timings")
    p.add_argument("--sizes", type=_positive_int, nargs="+", default=[500, 1000, 2000, 5000])
    p.add_argument("--sigma", type=_positive_float, default=1.0)
    p.add_argument("--fgt-eps", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "kernel", None) == "pf" and args.command in ("gram", "kfdr") and args.sigma is None:
            raise CliError("--sigma is required for the pf kernel")
        args.func(args, argv)
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except (CliError, ValueError, OSError, ArithmeticError) as exc:
        msg = json.dumps({"error": type(exc).__name__, "message": str(exc).replace("\n", " ")})
        print(msg, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
