"""Command-line front end: simulation runs, exact moment tables, CF grids and
empirical-vs-analytic comparison reports, all as plot-ready CSV/JSON.

Every command writes a run manifest next to its outputs (config echo, seed,
code version, timestamps, content digests). Payload files themselves carry no
timestamps, so rerunning a command with the same flags and seed reproduces
them byte for byte. JSON is the canonical format; CSV cells use Python's
shortest round-trip float representation.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .charfn import (
    CFGrid,
    DEFAULT_CAP,
    ResourceLimitError,
    distance_cf,
    distance_cf_limit,
    distance_pdf,
    distances_joint_cf,
    distances_joint_cf_limit,
    laplace_pdf,
    particle_cf,
    particle_cf_limit,
)
from .empirical import EmpiricalSummary, summarize
from .moments import build_phi_table
from .offsets import from_name
from .simulator import SimConfig, run

OUT_DIR_ENV = "TURNOVER_OUT_DIR"

CF_MODES = (
    "psiN",
    "psiNk",
    "psiInfK",
    "phiN",
    "gammaN",
    "laplaceCF",
    "laplacePdf",
    "muNpdf",
)

DEFAULT_MOMENT_TOL = {2: 0.05, 4: 0.10, 6: 0.25, 8: 0.60}
ORDER_LIMIT = 60


class CliError(Exception):
    """Validation failure that should exit with status 2."""


def _resolve(path: str) -> str:
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _fmt(x) -> str:
    return repr(float(x))


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(
    path: str,
    command: str,
    argv: list[str],
    config: dict,
    seed: int | None,
    started: str,
    outputs: list[str],
) -> None:
    _write_json(
        path,
        {
            "schema_version": 1,
            "command": command,
            "argv": argv,
            "config": config,
            "seed": seed,
            "code_version": __version__,
            "started_utc": started,
            "finished_utc": _utcnow(),
            "outputs": [
                {
                    "path": os.path.basename(p),
                    "sha256": _sha256(p),
                    "bytes": os.path.getsize(p),
                }
                for p in outputs
            ],
        },
    )


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"grid must be 'start:stop:count', got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(f"bad grid {text!r}: {exc}") from None
    if count < 1 or stop < start:
        raise CliError(f"bad grid {text!r}: need stop >= start and count >= 1")
    return np.linspace(start, stop, count)


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise CliError(f"bad float list {text!r}: {exc}") from None


def _parse_tols(text: str) -> dict[int, float]:
    tols = dict(DEFAULT_MOMENT_TOL)
    if not text:
        return tols
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            order, tol = item.split(":")
            tols[int(order)] = float(tol)
        except ValueError as exc:
            raise CliError(f"bad tolerance item {item!r}: {exc}") from None
    return tols


# ---------------------------------------------------------------------- simulate


def cmd_simulate(args: argparse.Namespace, argv: list[str]) -> int:
    started = _utcnow()
    offsets = from_name(args.offset, args.sigma)
    thin = args.thin if args.thin is not None else args.particles
    config = SimConfig(
        n_particles=args.particles,
        offsets=offsets,
        steps=args.steps,
        burn_in=args.burn_in,
        seed=args.seed,
        thin=thin,
        init=args.init.replace("-", "_"),
        init_scale=args.init_scale,
    )
    trajectory = run(config)
    frames = trajectory.observable(args.observe)

    hist_range = None
    if args.observe == "raw":
        # the raw ensemble drifts, so a fixed +-6 sigma window is useless
        lo, hi = float(frames.min()), float(frames.max())
        pad = max(1e-12, 0.05 * (hi - lo))
        hist_range = (lo - pad, hi + pad)

    summary = summarize(
        frames,
        args.sigma,
        max_order=args.max_order,
        ecf_points=_parse_floats(args.ecf_s),
        bins=args.bins,
        hist_range=hist_range,
        bandwidth=args.kde_bandwidth,
        kde_points=args.kde_points,
        config={
            "observable": args.observe,
            "n_particles": args.particles,
            "sigma": args.sigma,
            "offset": offsets.kind,
            "steps": args.steps,
            "burn_in": config.resolved_burn_in,
            "seed": args.seed,
            "thin": thin,
            "init": config.init,
            "n_frames": trajectory.n_frames,
        },
    )

    out = _resolve(args.out)
    _write_json(out, summary.to_json_dict())
    outputs = [out]

    if args.trajectory_out:
        tpath = _resolve(args.trajectory_out)
        n = config.n_particles
        if args.trajectory_format == "wide":
            header = "step," + ",".join(f"x{i + 1}" for i in range(n))
            rows = (
                [int(t)] + [_fmt(v) for v in frame]
                for t, frame in zip(trajectory.times, trajectory.positions)
            )
        else:
            header = "step,particle,position"
            rows = (
                [int(t), p + 1, _fmt(trajectory.positions[f, p])]
                for f, t in enumerate(trajectory.times)
                for p in range(n)
            )
        _write_csv(tpath, header, rows)
        outputs.append(tpath)

    manifest = _resolve(args.manifest or args.out + ".manifest.json")
    _write_manifest(
        manifest, "simulate", argv, summary.config, args.seed, started, outputs
    )
    print(out)
    return 0


# ---------------------------------------------------------------------- moments


def cmd_moments(args: argparse.Namespace, argv: list[str]) -> int:
    started = _utcnow()
    if args.max_order < 2:
        raise CliError("--max-order must be >= 2")
    if args.max_order > args.order_limit:
        raise ResourceLimitError(
            f"--max-order {args.max_order} exceeds the feasibility guard "
            f"--order-limit {args.order_limit}"
        )
    table = build_phi_table(args.max_order)
    rows = []
    for order in range(1, args.max_order + 1):
        coeff = table.moment(order)
        rows.append(
            (
                order,
                coeff.numerator,
                coeff.denominator,
                coeff.evaluate(args.sigma),
            )
        )
    out = _resolve(args.out)
    if args.format == "csv":
        _write_csv(
            out,
            "order,num,den,approx",
            ([o, n, d, _fmt(v)] for o, n, d, v in rows),
        )
    else:
        _write_json(
            out,
            {
                "schema_version": 1,
                "sigma": args.sigma,
                "rows": [
                    {"order": o, "num": n, "den": d, "value": v}
                    for o, n, d, v in rows
                ],
            },
        )
    manifest = _resolve(args.manifest or args.out + ".manifest.json")
    _write_manifest(
        manifest,
        "moments",
        argv,
        {"max_order": args.max_order, "sigma": args.sigma, "format": args.format},
        None,
        started,
        [out],
    )
    print(out)
    return 0


# ---------------------------------------------------------------------- cf


def _eval_cf_points(
    mode: str,
    points: list[float],
    n: int | None,
    k: int | None,
    sigma: float,
    offset_kind: str,
    cap: int,
    eps: float,
) -> list[float]:
    offsets = from_name(offset_kind, sigma)
    if mode == "psiNk":
        return [
            distances_joint_cf((s,) * k, n, offsets, cap=cap) for s in points
        ]
    if mode == "psiInfK":
        return [
            distances_joint_cf_limit((s,) * k, sigma, cap=cap) for s in points
        ]
    if mode == "phiN":
        return [particle_cf(s, n, offsets, cap=cap) for s in points]
    if mode == "gammaN":
        return [particle_cf_limit(s, n, sigma, cap=cap) for s in points]
    raise ValueError(f"unknown recursive cf mode {mode!r}")


def cmd_cf(args: argparse.Namespace, argv: list[str]) -> int:
    started = _utcnow()
    mode = args.mode
    points = _parse_grid(args.grid)
    sigma = args.sigma
    needs_n = mode in ("psiN", "psiNk", "phiN", "gammaN", "muNpdf")
    if needs_n and args.n is None:
        raise CliError(f"--n is required for mode {mode}")
    needs_k = mode in ("psiNk", "psiInfK")
    if needs_k and args.k is None:
        raise CliError(f"--k is required for mode {mode}")
    offsets = from_name(args.offset, sigma)

    if mode == "psiN":
        values = distance_cf(points, args.n, offsets)
    elif mode == "laplaceCF":
        values = distance_cf_limit(points, sigma)
    elif mode == "laplacePdf":
        values = laplace_pdf(points, sigma)
    elif mode == "muNpdf":
        values = distance_pdf(points, args.n, sigma, args.eps)
    else:
        plist = [float(s) for s in points]
        if args.threads > 1:
            n_chunks = min(args.threads * 4, max(1, len(plist)))
            chunks = [list(c) for c in np.array_split(plist, n_chunks)]
            with concurrent.futures.ProcessPoolExecutor(args.threads) as pool:
                parts = pool.map(
                    _eval_cf_points,
                    [mode] * len(chunks),
                    chunks,
                    [args.n] * len(chunks),
                    [args.k] * len(chunks),
                    [sigma] * len(chunks),
                    [args.offset] * len(chunks),
                    [args.cap] * len(chunks),
                    [args.eps] * len(chunks),
                )
            values = np.array([v for part in parts for v in part])
        else:
            values = np.array(
                _eval_cf_points(
                    mode, plist, args.n, args.k, sigma, args.offset, args.cap, args.eps
                )
            )

    grid = CFGrid(
        mode=mode,
        n=args.n if needs_n else None,
        k=args.k if needs_k else None,
        sigma=sigma,
        points=points,
        values=np.asarray(values, dtype=float),
    )
    out = _resolve(args.out)
    if args.format == "json":
        _write_json(out, grid.to_json_dict())
    else:
        _write_csv(out, "s,value", ([_fmt(s), _fmt(v)] for s, v in grid.rows()))
    manifest = _resolve(args.manifest or args.out + ".manifest.json")
    _write_manifest(
        manifest,
        "cf",
        argv,
        {
            "mode": mode,
            "n": args.n,
            "k": args.k,
            "sigma": sigma,
            "offset": args.offset,
            "grid": args.grid,
            "eps": args.eps,
            "cap": args.cap,
        },
        None,
        started,
        [out],
    )
    print(out)
    return 0


# ---------------------------------------------------------------------- compare


def _laplace_moment(order: int, sigma: float) -> float:
    if order % 2:
        return 0.0
    b = sigma / math.sqrt(2.0)
    return math.factorial(order) * b**order


def cmd_compare(args: argparse.Namespace, argv: list[str]) -> int:
    started = _utcnow()
    with open(_resolve(args.summary), "r", encoding="utf-8") as fh:
        summary = EmpiricalSummary.from_json_dict(json.load(fh))
    cfg = summary.config
    if not cfg:
        raise CliError(f"summary {args.summary!r} carries no config block")
    if cfg.get("sigma") != args.sigma:
        raise CliError(
            f"sigma mismatch: summary has {cfg.get('sigma')!r}, flags say {args.sigma!r}"
        )
    if cfg.get("n_particles") != args.n:
        raise CliError(
            f"n mismatch: summary has {cfg.get('n_particles')!r}, flags say {args.n!r}"
        )
    if args.offset is not None and cfg.get("offset") != args.offset.replace("-", "_"):
        raise CliError(
            f"offset mismatch: summary has {cfg.get('offset')!r}, flags say {args.offset!r}"
        )
    observable = cfg.get("observable")
    if observable not in ("distances", "positions"):
        raise CliError(
            f"compare needs a distances or positions summary, got {observable!r}"
        )

    baseline = None
    if args.baseline:
        with open(_resolve(args.baseline), "r", encoding="utf-8") as fh:
            baseline = EmpiricalSummary.from_json_dict(json.load(fh))

    sigma = args.sigma
    n = args.n
    offsets = from_name(cfg.get("offset", "gaussian"), sigma)
    tols = _parse_tols(args.moment_tol)
    max_order = min(args.max_order, len(summary.raw_moments))

    exact_table = None
    if observable == "positions" and baseline is None:
        exact_table = build_phi_table(max_order)

    all_pass = True
    moment_rows = []
    for order in range(1, max_order + 1):
        emp = summary.raw_moments[order - 1]
        se = summary.moment_ses[order - 1]
        if baseline is not None:
            exact = baseline.raw_moments[order - 1]
        elif observable == "distances":
            exact = _laplace_moment(order, sigma)
        else:
            exact = exact_table.moment(order).evaluate(sigma)
        if exact != 0.0:
            rel = abs(emp - exact) / abs(exact)
            ok = rel <= tols.get(order, 0.60)
        else:
            rel = None
            # a zero reference is checked against the sampling error instead
            ok = math.isfinite(se) and abs(emp - exact) <= 4.0 * se
        all_pass = all_pass and ok
        moment_rows.append(
            {
                "order": order,
                "empirical": emp,
                "exact": exact,
                "relative_gap": rel,
                "se": None if not math.isfinite(se) else se,
                "pass": ok,
            }
        )

    cf_rows = []
    if observable == "distances":
        for (s, re, _im), se in zip(summary.ecf, summary.ecf_ses):
            if baseline is not None:
                match = [b for b in baseline.ecf if b[0] == s]
                analytic = match[0][1] if match else None
            else:
                analytic = float(distance_cf(s, n, offsets))
            if analytic is None:
                continue
            gap = abs(re - analytic)
            ok = math.isfinite(se) and gap <= 4.0 * se
            all_pass = all_pass and ok
            cf_rows.append(
                {
                    "s": s,
                    "empirical": re,
                    "analytic": analytic,
                    "gap": gap,
                    "se": None if not math.isfinite(se) else se,
                    "pass": ok,
                }
            )

    ks_block = None
    if observable == "distances":
        ok = summary.ks_laplace <= args.ks_threshold
        all_pass = all_pass and ok
        ks_block = {
            "stat": summary.ks_laplace,
            "threshold": args.ks_threshold,
            "pass": ok,
        }

    overlay = {
        "grid": summary.kde_grid.tolist(),
        "kde": summary.kde_values.tolist(),
        "laplace": laplace_pdf(summary.kde_grid, sigma).tolist()
        if observable == "distances"
        else None,
        "mixture": distance_pdf(summary.kde_grid, n, sigma, args.eps).tolist()
        if observable == "distances" and offsets.kind == "gaussian" and n > 2
        else None,
    }

    report = {
        "schema_version": 1,
        "observable": observable,
        "n": n,
        "sigma": sigma,
        "moments": moment_rows,
        "cf_gaps": cf_rows,
        "ks": ks_block,
        "density_overlay": overlay,
        "pass": all_pass,
    }
    out = _resolve(args.out)
    _write_json(out, report)
    manifest = _resolve(args.manifest or args.out + ".manifest.json")
    _write_manifest(
        manifest,
        "compare",
        argv,
        {
            "summary": args.summary,
            "baseline": args.baseline,
            "sigma": sigma,
            "n": n,
            "ks_threshold": args.ks_threshold,
        },
        None,
        started,
        [out],
    )
    print(out)
    return 0 if all_pass else 1


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turnover",
        description="Branching-turnover particle system: simulate, evaluate, compare.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the chain and summarise an observable")
    sim.add_argument("--particles", type=int, required=True)
    sim.add_argument("--sigma", type=float, required=True)
    sim.add_argument(
        "--offset", default="gaussian", choices=["gaussian", "uniform", "two-point", "two_point"]
    )
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--thin", type=int, default=None)
    sim.add_argument(
        "--init", default="all-zero", choices=["all-zero", "iid-gaussian", "iid-uniform"]
    )
    sim.add_argument("--init-scale", type=float, default=1.0, dest="init_scale")
    sim.add_argument(
        "--observe", default="distances", choices=["distances", "positions", "raw"]
    )
    sim.add_argument("--max-order", type=int, default=8, dest="max_order")
    sim.add_argument("--ecf-s", default="5,10,20,40", dest="ecf_s")
    sim.add_argument("--bins", type=int, default=201)
    sim.add_argument(
        "--kde-bandwidth", type=float, default=None, dest="kde_bandwidth"
    )
    sim.add_argument("--kde-points", type=int, default=201, dest="kde_points")
    sim.add_argument("--out", required=True)
    sim.add_argument("--trajectory-out", default=None, dest="trajectory_out")
    sim.add_argument(
        "--trajectory-format",
        default="long",
        choices=["long", "wide"],
        dest="trajectory_format",
    )
    sim.add_argument("--manifest", default=None)

    mom = sub.add_parser("moments", help="exact moments of the limiting particle law")
    mom.add_argument("--max-order", type=int, required=True, dest="max_order")
    mom.add_argument("--sigma", type=float, default=1.0)
    mom.add_argument("--format", default="json", choices=["json", "csv"])
    mom.add_argument("--order-limit", type=int, default=ORDER_LIMIT, dest="order_limit")
    mom.add_argument("--out", required=True)
    mom.add_argument("--manifest", default=None)

    cf = sub.add_parser("cf", help="evaluate a CF or density on a grid")
    cf.add_argument("--mode", required=True, choices=list(CF_MODES))
    cf.add_argument("--n", type=int, default=None)
    cf.add_argument("--k", type=int, default=None)
    cf.add_argument("--sigma", type=float, required=True)
    cf.add_argument(
        "--offset", default="gaussian", choices=["gaussian", "uniform", "two-point", "two_point"]
    )
    cf.add_argument("--grid", required=True, help="start:stop:count, endpoints inclusive")
    cf.add_argument("--eps", type=float, default=1e-10)
    cf.add_argument("--cap", type=int, default=DEFAULT_CAP)
    cf.add_argument("--threads", type=int, default=1)
    cf.add_argument("--format", default="csv", choices=["json", "csv"])
    cf.add_argument("--out", required=True)
    cf.add_argument("--manifest", default=None)

    cmp_ = sub.add_parser("compare", help="empirical summary vs analytic references")
    cmp_.add_argument("--summary", required=True)
    cmp_.add_argument("--baseline", default=None)
    cmp_.add_argument("--sigma", type=float, required=True)
    cmp_.add_argument("--n", type=int, required=True)
    cmp_.add_argument("--offset", default=None)
    cmp_.add_argument("--max-order", type=int, default=8, dest="max_order")
    cmp_.add_argument(
        "--ks-threshold", type=float, default=0.02, dest="ks_threshold"
    )
    cmp_.add_argument("--moment-tol", default="", dest="moment_tol")
    cmp_.add_argument("--eps", type=float, default=1e-10)
    cmp_.add_argument("--out", required=True)
    cmp_.add_argument("--manifest", default=None)

    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "moments": cmd_moments,
    "cf": cmd_cf,
    "compare": cmd_compare,
}


def _merge_dash_values(argv: list[str]) -> list[str]:
    # values like "-50:50:1001" would otherwise be taken for option names
    merged = []
    skip = False
    for pos, token in enumerate(argv):
        if skip:
            skip = False
            continue
        if token in ("--grid", "--ecf-s") and pos + 1 < len(argv):
            merged.append(f"{token}={argv[pos + 1]}")
            skip = True
        else:
            merged.append(token)
    return merged


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_merge_dash_values(argv))
    try:
        return COMMANDS[args.command](args, argv)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 2
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
