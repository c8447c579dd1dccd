"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 parse, 4 dimension mismatch,
5 degenerate sketch, 6 calibration mismatch.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, rng
from .conclab import HAAR, LEMMAS, ExperimentConfig, verify_lemma
from .errors import (
    CalibrationMismatchError,
    DegenerateSketchError,
    FormatError,
    RejectedInputError,
    SketchError,
    UnreliableCalibrationError,
)
from .estimator import CalibrationResult, calibrate_constants, estimate_pair, explain_plan
from .io import (
    RunManifest,
    load_subspace,
    matrix_csv,
    now,
    read_json,
    report_csv,
    save_subspace,
    write_json,
    write_text,
)
from .sketch import apply, gaussian_operator
from .subspace import (
    affinity_sq,
    affinity_to_distance_sq,
    generate_pair_with_angles,
    generate_random_subspace,
    pf_distance_direct,
    principal_angles,
)
from .svg import report_svg

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_DIMENSION, EXIT_DEGENERATE, EXIT_CALIBRATION = 0, 2, 3, 4, 5, 6

#: settings of ``verify`` / ``calibrate`` when neither a flag nor a config file gives them;
#: the band is narrow enough that failures are observable at this trial count
DEMO = {
    "lemma": "thm2",
    "ambient": 256,
    "n": "32,48,64",
    "d1": 4,
    "d2": 4,
    "cosines": HAAR,
    "L": 2,
    "epsilon": 0.05,
    "trials": 1000,
    "seed": 0,
    "t": 0.0,
}
_EXPERIMENT_KEYS = tuple(DEMO)
_CONFIG_KEYS = _EXPERIMENT_KEYS + ("haar",)


class DimensionMismatch(SketchError):
    pass


class ConfigFileError(FormatError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in str(text).strip("[]() ").replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).strip("[]() ").replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _experiment_flags(p: argparse.ArgumentParser, lemma: bool) -> None:
    # defaults are None so that config-file values can be told apart from flags
    if lemma:
        p.add_argument("--lemma", help=f"event to check; one of {', '.join(LEMMAS)}")
    p.add_argument("--config", help="INI/TOML-style file with an [experiment] section")
    p.add_argument("--ambient", type=int, help="ambient dimension N")
    p.add_argument("--n", help="comma-separated sketch sizes")
    p.add_argument("--d1", type=int, help="dimension of the first subspace")
    p.add_argument("--d2", type=int, help="dimension of the second subspace")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--cosines", help="comma-separated principal cosines (length d1)")
    g.add_argument("--haar", action="store_true", default=None, help="independent Haar subspaces")
    p.add_argument("--L", type=int, dest="L", help="number of subspaces (thm1)")
    p.add_argument("--epsilon", type=float, help="relative band width")
    p.add_argument("--trials", type=int, help="trials per grid point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--t", type=float, help="tail offset (lemma5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subspace-sketch",
        description="Gaussian sketching of subspaces: geometry, estimates and concentration checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="generate subspaces")
    p.add_argument("--ambient", type=int, required=True, help="ambient dimension N")
    p.add_argument("--dims", type=_int_list, required=True, help="subspace dimension(s), e.g. 3,6")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--cosines", type=_float_list, help="principal cosines; --dims gives d1,d2")
    g.add_argument("--haar", action="store_true", help="independent Haar subspaces, one per dim")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--csv", action="store_true", help="also write CSV copies of the bases")

    p = sub.add_parser("measure", help="principal angles, affinity and distance of two subspaces")
    p.add_argument("files", nargs=2, metavar="FILE")
    p.add_argument("--csv", help="also write the report as CSV")

    p = sub.add_parser("sketch", help="apply one Gaussian sketch to subspace files")
    p.add_argument("files", nargs="+", metavar="FILE")
    p.add_argument("--n", type=int, required=True, help="sketch size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.3, help="band width for the slack field")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("verify", help="Monte Carlo failure rates of a concentration event")
    _experiment_flags(p, lemma=True)
    p.add_argument("--out-csv", help="report CSV path (default: print to stdout)")
    p.add_argument("--out-svg", help="chart path")

    p = sub.add_parser("calibrate", help="fit the threshold and decay constants")
    _experiment_flags(p, lemma=True)
    p.add_argument("--out", required=True, help="calibration JSON path")
    p.add_argument("--out-csv", help="also write the underlying report CSV")

    p = sub.add_parser("plan", help="sketch size for a set of L subspaces")
    p.add_argument("--d", type=int, required=True, help="subspace dimension")
    p.add_argument("--L", type=int, dest="L", default=1, help="number of subspaces")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--target", type=float, required=True, help="acceptable failure probability")
    p.add_argument("--calibration", required=True, help="file written by 'calibrate'")
    return parser


# --- configuration -----------------------------------------------------------------------


def read_config_file(path: str, command: str) -> dict:
    """Keys from ``[experiment]`` overlaid by ``[<command>]``; quotes and brackets are tolerated."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigFileError(f"config file {path}: {exc}") from exc
    out = {}
    for section in ("experiment", command):
        if not cp.has_section(section):
            continue
        for key, value in cp.items(section):
            if key not in _CONFIG_KEYS:
                raise ConfigFileError(
                    f"config file {path}: unknown key {key!r} in [{section}]; "
                    f"known keys: {', '.join(_CONFIG_KEYS)}"
                )
            out[key] = value.strip().strip("\"'")
    return out


def _coerce(key: str, value, source: str):
    try:
        if key in ("ambient", "d1", "d2", "L", "trials", "seed"):
            return int(value)
        if key in ("epsilon", "t"):
            return float(value)
        if key == "n":
            return _int_list(value)
        if key == "cosines":
            if isinstance(value, str) and value.strip().lower() in (HAAR, "haar"):
                return HAAR
            return _float_list(value)
        if key == "haar":
            return str(value).strip().lower() in ("1", "true", "yes", "on")
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigFileError(f"{source}: bad value for {key!r}: {exc}") from exc
    return value


def resolve_experiment(args: argparse.Namespace, command: str) -> ExperimentConfig:
    """Flags override the config file, which overrides the demo defaults."""
    merged = {k: _coerce(k, v, "defaults") for k, v in DEMO.items()}
    if args.config:
        for k, v in read_config_file(args.config, command).items():
            if k == "haar":
                if _coerce(k, v, args.config):
                    merged["cosines"] = HAAR
                continue
            merged[k] = _coerce(k, v, args.config)
    for k in _EXPERIMENT_KEYS:
        v = getattr(args, k, None)
        if v is None or k == "cosines":
            continue
        merged[k] = _coerce(k, v, f"--{k}")
    if args.cosines is not None:
        merged["cosines"] = _coerce("cosines", args.cosines, "--cosines")
    if args.haar:
        merged["cosines"] = HAAR
    if merged["lemma"] not in LEMMAS:
        raise RejectedInputError(
            f"unknown lemma id {merged['lemma']!r}; valid ids: {', '.join(LEMMAS)}"
        )
    return ExperimentConfig(
        ambient=merged["ambient"],
        n_grid=tuple(merged["n"]),
        d1=merged["d1"],
        d2=merged["d2"],
        cosines=merged["cosines"],
        l_count=merged["L"],
        epsilon=merged["epsilon"],
        trials=merged["trials"],
        master_seed=merged["seed"],
        lemma_id=merged["lemma"],
        tail_t=merged["t"],
    )


# --- commands ----------------------------------------------------------------------------


def _command_line(argv: Sequence[str]) -> str:
    return " ".join(["subspace-sketch", *argv])


def cmd_gen(args, argv) -> int:
    out = Path(args.out)
    manifest = RunManifest(
        command=_command_line(argv),
        config={
            "ambient": args.ambient,
            "dims": args.dims,
            "cosines": HAAR if args.haar else args.cosines,
            "out": str(out),
        },
        master_seed=args.seed,
        started=now(),
    )
    if args.haar:
        subspaces = [
            generate_random_subspace(args.ambient, d, rng.derive_key(args.seed, i))
            for i, d in enumerate(args.dims)
        ]
    else:
        if len(args.dims) != 2:
            raise RejectedInputError("--cosines needs --dims d1,d2")
        d1, d2 = args.dims
        if len(args.cosines) != d1:
            raise RejectedInputError(f"--cosines has {len(args.cosines)} values but d1={d1}")
        x1, x2, _ = generate_pair_with_angles(args.ambient, args.cosines, d2, args.seed)
        subspaces = [x1, x2]
    for i, x in enumerate(subspaces, start=1):
        path = save_subspace(x, out / f"subspace_{i}.sskm")
        manifest.add(path)
        print(path)
        if args.csv:
            manifest.add(write_text(out / f"subspace_{i}.csv", matrix_csv(x.basis)))
    manifest.write(out / "gen_manifest.json")
    return EXIT_OK


def _load_all(files):
    xs = [load_subspace(f) for f in files]
    ambients = {x.ambient_dim for x in xs}
    if len(ambients) > 1:
        dims = ", ".join(f"{f}: R^{x.ambient_dim}" for f, x in zip(files, xs))
        raise DimensionMismatch(f"ambient dimensions differ ({dims})")
    return xs


def measure_pair(x1, x2) -> dict:
    geo = principal_angles(x1, x2)
    d_svd = affinity_to_distance_sq(geo.affinity_sq, geo.d1, geo.d2)
    d_direct = pf_distance_direct(x1, x2) ** 2
    return {
        "d1": geo.d1,
        "d2": geo.d2,
        "ambient": x1.ambient_dim,
        "cosines": [float(c) for c in geo.cosines],
        "angles": [float(a) for a in geo.angles],
        "affinity_sq": float(geo.affinity_sq),
        "distance_sq_svd": float(d_svd),
        "distance_sq_direct": float(d_direct),
        "max_discrepancy": float(abs(d_svd - d_direct)),
    }


def cmd_measure(args, argv) -> int:
    x1, x2 = _load_all(args.files)
    report = measure_pair(x1, x2)
    print(json.dumps(report, indent=2))
    if args.csv:
        started = now()
        header = ["d1", "d2", "ambient", "affinity_sq", "distance_sq_svd", "distance_sq_direct",
                  "max_discrepancy", "cosines"]
        row = [str(report[k]) if isinstance(report[k], int) else repr(report[k]) for k in header[:-1]]
        row.append(";".join(repr(c) for c in report["cosines"]))
        path = write_text(args.csv, ",".join(header) + "\n" + ",".join(row) + "\n")
        manifest = RunManifest(
            command=_command_line(argv),
            config={"files": list(args.files)},
            master_seed=None,
            started=started,
        )
        manifest.add(path)
        manifest.write(f"{args.csv}.manifest.json")
    return EXIT_OK


def cmd_sketch(args, argv) -> int:
    xs = _load_all(args.files)
    ambient = xs[0].ambient_dim
    top = max(x.dim for x in xs)
    if args.n <= top:
        raise RejectedInputError(f"--n must exceed the largest subspace dimension ({top}), got {args.n}")
    if args.n >= ambient:
        raise RejectedInputError(f"--n must be below the ambient dimension ({ambient}), got {args.n}")
    out = Path(args.out)
    manifest = RunManifest(
        command=_command_line(argv),
        config={"files": list(args.files), "n": args.n, "epsilon": args.epsilon, "out": str(out)},
        master_seed=args.seed,
        started=now(),
    )
    op = gaussian_operator(args.n, ambient, args.seed)
    ys = [apply(op, x) for x in xs]

    pairs = []
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            d1, d2 = sorted((xs[i].dim, xs[j].dim))
            aff_x = affinity_sq(xs[i], xs[j])
            aff_y = affinity_sq(ys[i], ys[j])
            est = estimate_pair(min(aff_x, d1), d1, d2, args.n, args.epsilon)
            dev = abs(aff_y - est.oaff_sq)
            pairs.append({
                "i": i + 1,
                "j": j + 1,
                "d1": d1,
                "d2": d2,
                "affinity_sq_before": aff_x,
                "affinity_sq_after": aff_y,
                "distance_sq_before": affinity_to_distance_sq(aff_x, d1, d2),
                "distance_sq_after": affinity_to_distance_sq(aff_y, d1, d2),
                "affinity_sq_estimate": est.oaff_sq,
                "distance_sq_estimate": est.od_sq,
                "slack": est.slack,
                "deviation": dev,
                "within_slack": bool(dev <= est.slack),
            })
    for k, y in enumerate(ys, start=1):
        manifest.add(save_subspace(y, out / f"sketched_{k}.sskm"))
    record = {"n": args.n, "seed": args.seed, "epsilon": args.epsilon, "ambient": ambient,
              "inputs": list(args.files), "pairs": pairs}
    manifest.add(write_json(out / "sketch.json", record))
    manifest.write(out / "sketch_manifest.json")
    print(json.dumps(record, indent=2))
    return EXIT_OK


def _experiment_manifest(argv, cfg: ExperimentConfig) -> RunManifest:
    return RunManifest(
        command=_command_line(argv), config=cfg.to_dict(), master_seed=cfg.master_seed, started=now()
    )


def _summary(report) -> str:
    if report.fit is None:
        return "fit: unavailable (fewer than 2 grid points with >= 5 failures)"
    f = report.fit
    return f"fit: slope={f.slope:.6g} intercept={f.intercept:.6g} r2={f.r2:.4f}"


def cmd_verify(args, argv) -> int:
    cfg = resolve_experiment(args, "verify")
    manifest = _experiment_manifest(argv, cfg)
    report = verify_lemma(cfg)
    text = report_csv(report)
    if args.out_csv:
        manifest.add(write_text(args.out_csv, text))
    else:
        sys.stdout.write(text)
    if args.out_svg:
        manifest.add(write_text(args.out_svg, report_svg(report)))
    if manifest.outputs:
        manifest.write(f"{manifest.outputs[0]['path']}.manifest.json")
        print(_summary(report), file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args, argv) -> int:
    cfg = resolve_experiment(args, "calibrate")
    manifest = _experiment_manifest(argv, cfg)
    report = verify_lemma(cfg)
    cal = calibrate_constants(report)
    path = write_json(args.out, cal.to_dict())
    manifest.add(path)
    if args.out_csv:
        manifest.add(write_text(args.out_csv, report_csv(report)))
    manifest.write(f"{path}.manifest.json")
    print(json.dumps(cal.to_dict(), indent=2))
    if not cal.reliable:
        print(f"warning: calibration unreliable: {cal.diagnostic}", file=sys.stderr)
    return EXIT_OK


def cmd_plan(args, argv) -> int:
    data = read_json(args.calibration)
    try:
        cal = CalibrationResult.from_dict(data)
    except (RejectedInputError, TypeError) as exc:
        raise FormatError(f"{args.calibration}: {exc}") from exc
    n, binding = explain_plan(args.d, args.L, args.epsilon, args.target, cal)
    print(f"n={n} binding={binding}")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "measure": cmd_measure,
    "sketch": cmd_sketch,
    "verify": cmd_verify,
    "calibrate": cmd_calibrate,
    "plan": cmd_plan,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, argv)
    except DegenerateSketchError as exc:
        print(f"error: degenerate sketch (seed {exc.seed}): {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DimensionMismatch as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except FormatError as exc:
        print(f"error: cannot parse input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (CalibrationMismatchError, UnreliableCalibrationError) as exc:
        print(f"error: calibration: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except RejectedInputError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
