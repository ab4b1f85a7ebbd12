"""Command line entry point: ``lscmf fit`` and ``lscmf simulate``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import io
from .datamodel import EdgeKey, ObservedMatrix, ViewLayout, center
from .errors import InputError, LayoutError, LscmfError
from .pipeline import PHASES, fit
from .reconstruct import IntegrationResult
from .simulate import run_replicate

log = logging.getLogger("lscmf")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2

SIM_COLUMNS = (
    ["scenario", "dim_scale", "seed", "generate_ms"]
    + [f"{p}_ms" for p in PHASES]
    + ["total_ms", "n_factors", "true_partition", "estimated_partition", "exact_match"]
)


class ManifestError(LscmfError):
    pass


def load_manifest(path) -> tuple[ViewLayout, list[ObservedMatrix]]:
    """Parse a JSON layout manifest and read every matrix it names.

    Relative matrix paths are resolved against the manifest's directory.
    """
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(spec, dict) or "views" not in spec or "matrices" not in spec:
        raise ManifestError(f"manifest {path} needs 'views' and 'matrices'")
    try:
        dims = {str(k): int(v) for k, v in spec["views"].items()}
        entries = [
            (EdgeKey(str(m["row_view"]), str(m["col_view"]), int(m.get("layer", 0))), m)
            for m in spec["matrices"]
        ]
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ManifestError(f"malformed manifest {path}: {exc}") from exc
    keys = [k for k, _ in entries]
    dupes = sorted({k for k in keys if keys.count(k) > 1})
    if dupes:
        raise LayoutError(f"edge {dupes[0]} is listed more than once")
    layout = ViewLayout(dims, tuple(keys))
    matrices = []
    for key, entry in entries:
        mpath = Path(entry["path"])
        if not mpath.is_absolute():
            mpath = path.parent / mpath
        if not mpath.exists():
            raise ManifestError(f"matrix file for edge {key} not found: {mpath}")
        fmt = entry.get("format") or mpath.suffix.lstrip(".")
        try:
            data = io.read_matrix(mpath, fmt)
        except InputError as exc:
            raise ManifestError(f"edge {key}: {exc}") from exc
        matrices.append(ObservedMatrix(key, data))
    return layout, matrices


def write_result(result: IntegrationResult, out_dir: Path, fmt: str) -> None:
    layout = result.layout
    for view in layout.views:
        io.write_matrix(out_dir / f"factors_{view}.{fmt}", result.factors[view], fmt)
    for edge in layout.edges:
        io.write_matrix(out_dir / f"values_{edge}.{fmt}", result.values[edge][None, :], fmt)
    graph = result.graph_json()
    _write_json(out_dir / "graph.json", graph)
    summary = dict(graph)
    summary["values"] = [
        {**e.to_json(), "scale": result.scales[e], "values": result.values[e].tolist()} for e in layout.edges
    ]
    summary["populated"] = {v: result.populated(v).tolist() for v in layout.views}
    _write_json(out_dir / "summary.json", summary)
    _write_json(out_dir / "diagnostics.json", result.diagnostics)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_fit(args) -> int:
    out_dir = Path(args.out_dir)
    if out_dir.exists() and (not out_dir.is_dir() or any(out_dir.iterdir())):
        print(f"error: output directory {out_dir} exists and is not empty", file=sys.stderr)
        return EXIT_INVALID
    try:
        layout, matrices = load_manifest(args.manifest)
        if args.center != "none":
            matrices = [center(m, args.center) for m in matrices]
        result = fit(layout, matrices, threads=args.threads, keep_unanchored=args.keep_unanchored)
    except (LayoutError, ManifestError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LscmfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".lscmf-", dir=out_dir.parent))
    try:
        write_result(result, tmp, args.format)
        if out_dir.exists():
            out_dir.rmdir()
        os.replace(tmp, out_dir)
    except Exception:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    log.info("wrote %d factors to %s", result.rank, out_dir)
    return EXIT_OK


def simulation_row(record: dict) -> dict:
    row = {k: record[k] for k in ("scenario", "dim_scale", "seed")}
    for k in ["generate_ms"] + [f"{p}_ms" for p in PHASES] + ["total_ms"]:
        row[k] = f"{record[k]:.3f}"
    row["n_factors"] = record["result"].rank
    row["true_partition"] = json.dumps(record["true_partition"], sort_keys=True)
    row["estimated_partition"] = json.dumps(record["estimated_partition"], sort_keys=True)
    row["exact_match"] = int(record["exact_match"])
    return row


def cmd_simulate(args) -> int:
    if args.scenario not in (1, 2, 3):
        print(f"error: unknown scenario {args.scenario}; choose 1, 2 or 3", file=sys.stderr)
        return EXIT_INVALID
    if args.dim_scale < 1 or args.reps < 0:
        print("error: dim-scale must be >= 1 and reps >= 0", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    new_file = not out.exists() or out.stat().st_size == 0
    with open(out, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SIM_COLUMNS, lineterminator="\n")
        if new_file:
            writer.writeheader()
        for rep in range(args.reps):
            record = run_replicate(args.scenario, args.dim_scale, args.seed + rep, threads=args.threads)
            writer.writerow(simulation_row(record))
            fh.flush()
            log.info("scenario %d scale %d seed %d: exact_match=%s", args.scenario, args.dim_scale,
                     args.seed + rep, record["exact_match"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lscmf", description="Large-scale collective matrix factorization.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a collection of matrices described by a JSON manifest")
    p_fit.add_argument("manifest", help="JSON manifest with 'views' and 'matrices'")
    p_fit.add_argument("out_dir", help="output directory (must not exist or be empty)")
    p_fit.add_argument("--center", choices=("none", "columns", "rows"), default="none",
                       help="subtract column or row means before standardizing")
    p_fit.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_fit.add_argument("--format", choices=io.FORMATS, default="csv", help="format of factor and value files")
    p_fit.add_argument("--keep-unanchored", action="store_true",
                       help="keep factors that match no joint factor as individual factors")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a built-in simulation scenario")
    p_sim.add_argument("--scenario", type=int, required=True)
    p_sim.add_argument("--dim-scale", type=int, default=1)
    p_sim.add_argument("--reps", type=int, default=25)
    p_sim.add_argument("--seed", type=int, default=0, help="seed of the first replicate; later ones add 1")
    p_sim.add_argument("--out", required=True, help="CSV file to append results to")
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - map anything unexpected to exit code 1
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
