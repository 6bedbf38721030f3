"""Batch pipeline driver: generate, simulate, unmix, abundance, evaluate, report.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numerical
failure.  Randomized subcommands require an explicit --seed; given identical
inputs and flags every subcommand writes byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import abundance as ab
from . import bandsim, extraction, fileio, metrics, plots, scenegen
from .core import EndmemberSet, NumericalError, flatten

_EXIT_OK = 0
_EXIT_DATA = 3
_EXIT_NUMERIC = 4


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _write_text(path, text: str) -> None:
    fileio._atomic_write(path, text.encode("ascii"))


def _write_json(path, payload) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _resolve_camera(spec: str) -> bandsim.SensitivityModel:
    if spec in ("real", "synthetic") and not os.path.exists(spec):
        return fileio.load_bundled_camera(spec)
    return fileio.read_curves(spec)


def _ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = scenegen.load_scene_spec(args.scene)
    cube, endmembers, field = scenegen.generate(spec)
    _ensure_dir(args.out)
    fileio.write_cube(cube, os.path.join(args.out, "cube.msc"))
    fileio.write_endmembers(endmembers, os.path.join(args.out, "endmembers.csv"))
    fileio.write_abundance(
        field, os.path.join(args.out, "abundances.csv"), endmembers.labels()
    )
    print(
        f"generated {cube.width}x{cube.height} cube with {cube.band_count} bands "
        f"and {spec.p} endmembers -> {args.out}"
    )
    return _EXIT_OK


def cmd_simulate(args) -> int:
    cube = fileio.read_cube(args.cube)
    camera = _resolve_camera(args.camera)
    if args.illumination is not None:
        illum = fileio.read_illumination(args.illumination)
        camera = bandsim.SensitivityModel(camera.channels, illumination=illum)
    result = bandsim.simulate_cube(cube, camera, normalize=args.normalize)
    parent = os.path.dirname(os.path.abspath(args.out))
    _ensure_dir(parent)
    fileio.write_cube(result, args.out)
    print(
        f"simulated {result.band_count}-band cube "
        f"({len(result.pan_bands)} panchromatic) -> {args.out}"
    )
    return _EXIT_OK


def cmd_unmix(args) -> int:
    cube = fileio.read_cube(args.cube)
    config = extraction.ExtractionConfig(
        p=args.endmembers, seed=args.seed, max_iter=args.max_iter, tol=args.tol
    )
    table = flatten(cube)
    if args.normalize:
        norms = np.linalg.norm(table, axis=0)
        table = table / np.where(norms > 0, norms, 1.0)
    result = extraction.extract(table, args.method, config, axis=cube.axis)
    if args.normalize and result.pixel_indices is not None:
        # Pure-pixel methods report the original, unnormalized pixel columns.
        original = flatten(cube)[:, list(result.pixel_indices)]
        endmembers = EndmemberSet(
            cube.axis, original.T, pixel_indices=result.pixel_indices
        )
    else:
        endmembers = result.endmembers

    _ensure_dir(args.out)
    fileio.write_endmembers(endmembers, os.path.join(args.out, "endmembers.csv"))
    skip = () if args.include_pan else cube.pan_bands
    fileio.write_endmembers(
        endmembers, os.path.join(args.out, "spectra.csv"), skip_bands=skip
    )
    _write_json(
        os.path.join(args.out, "run.json"),
        {
            "method": result.method,
            "p": config.p,
            "seed": config.seed,
            "max_iter": config.max_iter,
            "tol": config.tol,
            "normalize": bool(args.normalize),
            "include_pan": bool(args.include_pan),
            "iterations": result.iterations,
            "objective_trace": [float(v) for v in result.objective_trace],
            "pixel_indices": (
                list(result.pixel_indices)
                if result.pixel_indices is not None
                else None
            ),
            "pan_bands": list(cube.pan_bands),
        },
    )
    print(
        f"{result.method}: extracted {config.p} endmembers in "
        f"{result.iterations} iterations -> {args.out}"
    )
    return _EXIT_OK


def cmd_abundance(args) -> int:
    cube = fileio.read_cube(args.cube)
    endmembers = fileio.read_endmembers(args.endmembers)
    config = ab.AbundanceConfig(
        sum_to_one=args.sum_to_one,
        nonnegative=args.nonnegative,
        sto_weight=args.sto_weight,
    )
    field = ab.solve_cube(cube, endmembers, config)
    _ensure_dir(args.out)
    names = endmembers.labels()
    fileio.write_abundance(field, os.path.join(args.out, "abundances.csv"), names)
    if args.maps:
        fileio.write_abundance_maps(field, os.path.join(args.out, "maps"), names)
    print(
        f"estimated {field.endmember_count} abundances for "
        f"{cube.pixel_count} pixels -> {args.out}"
    )
    return _EXIT_OK


def _align_to_truth(estimated: EndmemberSet, truth: EndmemberSet):
    """Match to the truth and return (match, signatures in truth order)."""
    match = metrics.match_endmembers(estimated, truth)
    aligned = np.empty_like(estimated.signatures)
    for i, j in enumerate(match.permutation):
        aligned[j] = estimated.signatures[i]
    return match, aligned


def _savd_rows(report: metrics.SavdReport, sad_by_truth) -> list[tuple[str, str, str]]:
    rows = []
    for k, name in enumerate(report.names):
        rows.append(
            (name, _fmt(sad_by_truth[k]), _fmt(report.per_endmember_mean[k]))
        )
    rows.append(("average", "", _fmt(report.overall_mean)))
    rows.append(("std", "", _fmt(report.overall_std)))
    return rows


def cmd_evaluate(args) -> int:
    est_em = fileio.read_endmembers(args.est_endmembers)
    truth_em = fileio.read_endmembers(args.truth_endmembers)
    est_tab = fileio.read_abundance(args.est_abundances)
    truth_tab = fileio.read_abundance(args.truth_abundances)
    if est_tab.fractions.shape != truth_tab.fractions.shape:
        raise ValueError(
            f"abundance tables differ in shape: {est_tab.fractions.shape} "
            f"vs {truth_tab.fractions.shape}"
        )
    if est_tab.fractions.shape[1] != est_em.count:
        raise ValueError(
            "estimated abundance columns do not match the endmember count"
        )

    match = metrics.match_endmembers(est_em, truth_em)
    aligned = np.empty_like(est_tab.fractions)
    for i, j in enumerate(match.permutation):
        aligned[:, j] = est_tab.fractions[:, i]
    sad_by_truth = np.empty(truth_em.count)
    for i, j in enumerate(match.permutation):
        sad_by_truth[j] = match.per_pair_sad[i]

    report = metrics.savd_report(aligned, truth_tab.fractions, truth_em.labels())

    _ensure_dir(args.out)
    rows = _savd_rows(report, sad_by_truth)
    csv_lines = ["endmember,sad_radians,savd_percent"]
    csv_lines += [",".join(row) for row in rows]
    _write_text(os.path.join(args.out, "savd.csv"), "\n".join(csv_lines) + "\n")

    inst_lines = ["id,savd_percent"]
    inst_lines += [
        f"{instance_id},{_fmt(value)}"
        for instance_id, value in zip(truth_tab.ids, report.per_instance)
    ]
    _write_text(
        os.path.join(args.out, "per_instance.csv"), "\n".join(inst_lines) + "\n"
    )

    widths = [
        max(len("endmember"), *(len(r[0]) for r in rows)),
        max(len("SAD [rad]"), *(len(r[1]) for r in rows)),
        max(len("SAVD [%]"), *(len(r[2]) for r in rows)),
    ]
    text_lines = [
        "  ".join(
            h.ljust(w) for h, w in zip(("endmember", "SAD [rad]", "SAVD [%]"), widths)
        )
    ]
    for row in rows:
        text_lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    _write_text(os.path.join(args.out, "savd.txt"), "\n".join(text_lines) + "\n")

    print(
        f"evaluated {est_em.count} endmembers: total SAD "
        f"{_fmt(match.total_sad)} rad, mean SAVD {_fmt(report.overall_mean)}% "
        f"-> {args.out}"
    )
    return _EXIT_OK


def _read_savd_table(path) -> dict[str, str]:
    """Map endmember name -> formatted SAVD percent from an evaluate run."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="ascii") as handle:
        header = handle.readline().strip().split(",")
        savd_col = header.index("savd_percent")
        for line in handle:
            parts = line.strip().split(",")
            if len(parts) > savd_col:
                out[parts[0]] = parts[savd_col]
    return out


def cmd_report(args) -> int:
    methods = args.methods
    truth = (
        fileio.read_endmembers(args.truth_endmembers)
        if args.truth_endmembers is not None
        else None
    )

    runs = {}
    for method in methods:
        run_dir = os.path.join(args.runs, method)
        em_path = os.path.join(run_dir, "endmembers.csv")
        if not os.path.exists(em_path):
            runs[method] = None
            continue
        endmembers = fileio.read_endmembers(em_path)
        pan: tuple[int, ...] = ()
        run_json = os.path.join(run_dir, "run.json")
        if os.path.exists(run_json):
            with open(run_json, "r", encoding="ascii") as handle:
                pan = tuple(json.load(handle).get("pan_bands", ()))
        savd_path = os.path.join(run_dir, "savd.csv")
        savd_table = _read_savd_table(savd_path) if os.path.exists(savd_path) else None
        runs[method] = {"endmembers": endmembers, "pan": pan, "savd": savd_table}

    present = [m for m in methods if runs[m] is not None]
    if not present:
        print(f"no runs found under {args.runs}; nothing to report")
        return _EXIT_OK

    reference = truth if truth is not None else runs[present[0]]["endmembers"]
    names = list(reference.labels())
    axis = reference.axis
    aligned: dict[str, np.ndarray] = {}
    for method in present:
        endmembers = runs[method]["endmembers"]
        if endmembers.axis != axis:
            raise ValueError(
                f"run {method!r} endmember axis differs from the reference axis"
            )
        _, signatures = _align_to_truth(endmembers, reference)
        aligned[method] = signatures

    pan = runs[present[0]]["pan"]
    keep = [
        b for b in range(len(axis)) if args.include_pan or b not in pan
    ]
    wavelengths = axis.samples[keep]

    _ensure_dir(args.out)
    header = ["wavelength_nm"] + [
        f"{method}:{name}" for method in present for name in names
    ]
    lines = [",".join(header)]
    for row, b in enumerate(keep):
        cells = [_fmt(wavelengths[row])]
        for method in present:
            cells += [_fmt(aligned[method][k, b]) for k in range(len(names))]
        lines.append(",".join(cells))
    _write_text(
        os.path.join(args.out, "spectra_combined.csv"), "\n".join(lines) + "\n"
    )

    row_labels = names + ["average", "std"]
    table_lines = ["endmember," + ",".join(methods)]
    for label in row_labels:
        cells = [label]
        for method in methods:
            run = runs[method]
            if run is None or run["savd"] is None:
                cells.append("absent")
            else:
                cells.append(run["savd"].get(label, "absent"))
        table_lines.append(",".join(cells))
    _write_text(
        os.path.join(args.out, "savd_comparison.csv"), "\n".join(table_lines) + "\n"
    )

    text = ["method comparison (SAVD percent; lower is better)", ""]
    widths = [max(len(r.split(",")[0]) for r in table_lines)] + [
        max(8, len(m)) for m in methods
    ]
    for line in table_lines:
        cells = line.split(",")
        text.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)))
    absent = [m for m in methods if runs[m] is None]
    if absent:
        text += ["", "absent runs: " + ", ".join(absent)]
    _write_text(os.path.join(args.out, "report.txt"), "\n".join(text) + "\n")

    if args.figures:
        per_method = {m: aligned[m][:, keep] for m in present}
        truth_curves = truth.signatures[:, keep] if truth is not None else None
        plots.save_comparison_figures(
            wavelengths,
            per_method,
            names,
            os.path.join(args.out, "figures"),
            truth=truth_curves,
        )
        savd_values: dict[str, list] = {}
        for method in present:
            table = runs[method]["savd"]
            if table:
                savd_values[method] = [
                    float(table[n]) if n in table and table[n] else None
                    for n in names
                ]
        if savd_values:
            plots.save_savd_figure(
                names, savd_values, os.path.join(args.out, "figures", "savd.png")
            )

    print(
        f"report over {len(present)} of {len(methods)} methods -> {args.out}"
        + (f" (absent: {', '.join(absent)})" if absent else "")
    )
    return _EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msunmix",
        description=(
            "Simulate multispectral cubes from hyperspectral data and unmix "
            "them with VCA, N-FINDR, or NMF."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_gen = sub.add_parser("generate", help="synthesize a ground-truth scene")
    p_gen.add_argument("scene", help="scene spec file (key: value text)")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_generate)

    p_sim = sub.add_parser("simulate", help="simulate a multispectral cube")
    p_sim.add_argument("cube", help="input hyperspectral cube file")
    p_sim.add_argument(
        "--camera",
        required=True,
        help="sensitivity curve CSV, or bundled name: real | synthetic",
    )
    p_sim.add_argument("--illumination", help="optional illumination CSV")
    p_sim.add_argument(
        "--normalize",
        action="store_true",
        help="divide each channel by its response integral",
    )
    p_sim.add_argument("--out", required=True, help="output cube file")
    p_sim.set_defaults(func=cmd_simulate)

    p_unmix = sub.add_parser("unmix", help="extract endmembers from a cube")
    p_unmix.add_argument("cube", help="input cube file")
    p_unmix.add_argument(
        "--method", required=True, choices=extraction.METHODS
    )
    p_unmix.add_argument(
        "--endmembers", required=True, type=int, help="endmember count p"
    )
    p_unmix.add_argument(
        "--seed", required=True, type=int, help="64-bit seed (PCG64 generator)"
    )
    p_unmix.add_argument("--max-iter", type=int, default=500)
    p_unmix.add_argument("--tol", type=float, default=1e-9)
    p_unmix.add_argument(
        "--normalize",
        action="store_true",
        help="L2-normalize each pixel before extraction",
    )
    p_unmix.add_argument(
        "--include-pan",
        action="store_true",
        help="keep panchromatic bands in spectra.csv",
    )
    p_unmix.add_argument("--out", required=True, help="output directory")
    p_unmix.set_defaults(func=cmd_unmix)

    p_ab = sub.add_parser("abundance", help="estimate per-pixel abundances")
    p_ab.add_argument("cube", help="input cube file")
    p_ab.add_argument("--endmembers", required=True, help="endmember CSV")
    p_ab.add_argument(
        "--sum-to-one",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="enforce the sum-to-one constraint",
    )
    p_ab.add_argument(
        "--nonnegative",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="enforce nonnegative fractions",
    )
    p_ab.add_argument("--sto-weight", type=float, default=1e3)
    p_ab.add_argument(
        "--maps",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="write per-endmember grayscale map images",
    )
    p_ab.add_argument("--out", required=True, help="output directory")
    p_ab.set_defaults(func=cmd_abundance)

    p_eval = sub.add_parser("evaluate", help="score a run against ground truth")
    p_eval.add_argument("--est-endmembers", required=True)
    p_eval.add_argument("--est-abundances", required=True)
    p_eval.add_argument("--truth-endmembers", required=True)
    p_eval.add_argument("--truth-abundances", required=True)
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.set_defaults(func=cmd_evaluate)

    p_rep = sub.add_parser("report", help="merge method runs into one comparison")
    p_rep.add_argument("runs", help="directory holding one subdirectory per method")
    p_rep.add_argument(
        "--methods",
        required=True,
        nargs="+",
        help="method subdirectories, in output column order",
    )
    p_rep.add_argument("--truth-endmembers", help="optional ground-truth CSV")
    p_rep.add_argument(
        "--include-pan",
        action="store_true",
        help="keep panchromatic bands in the merged spectra CSV",
    )
    p_rep.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="render comparison figures",
    )
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except fileio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
