"""Command-line front end: simulate, analyze, report.

Exit codes: 0 success, 2 invalid inputs or configuration, 3 numerical
failure. ``analyze`` requires an explicit --seed so no run depends on wall
clock state.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import fileio, figures, pipeline, preprocess, synth
from .errors import NumericalError, ValidationError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclesym",
        description="Linearized return-map identification and bilateral symmetry testing "
        "for rhythmic time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="generate a synthetic cohort of continuous recordings"
    )
    sim.add_argument("--seed", type=int, required=True, help="master seed for the cohort")
    sim.add_argument("--out-dir", default=".", help="directory for the generated files")
    sim.add_argument("--subjects", type=int, default=8, help="number of recordings")
    sim.add_argument("--cycles", type=int, default=50, help="strides per recording")
    sim.add_argument("--sample-rate", type=float, default=100.0, help="Hz")
    sim.add_argument("--noise", type=float, default=0.1, help="section noise scale")
    sim.add_argument(
        "--asymmetry",
        type=float,
        default=0.0,
        help="Frobenius norm of the right-to-left map perturbation (0 = symmetric)",
    )
    sim.add_argument("--step-period", type=float, default=0.5, help="seconds per step")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="run the symmetry analysis on recordings")
    ana.add_argument("data", nargs="+", help="time-series CSV file per subject")
    ana.add_argument("--config", help="analysis configuration JSON")
    ana.add_argument("--seed", type=int, required=True, help="seed for all random splits")
    ana.add_argument("--out-dir", default=".", help="directory for report.json")
    ana.add_argument(
        "--events",
        action="append",
        default=None,
        metavar="CSV",
        help="events file per subject (repeat per data file; skips trigger detection)",
    )
    ana.add_argument(
        "--kinds",
        choices=("step", "stride", "both"),
        default=None,
        help="transition kinds to analyze (overrides config)",
    )
    ana.add_argument("--jobs", type=int, default=1, help="worker threads for the CV loop")
    ana.add_argument(
        "--write-iterations",
        action="store_true",
        help="also write per-iteration errors to iteration_errors.csv",
    )
    ana.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("report", help="render figure CSVs and PNGs from a report")
    rep.add_argument("report", help="report.json produced by analyze")
    rep.add_argument("--out-dir", default=".", help="directory for figure files")
    rep.set_defaults(func=cmd_report)

    return parser


def cmd_simulate(args) -> int:
    if args.subjects < 1:
        raise ValidationError("--subjects must be at least 1")
    if args.noise < 0:
        raise ValidationError("--noise must be nonnegative")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model = synth.reference_symmetric_model(noise=args.noise, step_period=args.step_period)
    if args.asymmetry != 0.0:
        model = synth.perturb_asymmetry(model, synth.reference_asymmetry(args.asymmetry))

    subjects = []
    for i in range(args.subjects):
        name = f"subject_{i + 1:02d}"
        sub_seed = pipeline._subject_seed(args.seed, i)
        angles, (left, right), truth = synth.gen_continuous_gait(
            model, args.sample_rate, args.cycles, sub_seed
        )
        series = preprocess.concat_channels(angles, left, right)
        data_path = out_dir / f"{name}.csv"
        events_path = out_dir / f"events_{i + 1:02d}.csv"
        fileio.write_timeseries_csv(data_path, series)
        fileio.write_events_csv(events_path, truth)
        subjects.append(
            {
                "name": name,
                "seed": sub_seed,
                "data": data_path.name,
                "events": events_path.name,
            }
        )
        print(f"wrote {data_path} ({series.n_samples} samples) and {events_path}")

    fileio.write_json(
        out_dir / "truth.json",
        {
            "schema": "cyclesym/truth/1",
            "seed": args.seed,
            "noise": args.noise,
            "asymmetry_norm": args.asymmetry,
            "step_period": args.step_period,
            "sample_rate": args.sample_rate,
            "cycles": args.cycles,
            "fixed_point_left": [float(v) for v in model.mu_left],
            "fixed_point_right": [float(v) for v in model.mu_right],
            "map_left_to_right": model.map_lr.tolist(),
            "map_right_to_left": model.map_rl.tolist(),
            "subjects": subjects,
        },
    )
    fileio.write_json(out_dir / "analysis_config.json", pipeline.AnalysisConfig().to_dict())
    print(f"wrote {out_dir / 'truth.json'} and {out_dir / 'analysis_config.json'}")
    return 0


def _load_config(args) -> pipeline.AnalysisConfig:
    if args.config is not None:
        config = pipeline.AnalysisConfig.from_dict(fileio.read_json(args.config))
    else:
        config = pipeline.AnalysisConfig()
    if args.kinds is not None:
        kinds = pipeline.ANALYSIS_KINDS if args.kinds == "both" else (args.kinds,)
        config = dataclasses.replace(config, kinds=kinds)
    if args.events:
        config = dataclasses.replace(config, events_file=tuple(args.events))
    return config


def _write_iteration_errors(path: Path, results) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("subject,kind,normal_kind,iteration,err_normal,err_mirrored,err_combined\n")
        for result in results:
            for kind, runs in result.cv_runs.items():
                for run in runs:
                    rows = np.column_stack(
                        [run.err_normal, run.err_mirrored, run.err_combined]
                    )
                    for i, (e_n, e_m, e_c) in enumerate(rows):
                        fh.write(
                            f"{result.name},{kind},{run.kind_normal},{i},"
                            f"{fileio.FLOAT_FMT % e_n},{fileio.FLOAT_FMT % e_m},"
                            f"{fileio.FLOAT_FMT % e_c}\n"
                        )


def cmd_analyze(args) -> int:
    if args.jobs < 1:
        raise ValidationError("--jobs must be at least 1")
    config = _load_config(args)

    event_paths = list(config.events_file) if config.events_file else None
    if event_paths is not None and len(event_paths) != len(args.data):
        raise ValidationError(
            f"{len(event_paths)} events file(s) for {len(args.data)} data file(s); "
            "counts must match"
        )

    subjects = []
    for i, data_path in enumerate(args.data):
        train = fileio.read_events_csv(event_paths[i]) if event_paths else None
        series = fileio.read_timeseries_csv(data_path)
        subjects.append(
            pipeline.prepare_subject(Path(data_path).stem, series, config, events=train)
        )

    report, results = pipeline.analyze_cohort(subjects, config, args.seed, jobs=args.jobs)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    fileio.write_json(report_path, report)
    if args.write_iterations:
        _write_iteration_errors(out_dir / "iteration_errors.csv", results)

    print(f"analyzed {len(subjects)} subject(s); report: {report_path}")
    for kind in config.kinds:
        tests = report["tests"][kind]
        means = np.array(
            [
                [s["kinds"][kind][f"mean_{m}"] for m in ("normal", "mirrored", "combined")]
                for s in report["subjects"]
            ]
        ).mean(axis=0)
        print(
            f"[{kind}] mean errors: normal {means[0]:.4g}, mirrored {means[1]:.4g}, "
            f"combined {means[2]:.4g}"
        )
        p_mirror = tests["mirrored_greater_than_normal"]["p_value"]
        p_comb = tests["normal_greater_than_combined"]["p_value"]
        p_unc = tests["uncertainty_asymmetric_greater_than_symmetric"]["p_value"]

        def show(p) -> str:
            return "n/a" if p is None else f"{p:.4g}"

        print(
            f"[{kind}] p(mirrored>normal) {show(p_mirror)}, "
            f"p(normal>combined) {show(p_comb)}, "
            f"p(uncertainty asym>sym) {show(p_unc)}"
        )
    return 0


def cmd_report(args) -> int:
    report = fileio.read_json(args.report)
    schema = report.get("schema")
    if schema != pipeline.SCHEMA:
        raise ValidationError(
            f"unsupported report schema {schema!r}; expected {pipeline.SCHEMA!r}"
        )
    out_dir = Path(args.out_dir)
    csvs = figures.write_figure_csvs(report, out_dir)
    pngs = figures.render_figures(report, out_dir)
    for path in [*csvs, *pngs]:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
