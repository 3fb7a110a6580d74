"""End-to-end analysis orchestration from raw channels to a symmetry report.

The report is a plain JSON-ready dict with schema tag ``cyclesym/1``. It is
built deterministically from (input data, configuration, seed): iteration
seeds derive from the top-level seed, dict key order is fixed by
construction, and the worker-thread count never enters the result. Only the
``created_utc`` stamp differs between two runs on identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from . import core, crossval, preprocess, sections, stats
from .errors import ValidationError

SCHEMA = "cyclesym/1"

KIND_STEP = "step"
KIND_STRIDE = "stride"
ANALYSIS_KINDS = (KIND_STEP, KIND_STRIDE)

# transition-kind pair per analysis kind; first element is the L-anchored one
KIND_PAIRS = {KIND_STEP: ("LR", "RL"), KIND_STRIDE: ("LL", "RR")}

EVENT_SOURCE_DETECTED = "detected"
EVENT_SOURCE_FILE = "file"


def _require_keys(payload: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(payload) - set(allowed))
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(unknown)}")


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything an analysis needs besides the data files and the seed.

    ``angle_channels`` selects and orders the angle columns; ``None`` takes
    every angle-role channel in file order. The default mirror assumes that
    ordering is [left side..., right side...] with equally many channels per
    side and swaps the sides; pass an explicit permutation and signs over the
    full state vector (angles then velocities) for anything else.
    """

    filter_order: int = 5
    filter_cutoff_hz: float = 10.0
    event_threshold: float = 0.5
    event_debounce_s: float = 0.0
    event_direction: str = "rising"
    events_file: tuple[str, ...] | None = None
    mirror_perm: tuple[int, ...] | None = None
    mirror_signs: tuple[float, ...] | None = None
    iterations: int = 1000
    holdout_frac: float = 0.2
    rcond: float | None = None
    leg_length_m: float = 1.0
    gravity_m_s2: float = 9.80665
    angle_channels: tuple[str, ...] | None = None
    left_trigger: str = "trigger_left"
    right_trigger: str = "trigger_right"
    kinds: tuple[str, ...] = ANALYSIS_KINDS

    def __post_init__(self) -> None:
        if not (isinstance(self.filter_order, int) and self.filter_order >= 1):
            raise ValidationError("filter_order must be a positive integer")
        if not self.filter_cutoff_hz > 0:
            raise ValidationError("filter_cutoff_hz must be positive")
        if self.event_direction not in sections.DIRECTIONS:
            raise ValidationError(f"event_direction must be one of {sections.DIRECTIONS}")
        if not self.kinds:
            raise ValidationError("kinds must name at least one analysis kind")
        for kind in self.kinds:
            if kind not in ANALYSIS_KINDS:
                raise ValidationError(f"unknown analysis kind {kind!r}")
        if len(set(self.kinds)) != len(self.kinds):
            raise ValidationError("kinds must not repeat")
        if (self.mirror_perm is None) != (self.mirror_signs is None):
            raise ValidationError("mirror_perm and mirror_signs must be given together")

    @classmethod
    def from_dict(cls, payload: dict) -> "AnalysisConfig":
        """Build from parsed config JSON, rejecting unknown keys loudly."""
        _require_keys(
            payload,
            (
                "filter",
                "events",
                "events_file",
                "mirror",
                "cv",
                "leg_length_m",
                "gravity_m_s2",
                "angle_channels",
                "left_trigger",
                "right_trigger",
                "kinds",
            ),
            "config",
        )
        kwargs: dict = {}

        filt = payload.get("filter", {})
        _require_keys(filt, ("order", "cutoff_hz"), "config.filter")
        if "order" in filt:
            kwargs["filter_order"] = filt["order"]
        if "cutoff_hz" in filt:
            kwargs["filter_cutoff_hz"] = float(filt["cutoff_hz"])

        ev = payload.get("events", {})
        _require_keys(ev, ("threshold", "debounce_s", "direction"), "config.events")
        if "threshold" in ev:
            kwargs["event_threshold"] = float(ev["threshold"])
        if "debounce_s" in ev:
            kwargs["event_debounce_s"] = float(ev["debounce_s"])
        if "direction" in ev:
            kwargs["event_direction"] = ev["direction"]

        if payload.get("events_file") is not None:
            raw = payload["events_file"]
            paths = [raw] if isinstance(raw, str) else list(raw)
            kwargs["events_file"] = tuple(str(p) for p in paths)

        mirror = payload.get("mirror")
        if mirror is not None:
            _require_keys(mirror, ("per_side", "perm", "signs"), "config.mirror")
            if "per_side" in mirror:
                if "perm" in mirror or "signs" in mirror:
                    raise ValidationError("config.mirror: give per_side or perm/signs, not both")
                spec = core.MirrorSpec.block_swap(int(mirror["per_side"]))
                kwargs["mirror_perm"] = spec.perm
                kwargs["mirror_signs"] = spec.signs
            else:
                if "perm" not in mirror or "signs" not in mirror:
                    raise ValidationError("config.mirror: perm and signs are both required")
                kwargs["mirror_perm"] = tuple(int(i) for i in mirror["perm"])
                kwargs["mirror_signs"] = tuple(float(s) for s in mirror["signs"])

        cv = payload.get("cv", {})
        _require_keys(cv, ("iterations", "holdout_frac", "rcond"), "config.cv")
        if "iterations" in cv:
            kwargs["iterations"] = cv["iterations"]
        if "holdout_frac" in cv:
            kwargs["holdout_frac"] = float(cv["holdout_frac"])
        if cv.get("rcond") is not None:
            kwargs["rcond"] = float(cv["rcond"])

        for key in ("leg_length_m", "gravity_m_s2"):
            if key in payload:
                kwargs[key] = float(payload[key])
        if payload.get("angle_channels") is not None:
            kwargs["angle_channels"] = tuple(str(n) for n in payload["angle_channels"])
        for key in ("left_trigger", "right_trigger"):
            if key in payload:
                kwargs[key] = str(payload[key])
        if "kinds" in payload:
            raw_kinds = payload["kinds"]
            if isinstance(raw_kinds, str):
                raw_kinds = ANALYSIS_KINDS if raw_kinds == "both" else (raw_kinds,)
            kwargs["kinds"] = tuple(raw_kinds)

        return cls(**kwargs)

    def to_dict(self) -> dict:
        """Canonical echo of the configuration, embedded in every report."""
        mirror: dict | None = None
        if self.mirror_perm is not None:
            mirror = {"perm": list(self.mirror_perm), "signs": list(self.mirror_signs)}
        return {
            "filter": {"order": self.filter_order, "cutoff_hz": self.filter_cutoff_hz},
            "events": {
                "threshold": self.event_threshold,
                "debounce_s": self.event_debounce_s,
                "direction": self.event_direction,
            },
            "events_file": list(self.events_file) if self.events_file else None,
            "mirror": mirror,
            "cv": {
                "iterations": self.iterations,
                "holdout_frac": self.holdout_frac,
                "rcond": self.rcond,
            },
            "leg_length_m": self.leg_length_m,
            "gravity_m_s2": self.gravity_m_s2,
            "angle_channels": list(self.angle_channels) if self.angle_channels else None,
            "left_trigger": self.left_trigger,
            "right_trigger": self.right_trigger,
            "kinds": list(self.kinds),
        }

    def event_spec(self) -> sections.EventSpec:
        return sections.EventSpec(
            threshold=self.event_threshold,
            debounce_s=self.event_debounce_s,
            direction=self.event_direction,
        )

    def mirror_for_dim(self, state_dim: int, n_angles: int) -> core.MirrorSpec:
        if self.mirror_perm is not None:
            spec = core.MirrorSpec(perm=self.mirror_perm, signs=self.mirror_signs)
            if spec.dim != state_dim:
                raise ValidationError(
                    f"mirror permutation covers {spec.dim} states but data has {state_dim}"
                )
            return spec
        if n_angles % 2 != 0:
            raise ValidationError(
                "default side-swap mirror needs an even number of angle channels; "
                "configure mirror.perm/signs explicitly"
            )
        return core.MirrorSpec.block_swap(n_angles // 2)


@dataclass(frozen=True)
class SubjectData:
    """Preprocessed per-subject inputs ready for sectioning and fitting."""

    name: str
    states: preprocess.TimeSeries
    train: sections.EventTrain
    event_source: str
    n_angles: int


@dataclass(frozen=True)
class SubjectResult:
    name: str
    event_source: str
    n_events: int
    kinematic_asymmetry: float
    fixed_points: core.FixedPointPair
    summaries: dict = field(default_factory=dict)
    cv_runs: dict = field(default_factory=dict)


def _clip_to_range(train: sections.EventTrain, states: preprocess.TimeSeries) -> sections.EventTrain:
    """Drop boundary events that lack both interpolation neighbours."""
    lo = states.t0 + states.dt - 1e-9 * states.dt
    hi = states.t_end - states.dt + 1e-9 * states.dt
    keep = (train.times >= lo) & (train.times <= hi)
    if np.all(keep):
        return train
    if not np.any(keep):
        raise ValidationError("no events fall inside the interpolable time range")
    return sections.EventTrain(
        times=train.times[keep],
        labels=tuple(lab for lab, k in zip(train.labels, keep) if k),
    )


def prepare_subject(
    name: str,
    series: preprocess.TimeSeries,
    config: AnalysisConfig,
    events: sections.EventTrain | None = None,
) -> SubjectData:
    """Filter, differentiate, scale, and locate events for one recording.

    The state vector is the filtered angles followed by their filtered
    derivatives, both nondimensionalized by the configured leg length and
    gravity. Events come from the trigger channels unless an explicit train
    is supplied.
    """
    if series.roles is None:
        raise ValidationError(f"{name}: channel roles are required")
    if config.angle_channels is not None:
        angle_names = list(config.angle_channels)
    else:
        angle_names = [
            n for n, r in zip(series.names, series.roles) if r == preprocess.ROLE_ANGLE
        ]
    if not angle_names:
        raise ValidationError(f"{name}: no angle channels found")
    angles_raw = series.select(angle_names)
    if any(r != preprocess.ROLE_ANGLE for r in angles_raw.roles):
        raise ValidationError(f"{name}: angle_channels must all carry the angle role")

    fspec = preprocess.FilterSpec(
        sample_rate_hz=series.sample_rate,
        order=config.filter_order,
        cutoff_hz=config.filter_cutoff_hz,
    )
    angles = preprocess.zero_phase_filter(angles_raw, fspec)
    velocities = preprocess.estimate_velocities(angles, fspec)
    states = preprocess.concat_channels(angles, velocities)
    states = preprocess.nondimensionalize(states, config.leg_length_m, config.gravity_m_s2)

    if events is not None:
        train = events
        source = EVENT_SOURCE_FILE
    else:
        train = sections.detect_events(
            series.select([config.left_trigger]),
            series.select([config.right_trigger]),
            config.event_spec(),
        )
        source = EVENT_SOURCE_DETECTED
    train = _clip_to_range(train, states)

    return SubjectData(
        name=name,
        states=states,
        train=train,
        event_source=source,
        n_angles=len(angle_names),
    )


def _subject_seed(seed: int, index: int) -> int:
    # independent per-subject stream, reproducible from the top-level seed
    return int(np.random.SeedSequence((seed, index)).generate_state(1, np.uint64)[0])


def analyze_kind(
    samples: Sequence[core.SectionSample],
    kind: str,
    mirror: core.MirrorSpec,
    cfg: crossval.CvConfig,
    jobs: int = 1,
) -> tuple[crossval.ConditionSummary, tuple[crossval.CvResult, crossval.CvResult]]:
    """Run both dataset orderings of one analysis kind and average them.

    The two transition datasets of a kind can differ in length by one pair;
    both are truncated to the shorter so the index-aligned mirrored sets line
    up. Each ordering treats one dataset as normal and the mirrored other as
    its symmetry counterpart.
    """
    kind_a, kind_b = KIND_PAIRS[kind]
    pairs_a = core.build_pairs(samples, kind_a)
    pairs_b = core.build_pairs(samples, kind_b)
    n = min(pairs_a.n_pairs, pairs_b.n_pairs)
    pairs_a = pairs_a.head(n)
    pairs_b = pairs_b.head(n)
    first = crossval.run_extended_cv(pairs_a, core.mirror_pairs(pairs_b, mirror), cfg, jobs=jobs)
    second = crossval.run_extended_cv(pairs_b, core.mirror_pairs(pairs_a, mirror), cfg, jobs=jobs)
    return crossval.aggregate_condition(first, second), (first, second)


def analyze_subject(
    subject: SubjectData,
    config: AnalysisConfig,
    seed: int,
    jobs: int = 1,
) -> SubjectResult:
    """Section the state trajectory and cross-validate every requested kind."""
    samples = sections.sample_sections(subject.states, subject.train)
    fixed_points = core.estimate_fixed_points(samples)
    mirror = config.mirror_for_dim(subject.states.n_channels, subject.n_angles)
    resid = core.residuals(samples, fixed_points)
    cfg = crossval.CvConfig(
        seed=seed,
        iterations=config.iterations,
        holdout_frac=config.holdout_frac,
        rcond=config.rcond,
    )
    summaries: dict = {}
    cv_runs: dict = {}
    for kind in config.kinds:
        summaries[kind], cv_runs[kind] = analyze_kind(resid, kind, mirror, cfg, jobs=jobs)
    return SubjectResult(
        name=subject.name,
        event_source=subject.event_source,
        n_events=len(subject.train),
        kinematic_asymmetry=core.kinematic_asymmetry(fixed_points, mirror),
        fixed_points=fixed_points,
        summaries=summaries,
        cv_runs=cv_runs,
    )


def _test_dict(result: stats.TestResult) -> dict:
    return {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "n_effective": result.n_effective,
        "method": result.method,
        "alternative": result.alternative,
    }


def _slope_dict(fit: stats.SlopeFit) -> dict:
    return {
        "slope": fit.slope,
        "improvement_pct": fit.improvement_pct,
        "n_points": fit.n_points,
    }


def _paired_test(x: Sequence[float], y: Sequence[float]) -> dict:
    """Across-subject one-sided test; degenerate cohorts yield a null p."""
    try:
        return _test_dict(stats.wilcoxon_signed_rank(x, y, alternative="greater"))
    except ValidationError as exc:
        return {
            "statistic": None,
            "p_value": None,
            "n_effective": 0,
            "method": None,
            "alternative": "greater",
            "note": str(exc),
        }


def _origin_slope(points: Sequence[tuple[float, float]]) -> dict:
    try:
        return _slope_dict(stats.slope_through_origin(points))
    except ValidationError as exc:
        return {"slope": None, "improvement_pct": None, "n_points": len(points), "note": str(exc)}


def _subject_block(result: SubjectResult) -> dict:
    kinds: dict = {}
    for kind, summary in result.summaries.items():
        kinds[kind] = {
            "kind_pair": list(KIND_PAIRS[kind]),
            "n_pairs": summary.n_pairs,
            "dim": summary.dim,
            "iterations": summary.iterations,
            "mean_normal": summary.mean_normal,
            "mean_mirrored": summary.mean_mirrored,
            "mean_combined": summary.mean_combined,
            "sd_normal": summary.sd_normal,
            "sd_mirrored": summary.sd_mirrored,
            "sd_combined": summary.sd_combined,
            "uncertainty_asymmetric": summary.uncertainty_asymmetric,
            "uncertainty_symmetric": summary.uncertainty_symmetric,
        }
    return {
        "name": result.name,
        "event_source": result.event_source,
        "n_events": result.n_events,
        "kinematic_asymmetry": result.kinematic_asymmetry,
        "fixed_point_left": [float(v) for v in result.fixed_points.mu_left],
        "fixed_point_right": [float(v) for v in result.fixed_points.mu_right],
        "kinds": kinds,
    }


def cohort_tests(results: Sequence[SubjectResult], kind: str) -> dict:
    """Across-subject hypothesis tests for one analysis kind.

    Each subject contributes its ordering-averaged mean errors, so the test
    sample size is the number of subjects. A mirrored error exceeding the
    normal one signals asymmetry; a normal error exceeding the combined one
    signals the pooled fit generalizing better.
    """
    normal = [r.summaries[kind].mean_normal for r in results]
    mirrored = [r.summaries[kind].mean_mirrored for r in results]
    combined = [r.summaries[kind].mean_combined for r in results]
    unc_asym = [r.summaries[kind].uncertainty_asymmetric for r in results]
    unc_sym = [r.summaries[kind].uncertainty_symmetric for r in results]
    return {
        "mirrored_greater_than_normal": _paired_test(mirrored, normal),
        "normal_greater_than_combined": _paired_test(normal, combined),
        "uncertainty_asymmetric_greater_than_symmetric": _paired_test(unc_asym, unc_sym),
    }


def cohort_slopes(results: Sequence[SubjectResult], kind: str) -> dict:
    """Origin-constrained slopes of per-subject scatter for one kind."""
    summaries = [r.summaries[kind] for r in results]
    return {
        "mirrored_vs_normal": _origin_slope(
            [(s.mean_normal, s.mean_mirrored) for s in summaries]
        ),
        "combined_vs_normal": _origin_slope(
            [(s.mean_normal, s.mean_combined) for s in summaries]
        ),
        "uncertainty_symmetric_vs_asymmetric": _origin_slope(
            [(s.uncertainty_asymmetric, s.uncertainty_symmetric) for s in summaries]
        ),
    }


def build_report(
    results: Sequence[SubjectResult],
    config: AnalysisConfig,
    seed: int,
) -> dict:
    """Assemble the schema-versioned report dict from per-subject results."""
    if not results:
        raise ValidationError("no subjects analyzed")
    tests = {kind: cohort_tests(results, kind) for kind in config.kinds}
    slopes = {kind: cohort_slopes(results, kind) for kind in config.kinds}

    step_vs_stride = None
    if KIND_STEP in config.kinds and KIND_STRIDE in config.kinds:
        comparison = crossval.compare_step_stride(
            [r.summaries[KIND_STEP] for r in results],
            [r.summaries[KIND_STRIDE] for r in results],
        )
        step_vs_stride = {
            "pairs": [[float(a), float(b)] for a, b in comparison.pairs],
            "ratios": [float(v) for v in comparison.ratios],
            "mean_ratio": comparison.mean_ratio,
            "stride_vs_step_slope": _origin_slope(
                [(float(a), float(b)) for a, b in comparison.pairs]
            ),
        }

    return {
        "schema": SCHEMA,
        "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "seed": seed,
        "config": config.to_dict(),
        "n_subjects": len(results),
        "subjects": [_subject_block(r) for r in results],
        "tests": tests,
        "slopes": slopes,
        "step_vs_stride": step_vs_stride,
    }


def analyze_cohort(
    subjects: Sequence[SubjectData],
    config: AnalysisConfig,
    seed: int,
    jobs: int = 1,
) -> tuple[dict, list[SubjectResult]]:
    """Analyze every subject with an independent derived seed, then report."""
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        raise ValidationError("seed must be an integer in [0, 2^64)")
    results = [
        analyze_subject(subject, config, _subject_seed(seed, i), jobs=jobs)
        for i, subject in enumerate(subjects)
    ]
    return build_report(results, config, seed), results
