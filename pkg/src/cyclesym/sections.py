"""Event detection on trigger channels and state sampling at section crossings.

Events mark where the trajectory pierces the section (one per side, strictly
alternating); the state at each crossing is read off the trajectory by linear
interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LABELS, LEFT, RIGHT, SectionSample
from .errors import ValidationError
from .preprocess import TimeSeries

DIRECTIONS = ("rising", "falling")


@dataclass(frozen=True)
class EventSpec:
    """Threshold-crossing event detection parameters.

    ``debounce_s`` is the minimum accepted gap between consecutive events of
    the same side; later crossings inside the gap are discarded as chatter.
    """

    threshold: float
    debounce_s: float = 0.0
    direction: str = "rising"

    def __post_init__(self) -> None:
        if self.debounce_s < 0:
            raise ValidationError("debounce_s must be >= 0")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")


@dataclass(frozen=True, eq=False)
class EventTrain:
    """Strictly increasing event times with strictly alternating side labels."""

    times: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.shape[0] < 1:
            raise ValidationError("event train needs at least one event")
        if not np.all(np.isfinite(times)):
            raise ValidationError("event times contain NaN or infinite values")
        labels = tuple(str(l) for l in self.labels)
        if len(labels) != times.shape[0]:
            raise ValidationError(f"{len(labels)} labels for {times.shape[0]} event times")
        for i, lab in enumerate(labels):
            if lab not in LABELS:
                raise ValidationError(f"label must be one of {LABELS}, got {lab!r} at event {i + 1}")
            if i > 0 and times[i] <= times[i - 1]:
                raise ValidationError(
                    f"event times must strictly increase; violation at event {i + 1}"
                )
            if i > 0 and lab == labels[i - 1]:
                raise ValidationError(
                    f"event labels must alternate; two {lab!r} events in a row at event {i + 1}"
                )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.times.shape[0]


def _single_channel(series: TimeSeries, what: str) -> np.ndarray:
    if series.n_channels != 1:
        raise ValidationError(f"{what} must have exactly one channel, got {series.n_channels}")
    return series.data[0]


def _crossing_times(x: np.ndarray, t0: float, dt: float, spec: EventSpec) -> list[float]:
    threshold = spec.threshold
    if spec.direction == "falling":
        x = -x
        threshold = -threshold
    # a crossing sits between a sample strictly below and one at-or-above
    below = x[:-1] < threshold
    at_or_above = x[1:] >= threshold
    idx = np.nonzero(below & at_or_above)[0]
    out: list[float] = []
    for i in idx:
        frac = (threshold - x[i]) / (x[i + 1] - x[i])
        t = t0 + (i + frac) * dt
        if out and t - out[-1] < spec.debounce_s:
            continue
        out.append(float(t))
    return out


def detect_events(
    left_trigger: TimeSeries, right_trigger: TimeSeries, spec: EventSpec
) -> EventTrain:
    """Detect alternating events from one trigger channel per side.

    Crossing times get sub-sample resolution by linear interpolation between
    the bracketing samples. Per-side chatter within the debounce window is
    dropped before the sides are merged; a merged train that fails to
    alternate is an error, never silently repaired.
    """
    if (
        abs(left_trigger.t0 - right_trigger.t0) > 1e-9 * max(1.0, abs(left_trigger.t0))
        or abs(left_trigger.dt - right_trigger.dt) > 1e-12 * left_trigger.dt
        or left_trigger.n_samples != right_trigger.n_samples
    ):
        raise ValidationError("left and right triggers must share the same sampling grid")
    events: list[tuple[float, str]] = []
    for series, label in ((left_trigger, LEFT), (right_trigger, RIGHT)):
        x = _single_channel(series, f"{label} trigger")
        events.extend((t, label) for t in _crossing_times(x, series.t0, series.dt, spec))
    if not events:
        raise ValidationError("no events: neither trigger crosses the threshold")
    events.sort(key=lambda e: e[0])
    return EventTrain(
        times=np.array([t for t, _ in events]),
        labels=tuple(lab for _, lab in events),
    )


def sample_sections(states: TimeSeries, train: EventTrain) -> list[SectionSample]:
    """State vector at each event time by linear interpolation.

    Every event must lie within ``[t0 + dt, t_end - dt]`` so both bracketing
    samples exist with margin; events closer to the record boundary are
    rejected.
    """
    lo = states.t0 + states.dt
    hi = states.t_end - states.dt
    slack = 1e-9 * states.dt
    samples: list[SectionSample] = []
    for k, (t, label) in enumerate(zip(train.times, train.labels), start=1):
        if t < lo - slack or t > hi + slack:
            raise ValidationError(
                f"event {k} at t={t:.6f}s outside interpolable range "
                f"[{lo:.6f}, {hi:.6f}]s"
            )
        pos = (t - states.t0) / states.dt
        i = min(int(pos), states.n_samples - 2)
        frac = pos - i
        state = states.data[:, i] * (1.0 - frac) + states.data[:, i + 1] * frac
        samples.append(SectionSample(index=k, time=float(t), label=label, state=state))
    return samples
