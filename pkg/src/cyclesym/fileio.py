"""Delimited-text and JSON persistence for every on-disk format.

Time-series CSV: header ``time,<name>:<role>,...`` with role one of angle,
velocity, trigger; one row per sample. Events CSV: header ``time,label`` with
label L or R. Floats are written with 17 significant digits so a write/read
round trip preserves values exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .preprocess import CHANNEL_ROLES, TimeSeries
from .sections import EventTrain

FLOAT_FMT = "%.17g"


def _fmt(value: float) -> str:
    return FLOAT_FMT % float(value)


def write_timeseries_csv(path, series: TimeSeries) -> None:
    """Write a role-tagged multichannel series; roles are mandatory metadata."""
    if series.roles is None:
        raise ValidationError("cannot write a time series without channel roles")
    header = "time," + ",".join(f"{n}:{r}" for n, r in zip(series.names, series.roles))
    times = series.times()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for j in range(series.n_samples):
            row = [_fmt(times[j])] + [_fmt(v) for v in series.data[:, j]]
            fh.write(",".join(row) + "\n")


def read_timeseries_csv(path) -> TimeSeries:
    """Read a role-tagged series, checking grid uniformity and finiteness."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValidationError(f"{path}: empty file")
        columns = header.split(",")
        if columns[0] != "time" or len(columns) < 2:
            raise ValidationError(f"{path}: header must start with 'time' and name channels")
        names: list[str] = []
        roles: list[str] = []
        for col in columns[1:]:
            name, sep, role = col.rpartition(":")
            if not sep or not name:
                raise ValidationError(f"{path}: channel column {col!r} must look like name:role")
            if role not in CHANNEL_ROLES:
                raise ValidationError(f"{path}: unknown channel role {role!r} in column {col!r}")
            names.append(name)
            roles.append(role)
        try:
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValidationError(f"{path}: malformed numeric data ({exc})") from exc
    if table.shape[0] < 2:
        raise ValidationError(f"{path}: need at least 2 samples")
    if table.shape[1] != len(columns):
        raise ValidationError(
            f"{path}: rows have {table.shape[1]} fields but header names {len(columns)}"
        )
    times = table[:, 0]
    dt = (times[-1] - times[0]) / (times.shape[0] - 1)
    if not dt > 0:
        raise ValidationError(f"{path}: time column must strictly increase")
    gaps = np.diff(times)
    if np.any(np.abs(gaps - dt) > 1e-6 * dt):
        worst = int(np.argmax(np.abs(gaps - dt)))
        raise ValidationError(
            f"{path}: non-uniform sampling near row {worst + 2} "
            f"(gap {gaps[worst]:.9g}s vs {dt:.9g}s)"
        )
    return TimeSeries(
        t0=float(times[0]),
        dt=float(dt),
        data=table[:, 1:].T,
        names=tuple(names),
        roles=tuple(roles),
    )


def write_events_csv(path, train: EventTrain) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time,label\n")
        for t, lab in zip(train.times, train.labels):
            fh.write(f"{_fmt(t)},{lab}\n")


def read_events_csv(path) -> EventTrain:
    path = Path(path)
    times: list[float] = []
    labels: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time,label":
            raise ValidationError(f"{path}: events header must be 'time,label'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'time,label'")
            try:
                times.append(float(parts[0]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: bad time {parts[0]!r}") from exc
            labels.append(parts[1].strip())
    if not times:
        raise ValidationError(f"{path}: no events")
    return EventTrain(times=np.array(times), labels=tuple(labels))


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object at top level")
    return payload
