"""Signal conditioning: smoothing, differentiation, non-dimensionalization.

Turns raw angle time series into smoothed, differentiated, unit-free state
trajectories ready for section sampling. The low-pass filter is a Butterworth
cascade of second-order sections applied forward and backward for zero phase
lag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .errors import ValidationError

ROLE_ANGLE = "angle"
ROLE_VELOCITY = "velocity"
ROLE_TRIGGER = "trigger"
CHANNEL_ROLES = (ROLE_ANGLE, ROLE_VELOCITY, ROLE_TRIGGER)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled multichannel signal.

    Attributes
    ----------
    t0 : float
        Time of the first sample, seconds.
    dt : float
        Sample interval, seconds (> 0).
    data : numpy.ndarray
        n_channels x n_samples matrix, one row per channel.
    names : tuple of str
        Channel names, one per row.
    roles : tuple of str, optional
        Channel roles from ``{"angle", "velocity", "trigger"}``. Explicit
        metadata; roles are never inferred from names.
    """

    t0: float
    dt: float
    data: np.ndarray
    names: tuple[str, ...]
    roles: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(f"data must be 2-d (channels x samples), got shape {data.shape}")
        if data.shape[1] < 2:
            raise ValidationError("need at least 2 samples")
        if not np.all(np.isfinite(data)):
            raise ValidationError("time series contains NaN or infinite entries")
        names = tuple(str(n) for n in self.names)
        if len(names) != data.shape[0]:
            raise ValidationError(
                f"{len(names)} names for {data.shape[0]} channels"
            )
        if len(set(names)) != len(names):
            raise ValidationError("channel names must be unique")
        roles = self.roles
        if roles is not None:
            roles = tuple(str(r) for r in roles)
            if len(roles) != data.shape[0]:
                raise ValidationError(f"{len(roles)} roles for {data.shape[0]} channels")
            for r in roles:
                if r not in CHANNEL_ROLES:
                    raise ValidationError(f"unknown channel role {r!r}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "roles", roles)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n_samples - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.data[self.names.index(name)]
        except ValueError:
            raise ValidationError(f"no channel named {name!r}") from None

    def select(self, names: tuple[str, ...] | list[str]) -> "TimeSeries":
        idx = [self.names.index(n) if n in self.names else -1 for n in names]
        missing = [n for n, i in zip(names, idx) if i < 0]
        if missing:
            raise ValidationError(f"no channel named {missing[0]!r}")
        return TimeSeries(
            t0=self.t0,
            dt=self.dt,
            data=self.data[idx],
            names=tuple(names),
            roles=None if self.roles is None else tuple(self.roles[i] for i in idx),
        )


def concat_channels(*series: TimeSeries) -> TimeSeries:
    """Stack channels of several series sharing the same sampling grid."""
    first = series[0]
    for ts in series[1:]:
        if (
            abs(ts.t0 - first.t0) > 1e-9 * max(1.0, abs(first.t0))
            or abs(ts.dt - first.dt) > 1e-12 * first.dt
            or ts.n_samples != first.n_samples
        ):
            raise ValidationError("cannot concatenate series on different sampling grids")
        if ts.roles is None or first.roles is None:
            raise ValidationError("all series need channel roles to concatenate")
    return TimeSeries(
        t0=first.t0,
        dt=first.dt,
        data=np.vstack([ts.data for ts in series]),
        names=tuple(n for ts in series for n in ts.names),
        roles=tuple(r for ts in series for r in ts.roles),
    )


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass Butterworth filter parameters."""

    sample_rate_hz: float
    order: int = 5
    cutoff_hz: float = 10.0

    def __post_init__(self) -> None:
        if not self.sample_rate_hz > 0:
            raise ValidationError("sample_rate_hz must be positive")
        if not (isinstance(self.order, int) and self.order >= 1):
            raise ValidationError(f"order must be a positive integer, got {self.order!r}")
        if not self.cutoff_hz > 0:
            raise ValidationError("cutoff_hz must be positive")
        if not self.cutoff_hz < self.sample_rate_hz / 2:
            raise ValidationError(
                f"cutoff {self.cutoff_hz} Hz must be below Nyquist "
                f"{self.sample_rate_hz / 2} Hz"
            )


@dataclass(frozen=True, eq=False)
class FilterCascade:
    """Discrete-time filter as a cascade of first/second order sections.

    Each section is a ``(b, a)`` coefficient pair with ``a[0] == 1`` and unit
    DC gain. Kept as a cascade (rather than one high-order polynomial) for
    numerical stability at low cutoff-to-rate ratios.
    """

    sections: tuple[tuple[np.ndarray, np.ndarray], ...]
    sample_rate_hz: float

    def dc_gains(self) -> np.ndarray:
        return np.array([b.sum() / a.sum() for b, a in self.sections])

    def frequency_response(self, freq_hz) -> np.ndarray:
        """Complex response of a single forward pass at the given frequencies."""
        w = 2.0 * math.pi * np.atleast_1d(np.asarray(freq_hz, dtype=float)) / self.sample_rate_hz
        z = np.exp(-1j * w)
        h = np.ones_like(z)
        for b, a in self.sections:
            h *= np.polyval(b[::-1], z) / np.polyval(a[::-1], z)
        return h


def butterworth_lowpass(spec: FilterSpec) -> FilterCascade:
    """Design a low-pass Butterworth cascade.

    Analog prototype poles are mapped through the bilinear transform with the
    cutoff prewarped so the half-power point lands exactly at ``cutoff_hz``.
    Conjugate pole pairs become biquads; an odd order contributes one
    first-order section. Every section is normalized to DC gain exactly 1.
    """
    n = spec.order
    k = math.tan(math.pi * spec.cutoff_hz / spec.sample_rate_hz)
    sections: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(n // 2):
        # damping of the i-th conjugate pole pair of the analog prototype
        zeta = math.sin(math.pi * (2 * i + 1) / (2 * n))
        den = 1.0 + 2.0 * zeta * k + k * k
        b = np.array([k * k, 2.0 * k * k, k * k]) / den
        a = np.array([1.0, 2.0 * (k * k - 1.0) / den, (1.0 - 2.0 * zeta * k + k * k) / den])
        sections.append((b, a))
    if n % 2 == 1:
        den = 1.0 + k
        b = np.array([k, k]) / den
        a = np.array([1.0, (k - 1.0) / den])
        sections.append((b, a))
    return FilterCascade(sections=tuple(sections), sample_rate_hz=spec.sample_rate_hz)


def _cascade_forward(cascade: FilterCascade, x: np.ndarray) -> np.ndarray:
    """One causal pass through all sections, each starting in step steady state.

    Scaling the per-section steady-state initial conditions by the section's
    first input sample removes the start-up transient for constant inputs.
    """
    y = x
    for b, a in cascade.sections:
        zi = lfilter_zi(b, a)
        y, _ = lfilter(b, a, y, zi=zi * y[0])
    return y


def _zero_phase_1d(cascade: FilterCascade, x: np.ndarray, pad: int) -> np.ndarray:
    left = 2.0 * x[0] - x[pad:0:-1]
    right = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    ext = np.concatenate([left, x, right])
    y = _cascade_forward(cascade, ext)
    y = _cascade_forward(cascade, y[::-1])[::-1]
    return y[pad : pad + x.shape[0]]


def zero_phase_filter(series: TimeSeries, spec: FilterSpec) -> TimeSeries:
    """Forward-backward low-pass filter with zero phase lag.

    The effective magnitude response is the squared single-pass response, so
    the gain at the cutoff frequency is 0.5. Edge transients are mitigated by
    odd-reflection padding of length ``3 * (order + 1)`` at each end, removed
    after filtering.
    """
    pad = 3 * (spec.order + 1)
    if series.n_samples <= pad:
        raise ValidationError(
            f"need more than {pad} samples for order-{spec.order} zero-phase filtering, "
            f"got {series.n_samples}"
        )
    cascade = butterworth_lowpass(spec)
    out = np.empty_like(series.data)
    for i in range(series.n_channels):
        out[i] = _zero_phase_1d(cascade, series.data[i], pad)
    return TimeSeries(t0=series.t0, dt=series.dt, data=out, names=series.names, roles=series.roles)


def central_difference(series: TimeSeries) -> TimeSeries:
    """Differentiate with central differences, one-sided at the endpoints.

    Keeping the endpoint samples (rather than shortening the record) lets
    section sampling work near record edges; events within one sample of the
    boundary are rejected downstream instead.
    """
    if series.n_samples < 3:
        raise ValidationError("central difference needs at least 3 samples")
    x = series.data
    v = np.empty_like(x)
    v[:, 1:-1] = (x[:, 2:] - x[:, :-2]) / (2.0 * series.dt)
    v[:, 0] = (x[:, 1] - x[:, 0]) / series.dt
    v[:, -1] = (x[:, -1] - x[:, -2]) / series.dt
    return TimeSeries(t0=series.t0, dt=series.dt, data=v, names=series.names, roles=None)


def estimate_velocities(angles: TimeSeries, spec: FilterSpec) -> TimeSeries:
    """Central-difference differentiation followed by zero-phase smoothing.

    Output channels are named ``<name>_vel`` so they can sit next to their
    source angles in one state series.
    """
    vel = zero_phase_filter(central_difference(angles), spec)
    return TimeSeries(
        t0=vel.t0,
        dt=vel.dt,
        data=vel.data,
        names=tuple(f"{n}_vel" for n in vel.names),
        roles=(ROLE_VELOCITY,) * vel.n_channels,
    )


def _check_scaling_args(series: TimeSeries, leg_length_m: float, gravity_m_s2: float) -> None:
    if not leg_length_m > 0:
        raise ValidationError("leg length must be positive")
    if not gravity_m_s2 > 0:
        raise ValidationError("gravitational acceleration must be positive")
    if series.roles is None:
        raise ValidationError("channel roles are required to scale a state series")
    if any(r == ROLE_TRIGGER for r in series.roles):
        raise ValidationError("state series must contain only angle and velocity channels")


def nondimensionalize(series: TimeSeries, leg_length_m: float, gravity_m_s2: float) -> TimeSeries:
    """Scale velocity channels by sqrt(l0/g); angle channels are unchanged.

    Removes the pendulum time constant so analyses are unit-free regardless of
    subject size.
    """
    _check_scaling_args(series, leg_length_m, gravity_m_s2)
    scale = math.sqrt(leg_length_m / gravity_m_s2)
    factors = np.array([scale if r == ROLE_VELOCITY else 1.0 for r in series.roles])
    return TimeSeries(
        t0=series.t0,
        dt=series.dt,
        data=series.data * factors[:, None],
        names=series.names,
        roles=series.roles,
    )


def dimensionalize(series: TimeSeries, leg_length_m: float, gravity_m_s2: float) -> TimeSeries:
    """Inverse of :func:`nondimensionalize`."""
    _check_scaling_args(series, leg_length_m, gravity_m_s2)
    scale = math.sqrt(gravity_m_s2 / leg_length_m)
    factors = np.array([scale if r == ROLE_VELOCITY else 1.0 for r in series.roles])
    return TimeSeries(
        t0=series.t0,
        dt=series.dt,
        data=series.data * factors[:, None],
        names=series.names,
        roles=series.roles,
    )
