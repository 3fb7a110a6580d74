"""Synthetic ground truth: alternating linear maps around two fixed points.

The generated process mimics a stable limit cycle sampled at alternating
section crossings: residuals hop between sides through two linear maps with
additive Gaussian noise. Knowing the generating maps exactly makes symmetry
and asymmetry detection testable against truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .core import LEFT, RIGHT, MirrorSpec, SectionSample
from .errors import ValidationError
from .preprocess import ROLE_ANGLE, ROLE_TRIGGER, TimeSeries
from .sections import EventTrain

STANDARD_GRAVITY = 9.80665
BURN_IN_STRIDES = 10  # discarded so noisy records start near the stationary regime


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(matrix, dtype=float)))))


@dataclass(frozen=True, eq=False)
class AlternatingModel:
    """Two linear residual maps alternating around per-side fixed points.

    ``map_lr`` sends a left-event residual to the next right-event residual;
    ``map_rl`` sends that to the following left-event residual. ``noise`` is
    either an isotropic standard deviation (scalar >= 0) or a full covariance
    matrix of the additive per-transition disturbance.
    """

    map_lr: np.ndarray
    map_rl: np.ndarray
    mu_left: np.ndarray
    mu_right: np.ndarray
    noise: float | np.ndarray
    mirror: MirrorSpec
    step_period: float = 0.5

    def __post_init__(self) -> None:
        map_lr = np.asarray(self.map_lr, dtype=float)
        map_rl = np.asarray(self.map_rl, dtype=float)
        mu_left = np.asarray(self.mu_left, dtype=float)
        mu_right = np.asarray(self.mu_right, dtype=float)
        d = mu_left.shape[0]
        if mu_left.ndim != 1 or mu_right.shape != (d,):
            raise ValidationError("mu_left and mu_right must be equal-length vectors")
        if map_lr.shape != (d, d) or map_rl.shape != (d, d):
            raise ValidationError(f"maps must be {d}x{d} to match the fixed points")
        if self.mirror.dim != d:
            raise ValidationError("mirror dimension does not match the model")
        if not self.step_period > 0:
            raise ValidationError("step_period must be positive")
        noise = self.noise
        if np.ndim(noise) == 0:
            noise = float(noise)
            if noise < 0:
                raise ValidationError("noise standard deviation must be >= 0")
        else:
            noise = np.asarray(noise, dtype=float)
            if noise.shape != (d, d):
                raise ValidationError(f"noise covariance must be {d}x{d}")
            if not np.allclose(noise, noise.T, atol=1e-12):
                raise ValidationError("noise covariance must be symmetric")
            eigs = np.linalg.eigvalsh(noise)
            if eigs.min() < -1e-12 * max(1.0, eigs.max()):
                raise ValidationError("noise covariance must be positive semidefinite")
        radius = spectral_radius(map_rl @ map_lr)
        if not radius < 1.0:
            raise ValidationError(
                f"unstable model: stride-map spectral radius {radius:.6f} >= 1"
            )
        object.__setattr__(self, "map_lr", map_lr)
        object.__setattr__(self, "map_rl", map_rl)
        object.__setattr__(self, "mu_left", mu_left)
        object.__setattr__(self, "mu_right", mu_right)
        object.__setattr__(self, "noise", noise)

    @property
    def dim(self) -> int:
        return self.mu_left.shape[0]

    @property
    def has_noise(self) -> bool:
        if np.ndim(self.noise) == 0:
            return self.noise > 0
        return bool(np.any(self.noise != 0))


def make_symmetric(
    map_lr: np.ndarray,
    mu_left: np.ndarray,
    mirror: MirrorSpec,
    *,
    noise: float | np.ndarray = 0.0,
    step_period: float = 0.5,
) -> AlternatingModel:
    """Model whose right-to-left dynamics are the exact mirror of left-to-right.

    Conjugating the map and mirroring the fixed point make the mirrored
    transition statistics identical to the normal ones.
    """
    m = mirror.matrix()
    return AlternatingModel(
        map_lr=np.asarray(map_lr, dtype=float),
        map_rl=m @ np.asarray(map_lr, dtype=float) @ m.T,
        mu_left=np.asarray(mu_left, dtype=float),
        mu_right=mirror.apply(np.asarray(mu_left, dtype=float)),
        noise=noise,
        mirror=mirror,
        step_period=step_period,
    )


def perturb_asymmetry(model: AlternatingModel, delta: np.ndarray) -> AlternatingModel:
    """Add a controlled asymmetry to the right-to-left map.

    The perturbed model must remain stable; the constructor re-checks the
    stride-map spectral radius.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (model.dim, model.dim):
        raise ValidationError(f"delta must be {model.dim}x{model.dim}")
    return replace(model, map_rl=model.map_rl + delta)


def _noise_draw(model: AlternatingModel, rng: np.random.Generator, factor) -> np.ndarray:
    if not model.has_noise:
        return np.zeros(model.dim)
    if np.ndim(model.noise) == 0:
        return model.noise * rng.standard_normal(model.dim)
    return factor @ rng.standard_normal(model.dim)


def _covariance_factor(model: AlternatingModel):
    if np.ndim(model.noise) == 0:
        return None
    w, v = np.linalg.eigh(model.noise)
    return v * np.sqrt(np.clip(w, 0.0, None))


def gen_sections(model: AlternatingModel, n_strides: int, seed: int) -> list[SectionSample]:
    """Simulate alternating section states for ``n_strides`` strides.

    Each stride contributes one left event followed by one right event at a
    constant step period. For noisy models the first ``BURN_IN_STRIDES``
    strides are discarded so the emitted residuals start near the stationary
    distribution; the noise-free orbit starts exactly on the fixed points.
    Deterministic for a fixed seed.
    """
    if n_strides < 1:
        raise ValidationError("n_strides must be >= 1")
    rng = np.random.default_rng(seed)
    factor = _covariance_factor(model)
    burn = BURN_IN_STRIDES if model.has_noise else 0
    q_left = np.zeros(model.dim)
    samples: list[SectionSample] = []
    k = 0
    for stride in range(burn + n_strides):
        emit = stride >= burn
        if emit:
            k += 1
            samples.append(
                SectionSample(
                    index=k,
                    time=k * model.step_period,
                    label=LEFT,
                    state=model.mu_left + q_left,
                )
            )
        q_right = model.map_lr @ q_left + _noise_draw(model, rng, factor)
        if emit:
            k += 1
            samples.append(
                SectionSample(
                    index=k,
                    time=k * model.step_period,
                    label=RIGHT,
                    state=model.mu_right + q_right,
                )
            )
        q_left = model.map_rl @ q_right + _noise_draw(model, rng, factor)
    return samples


def _trigger_pulse(times: np.ndarray, event_times, ramp: float, hold: float) -> np.ndarray:
    """Pulse train rising through 0.5 exactly at each event time.

    Each pulse ramps linearly 0 -> 1 over [te - ramp, te + ramp], holds at 1,
    then ramps back down. With ramp wider than one sample interval, linear
    interpolation between the samples bracketing the crossing recovers the
    event time exactly.
    """
    x = np.zeros_like(times)
    for te in event_times:
        up = 0.5 + (times - te) / (2.0 * ramp)
        seg = np.clip(up, 0.0, 1.0)
        down = 1.0 - (times - (te + hold)) / (2.0 * ramp)
        seg = np.minimum(seg, np.clip(down, 0.0, 1.0))
        x = np.maximum(x, seg)
    return x


def gen_continuous_gait(
    model: AlternatingModel,
    sample_rate: float,
    cycles: int,
    seed: int,
    *,
    leg_length_m: float = 1.0,
    gravity_m_s2: float = STANDARD_GRAVITY,
) -> tuple[TimeSeries, tuple[TimeSeries, TimeSeries], EventTrain]:
    """Continuous synthetic record exercising the full analysis pipeline.

    The model state is split into an angle half and a dimensionless velocity
    half. Angle trajectories are cubic interpolations through the section
    states that also match the (re-dimensionalized) velocities at every event,
    so differentiating the angles recovers the velocity half. Per-side trigger
    channels cross their threshold exactly at the true event times. Returns
    the angle series, the (left, right) trigger pair, and the ground-truth
    event train for the emitted window, which covers exactly ``cycles``
    strides.
    """
    if model.dim % 2 != 0:
        raise ValidationError("continuous generation needs an even state dimension")
    if cycles < 1:
        raise ValidationError("cycles must be >= 1")
    stride_period = 2.0 * model.step_period
    if not sample_rate >= 20.0 / stride_period:
        raise ValidationError(
            f"sample_rate {sample_rate} Hz too low; need >= 20x the {1.0 / stride_period} Hz "
            "gait frequency"
        )
    if not leg_length_m > 0 or not gravity_m_s2 > 0:
        raise ValidationError("leg length and gravity must be positive")

    # simulate two extra strides so the emitted window is interior to the
    # spline's knot span and no trajectory extrapolation happens
    sims = gen_sections(model, cycles + 2, seed)
    knot_times = np.array([s.time for s in sims])
    states = np.vstack([s.state for s in sims])
    n_angles = model.dim // 2
    vel_scale = math.sqrt(gravity_m_s2 / leg_length_m)
    spline = CubicHermiteSpline(
        knot_times, states[:, :n_angles], states[:, n_angles:] * vel_scale, axis=0
    )

    dt = 1.0 / sample_rate
    t_start = 2.5 * model.step_period  # midway between events 2 and 3
    n_samples = int(round(cycles * stride_period * sample_rate))
    times = t_start + dt * np.arange(n_samples)

    angle_names = tuple(f"angle_{i + 1}" for i in range(n_angles))
    angles = TimeSeries(
        t0=t_start,
        dt=dt,
        data=spline(times).T,
        names=angle_names,
        roles=(ROLE_ANGLE,) * n_angles,
    )

    interior = [s for s in sims if 3 <= s.index <= 2 * cycles + 2]
    ramp = 1.5 * dt
    hold = 0.3 * model.step_period
    triggers = []
    for label, name in ((LEFT, "trigger_left"), (RIGHT, "trigger_right")):
        side_times = [s.time for s in sims if s.label == label]
        triggers.append(
            TimeSeries(
                t0=t_start,
                dt=dt,
                data=_trigger_pulse(times, side_times, ramp, hold)[None, :],
                names=(name,),
                roles=(ROLE_TRIGGER,),
            )
        )
    train = EventTrain(
        times=np.array([s.time for s in interior]),
        labels=tuple(s.label for s in interior),
    )
    return angles, (triggers[0], triggers[1]), train


def reference_symmetric_model(
    *, noise: float | np.ndarray = 0.1, step_period: float = 0.5
) -> AlternatingModel:
    """Fixed 4-dimensional symmetric validation model.

    Left-to-right map scaled to spectral radius 0.7, block-swap mirror,
    moderate fixed-point offsets. Used throughout the test suite as the
    standard data scale.
    """
    base = np.array(
        [
            [0.45, 0.25, 0.12, -0.08],
            [-0.18, 0.38, 0.05, 0.21],
            [0.10, -0.22, 0.40, 0.14],
            [0.07, 0.16, -0.11, 0.33],
        ]
    )
    map_lr = 0.7 * base / spectral_radius(base)
    mu_left = np.array([0.30, -0.20, 0.50, -0.40])
    return make_symmetric(
        map_lr,
        mu_left,
        MirrorSpec.block_swap(1),
        noise=noise,
        step_period=step_period,
    )


def reference_asymmetry(frobenius_norm: float, dim: int = 4) -> np.ndarray:
    """Fixed-direction perturbation matrix with the requested Frobenius norm."""
    rng = np.random.default_rng(20240915)
    direction = rng.standard_normal((dim, dim))
    return frobenius_norm * direction / np.linalg.norm(direction)
