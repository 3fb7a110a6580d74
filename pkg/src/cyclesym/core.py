"""Domain types for labeled section crossings and paired transition datasets.

State vectors hold angle coordinates first and angular velocity coordinates
second, so a bilateral mirror acts blockwise on both halves. All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ValidationError

logger = logging.getLogger(__name__)

LEFT = "L"
RIGHT = "R"
LABELS = (LEFT, RIGHT)

# Transition kinds: first letter is the source side, second the target side.
STEP_KINDS = ("LR", "RL")
STRIDE_KINDS = ("LL", "RR")
TRANSITION_KINDS = STEP_KINDS + STRIDE_KINDS


def _as_state(values, *, what: str = "state") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{what} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains NaN or infinite entries")
    return arr


@dataclass(frozen=True, eq=False)
class SectionSample:
    """State vector observed at one labeled event crossing.

    Attributes
    ----------
    index : int
        1-based event number within the record.
    time : float
        Event time in seconds.
    label : str
        Side label, ``"L"`` or ``"R"``.
    state : numpy.ndarray
        State vector at the crossing, length d.
    """

    index: int
    time: float
    label: str
    state: np.ndarray

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValidationError(f"label must be one of {LABELS}, got {self.label!r}")
        object.__setattr__(self, "state", _as_state(self.state))

    @property
    def dim(self) -> int:
        return self.state.shape[0]


@dataclass(frozen=True, eq=False)
class FixedPointPair:
    """Per-side mean section states and the sample counts behind them."""

    mu_left: np.ndarray
    mu_right: np.ndarray
    n_left: int
    n_right: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu_left", _as_state(self.mu_left, what="mu_left"))
        object.__setattr__(self, "mu_right", _as_state(self.mu_right, what="mu_right"))
        if self.mu_left.shape != self.mu_right.shape:
            raise ValidationError("mu_left and mu_right must have equal length")
        if self.n_left < 1 or self.n_right < 1:
            raise ValidationError("fixed points need at least one sample per side")

    def for_label(self, label: str) -> np.ndarray:
        return self.mu_left if label == LEFT else self.mu_right


@dataclass(frozen=True)
class MirrorSpec:
    """Signed permutation expressing a left/right relabeling of coordinates.

    ``apply`` maps a state observed on one side into the coordinate frame of
    the other side: ``out[i] = signs[i] * state[perm[i]]``. Applying the
    operator twice must give back the original state, so the permutation is
    an involution and paired coordinates carry matching signs.
    """

    perm: tuple[int, ...]
    signs: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        perm = tuple(int(p) for p in self.perm)
        d = len(perm)
        if sorted(perm) != list(range(d)):
            raise ValidationError("perm must be a permutation of 0..d-1")
        signs = self.signs
        if signs is None:
            signs = (1,) * d
        signs = tuple(int(s) for s in signs)
        if len(signs) != d:
            raise ValidationError("signs length must match perm length")
        if any(s not in (-1, 1) for s in signs):
            raise ValidationError("signs must be +1 or -1")
        for i, p in enumerate(perm):
            if perm[p] != i:
                raise ValidationError("perm must be an involution (perm[perm[i]] == i)")
            if signs[i] * signs[p] != 1:
                raise ValidationError("signs must match on permuted coordinate pairs")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)

    @property
    def dim(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, d: int) -> "MirrorSpec":
        return cls(perm=tuple(range(d)))

    @classmethod
    def block_swap(cls, per_side: int) -> "MirrorSpec":
        """Mirror for the standard layout [ang_L, ang_R, vel_L, vel_R].

        ``per_side`` is the number of angle channels per side; the state
        dimension is ``4 * per_side``. Swaps the left/right halves of the
        angle block and of the velocity block, no sign flips.
        """
        if per_side < 1:
            raise ValidationError("per_side must be >= 1")
        h = per_side
        blocks = []
        for base in (0, 2 * h):
            blocks.extend(range(base + h, base + 2 * h))
            blocks.extend(range(base, base + h))
        return cls(perm=tuple(blocks))

    def apply(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape[-1] != self.dim:
            raise ValidationError(
                f"state length {state.shape[-1]} does not match mirror dimension {self.dim}"
            )
        return np.asarray(self.signs, dtype=float) * state[..., list(self.perm)]

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for i, p in enumerate(self.perm):
            m[i, p] = self.signs[i]
        return m


@dataclass(frozen=True, eq=False)
class PairedDataset:
    """Input/output residual matrices for one transition kind.

    Rows of ``x`` are source residual vectors and the matching rows of ``y``
    are the residuals one transition later, stacked in temporal order.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in TRANSITION_KINDS:
            raise ValidationError(f"kind must be one of {TRANSITION_KINDS}, got {self.kind!r}")
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 2:
            raise ValidationError("x and y must be 2-d matrices")
        if x.shape != y.shape:
            raise ValidationError(f"x and y shapes differ: {x.shape} vs {y.shape}")
        if x.shape[0] < 1:
            raise ValidationError("dataset needs at least one pair")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("dataset contains NaN or infinite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n_pairs(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def head(self, n: int) -> "PairedDataset":
        """First ``n`` pairs in temporal order."""
        if not 1 <= n <= self.n_pairs:
            raise ValidationError(f"cannot take {n} of {self.n_pairs} pairs")
        return PairedDataset(kind=self.kind, x=self.x[:n], y=self.y[:n])


def mirror_state(state: np.ndarray, mirror: MirrorSpec) -> np.ndarray:
    """Map a state into the opposite side's coordinate frame."""
    return mirror.apply(state)


def validate_section_sequence(sections: Sequence[SectionSample]) -> None:
    """Check strictly increasing times and strict L/R alternation.

    Raises ValidationError naming the first offending event index; label
    alternation failures indicate upstream event-detection problems and are
    never repaired automatically.
    """
    if len(sections) == 0:
        raise ValidationError("empty section sequence")
    dim = sections[0].dim
    for i in range(1, len(sections)):
        if sections[i].dim != dim:
            raise ValidationError(f"state dimension changes at event {sections[i].index}")
        if sections[i].time <= sections[i - 1].time:
            raise ValidationError(
                f"event times must strictly increase; violation at event {sections[i].index}"
            )
        if sections[i].label == sections[i - 1].label:
            raise ValidationError(
                f"labels must alternate L/R; two {sections[i].label!r} events in a row "
                f"at event {sections[i].index}"
            )


def estimate_fixed_points(sections: Sequence[SectionSample]) -> FixedPointPair:
    """Per-side arithmetic mean of section states."""
    left = [s.state for s in sections if s.label == LEFT]
    right = [s.state for s in sections if s.label == RIGHT]
    if not left or not right:
        missing = LEFT if not left else RIGHT
        raise ValidationError(f"no {missing!r}-labeled sections; need at least one per side")
    return FixedPointPair(
        mu_left=np.mean(left, axis=0),
        mu_right=np.mean(right, axis=0),
        n_left=len(left),
        n_right=len(right),
    )


def residuals(
    sections: Sequence[SectionSample], fixed_points: FixedPointPair
) -> list[SectionSample]:
    """Subtract each sample's side fixed point, leaving mean-zero residuals."""
    return [replace(s, state=s.state - fixed_points.for_label(s.label)) for s in sections]


def kinematic_asymmetry(fixed_points: FixedPointPair, mirror: MirrorSpec) -> float:
    """Euclidean distance between mu_left and the mirrored mu_right.

    Zero for perfectly mirror-symmetric steady-state postures. Reported as a
    descriptive quantity; no threshold is applied.
    """
    return float(np.linalg.norm(fixed_points.mu_left - mirror.apply(fixed_points.mu_right)))


def build_pairs(sections: Sequence[SectionSample], kind: str) -> PairedDataset:
    """Stack residual input/output pairs for one transition kind.

    Step kinds pair each source event with its immediate successor of the
    other side. Stride kinds pair same-side events one stride apart; to keep
    every source sample in at most one pair per dataset, consecutive stride
    transitions that would share their middle event are split into disjoint
    pairs, halving the pair count. Trailing events without a successor are
    dropped (debug-logged).
    """
    if kind not in TRANSITION_KINDS:
        raise ValidationError(f"kind must be one of {TRANSITION_KINDS}, got {kind!r}")
    validate_section_sequence(sections)
    src, dst = kind[0], kind[1]
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    if src != dst:
        for a, b in zip(sections, sections[1:]):
            if a.label == src and b.label == dst:
                xs.append(a.state)
                ys.append(b.state)
        if sections[-1].label == src:
            logger.debug(
                "build_pairs(%s): dropped trailing event %d without a paired successor",
                kind,
                sections[-1].index,
            )
    else:
        same_side = [s for s in sections if s.label == src]
        for a, b in zip(same_side[0::2], same_side[1::2]):
            xs.append(a.state)
            ys.append(b.state)
        if len(same_side) % 2 == 1:
            logger.debug(
                "build_pairs(%s): dropped trailing event %d without a paired successor",
                kind,
                same_side[-1].index,
            )
    if not xs:
        raise ValidationError(f"no complete {kind} pair in sequence of {len(sections)} events")
    return PairedDataset(kind=kind, x=np.vstack(xs), y=np.vstack(ys))


def mirror_pairs(dataset: PairedDataset, mirror: MirrorSpec) -> PairedDataset:
    """Apply the mirror operator to every input and output row.

    Used to express opposite-side transition pairs in the coordinate frame of
    the normal side, so that maps fitted on them can predict normal-side data.
    """
    return PairedDataset(
        kind=dataset.kind,
        x=mirror.apply(dataset.x),
        y=mirror.apply(dataset.y),
    )
