"""Event-based inter-shot motion trajectories and k-space corruption.

A trajectory assigns one rigid pose to every shot. Shot 0 is always the
reference pose (all zeros) so the calibration/centre data anchors the
coordinate frame. At each event the pose changes by a primary rotation on
one of the two event axes plus small perturbations on the remaining five
parameters, and stays constant until the next event. Poses accumulate
across events.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .encoding import _apply_rigid, _fft3c
from .errors import ConfigurationError, InvalidInputError
from .volumes import RigidParams, coil_maps

# The instructed head motions (turning, nodding) are rotations whose primary
# axes we take as the x and y voxel axes; the z rotation only ever receives
# perturbation-level motion.
PRIMARY_ROT_AXES = (0, 1)


@dataclass(frozen=True)
class SeverityLevel:
    name: str
    n_events: int
    primary_bound_deg: float
    perturb_bound: float  # degrees for the third rotation, voxels for translations

    @classmethod
    def from_name(cls, name):
        try:
            return SEVERITIES[name]
        except KeyError:
            raise ConfigurationError(f"unknown severity {name!r}") from None


MILD = SeverityLevel("mild", n_events=1, primary_bound_deg=5.0, perturb_bound=1.0)
SEVERE = SeverityLevel("severe", n_events=3, primary_bound_deg=15.0, perturb_bound=5.0)
SEVERITIES = {"mild": MILD, "severe": SEVERE}


@dataclass
class MotionEvent:
    shot_index: int
    primary_axis: int
    primary_deg: float
    perturbations: RigidParams


@dataclass
class MotionTrajectory:
    """Per-shot rigid parameters, stored as an (n_shots, 6) array.

    Column layout follows RigidParams vectors: [rx, ry, rz, ty, tz, tx].
    """

    per_shot: np.ndarray
    events: list = field(default_factory=list)

    def __post_init__(self):
        arr = np.asarray(self.per_shot, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 6:
            raise InvalidInputError(f"trajectory must be (n_shots, 6), got {arr.shape}")
        self.per_shot = arr

    @classmethod
    def zero(cls, n_shots):
        return cls(per_shot=np.zeros((n_shots, 6)))

    @property
    def n_shots(self):
        return self.per_shot.shape[0]

    def params(self, shot) -> RigidParams:
        return RigidParams.from_vector(self.per_shot[shot])

    def to_json(self):
        return json.dumps([[float(v) for v in row] for row in self.per_shot])

    @classmethod
    def from_json(cls, text):
        return cls(per_shot=np.asarray(json.loads(text), dtype=np.float64))


def sample_trajectory(sev: SeverityLevel, n_shots, seed) -> MotionTrajectory:
    """Draw an event-based trajectory at the given severity, reproducibly."""
    if sev.n_events >= n_shots:
        raise ConfigurationError(
            f"{sev.n_events} events do not fit into {n_shots} shots "
            "(shot 0 is reserved for the reference pose)"
        )
    rng = np.random.default_rng(seed)
    event_shots = np.sort(rng.choice(np.arange(1, n_shots), size=sev.n_events, replace=False))

    per_shot = np.zeros((n_shots, 6))
    events = []
    pose = np.zeros(6)
    for shot in event_shots:
        axis = int(rng.choice(PRIMARY_ROT_AXES))
        delta = np.zeros(6)
        delta[axis] = rng.uniform(-sev.primary_bound_deg, sev.primary_bound_deg)
        for k in range(6):
            if k != axis:
                delta[k] = rng.uniform(-sev.perturb_bound, sev.perturb_bound)
        pose = pose + delta
        per_shot[shot:] = pose
        events.append(
            MotionEvent(
                shot_index=int(shot),
                primary_axis=axis,
                primary_deg=float(delta[axis]),
                perturbations=RigidParams.from_vector(np.where(np.arange(6) == axis, 0.0, delta)),
            )
        )
    return MotionTrajectory(per_shot=per_shot, events=events)


def group_shots_by_pose(per_shot):
    """Group shot indices sharing an identical pose (piecewise-constant trajectories)."""
    groups = {}
    for s, row in enumerate(per_shot):
        groups.setdefault(tuple(row), []).append(s)
    return [(np.asarray(key), shots) for key, shots in groups.items()]


def corrupt(img, coils, plan, traj: MotionTrajectory):
    """Simulate motion-corrupted undersampled multi-coil k-space.

    Returns an (n_coils, ny, nz, nx) array on the full grid with zeros at
    unsampled lines. Shots sharing a pose are encoded together.
    """
    img = np.asarray(img, dtype=np.complex128)
    maps = coil_maps(coils)
    if traj.n_shots != plan.n_shots:
        raise InvalidInputError(
            f"trajectory has {traj.n_shots} shots, plan has {plan.n_shots}"
        )
    if img.shape[:2] != (plan.ny, plan.nz) or maps.shape[1:] != img.shape:
        raise InvalidInputError("image / coil / plan dims are inconsistent")

    if not np.all(np.isfinite(img.view(np.float64))):
        raise InvalidInputError("corrupt: image contains non-finite entries")
    out = np.zeros((maps.shape[0],) + img.shape, dtype=np.complex128)
    for pose, shots in group_shots_by_pose(traj.per_shot):
        moved = _apply_rigid(img, RigidParams.from_vector(pose))
        ky = np.concatenate([plan.shot_lines(s)[0] for s in shots])
        kz = np.concatenate([plan.shot_lines(s)[1] for s in shots])
        for c in range(maps.shape[0]):
            ksp = _fft3c(maps[c] * moved)
            out[c, ky, kz, :] = ksp[ky, kz, :]
    return out
