"""Reconstruction solvers.

recon_adjoint: zero-filled coil-combined baseline.
recon_l1: subgradient descent on  0.5*||A(traj)x - y||^2 + lambda*||Wx||_1
with a single-level Haar W. Under unitary operators and sum-of-squares
normalised coils the default step size of 1.0 is stable, so one full step
from zero inverts a fully sampled single-coil acquisition exactly.
altopt: alternates reconstruction steps with per-shot rigid-motion
estimation, then thresholds shots on their data-consistency residual and
re-runs recon_l1 from scratch on the survivors.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.fft as sfft

from .encoding import _apply_rigid, _apply_rigid_adjoint, _fft3c, _ifft3c, translate
from .errors import (
    ConfigurationError,
    DegenerateExclusionError,
    InvalidInputError,
    SolverDivergedError,
)
from .motion import MotionTrajectory, group_shots_by_pose
from .volumes import RigidParams, coil_maps
from .wavelets import wavelet_l1


@dataclass
class ReconConfig:
    l1_steps: int = 40
    l1_step_size: float = 1.0
    l1_lambda: float = 1e-4  # wavelet weight re-scaled for unit-normalised data
    l1_shot_batched: bool = False  # cycle single-shot data terms instead of full batch
    altopt_max_iter: int = 500
    altopt_recon_steps: int = 2
    altopt_motion_steps: int = 4
    altopt_motion_lr: float = 5e-2
    altopt_early_stop: float = 0.02
    dc_threshold: float = 0.70
    rot_fd_step_deg: float = 0.05  # central-difference step for rotation gradients

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "l1_shot_batched":
                continue
            if f.name in ("altopt_early_stop", "l1_lambda"):
                if v < 0:
                    raise ConfigurationError(f"{f.name} must be >= 0, got {v}")
            elif not v > 0:
                raise ConfigurationError(f"{f.name} must be positive, got {v}")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown recon config keys: {sorted(unknown)}")
        return cls(**doc)


MOTION_GRAD_FLOOR = 0.02  # per-shot velocity norm below which steps fade out
MOTION_MOMENTUM = 0.85  # heavy-ball averaging of per-shot gradients
MOTION_WARMUP_PROGRESS = 0.2  # recon progress above which motion stays frozen
# a degree of rotation displaces edge voxels roughly half a voxel at desk
# scale; rotations step at a quarter of the translation rate so they do not
# transiently absorb translational misfit
MOTION_STEP_SCALE = np.array([0.25, 0.25, 0.25, 1.0, 1.0, 1.0])


def _zero_traj(plan):
    return MotionTrajectory.zero(plan.n_shots)


class _MotionOperator:
    """A(traj) restricted to a subset of shots, with shots grouped by pose."""

    def __init__(self, maps, plan, per_shot, shots=None):
        self.maps = maps
        self.plan = plan
        self.dims = maps.shape[1:]
        shots = list(range(plan.n_shots)) if shots is None else sorted(shots)
        self.shots = shots
        rows = np.zeros((plan.n_shots, 6)) if per_shot is None else per_shot
        self.groups = []
        for pose, members in group_shots_by_pose(rows):
            members = [s for s in members if s in set(shots)]
            if not members:
                continue
            ky = np.concatenate([plan.shot_lines(s)[0] for s in members])
            kz = np.concatenate([plan.shot_lines(s)[1] for s in members])
            self.groups.append((RigidParams.from_vector(pose), ky, kz))

    def line_mask(self):
        m = np.zeros(self.dims[:2], dtype=bool)
        for _, ky, kz in self.groups:
            m[ky, kz] = True
        return m

    def forward(self, x):
        axes = (-3, -2, -1)
        out = np.zeros((self.maps.shape[0],) + self.dims, dtype=np.complex128)
        for pose, ky, kz in self.groups:
            moved = _apply_rigid(x, pose)
            stack = sfft.ifftshift(self.maps * moved, axes=axes)
            ksp = sfft.fftshift(
                sfft.fftn(stack, norm="ortho", workers=-1, axes=axes), axes=axes
            )
            out[:, ky, kz, :] = ksp[:, ky, kz, :]
        return out

    def adjoint(self, resid):
        axes = (-3, -2, -1)
        acc = np.zeros(self.dims, dtype=np.complex128)
        grid = np.zeros((self.maps.shape[0],) + self.dims, dtype=np.complex128)
        prev = None
        for pose, ky, kz in self.groups:
            if prev is not None:  # clear only the lines the last group set
                grid[:, prev[0], prev[1], :] = 0.0
            grid[:, ky, kz, :] = resid[:, ky, kz, :]
            prev = (ky, kz)
            back = sfft.fftshift(
                sfft.ifftn(sfft.ifftshift(grid, axes=axes), norm="ortho", workers=-1, axes=axes),
                axes=axes,
            )
            part = np.sum(np.conj(self.maps) * back, axis=0)
            acc += _apply_rigid_adjoint(part, pose)
        return acc

    def restrict(self, ksp):
        out = np.zeros_like(ksp)
        for _, ky, kz in self.groups:
            out[:, ky, kz, :] = ksp[:, ky, kz, :]
        return out


def recon_adjoint(ksp, coils, plan):
    """Zero-filled adjoint reconstruction: magnitude of the coil-combined
    inverse FFT, normalised by the sensitivity sum-of-squares where nonzero."""
    ksp = np.asarray(ksp, dtype=np.complex128)
    maps = coil_maps(coils)
    if ksp.shape != maps.shape:
        raise InvalidInputError(
            f"k-space shape {ksp.shape} does not match coil maps {maps.shape}"
        )
    if not np.all(np.isfinite(ksp.view(np.float64))):
        raise InvalidInputError("recon_adjoint: k-space contains non-finite entries")
    num = np.zeros(maps.shape[1:], dtype=np.complex128)
    for c in range(maps.shape[0]):
        num += np.conj(maps[c]) * _ifft3c(ksp[c])
    sos = np.sum(np.abs(maps) ** 2, axis=0)
    out = num.copy()
    nz = sos > 1e-12
    out[nz] = num[nz] / sos[nz]
    return np.abs(out)


def recon_l1(ksp, coils, plan, traj=None, cfg=None, shots=None, loss_history=None):
    """L1-wavelet reconstruction by subgradient descent from the zero volume."""
    cfg = cfg or ReconConfig()
    ksp = np.asarray(ksp, dtype=np.complex128)
    maps = coil_maps(coils)
    traj = traj or _zero_traj(plan)
    if traj.n_shots != plan.n_shots:
        raise InvalidInputError("trajectory length does not match the plan")
    op = _MotionOperator(maps, plan, traj.per_shot, shots=shots)
    y = op.restrict(ksp)
    x = np.zeros(maps.shape[1:], dtype=np.complex128)

    shot_ops = None
    if cfg.l1_shot_batched:
        shot_ops = [
            _MotionOperator(maps, plan, traj.per_shot, shots=[s])
            for s in (op.shots if shots is None else shots)
        ]

    initial = None
    for step in range(cfg.l1_steps):
        step_op = shot_ops[step % len(shot_ops)] if shot_ops else op
        resid = step_op.forward(x) - step_op.restrict(y)
        l1_value, subgrad = wavelet_l1(x)
        loss = 0.5 * float(np.vdot(resid, resid).real) + cfg.l1_lambda * l1_value
        if initial is None:
            initial = loss
        if loss_history is not None:
            loss_history.append(loss)
        if initial > 0 and loss > 10.0 * initial:
            raise SolverDivergedError(
                f"recon_l1 diverged at step {step}: loss {loss:.3e} vs initial {initial:.3e}"
            )
        x = x - cfg.l1_step_size * (step_op.adjoint(resid) + cfg.l1_lambda * subgrad)
    return x


def dc_loss_per_shot(x, ksp, coils, plan, traj):
    """Normalised per-shot data-consistency residuals ||A_s x - y_s|| / ||y_s||."""
    x = np.asarray(x, dtype=np.complex128)
    ksp = np.asarray(ksp, dtype=np.complex128)
    maps = coil_maps(coils)
    losses = np.zeros(plan.n_shots)
    for pose, members in group_shots_by_pose(traj.per_shot):
        moved = _apply_rigid(x, RigidParams.from_vector(pose))
        coil_ksp = [_fft3c(maps[c] * moved) for c in range(maps.shape[0])]
        for s in members:
            ky, kz = plan.shot_lines(s)
            num = 0.0
            den = 0.0
            for c in range(maps.shape[0]):
                diff = coil_ksp[c][ky, kz, :] - ksp[c, ky, kz, :]
                num += float(np.vdot(diff, diff).real)
                den += float(np.vdot(ksp[c, ky, kz, :], ksp[c, ky, kz, :]).real)
            losses[s] = np.sqrt(num / den) if den > 0 else 0.0
    return losses


def threshold_shots(losses, cfg=None):
    """Shots whose residual passes the threshold; shot 0 is always retained."""
    cfg = cfg or ReconConfig()
    losses = np.asarray(losses, dtype=np.float64)
    if not np.all(np.isfinite(losses)):
        raise InvalidInputError("dc losses must be finite")
    below = losses <= cfg.dc_threshold
    if not np.any(below):
        raise DegenerateExclusionError(
            f"all {losses.size} shots exceed dc threshold {cfg.dc_threshold}"
        )
    keep = set(np.flatnonzero(below).tolist())
    keep.add(0)  # the first shot holds the k-space centre
    return sorted(keep)


# -- motion gradients ---------------------------------------------------------

_FREQ_CACHE = {}


def _fft_freqs(shape):
    """Unshifted FFT frequency grids (cycles/voxel) per axis, broadcastable."""
    key = tuple(shape)
    if key not in _FREQ_CACHE:
        grids = []
        for axis, n in enumerate(shape):
            b = [1, 1, 1]
            b[axis] = n
            grids.append(sfft.fftfreq(n).reshape(b))
        _FREQ_CACHE[key] = grids
    return _FREQ_CACHE[key]


def _ramp(shape, trans, dtype=np.complex64):
    """Separable translation phase ramp: outer product of per-axis 1D ramps."""
    fy, fz, fx = _fft_freqs(shape)
    ry = np.exp(np.asarray(-2j * np.pi * fy * trans[0], dtype=dtype))
    rz = np.exp(np.asarray(-2j * np.pi * fz * trans[1], dtype=dtype))
    rx = np.exp(np.asarray(-2j * np.pi * fx * trans[2], dtype=dtype))
    return ry * rz * rx


def _rotate32(img, rot_deg):
    if not np.any(rot_deg):
        return img
    from ._resample import resample_pull
    from .encoding import rotation_matrix

    return resample_pull(img, rotation_matrix(rot_deg).T)


class _ShotGradients:
    """Per-shot data-consistency loss and gradients w.r.t. rigid parameters.

    Works in single precision and unshifted k-space: gradients only steer
    the optimiser, the solution itself is recomputed in double precision by
    the reconstruction steps. The per-shot loss is
    0.5*||A_s x - y_s||^2 / ||y_s||^2, so its scale is data-independent.
    """

    def __init__(self, x, maps, plan, ksp, fd_step_deg):
        self.x32 = np.ascontiguousarray(x, dtype=np.complex64)
        self.x32_shifted = sfft.ifftshift(self.x32)
        # working in unshifted k-space needs ifftshift-ed image layout; the
        # rotation itself still runs in natural layout (centre conventions)
        self.maps32s = sfft.ifftshift(
            np.ascontiguousarray(maps, dtype=np.complex64), axes=(-3, -2, -1)
        )
        self.plan = plan
        self.fd = fd_step_deg
        self.dims = self.x32.shape
        ny, nz, nx = self.dims
        # shot lines as flat (ky*nz + kz) indices into unshifted k-space:
        # the centred index i lives at unshifted position (i - n//2) mod n
        shift_y = (np.arange(ny) - ny // 2) % ny
        shift_z = (np.arange(nz) - nz // 2) % nz
        self.flat_lines = []
        self.y32 = []
        for s in range(plan.n_shots):
            ky, kz = plan.shot_lines(s)
            self.flat_lines.append(shift_y[ky] * nz + shift_z[kz])
            lines = sfft.ifftshift(ksp[:, ky, kz, :], axes=-1)  # readout to unshifted order
            self.y32.append(np.ascontiguousarray(lines, dtype=np.complex64))
        self.den = [float(np.vdot(y, y).real) for y in self.y32]

    def _gather(self, coil_ksp, s):
        c, ny, nz, nx = coil_ksp.shape
        return coil_ksp.reshape(c, ny * nz, nx)[:, self.flat_lines[s], :]

    def _residual(self, s, pose, ramp=None):
        """Shot residual in unshifted k-space; also returns the translated
        rotated image's spectrum (for the analytic translation gradient)."""
        rot, trans = pose[:3], pose[3:]
        if np.any(rot):
            us = sfft.ifftshift(_rotate32(self.x32, rot))
        else:
            us = self.x32_shifted
        big_u = sfft.fftn(us, norm="ortho", workers=-1)
        if ramp is None and np.any(trans):
            ramp = _ramp(self.dims, trans)
        w = big_u * ramp if ramp is not None else big_u
        m = sfft.ifftn(w, norm="ortho", workers=-1)
        coil_ksp = sfft.fftn(self.maps32s * m, norm="ortho", workers=-1, axes=(-3, -2, -1))
        resid = self._gather(coil_ksp, s) - self.y32[s]
        return resid, w

    def loss(self, s, pose, ramp=None):
        if self.den[s] == 0.0:
            return 0.0
        resid, _ = self._residual(s, pose, ramp=ramp)
        return 0.5 * float(np.vdot(resid, resid).real) / self.den[s]

    def gradient(self, s, pose):
        """6-vector gradient: rotations by central differences, translations
        through the analytic phase-ramp derivative."""
        g = np.zeros(6)
        if self.den[s] == 0.0:
            return g
        ramp = _ramp(self.dims, pose[3:]) if np.any(pose[3:]) else None
        resid, w = self._residual(s, pose, ramp=ramp)
        c, ny, nz, nx = self.maps32s.shape[0], *self.dims
        grid = np.zeros((c, ny * nz, nx), dtype=np.complex64)
        grid[:, self.flat_lines[s], :] = resid
        back = sfft.ifftn(grid.reshape(c, ny, nz, nx), norm="ortho", workers=-1, axes=(-3, -2, -1))
        g_img = np.sum(np.conj(self.maps32s) * back, axis=0)
        big_g = sfft.fftn(g_img, norm="ortho", workers=-1)
        for a, f in enumerate(_fft_freqs(self.dims)):
            d_m = -2j * np.pi * f * w
            g[3 + a] = float(np.vdot(big_g, d_m).real) / self.den[s]
        for j in range(3):
            plus = pose.copy()
            minus = pose.copy()
            plus[j] += self.fd
            minus[j] -= self.fd
            # rotation probes share the pose's translation ramp
            g[j] = (self.loss(s, plus, ramp=ramp) - self.loss(s, minus, ramp=ramp)) / (
                2.0 * self.fd
            )
        return g


def altopt(ksp, coils, plan, cfg=None, trace=None):
    """Joint motion estimation and reconstruction by alternating optimisation.

    Returns (trajectory, final image, per-shot dc losses). Shot 0 stays at
    the reference pose: the k-space centre is acquired first and anchors the
    coordinate frame. Early stop compares the losses of the first two
    reconstruction sub-steps of an iteration, normalised by the loss at
    initialisation.
    """
    cfg = cfg or ReconConfig()
    ksp = np.asarray(ksp, dtype=np.complex128)
    maps = coil_maps(coils)
    n_shots = plan.n_shots
    per_shot = np.zeros((n_shots, 6))
    x = np.zeros(maps.shape[1:], dtype=np.complex128)
    lam = cfg.l1_lambda

    static_op = _MotionOperator(maps, plan, per_shot)
    y = static_op.restrict(ksp)
    initial = 0.5 * float(np.vdot(y, y).real)
    loss_norm = initial if initial > 0 else 1.0

    warm = False
    velocity = np.zeros_like(per_shot)
    for it in range(cfg.altopt_max_iter):
        op = _MotionOperator(maps, plan, per_shot)
        sub_losses = []
        for _ in range(cfg.altopt_recon_steps):
            resid = op.forward(x) - y
            l1_value, subgrad = wavelet_l1(x)
            loss = 0.5 * float(np.vdot(resid, resid).real) + lam * l1_value
            if initial > 0 and loss > 10.0 * initial:
                raise SolverDivergedError(
                    f"altopt diverged at iteration {it}: loss {loss:.3e}"
                )
            sub_losses.append(loss)
            x = x - cfg.l1_step_size * (op.adjoint(resid) + lam * subgrad)
        if trace is not None:
            trace.append({"iter": it, "recon_losses": list(sub_losses), "per_shot": per_shot.copy()})
        progress = abs(sub_losses[0] - sub_losses[1]) / loss_norm if len(sub_losses) >= 2 else 0.0
        if len(sub_losses) >= 2 and progress < cfg.altopt_early_stop:
            break
        # motion gradients against a cold image are dominated by the recon
        # transient; freeze the trajectory until the recon settles
        warm = warm or progress < MOTION_WARMUP_PROGRESS
        if not warm:
            continue

        shot_grad = _ShotGradients(x, maps, plan, ksp, cfg.rot_fd_step_deg)
        for _ in range(cfg.altopt_motion_steps):
            grads = np.zeros_like(per_shot)
            for s in range(n_shots):
                g = shot_grad.gradient(s, per_shot[s])
                if s == 0:
                    g[:3] = 0.0  # reference shot: translation gauge only
                # heavy-ball velocity: persistent directions (slow joint
                # modes) accumulate while refit-reaction noise cancels
                velocity[s] = MOTION_MOMENTUM * velocity[s] + (1 - MOTION_MOMENTUM) * g
                v = velocity[s]
                # normalised step: the learning rate directly sets the
                # per-update step in voxels/degrees once the shot's velocity
                # clears the noise floor, fading linearly below it
                grads[s] = MOTION_STEP_SCALE * v / max(np.linalg.norm(v), MOTION_GRAD_FLOOR)
            per_shot = per_shot - cfg.altopt_motion_lr * grads
        # translation gauge reprojection: poses shifted by shot 0's estimate
        # with the image counter-shifted is an exact model symmetry, so pin
        # shot 0 back to the reference pose through the fast motion channel
        # instead of waiting for the reconstruction to relax the drift
        t0 = per_shot[0, 3:].copy()
        if np.any(t0):
            per_shot[:, 3:] -= t0
            x = translate(x, t0)

    traj = MotionTrajectory(per_shot=per_shot)
    dc = dc_loss_per_shot(x, ksp, coils, plan, traj)
    keep = threshold_shots(dc, cfg)
    x_final = recon_l1(ksp, coils, plan, traj, cfg, shots=keep)
    return traj, x_final, dc
