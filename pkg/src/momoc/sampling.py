"""Cartesian undersampling masks and shot schedules.

Replicates the acquisition geometry of the paired 3D protocol: a fully
sampled auto-calibration block, partial-Fourier exclusion of the high-kz
band, uniformly random line selection elsewhere, and a quasi-random
partition of the sampled lines into near-equal shots with the central
3x3 block pinned to shot 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidInputError

ACCEL_TOLERANCE = 0.02  # achieved acceleration must sit within 2% of the request


@dataclass
class SamplingPlan:
    """Undersampling mask over (ky, kz) plus the shot index of every sampled line."""

    ny: int
    nz: int
    accel: float
    acs: tuple
    pf_z: float
    n_shots: int
    seed: int
    mask: np.ndarray = field(repr=False)  # (ny, nz) uint8
    shot_of_line: np.ndarray = field(repr=False)  # (ny, nz) int32, -1 if unsampled

    @property
    def n_sampled(self):
        return int(self.mask.sum())

    def shot_lines(self, shot):
        """(ky, kz) index arrays of the lines in `shot`, row-major order."""
        ky, kz = np.nonzero(self.shot_of_line == shot)
        return ky, kz

    def sampled_lines(self):
        """All sampled (ky, kz) pairs in row-major order."""
        return np.nonzero(self.mask)

    def lines_per_shot(self):
        counts = np.bincount(
            self.shot_of_line[self.shot_of_line >= 0], minlength=self.n_shots
        )
        return counts.astype(int)

    # -- geometry helpers -------------------------------------------------

    def acs_slices(self):
        y0 = self.ny // 2 - self.acs[0] // 2
        z0 = self.nz // 2 - self.acs[1] // 2
        return slice(y0, y0 + self.acs[0]), slice(z0, z0 + self.acs[1])

    @property
    def pf_cut(self):
        """First excluded kz index of the partial-Fourier band (high-index side)."""
        return int(round(self.pf_z * self.nz))

    def center_block(self):
        """Boolean (ny, nz) mask of the central 3x3 block of phase-encode lines."""
        blk = np.zeros((self.ny, self.nz), dtype=bool)
        cy, cz = self.ny // 2, self.nz // 2
        blk[cy - 1 : cy + 2, cz - 1 : cz + 2] = True
        return blk

    def validate(self):
        """Re-check the structural invariants; raises ConfigurationError."""
        if self.mask.shape != (self.ny, self.nz):
            raise ConfigurationError("mask shape does not match plan dims")
        sampled = self.mask.astype(bool)
        if not np.array_equal(self.shot_of_line >= 0, sampled):
            raise ConfigurationError("shot assignment does not partition the sampled set")
        if self.shot_of_line.max(initial=-1) >= self.n_shots:
            raise ConfigurationError("shot index out of range")
        ys, zs = self.acs_slices()
        if not np.all(sampled[ys, zs]):
            raise ConfigurationError("ACS block is not fully sampled")
        outside_acs = np.ones_like(sampled)
        outside_acs[ys, zs] = False
        if np.any(sampled[:, self.pf_cut :] & outside_acs[:, self.pf_cut :]):
            raise ConfigurationError("sampled lines inside the partial-Fourier band")
        counts = self.lines_per_shot()
        if counts.max() - counts.min() > 1:
            raise ConfigurationError("shot sizes differ by more than 1")
        centre = self.center_block() & sampled
        if np.any(self.shot_of_line[centre] != 0):
            raise ConfigurationError("central 3x3 lines are not all in shot 0")
        achieved = self.ny * self.nz / self.n_sampled
        if abs(achieved - self.accel) > ACCEL_TOLERANCE * self.accel:
            raise ConfigurationError(
                f"achieved acceleration {achieved:.3f} deviates more than "
                f"{ACCEL_TOLERANCE:.0%} from {self.accel}"
            )

    # -- serialization -----------------------------------------------------

    def to_json(self):
        flat = self.mask.ravel()
        runs = []
        pos = 0
        current = 0  # RLE alternates run lengths starting with zeros
        n = flat.size
        while pos < n:
            run = 0
            while pos < n and flat[pos] == current:
                run += 1
                pos += 1
            runs.append(run)
            current ^= 1
        shots = self.shot_of_line[self.sampled_lines()].tolist()
        return json.dumps(
            {
                "ny": self.ny,
                "nz": self.nz,
                "accel": self.accel,
                "acs": list(self.acs),
                "pf_z": self.pf_z,
                "n_shots": self.n_shots,
                "seed": self.seed,
                "mask_rle": runs,
                "shot_of_line": shots,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        ny, nz = doc["ny"], doc["nz"]
        flat = np.zeros(ny * nz, dtype=np.uint8)
        pos = 0
        current = 0
        for run in doc["mask_rle"]:
            if current:
                flat[pos : pos + run] = 1
            pos += run
            current ^= 1
        if pos != ny * nz:
            raise InvalidInputError("mask run lengths do not cover the grid")
        mask = flat.reshape(ny, nz)
        shot_of_line = np.full((ny, nz), -1, dtype=np.int32)
        shot_of_line[np.nonzero(mask)] = np.asarray(doc["shot_of_line"], dtype=np.int32)
        plan = cls(
            ny=ny,
            nz=nz,
            accel=doc["accel"],
            acs=tuple(doc["acs"]),
            pf_z=doc["pf_z"],
            n_shots=doc["n_shots"],
            seed=doc["seed"],
            mask=mask,
            shot_of_line=shot_of_line,
        )
        plan.validate()
        return plan


def generate_plan(ny, nz, accel, acs, pf_z, n_shots, seed) -> SamplingPlan:
    """Build a reproducible sampling plan.

    Line selection: the full ACS block, plus uniformly random lines outside
    the ACS and inside the partial-Fourier-retained band, until the sampled
    total reaches ny*nz/accel rounded to a whole number of equal shots
    (capped at the available line count). Shot assignment: uniform random
    into near-equal shots, with the sampled central 3x3 lines forced into
    shot 0.
    """
    ay, az = acs
    if accel < 1:
        raise ConfigurationError(f"acceleration must be >= 1, got {accel}")
    if not 0.5 < pf_z <= 1.0:
        raise ConfigurationError(f"partial-Fourier fraction must be in (0.5, 1], got {pf_z}")
    if n_shots < 1:
        raise ConfigurationError(f"need at least one shot, got {n_shots}")
    if ay > ny or az > nz or ay < 0 or az < 0:
        raise ConfigurationError(f"ACS block {acs} does not fit the {ny}x{nz} grid")

    rng = np.random.default_rng(seed)
    acs_mask = np.zeros((ny, nz), dtype=bool)
    y0 = ny // 2 - ay // 2
    z0 = nz // 2 - az // 2
    acs_mask[y0 : y0 + ay, z0 : z0 + az] = True

    pf_cut = int(round(pf_z * nz))
    candidates = np.zeros((ny, nz), dtype=bool)
    candidates[:, :pf_cut] = True
    candidates |= acs_mask  # the ACS is always acquired, even inside the band
    pool = candidates & ~acs_mask

    n_available = int(candidates.sum())
    n_acs = int(acs_mask.sum())
    per_shot = int(round(ny * nz / (accel * n_shots)))
    total = min(per_shot * n_shots, n_available)
    if n_acs > total:
        raise ConfigurationError(
            f"ACS block ({n_acs} lines) exceeds the sampling budget ({total})"
        )

    mask = acs_mask.copy()
    n_extra = total - n_acs
    pool_idx = np.flatnonzero(pool.ravel())
    chosen = rng.choice(pool_idx, size=n_extra, replace=False)
    mask.ravel()[chosen] = True

    # Near-equal shot sizes; remainders go to the lowest shot indices.
    base, rem = divmod(total, n_shots)
    sizes = np.full(n_shots, base, dtype=int)
    sizes[:rem] += 1

    shot_of_line = np.full((ny, nz), -1, dtype=np.int32)
    centre = np.zeros((ny, nz), dtype=bool)
    cy, cz = ny // 2, nz // 2
    centre[cy - 1 : cy + 2, cz - 1 : cz + 2] = True
    centre &= mask
    n_centre = int(centre.sum())
    if n_centre > sizes[0]:
        raise ConfigurationError("shot size too small to hold the k-space centre")
    shot_of_line[centre] = 0

    rest = np.flatnonzero((mask & ~centre).ravel())
    rest = rng.permutation(rest)
    labels = np.repeat(np.arange(n_shots, dtype=np.int32), sizes)
    labels = labels[n_centre:]  # shot 0 already holds the centre lines
    shot_of_line.ravel()[rest] = labels

    plan = SamplingPlan(
        ny=ny,
        nz=nz,
        accel=float(accel),
        acs=(ay, az),
        pf_z=float(pf_z),
        n_shots=int(n_shots),
        seed=int(seed),
        mask=mask.astype(np.uint8),
        shot_of_line=shot_of_line,
    )
    plan.validate()
    return plan


def plan_stats(plan: SamplingPlan) -> dict:
    """Invariant quantities of a plan, for reporting and tests."""
    sampled = plan.mask.astype(bool)
    ys, zs = plan.acs_slices()
    outside_acs = np.ones_like(sampled)
    outside_acs[ys, zs] = False
    return {
        "achieved_accel": plan.ny * plan.nz / plan.n_sampled,
        "lines_per_shot": plan.lines_per_shot().tolist(),
        "acs_complete": bool(np.all(sampled[ys, zs])),
        "pf_respected": not bool(
            np.any(sampled[:, plan.pf_cut :] & outside_acs[:, plan.pf_cut :])
        ),
    }
