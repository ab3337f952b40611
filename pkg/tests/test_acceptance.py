"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing its runtime budget (steady-state, resampling
kernels pre-compiled by the session fixture)."""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from momoc.encoding import adjoint_shot, encode_shot, ifft3_centered
from momoc.evalrun import EvalConfig, run_simulated_eval
from momoc.metrics import artifact_power, average_edge_strength, psnr, ssim, tenengrad
from momoc.motion import MotionTrajectory, corrupt, sample_trajectory, SEVERITIES
from momoc.phantoms import make_coil_maps, make_phantom
from momoc.pmas import ComparisonRecord, fit_bt, spearman
from momoc.recon import ReconConfig, altopt, recon_adjoint, recon_l1, threshold_shots
from momoc.sampling import generate_plan, plan_stats
from momoc.volumes import RigidParams


class Criterion:
    def __init__(self, name, budget_s):
        self.name = name
        self.budget = budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[ACCEPTANCE] {self.name}: {status} ({elapsed:.1f}s / budget {self.budget:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget, f"{self.name} exceeded its {self.budget}s budget: {elapsed:.1f}s"
        return False


def image_psnr(x, ref):
    return 10 * np.log10(1.0 / np.mean((np.abs(x) - np.abs(ref)) ** 2))


def test_adjoint_correctness():
    with Criterion("adjoint correctness (20 random instances)", 10):
        for seed in range(20):
            rng = np.random.default_rng(9000 + seed)
            dims = (16, 16, 16)
            x = rng.standard_normal(dims) + 1j * rng.standard_normal(dims)
            coils = make_coil_maps(dims, 2, seed=seed)
            plan = generate_plan(16, 16, accel=2.0, acs=(4, 4), pf_z=1.0, n_shots=4, seed=seed)
            shot = int(rng.integers(4))

            def err(p):
                ax = encode_shot(x, coils, plan, shot, p)
                y = rng.standard_normal(ax.shape) + 1j * rng.standard_normal(ax.shape)
                aty = adjoint_shot(y, coils, plan, shot, p)
                return abs(np.vdot(ax, y) - np.vdot(x, aty)) / (
                    np.linalg.norm(ax) * np.linalg.norm(y)
                )

            p_trans = RigidParams(trans_vox=rng.uniform(-3, 3, 3))
            assert err(p_trans) <= 1e-5
            p_full = RigidParams(rot_deg=rng.uniform(-15, 15, 3), trans_vox=rng.uniform(-3, 3, 3))
            assert err(p_full) <= 1e-2


def test_sampling_geometry():
    with Criterion("sampling geometry (paper-parameter plan)", 1):
        plan = generate_plan(222, 236, accel=4.94, acs=(37, 37), pf_z=0.85, n_shots=52, seed=0)
        counts = plan.lines_per_shot()
        assert plan.n_sampled == 52 * 204
        assert all(c == 204 for c in counts)
        stats = plan_stats(plan)
        assert stats["acs_complete"]
        assert stats["pf_respected"]
        assert 4.84 <= stats["achieved_accel"] <= 5.04
        centre = plan.center_block()
        assert np.all(plan.shot_of_line[centre & plan.mask.astype(bool)] == 0)


def test_solver_sanity():
    with Criterion("solver sanity (exact one-step + L1 vs adjoint)", 60):
        # full sampling, single unit coil, lambda 0, one unit step
        dims = (16, 16, 16)
        rng = np.random.default_rng(1)
        img = rng.standard_normal(dims) + 1j * rng.standard_normal(dims)
        coils = np.ones((1,) + dims, complex)
        plan = generate_plan(16, 16, accel=1.0, acs=(3, 3), pf_z=1.0, n_shots=1, seed=0)
        ksp = corrupt(img, coils, plan, MotionTrajectory.zero(1))
        cfg = ReconConfig(l1_steps=1, l1_step_size=1.0, l1_lambda=0.0)
        x = recon_l1(ksp, coils, plan, cfg=cfg)
        assert np.linalg.norm(x - ifft3_centered(ksp[0])) <= 1e-6 * np.linalg.norm(img)

        # undersampled static 64^3 head phantom: L1 beats the adjoint baseline
        dims = (64, 64, 64)
        truth = make_phantom("shepp3d", dims)
        coils = make_coil_maps(dims, 4, seed=2)
        plan = generate_plan(64, 64, accel=3.0, acs=(12, 12), pf_z=1.0, n_shots=8, seed=3)
        ksp = corrupt(truth.astype(complex), coils, plan, MotionTrajectory.zero(8))
        adj = recon_adjoint(ksp, coils, plan)
        x = recon_l1(ksp, coils, plan)
        assert image_psnr(x, truth) >= image_psnr(adj, truth)


def test_motion_recovery():
    with Criterion("motion recovery (altopt, +3 voxel event)", 300):
        dims = (64, 64, 64)
        truth = make_phantom("blobs", dims, seed=1).astype(complex)
        coils = make_coil_maps(dims, 4, seed=5)
        plan = generate_plan(64, 64, accel=3.0, acs=(12, 12), pf_z=1.0, n_shots=8, seed=3)
        gt = MotionTrajectory.zero(8)
        gt.per_shot[4:] = [0, 0, 0, 3.0, 0, 0]  # +3 voxel y-translation event at shot 4
        ksp = corrupt(truth, coils, plan, gt)

        cfg = ReconConfig(
            l1_step_size=0.5,
            l1_lambda=3e-2,
            altopt_motion_lr=0.25,
            altopt_motion_steps=2,
            altopt_early_stop=1e-5,
            altopt_max_iter=30,
        )
        uncorrected = recon_l1(ksp, coils, plan, cfg=ReconConfig(l1_lambda=3e-2))
        traj, x, dc = altopt(ksp, coils, plan, cfg=cfg)

        moved_err = np.abs(traj.per_shot[4:, 3] - 3.0).max()
        static_err = np.abs(traj.per_shot[:4, 3]).max()
        gain = image_psnr(x, truth) - image_psnr(uncorrected, truth)
        # joint estimation must at least halve the residual data inconsistency
        from momoc.recon import dc_loss_per_shot

        dc_uncorrected = dc_loss_per_shot(uncorrected, ksp, coils, plan, MotionTrajectory.zero(8))
        print(
            f"  [motion recovery] moved_err={moved_err:.3f} static_err={static_err:.3f} "
            f"gain={gain:.2f} dB dc={dc.sum():.3f} vs uncorrected {dc_uncorrected.sum():.3f}"
        )
        assert moved_err <= 0.2
        assert gain >= 6.0
        assert dc.sum() <= 0.5 * dc_uncorrected.sum()


def test_severity_ordering():
    with Criterion("severity ordering (scaled protocol)", 300):
        cfg = EvalConfig(
            dims=(32, 32, 32),
            n_volumes=5,
            n_coils=3,
            accel=2.5,
            acs=(8, 8),
            pf_z=1.0,
            n_shots=8,
            methods=("adjoint",),
        )
        run = run_simulated_eval(None, cfg, seed=42)
        assert run.errors == []
        values = {}
        for row in run.rows:
            if row["metric"] in ("psnr", "ap"):
                values[(row["volume"], row["rep"], row["severity"], row["metric"])] = row["value"]
        psnr_wins = ap_wins = 0
        psnr_mild, psnr_severe, ap_mild, ap_severe = [], [], [], []
        for vol in {k[0] for k in values}:
            for rep in (0, 1):
                pm = values[(vol, rep, "mild", "psnr")]
                ps = values[(vol, rep, "severe", "psnr")]
                am = values[(vol, rep, "mild", "ap")]
                as_ = values[(vol, rep, "severe", "ap")]
                psnr_wins += pm > ps
                ap_wins += am < as_
                psnr_mild.append(pm)
                psnr_severe.append(ps)
                ap_mild.append(am)
                ap_severe.append(as_)
        print(f"  [severity] psnr_wins={psnr_wins}/10 ap_wins={ap_wins}/10")
        assert np.mean(psnr_mild) > np.mean(psnr_severe)
        assert np.mean(ap_mild) < np.mean(ap_severe)
        assert psnr_wins >= 9
        assert ap_wins >= 9


def test_bradley_terry():
    with Criterion("Bradley-Terry (closed form + round-robin)", 10):
        scores = fit_bt(
            [ComparisonRecord("A", "B", ("a_worse", "similar"))], reg_weight=0.0
        )
        assert abs((scores.beta["A"] - scores.beta["B"]) - np.log(3.0)) < 1e-3

        rng = np.random.default_rng(42)
        n = 24
        beta_true = np.linspace(-2.5, 2.5, n)
        items = [f"item{i:02d}" for i in range(n)]
        records = []
        for i in range(n):
            for j in range(i + 1, n):
                p = 1.0 / (1.0 + np.exp(-(beta_true[i] - beta_true[j])))
                votes = tuple(
                    "a_worse" if rng.uniform() < p else "b_worse" for _ in range(2)
                )
                records.append(ComparisonRecord(items[i], items[j], votes))
        fitted = fit_bt(records)
        rho = spearman([fitted.beta[i] for i in items], beta_true)
        print(f"  [bradley-terry] round-robin spearman={rho:.4f}")
        assert rho >= 0.95


def test_metric_identities():
    with Criterion("metric identities and closed forms", 5):
        vol = make_phantom("blobs", (16, 16, 16), seed=3)
        assert psnr(vol, vol) == 100.0
        assert abs(ssim(vol, vol) - 1.0) <= 1e-9
        assert artifact_power(vol, vol) == 0.0
        assert abs(artifact_power(np.zeros_like(vol), vol) - 1.0) < 1e-12
        assert abs(artifact_power(0.5 * vol, vol) - 0.25) < 1e-12
        const = np.full((12, 12, 12), 0.4)
        assert tenengrad(const) == 0.0
        assert average_edge_strength(const) == 0.0
        x = [3.0, 1.0, 4.0, 1.5, 9.0]
        assert spearman(x, x) == 1.0
        assert spearman(x, [-v for v in x]) == -1.0
        # tie case against the explicit averaged-rank formula
        rx = np.array([1.0, 2.5, 2.5, 4.0])
        ry = np.array([1.0, 2.0, 3.0, 4.0])
        rx_c, ry_c = rx - rx.mean(), ry - ry.mean()
        expected = float(np.dot(rx_c, ry_c) / (np.linalg.norm(rx_c) * np.linalg.norm(ry_c)))
        assert spearman([1.0, 2.0, 2.0, 4.0], [10.0, 20.0, 30.0, 40.0]) == pytest.approx(
            expected, abs=1e-12
        )


def test_dc_thresholding():
    with Criterion("dc-loss shot thresholding", 1):
        losses = [0.05, 0.08, 0.95, 0.1, 0.12]  # shot 2 carries a bad estimate
        kept = threshold_shots(losses, ReconConfig())  # threshold 0.70
        assert kept == [0, 1, 3, 4]


def test_end_to_end_determinism(tmp_path):
    with Criterion("end-to-end determinism (CLI replay)", 120):
        cfg = {
            "dims": [16, 16, 16],
            "n_volumes": 2,
            "n_coils": 2,
            "accel": 2.0,
            "acs": [4, 4],
            "pf_z": 1.0,
            "n_shots": 4,
            "methods": ["adjoint"],
        }
        cfg_path = tmp_path / "eval.json"
        cfg_path.write_text(json.dumps(cfg))
        outputs = []
        for run_dir in ("run_a", "run_b"):
            out = tmp_path / run_dir
            result = subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "momoc.cli",
                    "eval",
                    "simulated",
                    "--config",
                    str(cfg_path),
                    "--seed",
                    "7",
                    "--out",
                    str(out),
                ],
                capture_output=True,
                text=True,
            )
            assert result.returncode == 0, result.stderr
            outputs.append((out / "rows.jsonl").read_bytes())
            assert (out / "run.json").exists()
        assert outputs[0] == outputs[1]
        assert len(outputs[0]) > 0
