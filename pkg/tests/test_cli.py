import json
import subprocess
import sys

import numpy as np

from momoc.volio import read_pmv


def momoc(*args):
    result = subprocess.run(
        [sys.executable, "-m", "momoc.cli", *args], capture_output=True, text=True
    )
    assert result.returncode == 0, result.stderr
    return result.stdout


def test_cli_workflow(tmp_path):
    # phantom -> plan -> simulate -> recon -> free metrics -> correlate
    vol_path = tmp_path / "truth.pmv"
    momoc("phantom", "--kind", "blobs", "--dims", "20,20,20", "--seed", "4", "--out", str(vol_path))
    assert read_pmv(vol_path).shape == (20, 20, 20)

    plan_path = tmp_path / "plan.json"
    out = momoc(
        "mask", "gen", "--ny", "20", "--nz", "20", "--accel", "2.0",
        "--acs-y", "6", "--acs-z", "6", "--pf-z", "1.0", "--n-shots", "4",
        "--seed", "1", "--out", str(plan_path),
    )
    stats = json.loads(out.splitlines()[1])
    assert stats["acs_complete"] and stats["pf_respected"]

    run_dir = tmp_path / "sim"
    momoc(
        "simulate", "--vol", str(vol_path), "--plan", str(plan_path),
        "--severity", "mild", "--n-coils", "2", "--seed", "9", "--out", str(run_dir),
    )
    assert (run_dir / "meta.json").exists()
    assert (run_dir / "ksp_coil00.pmv").exists()
    assert (run_dir / "traj.json").exists()

    recon_path = tmp_path / "recon.pmv"
    momoc("recon", "adjoint", "--run", str(run_dir), "--out", str(recon_path))
    rec = read_pmv(recon_path)
    assert rec.shape == (20, 20, 20)
    assert np.all(rec >= 0)

    # reconstruct with the known trajectory: should not be worse than adjoint
    l1_path = tmp_path / "recon_l1.pmv"
    cfg_path = tmp_path / "recon.json"
    cfg_path.write_text(json.dumps({"l1_steps": 10}))
    momoc(
        "recon", "l1", "--run", str(run_dir), "--traj", str(run_dir / "traj.json"),
        "--config", str(cfg_path), "--out", str(l1_path),
    )
    truth = read_pmv(vol_path)

    def psnr(x):
        return 10 * np.log10(1.0 / np.mean((np.abs(x) - truth) ** 2))

    assert psnr(read_pmv(l1_path)) >= psnr(rec) - 1e-9

    rows_path = tmp_path / "rows.jsonl"
    momoc("metrics", "free", "--vol", str(recon_path), str(l1_path), "--out", str(rows_path))
    rows = [json.loads(line) for line in rows_path.read_text().splitlines()]
    assert {r["metric"] for r in rows} == {"tg", "aes"}
    assert {r["recon_id"] for r in rows} == {"recon", "recon_l1"}

    # correlate free metrics against synthetic scores (needs >= 3 items)
    third = tmp_path / "third.pmv"
    momoc("phantom", "--kind", "blobs", "--dims", "20,20,20", "--seed", "5", "--out", str(third))
    momoc("metrics", "free", "--vol", str(recon_path), str(l1_path), str(third), "--out", str(rows_path))
    scores_path = tmp_path / "scores.json"
    scores_path.write_text(json.dumps({"recon": 1.0, "recon_l1": 0.0, "third": 2.0}))
    report_path = tmp_path / "report.json"
    momoc("correlate", "--rows", str(rows_path), "--scores", str(scores_path), "--out", str(report_path))
    report = json.loads(report_path.read_text())
    assert set(report) == {"tg", "aes"}
    assert all(-1.0 <= v["rho"] <= 1.0 for v in report.values())
