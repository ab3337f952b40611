"""Command-line interface.

Commands operate on files: PMV volumes, JSON plans/trajectories/configs,
JSONL metric rows and comparison logs. Every command that draws random
numbers takes --seed and is bit-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evalrun, metrics, volio
from .errors import MomocError
from .motion import SEVERITIES, MotionTrajectory, corrupt, sample_trajectory
from .phantoms import make_coil_maps, make_phantom
from .pmas import fit_bt, read_comparisons
from .recon import ReconConfig, altopt, recon_adjoint, recon_l1
from .sampling import SamplingPlan, generate_plan, plan_stats


def _read_json(path):
    return json.loads(Path(path).read_text())


def _merge_config(args, allowed):
    """Fill argparse values from a --config JSON file; explicit flags win.

    Parsers set merge-able defaults to None so an unset flag is detectable.
    """
    doc = {}
    if getattr(args, "config", None):
        doc = _read_json(args.config)
        unknown = set(doc) - set(allowed)
        if unknown:
            raise MomocError(f"unknown config keys: {sorted(unknown)}")
    for key, builtin in allowed.items():
        if getattr(args, key, None) is None:
            setattr(args, key, doc.get(key, builtin))
    return args


def _write_text(path, text):
    Path(path).write_text(text)
    print(path)


def _load_recon_config(args):
    if getattr(args, "config", None):
        return ReconConfig.from_json(Path(args.config).read_text())
    return ReconConfig()


def _dims(text):
    dims = tuple(int(v) for v in text.split(","))
    if len(dims) == 1:
        dims = dims * 3
    return dims


def cmd_phantom(args):
    _merge_config(args, {"kind": "shepp3d", "dims": "64,64,64"})
    vol = make_phantom(args.kind, _dims(args.dims), seed=args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    volio.write_volume(args.out, vol, meta={"kind": args.kind, "seed": args.seed})
    print(args.out)


def cmd_mask_gen(args):
    _merge_config(
        args,
        {"ny": 222, "nz": 236, "accel": 4.94, "acs_y": 37, "acs_z": 37,
         "pf_z": 0.85, "n_shots": 52},
    )
    plan = generate_plan(
        args.ny, args.nz, args.accel, (args.acs_y, args.acs_z), args.pf_z,
        args.n_shots, seed=args.seed,
    )
    _write_text(args.out, plan.to_json())
    print(json.dumps(plan_stats(plan), sort_keys=True))


def cmd_simulate(args):
    _merge_config(args, {"severity": "severe", "n_coils": 4})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = volio.read_volume(args.vol)
    plan = SamplingPlan.from_json(Path(args.plan).read_text())
    sev = SEVERITIES[args.severity]
    traj = sample_trajectory(sev, plan.n_shots, args.seed)
    coil_seed = args.seed + 1
    coils = make_coil_maps(truth.shape, args.n_coils, seed=coil_seed)
    ksp = corrupt(truth.astype(np.complex128), coils, plan, traj)
    for c in range(args.n_coils):
        volio.write_pmv(out_dir / f"ksp_coil{c:02d}.pmv", ksp[c])
    (out_dir / "plan.json").write_text(plan.to_json())
    (out_dir / "traj.json").write_text(traj.to_json())
    volio.write_pmv(out_dir / "truth.pmv", truth)
    meta = {
        "n_coils": args.n_coils,
        "coil_seed": coil_seed,
        "severity": args.severity,
        "seed": args.seed,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True))
    print(out_dir)


def _load_run(run_dir):
    run_dir = Path(run_dir)
    meta = _read_json(run_dir / "meta.json")
    plan = SamplingPlan.from_json((run_dir / "plan.json").read_text())
    n_coils = meta["n_coils"]
    ksp = np.stack(
        [volio.read_pmv(run_dir / f"ksp_coil{c:02d}.pmv") for c in range(n_coils)]
    )
    coils = make_coil_maps(ksp.shape[1:], n_coils, seed=meta["coil_seed"])
    return meta, plan, ksp, coils


def cmd_recon(args):
    meta, plan, ksp, coils = _load_run(args.run)
    cfg = _load_recon_config(args)
    if args.method == "adjoint":
        out = recon_adjoint(ksp, coils, plan)
    elif args.method == "l1":
        traj = None
        if args.traj:
            traj = MotionTrajectory.from_json(Path(args.traj).read_text())
        out = np.abs(recon_l1(ksp, coils, plan, traj, cfg))
    else:
        traj, x, dc = altopt(ksp, coils, plan, cfg)
        out = np.abs(x)
        Path(args.out).with_suffix(".traj.json").write_text(traj.to_json())
        Path(args.out).with_suffix(".dc.json").write_text(
            json.dumps([float(v) for v in dc])
        )
    volio.write_volume(args.out, out, meta={"method": args.method})
    print(args.out)


def cmd_metrics_paired(args):
    recons = [volio.read_volume(p) for p in args.recon]
    ref = volio.read_volume(args.ref)
    if not args.mask:
        raise MomocError("a brain mask is required for paired metrics (--mask)")
    mask = volio.read_volume(args.mask)
    rows, failures = evalrun.run_paired_eval(
        recons, ref, mask, ids=[Path(p).stem for p in args.recon],
        register=not args.no_register,
    )
    payload = "\n".join(json.dumps(r, sort_keys=True) for r in rows)
    if failures:
        payload += "\n" + "\n".join(json.dumps(f, sort_keys=True) for f in failures)
    _write_text(args.out, payload + "\n")


def cmd_metrics_free(args):
    rows = []
    for p in args.vol:
        vol = volio.read_volume(p)
        if args.mask:
            mask = volio.read_volume(args.mask)
            inside = mask > 0
            norm = np.percentile(vol[inside], metrics.NORM_PERCENTILE)
            vol = np.minimum(vol * mask / max(norm, 1e-12), 1.0)
            aes = metrics.average_edge_strength(vol, mask=mask)
        else:
            aes = metrics.average_edge_strength(vol)
        rows.append({"recon_id": Path(p).stem, "metric": "tg", "value": metrics.tenengrad(vol)})
        rows.append({"recon_id": Path(p).stem, "metric": "aes", "value": aes})
    _write_text(args.out, "\n".join(json.dumps(r, sort_keys=True) for r in rows) + "\n")


def cmd_pmas_fit(args):
    records = read_comparisons(args.comparisons)
    scores = fit_bt(records, reg_weight=args.reg_weight)
    _write_text(args.out, scores.to_json())


def cmd_correlate(args):
    rows = [json.loads(line) for line in Path(args.rows).read_text().splitlines() if line]
    scores_doc = _read_json(args.scores)
    from .pmas import PmasScores

    report = evalrun.correlate_report(rows, PmasScores(beta=scores_doc))
    _write_text(args.out, json.dumps(report, sort_keys=True))


def cmd_eval_simulated(args):
    cfg = evalrun.EvalConfig.from_json(Path(args.config).read_text()) if args.config else evalrun.EvalConfig()
    run = evalrun.run_simulated_eval(None, cfg, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "rows.jsonl").write_text(run.rows_jsonl())
    (out_dir / "run.json").write_text(run.to_json())
    print(out_dir / "rows.jsonl")


def cmd_serve(args):
    from .server import serve

    serve(
        args.volumes,
        args.comparisons,
        port=args.port,
        seed=args.seed,
        static_dir=args.static,
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="momoc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a deterministic test phantom")
    p.add_argument("--kind", choices=("shepp3d", "blobs"))
    p.add_argument("--dims")
    p.add_argument("--config", help="JSON file supplying unset flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    mask = sub.add_parser("mask", help="sampling plan tools").add_subparsers(
        dest="subcommand", required=True
    )
    p = mask.add_parser("gen", help="generate an undersampling plan")
    p.add_argument("--ny", type=int)
    p.add_argument("--nz", type=int)
    p.add_argument("--accel", type=float)
    p.add_argument("--acs-y", type=int)
    p.add_argument("--acs-z", type=int)
    p.add_argument("--pf-z", type=float)
    p.add_argument("--n-shots", type=int)
    p.add_argument("--config", help="JSON file supplying unset flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask_gen)

    p = sub.add_parser("simulate", help="motion-corrupt a volume into a run directory")
    p.add_argument("--vol", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--severity", choices=sorted(SEVERITIES))
    p.add_argument("--n-coils", type=int)
    p.add_argument("--config", help="JSON file supplying unset flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recon", help="reconstruct a simulated run directory")
    p.add_argument("method", choices=("adjoint", "l1", "altopt"))
    p.add_argument("--run", required=True)
    p.add_argument("--traj", help="known motion trajectory JSON (l1 only)")
    p.add_argument("--config", help="ReconConfig JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_recon)

    met = sub.add_parser("metrics", help="image quality metrics").add_subparsers(
        dest="subcommand", required=True
    )
    p = met.add_parser("paired", help="reference-based metrics with registration")
    p.add_argument("--recon", nargs="+", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--mask")
    p.add_argument("--no-register", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics_paired)
    p = met.add_parser("free", help="reference-free sharpness metrics")
    p.add_argument("--vol", nargs="+", required=True)
    p.add_argument("--mask")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics_free)

    pm = sub.add_parser("pmas", help="perceived-artifact scoring").add_subparsers(
        dest="subcommand", required=True
    )
    p = pm.add_parser("fit", help="fit severity scores from a comparison log")
    p.add_argument("--comparisons", required=True)
    p.add_argument("--reg-weight", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pmas_fit)

    p = sub.add_parser("correlate", help="Spearman correlation of metrics vs scores")
    p.add_argument("--rows", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    ev = sub.add_parser("eval", help="evaluation protocols").add_subparsers(
        dest="subcommand", required=True
    )
    p = ev.add_parser("simulated", help="simulated severity protocol")
    p.add_argument("--config", help="EvalConfig JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_simulated)

    p = sub.add_parser("serve", help="annotation HTTP service")
    p.add_argument("--volumes", required=True)
    p.add_argument("--comparisons", required=True)
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--static", help="directory with the browser UI")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except MomocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
