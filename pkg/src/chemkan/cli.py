"""Command-line workbench.

Subcommands: generate, train, evaluate, sweep, noise-study, ignition,
bench. Each run reads an optional JSON config, applies --set overrides,
and writes a resolved config snapshot plus plot-ready columnar text files
into the output directory. Exit codes: 0 success, 1 validation error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

from . import data as D
from .deeponet import DeepOnetModel, don_train, evaluate_don_mse
from .model import (
    ChemKanConfig,
    ChemKanModel,
    count_parameters,
    load_checkpoint,
    save_checkpoint,
)
from .odeint import DivergenceError, IntegratorConfig, integrate
from .training import (
    LossConfig,
    NormalizationSpec,
    TrainingAborted,
    evaluate_mse,
    evaluate_noise_free,
    train_stage,
)

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "dataset": {
        "kind": "biodiesel",  # biodiesel | toy | manifest
        "n_train": 20,
        "n_test": 10,
        "train_manifest": None,
        "test_manifest": None,
        "toy_train_T0": [1050.0, 1100.0, 1150.0, 1200.0, 1250.0],
        "toy_test_T0": [1075.0, 1125.0, 1175.0, 1225.0],
        "noise_percent": 0.0,
    },
    "model": {
        "hidden": 4,
        "n_mu": 2,
        "grid_size": 3,
        "base": False,
        "thermo_enabled": False,
        "time_scale": None,  # auto: dataset end time for sub-second windows
    },
    "integrator": {"abs_tol": 1e-6, "rel_tol": 1e-6, "max_steps": 1_000_000},
    "loss": {"alpha_pinn": 1e-4, "pinn_enabled": False},
    "train": {"epochs_stage1": 2000, "epochs_stage2": 1000, "lr": 2e-3,
              "lr_stage2": None, "stop_below": None},  # None: reuse lr
    "noise_levels": [0.0, 1.0, 2.0, 5.0, 7.0, 10.0, 15.0],
    "sweep": {
        "chemkan_hidden": [2, 3, 4, 6],
        "don_widths": [4, 6, 8, 10],
        "presaturation": 3,
    },
    "don": {"branch": [7, 7, 7, 8], "trunk": [1, 7, 8], "output": [8, 6],
            "epochs": 10000},
}


class ValidationFailure(Exception):
    pass


def _deep_update(base, other):
    for k, v in other.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
    return base


def _apply_set(cfg, assignment):
    if "=" not in assignment:
        raise ValidationFailure(f"--set needs key=value, got {assignment!r}")
    key, _, raw = assignment.partition("=")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ValidationFailure(f"unknown config section {key!r}")
        node = node[p]
    if parts[-1] not in node:
        raise ValidationFailure(f"unknown config key {key!r}")
    node[parts[-1]] = value


def load_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        if file_cfg.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValidationFailure("unsupported config schema version")
        _deep_update(cfg, file_cfg)
    for assignment in args.set or []:
        _apply_set(cfg, assignment)
    cfg["experiment"] = args.command
    return cfg


def out_dir(args) -> str:
    root = args.out or os.environ.get("CHEMKAN_OUT", "runs")
    path = os.path.join(root, args.command)
    os.makedirs(path, exist_ok=True)
    return path


def emit_resolved(cfg, directory):
    with open(os.path.join(directory, "resolved_config.json"), "w") as fh:
        json.dump(cfg, fh, indent=1)


def int_cfg_from(cfg) -> IntegratorConfig:
    ic = cfg["integrator"]
    return IntegratorConfig(
        abs_tol=ic["abs_tol"], rel_tol=ic["rel_tol"], max_steps=ic["max_steps"]
    )


def build_datasets(cfg):
    d = cfg["dataset"]
    if d["kind"] == "biodiesel":
        train, test = D.generate_biodiesel(d["n_train"], d["n_test"], cfg["seed"])
    elif d["kind"] == "toy":
        train = D.generate_toy_exothermic(d["toy_train_T0"], cfg["seed"])
        test = D.generate_toy_exothermic(d["toy_test_T0"], cfg["seed"], split="test")
    elif d["kind"] == "manifest":
        if not d["train_manifest"]:
            raise ValidationFailure("dataset.kind=manifest needs train_manifest")
        train = D.ingest_trajectories(d["train_manifest"])
        test = (
            D.ingest_trajectories(d["test_manifest"])
            if d["test_manifest"]
            else train
        )
    else:
        raise ValidationFailure(f"unknown dataset kind {d['kind']!r}")
    return train, test


def build_model(cfg, m, t_end=1.0) -> ChemKanModel:
    mc = cfg["model"]
    ts = mc["time_scale"]
    if ts is None:
        ts = t_end if t_end < 1.0 else 1.0
    return ChemKanModel.create(
        ChemKanConfig(
            m=m,
            hidden=mc["hidden"],
            n_mu=mc["n_mu"],
            grid_size=mc["grid_size"],
            base=mc["base"],
            thermo_enabled=mc["thermo_enabled"],
            time_scale=float(ts),
        ),
        seed=cfg["seed"],
    )


def _write_table(path, header, rows):
    with open(path, "w") as fh:
        fh.write(" ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(str(v) for v in row) + "\n")


def _train_chemkan(cfg, train, test, clean_test, directory, tag=""):
    norm = NormalizationSpec.from_dataset(train)
    model = build_model(cfg, train.m, t_end=train.trajectories[0].times[-1])
    ic = int_cfg_from(cfg)
    t = cfg["train"]
    element = (
        D.TOY_ELEMENT_MATRIX
        if cfg["dataset"]["kind"] == "toy"
        else D.H2_ELEMENT_MATRIX if train.species_names == D.H2_SPECIES else None
    )
    lc1 = LossConfig(
        stage=1,
        pinn_enabled=cfg["loss"]["pinn_enabled"] and element is not None,
        alpha_pinn=cfg["loss"]["alpha_pinn"],
        element_matrix=element,
    )
    rep1 = train_stage(
        model, train, 1, t["epochs_stage1"], cfg["seed"], norm, lc1, ic,
        lr=t["lr"], test_dataset=test, clean_test_dataset=clean_test,
        stop_below=t["stop_below"],
    )
    rep1.write_text(os.path.join(directory, f"chemkan_stage1{tag}.trace"))
    reports = [rep1]
    if model.thermo_enabled:
        lc2 = LossConfig(
            stage=2, pinn_enabled=lc1.pinn_enabled,
            alpha_pinn=cfg["loss"]["alpha_pinn"], element_matrix=element,
        )
        rep2 = train_stage(
            model, train, 2, t["epochs_stage2"], cfg["seed"], norm, lc2, ic,
            lr=t["lr_stage2"] if t["lr_stage2"] is not None else t["lr"],
            test_dataset=test, clean_test_dataset=clean_test,
            stop_below=t["stop_below"],
        )
        rep2.write_text(os.path.join(directory, f"chemkan_stage2{tag}.trace"))
        reports.append(rep2)
    ck = os.path.join(directory, f"chemkan{tag}.ck.json")
    save_checkpoint(model, ck)
    return model, norm, reports, ck


# -- commands -------------------------------------------------------------------


def cmd_generate(cfg, directory):
    train, test = build_datasets(cfg)
    noise = cfg["dataset"]["noise_percent"]
    if noise > 0:
        train = D.apply_noise(train, noise, cfg["seed"])
    norm = NormalizationSpec.from_dataset(train)
    D.export_dataset(train, directory, "train", norm.to_dict())
    D.export_dataset(test, directory, "test")
    print(f"wrote {len(train.trajectories)} train / {len(test.trajectories)} "
          f"test trajectories to {directory}")


def cmd_train(cfg, directory):
    train, test = build_datasets(cfg)
    noise = cfg["dataset"]["noise_percent"]
    clean_test = test
    if noise > 0:
        train = D.apply_noise(train, noise, cfg["seed"])
    model, norm, reports, ck = _train_chemkan(cfg, train, test, clean_test, directory)
    stage = 2 if model.thermo_enabled else 1
    final = evaluate_mse(model, test, norm, stage, int_cfg_from(cfg))
    total, parts = count_parameters(model)
    print(f"checkpoint: {ck}")
    print(f"parameters: {total} {parts}")
    print(f"final test MSE: {final:.6e}")


def cmd_evaluate(cfg, directory, checkpoint, manifest):
    model = load_checkpoint(checkpoint)
    ds = D.ingest_trajectories(manifest)
    norm = NormalizationSpec.from_dataset(ds)
    stage = 2 if model.thermo_enabled else 1
    mse = evaluate_mse(model, ds, norm, stage, int_cfg_from(cfg))
    _write_table(
        os.path.join(directory, "evaluate.txt"),
        ["checkpoint", "manifest", "mse"],
        [[checkpoint, manifest, repr(mse)]],
    )
    print(f"MSE: {mse:.6e}")


def fit_loglog_slope(params, losses):
    """Least-squares slope of log10(loss) against log10(params)."""
    x = np.log10(np.asarray(params, float))
    y = np.log10(np.asarray(losses, float))
    return float(np.polyfit(x, y, 1)[0])


def cmd_sweep(cfg, directory):
    train, test = build_datasets(cfg)
    norm = NormalizationSpec.from_dataset(train)
    ic = int_cfg_from(cfg)
    rows = []
    for hidden in cfg["sweep"]["chemkan_hidden"]:
        c = copy.deepcopy(cfg)
        c["model"]["hidden"] = hidden
        c["model"]["n_mu"] = min(cfg["model"]["n_mu"], hidden)
        try:
            model, _, reports, _ = _train_chemkan(c, train, test, test, directory,
                                                  tag=f"_h{hidden}")
            n, _ = count_parameters(model)
            rows.append(["chemkan", n, reports[-1].train_mse[-1],
                         evaluate_mse(model, test, norm, 1, ic)])
        except (TrainingAborted, DivergenceError) as exc:
            rows.append(["chemkan", f"h{hidden}", "failed", str(exc)])
    for width in cfg["sweep"]["don_widths"]:
        don = DeepOnetModel.create(
            train.m, (train.m + 1, width, width, width), (1, width, width),
            (width, train.m), cfg["seed"],
            t_scale=train.trajectories[0].times[-1],
        )
        rep = don_train(don, train, cfg["don"]["epochs"], cfg["seed"], norm,
                        lr=cfg["train"]["lr"], test_dataset=test)
        rows.append(["deeponet", don.n_params, rep.train_mse[-1],
                     rep.test_mse[-1]])
    ok = [r for r in rows if r[2] != "failed"]
    for kind in ("chemkan", "deeponet"):
        pts = [(r[1], r[2]) for r in ok if r[0] == kind]
        pre = cfg["sweep"]["presaturation"]
        if len(pts) >= 2:
            sub = pts[:pre] if pre else pts
            slope = fit_loglog_slope([p for p, _ in sub], [l for _, l in sub])
            rows.append([f"{kind}_slope", len(sub), slope, ""])
    _write_table(os.path.join(directory, "sweep.txt"),
                 ["kind", "params", "train_mse", "test_mse"], rows)
    print(f"sweep table: {os.path.join(directory, 'sweep.txt')}")


def cmd_noise_study(cfg, directory):
    train_clean, test_clean = build_datasets(cfg)
    norm = NormalizationSpec.from_dataset(train_clean)
    ic = int_cfg_from(cfg)
    rows = []
    for level in cfg["noise_levels"]:
        tag = f"_n{level:g}"
        train = (D.apply_noise(train_clean, level, cfg["seed"])
                 if level > 0 else train_clean)
        test = (D.apply_noise(test_clean, level, cfg["seed"] + 1)
                if level > 0 else test_clean)
        try:
            model, _, reports, _ = _train_chemkan(
                cfg, train, test, test_clean, directory, tag=tag
            )
            ck_final = reports[-1]
            ck_nf = evaluate_noise_free(model, test_clean, norm, 1, ic)
            don = DeepOnetModel.create(
                train.m, tuple(cfg["don"]["branch"]), tuple(cfg["don"]["trunk"]),
                tuple(cfg["don"]["output"]), cfg["seed"],
                t_scale=train.trajectories[0].times[-1],
            )
            drep = don_train(don, train, cfg["don"]["epochs"], cfg["seed"],
                             norm, lr=cfg["train"]["lr"], test_dataset=test,
                             clean_test_dataset=test_clean)
            drep.write_text(os.path.join(directory, f"don{tag}.trace"))
            rows.append([level, ck_final.train_mse[-1], ck_final.test_mse[-1],
                         ck_nf, drep.train_mse[-1], drep.test_mse[-1],
                         drep.noisefree_mse[-1]])
        except (TrainingAborted, DivergenceError) as exc:
            rows.append([level, "failed", str(exc), "", "", "", ""])
    _write_table(
        os.path.join(directory, "noise_summary.txt"),
        ["percent", "ck_train", "ck_test", "ck_noisefree",
         "don_train", "don_test", "don_noisefree"],
        rows,
    )
    print(f"summary: {os.path.join(directory, 'noise_summary.txt')}")


def cmd_ignition(cfg, directory, manifest):
    ds = D.ingest_trajectories(manifest)
    rows = []
    for i, tr in enumerate(ds.trajectories):
        tau = D.ignition_delay(tr)
        rows.append([i, "none" if tau is None else repr(tau)])
    _write_table(os.path.join(directory, "ignition.txt"),
                 ["trajectory", "delay_s"], rows)
    print(f"ignition table: {os.path.join(directory, 'ignition.txt')}")


def cmd_bench(cfg, directory, checkpoint, repeats=5):
    model = load_checkpoint(checkpoint)
    from .model import full_rhs, kinetic_rhs

    train, _ = build_datasets(cfg)
    norm = NormalizationSpec.from_dataset(train)
    kind = cfg["dataset"]["kind"]
    if kind == "toy":
        oracle = lambda t, u: D.toy_rhs(u)
    elif kind == "biodiesel":
        oracle = None  # per-trajectory closure below
    else:
        raise ValidationFailure("bench needs a generatable oracle dataset")

    rows = []
    if not train.trajectories:
        _write_table(os.path.join(directory, "bench.txt"),
                     ["trajectory", "surrogate_steps", "oracle_steps",
                      "surrogate_rhs_s", "oracle_rhs_s"], rows)
        print("empty dataset; nothing to benchmark")
        return
    stage = 2 if model.thermo_enabled else 1
    ic = int_cfg_from(cfg)

    # mean RHS evaluation time, surrogate vs oracle mechanism
    u_raw = train.trajectories[0].states[0]
    u_hat = norm.normalize(u_raw)
    rhs_fn = full_rhs if model.thermo_enabled else kinetic_rhs

    def timeit(fn, n=2000):
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            for _ in range(n):
                fn()
            best = min(best, (time.perf_counter() - t0) / n)
        return best

    t_sur = timeit(lambda: rhs_fn(model, u_hat))
    if kind == "toy":
        t_orc = timeit(lambda: D.toy_rhs(u_raw))
    else:
        T = u_raw[-1]
        t_orc = timeit(lambda: D.biodiesel_rhs(u_raw[:-1], T))

    for i, tr in enumerate(train.trajectories):
        ts = model.config.time_scale
        span = (tr.times[0] / ts, tr.times[-1] / ts)
        n_state = model.m if stage == 1 else model.m + 1
        u0_hat = norm.normalize(tr.states[0])[:n_state]
        if stage == 1:
            Tn = norm.normalize(tr.states[0])[-1]
            f_sur = lambda t, y: kinetic_rhs(model, np.append(y, Tn))
        else:
            f_sur = lambda t, u: full_rhs(model, u)
        sol_s = integrate(f_sur, u0_hat, span, ic)
        if kind == "toy":
            f_orc = lambda t, u: D.toy_rhs(u)
            u0o = tr.states[0]
        else:
            T = tr.states[0, -1]
            f_orc = lambda t, c: D.biodiesel_rhs(c, T)
            u0o = tr.states[0, :-1]
        sol_o = integrate(f_orc, u0o, (tr.times[0], tr.times[-1]), ic)
        rows.append([i, sol_s.step_count, sol_o.step_count,
                     repr(t_sur), repr(t_orc)])
    _write_table(os.path.join(directory, "bench.txt"),
                 ["trajectory", "surrogate_steps", "oracle_steps",
                  "surrogate_rhs_s", "oracle_rhs_s"], rows)
    ratios = [r[1] / r[2] for r in rows]
    print(f"step-count ratio (surrogate/oracle): mean {np.mean(ratios):.2f} "
          f"min {min(ratios):.2f} max {max(ratios):.2f}")
    print(f"mean RHS time: surrogate {t_sur:.2e}s oracle {t_orc:.2e}s "
          "(detailed-chemistry solver baselines are external and not "
          "benchmarked here)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field")
    common.add_argument("--out",
                        help="output root (default $CHEMKAN_OUT or ./runs)")
    p = argparse.ArgumentParser(prog="chemkan")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common])
    sub.add_parser("train", parents=[common])
    ev = sub.add_parser("evaluate", parents=[common])
    ev.add_argument("checkpoint")
    ev.add_argument("manifest")
    sub.add_parser("sweep", parents=[common])
    sub.add_parser("noise-study", parents=[common])
    ig = sub.add_parser("ignition", parents=[common])
    ig.add_argument("manifest")
    be = sub.add_parser("bench", parents=[common])
    be.add_argument("checkpoint")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        directory = out_dir(args)
        emit_resolved(cfg, directory)
        if args.command == "generate":
            cmd_generate(cfg, directory)
        elif args.command == "train":
            cmd_train(cfg, directory)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, directory, args.checkpoint, args.manifest)
        elif args.command == "sweep":
            cmd_sweep(cfg, directory)
        elif args.command == "noise-study":
            cmd_noise_study(cfg, directory)
        elif args.command == "ignition":
            cmd_ignition(cfg, directory, args.manifest)
        elif args.command == "bench":
            cmd_bench(cfg, directory, args.checkpoint)
    except (ValidationFailure, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergenceError, TrainingAborted, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
