"""Command-line interface: sweeps, threshold refinement, cat extraction, hierarchy checks.

Exit codes: 0 success, 2 config error, 3 physics-layer error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np
import yaml

from .sweep import (
    ConfigError,
    PhysicsError,
    SweepConfig,
    emit,
    find_threshold,
    load_config,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_IO = 4


def _apply_overrides(config: SweepConfig, args) -> SweepConfig:
    updates = {}
    if args.cutoff_a is not None:
        updates["cutoff_a"] = args.cutoff_a
    if args.cutoff_b is not None:
        updates["cutoff_b"] = args.cutoff_b
    if getattr(args, "out", None):
        updates["out"] = args.out
    if getattr(args, "format", None):
        updates["format"] = args.format
    return dataclasses.replace(config, **updates) if updates else config


def _cmd_sweep(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    result = run_sweep(config, workers=args.workers)
    path = config.out or f"{config.experiment}.{config.format}"
    emit(result, path, config.format)
    print(f"wrote {len(result.rows)} rows to {path}")
    for name, value in sorted(result.thresholds.items()):
        print(f"  {name} crossing near {value:.4f}")
    return EXIT_OK


def _cmd_threshold(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    name = args.witness if args.witness.startswith("s_") else f"s_{args.witness}"
    value = find_threshold(config, name)
    print(f"{name} threshold: {value:.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"witness": name, "threshold": value,
                       "parameter": config.parameter}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def _cmd_cat(args) -> int:
    from .conditioning import (
        conditional_state,
        conditional_state_at_value,
        fidelity,
        wigner,
    )
    from .states import SpdcParams, ideal_cat, spdc_state

    with open(args.config) as fh:
        raw = yaml.safe_load(fh)
    try:
        cutoffs = raw.get("cutoffs", {})
        cutoff_a = args.cutoff_a or int(cutoffs.get("a", 32))
        cutoff_b = args.cutoff_b or int(cutoffs.get("b", 64))
        xi = float(raw["xi"])
        meas = raw["measurement"]
        order = int(meas["order"])
        which = meas.get("which", "X")
        target = float(meas["target"])
        window = meas.get("window")
        method = meas.get("method", "continuum")
        sector = meas.get("sector")
        ideal = raw.get("ideal", {})
        grid = raw.get("grid", {})
        extent = float(grid.get("extent", 4.0))
        resolution = int(grid.get("resolution", 121))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}") from exc
    state = spdc_state(SpdcParams(xi=xi, cutoff_a=cutoff_a, cutoff_b=cutoff_b))
    if method == "continuum":
        rho_b, captured = conditional_state_at_value(
            state, 0, order, which, target,
            sector=int(sector) if sector is not None else None)
    elif method == "window":
        rho_b, captured = conditional_state(
            state, 0, order, which, target,
            window=float(window) if window is not None else None)
    else:
        raise ConfigError(f"unknown measurement method '{method}'")
    axis = np.linspace(-extent, extent, resolution)
    grid_w = wigner(rho_b, axis, axis)
    out = args.out or f"{raw.get('experiment', 'cat')}_wigner.csv"
    header = "x:" + ",".join(f"{v:.6g}" for v in axis)
    np.savetxt(out, grid_w.values, delimiter=",", header=header, comments="# ")
    report = {
        "xi": xi,
        "measurement": {"order": order, "which": which, "target": target,
                        "method": method},
        "captured_weight": captured,
        "wigner_integral": grid_w.integral(),
        "wigner_path": out,
    }
    if ideal:
        target_state = ideal_cat(float(ideal["alpha"]), int(ideal["components"]), cutoff_b)
        report["fidelity"] = fidelity(rho_b, target_state)
        report["ideal"] = {"alpha": float(ideal["alpha"]),
                           "components": int(ideal["components"])}
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _cmd_check_hierarchy(args) -> int:
    from .criteria import (
        cm_test_matrix_standard,
        hz_from_standard_form,
        lr_from_standard_form,
        sample_standard_forms,
        sign_with_boundary,
        w_hz,
        w_lr,
    )

    rng = np.random.default_rng(args.seed)
    samples = sample_standard_forms(args.samples, rng)
    worst_det = 0.0
    worst_identity = 0.0
    failures = 0
    for sf in samples:
        wl, wh = w_lr(sf), w_hz(sf)
        det = float(np.linalg.det(cm_test_matrix_standard(sf)).real)
        scale = max(abs(wl), abs(det), 1e-30)
        worst_det = max(worst_det, abs(wl - det) / scale)
        identity = wl - wh + ((sf.c1 + sf.c2) ** 2 / 16.0) * (
            8 * sf.n * sf.m - 4 * sf.c1 * sf.c2 + (sf.c1 - sf.c2) ** 2)
        worst_identity = max(worst_identity, abs(identity))
        slr = lr_from_standard_form(sf)
        shz = hz_from_standard_form(sf)
        scm = float(np.linalg.eigvalsh(cm_test_matrix_standard(sf))[0])
        ok = True
        if shz < -1e-7 and not (slr < 1e-7 and scm < 1e-7):
            ok = False
        s_lr_sign = sign_with_boundary(slr, 1e-7)
        s_cm_sign = sign_with_boundary(scm, 1e-7)
        if 0 not in (s_lr_sign, s_cm_sign) and s_lr_sign != s_cm_sign:
            ok = False
        if not ok:
            failures += 1
    print(f"samples:                {args.samples}")
    print(f"max |W_LR - det(M)|:    {worst_det:.3e} (relative)")
    print(f"max identity residual:  {worst_identity:.3e}")
    print(f"hierarchy failures:     {failures}")
    return EXIT_OK if failures == 0 else EXIT_PHYSICS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngsteer",
        description="Non-Gaussian EPR steering witnesses on truncated Fock spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--cutoff-a", type=int, default=None)
        p.add_argument("--cutoff-b", type=int, default=None)
        p.add_argument("--out", default=None)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file")
    p_sweep.add_argument("config")
    common(p_sweep)
    p_sweep.add_argument("--format", choices=("csv", "json"), default=None)
    p_sweep.add_argument("--workers", type=int, default=1)

    p_thr = sub.add_parser("threshold", help="bisect a witness sign change")
    p_thr.add_argument("config")
    p_thr.add_argument("--witness", required=True,
                       choices=("cm", "hz", "lr", "cr"))
    common(p_thr)

    p_cat = sub.add_parser("cat", help="extract a conditional cat state")
    p_cat.add_argument("config")
    common(p_cat)

    p_chk = sub.add_parser("check-hierarchy",
                           help="verify criteria-hierarchy identities on random CMs")
    p_chk.add_argument("--samples", type=int, default=1000)
    p_chk.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "sweep": _cmd_sweep,
        "threshold": _cmd_threshold,
        "cat": _cmd_cat,
        "check-hierarchy": _cmd_check_hierarchy,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsError, ValueError) as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
