"""Command-line interface: ``outage-cr {outage-capacity,cr-capacity,simulate,replay}``.

Every command resolves its configuration (file values overridden by flags),
prints a short report, and writes its outputs plus ``manifest.json`` into
``--out``.  ``outage-cr replay <manifest>`` reruns a manifest and reproduces
the outputs exactly.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from outage_cr import __version__
from outage_cr import config as cfgmod
from outage_cr.config import ConfigError
from outage_cr.crcap import OptimizerOptions, ResourceCapError, brute_force_cr_capacity, cr_capacity
from outage_cr.fading import gamma0, outage_capacity
from outage_cr.protocol import run
from outage_cr.source import conditional_entropy_x_given_y

EXIT_CONFIG = 2
EXIT_RESOURCE = 3
# oracle grid used by the CLI; the warped grid resolves optima close to the simplex faces
ORACLE_GRID_STEPS = 41
ORACLE_GRID_WARP = 2.0

STATE_COLUMNS = ("g_lo", "g_hi", "trials", "errors", "error_rate")
SWEEP_COLUMNS = {"eta": ("eta", "gamma0", "capacity_bits"), "power": ("power", "gamma0", "capacity_bits")}


def _parse_sweep(text: str):
    try:
        name, rng = text.split("=", 1)
        lo, hi, step = (float(v) for v in rng.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--sweep expects name=start:stop:step, got {text!r}") from exc
    if name not in SWEEP_COLUMNS:
        raise ConfigError(f"can only sweep {sorted(SWEEP_COLUMNS)}, got {name!r}")
    if step <= 0 or hi < lo:
        raise ConfigError("--sweep needs step > 0 and stop >= start")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return name, [round(lo + k * step, 12) for k in range(count)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write(out: Path | None, name: str, text: str):
    if out is not None:
        (out / name).write_text(text, encoding="utf-8")


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _manifest(command: str, cfg: dict, seed: int | None) -> dict:
    return {
        "command": command,
        "config": _jsonable(cfg),
        "seed": seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


# --------------------------------------------------------------------------
# commands; each takes a resolved config dict and returns (report text, files)


def cmd_outage_capacity(cfg: dict) -> tuple[str, dict]:
    spec = cfgmod.fading_from(cfg)
    sweep = cfg.get("sweep")
    if sweep:
        name, values = sweep["name"], sweep["values"]
        rows = []
        for v in values:
            s = cfgmod.fading_from(cfgmod.merge(cfg, "fading", {name: v}))
            rows.append((v, gamma0(s.gain, s.eta), outage_capacity(s)))
        text = _csv(rows, SWEEP_COLUMNS[name])
        return text, {"sweep.csv": text}
    g = gamma0(spec.gain, spec.eta)
    cap = outage_capacity(spec)
    summary = {"gamma0": g, "capacity_bits": cap}
    return f"gamma0={g!r}, capacity={cap!r}\n", {"summary.json": json.dumps(summary, indent=2) + "\n"}


def _budget(cfg: dict) -> float:
    cap_sec = cfg.get("capacity", {})
    if cap_sec.get("budget_bits") is not None:
        budget = float(cap_sec["budget_bits"])
        if budget < 0:
            raise ConfigError("budget must be >= 0")
        return budget
    if "fading" not in cfg:
        raise ConfigError("give --budget-bits or a [fading] section to derive the budget")
    return outage_capacity(cfgmod.fading_from(cfg))


def cmd_cr_capacity(cfg: dict) -> tuple[str, dict]:
    src = cfgmod.source_from(cfg)
    budget = _budget(cfg)
    sec = cfg.get("capacity", {})
    if sec.get("oracle"):
        res = brute_force_cr_capacity(
            src,
            budget,
            int(sec.get("grid_steps", ORACLE_GRID_STEPS)),
            sec.get("card_u"),
            int(sec.get("max_points", 50_000_000)),
            warp=float(sec.get("grid_warp", ORACLE_GRID_WARP)),
        )
    else:
        res = cr_capacity(src, budget, OptimizerOptions(seed=int(sec.get("seed", 0))))
    summary = {
        "cr_capacity_bits": res.value,
        "excess_bits": res.excess,
        "budget_bits": budget,
        "h_x_given_y_bits": conditional_entropy_x_given_y(src),
        "method": res.method,
        "argmax": res.argmax.w.tolist(),
    }
    text = f"[{res.method}] value={res.value!r}, excess={res.excess!r}, budget={budget!r}\n"
    return text, {"summary.json": json.dumps(summary, indent=2) + "\n"}


def cmd_simulate(cfg: dict) -> tuple[str, dict]:
    src = cfgmod.source_from(cfg)
    spec = cfgmod.fading_from(cfg)
    pcfg = cfgmod.protocol_from(cfg)
    aux = cfgmod.aux_from(cfg)
    budget = None
    if aux is None:
        fraction = float(cfg.get("protocol", {}).get("budget_fraction", cfgmod.DEFAULT_BUDGET_FRACTION))
        budget = fraction * outage_capacity(spec)
        seed = int(cfg.get("capacity", {}).get("seed", 0))
        aux = cr_capacity(src, budget, OptimizerOptions(seed=seed)).argmax
    stats = run(pcfg, aux, src, spec)
    rows = [(s.g_lo, s.g_hi, s.trials, s.errors, s.error_rate) for s in stats.per_state]
    states_csv = _csv(rows, STATE_COLUMNS)
    summary = {k: v for k, v in stats.summary().items()}
    summary.update(
        {
            "outage_fraction": stats.outage_fraction,
            "capacity_bits": outage_capacity(spec),
            "budget_bits": budget,
            "N1": str(stats.N1) if stats.N1 >= 2**53 else stats.N1,
            "N2": str(stats.N2) if stats.N2 >= 2**53 else stats.N2,
        }
    )
    summary_json = json.dumps(_jsonable(summary), indent=2) + "\n"
    return states_csv + summary_json, {"states.csv": states_csv, "summary.json": summary_json}


COMMANDS = {
    "outage-capacity": cmd_outage_capacity,
    "cr-capacity": cmd_cr_capacity,
    "simulate": cmd_simulate,
}


def _resolve(args) -> dict:
    cfg = cfgmod.load(args.config) if args.config else {}
    if getattr(args, "dsbs", None) is not None:
        cfg["source"] = {"dsbs": args.dsbs}
    cfg = cfgmod.merge(cfg, "fading", {"power": args.power, "noise_var": args.noise_var, "eta": args.eta})
    if not cfg["fading"]:
        del cfg["fading"]
    if args.command == "outage-capacity" and args.sweep:
        name, values = _parse_sweep(args.sweep)
        cfg["sweep"] = {"name": name, "values": values}
    if args.command == "cr-capacity":
        cfg = cfgmod.merge(
            cfg,
            "capacity",
            {
                "budget_bits": args.budget_bits,
                "oracle": True if args.oracle else None,
                "grid_steps": args.grid_steps,
                "card_u": args.card_u,
                "grid_warp": args.grid_warp,
                "seed": args.seed,
            },
        )
    if args.command == "simulate":
        overrides = {
            "n": args.n,
            "delta": args.delta,
            "epsilon": args.epsilon,
            "alpha": args.alpha,
            "trials": args.trials,
            "seed": args.seed,
            "backend": args.backend,
            "margin": args.margin,
            "n_c": args.n_c,
            "buckets": args.buckets,
            "codebook_mode": args.codebook_mode,
            "budget_fraction": args.budget_fraction,
        }
        cfg = cfgmod.merge(cfg, "protocol", overrides)
        # record every protocol default so the manifest is self-contained
        resolved = asdict(cfgmod.protocol_from(cfg))
        resolved["epsilon"] = cfgmod.protocol_from(cfg).typicality.epsilon
        cfg["protocol"] = {**_jsonable(resolved), **cfg["protocol"]}
        cfg["protocol"].setdefault("budget_fraction", cfgmod.DEFAULT_BUDGET_FRACTION)
    return cfg


def execute(command: str, cfg: dict, out: Path | None, stdout=None) -> dict:
    """Run a resolved command, write its files and manifest; return the files written."""
    stdout = stdout or sys.stdout
    report, files = COMMANDS[command](cfg)
    seed = cfg.get("protocol", {}).get("seed", cfg.get("capacity", {}).get("seed"))
    files["manifest.json"] = json.dumps(_manifest(command, cfg, seed), indent=2) + "\n"
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            _write(out, name, text)
    stdout.write(report)
    return files


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="outage-cr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--out", type=Path, help="directory for outputs and manifest.json")
        p.add_argument("--dsbs", type=float, help="use a doubly symmetric binary source with this crossover")
        p.add_argument("--power", type=float)
        p.add_argument("--noise-var", type=float)
        p.add_argument("--eta", type=float)

    p = sub.add_parser("outage-capacity", help="gamma0 and the eta-outage capacity")
    common(p)
    p.add_argument("--sweep", help="e.g. eta=0:0.9:0.1; emits CSV eta,gamma0,capacity_bits")

    p = sub.add_parser("cr-capacity", help="eta-outage common-randomness capacity")
    common(p)
    p.add_argument("--budget-bits", type=float, help="explicit budget C (default: C_eta of the fading spec)")
    p.add_argument("--oracle", action="store_true", help="use the brute-force grid search")
    p.add_argument("--grid-steps", type=int, help=f"oracle levels per coordinate (default {ORACLE_GRID_STEPS})")
    p.add_argument("--card-u", type=int)
    p.add_argument("--grid-warp", type=float, help=f"oracle grid warp exponent; 1 is uniform (default {ORACLE_GRID_WARP})")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo run of the binning protocol")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=("idealized", "gaussian"))
    p.add_argument("--margin", type=float)
    p.add_argument("--n-c", type=int, help="channel uses per block (default n)")
    p.add_argument("--buckets", type=int, help="gain buckets for per-state error rates")
    p.add_argument("--codebook-mode", choices=("auto", "explicit", "ensemble"))
    p.add_argument("--budget-fraction", type=float, help="optimize the aux channel for this fraction of C_eta")

    p = sub.add_parser("replay", help="rerun a manifest.json")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            try:
                manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
                command, cfg = manifest["command"], manifest["config"]
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from exc
            if command not in COMMANDS:
                raise ConfigError(f"manifest names unknown command {command!r}")
            execute(command, cfg, args.out)
        else:
            execute(args.command, _resolve(args), args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
