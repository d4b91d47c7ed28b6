"""Command-line interface.

Every subcommand reads a flat key=value config file (--config) and
writes its result to --out; --seed, --reps and --steps override the
corresponding config entries. Exit codes: 0 success, 2 configuration
error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError, VolroughError
from .harness import (ExpansionCheck, emit_report, ingest_chain_csv,
                      load_config, run_mc_study, study_config_from_dict,
                      verify_expansion, write_chain_csv, _parse_number)
from .hurst import estimate_h, estimate_h_jump_robust
from .model import RoughHestonParams, validate
from .pricing import NoiseModel, add_noise, generate_chain
from .spanning import estimate_portfolio


def _params_from_config(cfg: dict) -> RoughHestonParams:
    if "x0" in cfg:
        x0 = _parse_number(str(cfg["x0"]))
    else:
        x0 = math.log(_parse_number(str(cfg.get("spot", "3000"))))
    try:
        params = RoughHestonParams(
            x0=x0,
            v0=_parse_number(str(cfg["v0"])),
            nu=_parse_number(str(cfg.get("nu", "0.5"))),
            rho=_parse_number(str(cfg.get("rho", "-0.9"))),
            h=_parse_number(str(cfg["h"])),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc.args[0]}") from exc
    return validate(params)


def _tenor_list(cfg: dict, key: str = "tenors") -> list[float]:
    raw = cfg.get(key)
    if raw is None:
        raise ConfigError(f"missing config key: {key}")
    return [_parse_number(p) for p in str(raw).split(",") if p.strip()]


def _require_out(args) -> str:
    if not args.out:
        raise ConfigError("--out is required for this command")
    return args.out


def _estimate_json(est) -> dict:
    return {
        "value": None if math.isnan(est.value) else est.value,
        "method": est.method,
        "tenors": list(est.tenors),
        "u_grid": None if est.u_grid is None else list(map(float, est.u_grid)),
        "intercepts": None if est.intercepts is None else list(est.intercepts),
        "f_ratio": est.f_ratio,
        "flags": list(est.flags),
    }


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate_chain(args) -> int:
    cfg = load_config(args.config)
    params = _params_from_config(cfg)
    tenors = _tenor_list(cfg)
    level = _parse_number(str(cfg.get("noise_level", "0")))
    seed = args.seed if args.seed is not None else int(str(cfg.get("seed", "0")))
    n_steps = args.steps or int(str(cfg.get("n_steps", "512")))
    chains = []
    for i, t in enumerate(tenors):
        chain = generate_chain(
            params, t,
            strike_step=_parse_number(str(cfg.get("strike_step", "5"))),
            cutoff=_parse_number(str(cfg.get("cutoff", "0.075"))),
            n_steps=n_steps)
        if level > 0:
            chain = add_noise(chain, NoiseModel(level=level, seed=seed), stream=i)
        chains.append(chain)
    out = _require_out(args)
    write_chain_csv(chains, out)
    for chain in chains:
        print(f"tenor {chain.tenor:.6f}: {chain.n_quotes} quotes"
              f"{' (noisy)' if chain.noisy else ''}")
    print(f"wrote {out}")
    return 0


def _cmd_estimate_cf(args) -> int:
    cfg = load_config(args.config)
    chains = ingest_chain_csv(str(cfg_path_value(cfg, "chain")))
    u_min = _parse_number(str(cfg.get("u_min", "0")))
    u_max = _parse_number(str(cfg.get("u_max", "5")))
    u_step = _parse_number(str(cfg.get("u_step", "0.01")))
    u = np.arange(u_min, u_max + 0.5 * u_step, u_step)
    payload = {"tenors": []}
    for chain in chains:
        est = estimate_portfolio(chain, u)
        payload["tenors"].append({
            "tenor": chain.tenor,
            "M_hat": est.M_hat,
            "u": list(map(float, est.u_grid)),
            "L_re": list(map(float, est.L_values.real)),
            "L_im": list(map(float, est.L_values.imag)),
            "arg": list(map(float, est.arg_values)),
        })
        print(f"tenor {chain.tenor:.6f}: M_hat = {est.M_hat:.6f}")
    _write_json(payload, _require_out(args))
    return 0


def cfg_path_value(cfg: dict, key: str) -> str:
    value = cfg.get(key)
    if value is None:
        raise ConfigError(f"missing config key: {key}")
    if isinstance(value, list):
        raise ConfigError(f"config key {key} given more than once")
    return str(value)


def _cmd_estimate_hurst(args) -> int:
    cfg = load_config(args.config)
    chains = ingest_chain_csv(cfg_path_value(cfg, "chain"))
    if len(chains) < 2:
        raise ConfigError("estimate-hurst needs a file with at least two tenors")
    est = estimate_h(chains[0], chains[1])
    print(f"H_hat = {est.value:.4f}  flags={list(est.flags)}")
    _write_json(_estimate_json(est), _require_out(args))
    return 0


def _cmd_estimate_hurst_robust(args) -> int:
    cfg = load_config(args.config)
    chains = ingest_chain_csv(cfg_path_value(cfg, "chain"))
    if len(chains) < 4:
        raise ConfigError("estimate-hurst-robust needs a file with four tenors")
    u = _parse_number(str(cfg["u"])) if "u" in cfg else None
    est = estimate_h_jump_robust(chains[:4], u=u)
    print(f"H_hat' = {est.value:.4f}  flags={list(est.flags)}")
    _write_json(_estimate_json(est), _require_out(args))
    return 0


def _cmd_mc_study(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = str(args.seed)
    if args.reps is not None:
        overrides["n_reps"] = str(args.reps)
    if args.steps is not None:
        overrides["n_steps"] = str(args.steps)
    config = study_config_from_dict(cfg, overrides)
    report = run_mc_study(config)
    for s in report.scenarios:
        if s.error:
            print(f"V0={s.v0} H={s.h}: FAILED ({s.error})")
        else:
            print(f"V0={s.v0} H={s.h}: q25={s.q25:.4f} q50={s.q50:.4f} "
                  f"q75={s.q75:.4f} used={s.n_used} failed={s.n_failed}")
    out = args.out or config.out
    if out:
        emit_report(report, out)
        print(f"wrote {out}")
    return 0


def _cmd_verify_expansion(args) -> int:
    cfg = load_config(args.config)
    params = _params_from_config(cfg)
    u = _parse_number(str(cfg.get("u", "1")))
    t_list = _tenor_list(cfg, key="t_list")
    n_steps = args.steps or int(str(cfg.get("n_steps", "1024")))
    check: ExpansionCheck = verify_expansion(params, u, t_list, n_steps=n_steps)
    for t, r in zip(check.tenors, check.residuals):
        print(f"T={t:g}: residual {r:.3e}")
    print(f"fitted log-log slope: {check.slope:.3f}")
    if args.out:
        _write_json({"u": check.u, "tenors": list(check.tenors),
                     "residuals": list(check.residuals),
                     "slope": check.slope}, args.out)
    return 0


_COMMANDS = {
    "simulate-chain": _cmd_simulate_chain,
    "estimate-cf": _cmd_estimate_cf,
    "estimate-hurst": _cmd_estimate_hurst,
    "estimate-hurst-robust": _cmd_estimate_hurst_robust,
    "mc-study": _cmd_mc_study,
    "verify-expansion": _cmd_verify_expansion,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volrough",
        description="Short-maturity option analytics and Hurst estimation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--reps", type=int, help="override the replication count")
        p.add_argument("--steps", type=int, help="override the Riccati step count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except VolroughError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
