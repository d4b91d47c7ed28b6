"""Study harness: Monte Carlo quantile runs, expansion-order verification,
chain file I/O, report emission, and the flat key=value config format.

Monte Carlo design: true chains are deterministic at time zero given the
model, so each scenario prices its chains exactly once; replications only
re-draw observation noise (replication r uses seed base_seed + r, with
one independent substream per tenor). Replications run concurrently;
results are keyed by replication index, so the thread count never
affects the output. Flagged estimates are excluded from the quantiles
and counted as failures.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ChainFormatError, ConfigError, NumericalError, VolroughError
from .expansion import expansion_cf_rough
from .hurst import U_STEP, estimate_h
from .model import OptionChain, RoughHestonParams, chain_from_arrays, validate
from .pricing import (DEFAULT_PRICE_CUTOFF, DEFAULT_STRIKE_STEP, NoiseModel,
                      PricerKernel, add_noise, generate_chain)
from .riccati import cf

__all__ = [
    "StudyConfig",
    "ScenarioResult",
    "QuantileReport",
    "ExpansionCheck",
    "run_mc_study",
    "verify_expansion",
    "load_config",
    "parse_config_text",
    "ingest_chain_csv",
    "write_chain_csv",
    "emit_report",
    "worker_count",
]

CHAIN_CSV_HEADER = ["tenor_years", "spot", "log_strike", "price", "is_put"]


def worker_count() -> int:
    """VOLROUGH_THREADS caps the worker pool; absent means hardware parallelism."""
    env = os.environ.get("VOLROUGH_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"VOLROUGH_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("VOLROUGH_THREADS must be positive")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of one Monte Carlo study."""

    scenarios: tuple[tuple[float, float], ...]   # (V0, H) pairs
    nu: float = 0.5
    rho: float = -0.9
    x0: float = math.log(3000.0)
    tenors: tuple[float, ...] = (3.0 / 252.0, 6.0 / 252.0)
    n_reps: int = 500
    noise_level: float = 0.025
    base_seed: int = 20240901
    u_step: float = U_STEP
    strike_step: float = DEFAULT_STRIKE_STEP
    cutoff: float = DEFAULT_PRICE_CUTOFF
    n_steps: int = 512
    out: str | None = None

    def __post_init__(self):
        if self.n_reps < 1:
            raise ConfigError("n_reps must be at least 1")
        if len(self.tenors) < 2:
            raise ConfigError("the study needs at least two tenors")
        if any(b <= a for a, b in zip(self.tenors, self.tenors[1:])):
            raise ConfigError("tenors must be strictly increasing")
        for v0, h in self.scenarios:
            validate(RoughHestonParams(self.x0, v0, self.nu, self.rho, h))

    def as_dict(self) -> dict:
        return {
            "scenarios": [list(s) for s in self.scenarios],
            "nu": self.nu, "rho": self.rho, "x0": self.x0,
            "tenors": list(self.tenors), "n_reps": self.n_reps,
            "noise_level": self.noise_level, "base_seed": self.base_seed,
            "u_step": self.u_step, "strike_step": self.strike_step,
            "cutoff": self.cutoff, "n_steps": self.n_steps,
        }


@dataclass(frozen=True)
class ScenarioResult:
    v0: float
    h: float
    q25: float | None
    q50: float | None
    q75: float | None
    n_used: int
    n_failed: int
    error: str | None = None


@dataclass(frozen=True)
class QuantileReport:
    config: StudyConfig
    scenarios: tuple[ScenarioResult, ...]
    version: str

    def __post_init__(self):
        for s in self.scenarios:
            if s.q25 is not None and not (s.q25 <= s.q50 <= s.q75):
                raise NumericalError("quantiles out of order")


def _nearest_rank(sorted_vals: np.ndarray, q: float) -> float:
    rank = max(1, math.ceil(q * sorted_vals.size))
    return float(sorted_vals[rank - 1])


def _run_scenario(config: StudyConfig, v0: float, h: float) -> ScenarioResult:
    params = RoughHestonParams(config.x0, v0, config.nu, config.rho, h)
    t1, t2 = config.tenors[0], config.tenors[1]
    try:
        true_chains = [
            generate_chain(params, t, strike_step=config.strike_step,
                           cutoff=config.cutoff, n_steps=config.n_steps)
            for t in (t1, t2)
        ]
    except VolroughError as exc:
        return ScenarioResult(v0=v0, h=h, q25=None, q50=None, q75=None,
                              n_used=0, n_failed=config.n_reps, error=str(exc))

    def one_rep(r: int) -> float:
        noise = NoiseModel(level=config.noise_level, seed=config.base_seed + r)
        noisy = [add_noise(chain, noise, stream=i)
                 for i, chain in enumerate(true_chains)]
        try:
            est = estimate_h(noisy[0], noisy[1], step=config.u_step)
        except VolroughError:
            return math.nan
        return est.value if est.ok else math.nan

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        values = np.array(list(pool.map(one_rep, range(config.n_reps))))
    good = np.sort(values[np.isfinite(values)])
    n_failed = config.n_reps - good.size
    if good.size == 0:
        return ScenarioResult(v0=v0, h=h, q25=None, q50=None, q75=None,
                              n_used=0, n_failed=n_failed,
                              error="all replications failed")
    return ScenarioResult(
        v0=v0, h=h,
        q25=_nearest_rank(good, 0.25),
        q50=_nearest_rank(good, 0.50),
        q75=_nearest_rank(good, 0.75),
        n_used=int(good.size), n_failed=int(n_failed),
    )


def run_mc_study(config: StudyConfig) -> QuantileReport:
    """Run every scenario; a pricing failure aborts only its scenario."""
    from . import __version__
    results = tuple(_run_scenario(config, v0, h) for v0, h in config.scenarios)
    return QuantileReport(config=config, scenarios=results, version=__version__)


@dataclass(frozen=True)
class ExpansionCheck:
    """Residuals of the expansion against the exact CF, with the fitted
    log-log decay slope."""

    u: float
    tenors: tuple[float, ...]
    residuals: tuple[float, ...]
    slope: float


def verify_expansion(params: RoughHestonParams, u: float, t_list,
                     n_steps: int = 1024) -> ExpansionCheck:
    """Compare the expansion with the Riccati CF over a list of tenors."""
    validate(params)
    tenors = tuple(sorted(float(t) for t in t_list))
    if len(tenors) < 2:
        raise ConfigError("verify-expansion needs at least two tenors")
    residuals = []
    for t in tenors:
        exact = cf(u / math.sqrt(t), params, t, n_steps=n_steps)
        approx = expansion_cf_rough(params, u, t).total
        residuals.append(abs(exact - approx))
    if any(r == 0.0 for r in residuals):
        slope = math.inf
    else:
        slope = float(np.polyfit(np.log(tenors), np.log(residuals), 1)[0])
    return ExpansionCheck(u=u, tenors=tenors, residuals=tuple(residuals),
                          slope=slope)


# ---------------------------------------------------------------------------
# config file format: flat key = value lines, '#' comments, values may be
# numbers, simple fractions like 3/252, comma lists, or strings
# ---------------------------------------------------------------------------

def _parse_number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def parse_config_text(text: str) -> dict:
    """Parse key=value lines into a dict; repeated keys accumulate lists."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        if key in out:
            prev = out[key]
            out[key] = prev + [value] if isinstance(prev, list) else [prev, value]
        else:
            out[key] = value
    return out


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def study_config_from_dict(raw: dict, overrides: dict | None = None) -> StudyConfig:
    """Build a StudyConfig from parsed key=value pairs.

    Recognized keys: scenario (repeatable "V0, H"), nu, rho, spot or x0,
    tenors (comma list), n_reps, noise_level, base_seed, u_step,
    strike_step, cutoff, n_steps, out.
    """
    raw = dict(raw)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        scen_raw = raw.get("scenario", [])
        if isinstance(scen_raw, str):
            scen_raw = [scen_raw]
        scenarios = []
        for item in scen_raw:
            parts = [p for p in str(item).replace(",", " ").split() if p]
            if len(parts) != 2:
                raise ConfigError(f"scenario must be 'V0, H', got {item!r}")
            scenarios.append((_parse_number(parts[0]), _parse_number(parts[1])))
        if "x0" in raw:
            x0 = _parse_number(str(raw["x0"]))
        else:
            x0 = math.log(_parse_number(str(raw.get("spot", "3000"))))
        tenors = raw.get("tenors", "3/252, 6/252")
        tenor_vals = tuple(_parse_number(p) for p in str(tenors).split(",") if p.strip())
        return StudyConfig(
            scenarios=tuple(scenarios),
            nu=_parse_number(str(raw.get("nu", "0.5"))),
            rho=_parse_number(str(raw.get("rho", "-0.9"))),
            x0=x0,
            tenors=tenor_vals,
            n_reps=int(str(raw.get("n_reps", "500"))),
            noise_level=_parse_number(str(raw.get("noise_level", "0.025"))),
            base_seed=int(str(raw.get("base_seed", "20240901"))),
            u_step=_parse_number(str(raw.get("u_step", "0.01"))),
            strike_step=_parse_number(str(raw.get("strike_step", "5"))),
            cutoff=_parse_number(str(raw.get("cutoff", "0.075"))),
            n_steps=int(str(raw.get("n_steps", "512"))),
            out=raw.get("out"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid study config: {exc}") from exc


# ---------------------------------------------------------------------------
# chain CSV schema: header then one row per quote, UTF-8, '.' decimals
# ---------------------------------------------------------------------------

def write_chain_csv(chains: list[OptionChain], path: str) -> None:
    """Write chains (any number of tenors) in the interchange schema."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHAIN_CSV_HEADER)
        for chain in sorted(chains, key=lambda c: c.tenor):
            spot = math.exp(chain.spot_log)
            for q in chain.quotes:
                writer.writerow([repr(chain.tenor), repr(spot),
                                 repr(q.log_strike), repr(q.price),
                                 "true" if q.is_put else "false"])


def _parse_bool(text: str, lineno: int) -> bool:
    v = text.strip().lower()
    if v in ("true", "1"):
        return True
    if v in ("false", "0"):
        return False
    raise ChainFormatError(f"line {lineno}: is_put must be true/false, got {text!r}")


def ingest_chain_csv(path: str) -> list[OptionChain]:
    """Read chains grouped by tenor, validating row by row.

    Raises :class:`ChainFormatError` naming the offending line for schema
    violations, non-monotone or duplicated strikes, negative prices, or a
    broken put/call convention (puts are required at or below the spot).
    """
    groups: dict[float, dict] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ChainFormatError("line 1: missing header") from None
        if [c.strip() for c in header] != CHAIN_CSV_HEADER:
            raise ChainFormatError(
                f"line 1: header must be {','.join(CHAIN_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ChainFormatError(f"line {lineno}: expected 5 columns")
            try:
                tenor = float(row[0])
                spot = float(row[1])
                k = float(row[2])
                price = float(row[3])
            except ValueError as exc:
                raise ChainFormatError(f"line {lineno}: {exc}") from exc
            is_put = _parse_bool(row[4], lineno)
            if tenor <= 0:
                raise ChainFormatError(f"line {lineno}: tenor must be positive")
            if spot <= 0:
                raise ChainFormatError(f"line {lineno}: spot must be positive")
            if price < 0:
                raise ChainFormatError(f"line {lineno}: negative price")
            grp = groups.setdefault(tenor, {"spot": spot, "ks": [], "ps": [],
                                            "flags": []})
            if grp["spot"] != spot:
                raise ChainFormatError(
                    f"line {lineno}: spot differs within tenor {tenor}")
            if grp["ks"] and k <= grp["ks"][-1]:
                raise ChainFormatError(
                    f"line {lineno}: log-strikes not strictly increasing "
                    "(duplicate or out of order)")
            if is_put != (k <= math.log(spot)):
                raise ChainFormatError(
                    f"line {lineno}: OTM convention violated "
                    "(puts required at log-strikes at or below the spot)")
            grp["ks"].append(k)
            grp["ps"].append(price)
            grp["flags"].append(is_put)
    if not groups:
        raise ChainFormatError("file contains no quotes")
    chains = [
        chain_from_arrays(tenor, math.log(grp["spot"]),
                          np.array(grp["ks"]), np.array(grp["ps"]))
        for tenor, grp in sorted(groups.items())
    ]
    return chains


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def emit_report(report: QuantileReport, path: str) -> None:
    """Write the JSON report plus a plot-ready CSV of quantiles.

    Serialization is canonical (sorted keys, fixed separators), so the
    same report always produces byte-identical files. The CSV lands next
    to the JSON with a .csv suffix.
    """
    payload = {
        "config": report.config.as_dict(),
        "scenarios": [
            {"V0": s.v0, "H": s.h, "q25": s.q25, "q50": s.q50, "q75": s.q75,
             "n_used": s.n_used, "n_failed": s.n_failed,
             **({"error": s.error} if s.error else {})}
            for s in report.scenarios
        ],
        "seed": report.config.base_seed,
        "version": report.version,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    csv_path = os.path.splitext(path)[0] + ".csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "quantile", "value"])
        for s in report.scenarios:
            label = f"V0={s.v0},H={s.h}"
            for name, value in (("q25", s.q25), ("q50", s.q50), ("q75", s.q75)):
                writer.writerow([label, name, "" if value is None else repr(value)])
