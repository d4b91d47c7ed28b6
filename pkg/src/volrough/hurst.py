"""Hurst-parameter estimators built on the spanning portfolios.

Plain estimator: on an adaptively chosen grid of CF arguments, the phase
statistic behaves like A_T(u) ~ -sigma^2 eta u^3 T^H / Gamma(H + 5/2)
up to a u^5-shaped correction, so the intercept of regressing
-u^3/A_T(u) on (1, u^2) isolates the T^H factor; comparing two tenors in
log space gives H.

Jump-robust estimator: first differences of CF phases across tenors,
with arguments rescaled by sqrt(T_j/T_1), cancel drift and jump
contributions identically; second differences also cancel the
semimartingale-leverage term. What survives is proportional to

    bracket(tau_j, H) = (tau_j^{H + 1/2} - 1)
                        - (tau_j - 1)/(tau_4 - 1) (tau_4^{H + 1/2} - 1)

times T_1^H, and the ratio of two such differences is a known function
F(H) = bracket(tau_2)/bracket(tau_3) that can be inverted for H.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .model import OptionChain
from .spanning import CFPortfolioEstimate, estimate_portfolio

__all__ = [
    "UGrid",
    "HurstEstimate",
    "scan_portfolio",
    "adaptive_ugrid",
    "regression_intercept",
    "estimate_h",
    "first_diff",
    "second_diff",
    "f_of_h",
    "invert_f",
    "estimate_h_jump_robust",
]

U_STEP = 0.01
LEVEL_FIRST = 0.9          # |L| threshold that opens the grid
LEVEL_LAST = 0.75          # |L| threshold that closes it
ARG_CAP = math.pi / 2.0    # |A| cap that keeps the phase on the principal branch
SANITY_BAND = (-0.25, 1.0)


@dataclass(frozen=True)
class UGrid:
    """Adaptive argument grid with the thresholds that produced it."""

    u_values: np.ndarray
    u1_rule: float = LEVEL_FIRST
    uK_rule: float = LEVEL_LAST
    cap_rule: float = ARG_CAP
    step: float = U_STEP

    def __post_init__(self):
        if len(self.u_values) < 2:
            raise ConfigError("empty u-grid: fewer than 2 points")


@dataclass(frozen=True)
class HurstEstimate:
    """An H estimate with the diagnostics needed to judge it.

    ``flags`` collects warnings (sign mismatch, weak signal, out-of-band
    values); a flagged estimate should be excluded from aggregates.
    """

    value: float
    method: str
    tenors: tuple[float, ...]
    u_grid: np.ndarray | None = None
    intercepts: tuple[float, float] | None = None
    f_ratio: float | None = None
    flags: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.flags and math.isfinite(self.value)


def scan_portfolio(chain: OptionChain, step: float = U_STEP,
                   u_max: float = 50.0) -> CFPortfolioEstimate:
    """Evaluate the portfolio on the lattice {0, step, 2 step, ...},
    extending until |L| has fallen below the grid-closing threshold.

    Grid selection never looks past that crossing, so the scan can stop
    there.
    """
    blocks = []
    start = 0
    while True:
        u = np.arange(start, start + 256) * step
        blocks.append(estimate_portfolio(chain, u))
        if np.any(np.abs(blocks[-1].L_values) < LEVEL_LAST):
            break
        start += 256
        if start * step > u_max:
            raise ConfigError(
                f"scan exhausted at u={u_max}: |L| never fell below {LEVEL_LAST}")
    n = 256 * len(blocks)
    return CFPortfolioEstimate(
        tenor=chain.tenor,
        u_grid=np.arange(n) * step,
        L_values=np.concatenate([b.L_values for b in blocks]),
        M_hat=blocks[0].M_hat,
        arg_values=np.concatenate([b.arg_values for b in blocks]),
    )


def adaptive_ugrid(est: CFPortfolioEstimate) -> UGrid:
    """Select the argument grid from a lattice scan.

    Opens at the first lattice point with |L| < 0.9, closes at the first
    with |L| < 0.75, and never extends to where |A| exceeds pi/2 (the
    grid stops just before that crossing, keeping the principal branch
    safe by construction).
    """
    step = float(est.u_grid[1] - est.u_grid[0]) if len(est.u_grid) > 1 else U_STEP
    mod = np.abs(est.L_values)
    below_first = np.nonzero(mod < LEVEL_FIRST)[0]
    below_last = np.nonzero(mod < LEVEL_LAST)[0]
    if below_first.size == 0 or below_last.size == 0:
        raise ConfigError("empty u-grid: |L| never crosses the thresholds in scan")
    i1, ik = int(below_first[0]), int(below_last[0])
    capped = np.nonzero(np.abs(est.arg_values) > ARG_CAP)[0]
    end = min(ik, int(capped[0]) - 1) if capped.size else ik
    if end - i1 + 1 < 2:
        raise ConfigError("empty u-grid: fewer than 2 points")
    return UGrid(u_values=est.u_grid[i1 : end + 1], step=step)


def _check_args_nonzero(a_values: np.ndarray):
    if np.any(a_values == 0.0):
        raise ConfigError("arg statistic vanishes at a grid point: division by zero")


def regression_intercept(u_values, a_values) -> float:
    """Intercept of the least-squares regression of -u^3/A(u) on (1, u^2),
    in closed form via the normal equations."""
    u = np.asarray(u_values, dtype=float)
    a = np.asarray(a_values, dtype=float)
    if u.size != a.size:
        raise ConfigError("u and A grids must align")
    if u.size < 2:
        raise ConfigError("singular design: need at least 2 points")
    _check_args_nonzero(a)
    inv = 1.0 / a
    s2, s4 = np.sum(u**2), np.sum(u**4)
    den = u.size * s4 - s2 * s2
    if den == 0.0:
        raise ConfigError("singular design: degenerate u grid")
    num = s2 * np.sum(inv * u**5) - s4 * np.sum(inv * u**3)
    return float(num / den)


def _intercept_t_stat(u: np.ndarray, a: np.ndarray, intercept: float) -> float:
    """Classical OLS t-statistic of the intercept in y = c0 + c1 u^2."""
    y = -u**3 / a
    x = u**2
    n = u.size
    if n < 3:
        return math.inf
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    resid = y - (ym + slope * (x - xm))
    rss = float(np.sum(resid**2))
    if rss <= 0.0:
        return math.inf
    var0 = rss / (n - 2) * (1.0 / n + xm * xm / sxx)
    return abs(intercept) / math.sqrt(var0) if var0 > 0 else math.inf


def estimate_h(chain_t1: OptionChain, chain_t2: OptionChain,
               step: float = U_STEP) -> HurstEstimate:
    """Plain two-tenor estimator of the volatility roughness H.

    The argument grid is built adaptively from the longer tenor. The two
    regression intercepts must share a sign; a mismatch (or an intercept
    statistically indistinguishable from zero) flags the estimate and
    yields NaN rather than a silently sign-fixed value.
    """
    if not (chain_t1.tenor < chain_t2.tenor):
        raise ConfigError("tenors must satisfy T1 < T2")
    est2 = scan_portfolio(chain_t2, step=step)
    grid = adaptive_ugrid(est2)
    idx = np.searchsorted(est2.u_grid, grid.u_values)
    a2 = est2.arg_values[idx]
    est1 = estimate_portfolio(chain_t1, grid.u_values)
    a1 = est1.arg_values
    b1 = regression_intercept(grid.u_values, a1)
    b2 = regression_intercept(grid.u_values, a2)

    flags: list[str] = []
    if b1 == 0.0 or b2 == 0.0:
        raise NumericalError("zero regression intercept: H undefined")
    if min(_intercept_t_stat(grid.u_values, a1, b1),
           _intercept_t_stat(grid.u_values, a2, b2)) < 2.0:
        flags.append("weak-signal")
    tau = chain_t2.tenor / chain_t1.tenor
    if b1 * b2 < 0:
        flags.append("intercept-sign-mismatch")
        value = math.nan
    else:
        value = (math.log(abs(b1)) - math.log(abs(b2))) / math.log(tau)
        if not (SANITY_BAND[0] < value < SANITY_BAND[1]):
            flags.append("outside-sanity-band")
    return HurstEstimate(value=value, method="plain",
                         tenors=(chain_t1.tenor, chain_t2.tenor),
                         u_grid=grid.u_values, intercepts=(b1, b2),
                         flags=tuple(flags))


def first_diff(l1: complex, lj: complex, u: float, tau_j: float) -> float:
    """Tenor-scaled phase difference; cancels drift and jump phases exactly."""
    if l1 == 0 or lj == 0:
        raise NumericalError("zero CF value: phase undefined")
    if u <= 0:
        raise ConfigError("u must be positive")
    return float((np.angle(l1) - np.angle(lj) / tau_j) / u**3)


def second_diff(a_1j: float, a_14: float, tau_j: float, tau_4: float) -> float:
    """Second difference; also cancels the semimartingale-leverage phase."""
    if tau_4 == 1.0:
        raise ConfigError("tau_4 must differ from 1")
    return float(a_1j - (tau_j - 1.0) / (tau_4 - 1.0) * a_14)


def _bracket(tau_j: float, tau_4: float, h: float) -> float:
    e = h + 0.5
    return tau_j**e - 1.0 - (tau_j - 1.0) / (tau_4 - 1.0) * (tau_4**e - 1.0)


def _bracket_dh(tau_j: float, tau_4: float, h: float) -> float:
    e = h + 0.5
    return (tau_j**e * math.log(tau_j)
            - (tau_j - 1.0) / (tau_4 - 1.0) * tau_4**e * math.log(tau_4))


def f_of_h(h: float, tau2: float, tau3: float, tau4: float) -> float:
    """Ratio of second-difference brackets as a function of H.

    Both brackets vanish at H = 1/2; the value there is the limit, i.e.
    the ratio of their H-derivatives.
    """
    if not (1.0 < tau2 < tau3 < tau4):
        raise ConfigError("tenor ratios must satisfy 1 < tau2 < tau3 < tau4")
    if not (0.0 <= h <= 0.5):
        raise ConfigError("H out of range [0, 1/2]")
    if h == 0.5:
        return _bracket_dh(tau2, tau4, h) / _bracket_dh(tau3, tau4, h)
    return _bracket(tau2, tau4, h) / _bracket(tau3, tau4, h)


def invert_f(ratio: float, tau2: float, tau3: float, tau4: float) -> float:
    """Invert H -> F(H) on [0, 1/2] by bisection to 1e-10.

    F must be strictly monotone on the interval (checked on 101 sample
    points); ratios outside its range raise, reporting the nearest
    endpoint.
    """
    hs = np.linspace(0.0, 0.5, 101)
    fs = np.array([f_of_h(h, tau2, tau3, tau4) for h in hs])
    d = np.diff(fs)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise NumericalError("F is not strictly monotone for these tenor ratios")
    lo_val, hi_val = (fs[-1], fs[0]) if fs[0] > fs[-1] else (fs[0], fs[-1])
    if not (lo_val <= ratio <= hi_val):
        nearest = 0.5 if abs(ratio - fs[-1]) < abs(ratio - fs[0]) else 0.0
        raise NumericalError(
            f"ratio {ratio:.6f} outside the range [{lo_val:.4f}, {hi_val:.4f}] "
            f"of F; nearest endpoint H = {nearest}")
    lo, hi = 0.0, 0.5
    increasing = fs[-1] > fs[0]
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if (f_of_h(mid, tau2, tau3, tau4) < ratio) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def estimate_h_jump_robust(chains: list[OptionChain], u: float | None = None,
                           step: float = U_STEP) -> HurstEstimate:
    """Jump-robust four-tenor estimator of H at a single argument u.

    When ``u`` is omitted it defaults to the midpoint of the adaptive
    grid built from the longest tenor. The ratio of the two second
    differences is mapped through the inverse of F; a ratio outside F's
    range or a vanishing denominator flags the estimate instead of
    raising.
    """
    if len(chains) != 4:
        raise ConfigError("jump-robust estimation needs exactly 4 tenors")
    chains = sorted(chains, key=lambda c: c.tenor)
    tenors = tuple(c.tenor for c in chains)
    if len(set(tenors)) != 4:
        raise ConfigError("tenors must be distinct")
    t1 = tenors[0]
    taus = [t / t1 for t in tenors]
    if u is None:
        grid = adaptive_ugrid(scan_portfolio(chains[-1], step=step))
        u = float(grid.u_values[len(grid.u_values) // 2])
    if u <= 0:
        raise ConfigError("u must be positive")

    from .spanning import spanning_cf  # local import keeps module load light

    l1 = spanning_cf(chains[0], u)
    firsts = {}
    for j in (1, 2, 3):
        lj = spanning_cf(chains[j], u * math.sqrt(taus[j]))
        firsts[j] = first_diff(l1, lj, u, taus[j])
    a124 = second_diff(firsts[1], firsts[3], taus[1], taus[3])
    a134 = second_diff(firsts[2], firsts[3], taus[2], taus[3])

    flags: list[str] = []
    scale = max(abs(firsts[1]), abs(firsts[2]), abs(firsts[3]), 1e-300)
    if abs(a134) < 1e-12 * scale:
        return HurstEstimate(value=math.nan, method="jump-robust", tenors=tenors,
                             f_ratio=math.nan, flags=("no-rough-signal",))
    ratio = a124 / a134
    try:
        value = invert_f(ratio, taus[1], taus[2], taus[3])
    except NumericalError:
        return HurstEstimate(value=math.nan, method="jump-robust", tenors=tenors,
                             f_ratio=ratio, flags=("ratio-outside-F-range",))
    if not (SANITY_BAND[0] < value < SANITY_BAND[1]):
        flags.append("outside-sanity-band")
    return HurstEstimate(value=value, method="jump-robust", tenors=tenors,
                         f_ratio=ratio, flags=tuple(flags))
