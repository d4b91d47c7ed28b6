"""Domain types shared by every module: model parameters, spot
characteristics, jump tables, and option chains.

Conventions used throughout the package: zero risk-free rate and zero
dividend yield (so the forward equals the spot), log-prices x = log S,
tenors in years, variance per year. All containers are immutable after
construction and can be shared freely across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigError

__all__ = [
    "RoughHestonParams",
    "BigJumpTable",
    "SmallJumpTable",
    "JumpSpec",
    "SpotCharacteristics",
    "OptionQuote",
    "OptionChain",
    "validate",
    "spot_from_rough_heston",
    "chain_from_arrays",
]


@dataclass(frozen=True)
class RoughHestonParams:
    """Parameters of the zero-mean-reversion rough Heston model.

    x0:  log of the spot price
    v0:  initial variance (per year)
    nu:  vol-of-vol coefficient of the power-law variance kernel
    rho: correlation between price and variance shocks, in [-1, 1]
    h:   Hurst exponent of the variance kernel, in (0, 1/2]
    """

    x0: float
    v0: float
    nu: float
    rho: float
    h: float


def validate(params: RoughHestonParams) -> RoughHestonParams:
    """Return ``params`` unchanged iff every invariant holds.

    Raises :class:`ConfigError` naming the first violated invariant.
    """
    if not math.isfinite(params.x0):
        raise ConfigError("x0 must be finite")
    if not (params.v0 > 0):
        raise ConfigError("V0 must be positive")
    if not (params.nu >= 0):
        raise ConfigError("nu must be nonnegative")
    if not (-1.0 <= params.rho <= 1.0):
        raise ConfigError("rho out of range [-1, 1]")
    if not (0.0 < params.h <= 0.5):
        raise ConfigError("H out of range (0, 1/2]")
    return params


def _as_weights(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ConfigError(f"{name} contains negative entries")
    return arr


@dataclass(frozen=True)
class BigJumpTable:
    """Finite-activity (compound-Poisson) jump component as a quadrature table.

    ``sizes`` are jump sizes in log-price units; ``weights`` are the
    Levy-measure masses at those sizes, so ``weights.sum()`` is the jump
    intensity per year.
    """

    sizes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=float)
        weights = _as_weights(self.weights, "big-jump weights")
        if sizes.shape != weights.shape:
            raise ConfigError("big-jump sizes and weights must align")
        if not np.all(np.isfinite(sizes)):
            raise ConfigError("big-jump sizes contain non-finite entries")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "weights", weights)

    @property
    def intensity(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def gaussian(cls, intensity: float, mean: float, std: float,
                 n_nodes: int = 401) -> "BigJumpTable":
        """Gauss-Hermite table for Gaussian jump sizes N(mean, std^2)."""
        if intensity < 0:
            raise ConfigError("jump intensity must be nonnegative")
        if std < 0:
            raise ConfigError("jump size std must be nonnegative")
        if std == 0.0:
            return cls(sizes=np.array([mean]), weights=np.array([intensity]))
        from scipy.special import roots_hermite  # stable for large node counts
        t, w = roots_hermite(n_nodes)
        sizes = mean + math.sqrt(2.0) * std * t
        weights = intensity * w / math.sqrt(math.pi)
        return cls(sizes=sizes, weights=weights)


@dataclass(frozen=True)
class SmallJumpTable:
    """Infinite-variation jump component tabulated on a finite size grid.

    ``sizes`` holds the compensated jump sizes delta(z) on the grid and
    ``weights`` the Levy-measure quadrature weights. The optional
    coefficient tables describe how the size function moves over time:

    sigma_delta: loading on the rough driver (per grid node)
    eta_delta:   loading on the price Brownian motion (per grid node)
    delta_sigma: jump loading of the volatility process (per grid node)
    delta_delta: self-excitation table, indexed (node, node')
    """

    sizes: np.ndarray
    weights: np.ndarray
    sigma_delta: np.ndarray | None = None
    eta_delta: np.ndarray | None = None
    delta_sigma: np.ndarray | None = None
    delta_delta: np.ndarray | None = None

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=float)
        weights = _as_weights(self.weights, "small-jump weights")
        if sizes.shape != weights.shape:
            raise ConfigError("small-jump sizes and weights must align")
        if not np.all(np.isfinite(sizes)):
            raise ConfigError("small-jump sizes contain non-finite entries")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "weights", weights)
        n = sizes.size
        for name in ("sigma_delta", "eta_delta", "delta_sigma"):
            table = getattr(self, name)
            if table is not None:
                table = np.asarray(table, dtype=float)
                if table.shape != (n,):
                    raise ConfigError(f"{name} table must have shape ({n},)")
                object.__setattr__(self, name, table)
        if self.delta_delta is not None:
            dd = np.asarray(self.delta_delta, dtype=float)
            if dd.shape != (n, n):
                raise ConfigError(f"delta_delta table must have shape ({n}, {n})")
            object.__setattr__(self, "delta_delta", dd)


@dataclass(frozen=True)
class JumpSpec:
    """Jump specification with the activity and roughness bounds it must obey.

    ``h`` is the volatility roughness the bounds are checked against;
    ``h_gamma``/``h_delta`` default to ``h``. ``q`` bounds the activity of
    the finite-variation component and ``r`` that of the infinite-variation
    component. Construction rejects any combination violating

        h_gamma > h - (2/q - 1)(1/2 - h)
        h_delta > h - (2/r - 1) min(1/2 - h, 1/4)
    """

    h: float
    big: BigJumpTable | None = None
    small: SmallJumpTable | None = None
    h_gamma: float | None = None
    h_delta: float | None = None
    q: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.h < 0.5):
            raise ConfigError("jump spec requires H in (0, 1/2)")
        if self.h_gamma is None:
            object.__setattr__(self, "h_gamma", self.h)
        if self.h_delta is None:
            object.__setattr__(self, "h_delta", self.h)
        if not (0.0 < self.q <= 1.0):
            raise ConfigError("q out of range (0, 1]")
        if not (1.0 <= self.r < 2.0):
            raise ConfigError("r out of range [1, 2)")
        if not (0.0 < self.h_gamma < 0.5):
            raise ConfigError("H_gamma out of range (0, 1/2)")
        if not (0.0 < self.h_delta < 0.5):
            raise ConfigError("H_delta out of range (0, 1/2)")
        if not (self.h_gamma > self.h - (2.0 / self.q - 1.0) * (0.5 - self.h)):
            raise ConfigError(
                "roughness bound violated: H_gamma <= H - (2/q - 1)(1/2 - H)")
        if not (self.h_delta > self.h
                - (2.0 / self.r - 1.0) * min(0.5 - self.h, 0.25)):
            raise ConfigError(
                "roughness bound violated: H_delta <= H - (2/r - 1)min(1/2 - H, 1/4)")
        if self.small is not None:
            # finiteness of the r-th activity sum over the table
            total = float(np.sum(self.small.weights
                                 * np.abs(self.small.sizes) ** self.r))
            if not math.isfinite(total):
                raise ConfigError("small-jump activity sum is not finite")


Curve = Callable[[float], float]
SizeCurve = Callable[[float], np.ndarray]

_PROJ_GRID = np.linspace(0.0, 1.0, 129)  # dyadic Simpson grid shared package-wide


@dataclass(frozen=True)
class SpotCharacteristics:
    """Snapshot of the spot quantities that drive the short-maturity expansion.

    alpha:      spot drift of the log price (per year)
    sigma:      spot volatility (per sqrt-year)
    eta:        rough leverage coefficient
    eta_tilde:  rough coefficient orthogonal to the price shocks
    eta_sigma:  semimartingale leverage coefficient
    sigma_eta:  rough coefficient of the leverage process itself
    h:          volatility roughness exponent
    jumps:      optional :class:`JumpSpec`
    sigma_proj: s in [0,1] -> conditionally expected volatility at horizon
                fraction s (defaults to the constant spot value)
    eta_proj:   same for the leverage coefficient
    delta_proj: s -> projected small-jump sizes on the table's grid
    """

    alpha: float
    sigma: float
    eta: float
    eta_tilde: float = 0.0
    eta_sigma: float = 0.0
    sigma_eta: float = 0.0
    h: float = 0.25
    jumps: JumpSpec | None = None
    sigma_proj: Curve | None = None
    eta_proj: Curve | None = None
    delta_proj: SizeCurve | None = None

    def __post_init__(self):
        if not (0.0 < self.h <= 0.5):
            raise ConfigError("H out of range (0, 1/2]")
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.sigma_proj is not None:
            if not math.isclose(self.sigma_proj(0.0), self.sigma,
                                rel_tol=1e-12, abs_tol=1e-12):
                raise ConfigError("sigma_proj(0) must equal the spot sigma")
        if self.eta_proj is not None:
            if not math.isclose(self.eta_proj(0.0), self.eta,
                                rel_tol=1e-12, abs_tol=1e-12):
                raise ConfigError("eta_proj(0) must equal the spot eta")
        if self.delta_proj is not None:
            if self.jumps is None or self.jumps.small is None:
                raise ConfigError("delta_proj requires a small-jump table")
            start = np.asarray(self.delta_proj(0.0), dtype=float)
            if not np.allclose(start, self.jumps.small.sizes,
                               rtol=1e-12, atol=1e-12):
                raise ConfigError("delta_proj(0) must equal the spot jump sizes")

    def sigma_curve(self, s: np.ndarray) -> np.ndarray:
        if self.sigma_proj is None:
            return np.full_like(np.asarray(s, dtype=float), self.sigma)
        return np.array([self.sigma_proj(float(v)) for v in np.atleast_1d(s)])

    def eta_curve(self, s: np.ndarray) -> np.ndarray:
        if self.eta_proj is None:
            return np.full_like(np.asarray(s, dtype=float), self.eta)
        return np.array([self.eta_proj(float(v)) for v in np.atleast_1d(s)])


def spot_from_rough_heston(params: RoughHestonParams) -> SpotCharacteristics:
    """Map rough Heston parameters to spot characteristics.

    The variance kernel coefficient nu splits into a leverage part
    eta = nu*rho/2 and an orthogonal part eta_tilde = nu*sqrt(1-rho^2)/2
    (chain rule applied to sigma = sqrt(V)), so eta^2 + eta_tilde^2 =
    nu^2/4 exactly. The zero-rate martingale drift of the log price is
    alpha = -V0/2. The model has no jumps and no semimartingale leverage,
    and at time zero all projection curves are flat.
    """
    p = validate(params)
    sigma = math.sqrt(p.v0)
    eta = 0.5 * p.nu * p.rho
    eta_tilde = 0.5 * p.nu * math.sqrt(max(0.0, 1.0 - p.rho * p.rho))
    return SpotCharacteristics(
        alpha=-0.5 * p.v0,
        sigma=sigma,
        eta=eta,
        eta_tilde=eta_tilde,
        eta_sigma=0.0,
        sigma_eta=0.0,
        h=p.h,
        jumps=None,
    )


@dataclass(frozen=True)
class OptionQuote:
    """One out-of-the-money quote: log-strike, price in currency, side flag."""

    log_strike: float
    price: float
    is_put: bool


@dataclass(frozen=True)
class OptionChain:
    """One tenor's quotes on a strictly increasing log-strike grid.

    Under the zero-rate convention the forward equals the spot, so quotes
    at log-strikes at or below ``spot_log`` must be puts and the rest calls.
    """

    tenor: float
    spot_log: float
    quotes: tuple[OptionQuote, ...]
    noisy: bool = False

    def __post_init__(self):
        if not (self.tenor > 0):
            raise ConfigError("tenor must be positive")
        if len(self.quotes) == 0:
            raise ConfigError("empty chain")
        ks = np.array([q.log_strike for q in self.quotes])
        if np.any(np.diff(ks) <= 0):
            raise ConfigError("log-strikes must be strictly increasing")
        for q in self.quotes:
            if not (q.price >= 0) or not math.isfinite(q.price):
                raise ConfigError("prices must be finite and nonnegative")
            if q.is_put != (q.log_strike <= self.spot_log):
                raise ConfigError("OTM convention violated")

    @cached_property
    def log_strikes(self) -> np.ndarray:
        return np.array([q.log_strike for q in self.quotes])

    @cached_property
    def prices(self) -> np.ndarray:
        return np.array([q.price for q in self.quotes])

    @property
    def n_quotes(self) -> int:
        return len(self.quotes)

    @property
    def grid_step(self) -> tuple[float, float]:
        """(min, max) log-strike spacing of the grid."""
        gaps = np.diff(self.log_strikes)
        if gaps.size == 0:
            return (0.0, 0.0)
        return (float(gaps.min()), float(gaps.max()))

    def with_prices(self, prices: np.ndarray, noisy: bool) -> "OptionChain":
        quotes = tuple(
            OptionQuote(q.log_strike, float(p), q.is_put)
            for q, p in zip(self.quotes, prices)
        )
        return OptionChain(self.tenor, self.spot_log, quotes, noisy=noisy)


def chain_from_arrays(tenor: float, spot_log: float, log_strikes, prices,
                      noisy: bool = False) -> OptionChain:
    """Build a chain, deriving each quote's put/call side from the convention."""
    ks = np.asarray(log_strikes, dtype=float)
    ps = np.asarray(prices, dtype=float)
    if ks.shape != ps.shape:
        raise ConfigError("log_strikes and prices must align")
    quotes = tuple(
        OptionQuote(float(k), float(p), bool(k <= spot_log))
        for k, p in zip(ks, ps)
    )
    return OptionChain(tenor, spot_log, quotes, noisy=noisy)
