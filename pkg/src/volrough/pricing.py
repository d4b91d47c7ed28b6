"""Fourier pricing of out-of-the-money options and synthesis of the
simulated observation scheme: lattice strike grids and multiplicative
observation noise.

Prices come from a damped Fourier integral along the line Im(w) = -1/2
(symmetric between the two wings). With zero rates, J(k) denoting

    J(k) = integral_0^umax Re[exp(-iuk) phi(u - i/2)] / (u^2 + 1/4) du

for moneyness k = log(K/S) and phi the characteristic function of the
raw log increment, the wing prices are

    call / S = 1      - exp(k/2) J(k) / pi      (k > 0)
    put  / S = exp(k) - exp(k/2) J(k) / pi      (k <= 0),

so put-call parity C - P = S - K holds by construction. The integral is
evaluated with Gauss-Legendre panels: fine panels across the region
where the integrand carries mass, geometrically growing panels out to
the truncation point umax = 200 / sqrt(V0 T). The characteristic
function is evaluated once per (model, tenor) on the quadrature nodes
and reused for every strike, which makes chain pricing a sequence of
dot products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .errors import ConfigError, NumericalError
from .model import OptionChain, RoughHestonParams, chain_from_arrays, validate
from .riccati import cf_grid

__all__ = ["NoiseModel", "PricerKernel", "price_otm", "generate_chain", "add_noise"]

DEFAULT_NODES_PER_PANEL = 16
DEFAULT_STRIKE_STEP = 5.0
DEFAULT_PRICE_CUTOFF = 0.075


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative observation noise: price * (1 + level * eps).

    ``eps`` are independent standard normals from a deterministic stream
    derived from ``seed``; the same seed (and stream) always reproduces
    the same noise.
    """

    level: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ConfigError("noise level must be nonnegative")


def _panel_edges(params: RoughHestonParams, T: float, u_max: float) -> np.ndarray:
    """Panel edges on [0, u_max]: fine where the integrand lives, then
    geometric growth through the provably negligible tail."""
    var = params.v0 * T
    # Gaussian envelope of |phi| in the diffusive limit ...
    u_gauss = math.sqrt(72.0 / var)
    # ... and the linear-exponent decay the vol-of-vol produces at large u
    if params.nu > 1e-12 and abs(params.rho) < 1.0:
        a = params.h + 0.5
        c_lin = (params.v0 * math.sqrt(1.0 - params.rho**2) / params.nu
                 * T ** (1.0 - a) / _gamma(2.0 - a))
        u_dense = max(u_gauss, 40.0 / c_lin)
    else:
        u_dense = u_gauss if params.nu <= 1e-12 else u_max
    u_dense = min(1.2 * u_dense, u_max)
    # Panels grow geometrically away from u = 0 (the 1/(u^2 + 1/4) factor
    # peaks there on a scale of 1/2) and are capped at a width that keeps
    # exp(iuk) resolved for any realistic moneyness |k| < 0.7.
    width_cap = 14.0
    edges = [0.0]
    width = 0.4
    while edges[-1] < u_dense:
        edges.append(min(edges[-1] + width, u_dense))
        width = min(width * 1.6, width_cap)
    # negligible tail out to the truncation point: wide geometric panels
    while edges[-1] < u_max:
        width *= 1.6
        edges.append(min(edges[-1] + width, u_max))
    return np.asarray(edges)


class PricerKernel:
    """Reusable OTM pricer for one (model, tenor) pair.

    ``n_quad`` is the Gauss-Legendre node count per panel; doubling it is
    the quadrature convergence knob. The Riccati solve happens once, at
    construction, on all quadrature nodes.
    """

    def __init__(self, params: RoughHestonParams, T: float,
                 n_quad: int = DEFAULT_NODES_PER_PANEL,
                 n_steps: int = 512, u_max: float | None = None):
        validate(params)
        if not (T > 0):
            raise ConfigError("tenor must be positive")
        if n_quad < 4:
            raise ConfigError("n_quad must be at least 4")
        self.params = params
        self.tenor = float(T)
        self.spot = math.exp(params.x0)
        if u_max is None:
            u_max = 200.0 / math.sqrt(params.v0 * T)
        edges = _panel_edges(params, T, u_max)
        x, gl_w = np.polynomial.legendre.leggauss(int(n_quad))
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * gl_w[None, :]).ravel()
        # chunked so the (n_steps x nodes) solver workspace stays bounded
        phi = np.concatenate([
            cf_grid(nodes[i : i + 4096] - 0.5j, params, T, n_steps, check=True)
            for i in range(0, nodes.size, 4096)
        ])
        self._nodes = nodes
        self._g = weights * phi / (nodes * nodes + 0.25)
        tail = np.abs(self._g[-n_quad:]).max()
        if tail > 1e-12 * max(1.0, np.abs(self._g).max()):
            raise NumericalError(
                "Fourier integrand not negligible at the truncation point; "
                "increase u_max")

    def prices(self, log_strikes) -> np.ndarray:
        """OTM prices (currency) at the given log-strikes."""
        kt = np.atleast_1d(np.asarray(log_strikes, dtype=float)) - self.params.x0
        j = (np.exp(-1j * np.outer(kt, self._nodes)) @ self._g).real
        intrinsic = np.where(kt > 0, 1.0, np.exp(kt))
        rel = intrinsic - np.exp(0.5 * kt) * j / math.pi
        return np.maximum(rel, 0.0) * self.spot

    def price(self, log_strike: float) -> float:
        return float(self.prices([log_strike])[0])

    def call_put(self, log_strike: float) -> tuple[float, float]:
        """(call, put) at one strike, sharing a single Fourier integral;
        parity C - P = S - K is then structural and safe to assert."""
        kt = float(log_strike) - self.params.x0
        j = float((np.exp(-1j * kt * self._nodes) @ self._g).real)
        common = math.exp(0.5 * kt) * j / math.pi
        return (self.spot * (1.0 - common), self.spot * (math.exp(kt) - common))


def price_otm(params: RoughHestonParams, T: float, log_strike: float,
              n_quad: int = DEFAULT_NODES_PER_PANEL, n_steps: int = 512,
              check: bool = False, tol: float = 1e-9) -> float:
    """Price one OTM option (call above the spot log-price, put at or below).

    With ``check`` enabled the quadrature is repeated with twice the nodes
    per panel and a :class:`NumericalError` is raised if the price moves
    by more than ``tol`` relative to the spot.
    """
    kernel = PricerKernel(params, T, n_quad=n_quad, n_steps=n_steps)
    value = kernel.price(log_strike)
    if check:
        fine = PricerKernel(params, T, n_quad=2 * n_quad, n_steps=n_steps)
        if abs(fine.price(log_strike) - value) > tol * kernel.spot:
            raise NumericalError(
                f"price quadrature not converged at n_quad={n_quad}")
    return value


def generate_chain(params: RoughHestonParams, T: float,
                   strike_step: float = DEFAULT_STRIKE_STEP,
                   cutoff: float = DEFAULT_PRICE_CUTOFF,
                   n_quad: int = DEFAULT_NODES_PER_PANEL,
                   n_steps: int = 512,
                   kernel: PricerKernel | None = None) -> OptionChain:
    """Build the true (noiseless) chain on an arithmetic strike lattice.

    Strikes are multiples of ``strike_step``. Starting next to the spot,
    the put wing extends down and the call wing up until the first strike
    whose true price falls below ``cutoff``; that strike is excluded. A
    pre-built :class:`PricerKernel` for the same (params, T) may be passed
    to share the Riccati solve across several grids.
    """
    if strike_step <= 0:
        raise ConfigError("strike_step must be positive")
    if kernel is None:
        kernel = PricerKernel(params, T, n_quad=n_quad, n_steps=n_steps)
    spot = math.exp(params.x0)

    def wing(first: float, direction: float) -> list[tuple[float, float]]:
        out = []
        strike = first
        while strike > 0:
            block = strike + direction * strike_step * np.arange(64)
            block = block[block > 0]
            if block.size == 0:
                break
            prices = kernel.prices(np.log(block))
            below = np.nonzero(prices < cutoff)[0]
            last = below[0] if below.size else block.size
            out.extend(zip(block[:last], prices[:last]))
            if below.size:
                break
            strike = block[-1] + direction * strike_step
        return out

    lower_anchor = math.floor(spot / strike_step) * strike_step
    puts = wing(lower_anchor, -1.0)
    calls = wing(lower_anchor + strike_step, +1.0)
    quotes = sorted(puts + calls)
    if not quotes:
        raise ConfigError("empty chain: price cutoff exceeds every option price")
    strikes = np.array([k for k, _ in quotes])
    prices = np.array([p for _, p in quotes])
    return chain_from_arrays(T, params.x0, np.log(strikes), prices, noisy=False)


def add_noise(chain: OptionChain, noise: NoiseModel, stream: int = 0) -> OptionChain:
    """Apply multiplicative noise to a noiseless chain.

    ``stream`` selects an independent substream of the model's seed, so
    several chains (e.g. two tenors) can carry independent noise drawn
    from one configured seed. Negative noisy prices are floored at zero.
    """
    if chain.noisy:
        raise ConfigError("chain already carries noise")
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=int(noise.seed), spawn_key=(int(stream),)))
    eps = rng.standard_normal(chain.n_quotes)
    noisy = np.maximum(chain.prices * (1.0 + noise.level * eps), 0.0)
    return chain.with_prices(noisy, noisy=True)
