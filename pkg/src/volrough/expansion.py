"""Term-by-term short-maturity expansion of the conditional characteristic
function of the normalized log increment, evaluated from a spot snapshot.

The approximation splits into three pieces that are exposed separately:

  leading   exp( iu alpha sqrt(T) - u^2/2 * int_0^1 sigma_proj(s)^2 ds
                 + T psi(u/sqrt(T))
                 - iu^3 [ sigma^2 eta_sigma sqrt(T)/2
                          + sigma^2 eta T^H / Gamma(H + 5/2)
                          + Cp10(T) T^{2H} ] )

  c1_block  exp(-u^2 sigma^2/2 + T varphi(u/sqrt(T)))
              * ( C11 + C12 + C13 + C14 + Cp11 )

  c2_term   C2(u) T^{2H}

where psi/varphi are the jump characteristic exponents, the C1x terms
collect the small-jump dynamics at their T^{H_delta + 1/2}, T and
T^{3/2} scales, Cp10/Cp11 capture the gap between projected and spot
characteristics (both vanish identically for constant projections), and
C2 carries the second-order rough-volatility contribution at T^{2H}.
The total is exactly leading + c1_block + c2_term; the neglected
remainder is of smaller order than T^{2H}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gamma as _gamma

from .errors import ConfigError
from .model import (JumpSpec, RoughHestonParams, SpotCharacteristics,
                    spot_from_rough_heston, _PROJ_GRID)

__all__ = [
    "JumpExponents",
    "ChiTerms",
    "ExpansionResult",
    "jump_exponents",
    "chi_terms",
    "expansion_cf",
    "expansion_cf_rough",
    "conditional_mean",
]


@dataclass(frozen=True)
class JumpExponents:
    """Characteristic exponents of the big (phi) and small (varphi) jumps."""

    phi: complex
    varphi: complex

    @property
    def psi(self) -> complex:
        return self.phi + self.varphi


@dataclass(frozen=True)
class ChiTerms:
    """Small-jump interaction integrals and the projected-chi curve."""

    chi1: complex
    chi2: complex
    chi3: complex
    chi4: complex
    chi1_proj: Callable[[float], complex]


def jump_exponents(jumps: JumpSpec | None, u: float) -> JumpExponents:
    """phi(u) = sum w (e^{iu gamma} - 1), varphi(u) = sum w (e^{iu delta} - 1 - iu delta)."""
    phi = 0.0 + 0.0j
    varphi = 0.0 + 0.0j
    if jumps is not None and jumps.big is not None:
        g = jumps.big
        phi = np.sum(g.weights * (np.exp(1j * u * g.sizes) - 1.0))
    if jumps is not None and jumps.small is not None:
        s = jumps.small
        varphi = np.sum(s.weights * (np.exp(1j * u * s.sizes) - 1.0
                                     - 1j * u * s.sizes))
    return JumpExponents(phi=complex(phi), varphi=complex(varphi))


def chi_terms(jumps: JumpSpec, u: float,
              delta_proj: Callable[[float], np.ndarray] | None = None) -> ChiTerms:
    """Weighted small-jump sums against e^{iu delta} - 1.

    Every coefficient table must be present on the small-jump component;
    ``delta_proj`` (horizon fraction -> projected sizes) feeds the
    projected chi1 curve and defaults to the constant spot sizes.
    """
    if jumps is None or jumps.small is None:
        raise ConfigError("chi terms need a small-jump table")
    s = jumps.small
    for name in ("sigma_delta", "eta_delta", "delta_sigma", "delta_delta"):
        if getattr(s, name) is None:
            raise ConfigError(f"missing coefficient table: {name}")
    ee = np.exp(1j * u * s.sizes) - 1.0
    wee = s.weights * ee
    chi1 = np.sum(s.sigma_delta * wee)
    chi2 = np.sum(s.eta_delta * wee)
    chi4 = np.sum(s.delta_sigma * wee)
    chi3 = np.einsum("i,ij,j->", wee, s.delta_delta, wee)

    sizes = s.sizes

    def chi1_proj(frac: float) -> complex:
        proj = sizes if delta_proj is None else np.asarray(delta_proj(frac))
        return complex(np.sum((proj - sizes) * wee))

    return ChiTerms(chi1=complex(chi1), chi2=complex(chi2), chi3=complex(chi3),
                    chi4=complex(chi4), chi1_proj=chi1_proj)


@dataclass(frozen=True)
class ExpansionResult:
    """The assembled approximation and its displayed pieces."""

    u: float
    tenor: float
    total: complex
    leading: complex
    c1_block: complex
    c2_term: complex
    c_prime_10: float


_SIMPSON_W = None


def _simpson_weights() -> np.ndarray:
    global _SIMPSON_W
    if _SIMPSON_W is None:
        n = _PROJ_GRID.size
        w = np.ones(n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        _SIMPSON_W = w * (_PROJ_GRID[1] - _PROJ_GRID[0]) / 3.0
    return _SIMPSON_W


def _kernel_weight_matrix(beta: float, grid: np.ndarray) -> np.ndarray:
    """Lower-triangular weights: row m integrates (s_m - r)^(beta-1) against
    a piecewise-linear function on grid points 0..m (exact for hats)."""
    n = grid.size - 1
    dt = grid[1] - grid[0]
    scale = dt**beta / (beta * (beta + 1.0))
    w = np.zeros((n + 1, n + 1))
    for m in range(1, n + 1):
        j = np.arange(1, m)
        w[m, 0] = (m - 1.0) ** (beta + 1.0) - (m - beta - 1.0) * float(m) ** beta
        w[m, j] = ((m - j + 1.0) ** (beta + 1.0) + (m - j - 1.0) ** (beta + 1.0)
                   - 2.0 * (m - j) ** (beta + 1.0))
        w[m, m] = 1.0
    return w * scale


def _c_prime_10(spot: SpotCharacteristics) -> float:
    """Projected-curve correction of the rough phase term; zero for
    constant projections."""
    if spot.sigma_proj is None and spot.eta_proj is None:
        return 0.0
    s = _PROJ_GRID
    beta = spot.h + 0.5
    sig = spot.sigma_curve(s)
    eta = spot.eta_curve(s)
    inner_rough = _kernel_weight_matrix(beta, s) @ (sig * eta)
    const = spot.sigma**2 * spot.eta * s**beta / beta
    vals = sig * inner_rough - const
    outer = float(_simpson_weights() @ vals)
    return outer / _gamma(spot.h + 0.5)


def _c2(spot: SpotCharacteristics, u: float) -> float:
    h = spot.h
    s2 = spot.sigma**2
    e2 = spot.eta**2 + spot.eta_tilde**2
    bracket = (s2 * u**4 * (spot.sigma * spot.sigma_eta + spot.eta**2)
               / _gamma(2.0 * h + 3.0)
               + s2 * e2 * u**4 / (4.0 * (h + 1.0) * _gamma(h + 1.5) ** 2)
               - e2 * u**2 / (8.0 * h * _gamma(h + 0.5) * _gamma(h + 1.5)))
    return math.exp(-0.5 * u * u * s2) * bracket


def expansion_cf(spot: SpotCharacteristics, u: float, T: float) -> ExpansionResult:
    """Evaluate the expansion at one (u, T); negative u by conjugation."""
    if not (T > 0):
        raise ConfigError("tenor must be positive")
    if u < 0:
        res = expansion_cf(spot, -u, T)
        return ExpansionResult(u=u, tenor=T, total=res.total.conjugate(),
                               leading=res.leading.conjugate(),
                               c1_block=res.c1_block.conjugate(),
                               c2_term=res.c2_term.conjugate(),
                               c_prime_10=res.c_prime_10)

    h = spot.h
    sqrt_t = math.sqrt(T)
    u_t = u / sqrt_t
    sig = spot.sigma

    sig_curve = spot.sigma_curve(_PROJ_GRID)
    int_sigma2 = float(_simpson_weights() @ (sig_curve**2))

    exps = jump_exponents(spot.jumps, u_t)
    cp10 = _c_prime_10(spot)
    rough_phase = (0.5 * sig**2 * spot.eta_sigma * sqrt_t
                   + sig**2 * spot.eta * T**h / _gamma(h + 2.5)
                   + cp10 * T ** (2.0 * h))
    leading = np.exp(1j * u * spot.alpha * sqrt_t
                     - 0.5 * u * u * int_sigma2
                     + T * exps.psi
                     - 1j * u**3 * rough_phase)

    c1_sum = 0.0 + 0.0j
    if spot.jumps is not None and spot.jumps.small is not None:
        hd = spot.jumps.h_delta
        chis = chi_terms(spot.jumps, u_t, delta_proj=spot.delta_proj)
        c11 = -u * u * sig * T ** (hd + 0.5) * chis.chi1 / _gamma(hd + 2.5)
        c12 = -0.5 * u * u * sig * T * chis.chi2
        c13 = 0.5j * u * T**1.5 * chis.chi3
        c14 = -0.5 * u * u * sig * T * chis.chi4
        cp11 = (1j * u * sqrt_t
                * (_simpson_weights()
                   @ np.array([chis.chi1_proj(s) for s in _PROJ_GRID])))
        c1_sum = c11 + c12 + c13 + c14 + cp11
    c1_block = np.exp(-0.5 * u * u * sig**2 + T * exps.varphi) * c1_sum

    c2_term = _c2(spot, u) * T ** (2.0 * h)
    total = leading + c1_block + c2_term
    return ExpansionResult(u=u, tenor=T, total=complex(total),
                           leading=complex(leading), c1_block=complex(c1_block),
                           c2_term=complex(c2_term), c_prime_10=cp10)


def expansion_cf_rough(params: RoughHestonParams, u: float, T: float) -> ExpansionResult:
    """Expansion for the rough Heston spot snapshot (no jumps, flat projections)."""
    return expansion_cf(spot_from_rough_heston(params), u, T)


def conditional_mean(spot: SpotCharacteristics, T: float) -> float:
    """Leading term of the conditional mean of the raw increment,
    (alpha + sum w gamma) * T; the neglected remainder is O(T^{1+H}).

    Requires finite-variation activity q = 1 and big-jump smoothness at
    least H when jumps are present.
    """
    if T < 0:
        raise ConfigError("tenor must be nonnegative")
    level = spot.alpha
    if spot.jumps is not None:
        if spot.jumps.q != 1.0:
            raise ConfigError("conditional mean expansion needs q = 1")
        if spot.jumps.h_gamma < spot.jumps.h:
            raise ConfigError("conditional mean expansion needs H_gamma >= H")
        if spot.jumps.big is not None:
            level += float(np.sum(spot.jumps.big.weights * spot.jumps.big.sizes))
    return level * T
