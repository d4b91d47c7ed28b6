"""Quadratic-Gaussian (second Wiener chaos) utilities.

Random variables of the form X = mean + sum_j beta_j xi_j
+ sum_j alpha_j (xi_j^2 - 1), with iid standard normal xi_j, have the
closed-form characteristic function

    E[e^{iuX}] = exp( i mean u
                      - 1/2 sum_j [ log(1 - 2 i alpha_j u) + 2 i alpha_j u
                                    + beta_j^2 u^2 / (1 - 2 i alpha_j u) ] )

and fully explicit low-order moments. This module provides the CF, exact
sampling, the moment identities, and the first four probabilists'
Hermite polynomials; together they form an independent verification
layer for the expansion machinery.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["ChaosSpec", "chaos_cf", "chaos_sample", "chaos_sample_parts",
           "chaos_moments", "hermite"]


@dataclass(frozen=True)
class ChaosSpec:
    """Finite quadratic-Gaussian specification (sequences padded to a
    common length at construction)."""

    mean: float = 0.0
    alphas: tuple[float, ...] = ()
    betas: tuple[float, ...] = ()

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        b = tuple(float(v) for v in self.betas)
        n = max(len(a), len(b))
        object.__setattr__(self, "alphas", a + (0.0,) * (n - len(a)))
        object.__setattr__(self, "betas", b + (0.0,) * (n - len(b)))
        if not all(np.isfinite(self.alphas + self.betas + (self.mean,))):
            raise ConfigError("chaos coefficients must be finite")


def chaos_cf(spec: ChaosSpec, u: float) -> complex:
    """Characteristic function at a real argument.

    The complex logarithm is the principal branch, which is safe here:
    Re(1 - 2 i alpha u) = 1 keeps every argument in the right half-plane.
    """
    a = np.asarray(spec.alphas)
    b = np.asarray(spec.betas)
    z = 1.0 - 2j * a * u
    s = np.sum(np.log(z) + 2j * a * u + b * b * u * u / z)
    return complex(np.exp(1j * spec.mean * u - 0.5 * s))


def chaos_sample_parts(spec: ChaosSpec, n: int, seed: int):
    """Draw (X1, X2): the Gaussian and centered-quadratic parts, from one
    set of underlying normals."""
    if n < 1:
        raise ConfigError("need at least one draw")
    a = np.asarray(spec.alphas)
    b = np.asarray(spec.betas)
    rng = np.random.default_rng(seed)
    if a.size == 0:
        zero = np.zeros(n)
        return zero, zero.copy()
    xi = rng.standard_normal((n, a.size))
    x1 = xi @ b
    x2 = (xi * xi - 1.0) @ a
    return x1, x2


def chaos_sample(spec: ChaosSpec, n: int, seed: int) -> np.ndarray:
    """n independent draws from the exact representation; deterministic
    under the seed."""
    x1, x2 = chaos_sample_parts(spec, n, seed)
    return spec.mean + x1 + x2


def chaos_moments(spec: ChaosSpec) -> tuple[float, float, float, float, float, float]:
    """The six explicit moment identities:

    ( E[X1^2], E[X2^2], E[X2^3], E[X1^2 X2],
      Cov(X1^2, X2^2), Cov(X1^2, X2^3) - 3 E[X1^2 X2] E[X2^2] )
    = ( sum b^2, 2 sum a^2, 8 sum a^3, 2 sum a b^2,
        8 sum a^2 b^2, 48 sum a^3 b^2 ).
    """
    a = np.asarray(spec.alphas)
    b = np.asarray(spec.betas)
    b2 = b * b
    return (
        float(np.sum(b2)),
        float(2.0 * np.sum(a**2)),
        float(8.0 * np.sum(a**3)),
        float(2.0 * np.sum(a * b2)),
        float(8.0 * np.sum(a**2 * b2)),
        float(48.0 * np.sum(a**3 * b2)),
    )


def hermite(n: int, x: float) -> float:
    """Probabilists' Hermite polynomials H_0..H_3 (normalized by n!)."""
    if n == 0:
        return 1.0
    if n == 1:
        return float(x)
    if n == 2:
        return 0.5 * (x * x - 1.0)
    if n == 3:
        return x**3 / 6.0 - 0.5 * x
    raise ConfigError("hermite supports orders 0..3 only")
