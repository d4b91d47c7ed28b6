import math

import numpy as np
import pytest
from scipy.stats import norm

from volrough import RoughHestonParams, chain_from_arrays, generate_chain
from volrough.pricing import PricerKernel

T1 = 3.0 / 252.0
T2 = 6.0 / 252.0


def bs_otm_price(spot, strike, sigma, tenor):
    """Black-Scholes OTM price under zero rates: the closed-form oracle."""
    st = sigma * math.sqrt(tenor)
    d1 = (math.log(spot / strike) + 0.5 * sigma * sigma * tenor) / st
    call = spot * norm.cdf(d1) - strike * norm.cdf(d1 - st)
    return call if strike > spot else call - spot + strike


def bs_chain(spot, sigma, tenor, k_lo, k_hi, mesh):
    """Dense noiseless chain from closed-form Black-Scholes prices."""
    x0 = math.log(spot)
    ks = x0 + np.arange(k_lo, k_hi + 0.5 * mesh, mesh)
    strikes = np.exp(ks)
    st = sigma * math.sqrt(tenor)
    d1 = (np.log(spot / strikes) + 0.5 * sigma * sigma * tenor) / st
    calls = spot * norm.cdf(d1) - strikes * norm.cdf(d1 - st)
    otm = np.where(strikes > spot, calls, calls - spot + strikes)
    return chain_from_arrays(tenor, x0, ks, np.maximum(otm, 0.0))


@pytest.fixture(scope="session")
def params_mid():
    """The medium-volatility rough scenario used throughout."""
    return RoughHestonParams(x0=math.log(3000.0), v0=0.03, nu=0.5, rho=-0.9, h=0.25)


@pytest.fixture(scope="session")
def kernel_mid_t1(params_mid):
    return PricerKernel(params_mid, T1)


@pytest.fixture(scope="session")
def chain_mid_t1(params_mid, kernel_mid_t1):
    return generate_chain(params_mid, T1, kernel=kernel_mid_t1)


@pytest.fixture(scope="session")
def chain_mid_t2(params_mid):
    return generate_chain(params_mid, T2)


@pytest.fixture(scope="session")
def bs_dense_chain():
    """sigma = 0.2, T = 0.25, mesh 1e-3, wings to +-10 standard deviations."""
    return bs_chain(3000.0, 0.2, 0.25, -1.0, 1.0, 1e-3)
