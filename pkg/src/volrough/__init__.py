"""Short-maturity option analytics: exact rough Heston pricing, option
portfolios spanning the characteristic function, term-by-term CF
expansions, and Hurst-parameter estimation with a Monte Carlo harness."""

__version__ = "0.1.0"

from .errors import (ChainFormatError, ConfigError, NumericalError,
                     VolroughError)
from .model import (BigJumpTable, JumpSpec, OptionChain, OptionQuote,
                    RoughHestonParams, SmallJumpTable, SpotCharacteristics,
                    chain_from_arrays, spot_from_rough_heston, validate)
from .riccati import RiccatiSolution, cf, cf_complex, cf_grid, solve_h
from .pricing import NoiseModel, PricerKernel, add_noise, generate_chain, price_otm
from .spanning import (CFPortfolioEstimate, arg_statistic, estimate_portfolio,
                       oracle_spanning_integral, spanning_cf, spanning_cf_many,
                       spanning_mean)
from .hurst import (HurstEstimate, UGrid, adaptive_ugrid, estimate_h,
                    estimate_h_jump_robust, f_of_h, first_diff, invert_f,
                    regression_intercept, scan_portfolio, second_diff)
from .expansion import (ChiTerms, ExpansionResult, JumpExponents, chi_terms,
                        conditional_mean, expansion_cf, expansion_cf_rough,
                        jump_exponents)
from .chaos import ChaosSpec, chaos_cf, chaos_moments, chaos_sample, hermite
from .harness import (ExpansionCheck, QuantileReport, ScenarioResult,
                      StudyConfig, emit_report, ingest_chain_csv, run_mc_study,
                      verify_expansion, write_chain_csv)
