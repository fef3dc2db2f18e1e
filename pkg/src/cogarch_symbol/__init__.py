"""Symbol, generator and semimartingale characteristics of the COGARCH process.

Closed forms live in :mod:`symbol`, :mod:`generator` and
:mod:`characteristics`; :mod:`mc` supplies the independent Monte-Carlo
estimator they are checked against.
"""
from ._accel import BACKEND
from .cogarch import (CogarchParams, PathBatch, SamplePath, StatePoint, apply_jump,
                      evolve_volatility_between_jumps, exit_time_statistics, integrated_variance,
                      simulate_chunk, simulate_path)
from .characteristics import (CharacteristicsPath, DifferentialCharacteristics, compensator_rate,
                              differential_characteristics, empirical_characteristics_check,
                              integrate_characteristics)
from .generator import (TestFunction, apply_generator, combine, constant, cutoff_plane_wave,
                        gaussian_bump, martingale_residual, semigroup_derivative)
from .levy import (AtomicMeasure, DensityMeasure, LevyTriplet, ZERO_MEASURE, characteristic_exponent,
                   levy_symbol, sample_increments, sample_skeleton)
from .mc import EstimatorResult, compare, estimate_symbol, r_independence_check
from .quadrature import QuadratureError, gauss_kronrod
from .symbol import (ImageMeasureSpec, SymbolValue, cogarch_symbol, drift_coefficients, f_v,
                     image_measure, integrate_against_image, positive_definiteness_margin, sde_symbol)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AtomicMeasure", "CharacteristicsPath", "CogarchParams", "DensityMeasure",
    "DifferentialCharacteristics", "EstimatorResult", "ImageMeasureSpec", "LevyTriplet", "PathBatch",
    "QuadratureError", "SamplePath", "StatePoint", "SymbolValue", "TestFunction", "ZERO_MEASURE",
    "apply_generator", "apply_jump", "characteristic_exponent", "cogarch_symbol", "combine", "compare",
    "compensator_rate", "constant", "cutoff_plane_wave", "differential_characteristics",
    "drift_coefficients", "empirical_characteristics_check", "estimate_symbol",
    "evolve_volatility_between_jumps", "exit_time_statistics", "f_v", "gauss_kronrod",
    "gaussian_bump", "image_measure", "integrate_against_image", "integrate_characteristics",
    "integrated_variance", "levy_symbol", "martingale_residual", "positive_definiteness_margin",
    "r_independence_check", "sample_increments", "sample_skeleton", "sde_symbol",
    "semigroup_derivative", "simulate_chunk", "simulate_path",
]
