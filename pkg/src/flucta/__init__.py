"""Random-walk fluctuation analysis: FA, R/S, DFA-p, BMA, CMA and MDFA-p,
surrogate generation and ensemble studies."""

from .errors import DegenerateInputError, FluctaError, InsufficientDataError, ParameterError
from .fluctuation import (
    BMA, CMA, DFA1, DFA2, FA, MDFA1, RS, FluctuationCurve, Method, bma, cma, default_scale_grid,
    dfa, fa, fluctuation_curve, mdfa, rs,
)
from .series import Profile, Series, autocorrelation, compute_profile, read_series, series_stats
from .surrogate import (
    CrossoverSpec, GeneratorSpec, TrendSpec, add_trend, downsample, generate_crossover,
    generate_power_law, shuffle_boxes,
)

__version__ = "0.1.0"
