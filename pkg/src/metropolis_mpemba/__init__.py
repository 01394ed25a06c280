"""Metropolis dynamics on graphs: exact complete-graph spectra and Mpemba effects."""

__version__ = "0.1.0"

from .exceptions import ConvergenceError, DetailedBalanceError, DisconnectedGraphError
from .markov import (
    AdjacencyGraph,
    BoltzmannDistribution,
    EnergySpectrum,
    RateMatrix,
    boltzmann,
    build_metropolis,
    check_detailed_balance,
    check_generator,
)
from .mpemba import (
    A2Curve,
    GapCheck,
    GridSpec,
    MpembaReport,
    a2_complete_closed_form,
    a2_inner,
    a2_scan,
    analyze,
    classify,
    detect_strong,
    detect_weak,
    gap_check,
)
from .numeric import jacobi_eigen, match_spectra, numeric_spectrum, symmetrize
from .spectral import (
    SpectralDecomposition,
    closed_form_spectrum,
    order_states,
    residual,
    tail_sums,
)
