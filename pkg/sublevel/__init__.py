from sublevel.coarse import GalerkinModel, SamplingOperator, build_galerkin, check_coherency, sample_operator
from sublevel.optimizers import LineSearchConfig, MethodConfig, armijo, run
from sublevel.problems import (
    LogLinear,
    Logistic,
    NonlinearLeastSquares,
    Quadratic,
    SvmHinge2,
    SyntheticSpec,
    generate_synthetic,
    make_objective,
)
from sublevel.profiler import PhaseTimer
from sublevel.spectral import LowRankInverse, TruncatedSpectrum, floor_spectrum, randomized_tsvd
from sublevel.trace import IterationRecord, IterationTrace
from sublevel.version import __version__
