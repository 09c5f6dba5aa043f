from .fft import Spectrum, irfft, is_power_of_two, rfft
from .linalg import EigenPairs, eig_dense, matpow
from .sampling import latin_hypercube, make_rng, truncated_geometric, truncated_geometric_pmf

__all__ = [
    "EigenPairs",
    "Spectrum",
    "eig_dense",
    "irfft",
    "is_power_of_two",
    "latin_hypercube",
    "make_rng",
    "matpow",
    "rfft",
    "truncated_geometric",
    "truncated_geometric_pmf",
]
