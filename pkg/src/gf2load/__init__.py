"""Random linear hashing over GF(2): max load, potentials and tail bounds."""

from .estimator import GF2LinearHasher
from .gf2core import BitMatrix, BitVector, EchelonBasis
from .linhash import LinearHash
from .loadmodel import BallSet, CosetPartition, LoadHistogram, opt
from .potential import Certificate, PotentialState, greedy_construct

__version__ = "0.1.0"

__all__ = [
    "BallSet",
    "BitMatrix",
    "BitVector",
    "Certificate",
    "CosetPartition",
    "EchelonBasis",
    "GF2LinearHasher",
    "LinearHash",
    "LoadHistogram",
    "PotentialState",
    "greedy_construct",
    "opt",
]
