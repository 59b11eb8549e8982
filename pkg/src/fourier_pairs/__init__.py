"""Fourier uniqueness and non-uniqueness pairs: node statistics, spectral grids,
Wirtinger-type inequalities, sampling frames, non-uniqueness witnesses and
crystalline measures."""

from .errors import FourierPairsError
from .nodes import NodeSequence, classify_pair, gen_power_nodes
from .spectral import Grid, GridFunction, SpaceParams

__version__ = "0.1.0"

__all__ = ["FourierPairsError", "NodeSequence", "classify_pair", "gen_power_nodes", "Grid",
           "GridFunction", "SpaceParams", "__version__"]
