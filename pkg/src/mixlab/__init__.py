"""Mixing-time laboratory for reversible Markov chains on weighted networks."""

from .chain import MarkovChain, build_chain, chain_from_kernel, check_reversibility
from .network import NetworkBuilder, NetworkError, WeightedNetwork, load_network, save_network

__all__ = [
    "MarkovChain", "NetworkBuilder", "NetworkError", "WeightedNetwork",
    "build_chain", "chain_from_kernel", "check_reversibility", "load_network", "save_network",
]
__version__ = "0.1.0"
