"""Distribution server for range-coding steganography over a causal LM."""

from .model import ALPHABET, TinyCausalLM
from .server import Bridge, BridgeConfig, decimal_string, main

__version__ = "0.1.0"
