"""Digital semantic-communication link simulator.

A block-DCT codec with a shared vector-quantization codebook feeds a bit
quantizer, an importance-aware OFDM resource mapper, a fading channel,
pilot-based channel estimation and codebook rematching at the receiver.
"""

from .codec import Codebook, dct_decode, dct_encode, load_codebook, rematch, save_codebook, vq_quantize
from .pipeline import SimConfig, run_once, sweep

__all__ = [
    "Codebook",
    "SimConfig",
    "dct_decode",
    "dct_encode",
    "load_codebook",
    "rematch",
    "run_once",
    "save_codebook",
    "sweep",
    "vq_quantize",
]

__version__ = "0.1.0"
