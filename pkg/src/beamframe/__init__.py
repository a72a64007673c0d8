"""Spectra and eigenmodes of Euler-Bernoulli beam frames with semi-rigid joints."""

from .frame import FrameGraph, canonical_examples, parse_frame, serialize, validate

__version__ = "0.1.0"

__all__ = ["FrameGraph", "canonical_examples", "parse_frame", "serialize", "validate", "__version__"]
