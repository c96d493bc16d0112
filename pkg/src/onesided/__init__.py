"""One-sided-error frequency sketches, their fooling adversaries and a protocol simulator."""

from .classic import CountMinSketch, CountSketch, cm_params, cs_params
from .core import (
    INSERTION,
    STRICT_TURNSTILE,
    FrequencyVector,
    HashFamily,
    StreamUpdate,
    StrictTurnstileError,
    apply_stream,
    norm,
)
from .detpq import DetPQSketch, IncoherentMatrix, build_incoherent, choose_field
from .noover import NoOverSketch, no_params
from .nounder import NoUnderSketch, RegimeWarning, nu_params, quantize_up
from .protocol import DisjInstance, plant_yes, run_protocol, sample_eta0

__version__ = "0.1.0"
