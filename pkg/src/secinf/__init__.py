"""Two-party secure inference kernel with exact operation accounting."""

from .field import FieldParams, DEFAULT_MODULUS, TOY_PARAMS
from .slothe import OpLedger, PackedVector, SlotBackend

__all__ = [
    "FieldParams",
    "DEFAULT_MODULUS",
    "TOY_PARAMS",
    "OpLedger",
    "PackedVector",
    "SlotBackend",
]

__version__ = "0.1.0"
