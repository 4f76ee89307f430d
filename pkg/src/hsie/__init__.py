"""Hardy space infinite elements for Helmholtz scattering and resonance problems."""
from __future__ import annotations

from .errors import HSIEError
from .hardy import HardyParams, hsm_mass_1d, hsm_stiffness_1d, make_D, make_resolvent, make_T

__version__ = "0.1.0"

__all__ = [
    "HSIEError",
    "HardyParams",
    "hsm_mass_1d",
    "hsm_stiffness_1d",
    "make_D",
    "make_resolvent",
    "make_T",
]
