"""Kerr nonlinearities of cavities dispersively coupled to qubit-like devices.

Units: frequencies and energies in GHz (ordinary frequency), evolution as
``exp(-2 pi i H t)`` with ``t`` in ns internally and microseconds at the
public interfaces.
"""

__version__ = "0.1.0"

from .circuit import (  # noqa: E402
    CavitySpec,
    Circuit,
    Coupling,
    Duffing,
    Multilevel,
    TwoLevel,
    load_circuit,
    validate_dispersive,
)
from .closedform import closed_form_for_circuit, kerr_closed_form, preset_circuit  # noqa: E402
from .extraction import numeric_kerr_report  # noqa: E402
from .hamiltonian import build  # noqa: E402
from .perturbation import KerrReport, kerr_from_paths  # noqa: E402

__all__ = [
    "CavitySpec",
    "Circuit",
    "Coupling",
    "Duffing",
    "KerrReport",
    "Multilevel",
    "TwoLevel",
    "build",
    "closed_form_for_circuit",
    "kerr_closed_form",
    "kerr_from_paths",
    "load_circuit",
    "numeric_kerr_report",
    "preset_circuit",
    "validate_dispersive",
]
