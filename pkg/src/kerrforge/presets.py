"""Reference circuits used by the examples, the tests and the CLI.

All frequencies are in GHz. Detunings follow ``Delta = w_cavity - w_device``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .circuit import CavitySpec, Circuit, Coupling, Duffing, Multilevel
from .closedform import preset_circuit
from .errors import NoRootInBounds

#: Cavity frequency shared by the single-cavity scenarios.
OMEGA_C = 9.2

# single cavity with a transmon and a mirrored Duffing partner
COLLAPSE_G = 0.1
COLLAPSE_DELTA = 1.0
COLLAPSE_CHI = -0.3

# storage cavity with a transmon and a fluxonium-like multilevel device
STORAGE_TRANSMON = 8.2
STORAGE_TRANSMON_CHI = -0.3
STORAGE_G_TRANSMON = 0.08
STORAGE_G_FLUXONIUM = 0.03
FLUXONIUM_LEVELS = (0.0, 5.505, 10.904, 13.213)

# two cavities, two Duffing devices (gate scenario)
GATE_G = ((0.08, 0.0876), (0.0876, 0.08))
GATE_CHI = (-0.3, 0.3)
GATE_DELTA_OFF = ((1.0, -1.2), (1.2, -1.0))
GATE_SHIFT = 1.0


def single_transmon(fock_dim: int = 30, levels: int = 4, rwa: bool = True) -> Circuit:
    """Cavity at 9.2 GHz coupled to one transmon 1 GHz below it."""
    return preset_circuit("1C1T", omega_c=OMEGA_C, fock_dim=fock_dim, levels=levels, rwa=rwa,
                          g=COLLAPSE_G, delta=COLLAPSE_DELTA, chi=COLLAPSE_CHI)


def mirrored_pair(fock_dim: int = 30, levels: int = 4, rwa: bool = True) -> Circuit:
    """The transmon plus a Duffing device with opposite detuning and anharmonicity."""
    return preset_circuit("1C2D", omega_c=OMEGA_C, fock_dim=fock_dim, levels=levels, rwa=rwa,
                          g=(COLLAPSE_G, COLLAPSE_G), delta=(COLLAPSE_DELTA, -COLLAPSE_DELTA),
                          chi=(COLLAPSE_CHI, -COLLAPSE_CHI))


def fluxonium_weights(lambda02: float) -> tuple:
    """Ladder weights ``sqrt(j + 1)`` plus a ``0 <-> 2`` weight ``lambda02``."""
    n = len(FLUXONIUM_LEVELS)
    w = np.zeros((n, n))
    for j in range(n - 1):
        w[j, j + 1] = w[j + 1, j] = np.sqrt(j + 1)
    w[0, 2] = w[2, 0] = lambda02
    return tuple(map(tuple, w))


def storage_transmon(fock_dim: int = 24) -> Circuit:
    """Storage cavity with its transmon only."""
    return Circuit(
        [CavitySpec("c", OMEGA_C, fock_dim)],
        [Duffing("t", STORAGE_TRANSMON, STORAGE_TRANSMON_CHI, 4)],
        [Coupling("c", "t", STORAGE_G_TRANSMON)],
    )


def storage_with_fluxonium(fock_dim: int = 24, lambda02: float | None = None) -> Circuit:
    """Storage cavity with the transmon and the multilevel device.

    When ``lambda02`` is omitted, the ``0 <-> 2`` weight is chosen so that the
    fourth-order self-Kerr of the whole circuit vanishes.
    """
    if lambda02 is None:
        lambda02 = cancelling_lambda02()
    base = storage_transmon(fock_dim)
    flux = Multilevel("f", FLUXONIUM_LEVELS, fluxonium_weights(lambda02))
    return Circuit(base.cavities, base.devices + (flux,),
                   base.couplings + (Coupling("c", "f", STORAGE_G_FLUXONIUM),))


def cancelling_lambda02(bounds: tuple = (1.0, 4.0)) -> float:
    """Root in ``bounds`` of the total fourth-order self-Kerr versus ``lambda02``."""
    from .perturbation import kerr_from_paths

    def total(lam):
        return kerr_from_paths(storage_with_fluxonium(8, lam)).self_kerr["c"]

    lo, hi = bounds
    if np.sign(total(lo)) == np.sign(total(hi)):
        raise NoRootInBounds(f"self-Kerr does not change sign for lambda02 in {bounds}")
    return float(brentq(total, lo, hi, xtol=1e-12))


def gate_circuit(on: bool = False, fock_dim: int = 6, levels: int = 4, rwa: bool = True) -> Circuit:
    """Two cavities and two Duffing devices; ``on`` shifts ``q2`` up by 1 GHz."""
    d = np.array(GATE_DELTA_OFF, float)
    if on:
        d[:, 1] -= GATE_SHIFT
    return preset_circuit("2C2D", omega_c=OMEGA_C, fock_dim=fock_dim, levels=levels, rwa=rwa,
                          g=GATE_G, delta=d, chi=GATE_CHI)


SCENARIOS = {
    "single-transmon": single_transmon,
    "mirrored-pair": mirrored_pair,
    "storage-transmon": storage_transmon,
    "storage-fluxonium": storage_with_fluxonium,
    "gate-off": lambda **kw: gate_circuit(False, **kw),
    "gate-on": lambda **kw: gate_circuit(True, **kw),
}
