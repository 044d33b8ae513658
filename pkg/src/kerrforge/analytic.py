"""Exact closed-form spectra used as oracles for the numerical stack."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import dicke_block


@dataclass(frozen=True)
class DressedPair:
    """Eigenpairs of one JC block.

    Vectors are expressed in the basis ``(|n+1, down>, |n, up>)``; ``plus`` is
    always the upper level.
    """

    n: int
    energy_plus: float
    energy_minus: float
    theta: float

    @property
    def plus(self) -> np.ndarray:
        return np.array([math.cos(self.theta / 2), math.sin(self.theta / 2)])

    @property
    def minus(self) -> np.ndarray:
        return np.array([-math.sin(self.theta / 2), math.cos(self.theta / 2)])


def jc_eigenpair(n: int, omega_c: float, omega_q: float, g: float) -> DressedPair:
    """Exact JC energies and mixing angle for the ``n + 1`` excitation block.

    The mixing angle uses the two-argument arctangent of ``2 g sqrt(n+1)`` and
    ``Delta``, so that ``theta = pi/2`` on resonance and ``|n,+>`` stays the
    upper level for either sign of the detuning.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    delta = omega_c - omega_q
    split = 0.5 * math.sqrt(4 * g * g * (n + 1) + delta * delta)
    centre = (n + 0.5) * omega_c
    theta = math.atan2(2 * g * math.sqrt(n + 1), delta)
    return DressedPair(n, centre + split, centre - split, theta)


def jc_dispersive_energy(n: int, omega_c: float, delta: float, g: float) -> float:
    """Fourth-order dispersive energy of ``|n, down>`` relative to ``|0, down>``.

    ``E_n = (omega_c + g^2/Delta) n - (g^4/Delta^3) n^2`` with
    ``Delta = omega_c - omega_q``. The expansion of the exact square root
    has no linear ``g^4`` term.
    """
    return (omega_c + g * g / delta) * n - g**4 / delta**3 * n * n


@dataclass(frozen=True)
class SymmetricSpectrum:
    energies: tuple
    tags: tuple

    def branch(self, tag: str) -> list[float]:
        return [e for e, t in zip(self.energies, self.tags) if t == tag]


def symmetric_1c2q_eigenvalues(n: int, omega_c: float, delta: float, g: float) -> SymmetricSpectrum:
    """Four block energies at ``g1 = g2 = g``, ``Delta1 = -Delta2 = Delta``.

    Energies are returned as ``[(n+1) w_c, (n+1) w_c, (n+1) w_c + r, (n+1) w_c - r]``
    with ``r = sqrt(4 g^2 (n + 3/2) + Delta^2)``. Tags come from the eigenvectors
    of :func:`dicke_block`: an eigenvalue whose weight on the aligned qubit
    states ``dd``/``uu`` exceeds one half is tagged ``"aligned"``, otherwise
    ``"split"``.
    """
    c = (n + 1) * omega_c
    r = math.sqrt(4 * g * g * (n + 1.5) + delta * delta)
    energies = (c, c, c + r, c - r)
    block = dicke_block(n, omega_c, delta, -delta, g, g)
    vals, vecs = np.linalg.eigh(block)
    aligned = np.abs(vecs[0]) ** 2 + np.abs(vecs[3]) ** 2
    # degenerate levels share the aligned subspace, so sum weights within clusters
    tags = []
    scale = max(1.0, abs(c), r)
    for e in energies:
        near = np.abs(vals - e) < 1e-9 * scale
        weight = aligned[near].sum() / max(near.sum(), 1)
        tags.append("aligned" if weight > 0.5 else "split")
    return SymmetricSpectrum(energies, tuple(tags))
