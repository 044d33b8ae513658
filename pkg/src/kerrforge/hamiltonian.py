"""Assembly of the full circuit Hamiltonian (GHz, ordinary frequency).

The Hilbert space orders cavities first, then devices, each in the order they
appear in the :class:`~kerrforge.circuit.Circuit`. Every summand is kept in a
term ledger so that the total can be audited and individual couplings
removed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, Duffing, Multilevel, TwoLevel
from .errors import SizeLimitExceeded
from .fock import HilbertSpace, OperatorMatrix, annihilation, embed

#: Refuse to build spaces larger than this.
HARD_CAP = 2**20


@dataclass(frozen=True, eq=False)
class Term:
    description: str
    symbol: str
    matrix: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class HamiltonianBundle:
    circuit: Circuit
    space: HilbertSpace
    H: OperatorMatrix
    term_ledger: tuple = field(default_factory=tuple)

    @property
    def matrix(self) -> sp.csr_matrix:
        return self.H.matrix

    def dense(self) -> np.ndarray:
        return self.H.toarray()

    @property
    def excitations(self) -> np.ndarray:
        """Total excitation number of every product basis state."""
        return excitation_numbers(self.circuit, self.space)

    @property
    def conserves_excitations(self) -> bool:
        return conserves_excitations(self.circuit)

    def ledger_sum(self) -> sp.csr_matrix:
        total = sp.csr_matrix(self.matrix.shape)
        for t in self.term_ledger:
            total = total + t.matrix
        return total


def space_for(circuit: Circuit) -> HilbertSpace:
    dims = [(c.label, c.fock_dim) for c in circuit.cavities] + [(d.label, d.dim) for d in circuit.devices]
    total = int(np.prod([d for _, d in dims])) if dims else 0
    if total > HARD_CAP:
        report = " x ".join(f"{l}:{d}" for l, d in dims)
        raise SizeLimitExceeded(f"Hilbert space dimension {total} exceeds the cap {HARD_CAP} ({report})")
    return HilbertSpace(tuple(dims))


def excitation_numbers(circuit: Circuit, space: HilbertSpace | None = None) -> np.ndarray:
    space = space or space_for(circuit)
    return space.level_grid().sum(axis=1)


def conserves_excitations(circuit: Circuit) -> bool:
    """Whether the Hamiltonian commutes with the total excitation number."""
    if not circuit.rwa and any(
        cp.g > 0 and circuit.device(cp.device).counter_rotating for cp in circuit.couplings
    ):
        return False
    for d in circuit.devices:
        if isinstance(d, Multilevel) and not d.nearest_neighbour:
            if any(cp.g > 0 for cp in circuit.couplings_of(d.label)):
                return False
    return True


def _diag(values: np.ndarray) -> sp.csr_matrix:
    return sp.diags(np.asarray(values, dtype=float), format="csr")


def _device_symbol(d) -> str:
    if isinstance(d, TwoLevel):
        return "(w_q/2) sigma_z"
    if isinstance(d, Duffing):
        return "w_q b^dag b + (chi/2) b^dag b^dag b b"
    return "sum_j w_j |j><j|"


def build(circuit: Circuit) -> HamiltonianBundle:
    """Full Hamiltonian of ``circuit`` with an auditable term ledger."""
    space = space_for(circuit)
    grid = space.level_grid()
    terms = []
    for k, cav in enumerate(circuit.cavities):
        terms.append(Term(f"cavity {cav.label}", "w_c a^dag a", _diag(cav.frequency * grid[:, k])))
    offset = len(circuit.cavities)
    for k, dev in enumerate(circuit.devices):
        energies = np.asarray(dev.level_energies, dtype=float)[grid[:, offset + k]]
        terms.append(Term(f"device {dev.label}", _device_symbol(dev), _diag(energies)))
    for cp in circuit.couplings:
        dev = circuit.device(cp.device)
        a = embed(annihilation(space.dim(cp.cavity)), space, cp.cavity, sparse=True)
        r = embed(dev.raising, space, cp.device, sparse=True)
        rwa = cp.g * (a @ r + (a @ r).T)
        terms.append(Term(f"coupling {cp.cavity}-{cp.device}", "g (a b^dag + a^dag b)", rwa.tocsr()))
        if not circuit.rwa and dev.counter_rotating:
            cr = cp.g * (a @ r.T + (a @ r.T).T)
            terms.append(Term(f"counter-rotating {cp.cavity}-{cp.device}", "g (a b + a^dag b^dag)", cr.tocsr()))
    n = space.total_dim
    H = sp.csr_matrix((n, n))
    for t in terms:
        H = H + t.matrix
    H = H.tocsr()
    return HamiltonianBundle(circuit, space, OperatorMatrix(space, H, hermitian=True), tuple(terms))


def shifted(bundle: HamiltonianBundle, constant: float) -> HamiltonianBundle:
    """Same bundle with ``constant * I`` added (a gauge change)."""
    n = bundle.space.total_dim
    extra = Term("constant offset", "E_0", sp.identity(n, format="csr") * constant)
    H = (bundle.matrix + extra.matrix).tocsr()
    return HamiltonianBundle(bundle.circuit, bundle.space, OperatorMatrix(bundle.space, H, True),
                             bundle.term_ledger + (extra,))


def jc_block(n: int, omega_c: float, omega_q: float, g: float) -> np.ndarray:
    """JC block in the basis ``(|n, up>, |n+1, down>)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    s = g * np.sqrt(n + 1)
    return np.array([[n * omega_c + omega_q / 2, s], [s, (n + 1) * omega_c - omega_q / 2]])


def dicke_block(n: int, omega_c: float, delta1: float, delta2: float, g1: float, g2: float) -> np.ndarray:
    """Two-qubit block with ``n + 2`` excitations.

    Basis order: ``|n+2, dd>, |n+1, ud>, |n+1, du>, |n, uu>`` where the energy
    zero is the bare qubit midpoint.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    dp, dm = delta1 + delta2, delta1 - delta2
    c = (n + 1) * omega_c
    a, b = np.sqrt(n + 2), np.sqrt(n + 1)
    return np.array([
        [c + dp / 2, g1 * a, g2 * a, 0.0],
        [g1 * a, c - dm / 2, 0.0, g2 * b],
        [g2 * a, 0.0, c + dm / 2, g1 * b],
        [0.0, g2 * b, g1 * b, c - dp / 2],
    ])
