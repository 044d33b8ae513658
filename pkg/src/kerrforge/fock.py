"""Truncated Fock spaces, ladder operators and the initial states used in simulations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import ConfigError, TruncationError

#: Dense storage up to this total dimension, sparse above.
DENSE_LIMIT = 4096
NORM_TOL = 1e-10
TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of labelled subsystems.

    The first subsystem is the most significant index of the kron product.
    """

    subsystems: tuple

    def __post_init__(self):
        subs = tuple((str(l), int(d)) for l, d in self.subsystems)
        if not subs:
            raise ConfigError("a Hilbert space needs at least one subsystem")
        labels = [l for l, _ in subs]
        if len(set(labels)) != len(labels):
            raise ConfigError("subsystem labels must be unique")
        if any(d < 2 for _, d in subs):
            raise ConfigError("subsystem dimensions must be >= 2")
        object.__setattr__(self, "subsystems", subs)

    @property
    def labels(self) -> list[str]:
        return [l for l, _ in self.subsystems]

    @property
    def dims(self) -> list[int]:
        return [d for _, d in self.subsystems]

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def dense(self) -> bool:
        return self.total_dim <= DENSE_LIMIT

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown subsystem {label!r}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def flat_index(self, occupation: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupation), self.dims))

    def occupation(self, flat: int) -> tuple:
        return tuple(int(k) for k in np.unravel_index(flat, self.dims))

    def level_grid(self) -> np.ndarray:
        """Array of shape (total_dim, n_subsystems) with each basis state's levels."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1)
        return grids.T


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """A matrix acting on ``space``; dense ndarray or scipy CSR."""

    space: HilbertSpace
    matrix: object
    hermitian: bool = False

    def __post_init__(self):
        n = self.space.total_dim
        if self.matrix.shape != (n, n):
            raise ConfigError(f"operator shape {self.matrix.shape} does not match dimension {n}")
        if self.hermitian:
            diff = self.matrix - self.matrix.conj().T
            err = abs(diff).max() if sp.issparse(diff) else np.max(np.abs(diff), initial=0.0)
            if err >= 1e-12:
                raise ConfigError(f"operator claimed Hermitian but |M - M^dag| = {err:.2e}")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)

    def __matmul__(self, other):
        return self.matrix @ other


def annihilation(dim: int) -> np.ndarray:
    """Lowering operator with ``a[n - 1, n] = sqrt(n)``."""
    if int(dim) != dim or dim < 2:
        raise ConfigError("annihilation operator needs dim >= 2")
    return np.diag(np.sqrt(np.arange(1, int(dim), dtype=float)), 1)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).T.copy()


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(int(dim), dtype=float))


def embed(op, space: HilbertSpace, label: str, sparse: bool | None = None):
    """Lift a single-subsystem operator onto ``space``.

    Returns a dense array when the space is small enough and a CSR matrix
    otherwise (or as forced by ``sparse``).
    """
    k = space.index(label)
    op = op.toarray() if sp.issparse(op) else np.asarray(op)
    if op.shape != (space.dims[k],) * 2:
        raise ConfigError(
            f"operator of shape {op.shape} does not fit subsystem {label!r} of dimension {space.dims[k]}"
        )
    left = int(np.prod(space.dims[:k]))
    right = int(np.prod(space.dims[k + 1:]))
    if sparse is None:
        sparse = not space.dense
    if sparse:
        out = sp.kron(sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op)), sp.identity(right, format="csr"))
        return out.tocsr()
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


@dataclass(frozen=True, eq=False)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.total_dim,):
            raise ConfigError("state vector length does not match the space")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise ConfigError(f"state vector is not normalized (norm {norm:.12f})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, space: HilbertSpace, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ConfigError("cannot normalize the zero vector")
        return cls(space, amps / norm)

    def expect(self, op) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)


def coherent_vector(dim: int, alpha: complex, check: bool = True) -> np.ndarray:
    """Truncated, renormalized Poisson amplitudes of ``|alpha>``."""
    n = np.arange(int(dim))
    if alpha == 0:
        out = np.zeros(dim, complex)
        out[0] = 1
        return out
    r = abs(alpha)
    phase = np.exp(1j * np.angle(alpha) * n)
    log_mag = -0.5 * r**2 + n * math.log(r) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag) * phase
    kept = float(np.sum(np.abs(amps) ** 2))
    if check and kept < 1 - TRUNCATION_TOL:
        raise TruncationError(
            f"coherent state alpha={alpha} loses {1 - kept:.2e} of its norm at fock_dim={dim}"
        )
    return amps / math.sqrt(kept)


def _ground_product(space: HilbertSpace, label: str, single: np.ndarray) -> np.ndarray:
    vec = np.ones(1, complex)
    for l, d in space.subsystems:
        if l == label:
            part = single
        else:
            part = np.zeros(d, complex)
            part[0] = 1
        vec = np.kron(vec, part)
    return vec


def coherent_state(space: HilbertSpace, cavity_label: str, alpha: complex) -> StateVector:
    single = coherent_vector(space.dim(cavity_label), complex(alpha))
    return StateVector.normalized(space, _ground_product(space, cavity_label, single))


def cat_vector(dim: int, components: Sequence[complex], weights: Sequence[complex]) -> np.ndarray:
    """Normalized ``sum_k w_k |alpha_k>`` using the numeric Gram matrix."""
    if len(components) != len(weights) or not components:
        raise ConfigError("cat state needs matching, nonempty component and weight lists")
    w = np.asarray(weights, dtype=complex)
    if not np.any(w != 0):
        raise ConfigError("cat state weights are all zero")
    basis = np.array([coherent_vector(dim, complex(a)) for a in components]).T
    gram = basis.conj().T @ basis
    norm2 = float(np.real(w.conj() @ gram @ w))
    if norm2 <= 1e-28:
        raise ConfigError("cat state superposition vanishes")
    return basis @ w / math.sqrt(norm2)


def cat_state(
    space: HilbertSpace, cavity_label: str, components: Sequence[complex], weights: Sequence[complex]
) -> StateVector:
    single = cat_vector(space.dim(cavity_label), components, weights)
    return StateVector.normalized(space, _ground_product(space, cavity_label, single))


def logical_cat_components(alpha: complex, a: complex, b: complex):
    """Components and weights of ``a(|alpha>+|-alpha>) + b(|i alpha>+|-i alpha>)``."""
    alpha = complex(alpha)
    return [alpha, -alpha, 1j * alpha, -1j * alpha], [a, a, b, b]


def fock_state(space: HilbertSpace, levels: dict) -> StateVector:
    """Product basis state with the given subsystem levels (others in 0)."""
    occ = []
    for l, d in space.subsystems:
        k = int(levels.get(l, 0))
        if not 0 <= k < d:
            raise TruncationError(f"level {k} of {l!r} outside truncation {d}")
        occ.append(k)
    for l in levels:
        space.index(l)
    amps = np.zeros(space.total_dim, complex)
    amps[space.flat_index(occ)] = 1
    return StateVector(space, amps)


def product_state(space: HilbertSpace, factors: dict) -> StateVector:
    """Tensor product of per-subsystem vectors; unspecified subsystems in level 0."""
    vec = np.ones(1, complex)
    for l in factors:
        space.index(l)
    for l, d in space.subsystems:
        if l in factors:
            part = np.asarray(factors[l], dtype=complex)
            if part.shape != (d,):
                raise ConfigError(f"factor for {l!r} has wrong length")
        else:
            part = np.zeros(d, complex)
            part[0] = 1
        vec = np.kron(vec, part)
    return StateVector.normalized(space, vec)
