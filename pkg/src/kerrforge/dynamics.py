"""Schroedinger evolution and cavity observables.

Times are in microseconds; Hamiltonians are in GHz (ordinary frequency), so
a state evolves as ``exp(-2 pi i H t)`` with ``t`` converted to ns.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import expm_multiply

from .errors import ConfigError, NumericalError
from .fock import DENSE_LIMIT, HilbertSpace, StateVector, annihilation
from .hamiltonian import HamiltonianBundle

NS_PER_US = 1e3
NORM_TOL = 1e-9
GRID_POINTS = 720


@dataclass(eq=False)
class Propagator:
    """Time evolution under one fixed Hamiltonian.

    Uses a full eigendecomposition when the space is at most
    ``DENSE_LIMIT`` states, otherwise Krylov action of the exponential.
    """

    bundle: HamiltonianBundle
    energies: np.ndarray | None = None
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.bundle.space.total_dim <= DENSE_LIMIT and self.energies is None:
            self.energies, self.basis = np.linalg.eigh(self.bundle.dense())

    @property
    def space(self) -> HilbertSpace:
        return self.bundle.space

    def evolve(self, state: StateVector, times_us: Sequence[float]) -> list:
        if state.space != self.space:
            raise ConfigError("state and Hamiltonian live on different spaces")
        times = np.asarray(times_us, dtype=float)
        if times.ndim != 1:
            raise ConfigError("times must be a 1-D grid")
        psi0 = state.amplitudes
        out = []
        if self.basis is not None:
            coeff = self.basis.conj().T @ psi0
            for t in times:
                phase = np.exp(-2j * math.pi * self.energies * t * NS_PER_US)
                out.append(self._checked(self.basis @ (phase * coeff)))
            return out
        A = (-2j * math.pi * NS_PER_US) * self.bundle.matrix.astype(complex)
        psi, t_prev = psi0.copy(), 0.0
        for t in times:
            if t != t_prev:
                psi = expm_multiply(A * (t - t_prev), psi)
                t_prev = t
            out.append(self._checked(psi))
        return out

    def _checked(self, amps: np.ndarray) -> StateVector:
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise NumericalError(f"evolution lost unitarity (norm {norm:.12f})")
        return StateVector(self.space, amps / norm)


def evolve(state: StateVector, bundle, times_us: Sequence[float]) -> list:
    """``psi(t) = exp(-2 pi i H t) psi(0)`` at every time in ``times_us``."""
    prop = bundle if isinstance(bundle, Propagator) else Propagator(bundle)
    return prop.evolve(state, times_us)


@dataclass
class TimeTrace:
    times: np.ndarray
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ConfigError("trace times must be strictly increasing")

    def to_csv(self) -> str:
        """CSV text with ``t_us`` first and the observables in alphabetical order."""
        cols = sorted(self.values)
        lines = [",".join(["t_us"] + cols)]
        for k, t in enumerate(self.times):
            row = [f"{t:.12g}"] + [f"{float(self.values[c][k]):.12g}" for c in cols]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _expect_lowering(state: StateVector, label: str) -> complex:
    space = state.space
    k = space.index(label)
    psi = state.tensor()
    a = annihilation(space.dims[k])
    moved = np.tensordot(a, psi, axes=([1], [k]))
    moved = np.moveaxis(moved, 0, k)
    return complex(np.vdot(psi, moved))


def amplitude_trace(states: Sequence[StateVector], cavity_label: str, times_us=None) -> TimeTrace:
    """``|<a>|`` of ``cavity_label`` for each state."""
    if not states:
        raise ConfigError("no states given")
    states[0].space.index(cavity_label)
    values = np.array([abs(_expect_lowering(s, cavity_label)) for s in states])
    times = np.arange(len(states), dtype=float) if times_us is None else times_us
    return TimeTrace(times, {"abs_a": values})


def kerr_amplitude(alpha: complex, S: float, times_us) -> np.ndarray:
    """``|<a>|`` under ``H = S n^2``: ``|alpha| |exp(|alpha|^2 (exp(-4 pi i S t) - 1))|``."""
    t = np.asarray(times_us, dtype=float) * NS_PER_US
    a2 = abs(alpha) ** 2
    return abs(alpha) * np.abs(np.exp(a2 * (np.exp(-4j * math.pi * S * t) - 1)))


def partial_trace(state: StateVector, keep_labels: Sequence[str]) -> np.ndarray:
    """Reduced density matrix on ``keep_labels`` (ordered as in the space)."""
    space = state.space
    if not keep_labels:
        raise ConfigError("keep_labels must be nonempty")
    keep = sorted({space.index(l) for l in keep_labels})
    rest = [k for k in range(len(space.dims)) if k not in keep]
    psi = np.transpose(state.tensor(), keep + rest)
    dk = int(np.prod([space.dims[k] for k in keep]))
    m = psi.reshape(dk, -1)
    rho = m @ m.conj().T
    return 0.5 * (rho + rho.conj().T)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def _rotation_profile(rho: np.ndarray, phi: np.ndarray) -> Callable[[float], float]:
    """Return ``theta -> <phi_theta| rho |phi_theta>`` with ``phi_theta = e^{i theta n} phi``."""
    d = len(phi)
    M = np.conj(phi)[:, None] * rho * phi[None, :]
    diffs = np.arange(-(d - 1), d)
    coeff = np.array([np.trace(M, offset=k) for k in diffs])

    def f(theta):
        return float(np.real(np.sum(coeff * np.exp(1j * np.multiply.outer(theta, diffs)), axis=-1)))

    def f_vec(theta):
        return np.real(np.exp(1j * np.multiply.outer(theta, diffs)) @ coeff)

    f.vectorized = f_vec
    return f


def fidelity_max_rotation(state, reference: np.ndarray, cavity_label: str | None = None) -> tuple:
    """Best root fidelity between the cavity state and a rotated reference.

    ``F = max_theta sqrt(<phi_theta| rho |phi_theta>)`` where ``rho`` is the
    cavity state with all other subsystems traced out and
    ``phi_theta = exp(i theta n) phi``. The maximum is bracketed on a
    720-point grid and refined by golden-section search to 1e-6 rad.

    Parameters
    ----------
    state : StateVector or ndarray
        Full state, or a cavity density matrix / pure cavity vector.
    reference : ndarray
        Pure cavity vector ``phi`` (normalized).
    cavity_label : str
        Required when ``state`` is a StateVector.

    Returns
    -------
    (F, theta)
    """
    if isinstance(state, StateVector):
        if cavity_label is None:
            raise ConfigError("cavity_label is required for a full state")
        rho = partial_trace(state, [cavity_label])
    else:
        arr = np.asarray(state, dtype=complex)
        rho = np.outer(arr, arr.conj()) if arr.ndim == 1 else arr
    phi = np.asarray(reference, dtype=complex)
    if phi.shape != (rho.shape[0],):
        raise ConfigError("reference does not match the cavity dimension")
    f = _rotation_profile(rho, phi)
    step = 2 * math.pi / GRID_POINTS
    grid = np.arange(GRID_POINTS) * step
    vals = f.vectorized(grid)
    k = int(np.argmax(vals))
    best_t, best_v = grid[k], vals[k]
    if vals.max() - vals.min() > 1e-14:
        # shift to u = theta - best_t + 1 so golden's relative tolerance is ~absolute
        res = minimize_scalar(lambda u: -f(best_t - 1 + u), bracket=(1 - step, 1.0, 1 + step),
                              method="golden", tol=5e-7)
        if -res.fun > best_v:
            best_t, best_v = best_t - 1 + float(res.x), -float(res.fun)
    F = math.sqrt(min(max(best_v, 0.0), 1.0))
    return F, float(best_t % (2 * math.pi))


def fidelity_trace(states: Sequence[StateVector], reference: np.ndarray, cavity_label: str,
                   times_us) -> TimeTrace:
    F = np.array([fidelity_max_rotation(s, reference, cavity_label)[0] for s in states])
    return TimeTrace(times_us, {"F": F})


def energy_expectation(state: StateVector, bundle: HamiltonianBundle) -> float:
    return float(np.real(np.vdot(state.amplitudes, bundle.matrix @ state.amplitudes)))


# Wigner function

def _padded_displacement_parts(dim: int):
    a = annihilation(dim)
    K = 1j * (a.T - a)
    k, V = np.linalg.eigh(K)
    return k, V


@dataclass
class WignerResult:
    W: np.ndarray
    points: np.ndarray
    unreliable: np.ndarray
    integral: float | None = None


def wigner(rho: np.ndarray, points, pad: int | None = None) -> WignerResult:
    """Displaced-parity Wigner function ``W(beta) = (2/pi) tr(rho D Pi D^dag)``.

    Parameters
    ----------
    rho : ndarray
        Single-mode density matrix (or pure vector) in a Fock truncation of
        dimension ``d``.
    points : array of complex
        Phase-space points; any shape.
    pad : int, optional
        Dimension of the auxiliary space in which the displacement is
        exponentiated; defaults to ``2 d + 40``.

    Points with ``|beta|^2 > 0.5 d`` are flagged in ``unreliable`` and a
    warning is issued.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    d = rho.shape[0]
    pts = np.asarray(points, dtype=complex)
    flat = pts.ravel()
    P = pad or 2 * d + 40
    k, V = _padded_displacement_parts(P)
    Vh = V.conj().T
    n = np.arange(P)
    parity = (-1.0) ** n
    W = np.empty(flat.shape, float)
    for idx, beta in enumerate(flat):
        r, phi = abs(beta), np.angle(beta)
        # D = R(phi) exp(-i r K) R(-phi), R(phi) = exp(i phi n)
        core = (V[:d] * np.exp(-1j * r * k)) @ Vh
        Dsub = np.exp(1j * phi * n[:d])[:, None] * core * np.exp(-1j * phi * n)[None, :]
        val = np.sum(np.sum(Dsub.conj() * (rho @ Dsub), axis=0) * parity)
        W[idx] = 2 / math.pi * float(np.real(val))
    unreliable = np.abs(pts) ** 2 > 0.5 * d
    if np.any(unreliable):
        warnings.warn(f"{int(unreliable.sum())} Wigner points lie outside the reliable region "
                      f"|beta|^2 <= {0.5 * d:g}", RuntimeWarning, stacklevel=2)
    return WignerResult(W.reshape(pts.shape), pts, unreliable)


def wigner_grid(rho: np.ndarray, extent: float, n: int = 41, pad: int | None = None) -> WignerResult:
    """Wigner function on an ``n x n`` square grid ``[-extent, extent]^2`` with its integral."""
    x = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(x, x, indexing="xy")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = wigner(rho, X + 1j * Y, pad)
    res.integral = float(trapezoid(trapezoid(res.W, x, axis=1), x))
    return res


# revivals

def find_peaks(times: np.ndarray, values: np.ndarray, min_height: float, after: float = 0.0) -> list:
    """Local maxima above ``min_height`` after time ``after``, refined by a
    parabola through the three samples around each maximum."""
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    peaks = []
    for k in range(1, len(v) - 1):
        if t[k] <= after or v[k] < min_height:
            continue
        if v[k] >= v[k - 1] and v[k] > v[k + 1]:
            y0, y1, y2 = v[k - 1], v[k], v[k + 1]
            denom = y0 - 2 * y1 + y2
            off = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            peaks.append(float(t[k] + off * (t[k + 1] - t[k])))
    return peaks


def revival_times(trace: TimeTrace, key: str = "abs_a", fraction: float = 0.8,
                  merge: float | None = None) -> list:
    """Revival times of ``trace.values[key]`` after the first collapse.

    The signal must first drop below ``1 - fraction/2`` of its initial value
    (to 0.6 of it for the default). Later stretches at or above ``fraction``
    of the initial value form revivals; stretches separated by less than
    ``merge`` (default 2% of the trace span) are joined, so fast ripples on
    the envelope do not split a revival. Each revival time is the centroid of
    the excess above threshold over its stretch.
    """
    t = trace.times
    v = np.asarray(trace.values[key], float)
    v0 = v[0]
    low = np.flatnonzero(v < (1 - fraction / 2) * v0)
    if low.size == 0:
        return []
    if merge is None:
        merge = 0.02 * (t[-1] - t[0])
    thr = fraction * v0
    idx = np.flatnonzero(v >= thr)
    idx = idx[idx > low[0]]
    if idx.size == 0:
        return []
    groups = [[idx[0]]]
    for k in idx[1:]:
        if t[k] - t[groups[-1][-1]] <= merge:
            groups[-1].append(k)
        else:
            groups.append([k])
    out = []
    for g in groups:
        w = v[g] - thr + 1e-300
        out.append(float(np.sum(t[g] * w) / np.sum(w)))
    return out
