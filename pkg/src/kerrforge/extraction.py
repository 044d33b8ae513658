"""Numerical Kerr coefficients from exact spectra of the full Hamiltonian.

Each requested bare product state is matched to the dressed eigenstate with
which it overlaps most. When the Hamiltonian conserves the total excitation
number the search runs inside the relevant excitation sector, and the block
is shifted by the bare energy before diagonalization so that the dressed
shift ``E - E_bare`` is obtained at full precision.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .circuit import Circuit
from .errors import AmbiguousLabeling, ConfigError, TruncationError, WeakOverlap
from .hamiltonian import HamiltonianBundle, build
from .perturbation import KerrReport

MIN_OVERLAP = 0.5
CLUSTER_TOL = 1e-9

_FULL_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


@dataclass(frozen=True, eq=False)
class DressedState:
    label: tuple
    energy: float
    shift: float
    overlap: float
    vector: np.ndarray


def _occupation(bundle: HamiltonianBundle, label) -> tuple:
    space = bundle.space
    if isinstance(label, Mapping):
        for l in label:
            space.index(l)
        occ = tuple(int(label.get(l, 0)) for l in space.labels)
    else:
        occ = tuple(int(v) for v in label)
        occ = occ + (0,) * (len(space.dims) - len(occ))
    for l, v, d in zip(space.labels, occ, space.dims):
        if not 0 <= v < d:
            raise TruncationError(f"label level {v} of {l!r} outside truncation {d}")
    return occ


def _bare_energy(bundle: HamiltonianBundle, occ: tuple) -> float:
    c = bundle.circuit
    e = sum(cav.frequency * n for cav, n in zip(c.cavities, occ))
    for dev, k in zip(c.devices, occ[len(c.cavities):]):
        e += dev.level_energies[k]
    return float(e)


def _clusters(vals: np.ndarray, tol: float):
    groups, start = [], 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[k - 1] > tol:
            groups.append(np.arange(start, k))
            start = k
    return groups


def _full_eigh(bundle: HamiltonianBundle):
    if bundle not in _FULL_CACHE:
        _FULL_CACHE[bundle] = np.linalg.eigh(bundle.dense())
    return _FULL_CACHE[bundle]


def _match(vals, vecs, pos, e_offset, tol):
    """Cluster of eigenvalues with the largest weight on basis index ``pos``."""
    weights = np.abs(vecs[pos]) ** 2
    best, best_w = None, -1.0
    for grp in _clusters(vals, tol):
        w = float(weights[grp].sum())
        if w > best_w:
            best, best_w = grp, w
    shift = float(np.mean(vals[best])) - e_offset
    if len(best) == 1:
        v = vecs[:, best[0]].copy()
    else:
        v = vecs[:, best] @ vecs[pos, best].conj()
        v /= np.linalg.norm(v)
    if v[pos].real < 0:
        v = -v
    return best, best_w, shift, v


def label_dressed_states(bundle: HamiltonianBundle, labels: Sequence, window: float | None = None) -> dict:
    """Assign dressed eigenstates to bare product labels.

    Parameters
    ----------
    bundle : HamiltonianBundle
    labels : sequence
        Each label is a ``{subsystem: level}`` mapping or a level tuple in
        space order.
    window : float, optional
        Only eigenvalues within this distance (GHz) of a label's bare energy
        are considered on the non-conserving path. Defaults to
        ``4 * max cavity frequency``.

    Returns
    -------
    dict
        Maps the level tuple of each label to a :class:`DressedState`.

    Raises
    ------
    WeakOverlap
        If the best overlap is below one half.
    AmbiguousLabeling
        If more labels claim an eigenvalue cluster than it has states.
    """
    space = bundle.space
    occs = [_occupation(bundle, l) for l in labels]
    out, claims = {}, {}
    exc = bundle.excitations
    scale = max([abs(c.frequency) for c in bundle.circuit.cavities] + [1.0])
    if window is None:
        window = 4 * scale
    conserving = bundle.conserves_excitations
    for occ in occs:
        flat = space.flat_index(occ)
        e_bare = _bare_energy(bundle, occ)
        if conserving:
            idx = np.flatnonzero(exc == exc[flat])
            block = bundle.matrix[idx][:, idx].toarray()
            block[np.diag_indices_from(block)] -= e_bare
            vals, vecs = np.linalg.eigh(block)
            pos = int(np.searchsorted(idx, flat))
            grp, w, shift, v_sector = _match(vals, vecs, pos, 0.0, CLUSTER_TOL)
            vector = np.zeros(space.total_dim, complex)
            vector[idx] = v_sector
            key = (int(exc[flat]), tuple(np.round(vals[grp] + e_bare, 9)))
        else:
            vals, vecs = _full_eigh(bundle)
            keep = np.flatnonzero(np.abs(vals - e_bare) <= window)
            grp, w, shift, vector = _match(vals[keep], vecs[:, keep], flat, e_bare,
                                           CLUSTER_TOL * max(1.0, scale))
            key = ("full", tuple(keep[grp]))
            vector = vector.astype(complex)
        if w < MIN_OVERLAP:
            raise WeakOverlap(f"label {occ} overlaps its best dressed state by only {w:.3f}")
        claims.setdefault(key, []).append(occ)
        if len(claims[key]) > len(grp):
            raise AmbiguousLabeling(f"labels {claims[key]} all map to the same dressed state")
        out[occ] = DressedState(occ, e_bare + shift, shift, w, vector)
    return out


def _photon_label(bundle, **photons) -> tuple:
    occ = [0] * len(bundle.space.dims)
    for lab, n in photons.items():
        occ[bundle.space.index(lab)] = n
    return tuple(occ)


@dataclass(frozen=True)
class SelfKerrFit:
    S: float
    linear: float
    residual: float
    shifts: tuple


def extract_self_kerr(bundle: HamiltonianBundle, cavity_label: str, n_max: int = 3) -> SelfKerrFit:
    """Least-squares fit ``E(n) = E_0 + A n + S n^2`` for ``n = 0..n_max``.

    The fit runs on dressed shifts relative to the bare energies so the
    cavity frequency drops out exactly: ``linear`` is the dressed shift per
    photon and ``residual`` the largest fit residual (GHz).
    """
    bundle.circuit.cavity(cavity_label)
    if n_max < 2:
        raise ConfigError("self-Kerr fit needs n_max >= 2")
    if n_max > bundle.space.dim(cavity_label) - 2:
        raise TruncationError(f"n_max={n_max} too close to the truncation of {cavity_label!r}")
    labels = [_photon_label(bundle, **{cavity_label: n}) for n in range(n_max + 1)]
    states = label_dressed_states(bundle, labels)
    lam = np.array([states[l].shift for l in labels])
    n = np.arange(n_max + 1, dtype=float)
    A = np.vstack([np.ones_like(n), n, n * n]).T
    coef, *_ = np.linalg.lstsq(A, lam, rcond=None)
    resid = float(np.max(np.abs(A @ coef - lam)))
    return SelfKerrFit(float(coef[2]), float(coef[1]), resid, tuple(lam))


def extract_cross_kerr(bundle: HamiltonianBundle, cavity_a: str, cavity_b: str) -> float:
    """``X = E_11 - E_10 - E_01 + E_00``."""
    bundle.circuit.cavity(cavity_a)
    bundle.circuit.cavity(cavity_b)
    if cavity_a == cavity_b:
        raise ConfigError("cross-Kerr needs two distinct cavities")
    labels = [
        _photon_label(bundle),
        _photon_label(bundle, **{cavity_a: 1}),
        _photon_label(bundle, **{cavity_b: 1}),
        _photon_label(bundle, **{cavity_a: 1, cavity_b: 1}),
    ]
    st = label_dressed_states(bundle, labels)
    e00, e10, e01, e11 = (st[l].shift for l in labels)
    return float(e11 - e10 - e01 + e00)


def numeric_kerr_report(source, n_max: int = 3) -> KerrReport:
    """Numeric KerrReport for a :class:`Circuit` or a prebuilt bundle."""
    bundle = build(source) if isinstance(source, Circuit) else source
    cavs = [c.label for c in bundle.circuit.cavities]
    S, L, resid = {}, {}, {}
    for c in cavs:
        fit = extract_self_kerr(bundle, c, n_max)
        S[c], L[c], resid[c] = fit.S, fit.linear, fit.residual
    X = {(a, b): extract_cross_kerr(bundle, a, b) for i, a in enumerate(cavs) for b in cavs[i + 1:]}
    return KerrReport("numeric", S, X, L, {"fit_residual": resid, "n_max": n_max})
