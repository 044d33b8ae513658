"""Fourth-order Rayleigh-Schroedinger perturbation theory by excitation hopping.

The unperturbed states are bare product states: cavity photon numbers are
unbounded, device levels are limited by each device model. The perturbation
is the cavity-device coupling (co-rotating terms, plus counter-rotating
terms for two-level and Duffing devices when ``circuit.rwa`` is false).

For a start state ``n`` with ``V_nn = 0`` the corrections are ::

    E2 = sum_i |V_in|^2 / E_ni
    E3 = sum_{i,j} V_nj V_ji V_in / (E_ni E_nj)
    E4 = sum_{i,j,k} V_nk V_kj V_ji V_in / (E_ni E_nj E_nk)
         - E2 * sum_k |V_nk|^2 / E_nk^2

with all intermediate states distinct from ``n`` and ``E_nm = E_n - E_m``.
The triple sum factorizes through the two-hop amplitudes
``w_j = sum_i V_ji V_in / E_ni``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .circuit import Circuit, Duffing, POLE_TOLERANCE
from .errors import ConfigError, DegenerateIntermediate, PoleProximity, TruncationClipped

#: Energy denominators below this (GHz) count as degenerate.
DEGENERACY_TOL = 1e-9
#: Relative size below which a degenerate two-hop amplitude is treated as zero.
REMOVABLE_REL = 1e-7


@dataclass(frozen=True)
class PTCorrection:
    order1: float
    order2: float
    order3: float
    order4: float
    paths: tuple = ()
    removable: tuple = ()

    @property
    def total(self) -> float:
        return self.order2 + self.order4


@dataclass
class KerrReport:
    """Self-Kerr per cavity and cross-Kerr per cavity pair (GHz).

    Energies follow ``E = sum_i (w_i + L_i) n_i + S_i n_i^2 + sum_{i<j} X_ij n_i n_j``.
    ``linear`` holds the shifts ``L_i`` when they are available.
    """

    method: str
    self_kerr: dict
    cross_kerr: dict = field(default_factory=dict)
    linear: dict | None = None
    details: dict = field(default_factory=dict)

    def X(self, a: str, b: str) -> float:
        if (a, b) in self.cross_kerr:
            return self.cross_kerr[(a, b)]
        if (b, a) in self.cross_kerr:
            return self.cross_kerr[(b, a)]
        raise KeyError((a, b))

    def S(self, label: str) -> float:
        return self.self_kerr[label]

    @property
    def total_self_kerr(self) -> float:
        return float(sum(self.self_kerr.values()))

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "self_kerr": dict(self.self_kerr),
            "cross_kerr": {f"{a},{b}": v for (a, b), v in self.cross_kerr.items()},
        }
        if self.linear is not None:
            out["linear"] = dict(self.linear)
        if self.details:
            out["details"] = self.details
        return out


def check_pole(value: float, what: str, tol: float = POLE_TOLERANCE) -> float:
    if abs(value) < tol:
        raise PoleProximity(f"denominator {what} = {value:.3e} GHz is within {tol:g} of a pole")
    return value


class _HoppingModel:
    """Bare energies and coupling matrix elements on product states."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.labels = [c.label for c in circuit.cavities] + [d.label for d in circuit.devices]
        self.n_cav = len(circuit.cavities)
        self.cav_freq = np.array([c.frequency for c in circuit.cavities])
        self.dev_energies = [np.asarray(d.level_energies, dtype=float) for d in circuit.devices]
        self.devices = list(circuit.devices)
        index = {l: k for k, l in enumerate(self.labels)}
        self.links = []
        for cp in circuit.couplings:
            if cp.g == 0:
                continue
            dev = circuit.device(cp.device)
            r = dev.raising
            cr = (not circuit.rwa) and dev.counter_rotating
            self.links.append((index[cp.cavity], index[cp.device], cp.g, r, cr))

    def energy(self, state: tuple) -> float:
        e = float(np.dot(self.cav_freq, state[: self.n_cav]))
        for k, lev in enumerate(state[self.n_cav:]):
            e += self.dev_energies[k][lev]
        return e

    def gap(self, start: tuple, other: tuple) -> float:
        """``E_start - E_other`` summed over changed subsystems only."""
        e = 0.0
        for k, (a, b) in enumerate(zip(start, other)):
            if a == b:
                continue
            if k < self.n_cav:
                e += self.cav_freq[k] * (a - b)
            else:
                lev = self.dev_energies[k - self.n_cav]
                e += lev[a] - lev[b]
        return e

    def describe(self, state: tuple) -> str:
        return "|" + ", ".join(f"{l}={v}" for l, v in zip(self.labels, state)) + ">"

    def _device_moves(self, dev_pos, level, up, r, state, strict):
        dim = r.shape[0]
        dev = self.devices[dev_pos - self.n_cav]
        if up:
            if strict and level == dim - 1 and isinstance(dev, Duffing):
                raise TruncationClipped(
                    f"path from {self.describe(state)} needs level {dim} of Duffing device "
                    f"{dev.label!r} (levels={dim})"
                )
            for k in range(level + 1, dim):
                if r[k, level] != 0:
                    yield k, r[k, level]
        else:
            for k in range(level):
                if r[level, k] != 0:
                    yield k, r[level, k]

    def neighbours(self, state: tuple, strict: bool = True) -> dict:
        out = defaultdict(float)
        for c, d, g, r, cr in self.links:
            n = state[c]
            lev = state[d]
            # (cavity step, device up?) pairs allowed for this link
            moves = [(-1, True), (+1, False)]
            if cr:
                moves += [(-1, False), (+1, True)]
            for step, up in moves:
                if step < 0 and n == 0:
                    continue
                amp_c = math.sqrt(n) if step < 0 else math.sqrt(n + 1)
                for k, amp_d in self._device_moves(d, lev, up, r, state, strict):
                    new = list(state)
                    new[c] = n + step
                    new[d] = k
                    out[tuple(new)] += g * amp_c * amp_d
        return dict(out)


def _start_state(circuit: Circuit, label) -> tuple:
    labels = [c.label for c in circuit.cavities] + [d.label for d in circuit.devices]
    if isinstance(label, Mapping):
        for l in label:
            if l not in labels:
                raise ConfigError(f"unknown label {l!r} in occupation")
        state = tuple(int(label.get(l, 0)) for l in labels)
    else:
        state = tuple(int(v) for v in label)
        if len(state) < len(labels):
            state = state + (0,) * (len(labels) - len(state))
        if len(state) != len(labels):
            raise ConfigError("occupation has too many entries")
    if any(v < 0 for v in state):
        raise ConfigError("occupations must be non-negative")
    for d, v in zip(circuit.devices, state[len(circuit.cavities):]):
        if v >= d.dim:
            raise TruncationClipped(f"start level {v} outside device {d.label!r}")
    return state


def pt_energy(circuit: Circuit, label, ledger: bool = False) -> PTCorrection:
    """Perturbative energy corrections of one bare product state.

    Parameters
    ----------
    circuit : Circuit
    label : mapping or sequence
        Occupation of the start state, either ``{label: level}`` (missing
        entries are 0) or a sequence ordered cavities first, then devices.
    ledger : bool
        Also enumerate every explicit four-hop path and its contribution.

    Raises
    ------
    DegenerateIntermediate
        If a reachable intermediate state is degenerate with the start state
        and the path amplitude through it does not vanish.
    TruncationClipped
        If a path climbs past the top level of a Duffing device.
    """
    model = _HoppingModel(circuit)
    n = _start_state(circuit, label)
    first = model.neighbours(n)
    order1 = float(first.get(n, 0.0))
    first.pop(n, None)
    gaps = {}
    for i, v in first.items():
        gap = model.gap(n, i)
        if abs(gap) < DEGENERACY_TOL:
            raise DegenerateIntermediate(model.describe(n), model.describe(i), gap)
        gaps[i] = gap
    order2 = sum(v * v / gaps[i] for i, v in first.items())
    norm2 = sum(v * v / gaps[i] ** 2 for i, v in first.items())

    second = {i: model.neighbours(i) for i in first}
    w = defaultdict(float)
    for i, vi in first.items():
        for j, vji in second[i].items():
            if j != n:
                w[j] += vji * vi / gaps[i]
    scale = max((abs(x) for x in w.values()), default=0.0)
    order3 = 0.0
    order4 = -order2 * norm2
    removable = []
    gaps_j = {}
    for j, wj in w.items():
        gap = model.gap(n, j)
        if abs(gap) < DEGENERACY_TOL:
            if abs(wj) <= REMOVABLE_REL * scale:
                removable.append(model.describe(j))
                continue
            raise DegenerateIntermediate(model.describe(n), model.describe(j), gap)
        gaps_j[j] = gap
        order4 += wj * wj / gap
        if j in first:
            order3 += first[j] * wj / gap

    paths = ()
    if ledger:
        paths = _path_ledger(model, n, first, gaps, second, gaps_j, order2, norm2)
    return PTCorrection(order1, float(order2), float(order3), float(order4), paths, tuple(removable))


def _path_ledger(model, n, first, gaps, second, gaps_j, order2, norm2):
    entries = []
    for i, vin in first.items():
        for j, vji in second[i].items():
            if j == n or j not in gaps_j:
                continue
            for k, vkj in model.neighbours(j, strict=False).items():
                if k == n or k not in first:
                    continue
                c = first[k] * vkj * vji * vin / (gaps[i] * gaps_j[j] * gaps[k])
                entries.append((f"{model.describe(n)} -> {model.describe(i)} -> "
                                f"{model.describe(j)} -> {model.describe(k)} -> back", c))
    for k, vkn in first.items():
        entries.append((f"unlinked via {model.describe(k)}", -order2 * vkn * vkn / gaps[k] ** 2))
    return tuple(entries)


def _unit(circuit: Circuit, *cavities) -> dict:
    out = defaultdict(int)
    for c in cavities:
        out[c] += 1
    return dict(out)


def kerr_from_paths(circuit: Circuit) -> KerrReport:
    """Self- and cross-Kerr coefficients from differences of PT energies.

    ``S_i = (E(2 e_i) - 2 E(e_i) + E(0)) / 2`` and
    ``X_ij = E(e_i + e_j) - E(e_i) - E(e_j) + E(0)``. The second-order
    correction is linear in the photon numbers, so the differences are taken
    on the fourth-order part alone, which avoids cancelling the much larger
    dispersive shifts in floating point.
    """
    cavs = [c.label for c in circuit.cavities]
    E = {}

    def energy(*occupied):
        key = tuple(sorted(occupied))
        if key not in E:
            E[key] = pt_energy(circuit, _unit(circuit, *occupied))
        return E[key]

    e0 = energy()
    S, L, X = {}, {}, {}
    for c in cavs:
        e1, e2 = energy(c), energy(c, c)
        S[c] = (e2.order4 - 2 * e1.order4 + e0.order4) / 2
        L[c] = (e1.order2 - e0.order2) + (e1.order4 - e0.order4) - S[c]
    for a_i, a in enumerate(cavs):
        for b in cavs[a_i + 1:]:
            X[(a, b)] = energy(a, b).order4 - energy(a).order4 - energy(b).order4 + e0.order4
    return KerrReport("path-enumeration", S, X, L, {"ground_shift": e0.total})


@dataclass(frozen=True)
class NonRWACorrection:
    order2: float
    order4: float
    terms: dict


def pt_energy_nonrwa(omega_c: float, omega_q: float, chi: float, g: float, n: int) -> NonRWACorrection:
    """Second- and fourth-order shifts of ``|n, g>`` for one cavity and one
    Duffing device including counter-rotating terms.

    Reference closed forms whose co-rotating part carries the opposite
    anharmonicity sign to :func:`pt_energy`, with ``Delta = omega_c - omega_q``. ``terms`` lists the eight fourth-order
    summands; ``rwa_*`` entries are the co-rotating ones and ``cr_*``
    entries exist only beyond the rotating-wave approximation.
    """
    d = check_pole(omega_c - omega_q, "Delta")
    s = check_pole(omega_c + omega_q, "w_c + w_q")
    check_pole(2 * d + chi, "2 Delta + chi")
    check_pole(2 * omega_c + chi, "2 w_c + chi")
    check_pole(2 * omega_q + chi, "2 w_q + chi")
    check_pole(2 * omega_c + 2 * omega_q + chi, "2 w_c + 2 w_q + chi")
    check_pole(2 * omega_c, "2 w_c")
    g2, g4 = g * g, g**4
    order2 = g2 * n / d + g2 * (n + 1) / s
    terms = {
        "rwa_kerr": -g4 * n * n / d**3,
        "rwa_third_level": 2 * g4 * n * (n - 1) / (d * d * (2 * d + chi)),
        "cr_cavity_pair": -g4 * n * (n - 1) / (d * d * (2 * omega_c + chi)),
        "cr_device_pair": 2 * g4 * n * n / (d * d * (2 * omega_q + chi)),
        "cr_double_device": 2 * g4 * (n + 1) ** 2 / ((2 * omega_q + chi) * s * s),
        "cr_double_pair": 2 * g4 * (n + 1) * (n + 2) / (s * s * (2 * omega_c + 2 * omega_q + chi)),
        "cr_two_photon": g4 * (n + 1) * (n + 2) / (2 * omega_c * s * s),
        "cr_mixed": -g4 * (n + 1) * (n + 2) / (2 * omega_c * d * s),
    }
    return NonRWACorrection(float(order2), float(sum(terms.values())), terms)


def nonrwa_term_ratios(omega_c, omega_q, chi, g, n_values=range(1, 6)) -> dict:
    """Largest ``|counter-rotating term| / (g^4 n^2 / |Delta|^3)`` per term over ``n_values``."""
    d = omega_c - omega_q
    worst = {}
    for n in n_values:
        corr = pt_energy_nonrwa(omega_c, omega_q, chi, g, n)
        ref = g**4 * n * n / abs(d) ** 3
        for name, value in corr.terms.items():
            if name.startswith("cr_"):
                worst[name] = max(worst.get(name, 0.0), abs(value) / ref)
    return worst
