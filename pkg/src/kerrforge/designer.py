"""Inverse problems: choose device parameters that realize target Kerr values.

Every search is a coarse scan over the allowed interval followed by
bisection on sign-changing brackets. The closed forms have poles, so a
bracket whose bisection ends on a pole (large residual) is discarded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect

from .circuit import (
    Circuit,
    Coupling,
    Duffing,
    TwoLevel,
    circuit_to_dict,
    classify_ratio,
    validate_dispersive,
)
from .closedform import array_circuit, closed_form_for_circuit, s_duffing, x_duffing
from .dynamics import NS_PER_US
from .errors import (
    ConfigError,
    DispersiveViolation,
    FrequencyCollision,
    GateTooSlow,
    InfeasibleTarget,
    KerrForgeError,
    NoRootInBounds,
)
from .extraction import extract_cross_kerr, numeric_kerr_report
from .hamiltonian import build

SCAN_POINTS = 64
S_TOLERANCE = 1e-9
X_TOLERANCE = 1e-9
ARRAY_TOLERANCE = 1e-8
MIN_X_ON = 1e-7
COLLISION_GHZ = 0.010
MIRROR_TOL = 1e-12


# generic 1-D root search

def _safe(fn: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(x):
        try:
            v = fn(x)
        except KerrForgeError:
            return math.nan
        return v if math.isfinite(v) else math.nan
    return wrapped


def scan_roots(fn: Callable[[float], float], lo: float, hi: float, tol: float,
               points: int = SCAN_POINTS) -> list[float]:
    """All roots of ``fn`` on ``[lo, hi]`` found by scan plus bisection.

    Brackets are sign changes between neighbouring scan points; a bracket
    whose bisection midpoint has ``|fn| > tol`` straddles a pole and is
    dropped.
    """
    if not hi > lo:
        raise ConfigError(f"empty search interval [{lo}, {hi}]")
    f = _safe(fn)
    xs = np.linspace(lo, hi, points)
    ys = np.array([f(x) for x in xs])
    roots = []
    for k in range(points - 1):
        a, b, fa, fb = xs[k], xs[k + 1], ys[k], ys[k + 1]
        if math.isnan(fa) or math.isnan(fb):
            continue
        if fa == 0.0:
            roots.append(float(a))
            continue
        if fa * fb > 0:
            continue
        try:
            r = bisect(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
        except ValueError:
            # the bracket runs into a pole
            continue
        val = f(r)
        if math.isfinite(val) and abs(val) <= tol:
            roots.append(float(r))
    if ys[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots


def _frequencies(circuit: Circuit, skip: str | None = None) -> list[tuple[str, float]]:
    out = [(c.label, c.frequency) for c in circuit.cavities]
    out += [(d.label, d.frequency) for d in circuit.devices if d.label != skip]
    return out


def _separation(circuit: Circuit, label: str, freq: float) -> float:
    others = [f for l, f in _frequencies(circuit, skip=label)]
    return min((abs(freq - f) for f in others), default=math.inf)


def check_collisions(circuit: Circuit, min_gap: float = COLLISION_GHZ) -> None:
    """Raise :class:`FrequencyCollision` when two elements are closer than ``min_gap``."""
    items = _frequencies(circuit)
    for i, (la, fa) in enumerate(items):
        for lb, fb in items[i + 1:]:
            if abs(fa - fb) < min_gap:
                raise FrequencyCollision(
                    f"{la} ({fa:.6f} GHz) and {lb} ({fb:.6f} GHz) are closer than {min_gap * 1e3:.0f} MHz")


def _require_dispersive(circuit: Circuit) -> None:
    bad = [d for d in validate_dispersive(circuit) if d.classification == "non_dispersive"]
    if bad:
        d = bad[0]
        raise DispersiveViolation(
            f"coupling {d.cavity}-{d.device} has g/|Delta| = {d.ratio:.3f} after the design step")


def _pick_root(circuit: Circuit, label: str, cavity: str, roots: Sequence[float]) -> float:
    """Root (a device detuning) that keeps the device furthest from every other element."""
    wc = circuit.cavity(cavity).frequency
    return max(roots, key=lambda d: (_separation(circuit, label, wc - d), abs(d)))


# self-Kerr cancellation

def _only_cavity(circuit: Circuit, cavity: str | None) -> str:
    if cavity is not None:
        circuit.cavity(cavity)
        return cavity
    if len(circuit.cavities) != 1:
        raise ConfigError("circuit has several cavities; name the one to design")
    return circuit.cavities[0].label


def _self_kerr(circuit: Circuit, cavity: str) -> float:
    return closed_form_for_circuit(circuit).self_kerr[cavity]


def mirrored_partner(device, label: str, cavity_frequency: float):
    """Device with opposite detuning (and anharmonicity) to ``device``."""
    freq = 2 * cavity_frequency - device.frequency
    if isinstance(device, TwoLevel):
        return TwoLevel(label, freq)
    if isinstance(device, Duffing):
        return Duffing(label, freq, -device.anharmonicity, device.levels)
    raise ConfigError("mirroring needs a two-level or Duffing device")


def solve_self_kerr_cancellation(circuit: Circuit, tunable: str, cavity: str | None = None,
                                 bounds: tuple = (-3.0, 3.0)) -> Circuit:
    """Place ``tunable`` so that the cavity's total closed-form self-Kerr vanishes.

    Parameters
    ----------
    circuit : Circuit
    tunable : str
        Label of the device to place. If the circuit has no such device, a
        mirrored copy of the single fixed device is added under that label.
    cavity : str, optional
        Defaults to the only cavity.
    bounds : (float, float)
        Allowed detuning ``w_cavity - w_tunable`` (GHz).

    Returns
    -------
    Circuit
        The mirrored solution when the tunable device already has the
        mirrored anharmonicity and coupling, otherwise the bisection root with
        ``|S| < 1e-9`` GHz that keeps the device furthest from other
        frequencies.

    Raises
    ------
    NoRootInBounds, DispersiveViolation
    """
    cavity = _only_cavity(circuit, cavity)
    wc = circuit.cavity(cavity).frequency
    labels = {d.label for d in circuit.devices}
    fixed = [cp for cp in circuit.couplings_of(cavity) if cp.device != tunable]
    for cp in fixed:
        if not isinstance(circuit.device(cp.device), (TwoLevel, Duffing)):
            raise ConfigError(f"fixed device {cp.device!r} must be two-level or Duffing")
    if tunable not in labels:
        if len(fixed) != 1:
            raise ConfigError("adding a mirrored partner needs exactly one fixed device")
        dev = circuit.device(fixed[0].device)
        partner = mirrored_partner(dev, tunable, wc)
        out = Circuit(circuit.cavities, circuit.devices + (partner,),
                      circuit.couplings + (Coupling(cavity, tunable, fixed[0].g),), circuit.rwa)
        _require_dispersive(out)
        return out

    dev = circuit.device(tunable)
    g_t = circuit.coupling(cavity, tunable)
    if g_t == 0 and _self_kerr(circuit, cavity) == 0:
        return circuit
    fixed = [cp for cp in fixed if cp.g > 0]
    if len(fixed) == 1:
        fdev = circuit.device(fixed[0].device)
        same_kind = type(fdev) is type(dev)
        chi_ok = not isinstance(dev, Duffing) or abs(dev.anharmonicity + fdev.anharmonicity) < MIRROR_TOL
        if same_kind and chi_ok and abs(g_t - fixed[0].g) < MIRROR_TOL:
            d_mirror = -(wc - fdev.frequency)
            if bounds[0] <= d_mirror <= bounds[1]:
                out = circuit.replace_device(tunable, frequency=wc - d_mirror)
                _require_dispersive(out)
                return out

    def total(d):
        return _self_kerr(circuit.replace_device(tunable, frequency=wc - d), cavity)

    roots = scan_roots(total, bounds[0], bounds[1], S_TOLERANCE)
    if not roots:
        raise NoRootInBounds(f"no detuning of {tunable!r} in {bounds} cancels the self-Kerr of {cavity!r}")
    d = _pick_root(circuit, tunable, cavity, roots)
    out = circuit.replace_device(tunable, frequency=wc - d)
    _require_dispersive(out)
    return out


# cross-Kerr switch

def _cavity_pair(circuit: Circuit, cavities) -> tuple[str, str]:
    if cavities is None:
        if len(circuit.cavities) != 2:
            raise ConfigError("circuit needs exactly two cavities or an explicit pair")
        return circuit.cavities[0].label, circuit.cavities[1].label
    a, b = cavities
    circuit.cavity(a)
    circuit.cavity(b)
    return a, b


def _cross_kerr(circuit: Circuit, a: str, b: str) -> float:
    return closed_form_for_circuit(circuit).X(a, b)


def _symmetric_off_frequency(circuit: Circuit, tunable: str, a: str, b: str) -> float | None:
    """Analytic zero for a mirrored pair of shared devices, if the circuit is one."""
    others = [d for d in circuit.devices if d.label != tunable]
    if len(others) != 1:
        return None
    fdev, tdev = others[0], circuit.device(tunable)
    if type(fdev) is not type(tdev):
        return None
    if isinstance(tdev, Duffing) and abs(tdev.anharmonicity + fdev.anharmonicity) > MIRROR_TOL:
        return None
    c = circuit.coupling
    if abs(c(a, tunable) - c(b, fdev.label)) > MIRROR_TOL or abs(c(b, tunable) - c(a, fdev.label)) > MIRROR_TOL:
        return None
    return circuit.cavity(a).frequency + circuit.cavity(b).frequency - fdev.frequency


def solve_cross_kerr_off(circuit: Circuit, tunable: str, cavities=None,
                         bounds: tuple = (-4.0, 4.0)) -> Circuit:
    """Move ``tunable`` so that the closed-form cross-Kerr of two cavities vanishes.

    ``bounds`` limit the detuning of the tunable device from the first
    cavity. A mirrored pair (opposite anharmonicity, swapped couplings) is
    solved analytically; otherwise the scan-and-bisect search applies and
    the root furthest from other frequencies is kept.
    """
    a, b = _cavity_pair(circuit, cavities)
    wa = circuit.cavity(a).frequency
    if circuit.coupling(a, tunable) == 0 and circuit.coupling(b, tunable) == 0:
        if _cross_kerr(circuit, a, b) == 0:
            return circuit
        raise NoRootInBounds(f"{tunable!r} couples to neither cavity; nothing to tune")
    w_sym = _symmetric_off_frequency(circuit, tunable, a, b)
    if w_sym is not None and bounds[0] <= wa - w_sym <= bounds[1]:
        return circuit.replace_device(tunable, frequency=w_sym)

    def total(d):
        return _cross_kerr(circuit.replace_device(tunable, frequency=wa - d), a, b)

    roots = scan_roots(total, bounds[0], bounds[1], X_TOLERANCE)
    if not roots:
        raise NoRootInBounds(f"no detuning of {tunable!r} in {bounds} switches the cross-Kerr off")
    d = _pick_root(circuit, tunable, a, roots)
    return circuit.replace_device(tunable, frequency=wa - d)


@dataclass(frozen=True)
class GateSchedule:
    """Controlled-phase gate between two cavities.

    ``gate_time`` is in microseconds; the phase ``2 pi X t`` reaches ``pi``
    at ``t = 1 / (2 |X_on|)``.
    """

    off_configuration: Circuit
    on_configuration: Circuit
    gate_time: float
    X_on: float
    on_off_ratio: float
    X_off_numeric: float = 0.0
    tunable: str = ""
    shift: float = 0.0

    def to_dict(self) -> dict:
        return {
            "tunable": self.tunable,
            "shift_GHz": self.shift,
            "gate_time_us": self.gate_time,
            "X_on_GHz": self.X_on,
            "X_off_numeric_GHz": self.X_off_numeric,
            "on_off_ratio": self.on_off_ratio,
            "off_configuration": circuit_to_dict(self.off_configuration),
            "on_configuration": circuit_to_dict(self.on_configuration),
        }


def gate_time_us(x: float) -> float:
    return 1.0 / (2.0 * abs(x)) / NS_PER_US


def plan_cphase_gate(circuit_off: Circuit, tunable: str, detune_shift: float, cavities=None) -> GateSchedule:
    """Shift ``tunable`` by ``detune_shift`` GHz (added to its frequency) to switch the gate on.

    Raises
    ------
    GateTooSlow
        If the closed-form ``|X_on|`` is below 1e-7 GHz.
    """
    a, b = _cavity_pair(circuit_off, cavities)
    dev = circuit_off.device(tunable)
    on = circuit_off.replace_device(tunable, frequency=dev.frequency + detune_shift)
    x_on = _cross_kerr(on, a, b)
    if abs(x_on) < MIN_X_ON:
        raise GateTooSlow(f"|X_on| = {abs(x_on):.3e} GHz is below {MIN_X_ON:g} GHz")
    x_off = extract_cross_kerr(build(circuit_off), a, b)
    ratio = abs(x_on) / abs(x_off) if x_off != 0 else math.inf
    return GateSchedule(circuit_off, on, gate_time_us(x_on), x_on, ratio, x_off, tunable, detune_shift)


def single_device_on_off_ratio(circuit: Circuit, device: str, detune_shift: float,
                               cavities=None, numeric: bool = True) -> float:
    """``|X|`` of ``device`` alone divided by ``|X|`` after shifting it by ``detune_shift``.

    All other devices are removed, so this is the switching contrast a
    single tunable device achieves by detuning alone.
    """
    a, b = _cavity_pair(circuit, cavities)
    solo = circuit
    for d in circuit.devices:
        if d.label != device:
            solo = solo.without_device(d.label)
    dev = solo.device(device)
    moved = solo.replace_device(device, frequency=dev.frequency + detune_shift)
    if numeric:
        near, far = (extract_cross_kerr(build(c), a, b) for c in (solo, moved))
    else:
        near, far = (_cross_kerr(c, a, b) for c in (solo, moved))
    return abs(near) / abs(far)


# arrays

@dataclass(frozen=True)
class EffectiveHamiltonianSpec:
    """On-site frequencies, self-Kerr and nearest-neighbour cross-Kerr of a chain (GHz)."""

    omega: tuple
    S: tuple
    X: tuple
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.S) != len(self.omega) or len(self.X) != max(len(self.omega) - 1, 0):
            raise ConfigError("effective Hamiltonian lengths do not match the chain size")

    def to_dict(self) -> dict:
        return {"omega_prime": list(self.omega), "S": list(self.S), "X": list(self.X),
                "residuals": dict(self.residuals)}


@dataclass(frozen=True)
class ArrayBounds:
    """Search limits for an array design (GHz).

    Detunings are searched on ``[min_detuning, max_detuning]`` on both sides
    of the relevant cavity.
    """

    min_detuning: float = 0.5
    max_detuning: float = 3.0

    def intervals(self):
        return ((-self.max_detuning, -self.min_detuning), (self.min_detuning, self.max_detuning))


def _root_in(fn, bounds: ArrayBounds, tol: float):
    roots = []
    for lo, hi in bounds.intervals():
        roots += scan_roots(fn, lo, hi, tol)
    return roots


def design_array(N: int, S_targets: Sequence[float], X_targets: Sequence[float],
                 omega: Sequence[float] | None = None, coupling: float = 0.08,
                 onsite_coupling: float = 0.08, chi: float = 0.3, eta: float = 0.3,
                 bounds: ArrayBounds = ArrayBounds(), fock_dim: int = 4, levels: int = 3,
                 refine: int = 0, workers: int = 1) -> tuple[Circuit, EffectiveHamiltonianSpec]:
    """Choose device frequencies of a chain to hit self- and cross-Kerr targets.

    Cavity ``i`` couples to intermediary ``b_i`` (strength ``coupling``), to
    intermediary ``b_(i+1)`` and to its own on-site device ``s_i``
    (``onsite_coupling``). Stage one places each shared intermediary
    ``b_(i+1)`` to give ``X_(i,i+1)``; stage two places each on-site device
    to bring ``S_i`` to target given the intermediaries. Anharmonicity
    magnitudes are ``chi`` and ``eta``; their signs follow the sign of the
    contribution each device must supply. A zero target with nothing to
    cancel leaves the device uncoupled.

    With ``refine > 0`` the closed-form targets are corrected that many times
    by the gap between target and exact-diagonalization values, so the
    returned spec (and its residuals) then describe the numeric Kerr values.
    This needs a chain small enough to diagonalize.

    Returns
    -------
    (Circuit, EffectiveHamiltonianSpec)

    Raises
    ------
    InfeasibleTarget
        If no root exists in the bounds or a residual exceeds 1e-8 GHz.
    FrequencyCollision
        If two elements of the designed chain lie within 10 MHz.
    """
    if N < 2:
        raise ConfigError("an array needs N >= 2 cavities")
    S_targets = [float(s) for s in S_targets]
    X_targets = [float(x) for x in X_targets]
    if len(S_targets) != N or len(X_targets) != N - 1:
        raise ConfigError("need N self-Kerr targets and N - 1 cross-Kerr targets")
    if not all(map(math.isfinite, S_targets + X_targets)):
        raise ConfigError("targets must be finite")
    omega = [8.0 + 0.6 * i for i in range(N)] if omega is None else [float(w) for w in omega]
    if len(omega) != N:
        raise ConfigError("omega needs N entries")

    def solve(S_eff, X_eff):
        # stage 1: intermediaries b_2 .. b_N; end intermediaries stay uncoupled
        Omega = [omega[0] + 2.0] + [0.0] * (N - 1) + [omega[-1] + 2.0]
        chis = [chi] * (N + 1)
        g = [0.0] * N
        h = [0.0] * N

        def stage1(i):
            target = X_eff[i]
            if target == 0:
                return i, 0.5 * (omega[i] + omega[i + 1]), chi, 0.0
            c = math.copysign(chi, target)

            def resid(d):
                return x_duffing(coupling, coupling, d, omega[i + 1] - (omega[i] - d), c) - target

            roots = _root_in(resid, bounds, ARRAY_TOLERANCE)
            if not roots:
                raise InfeasibleTarget(f"no intermediary detuning gives X_{i + 1},{i + 2} = {target:g}")
            d = max(roots, key=lambda d: min(abs(d), abs(omega[i + 1] - omega[i] + d)))
            return i, omega[i] - d, c, coupling

        with ThreadPoolExecutor(max(1, workers)) as pool:
            for i, w, c, gg in pool.map(stage1, range(N - 1)):
                Omega[i + 1], chis[i + 1], h[i], g[i + 1] = w, c, gg, gg

        # stage 2: on-site devices
        def inter_s(i):
            s = 0.0
            if g[i]:
                s += s_duffing(g[i], omega[i] - Omega[i], chis[i])
            if h[i]:
                s += s_duffing(h[i], omega[i] - Omega[i + 1], chis[i + 1])
            return s

        def stage2(i):
            need = S_eff[i] - inter_s(i)
            if need == 0:
                return i, omega[i] + 1.5, eta, 0.0
            e = math.copysign(eta, need)
            roots = _root_in(lambda d: s_duffing(onsite_coupling, d, e) - need, bounds, ARRAY_TOLERANCE)
            if not roots:
                raise InfeasibleTarget(f"no on-site detuning gives S_{i + 1} = {S_targets[i]:g}")
            neighbours = [Omega[i], Omega[i + 1]] + omega

            def spread(d):
                return min(abs(omega[i] - d - w) for w in neighbours)

            d = max(roots, key=spread)
            return i, omega[i] - d, e, onsite_coupling

        Omega_t, etas, f = [0.0] * N, [eta] * N, [0.0] * N
        with ThreadPoolExecutor(max(1, workers)) as pool:
            for i, w, e, ff in pool.map(stage2, range(N)):
                Omega_t[i], etas[i], f[i] = w, e, ff

        return _coupled_only(array_circuit(omega, Omega, chis, Omega_t, etas, g, f, h,
                                           fock_dim=fock_dim, levels=levels))

    S_eff, X_eff = list(S_targets), list(X_targets)
    circuit = solve(S_eff, X_eff)
    for _ in range(refine):
        num = numeric_kerr_report(circuit, n_max=min(2, fock_dim - 2))
        for i in range(N):
            S_eff[i] += S_targets[i] - num.self_kerr[f"c{i + 1}"]
        for i in range(N - 1):
            X_eff[i] += X_targets[i] - num.X(f"c{i + 1}", f"c{i + 2}")
        circuit = solve(S_eff, X_eff)
    check_collisions(circuit)
    report = closed_form_for_circuit(circuit)
    S = tuple(report.self_kerr[f"c{i + 1}"] for i in range(N))
    X = tuple(report.X(f"c{i + 1}", f"c{i + 2}") for i in range(N - 1))
    res_s = [abs(a - b) for a, b in zip(S, S_eff)]
    res_x = [abs(a - b) for a, b in zip(X, X_eff)]
    worst = max(res_s + res_x)
    if worst > ARRAY_TOLERANCE:
        raise InfeasibleTarget(f"design residual {worst:.3e} GHz exceeds {ARRAY_TOLERANCE:g} GHz")
    if refine:
        num = numeric_kerr_report(circuit, n_max=min(2, fock_dim - 2))
        S = tuple(num.self_kerr[f"c{i + 1}"] for i in range(N))
        X = tuple(num.X(f"c{i + 1}", f"c{i + 2}") for i in range(N - 1))
        res_s = [abs(a - b) for a, b in zip(S, S_targets)]
        res_x = [abs(a - b) for a, b in zip(X, X_targets)]
    omega_prime = tuple(omega[i] + report.linear[f"c{i + 1}"] for i in range(N))
    spec = EffectiveHamiltonianSpec(omega_prime, S, X, {"S": res_s, "X": res_x})
    return circuit, spec


def _coupled_only(circuit: Circuit) -> Circuit:
    out = circuit
    for d in circuit.devices:
        if all(cp.g == 0 for cp in circuit.couplings_of(d.label)):
            out = out.without_device(d.label)
    return out


# verification

def verify_design(circuit: Circuit, n_max: int = 2) -> dict:
    """Closed-form and numeric Kerr values of a designed circuit side by side.

    The numeric values come from exact diagonalization; the expected gap is
    of relative order ``(g / Delta)^2`` of the individual device terms.
    """
    cf = closed_form_for_circuit(circuit)
    num = numeric_kerr_report(circuit, n_max=n_max)
    ratio = max((d.ratio for d in validate_dispersive(circuit)), default=0.0)
    return {
        "closed_form": cf.to_dict(),
        "numeric": num.to_dict(),
        "max_dispersive_ratio": ratio,
        "classification": classify_ratio(ratio),
    }
