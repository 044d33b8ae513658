"""Closed-form fourth-order Kerr coefficients and the matching preset circuits.

Conventions: ``Delta = w_cavity - w_device`` and a Duffing device has level
energies ``w n + chi n (n - 1) / 2``. Under these conventions a single
device of coupling ``g`` gives ::

    S = chi g^4 / (Delta^3 (2 Delta - chi))
    L = g^2 / Delta - 2 g^4 / (Delta^2 (2 Delta - chi))

and a device shared by cavities ``a`` and ``b`` gives ::

    X = 2 ga^2 gb^2 chi (Da + Db) / (Da^2 Db^2 (Da + Db - chi))

A two-level device is the ``|chi| -> infinity`` limit of both expressions.
Multiple devices contribute additively to S and X.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .circuit import Circuit, CavitySpec, Coupling, Duffing, Multilevel, TwoLevel
from .errors import ConfigError
from .perturbation import KerrReport, check_pole

PRESETS = ("1C1Q", "1C1T", "1C2Q", "1C2D", "2C1Q", "2C1T", "2C2D", "array")


# single-device building blocks

def s_two_level(g: float, delta: float) -> float:
    check_pole(delta, "Delta")
    return -g**4 / delta**3


def s_duffing(g: float, delta: float, chi: float) -> float:
    check_pole(delta, "Delta")
    check_pole(2 * delta - chi, "2 Delta - chi")
    return chi * g**4 / (delta**3 * (2 * delta - chi))


def l_two_level(g: float, delta: float) -> float:
    check_pole(delta, "Delta")
    return g * g / delta


def l_duffing(g: float, delta: float, chi: float) -> float:
    check_pole(delta, "Delta")
    check_pole(2 * delta - chi, "2 Delta - chi")
    return g * g / delta - 2 * g**4 / (delta**2 * (2 * delta - chi))


def x_two_level(ga: float, gb: float, da: float, db: float) -> float:
    check_pole(da, "Delta_a")
    check_pole(db, "Delta_b")
    return -2 * ga**2 * gb**2 * (da + db) / (da**2 * db**2)


def x_duffing(ga: float, gb: float, da: float, db: float, chi: float) -> float:
    check_pole(da, "Delta_a")
    check_pole(db, "Delta_b")
    check_pole(da + db - chi, "Delta_a + Delta_b - chi")
    return 2 * ga**2 * gb**2 * chi * (da + db) / (da**2 * db**2 * (da + db - chi))


def l_device_pair(g1: float, g2: float, d1: float, d2: float) -> float:
    """Linear shift from two devices sharing one cavity."""
    return -(g1**2) * g2**2 * (d1 + d2) / (d1**2 * d2**2)


def l_hopping(gi: float, gj: float, di: float, dj: float) -> float:
    """Linear shift of cavity ``i`` from hopping to cavity ``j`` through a shared device."""
    check_pole(di - dj, "Delta_i - Delta_j")
    return gi**2 * gj**2 / (di**2 * (di - dj))


def _device_s(dev, g, delta):
    if isinstance(dev, TwoLevel):
        return s_two_level(g, delta)
    return s_duffing(g, delta, dev.anharmonicity)


def _device_l(dev, g, delta):
    if isinstance(dev, TwoLevel):
        return l_two_level(g, delta)
    return l_duffing(g, delta, dev.anharmonicity)


def _device_x(dev, ga, gb, da, db):
    if isinstance(dev, TwoLevel):
        return x_two_level(ga, gb, da, db)
    return x_duffing(ga, gb, da, db, dev.anharmonicity)


# catalogue

def _as2(v, name):
    v = list(v)
    if len(v) != 2:
        raise ConfigError(f"{name} needs two entries")
    return v


def kerr_closed_form(preset: str, **params) -> KerrReport:
    """Evaluate the closed form of a named configuration.

    Parameters by preset (couplings ``g``, detunings ``delta`` as cavity
    minus device frequency, anharmonicities ``chi``; all GHz):

    ``1C1Q``: ``g, delta``; ``1C1T``: ``g, delta, chi``.
    ``1C2Q``: ``g, delta`` as pairs; ``1C2D``: ``g, delta, chi`` as pairs.
    ``2C1Q``: ``g, delta`` as pairs (one per cavity).
    ``2C1T``: as ``2C1Q`` plus scalar ``chi``.
    ``2C2D``: ``g`` and ``delta`` as 2x2 arrays indexed [cavity][device],
    ``chi`` as a pair.
    ``array``: lists ``omega`` (N cavities), ``Omega`` and ``chi`` (N+1
    intermediary devices), ``Omega_tilde`` and ``eta`` (N on-site devices),
    and couplings ``g``, ``f``, ``h`` of length N. Cavity ``i`` couples to
    intermediary ``i`` with ``g_i``, to intermediary ``i+1`` with ``h_i``
    and to its on-site device with ``f_i``.

    Raises
    ------
    PoleProximity
        If any denominator is within 1e-6 GHz of zero.
    """
    p = params
    if preset == "1C1Q":
        return KerrReport("closed-form", {"c": s_two_level(p["g"], p["delta"])},
                          linear={"c": l_two_level(p["g"], p["delta"])})
    if preset == "1C1T":
        return KerrReport("closed-form", {"c": s_duffing(p["g"], p["delta"], p["chi"])},
                          linear={"c": l_duffing(p["g"], p["delta"], p["chi"])})
    if preset in ("1C2Q", "1C2D"):
        g, d = _as2(p["g"], "g"), _as2(p["delta"], "delta")
        if preset == "1C2Q":
            per = [s_two_level(g[k], d[k]) for k in range(2)]
            lin = sum(l_two_level(g[k], d[k]) for k in range(2))
        else:
            chi = _as2(p["chi"], "chi")
            per = [s_duffing(g[k], d[k], chi[k]) for k in range(2)]
            lin = sum(l_duffing(g[k], d[k], chi[k]) for k in range(2))
        lin += l_device_pair(g[0], g[1], d[0], d[1])
        return KerrReport("closed-form", {"c": per[0] + per[1]}, linear={"c": lin},
                          details={"per_device": per})
    if preset in ("2C1Q", "2C1T"):
        g, d = _as2(p["g"], "g"), _as2(p["delta"], "delta")
        if preset == "2C1Q":
            S = [s_two_level(g[k], d[k]) for k in range(2)]
            L = [l_two_level(g[k], d[k]) for k in range(2)]
            X = x_two_level(g[0], g[1], d[0], d[1])
        else:
            chi = p["chi"]
            S = [s_duffing(g[k], d[k], chi) for k in range(2)]
            L = [l_duffing(g[k], d[k], chi) for k in range(2)]
            X = x_duffing(g[0], g[1], d[0], d[1], chi)
        L[0] += l_hopping(g[0], g[1], d[0], d[1])
        L[1] += l_hopping(g[1], g[0], d[1], d[0])
        return KerrReport("closed-form", {"c1": S[0], "c2": S[1]}, {("c1", "c2"): X},
                          linear={"c1": L[0], "c2": L[1]})
    if preset == "2C2D":
        g = np.asarray(p["g"], float)
        d = np.asarray(p["delta"], float)
        chi = _as2(p["chi"], "chi")
        if g.shape != (2, 2) or d.shape != (2, 2):
            raise ConfigError("2C2D needs 2x2 g and delta")
        S = {f"c{i + 1}": sum(s_duffing(g[i, j], d[i, j], chi[j]) for j in range(2)) for i in range(2)}
        per = [x_duffing(g[0, j], g[1, j], d[0, j], d[1, j], chi[j]) for j in range(2)]
        return KerrReport("closed-form", S, {("c1", "c2"): per[0] + per[1]},
                          details={"per_device_cross": per})
    if preset == "array":
        return _array_closed_form(**p)
    raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")


def _array_closed_form(omega, Omega, chi, Omega_tilde, eta, g, f, h) -> KerrReport:
    N = len(omega)
    if not (len(Omega) == len(chi) == N + 1 and len(Omega_tilde) == len(eta) == len(g) == len(f) == len(h) == N):
        raise ConfigError("array parameters have inconsistent lengths")
    S, X = {}, {}
    for i in range(N):
        gam_ii = omega[i] - Omega[i]
        gam_next = omega[i] - Omega[i + 1]
        xi = omega[i] - Omega_tilde[i]
        S[f"c{i + 1}"] = (
            _maybe(s_duffing, g[i], gam_ii, chi[i])
            + _maybe(s_duffing, f[i], xi, eta[i])
            + _maybe(s_duffing, h[i], gam_next, chi[i + 1])
        )
    for i in range(N - 1):
        gam_a = omega[i] - Omega[i + 1]
        gam_b = omega[i + 1] - Omega[i + 1]
        X[(f"c{i + 1}", f"c{i + 2}")] = _maybe(x_duffing, h[i], g[i + 1], gam_a, gam_b, chi[i + 1])
    for i in range(N):
        for j in range(i + 2, N):
            X[(f"c{i + 1}", f"c{j + 1}")] = 0.0
    return KerrReport("closed-form", S, X)


def _maybe(fn, *args):
    """Skip a contribution whose coupling vanishes (its poles are then irrelevant)."""
    couplings = args[:2] if fn is x_duffing else args[:1]
    if any(c == 0 for c in couplings):
        return 0.0
    return fn(*args)


def closed_form_for_circuit(circuit: Circuit) -> KerrReport:
    """Additive closed-form S and X for any circuit of two-level and Duffing devices.

    Linear shifts are included when no two devices link the same pair of
    cavities (coupling loops add further linear terms that are not
    tabulated).

    Raises
    ------
    ConfigError
        If the circuit contains a Multilevel device.
    """
    if any(isinstance(d, Multilevel) for d in circuit.devices):
        raise ConfigError("no closed form for circuits with Multilevel devices")
    cavs = [c.label for c in circuit.cavities]
    freq = {c.label: c.frequency for c in circuit.cavities}
    S = {c: 0.0 for c in cavs}
    L = {c: 0.0 for c in cavs}
    X = {(a, b): 0.0 for i, a in enumerate(cavs) for b in cavs[i + 1:]}
    links = {}
    for cp in circuit.couplings:
        if cp.g > 0:
            links.setdefault(cp.device, []).append(cp)
    for dname, cps in links.items():
        dev = circuit.device(dname)
        for cp in cps:
            delta = freq[cp.cavity] - dev.frequency
            S[cp.cavity] += _device_s(dev, cp.g, delta)
            L[cp.cavity] += _device_l(dev, cp.g, delta)
        for i, a in enumerate(cps):
            for b in cps[i + 1:]:
                da = freq[a.cavity] - dev.frequency
                db = freq[b.cavity] - dev.frequency
                key = (a.cavity, b.cavity) if (a.cavity, b.cavity) in X else (b.cavity, a.cavity)
                X[key] += _device_x(dev, a.g, b.g, da, db)
                L[a.cavity] += l_hopping(a.g, b.g, da, db)
                L[b.cavity] += l_hopping(b.g, a.g, db, da)
    for c in cavs:
        cps = [cp for cp in circuit.couplings if cp.cavity == c and cp.g > 0]
        for i, a in enumerate(cps):
            for b in cps[i + 1:]:
                da = freq[c] - circuit.device(a.device).frequency
                db = freq[c] - circuit.device(b.device).frequency
                L[c] += l_device_pair(a.g, b.g, da, db)
    shared = {}
    for dname, cps in links.items():
        for i, a in enumerate(cps):
            for b in cps[i + 1:]:
                shared.setdefault(frozenset((a.cavity, b.cavity)), []).append(dname)
    loops = any(len(v) > 1 for v in shared.values())
    return KerrReport("closed-form", S, X, None if loops else L)


# preset circuits

def preset_circuit(preset: str, omega_c: float = 10.0, fock_dim: int = 8, levels: int = 4,
                   rwa: bool = True, **params) -> Circuit:
    """Circuit realizing a preset with the first cavity at ``omega_c``.

    Labels: cavities ``c`` (single cavity) or ``c1, c2, ...``; devices
    ``q``/``q1, q2`` or, for ``array``, intermediary ``b1..b(N+1)`` and
    on-site ``s1..sN``.
    """
    p = params

    def duff(label, w, chi):
        return Duffing(label, w, chi, levels)

    if preset in ("1C1Q", "1C1T"):
        w = omega_c - p["delta"]
        dev = TwoLevel("q", w) if preset == "1C1Q" else duff("q", w, p["chi"])
        return Circuit([CavitySpec("c", omega_c, fock_dim)], [dev], [Coupling("c", "q", p["g"])], rwa)
    if preset in ("1C2Q", "1C2D"):
        g, d = _as2(p["g"], "g"), _as2(p["delta"], "delta")
        if preset == "1C2Q":
            devs = [TwoLevel(f"q{k + 1}", omega_c - d[k]) for k in range(2)]
        else:
            chi = _as2(p["chi"], "chi")
            devs = [duff(f"q{k + 1}", omega_c - d[k], chi[k]) for k in range(2)]
        return Circuit([CavitySpec("c", omega_c, fock_dim)], devs,
                       [Coupling("c", f"q{k + 1}", g[k]) for k in range(2)], rwa)
    if preset in ("2C1Q", "2C1T"):
        g, d = _as2(p["g"], "g"), _as2(p["delta"], "delta")
        wq = omega_c - d[0]
        dev = TwoLevel("q", wq) if preset == "2C1Q" else duff("q", wq, p["chi"])
        cavs = [CavitySpec("c1", omega_c, fock_dim), CavitySpec("c2", wq + d[1], fock_dim)]
        return Circuit(cavs, [dev], [Coupling("c1", "q", g[0]), Coupling("c2", "q", g[1])], rwa)
    if preset == "2C2D":
        g = np.asarray(p["g"], float)
        d = np.asarray(p["delta"], float)
        chi = _as2(p["chi"], "chi")
        wq = [omega_c - d[0, 0], omega_c - d[0, 1]]
        w2 = wq[0] + d[1, 0]
        if abs((w2 - wq[1]) - d[1, 1]) > 1e-9:
            raise ConfigError("2C2D detunings are inconsistent: need D11 - D12 = D21 - D22")
        cavs = [CavitySpec("c1", omega_c, fock_dim), CavitySpec("c2", w2, fock_dim)]
        devs = [duff("q1", wq[0], chi[0]), duff("q2", wq[1], chi[1])]
        cps = [Coupling(f"c{i + 1}", f"q{j + 1}", float(g[i, j])) for i in range(2) for j in range(2)]
        return Circuit(cavs, devs, cps, rwa)
    if preset == "array":
        return array_circuit(fock_dim=fock_dim, levels=levels, rwa=rwa, **p)
    raise ConfigError(f"unknown preset {preset!r}")


def array_circuit(omega: Sequence[float], Omega: Sequence[float], chi: Sequence[float],
                  Omega_tilde: Sequence[float], eta: Sequence[float], g: Sequence[float],
                  f: Sequence[float], h: Sequence[float], fock_dim: int = 4, levels: int = 3,
                  rwa: bool = True) -> Circuit:
    N = len(omega)
    cavs = [CavitySpec(f"c{i + 1}", omega[i], fock_dim) for i in range(N)]
    devs = [Duffing(f"b{j + 1}", Omega[j], chi[j], levels) for j in range(N + 1)]
    devs += [Duffing(f"s{i + 1}", Omega_tilde[i], eta[i], levels) for i in range(N)]
    cps = []
    for i in range(N):
        cps.append(Coupling(f"c{i + 1}", f"b{i + 1}", g[i]))
        cps.append(Coupling(f"c{i + 1}", f"s{i + 1}", f[i]))
        cps.append(Coupling(f"c{i + 1}", f"b{i + 2}", h[i]))
    # drop intermediaries with no coupling at all (open ends)
    used = {cp.device for cp in cps if cp.g > 0}
    devs = [d for d in devs if d.label in used or d.label.startswith("s")]
    cps = [cp for cp in cps if any(d.label == cp.device for d in devs)]
    return Circuit(cavs, devs, cps, rwa)
