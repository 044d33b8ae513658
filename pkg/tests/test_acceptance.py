"""Acceptance criteria 1-10.

Each test prints one ``PASS``/``FAIL`` line and asserts the criterion at its
stated tolerance. The lines are repeated in the pytest terminal summary. Run
this file directly to print them without pytest.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).resolve().parent))

from grids import PRESETS, kerr_mismatch, random_params, relative_gap  # noqa: E402
from kerrforge.analytic import jc_eigenpair, symmetric_1c2q_eigenvalues  # noqa: E402
from kerrforge.circuit import CavitySpec, Circuit, Coupling  # noqa: E402
from kerrforge.closedform import kerr_closed_form, preset_circuit, x_two_level  # noqa: E402
from kerrforge.designer import (  # noqa: E402
    plan_cphase_gate,
    single_device_on_off_ratio,
    solve_cross_kerr_off,
)
from kerrforge.dynamics import (  # noqa: E402
    Propagator,
    amplitude_trace,
    energy_expectation,
    evolve,
    fidelity_max_rotation,
    kerr_amplitude,
    partial_trace,
    purity,
    revival_times,
    wigner_grid,
)
from kerrforge.extraction import (  # noqa: E402
    extract_cross_kerr,
    extract_self_kerr,
    label_dressed_states,
)
from kerrforge.fock import (  # noqa: E402
    HilbertSpace,
    OperatorMatrix,
    StateVector,
    cat_vector,
    coherent_state,
    coherent_vector,
    logical_cat_components,
    product_state,
)
from kerrforge.hamiltonian import HamiltonianBundle, build, dicke_block, jc_block  # noqa: E402
from kerrforge.perturbation import kerr_from_paths, nonrwa_term_ratios  # noqa: E402
from kerrforge.presets import (  # noqa: E402
    GATE_SHIFT,
    gate_circuit,
    mirrored_pair,
    single_transmon,
    storage_transmon,
    storage_with_fluxonium,
)

RESULTS = {}


def record(n, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    return passed


def _rng(n):
    return np.random.default_rng(1000 + n)


# 1

def test_criterion_1_analytic_oracles():
    t0 = time.perf_counter()
    rng = _rng(1)
    worst_jc = worst_sym = 0.0
    for _ in range(1000):
        n = int(rng.integers(0, 51))
        wc = rng.uniform(4, 10)
        delta = rng.choice([-1, 1]) * rng.uniform(0.3, 2.0)
        g = rng.uniform(0.0, 0.1) * abs(delta) / math.sqrt(n + 1)
        p = jc_eigenpair(n, wc, wc - delta, g)
        worst_jc = max(worst_jc, relative_gap([p.energy_minus, p.energy_plus],
                                              np.linalg.eigvalsh(jc_block(n, wc, wc - delta, g))))
        s = symmetric_1c2q_eigenvalues(n, wc, delta, g)
        ev = np.linalg.eigvalsh(dicke_block(n, wc, delta, -delta, g, g))
        worst_sym = max(worst_sym, relative_gap(np.sort(s.energies), ev))
    dt = time.perf_counter() - t0
    ok = worst_jc < 1e-10 and worst_sym < 1e-10 and dt < 5
    record(1, ok, f"max relative error JC {worst_jc:.2e}, symmetric {worst_sym:.2e} "
                  f"(< 1e-10) over 1000 points in {dt:.2f} s (< 5 s)")
    assert ok


# 2

def test_criterion_2_path_enumeration_equals_closed_form():
    t0 = time.perf_counter()
    rng = _rng(2)
    worst = {}
    for preset in PRESETS:
        w = 0.0
        for _ in range(200):
            p = random_params(preset, rng)
            c = preset_circuit(preset, omega_c=9.0, fock_dim=4, **p)
            w = max(w, kerr_mismatch(kerr_closed_form(preset, **p), kerr_from_paths(c), c))
        worst[preset] = w
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-12 and dt < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(2, ok, f"max relative mismatch {detail} (< 1e-12), 200 sets each in {dt:.1f} s (< 30 s)")
    assert ok


# 3

def _self_kerr_error(ratio):
    c = preset_circuit("1C1T", omega_c=9.2, fock_dim=30, levels=4, g=ratio, delta=1.0, chi=-0.3)
    s_pt = kerr_from_paths(c).S("c")
    return abs(extract_self_kerr(build(c), "c").S - s_pt) / abs(s_pt)


def test_criterion_3_convergence():
    t0 = time.perf_counter()
    ratios = np.geomspace(0.01, 0.1, 7)
    errs = np.array([_self_kerr_error(r) for r in ratios])
    slope = float(np.polyfit(np.log(ratios), np.log(errs), 1)[0])
    e05 = _self_kerr_error(0.05)
    dt = time.perf_counter() - t0
    ok = abs(slope - 2) <= 0.3 and e05 < 0.05 and dt < 120
    record(3, ok, f"log-log slope {slope:.3f} (2 +/- 0.3), error at g/Delta=0.05 {e05:.4f} (< 0.05), "
                  f"error at 0.1 {errs[-1]:.4f}; {dt:.1f} s")
    assert ok


# 4

def _dressed_coherent(bundle, alpha, n_max):
    cv = coherent_vector(bundle.space.dims[0], alpha)
    labels = [(n,) + (0,) * (len(bundle.space.dims) - 1) for n in range(n_max)]
    ds = label_dressed_states(bundle, labels)
    return StateVector.normalized(bundle.space, sum(cv[l[0]] * ds[l].vector for l in labels))


def test_criterion_4_collapse_and_cancellation():
    t0 = time.perf_counter()
    alpha = 2.0
    s_pt = kerr_from_paths(single_transmon(fock_dim=8)).S("c")
    t_rev = 1.0 / abs(s_pt) / 1e3
    times = np.linspace(0.0, 1.3 * t_rev, 2000)

    single = build(single_transmon(fock_dim=30))
    tr = amplitude_trace(evolve(coherent_state(single.space, "c", alpha), single, times), "c", times)
    revivals = revival_times(tr)
    half_err = abs(revivals[0] - t_rev / 2) / (t_rev / 2) if revivals else math.inf
    full_err = abs(revivals[1] - t_rev) / t_rev if len(revivals) > 1 else math.inf
    v = tr.values["abs_a"]
    collapsed = v.min() < 0.25 * v[0]

    pair = build(mirrored_pair(fock_dim=30))
    v_pair = amplitude_trace(evolve(coherent_state(pair.space, "c", alpha), pair, times), "c",
                             times).values["abs_a"]
    dev = float(np.max(np.abs(v_pair - v_pair[0])) / v_pair[0])
    v_dressed = amplitude_trace(evolve(_dressed_coherent(pair, alpha, 22), pair, times), "c",
                                times).values["abs_a"]
    dev_dressed = float(np.max(np.abs(v_dressed - v_dressed[0])) / v_dressed[0])
    dt = time.perf_counter() - t0

    single_ok = collapsed and half_err < 0.15 and full_err < 0.15
    pair_ok = dev < 0.10
    ok = single_ok and pair_ok and dt < 600
    rv = ", ".join(f"{r:.2f}" for r in revivals[:2])
    record(4, ok, f"single device: collapse to {v.min():.3f}, revivals at {rv} us vs 1/(2|S|) "
                  f"{t_rev / 2:.2f} and 1/|S| {t_rev:.2f} us (errors {half_err:.3f}, {full_err:.3f}; "
                  f"< 0.15); mirrored pair from the bare coherent state: max |<a>| deviation {dev:.3f} "
                  f"(< 0.10); diagnostic, dressed coherent state: {dev_dressed:.1e}; {dt:.1f} s")
    assert ok


# 5

def test_criterion_5_two_level_elimination():
    rng = _rng(5)
    worst = 0.0
    sets = [(9.2, 1.0, 0.1)] + [(rng.uniform(4, 10), rng.uniform(0.5, 2), rng.uniform(0.01, 0.1))
                               for _ in range(50)]
    for wc, delta, g in sets:
        for n in range(0, 6):
            e = [symmetric_1c2q_eigenvalues(n + k, wc, delta, g).branch("aligned")[0] for k in range(3)]
            worst = max(worst, abs(e[2] - 2 * e[1] + e[0]))
    c = preset_circuit("1C2Q", omega_c=9.2, fock_dim=10, g=[0.1, 0.1], delta=[1.0, -1.0])
    s_full = extract_self_kerr(build(c), "c").S
    ok = worst < 1e-10 and abs(s_full) < 1e-10
    record(5, ok, f"aligned-branch second difference max {worst:.1e} GHz (< 1e-10); "
                  f"full diagonalization S {s_full:.1e} GHz")
    assert ok


# 6

def _purities(circuit, times):
    b = build(circuit)
    plus = {c.label: np.r_[1, 1, np.zeros(c.fock_dim - 2)] / math.sqrt(2) for c in circuit.cavities}
    states = evolve(product_state(b.space, plus), b, times)
    single = np.array([purity(partial_trace(s, ["c1"])) for s in states])
    joint = np.array([purity(partial_trace(s, ["c1", "c2"])) for s in states])
    return single, joint


def test_criterion_6_cross_kerr_gate():
    t0 = time.perf_counter()
    off = solve_cross_kerr_off(gate_circuit(False, fock_dim=6, levels=4), "q2")
    sched = plan_cphase_gate(off, "q2", GATE_SHIFT)
    s_off, _ = _purities(sched.off_configuration, np.linspace(0, 60, 601))
    s_on, j_on = _purities(sched.on_configuration, np.array([0.0, sched.gate_time]))
    ratio = single_device_on_off_ratio(off, "q2", GATE_SHIFT)
    ratio_cf = single_device_on_off_ratio(off, "q2", GATE_SHIFT, numeric=False)
    w1, w2 = off.cavity("c1").frequency, off.cavity("c2").frequency
    wq = off.device("q2").frequency
    x2 = [x_two_level(0.0876, 0.08, w1 - w, w2 - w) for w in (wq, wq + GATE_SHIFT)]
    dt = time.perf_counter() - t0
    parts = {
        "off purity": s_off.min() >= 0.95,
        "on purity": abs(s_on[1] - 0.5) <= 0.05,
        "gate time": abs(sched.gate_time - 30) <= 0.3 * 30,
        "on/off ratio": abs(ratio - 8) <= 2,
    }
    ok = all(parts.values()) and dt < 600
    failing = [k for k, v in parts.items() if not v]
    record(6, ok, f"min off single-cavity purity {s_off.min():.4f} over 60 us (>= 0.95); on purity at "
                  f"gate time {s_on[1]:.4f} (0.5 +/- 0.05), joint {j_on[1]:.4f}; gate time "
                  f"{sched.gate_time:.2f} us (30 +/- 30%); single-device on/off ratio {ratio:.2f} "
                  f"(8 +/- 2; closed form {ratio_cf:.2f}, two-level model {abs(x2[0] / x2[1]):.2f})"
                  + (f"; failing: {', '.join(failing)}" if failing else "") + f"; {dt:.1f} s")
    assert ok


# 7

def test_criterion_7_cancellation_factor():
    factors = {}
    for g22 in (0.08, 0.07):
        c = gate_circuit(False).replace_device("q2", frequency=10.0)
        c = Circuit(c.cavities, c.devices,
                    [Coupling(cp.cavity, cp.device, g22 if (cp.cavity, cp.device) == ("c2", "q2") else cp.g)
                     for cp in c.couplings])
        off = solve_cross_kerr_off(c, "q2")
        x_off = extract_cross_kerr(build(off), "c1", "c2")
        solo = Circuit(off.cavities, [off.device("q1")], [cp for cp in off.couplings if cp.device == "q1"])
        x_solo = extract_cross_kerr(build(solo), "c1", "c2")
        factors[g22] = abs(x_solo) / abs(x_off) if x_off else math.inf
    ok = min(factors.values()) >= 50
    detail = ", ".join(f"g22={k}: {v:.3g}" for k, v in factors.items())
    record(7, ok, f"|X_single| / |X_off numeric| {detail} (>= 50)")
    assert ok


# 8

def test_criterion_8_non_rwa_bound():
    ratios = nonrwa_term_ratios(9.2, 8.2, -0.3, 0.08)
    worst = max(ratios, key=ratios.get)
    ok = ratios[worst] <= 0.15
    record(8, ok, f"largest counter-rotating term / RWA self-Kerr term {ratios[worst]:.4f} ({worst}; <= 0.15)")
    assert ok


# 9

def test_criterion_9_conservation_suite():
    t0 = time.perf_counter()
    rng = _rng(9)
    checks = {}
    comm = 0.0
    comm_cr = math.inf
    for preset in PRESETS:
        p = random_params(preset, rng)
        for rwa in (True, False):
            b = build(preset_circuit(preset, omega_c=9.0, fock_dim=3, levels=3, rwa=rwa, **p))
            H = b.matrix
            N = np.asarray(b.excitations, float)
            C = H.multiply(N[None, :]) - H.multiply(N[:, None])
            val = abs(C).max()
            if rwa:
                comm = max(comm, val)
            else:
                comm_cr = min(comm_cr, val)
    checks["[H,N] (rwa)"] = (comm, comm < 1e-10)
    checks["[H,N] (non-rwa) nonzero"] = (comm_cr, comm_cr > 0)

    b = build(preset_circuit("1C2D", omega_c=9.2, fock_dim=14, levels=4, g=[0.1, 0.08],
                             delta=[1.0, -0.9], chi=[-0.3, 0.25]))
    psi = coherent_state(b.space, "c", 1.2)
    prop = Propagator(b)
    ts = np.linspace(0, 20, 41)
    states = prop.evolve(psi, ts)
    norm = max(abs(np.linalg.norm(s.amplitudes) - 1) for s in states)
    e0 = energy_expectation(psi, b)
    energy = max(abs(energy_expectation(s, b) - e0) for s in states) / abs(e0)
    (ab,) = prop.evolve(psi, [13.7])
    (mid,) = prop.evolve(psi, [6.2])
    (ab2,) = prop.evolve(mid, [7.5])
    comp = float(np.max(np.abs(ab.amplitudes - ab2.amplitudes)))
    checks["norm"] = (norm, norm < 1e-9)
    checks["energy"] = (energy, energy < 1e-8)
    checks["composition"] = (comp, comp < 1e-8)

    pur_bad = 0
    trace_err = herm = 0.0
    neg = 0.0
    for s in states[::5]:
        for keep in (["c"], ["q1"], ["c", "q2"]):
            rho = partial_trace(s, keep)
            trace_err = max(trace_err, abs(np.trace(rho) - 1))
            herm = max(herm, float(np.max(np.abs(rho - rho.conj().T))))
            neg = min(neg, float(np.linalg.eigvalsh(rho).min()))
            p = purity(rho)
            pur_bad += not (1 / rho.shape[0] - 1e-12 <= p <= 1 + 1e-12)
    checks["partial trace"] = (max(trace_err, herm), trace_err < 1e-10 and herm < 1e-12 and neg > -1e-10)
    checks["purity bounds"] = (pur_bad, pur_bad == 0)

    S = -1.3e-5
    space = HilbertSpace((("c", 40),))
    n = np.arange(40, dtype=float)
    kc = Circuit([CavitySpec("c", 1.0, 40)], [], [])
    kbundle = HamiltonianBundle(kc, space, OperatorMatrix(space, sp.csr_matrix(np.diag(S * n * n))))
    tk = np.linspace(0, 80, 81)
    vk = amplitude_trace(evolve(coherent_state(space, "c", 2.0), kbundle, tk), "c", tk).values["abs_a"]
    oracle = float(np.max(np.abs(vk - kerr_amplitude(2.0, S, tk))))
    checks["Kerr oracle"] = (oracle, oracle < 1e-6)

    comps, w = logical_cat_components(2.0, 1.0, 0.0)
    wig = [abs(wigner_grid(v, 4.5, 61).integral - 1)
           for v in (np.eye(30)[0], coherent_vector(30, 1 + 0.5j), cat_vector(30, comps, w))]
    checks["Wigner normalization"] = (max(wig), max(wig) < 0.02)
    dt = time.perf_counter() - t0
    ok = all(v[1] for v in checks.values()) and dt < 60
    detail = "; ".join(f"{k} {v[0]:.1e}{'' if v[1] else ' (FAIL)'}" for k, v in checks.items())
    record(9, ok, f"{detail}; {dt:.1f} s (< 60 s)")
    assert ok


# 10

def test_criterion_10_storage():
    t0 = time.perf_counter()
    s_t_pt = kerr_from_paths(storage_transmon(8)).S("c")
    s_tot_pt = kerr_from_paths(storage_with_fluxonium(8)).S("c")
    flux = build(storage_with_fluxonium(24))
    s_t_num = extract_self_kerr(build(storage_transmon(24)), "c").S
    s_num = extract_self_kerr(flux, "c").S
    suppression = abs(s_t_num) / abs(s_num)

    def fidelity(ref, times):
        psi = product_state(flux.space, {"c": ref})
        return np.array([fidelity_max_rotation(s, ref, "c")[0] for s in evolve(psi, flux, times)])

    F50 = fidelity(coherent_vector(24, 2.0), [50.0])[0]
    cats = {}
    for a in (0.0, 0.25, 0.5, 1 / math.sqrt(2), 1.0):
        comps, w = logical_cat_components(2.0, a, math.sqrt(max(1 - a * a, 0.0)))
        cats[round(a, 3)] = fidelity(cat_vector(24, comps, w), [100.0])[0]
    supplied = suppression >= 10
    ok = supplied and F50 >= 0.90 and min(cats.values()) >= 0.50

    # degraded branch, reported for reference
    horizon = 5 / (4 * abs(s_t_pt)) / 1e3
    cancel = 1 - abs(s_tot_pt) / abs(s_t_pt)
    F_deg = fidelity(coherent_vector(24, 2.0), np.linspace(0, horizon, 400)).min()
    dt = time.perf_counter() - t0
    cat_txt = ", ".join(f"a={k}: {v:.3f}" for k, v in cats.items())
    record(10, ok, f"numeric Kerr suppression {suppression:.1f}x (>= 10, S {s_num:.2e} vs transmon "
                   f"{s_t_num:.2e} GHz); F(50 us) {F50:.4f} (>= 0.90); cat fidelities at 100 us {cat_txt} "
                   f"(>= 0.50); reference only, fourth-order cancellation {cancel:.3f} gives min F "
                   f"{F_deg:.3f} over 5 quarter-revivals ({horizon:.0f} us); {dt:.1f} s")
    assert ok


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
