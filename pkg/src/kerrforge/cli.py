"""kerrforge command line.

Subcommands::

    kerr-report CONFIG                      closed-form, path and numeric Kerr values
    cancel-self CONFIG --tunable L          place a device to cancel the self-Kerr
    store-state CONFIG --state S --t-max T  evolve a cavity state, write |<a>| and F
    gate CONFIG --tunable L --shift GHz     plan a controlled-phase gate, write purities
    array-design SPEC                       design a chain from target Kerr values
    validate CONFIG                         dispersive diagnostics only

JSON goes to stdout (or ``--output``); tables and progress go to stderr.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 infeasible design.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import Circuit, circuit_to_dict, load_circuit, validate_dispersive
from .closedform import closed_form_for_circuit
from .designer import (
    ArrayBounds,
    design_array,
    plan_cphase_gate,
    solve_cross_kerr_off,
    solve_self_kerr_cancellation,
    verify_design,
)
from .dynamics import (
    TimeTrace,
    amplitude_trace,
    evolve,
    fidelity_max_rotation,
    partial_trace,
    purity,
    wigner_grid,
)
from .errors import ConfigError, KerrForgeError
from .extraction import numeric_kerr_report
from .fock import cat_vector, coherent_vector, logical_cat_components, product_state
from .hamiltonian import build
from .perturbation import kerr_from_paths

DIGITS = 12

STORE_COLUMNS = "t_us, abs_a (|<a>| of the cavity), F (best rotated root fidelity to the initial cavity state)"
GATE_COLUMNS = ("t_us, joint_off, joint_on (two-cavity purity), "
                "single_off, single_on (purity of the first cavity)")
WIGNER_COLUMNS = "t_us, re, im, W"


# formatting

def _clean(obj):
    """Round floats to 12 significant digits and make the result JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{DIGITS}g}")
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _report_table(reports: list) -> str:
    rows = [("method", "quantity", "GHz")]
    for r in reports:
        for c, v in r.self_kerr.items():
            rows.append((r.method, f"S[{c}]", f"{v:.6e}"))
        for (a, b), v in r.cross_kerr.items():
            rows.append((r.method, f"X[{a},{b}]", f"{v:.6e}"))
    w = [max(len(r[k]) for r in rows) for k in range(3)]
    return "\n".join(f"{a:<{w[0]}}  {b:<{w[1]}}  {c:>{w[2]}}" for a, b, c in rows)


# subcommands

def _per_device(circuit: Circuit) -> dict:
    """Fourth-order self-Kerr each device would give on its own."""
    out = {}
    for dev in circuit.devices:
        solo = circuit
        for other in circuit.devices:
            if other.label != dev.label:
                solo = solo.without_device(other.label)
        out[dev.label] = kerr_from_paths(solo).self_kerr
    return out


def cmd_kerr_report(args) -> int:
    circuit = load_circuit(args.config)
    reports = []
    try:
        reports.append(closed_form_for_circuit(circuit))
    except ConfigError as exc:
        _log(f"closed form skipped: {exc}")
    reports.append(kerr_from_paths(circuit))
    if not args.no_numeric:
        reports.append(numeric_kerr_report(circuit, n_max=args.n_max))
    out = {r.method: r.to_dict() for r in reports}
    out["total_self_kerr"] = {r.method: r.total_self_kerr for r in reports}
    out["per_device_self_kerr"] = _per_device(circuit)
    _log(_report_table(reports))
    _emit(_dumps(out), args.output)
    return 0


def cmd_validate(args) -> int:
    circuit = load_circuit(args.config)
    diags = [d.to_dict() for d in validate_dispersive(circuit)]
    _emit(_dumps({"diagnostics": diags}), args.output)
    return 0


def cmd_cancel_self(args) -> int:
    circuit = load_circuit(args.config)
    designed = solve_self_kerr_cancellation(circuit, args.tunable, args.cavity, tuple(args.bounds))
    cavity = args.cavity or designed.cavities[0].label
    achieved = closed_form_for_circuit(designed).self_kerr[cavity]
    report = {"targets": {"S": {cavity: 0.0}}, "achieved": {"S": {cavity: achieved}},
              "residuals": {"S": {cavity: abs(achieved)}}, "tunable": args.tunable}
    if not args.no_verify:
        report["verification"] = verify_design(designed, n_max=args.n_max)
    data = circuit_to_dict(designed)
    data["design_report"] = report
    _emit(_dumps(data), args.output)
    return 0


def parse_state(text: str):
    """``coherent:ALPHA`` or ``cat:ALPHA:A`` (logical cat with ``b = sqrt(1 - |A|^2)``)."""
    parts = text.split(":")
    try:
        if parts[0] == "coherent" and len(parts) == 2:
            alpha = complex(parts[1])
            return "coherent", alpha, None
        if parts[0] == "cat" and len(parts) == 3:
            alpha, a = complex(parts[1]), float(parts[2])
            if not 0 <= abs(a) <= 1:
                raise ValueError
            return "cat", alpha, a
    except ValueError:
        pass
    raise ConfigError(f"bad --state {text!r}; use coherent:ALPHA or cat:ALPHA:A")


def cmd_store_state(args) -> int:
    circuit = load_circuit(args.config)
    cavity = args.cavity or circuit.cavities[0].label
    dim = circuit.cavity(cavity).fock_dim
    kind, alpha, a = parse_state(args.state)
    if kind == "coherent":
        ref = coherent_vector(dim, alpha)
    else:
        comps, w = logical_cat_components(alpha, a, math.sqrt(1 - a * a))
        ref = cat_vector(dim, comps, w)
    bundle = build(circuit)
    psi0 = product_state(bundle.space, {cavity: ref})
    times = np.linspace(0.0, args.t_max, args.points)
    states = evolve(psi0, bundle, times)
    trace = amplitude_trace(states, cavity, times)
    trace.values["F"] = np.array([fidelity_max_rotation(s, ref, cavity)[0] for s in states])
    _emit(trace.to_csv(), args.output)
    if args.wigner_times:
        try:
            snaps = [float(t) for t in args.wigner_times.split(",")]
        except ValueError:
            raise ConfigError(f"bad --wigner-times {args.wigner_times!r}") from None
        lines = ["t_us,re,im,W"]
        snap_states = evolve(psi0, bundle, sorted(snaps)) if snaps else []
        for t, s in zip(sorted(snaps), snap_states):
            res = wigner_grid(partial_trace(s, [cavity]), args.wigner_extent, args.wigner_n)
            for beta, W in zip(res.points.ravel(), res.W.ravel()):
                lines.append(f"{t:.12g},{beta.real:.12g},{beta.imag:.12g},{W:.12g}")
            _log(f"Wigner t={t:g} us integral {res.integral:.6f}")
        Path(args.wigner_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    F50 = np.interp(min(50.0, args.t_max), times, trace.values["F"])
    _log(f"min F {trace.values['F'].min():.4f}; F({min(50.0, args.t_max):g} us) {F50:.4f}")
    return 0


def _purity_trace(circuit: Circuit, times, a: str, b: str) -> tuple:
    bundle = build(circuit)
    plus = np.zeros(circuit.cavity(a).fock_dim)
    plus[:2] = 1 / math.sqrt(2)
    plus_b = np.zeros(circuit.cavity(b).fock_dim)
    plus_b[:2] = 1 / math.sqrt(2)
    psi0 = product_state(bundle.space, {a: plus, b: plus_b})
    states = evolve(psi0, bundle, times)
    single = np.array([purity(partial_trace(s, [a])) for s in states])
    joint = np.array([purity(partial_trace(s, [a, b])) for s in states])
    return single, joint


def cmd_gate(args) -> int:
    circuit = load_circuit(args.config)
    if len(circuit.cavities) != 2:
        raise ConfigError("gate needs a two-cavity circuit")
    a, b = circuit.cavities[0].label, circuit.cavities[1].label
    off = circuit if args.keep_off else solve_cross_kerr_off(circuit, args.tunable)
    sched = plan_cphase_gate(off, args.tunable, args.shift)
    t_max = args.t_max if args.t_max is not None else 2 * sched.gate_time
    times = np.linspace(0.0, t_max, args.points)
    s_off, j_off = _purity_trace(sched.off_configuration, times, a, b)
    s_on, j_on = _purity_trace(sched.on_configuration, times, a, b)
    trace = TimeTrace(times, {"joint_off": j_off, "joint_on": j_on,
                              "single_off": s_off, "single_on": s_on})
    if args.csv:
        Path(args.csv).write_text(trace.to_csv(), encoding="utf-8")
    out = sched.to_dict()
    out["single_on_at_gate_time"] = float(np.interp(sched.gate_time, times, s_on)) \
        if sched.gate_time <= t_max else None
    out["min_single_off"] = float(s_off.min())
    _emit(_dumps(out), args.output)
    _log(f"gate time {sched.gate_time:.3f} us, X_on {sched.X_on:.4e} GHz")
    return 0


def cmd_array_design(args) -> int:
    try:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {args.spec}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.spec}: invalid JSON ({exc})") from None
    if not isinstance(spec, dict):
        raise ConfigError("array spec must be a JSON object")
    try:
        N = int(spec["N"])
        S, X = list(spec["S"]), list(spec["X"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"array spec needs N, S and X ({exc})") from None
    bounds = ArrayBounds(**spec.get("bounds", {}))
    known = ("omega", "coupling", "onsite_coupling", "chi", "eta", "fock_dim", "levels", "refine")
    extra = {k: spec[k] for k in known if k in spec}
    circuit, eff = design_array(N, S, X, bounds=bounds, workers=args.threads or 1, **extra)
    data = circuit_to_dict(circuit)
    data["design_report"] = {
        "targets": {"S": S, "X": X},
        "achieved": {"S": list(eff.S), "X": list(eff.X)},
        "residuals": eff.residuals,
        "effective_hamiltonian": eff.to_dict(),
    }
    _emit(_dumps(data), args.output)
    return 0


# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kerrforge", description=__doc__.split("\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=None,
                   help="cap on BLAS/worker threads (default: $KERRFORGE_THREADS)")
    p.add_argument("--json-errors", action="store_true", help="write errors to stderr as JSON")
    sub = p.add_subparsers(dest="command", required=True)

    def config_cmd(name, help_, fn, epilog=None):
        s = sub.add_parser(name, help=help_, epilog=epilog)
        s.add_argument("config", help="circuit JSON file")
        s.add_argument("-o", "--output", help="write JSON/CSV here instead of stdout")
        s.set_defaults(fn=fn)
        return s

    s = config_cmd("kerr-report", "self- and cross-Kerr by every method", cmd_kerr_report)
    s.add_argument("--n-max", type=int, default=3, help="highest photon number in the numeric fit")
    s.add_argument("--no-numeric", action="store_true", help="skip exact diagonalization")

    config_cmd("validate", "dispersive diagnostics", cmd_validate)

    s = config_cmd("cancel-self", "cancel the cavity self-Kerr with a tunable device", cmd_cancel_self)
    s.add_argument("--tunable", required=True, help="device label to place (added if absent)")
    s.add_argument("--cavity", help="cavity label (default: the first)")
    s.add_argument("--bounds", type=float, nargs=2, default=(-3.0, 3.0), metavar=("LO", "HI"),
                   help="allowed detuning w_cavity - w_device in GHz")
    s.add_argument("--n-max", type=int, default=3)
    s.add_argument("--no-verify", action="store_true", help="skip the numeric verification")

    s = config_cmd("store-state", "evolve a stored cavity state", cmd_store_state,
                   epilog=f"CSV columns: {STORE_COLUMNS}. Wigner CSV columns: {WIGNER_COLUMNS}.")
    s.add_argument("--state", required=True, help="coherent:ALPHA or cat:ALPHA:A")
    s.add_argument("--t-max", type=float, required=True, help="final time in microseconds")
    s.add_argument("--points", type=int, default=2000)
    s.add_argument("--cavity", help="cavity label (default: the first)")
    s.add_argument("--wigner-times", help="comma-separated snapshot times in microseconds")
    s.add_argument("--wigner-out", default="wigner.csv")
    s.add_argument("--wigner-extent", type=float, default=4.0)
    s.add_argument("--wigner-n", type=int, default=41)

    s = config_cmd("gate", "plan a cross-Kerr controlled-phase gate", cmd_gate,
                   epilog=f"CSV columns: {GATE_COLUMNS}.")
    s.add_argument("--tunable", required=True)
    s.add_argument("--shift", type=float, required=True, help="frequency shift of the tunable device (GHz)")
    s.add_argument("--keep-off", action="store_true",
                   help="use the config as the off configuration without re-solving")
    s.add_argument("--t-max", type=float, default=None, help="default: twice the gate time")
    s.add_argument("--points", type=int, default=2000)
    s.add_argument("--csv", help="purity trace CSV path")

    s = sub.add_parser("array-design", help="design a chain from target Kerr values")
    s.add_argument("spec", help="JSON with N, S, X and optional omega, coupling, "
                                "onsite_coupling, chi, eta, bounds, refine, fock_dim, levels")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_array_design)
    return p


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("KERRFORGE_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"KERRFORGE_THREADS={env!r} is not an integer") from None
    return None


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.threads = _threads(args)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be positive")
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                return args.fn(args)
        return args.fn(args)
    except KerrForgeError as exc:
        if args.json_errors:
            err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
            sys.stderr.write(json.dumps(err) + "\n")
        else:
            _log(f"error: {exc}")
        return exc.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
