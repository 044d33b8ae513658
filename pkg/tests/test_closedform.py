import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grids import PRESETS, kerr_mismatch, random_params
from kerrforge.circuit import CavitySpec, Circuit, Coupling, Multilevel
from kerrforge.closedform import (
    closed_form_for_circuit,
    kerr_closed_form,
    preset_circuit,
    s_duffing,
    s_two_level,
    x_duffing,
    x_two_level,
)
from kerrforge.errors import ConfigError, PoleProximity


def test_mirrored_duffing_pair_cancels():
    rep = kerr_closed_form("1C2D", g=[0.1, 0.1], delta=[1.0, -1.0], chi=[-0.3, 0.3])
    per = rep.details["per_device"]
    assert per[0] == pytest.approx(-1.3043e-5, rel=1e-4)
    assert per[1] == pytest.approx(1.3043e-5, rel=1e-4)
    assert rep.S("c") == 0


def test_symmetric_two_device_gate_has_no_cross_kerr():
    g = [[0.08, 0.0876], [0.0876, 0.08]]
    rep = kerr_closed_form("2C2D", g=g, delta=[[1.0, -1.2], [1.2, -1.0]], chi=[-0.3, 0.3])
    assert rep.X("c1", "c2") == 0


def test_two_level_cross_kerr_vanishes_for_opposite_detunings():
    assert kerr_closed_form("2C1Q", g=[0.05, 0.08], delta=[1.3, -1.3]).X("c1", "c2") == 0


def test_array_non_adjacent_zero(rng):
    p = random_params("array", rng)
    rep = kerr_closed_form("array", **p)
    assert rep.X("c1", "c3") == 0
    assert rep.X("c3", "c1") == 0


@pytest.mark.parametrize("fn,args", [
    (s_duffing, (0.1, -0.15, -0.3)),
    (s_two_level, (0.1, 0.0)),
    (x_duffing, (0.1, 0.1, 0.5, -0.2, 0.3)),
    (x_two_level, (0.1, 0.1, 0.0, 1.0)),
])
def test_poles_raise(fn, args):
    with pytest.raises(PoleProximity):
        fn(*args)


@settings(max_examples=40, deadline=None)
@given(g=st.floats(0.01, 0.1), d=st.floats(0.5, 2.0), sign=st.sampled_from([-1, 1]))
def test_two_level_limit(g, d, sign):
    d *= sign
    assert s_duffing(g, d, 1e9) == pytest.approx(s_two_level(g, d), rel=1e-7)
    assert x_duffing(g, 0.7 * g, d, 1.3 * d, -1e9) == pytest.approx(x_two_level(g, 0.7 * g, d, 1.3 * d), rel=1e-7)


@pytest.mark.parametrize("preset", PRESETS)
def test_circuit_form_matches_preset_form(preset, rng):
    for _ in range(10):
        p = random_params(preset, rng)
        c = preset_circuit(preset, omega_c=9.0, **p)
        assert kerr_mismatch(kerr_closed_form(preset, **p), closed_form_for_circuit(c), c) < 1e-13


def test_cross_kerr_symmetric_access():
    rep = kerr_closed_form("2C1Q", g=[0.05, 0.08], delta=[1.3, -0.7])
    assert rep.X("c1", "c2") == rep.X("c2", "c1")


def test_multilevel_has_no_closed_form():
    c = Circuit([CavitySpec("c", 9.0, 4)], [Multilevel("f", (0.0, 5.0, 9.0))], [Coupling("c", "f", 0.02)])
    with pytest.raises(ConfigError):
        closed_form_for_circuit(c)


def test_preset_errors():
    with pytest.raises(ConfigError):
        kerr_closed_form("9C9Q")
    with pytest.raises(ConfigError):
        preset_circuit("2C2D", g=np.full((2, 2), 0.05), delta=[[1, 2], [3, 1]], chi=[0.3, -0.3])
    with pytest.raises(ConfigError):
        kerr_closed_form("1C2Q", g=[0.1], delta=[1.0, 2.0])


def test_loops_drop_linear_shifts():
    c = preset_circuit("2C2D", omega_c=9.0, g=[[0.08, 0.06], [0.05, 0.07]],
                       delta=[[1.0, -1.2], [1.3, -0.9]], chi=[-0.3, 0.25])
    assert closed_form_for_circuit(c).linear is None
    single = preset_circuit("2C1T", omega_c=9.0, g=[0.05, 0.07], delta=[1.1, 1.6], chi=-0.3)
    assert closed_form_for_circuit(single).linear is not None
