import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from lindblad_thermo.lindblad_core import ModelError, RK4Propagator, apply_generator
from lindblad_thermo.models import (
    TwoBathTwoNSpec,
    TwoNModelSpec,
    TwoQubitSpec,
    build_2n_model,
    build_two_bath_2n,
    build_two_qubit_model,
)
from lindblad_thermo.serialization import (
    dump_model,
    format_complex,
    load_model,
    parse_complex,
    parse_key_values,
    read_trajectory_csv,
    trajectory_csv,
    trajectory_header,
)

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_complex_round_trip(re, im):
    z = complex(re, im)
    text = format_complex(z)
    assert text.endswith("i")
    assert parse_complex(text) == z


def test_complex_format_examples():
    assert format_complex(1.5 - 2j) == "1.5-2.0i"
    assert format_complex(1e-20 + 3e5j) == "1e-20+300000.0i"
    assert parse_complex(" -0.25+1i ") == complex(-0.25, 1)
    with pytest.raises(ValueError):
        parse_complex("one")


@pytest.mark.parametrize("model", [
    build_2n_model(TwoNModelSpec(3, omega0=1.7, gamma_down=0.3, beta=0.4))[0],
    build_two_qubit_model(TwoQubitSpec())[0],
    build_two_bath_2n(TwoBathTwoNSpec(2, variant="chemical", mu_r=0.2)).model,
])
def test_model_round_trip(model, rng):
    back = load_model(dump_model(model))
    assert back.hbar == model.hbar and back.dim == model.dim
    assert [(b.label, b.beta, b.mu) for b in back.baths] == [(b.label, b.beta, b.mu) for b in model.baths]
    rho = random_state(rng, model.dim)
    assert np.array_equal(apply_generator(back, rho), apply_generator(model, rho))


def test_model_format_is_sparse_and_commented():
    text = dump_model(build_2n_model(TwoNModelSpec(2))[0])
    assert "H[0,0]" not in text and "H[2,2] = 1.0+0.0i" in text
    assert load_model("# a comment\n" + text).dim == 4


@pytest.mark.parametrize("text, msg", [
    ("hbar = 1\n", "dim"),
    ("dim = 2\nbogus = 1\n", "unknown key"),
    ("dim = 2\nH[2,0] = 1+0i\n", "out of range"),
    ("dim = 2\nbath = B\n", "no beta"),
    ("dim = 2\nbath = B\nbath.B.beta = 1\nbath.B.channel.0.omega = 1\n", "lacks"),
    ("dim = 2\nno equals sign\n", "expected"),
])
def test_load_model_errors(text, msg):
    with pytest.raises(ModelError, match=msg):
        load_model(text)


def test_key_values():
    kv = parse_key_values("# header\nscenario = fig3\n tau_c = 0.5  # inline\n\ntau_c = 0.7\n")
    assert kv == {"scenario": "fig3", "tau_c": "0.7"}
    with pytest.raises(ValueError):
        parse_key_values("novalue\n")


def test_trajectory_csv_round_trip():
    model, _ = build_two_qubit_model(TwoQubitSpec())
    states = RK4Propagator(model, 0.01).run(np.diag([1.0, 0, 0, 0]).astype(complex), 5)
    times = np.arange(6) * 0.01
    text = trajectory_csv(times, states)
    assert text.splitlines()[0].startswith("t,re_0_0,im_0_0,re_0_1")
    t, back = read_trajectory_csv(text)
    assert np.array_equal(t, times) and np.array_equal(back, states)
    assert len(trajectory_header(4)) == 33
