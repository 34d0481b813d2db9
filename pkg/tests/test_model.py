import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwfloquet.catalog import belair_mackey_dq, builtin, quadratic_re_solution
from pwfloquet.errors import ValidationError
from pwfloquet.model import (delay_system, dump_solution, eval_solution, ingest_solution,
                             load_solution, sample_solution, validate)

XBAR0 = 0.5 + math.pi / 16  # explicit solution at gamma=4, t=0


def quad_kernel(t, theta, p):
    return p["gamma"] / 2 * (1 - 2 * quadratic_re_solution(t + theta, p["gamma"]))


def test_quadratic_re_system_validates():
    s = delay_system((1, 0), [1, 3], 4, 0, CXX=[None, quad_kernel], par={"gamma": 4.0})
    assert s.p == 2 and s.tau == 3.0 and s.dims == (1, 0)
    assert s.C["XX"][0] is None and s.A["YY"] is None and s.B["XX"] == [None, None]


@pytest.mark.parametrize("kwargs, match", [
    (dict(dims=(0, 0), delays=[1], omega=1), "both zero"),
    (dict(dims=(1, 0), delays=[3, 1], omega=1), "unsorted"),
    (dict(dims=(1, 0), delays=[1, 1], omega=1), "unsorted"),
    (dict(dims=(1, 0), delays=[-1], omega=1), "positive"),
    (dict(dims=(1, 0), delays=[1], omega=0), "omega"),
    (dict(dims=(1, 0), delays=[1, 2], omega=1, BXX=[None]), "entries"),
    (dict(dims=(1, 0), delays=[1], omega=1, AYY=lambda t, p: 0), "dimension is zero"),
    (dict(dims=(1, 0), delays=[1], omega=1, QXX=None), "unknown coefficient"),
    (dict(dims=(1, 0), delays=[1], omega=1, t=[0, 1], L=2), "either"),
])
def test_validation_errors(kwargs, match):
    with pytest.raises(ValidationError, match=match):
        delay_system(**kwargs)


def test_validate_idempotent():
    s = builtin("hayes", {"a": 0.2, "b": -1})
    again = validate(s)
    twice = validate(again)
    for f in ("dims", "delays", "omega", "s", "A", "B", "C", "params", "t", "L"):
        assert getattr(twice, f) == getattr(again, f) == getattr(s, f)


def test_with_params_keeps_structure():
    s = builtin("hayes", {"a": 0.2, "b": -1})
    s2 = s.with_params({"a": 1.0, "b": 0.0, "tau": 1.0, "omega": 1.0})
    assert s2.params["a"] == 1.0 and s2.delays == s.delays


# -- periodic solutions ------------------------------------------------------


def test_sampled_quadratic_solution_at_zero():
    sol = sample_solution(lambda t: quadratic_re_solution(t, 4.0), 4.0, L=4, degree=10)
    assert eval_solution(sol, 1, 0.0) == pytest.approx(0.696349540849362, abs=1e-15)
    assert sol(1, 4.0) == sol(1, 0.0)


def test_sampled_sine_periodic_evaluation():
    sol = sample_solution(lambda t: math.sin(math.pi * t / 2), 4.0, L=2, degree=12)
    assert abs(sol(1, 5.0) - 1.0) < 1e-10
    assert abs(sol(1, -3.0) - 1.0) < 1e-10


def test_component_out_of_range():
    sol = sample_solution(lambda t: 1.0, 2.0, degree=2)
    with pytest.raises(ValidationError):
        eval_solution(sol, 2, 0.0)
    with pytest.raises(ValidationError):
        eval_solution(sol, 0, 0.0)


def test_integrate_matches_antiderivative():
    sol = sample_solution(lambda t: 1 + math.sin(math.pi * t / 2), 4.0, L=4, degree=14)
    exact = lambda a, b: (b - a) - 2 / math.pi * (math.cos(math.pi * b / 2) - math.cos(math.pi * a / 2))
    for a, b in [(0, 4), (-3, 1.7), (2.5, 9.1), (1, 0.5)]:
        assert sol.integrate(1, a, b) == pytest.approx(exact(a, b), abs=1e-10)


def fixture_payload():
    ns = (1 - np.cos(np.arange(3) * np.pi / 2)) / 2
    vals = [[list(2 * ns)], [list(2 + 2 * ns)]]  # f(t) = t on [0, 4], not periodic-continuous
    return {"components": 1, "period": 4.0, "mesh": [0, 2, 4], "degree": 2,
            "node_family": "cheb-extrema", "values": vals, "continuous": [False]}


def test_ingest_reproduces_nodes():
    sol = ingest_solution(json.dumps(fixture_payload()))
    for t in (0.0, 1.0, 2.0, 3.0, 3.5):
        assert sol(1, t) == pytest.approx(t, abs=1e-14)


def test_ingest_errors():
    bad = fixture_payload()
    bad["mesh"] = [0, 2, 3]
    with pytest.raises(ValidationError, match="period"):
        ingest_solution(bad)
    with pytest.raises(ValidationError, match="malformed"):
        ingest_solution("{not json")
    extra = fixture_payload()
    extra["colour"] = "red"
    with pytest.raises(ValidationError, match="unknown keys"):
        ingest_solution(extra)
    short = fixture_payload()
    short["values"] = short["values"][:1]
    with pytest.raises(ValidationError, match="shape"):
        ingest_solution(short)


def test_ingest_warns_on_jump():
    payload = fixture_payload()
    payload["continuous"] = [True]
    with pytest.warns(UserWarning, match="jumps"):
        ingest_solution(payload)


def test_dump_round_trip(tmp_path):
    sol = sample_solution([lambda t: math.cos(t), lambda t: math.sin(2 * t)], 2 * math.pi, L=3,
                          degree=9)
    path = tmp_path / "sol.json"
    path.write_text(dump_solution(sol))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = load_solution(path)
    assert np.array_equal(back.values, sol.values)
    assert np.array_equal(back.mesh, sol.mesh) and back.period == sol.period


# -- catalog -----------------------------------------------------------------


def test_builtin_hayes_shape():
    s = builtin("hayes", {"a": 0, "b": 0})
    assert s.dims == (0, 1) and s.delays == (1.0,) and s.omega == 1.0
    assert s.A["YY"](0.3, s.params) == 0 and s.B["YY"][0](0.3, s.params) == 0


def test_builtin_quadratic_re_kernel_value():
    s = builtin("quadratic-re", {"gamma": 4})
    assert s.dims == (1, 0) and s.delays == (1.0, 3.0) and s.omega == 4.0
    assert s.C["XX"][0] is None
    assert s.C["XX"][1](0.0, -2.0, s.params) == pytest.approx(-math.pi / 4, abs=1e-14)


def test_builtin_quadratic_re_gamma_zero():
    s = builtin("quadratic-re", {"gamma": 0})
    assert s.C["XX"][1](1.0, -2.0, s.params) == 0.0


def test_builtin_fixture_required():
    for name in ("belair-mackey", "logistic-daphnia"):
        with pytest.raises(ValidationError, match="solution fixture required"):
            builtin(name)
    with pytest.raises(ValidationError, match="unknown builtin"):
        builtin("lorenz")


def test_belair_mackey_derivative_against_difference_quotient():
    q0, n, th = 27000.0, 2.133, 0.04
    q = lambda x: q0 * th**n * x / (th**n + x**n)
    for x in (0.01, 0.04, 0.3):
        h = 1e-6 * x
        fd = (q(x + h) - q(x - h)) / (2 * h)
        assert belair_mackey_dq(x, q0, n, th) == pytest.approx(fd, rel=1e-7)


def test_builtin_fixture_mesh_used():
    W = 18.208035651940627
    sol = sample_solution(lambda t: 1 + 0.5 * math.sin(2 * math.pi * t / W), W, L=3, degree=6)
    s = builtin("belair-mackey", None, sol)
    assert s.omega == W and s.delays == (9.0, 19.0) and s.dims == (0, 1)
    assert np.allclose(s.t, sol.mesh)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(-50, 50), L=st.integers(1, 5))
def test_solution_is_periodic(t, L):
    sol = sample_solution(lambda u: quadratic_re_solution(u, 4.0), 4.0, L=L, degree=8)
    assert abs(sol(1, t) - sol(1, t + 4.0)) <= 1e-12
