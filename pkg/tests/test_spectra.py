import csv
import io
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import paired_relative_error
from pwfloquet.catalog import builtin
from pwfloquet.discretize import MethodOptions, MonodromyMatrices, assemble
from pwfloquet.model import delay_system
from pwfloquet.spectra import (MultiplierSet, multipliers, multipliers_generalized,
                               multipliers_standard, sort_multipliers, to_csv, trivial_index)


def fake(T):
    """Matrices whose standard path sees exactly T."""
    n = T.shape[0]
    return MonodromyMatrices(T, np.zeros((n, 1)), np.zeros((1, n)), np.zeros((1, 1)), T,
                             (0, 1), None, None, 1.0, 0.0)


def test_identity():
    ms = multipliers_standard(fake(np.eye(3)))
    assert np.allclose(ms.multipliers, [1, 1, 1])


def test_sorting_and_ties():
    mu = sort_multipliers([0.5, -1, 1j, -1j, 1, 2, -0.5])
    assert list(mu) == [2, 1, 1j, -1j, -1, 0.5, -0.5]


def test_quadratic_re_dominant_values():
    ms = multipliers_standard(assemble(builtin("quadratic-re", {"gamma": 4})))
    ref = [1.000000179842839, -0.140831131942336, -0.021890537332049 + 0.086918211021300j,
           -0.021890537332049 - 0.086918211021300j]
    assert np.max(np.abs(ms.dominant(4) - ref)) < 1e-12
    assert ms.multipliers[trivial_index(ms)] == pytest.approx(1.000000179842839, abs=1e-14)


def test_quadratic_re_above_first_bifurcation():
    ms = multipliers_standard(assemble(builtin("quadratic-re", {"gamma": 4.2})))
    assert np.max(np.abs(ms.dominant(3) - [1.000000266174309, -0.631694832535750,
                                           0.103689337250279])) < 1e-12


def test_generalized_zero_system_contains_one():
    ms = multipliers_generalized(assemble(delay_system((0, 1), [1.0], 1.0), MethodOptions(M=4)))
    assert np.min(np.abs(ms.multipliers - 1)) < 1e-14
    assert len(ms) == 5


def test_generalized_hayes_ode():
    mm = assemble(builtin("hayes", {"a": 1, "b": 0}), MethodOptions(M=12))
    g = multipliers_generalized(mm).multipliers
    s = multipliers_standard(mm).multipliers
    assert abs(g[0] - math.e) < 1e-10 and abs(g[0] - s[0]) < 1e-10


@pytest.mark.parametrize("system", [
    builtin("quadratic-re", {"gamma": 4}),
    builtin("quadratic-re", {"gamma": 4.2}),
    builtin("hayes", {"a": 0.3, "b": -1.2}),
])
def test_standard_and_generalized_agree(system):
    mm = assemble(system, MethodOptions(M=10))
    a = multipliers_standard(mm).multipliers
    b = multipliers_generalized(mm).multipliers
    a, b = a[np.abs(a) > 1e-6], b[np.abs(b) > 1e-6]
    assert paired_relative_error(a, b) < 1e-8


@pytest.mark.parametrize("system", [
    builtin("quadratic-re", {"gamma": 3.9}, L=3),
    builtin("hayes", {"a": -0.4, "b": 1.3, "tau": 1.6}),
    delay_system((1, 1), [0.5, 1.2], 1.0, AYY=lambda t, p: math.cos(2 * math.pi * t),
                 BXY=[lambda t, p: 0.3, None], CYX=[None, lambda t, th, p: 0.2 * th]),
])
def test_standard_and_generalized_agree_within_conditioning(system):
    # tiny multipliers of non-normal matrices carry a rounding error of about
    # eps * |T| / s_i (s_i the eigenvalue condition), which can exceed 1e-8 relative
    mm = assemble(system, MethodOptions(M=10))
    w, vl, vr = scipy.linalg.eig(mm.T, left=True, right=True)
    s = np.abs(np.sum(vl.conj() * vr, axis=0)) / (np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0))
    g = multipliers_generalized(mm).multipliers
    norm = np.linalg.norm(mm.T, 2)
    for mu, si in zip(w, s):
        if abs(mu) > 1e-6:
            allowed = max(1e-8, 10 * np.finfo(float).eps * norm / si / abs(mu))
            assert np.min(np.abs(g - mu)) / abs(mu) < allowed


def test_trivial_index():
    assert trivial_index(np.array([2, 0.99, -1])) == 1
    assert trivial_index(np.array([1.0])) == 0
    with pytest.raises(ValueError):
        trivial_index(np.array([]))


def test_numerically_zero_flag():
    ms = MultiplierSet(sort_multipliers([1, 1e-15, 0.5]), "standard")
    assert list(ms.numerically_zero) == [False, False, True]


def test_unknown_method():
    with pytest.raises(ValueError):
        multipliers(fake(np.eye(2)), "krylov")


def test_csv_round_trip():
    ms = multipliers_standard(assemble(builtin("quadratic-re")))
    rows = list(csv.DictReader(io.StringIO(to_csv(ms))))
    assert list(rows[0]) == ["re", "im", "abs"]
    back = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    assert np.array_equal(back, ms.multipliers)


@settings(max_examples=60, deadline=None)
@given(T=arrays(float, (6, 6), elements=st.floats(-3, 3)))
def test_conjugate_closed_and_sorted(T):
    mu = multipliers_standard(fake(T)).multipliers
    mags = np.abs(mu)
    assert np.all(np.diff(mags) <= 1e-12 * max(1, mags.max()))
    for z in mu[np.abs(mu.imag) > 1e-12]:
        assert np.min(np.abs(mu - np.conj(z))) <= 1e-12 * max(1, abs(z))
