import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratchet_levy.expconv import expconv


def conv_mp(nodes, x):
    """Convolution of exponentials by nested mpmath quadrature."""
    nodes = [mp.mpf(n) for n in nodes]
    if len(nodes) == 1:
        return mp.exp(nodes[0] * x)
    head, rest = nodes[0], nodes[1:]
    return mp.quad(lambda y: mp.exp(head * (x - y)) * conv_mp(rest, y), [0, x])


@pytest.mark.parametrize(
    "nodes",
    [(0.3,), (0.3, -1.2), (0.02, -0.5, 0.0), (1.1, 1.1), (0.0, 0.0), (0.4, 0.4 + 1e-9), (-2.0, 0.5, 0.5)],
)
@pytest.mark.parametrize("x", [0.0, 0.05, 1.0, 7.5])
def test_against_nested_quadrature(nodes, x):
    ref = float(conv_mp(nodes, mp.mpf(x))) if len(nodes) <= 2 or x < 5 else None
    if ref is None:
        pytest.skip("nested quadrature too slow")
    got = expconv(nodes, x)
    assert got == pytest.approx(ref, rel=1e-11, abs=1e-14)


def test_negative_argument_is_zero():
    assert expconv((0.1, 0.2), -1.0) == 0.0
    np.testing.assert_array_equal(expconv((0.1, 0.2), np.array([-1.0, -0.1])), [0.0, 0.0])


def test_vectorised_matches_scalar():
    xs = np.array([0.0, 0.01, 0.5, 3.0, 20.0])
    nodes = (0.02, 0.0, -0.6)
    np.testing.assert_allclose(expconv(nodes, xs), [expconv(nodes, float(v)) for v in xs], rtol=1e-14)


def test_repeated_node_closed_form():
    # e^{r.} * e^{r.} = x e^{r x}
    for x in (0.3, 4.0):
        assert expconv((0.7, 0.7), x) == pytest.approx(x * math.exp(0.7 * x), rel=1e-13)
        assert expconv((0.0, 0.0, 0.0), x) == pytest.approx(x * x / 2, rel=1e-13)


@settings(max_examples=80, deadline=None)
@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    x=st.floats(0.0, 10.0),
)
def test_two_node_formula_continuous_across_branch(a, b, x):
    # partial fractions where the nodes are apart, expm where they are close:
    # both must reproduce the exact divided difference
    if abs(a - b) > 1e-6:
        ref = (math.exp(a * x) - math.exp(b * x)) / (a - b)
    else:
        ref = x * math.exp(0.5 * (a + b) * x)
    assert expconv((a, b), x) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def expm_mp(nodes, x):
    n = len(nodes)
    with mp.workdps(60):
        mat = mp.zeros(n, n)
        for i, a in enumerate(nodes):
            mat[i, i] = mp.mpf(a) * x
            if i + 1 < n:
                mat[i, i + 1] = mp.mpf(x)
        return float(mp.expm(mat)[0, n - 1])


@settings(max_examples=150, deadline=None)
@given(
    base=st.lists(st.floats(-3, 1), min_size=2, max_size=4),
    jitter=st.lists(st.sampled_from([0.0, 1e-12, 1e-9, 1e-6, 1e-3, 0.05]), min_size=4, max_size=4),
    x=st.floats(0.001, 12.0),
)
def test_clustered_nodes_against_mp_expm(base, jitter, x):
    # pull nodes towards the first one to provoke near-coincidence
    nodes = tuple(base[0] + j if k else base[0] for k, j in enumerate(jitter[: len(base)]))
    ref = expm_mp(nodes, x)
    assert expconv(nodes, x) == pytest.approx(ref, rel=1e-11, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(nodes=st.lists(st.floats(-3, 1), min_size=2, max_size=4), x=st.floats(0.001, 12.0))
def test_generic_nodes_against_mp_expm(nodes, x):
    ref = expm_mp(tuple(nodes), x)
    scale = max(abs(ref), 1e-12 * math.exp(max(nodes) * x) * x ** (len(nodes) - 1))
    assert abs(expconv(tuple(nodes), x) - ref) <= 1e-10 * scale
