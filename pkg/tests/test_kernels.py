import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ftopt import kernels
from ftopt.protocol import trim

py = kernels.python_backend
cc = kernels.compiled_backend
needs_cc = pytest.mark.skipif(cc is None, reason="compiled kernels are not built")

# small value alphabets force plenty of ties
tied = st.sampled_from([-2.0, -0.5, 0.0, 0.5, 1.0, 3.0, 1e6])
values = st.one_of(tied, st.floats(-1e3, 1e3))


def matrices(draw, n):
    rows = draw(st.integers(1, 5))
    return (draw(hnp.arrays(np.float64, (rows, n), elements=values)),
            draw(hnp.arrays(np.float64, (rows, n), elements=values)))


@st.composite
def trimmed_inputs(draw):
    f = draw(st.integers(0, 3))
    n = draw(st.integers(2 * f + 1, 2 * f + 6))
    W, G = matrices(draw, n)
    return W, G, f, draw(st.floats(0, 2))


@needs_cc
@settings(max_examples=200, deadline=None)
@given(trimmed_inputs())
def test_trimmed_round_bit_identical(args):
    a, b = py.trimmed_round(*args), cc.trimmed_round(*args)
    for x, y in zip(a, b):
        assert np.array_equal(np.asarray(x), np.asarray(y))


@settings(max_examples=150, deadline=None)
@given(trimmed_inputs())
def test_trimmed_round_matches_trim(args):
    W, G, f, lam = args
    x, wb, gm, kw, kg = kernels.trimmed_round(W, G, f, lam)
    n = W.shape[1]
    for r in range(W.shape[0]):
        sw = trim(list(enumerate(W[r])), f)
        sg = trim(list(enumerate(G[r])), f)
        assert [i for i, _ in sw] == list(kw[r])
        assert [i for i, _ in sg] == list(kg[r])
        assert wb[r] == pytest.approx(sum(v for _, v in sw) / (n - 2 * f), rel=1e-12, abs=1e-9)
        assert gm[r] == 0.5 * (sg[0][1] + sg[-1][1])
        assert x[r] == wb[r] - lam * gm[r]


@st.composite
def envelope_inputs(draw):
    n = draw(st.integers(1, 8))
    G = draw(hnp.arrays(np.float64, (draw(st.integers(1, 5)), n), elements=values))
    gamma = draw(st.integers(0, n))
    beta = draw(st.floats(0, 1.0 / gamma if gamma else 1.0))
    return G, beta, gamma


@needs_cc
@settings(max_examples=200, deadline=None)
@given(envelope_inputs())
def test_envelope_bounds_bit_identical(args):
    for x, y in zip(py.envelope_bounds(*args), cc.envelope_bounds(*args)):
        assert np.array_equal(x, y)


@settings(max_examples=150, deadline=None)
@given(envelope_inputs())
def test_envelope_bounds_closed_form(args):
    G, beta, gamma = args
    lo, hi = kernels.envelope_bounds(G, beta, gamma)
    for r, g in enumerate(G):
        desc = sorted(g, reverse=True)
        top = beta * sum(desc[:gamma]) + (1 - gamma * beta) * desc[0]
        asc = sorted(g)
        bot = beta * sum(asc[:gamma]) + (1 - gamma * beta) * asc[0]
        assert hi[r] == pytest.approx(top, rel=1e-12, abs=1e-9)
        assert lo[r] == pytest.approx(bot, rel=1e-12, abs=1e-9)


@needs_cc
@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    hnp.arrays(np.float64, n, elements=values), hnp.arrays(np.float64, n, elements=values),
    st.floats(0, 3))))
def test_displaced_mean_bit_identical(args):
    w, g, lam = args
    assert py.displaced_mean(w, g, lam) == cc.displaced_mean(w, g, lam)
    total = 0.0
    for a, b in zip(w, g):
        total += a - lam * b
    assert py.displaced_mean(w, g, lam) == total / len(w)


def test_backend_selection_reported():
    assert kernels.BACKEND in ("compiled", "python")
    if cc is not None:
        assert kernels.BACKEND == "compiled" or kernels.trimmed_round is py.trimmed_round


def test_pure_python_env_forces_fallback():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "import ftopt.kernels as k; print(k.BACKEND)"],
                         env={"FTOPT_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
