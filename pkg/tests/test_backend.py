import numpy as np
import pytest

from symrfm import _backend

needs_compiled = pytest.mark.skipif(_backend.compiled_kernels is None, reason="compiled kernels not built")


@pytest.fixture(scope="module")
def case():
    rng = np.random.default_rng(0)
    d, n1, n2 = 40, 300, 200
    A = rng.normal(size=(d, d))
    M = np.ascontiguousarray(A @ A.T / d)
    idx = lambda n: (rng.integers(0, 20, n).astype(np.intp), rng.integers(20, 40, n).astype(np.intp))
    return M, idx(n1), idx(n2)


@needs_compiled
@pytest.mark.parametrize("name", ["pair_gram", "pair_sqnorm", "pair_gaussian", "pair_quadratic"])
def test_backends_agree(case, name):
    M, (a1, b1), (a2, b2) = case
    if name == "pair_sqnorm":
        args = (M, a1, b1)
    else:
        args = (M, a1, b1, a2, b2) + ((2.5,) if name == "pair_gaussian" else ())
    c = getattr(_backend.compiled_kernels, name)(*args)
    p = getattr(_backend.python_kernels, name)(*args)
    np.testing.assert_allclose(c, p, rtol=1e-14, atol=1e-15)


def test_backend_selected():
    assert _backend.BACKEND in ("cython", "python")


def test_pure_python_switch():
    import subprocess, sys, os
    env = dict(os.environ, SYMRFM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from symrfm import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == "python"
