import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from saddlescape.errors import SpectralFailureError
from saddlescape.mesh import build_interval_mesh, build_mesh, build_square_mesh
from saddlescape.model import ProblemModel, get_model
from saddlescape.spectral import SpectralReport, _lower_bound, hessian_pencil, smallest_eigs


def p1_eigenvalues(M, k):
    """Closed-form generalized eigenvalues of the 1D P1 Dirichlet pencil."""
    h = np.pi / M
    j = np.arange(1, k + 1)
    return 6.0 / h**2 * (1 - np.cos(j * h)) / (2 + np.cos(j * h))


def _zero_pencil(dim, M):
    m = build_mesh(dim, M)
    return hessian_pencil(np.zeros(m.n_interior), m, get_model("zero"))


@pytest.mark.parametrize("M", [10, 40, 120])
def test_heat_pencil_closed_form(M):
    rep = smallest_eigs(*_zero_pencil(1, M), k=3)
    np.testing.assert_allclose(rep.eigenvalues, p1_eigenvalues(M, 3), rtol=1e-11)
    assert rep.index == 0


def test_heat_pencil_rate_two():
    err = np.array([np.abs(smallest_eigs(*_zero_pencil(1, M), k=3).eigenvalues - [1, 4, 9]) for M in (50, 100, 200)])
    r = np.log2(err[:-1] / err[1:])
    assert np.all(np.abs(r - 2.0) <= 0.1), r


def test_ground_eigenvalue():
    assert smallest_eigs(*_zero_pencil(1, 200), k=1).eigenvalues[0] == pytest.approx(1.0, abs=1e-4)


def test_heat_pencil_square():
    vals = smallest_eigs(*_zero_pencil(2, 40), k=3).eigenvalues
    np.testing.assert_allclose(vals, [2, 5, 5], rtol=2e-2)


@given(c=st.floats(-50, 50))
def test_constant_derivative_shifts(c):
    m = build_interval_mesh(30)
    lin = ProblemModel("lin", lambda s: c * s, lambda s: c + 0.0 * s, "c u")
    base = smallest_eigs(*_zero_pencil(1, 30), k=3).eigenvalues
    shifted = smallest_eigs(*hessian_pencil(np.zeros(m.n_interior), m, lin), k=3).eigenvalues
    np.testing.assert_allclose(shifted, base - c, atol=1e-8)


@pytest.mark.parametrize("dim,M", [(1, 40), (2, 12)])
def test_dense_matches_shift_invert(dim, M, rng):
    m = build_mesh(dim, M)
    U = 3 * np.sin(m.interior_nodes).prod(axis=1) + 0.1 * rng.normal(size=m.n_interior)
    A, Mm = hessian_pencil(U, m, get_model("quartic"))
    d = smallest_eigs(A, Mm, k=3, method="dense")
    s = smallest_eigs(A, Mm, k=3, method="shift-invert")
    np.testing.assert_allclose(s.eigenvalues, d.eigenvalues, atol=1e-8)
    assert d.method == "dense" and s.method == "shift-invert"
    assert np.all(d.residuals <= 1e-8) and np.all(s.residuals <= 1e-8)


@given(dim=st.sampled_from([1, 2]), M=st.integers(3, 12), amp=st.floats(0, 4), seed=st.integers(0, 2**31))
def test_shift_lies_below_the_spectrum(dim, M, amp, seed):
    m = build_mesh(dim, M)
    U = amp * np.random.default_rng(seed).uniform(-1, 1, m.n_interior)
    A, Mm = hessian_pencil(U, m, get_model("quartic"))
    lowest = smallest_eigs(A, Mm, k=1, method="dense").eigenvalues[0]
    assert _lower_bound(sp.csc_array(A), sp.csc_array(Mm)) <= lowest + 1e-9


def test_sorted_and_index():
    rep = SpectralReport(np.array([-5.0, -5e-4, 2.0]))
    assert rep.index == 1
    assert rep.to_dict()["index"] == 1


def test_non_convergence_is_reported(monkeypatch):
    import scipy.sparse.linalg as spla

    from saddlescape import spectral

    def stuck(*args, **kw):
        raise spla.ArpackNoConvergence("stuck", np.array([1.0]), np.ones((2999, 1)))

    monkeypatch.setattr(spectral.spla, "eigsh", stuck)
    with pytest.raises(SpectralFailureError) as info:
        smallest_eigs(*_zero_pencil(1, 3000), k=2, method="shift-invert")
    assert info.value.residuals is not None


def test_residual_bound_is_enforced(monkeypatch):
    from saddlescape import spectral

    monkeypatch.setattr(spectral, "RESIDUAL_TOL", 0.0)
    with pytest.raises(SpectralFailureError):
        smallest_eigs(*_zero_pencil(1, 50), k=2)


def test_bad_arguments():
    A, Mm = _zero_pencil(1, 10)
    with pytest.raises(ValueError):
        smallest_eigs(A, Mm, k=0)
    with pytest.raises(ValueError):
        smallest_eigs(A, Mm, k=2, method="lobpcg")
    with pytest.raises(ValueError):
        hessian_pencil(np.full(9, np.nan), build_interval_mesh(10), get_model("zero"))


def test_boundary_weight_uses_derivative_at_zero():
    # boundary nodes carry f'(0) = c, so the 2D pencil is shifted by exactly -c
    c = 7.0
    m = build_square_mesh(8)
    lin = ProblemModel("lin", lambda s: c * s, lambda s: c + 0.0 * s, "c u")
    base = smallest_eigs(*_zero_pencil(2, 8), k=2).eigenvalues
    np.testing.assert_allclose(smallest_eigs(*hessian_pencil(np.zeros(m.n_interior), m, lin), k=2).eigenvalues,
                               base - c, atol=1e-9)
