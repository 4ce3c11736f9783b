import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ddlpv.errors import DimensionError
from ddlpv.sdp import (ConicProgram, MatrixVariable, available_adapters, bmat, dump_program,
                       kron_eye, load_program, smat, solve, svec, trace)
from ddlpv.sdp.vec import svec_dim

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def _sym(a):
    return 0.5 * (a + a.T)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: arrays(float, (n, n), elements=finite)))
def test_svec_round_trip(a):
    S = _sym(a)
    assert svec(S).size == svec_dim(S.shape[0])
    np.testing.assert_allclose(smat(svec(S)), S, atol=1e-12 * max(1, np.abs(S).max()))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(arrays(float, (n, n), elements=finite),
                                                   arrays(float, (n, n), elements=finite))))
def test_svec_preserves_inner_product(pair):
    A, B = (_sym(x) for x in pair)
    exact = float(np.trace(A @ B))
    assert svec(A) @ svec(B) == pytest.approx(exact, rel=1e-9, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_expression_linearity(r, c, seed):
    rng = np.random.default_rng(seed)
    X = MatrixVariable((r, c), name="X")
    L = rng.standard_normal((3, r))
    R = rng.standard_normal((c, 2))
    C = rng.standard_normal((3, 2))
    e = L @ X @ R + C
    V1, V2 = rng.standard_normal((r, c)), rng.standard_normal((r, c))
    a, b = rng.standard_normal(2)
    combined = e.evaluate({X: a * V1 + b * V2})
    expected = a * e.evaluate({X: V1}) + b * e.evaluate({X: V2}) - (a + b - 1) * C
    np.testing.assert_allclose(combined, expected, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_compile_matches_evaluate(n, seed):
    rng = np.random.default_rng(seed)
    S = MatrixVariable((n, n), symmetric=True, name="S")
    Y = MatrixVariable((2, n), name="Y")
    M = rng.standard_normal((n, n))
    e = bmat([[M @ S + S @ M.T, Y.T], [Y, np.eye(2)]])
    offsets, total = {S.id: 0, Y.id: S.size}, S.size + Y.size
    c, A = e.compile(offsets, total)
    x = rng.standard_normal(total)
    vals = {S: S.from_dof(x[:S.size]), Y: Y.from_dof(x[S.size:])}
    np.testing.assert_allclose((c + A @ x).reshape(e.shape, order="F"), e.evaluate(vals), atol=1e-10)


def test_symmetric_dof_round_trip():
    S = MatrixVariable((3, 3), symmetric=True)
    M = _sym(np.arange(9.0).reshape(3, 3))
    np.testing.assert_array_equal(S.from_dof(S.to_dof(M)), M)


def test_kron_eye_and_trace():
    X = MatrixVariable((2, 2), name="X")
    V = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(kron_eye(3, X).evaluate({X: V}), np.kron(np.eye(3), V))
    assert trace(X).evaluate({X: V})[0, 0] == 5.0


def test_shape_errors():
    X = MatrixVariable((2, 3))
    with pytest.raises(DimensionError):
        X + np.zeros((3, 2))
    prog = ConicProgram()
    Y = prog.add_variable((2, 3), name="Y")
    with pytest.raises(DimensionError):
        prog.add_lmi(Y, "<")
    with pytest.raises(ValueError):
        prog.add_variable((1, 1), name="Y")


@pytest.mark.parametrize("solver", available_adapters())
def test_trace_minimization(solver):
    prog = ConicProgram()
    Z = prog.add_variable((2, 2), symmetric=True, name="Z")
    prog.add_lmi(Z - np.eye(2), ">=")
    prog.set_objective(trace(Z))
    sol = solve(prog, solver=solver)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(sol["Z"], np.eye(2), atol=1e-5)


@pytest.mark.parametrize("solver", available_adapters())
def test_schur_complement_bound(solver):
    # [g 1; 1 g] psd  <=>  g >= 1
    prog = ConicProgram()
    g = prog.add_variable((1, 1), symmetric=True, name="g")
    prog.add_lmi(bmat([[g, np.ones((1, 1))], [np.ones((1, 1)), g]]), ">=")
    prog.set_objective(g)
    sol = solve(prog, solver=solver)
    assert sol.status == "optimal"
    assert sol["g"][0, 0] == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("solver", available_adapters())
def test_infeasible_program(solver):
    prog = ConicProgram()
    x = prog.add_variable((1, 1), symmetric=True, name="x")
    prog.add_lmi(x + np.ones((1, 1)), "<=")
    prog.add_lmi(x, ">=")
    prog.set_objective(x)
    assert solve(prog, solver=solver).status == "infeasible"


def test_constant_lmis_are_prechecked():
    prog = ConicProgram()
    x = prog.add_variable((1, 1), symmetric=True, name="x")
    prog.add_lmi(x, ">=")
    prog.add_lmi(-np.eye(2) + 0 * kron_eye(2, x), "<")
    prog.set_objective(x)
    assert solve(prog).status == "optimal"
    bad = ConicProgram()
    y = bad.add_variable((1, 1), symmetric=True, name="y")
    bad.add_lmi(np.eye(2) + 0 * kron_eye(2, y), "<")
    bad.set_objective(y)
    assert solve(bad).status == "infeasible"


def test_equality_constraint_and_residuals():
    prog = ConicProgram()
    X = prog.add_variable((2, 2), symmetric=True, name="X")
    prog.add_equality(X - np.diag([1.0, 2.0]))
    prog.add_lmi(X, ">=")
    prog.set_objective(trace(X))
    sol = solve(prog)
    assert sol.ok
    np.testing.assert_allclose(sol["X"], np.diag([1.0, 2.0]), atol=1e-7)
    assert sol.equality_residual <= 1e-7


def test_interchange_round_trip(tmp_path):
    prog = ConicProgram("toy")
    Z = prog.add_variable((2, 2), symmetric=True, name="Z")
    prog.add_lmi(Z - np.eye(2), ">=", name="lb", family="bound")
    prog.set_objective(trace(Z))
    path = dump_program(prog, tmp_path / "p.json", include_standard_form=True)
    again = load_program(path)
    assert [c.name for c in again.lmis] == ["lb"]
    assert solve(again).objective == pytest.approx(solve(prog).objective, abs=1e-7)
