import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpv_systems import simulate_dictionary
from ddlpv.core import AffineMatrixFunction, DataDictionary, ScheduleBox, build_data_matrices
from ddlpv.errors import IllConditionedError, IllPosedError, InfeasibleError
from ddlpv.sdp import MatrixVariable, available_adapters
from ddlpv.synthesis import (Dims, L2Weights, QuadraticWeights, SynthesisResult,
                             certify_closed_loop, fq_to_F, outer_factors, recover_gains,
                             synthesize)
from ddlpv.synthesis.structure import blocked_lhs, multiplier_outer, quadratic_form

# open-loop unstable affine LPV system used as an exact-data oracle
A_TRUE = AffineMatrixFunction((np.array([[1.05, 0.1], [0.0, 0.95]]),
                               np.array([[0.1, 0.0], [0.05, 0.1]])))
B_TRUE = AffineMatrixFunction((np.array([[0.0], [0.1]]), np.array([[0.0], [0.02]])))
QW = QuadraticWeights(np.eye(2), np.eye(1))
LW = L2Weights(np.eye(2), np.eye(1), 1e-6)


@pytest.fixture(scope="module")
def exact_dictionary():
    return simulate_dictionary(np.random.default_rng(0), A_TRUE, B_TRUE, 10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(1, 2), st.integers(1, 8),
       st.integers(0, 2**31 - 1))
def test_fq_identity_property(n_x, n_u, n_p, N_d, seed):
    rng = np.random.default_rng(seed)
    d = Dims(n_x, n_u, n_p, N_d)
    FQ = rng.standard_normal((N_d * (1 + n_p), d.n_lift))
    F = fq_to_F(FQ, d)
    for p in rng.uniform(-1, 1, (5, n_p)):
        basis = np.vstack([np.eye(n_x), np.kron(p[:, None], np.eye(n_x)),
                           np.kron(np.kron(p, p)[:, None], np.eye(n_x))])
        np.testing.assert_allclose(F @ basis, quadratic_form(FQ, p, d), atol=1e-12)


def test_expression_and_array_paths_agree():
    rng = np.random.default_rng(1)
    d = Dims(2, 1, 2, 9)
    Z, Y = MatrixVariable((2, 2), symmetric=True), MatrixVariable((1, d.n_lift))
    FQ = MatrixVariable((d.N_d * 3, d.n_lift))
    Zv = rng.standard_normal((2, 2))
    Zv = Zv + Zv.T
    Yv, Fv = rng.standard_normal(Y.shape), rng.standard_normal(FQ.shape)
    vals = {Z: Zv, Y: Yv, FQ: Fv}
    np.testing.assert_allclose(blocked_lhs(Z, Y, d).evaluate(vals), blocked_lhs(Zv, Yv, d), atol=1e-14)
    np.testing.assert_allclose(fq_to_F(FQ, d).evaluate(vals), fq_to_F(Fv, d), atol=1e-14)


@pytest.mark.parametrize("kind", ["qp", "l2"])
def test_outer_factor_shapes(kind):
    d = Dims(2, 1, 1, 7)
    R1, R2 = outer_factors(d, kind)
    nz = 3 if kind == "qp" else 5
    assert R1.shape == (2 * d.n_xi, d.n_xi + 4 + nz)
    assert R2.shape == (2 * d.n_lift + nz, d.n_xi + 4 + nz)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_multiplier_worst_case_is_at_a_vertex(seed):
    # with a positive definite lower-right block the condition is convex in p
    rng = np.random.default_rng(seed)
    n_x, n_p = 1, 2
    k = 2 * n_x * n_p
    M = rng.standard_normal((2 * k, 2 * k))
    Xi = M + M.T
    L = rng.standard_normal((k, k))
    Xi[k:, k:] = L @ L.T + 0.1 * np.eye(k)
    box = ScheduleBox.symmetric_unit(n_p)
    f = lambda p: np.linalg.eigvalsh(multiplier_outer(p, n_x).T @ Xi @ multiplier_outer(p, n_x))[-1]  # noqa: E731
    at_vertices = max(f(v) for v in box.vertices())
    inside = max(f(p) for p in rng.uniform(-1, 1, (40, n_p)))
    assert inside <= at_vertices + 1e-9


def test_recover_gains_round_trip():
    rng = np.random.default_rng(2)
    Z = np.array([[2.0, 0.3], [0.3, 1.0]])
    K0, K1 = rng.standard_normal((1, 2)), rng.standard_normal((1, 2))
    K = recover_gains(Z, np.hstack([K0 @ Z, K1 @ Z]), 1)
    np.testing.assert_allclose(K.K0, K0, atol=1e-12)
    np.testing.assert_allclose(K.Kbar, K1, atol=1e-12)
    with pytest.raises(IllConditionedError):
        recover_gains(np.diag([1.0, 1e-12]), np.zeros((1, 4)), 1)


@pytest.mark.parametrize("kind,weights", [("qp", QW), ("l2", LW)])
def test_synthesis_stabilizes_true_system(exact_dictionary, kind, weights):
    res = synthesize(kind, exact_dictionary, weights)
    assert res.status == "optimal"
    assert res.residuals["certificate_passed"]
    cert = certify_closed_loop(res.physical_gains(), exact_dictionary.box, 25, model=(A_TRUE, B_TRUE))
    assert cert.stable
    # the open loop is not
    assert max(np.abs(np.linalg.eigvals(A_TRUE(p))).max() for p in ([-1.0], [1.0])) > 1
    if kind == "l2":
        assert res.gamma > 0


def test_cost_scale_leaves_gains_unchanged(exact_dictionary):
    a = synthesize("qp", exact_dictionary, QW, cost_scale=0.1)
    b = synthesize("qp", exact_dictionary, QW, cost_scale=0.01)
    # exact up to the fixed strictness margin, which does not transform with the scale
    np.testing.assert_allclose(a.gains.K0, b.gains.K0, rtol=1e-2)
    np.testing.assert_allclose(a.gains.Kbar, b.gains.Kbar, rtol=1e-2, atol=1e-4)
    assert a.objective == pytest.approx(b.objective, rel=1e-3)


@pytest.mark.skipif("cvxopt" not in available_adapters(), reason="cvxopt not installed")
def test_solvers_agree_on_l2_bound(exact_dictionary):
    a = synthesize("l2", exact_dictionary, LW, solver="clarabel")
    b = synthesize("l2", exact_dictionary, LW, solver="cvxopt")
    assert a.gamma == pytest.approx(b.gamma, rel=1e-5)


def test_non_pe_dictionary_is_ill_posed():
    box = ScheduleBox([-1.0], [1.0])
    d = DataDictionary(np.zeros((8, 1)), np.zeros((8, 1)), np.zeros((8, 2)), box)
    with pytest.raises(IllPosedError):
        synthesize("qp", d, QW)


def test_infeasible_margin_is_diagnosed(exact_dictionary):
    # a strictness margin above the constant identity block of the
    # performance channel cannot be met by any variable values
    with pytest.raises(InfeasibleError) as err:
        synthesize("qp", exact_dictionary, QW, eps=20.0)
    assert err.value.diagnosis["performance"].startswith("feasible")


def test_result_json_round_trip(exact_dictionary, tmp_path):
    res = synthesize("l2", exact_dictionary, LW)
    back = SynthesisResult.load(res.save(tmp_path / "r.json"))
    np.testing.assert_array_equal(back.gains.K0, res.gains.K0)
    np.testing.assert_array_equal(back.multiplier.full, res.multiplier.full)
    assert back.gamma == res.gamma
    np.testing.assert_allclose(back.physical_gains().Kbar, res.physical_gains().Kbar)


def test_certify_closed_loop_argument_checks():
    K = recover_gains(np.eye(2), np.zeros((1, 4)), 1)
    with pytest.raises(ValueError):
        certify_closed_loop(K, ScheduleBox([-1], [1]), 1, model=(A_TRUE, B_TRUE))
    with pytest.raises(ValueError):
        certify_closed_loop(K, ScheduleBox([-1], [1]), 5)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        cert = certify_closed_loop(K, ScheduleBox([0.5], [0.5]), 5, model=(A_TRUE, B_TRUE))
    assert cert.degenerate_box and len(cert.grid) == 1 and w


def test_weights_validation():
    with pytest.raises(ValueError):
        QuadraticWeights(np.eye(2), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        L2Weights(np.eye(2), np.eye(1), -1.0)
    with pytest.raises(ValueError):
        QuadraticWeights(np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(1))


def test_data_route_matches_model_route_on_exact_data(exact_dictionary):
    res = synthesize("qp", exact_dictionary, QW, rescale=False)
    m = build_data_matrices(exact_dictionary)
    a = certify_closed_loop(res.gains, exact_dictionary.box, 15, data=m)
    b = certify_closed_loop(res.gains, exact_dictionary.box, 15, model=(A_TRUE, B_TRUE))
    np.testing.assert_allclose(a.spectral_radii, b.spectral_radii, atol=1e-8)
