import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpv_systems import random_gains, random_instance, random_system, simulate_dictionary
from ddlpv.core import (DataDictionary, ScheduleBox, SchedulingMap, best_window,
                        build_data_matrices, closed_loop_matrix, dd_closed_loop_at,
                        dd_closed_loop_map, dd_open_loop_step, dictionary_hash, lifted_state,
                        lpv_step, pe_check, read_dictionary, regressor, rescale_dictionary,
                        rescale_scheduling, window, window_sweep, write_dictionary)
from ddlpv.errors import DimensionError, IllPosedError, ScheduleBoxError


def test_required_rank_formula():
    rng = np.random.default_rng(0)
    A, B = random_system(rng, 2, 1, 1)
    m = build_data_matrices(simulate_dictionary(rng, A, B, 9))
    assert m.required_rank == 6
    assert m.G.shape == (6, 9)


def test_data_matrix_layout_matches_regressor():
    rng = np.random.default_rng(1)
    A, B, d = random_instance(rng)
    m = build_data_matrices(d)
    for k in range(d.N_d):
        np.testing.assert_array_equal(m.G[:, k], regressor(d.x[k], d.p[k], d.u[k], d.n_x, d.n_p, d.n_u))
    np.testing.assert_array_equal(m.Xnext, d.x[1:].T)


def test_zero_excitation_is_not_pe():
    box = ScheduleBox([-1.0], [1.0])
    d = DataDictionary(np.zeros((8, 1)), np.zeros((8, 1)), np.zeros((8, 2)), box)
    rep = pe_check(build_data_matrices(d))
    assert not rep.is_pe and rep.rank == 0 and math.isinf(rep.condition_number)
    with pytest.raises(IllPosedError):
        dd_open_loop_step(build_data_matrices(d), [0, 0], [0], [0])


def test_short_dictionary_cannot_be_pe():
    rng = np.random.default_rng(2)
    A, B = random_system(rng, 2, 1, 1)
    d = simulate_dictionary(rng, A, B, 5)
    rep = pe_check(build_data_matrices(d))
    assert rep.rank <= 5 < rep.required


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_open_loop_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    A, B, d = random_instance(rng)
    m = build_data_matrices(d)
    if not pe_check(m).is_pe:
        return
    for _ in range(5):
        x, u = rng.standard_normal(d.n_x), rng.standard_normal(d.n_u)
        p = rng.uniform(-1, 1, d.n_p)
        np.testing.assert_allclose(dd_open_loop_step(m, x, p, u), lpv_step(A, B, x, p, u), atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_closed_loop_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    A, B, d = random_instance(rng)
    m = build_data_matrices(d)
    if not pe_check(m).is_pe:
        return
    K = random_gains(rng, d.n_u, d.n_x, d.n_p)
    np.testing.assert_allclose(m.Xnext @ dd_closed_loop_map(m, K).V, closed_loop_matrix(A, B, K),
                               atol=1e-8)
    # the lifted closed loop acts like the model under u = K(p) x
    x, p = rng.standard_normal(d.n_x), rng.uniform(-1, 1, d.n_p)
    direct = lpv_step(A, B, x, p, K(p) @ x)
    np.testing.assert_allclose(closed_loop_matrix(A, B, K) @ lifted_state(x, p), direct, atol=1e-10)
    np.testing.assert_allclose(dd_closed_loop_at(m, K, p) @ x, direct, atol=1e-8)


def test_dimension_errors():
    rng = np.random.default_rng(3)
    A, B, d = random_instance(rng)
    m = build_data_matrices(d)
    with pytest.raises(DimensionError):
        dd_open_loop_step(m, np.zeros(d.n_x + 1), np.zeros(d.n_p), np.zeros(d.n_u))
    with pytest.raises(DimensionError):
        DataDictionary(np.zeros((3, 1)), np.zeros((4, 1)), np.zeros((4, 2)), ScheduleBox([-1], [1]))


def test_out_of_box_sample_rejected():
    with pytest.raises(ScheduleBoxError):
        DataDictionary(np.zeros((3, 1)), np.array([[0.0], [2.0], [0.0]]), np.zeros((3, 2)),
                       ScheduleBox([-1], [1]))


def test_rescaling_maps_box_to_unit_and_preserves_control():
    box = ScheduleBox([-0.22], [1.0])
    smap = rescale_scheduling(box)
    np.testing.assert_allclose(smap.map_box(box).lower, [-1.0])
    np.testing.assert_allclose(smap.map_box(box).upper, [1.0])
    rng = np.random.default_rng(4)
    K = random_gains(rng, 1, 2, 1)
    phys = smap.gains_to_physical(K)
    for p in rng.uniform(-0.22, 1.0, 10):
        x = rng.standard_normal(2)
        np.testing.assert_allclose(phys.control(x, [p]), K.control(x, smap.forward([p])), atol=1e-12)
    with pytest.raises(ScheduleBoxError):
        rescale_scheduling(ScheduleBox([0.5], [0.5]))
    back = SchedulingMap.from_dict(smap.to_dict())
    np.testing.assert_array_equal(back.scale, smap.scale)
    np.testing.assert_array_equal(back.center, smap.center)


def test_rescaled_dictionary_keeps_states():
    rng = np.random.default_rng(5)
    A, B = random_system(rng, 2, 1, 1)
    box = ScheduleBox([-0.22], [1.0])
    d = simulate_dictionary(rng, A, B, 8, box)
    r = rescale_dictionary(d, rescale_scheduling(box))
    np.testing.assert_array_equal(r.x, d.x)
    assert r.box.contains(r.p.max(axis=0)) and r.box.contains(r.p.min(axis=0))


def test_dictionary_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    A, B, d = random_instance(rng)
    path = write_dictionary(d, tmp_path / "d.csv")
    back = read_dictionary(path)
    np.testing.assert_array_equal(back.x, d.x)
    np.testing.assert_array_equal(back.p, d.p)
    np.testing.assert_array_equal(back.u, d.u)
    assert dictionary_hash(back) == dictionary_hash(d)
    first = path.read_bytes()
    write_dictionary(d, tmp_path / "d.csv")
    assert path.read_bytes() == first
    assert path.read_text().splitlines()[0].startswith("k,u_1,")


def test_window_sweep_and_best_window():
    rng = np.random.default_rng(8)
    A, B = random_system(rng, 2, 1, 1)
    rec = simulate_dictionary(rng, A, B, 30)
    sweep = window_sweep(rec, 7)
    assert [w.offset for w in sweep] == list(range(30 - 7 + 1))
    assert all(w.rank <= 6 for w in sweep)
    off = best_window(rec, 7)
    best = min((w for w in sweep if w.rank == 6), key=lambda w: w.condition_number)
    assert off == best.offset
    assert window(rec, off, 7).N_d == 7
    with pytest.raises(DimensionError):
        window_sweep(rec, 31)
