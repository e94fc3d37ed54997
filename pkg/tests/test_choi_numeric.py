"""Concrete operator checks: membership, feasibility, sampling, plumbing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import type_strategy
from hoq.choi_numeric import (
    DEFAULT_FEAS_TOL,
    HermOp,
    apply_inverse_choi,
    check_admissible,
    check_deterministic,
    choi_from_kraus,
    identity_op,
    load_matrix,
    matrix_from_json_obj,
    matrix_to_json_obj,
    max_admissible_scale,
    oracle_deterministic,
    partial_trace,
    random_channel_choi,
    random_density,
    reorder_factors,
    sample_deterministic,
    save_matrix,
)
from hoq.semantics import lambda_recursive
from hoq.type_ast import parse_type, tensor, total_dim

SZ = np.diag([1.0, -1.0]).astype(complex)


@pytest.fixture
def nprng():
    return np.random.default_rng(20240917)


def random_herm(rng, side):
    g = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    return (g + g.conj().T) / 2


# -- HermOp ---------------------------------------------------------------


def test_hermop_validation():
    with pytest.raises(ValueError):
        HermOp((2, 0), np.eye(1))
    with pytest.raises(ValueError):
        HermOp((2,), np.eye(3))
    with pytest.raises(ValueError):
        HermOp((2,), np.array([[0, 1], [0, 0]], dtype=complex))
    op = HermOp((2, 3), np.eye(6))
    assert op.side == 6 and op.dims == (2, 3)


def test_hermop_scalar():
    op = identity_op(())
    assert op.side == 1 and op.matrix[0, 0] == 1


# -- factor plumbing ------------------------------------------------------


def test_partial_trace_values(nprng):
    a = random_herm(nprng, 2)
    b = random_herm(nprng, 3)
    op = HermOp((2, 3), np.kron(a, b))
    left = partial_trace(op, [1])
    assert left.dims == (2,)
    assert np.allclose(left.matrix, a * np.trace(b))
    right = partial_trace(op, [0])
    assert np.allclose(right.matrix, b * np.trace(a))
    both = partial_trace(op, [0, 1])
    assert both.dims == ()
    assert np.allclose(both.matrix, np.trace(a) * np.trace(b))
    with pytest.raises(ValueError):
        partial_trace(op, [2])


def test_reorder_factors_swaps_kron(nprng):
    a = random_herm(nprng, 2)
    b = random_herm(nprng, 3)
    op = HermOp((2, 3), np.kron(a, b))
    swapped = reorder_factors(op, (1, 0))
    assert swapped.dims == (3, 2)
    assert np.allclose(swapped.matrix, np.kron(b, a))
    with pytest.raises(ValueError):
        reorder_factors(op, (0, 0))


def test_reorder_then_trace_commutes(nprng):
    m = random_herm(nprng, 8)
    op = HermOp((2, 2, 2), m)
    perm = (2, 0, 1)
    # tracing new position 0 == tracing old position perm[0]
    lhs = partial_trace(reorder_factors(op, perm), [0])
    rhs = reorder_factors(partial_trace(op, [perm[0]]), (0, 1))
    assert np.allclose(lhs.matrix, rhs.matrix)


def test_apply_inverse_choi_identity_channel(nprng):
    choi = choi_from_kraus([np.eye(2, dtype=complex)])
    o = HermOp((2,), random_herm(nprng, 2))
    image = apply_inverse_choi(choi, o)
    assert np.allclose(image.matrix, o.matrix)


def test_apply_inverse_choi_trace_collapse(nprng):
    # the map rho -> Tr(rho) I/d has Choi I/d
    d = 3
    choi = HermOp((d, d), np.eye(d * d, dtype=complex) / d)
    o = HermOp((d,), random_herm(nprng, d))
    image = apply_inverse_choi(choi, o)
    assert np.allclose(image.matrix, np.trace(o.matrix) * np.eye(d) / d)


def test_apply_inverse_choi_dim_guard():
    choi = choi_from_kraus([np.eye(2, dtype=complex)])
    with pytest.raises(ValueError):
        apply_inverse_choi(choi, identity_op((3,)))


def test_choi_from_kraus_trace_preserving(nprng):
    for d_in, d_out in [(2, 2), (2, 3), (3, 2)]:
        choi = random_channel_choi(d_in, d_out, nprng)
        reduced = partial_trace(choi, [1])
        assert np.allclose(reduced.matrix, np.eye(d_in)), (d_in, d_out)


# -- deterministic membership --------------------------------------------


def test_channel_chois_are_deterministic(nprng):
    x = parse_type("A:2->B:3")
    for _ in range(5):
        choi = random_channel_choi(2, 3, nprng)
        assert check_deterministic(choi, x).verdict


@given(type_strategy(dims=(1, 2, 3), max_leaves=4))
@settings(max_examples=60)
def test_uniform_element_is_deterministic(x):
    if total_dim(x) > 16:
        return
    lam = float(lambda_recursive(x))
    report = check_deterministic(lam * np.eye(total_dim(x)), x)
    assert report.verdict
    assert report.lambda_measured == pytest.approx(lam, abs=1e-12)
    assert report.residual_outside_delta <= 1e-12


def test_effect_normalization():
    x = parse_type("A:2->I")
    assert check_deterministic(np.eye(2, dtype=complex), x).verdict
    report = check_deterministic(np.eye(2, dtype=complex) / 2, x)
    assert not report.verdict
    assert report.lambda_measured == pytest.approx(0.5)
    assert float(report.lambda_expected) == 1.0


def test_rejections_populate_report(nprng):
    x = parse_type("A:2->B:2")
    lam = 0.5
    base = lam * np.eye(4, dtype=complex)
    # non-Hermitian
    skew = base + 1e-3 * np.array(
        [[0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], dtype=complex
    )
    r = check_deterministic(skew, x)
    assert not r.verdict and r.herm_residual > 1e-9
    # support outside the admissible blocks: identity on the output factor,
    # traceless on the input factor
    leak = base + 1e-3 * np.kron(SZ, np.eye(2))
    r = check_deterministic(leak, x)
    assert not r.verdict and r.residual_outside_delta > 1e-9
    assert r.herm_residual <= 1e-12
    # trace off
    r = check_deterministic(1.01 * base, x)
    assert not r.verdict
    # negative eigenvalue with trace and blocks fine: scale fluctuation to
    # overshoot the identity part
    fluct = np.kron(SZ, SZ)  # inside Delta for A->B (both traceless)
    r = check_deterministic(base + 0.6 * fluct, x)
    assert not r.verdict and r.min_eigenvalue < -1e-9


def test_tolerance_is_honored():
    x = parse_type("A:2->B:2")
    bad = 0.5 * np.eye(4, dtype=complex) + 1e-7 * np.kron(SZ, np.eye(2))
    assert not check_deterministic(bad, x, tol=1e-9).verdict
    assert check_deterministic(bad, x, tol=1e-4).verdict


def test_product_channels_pass_tensor_type(nprng):
    xtens = tensor(parse_type("A:2->B:2"), parse_type("C:2->D:2"))
    m1 = random_channel_choi(2, 2, nprng)
    m2 = random_channel_choi(2, 2, nprng)
    # route 1: kron of the two Chois is already laid out (A, B, C, D)
    direct = np.kron(m1.matrix, m2.matrix)
    assert check_deterministic(direct, xtens).verdict
    # route 2: joint Kraus products give the (A, C, B, D) layout; reorder
    k1 = np.eye(2, dtype=complex)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    joint = choi_from_kraus([np.kron(k1, h)])
    rewired = reorder_factors(
        HermOp((2, 2, 2, 2), joint.matrix), (0, 2, 1, 3)
    )
    assert check_deterministic(rewired.matrix, xtens).verdict
    assert np.allclose(
        rewired.matrix,
        np.kron(choi_from_kraus([k1]).matrix, choi_from_kraus([h]).matrix),
    )


def test_swap_channel_fails_tensor_type():
    xtens = tensor(parse_type("A:2->B:2"), parse_type("C:2->D:2"))
    swap = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            swap[j * 2 + i, i * 2 + j] = 1.0
    choi = choi_from_kraus([swap])
    rewired = reorder_factors(HermOp((2, 2, 2, 2), choi.matrix), (0, 2, 1, 3))
    report = check_deterministic(rewired.matrix, xtens)
    assert not report.verdict
    assert report.residual_outside_delta > 1e-3


# -- admissibility ---------------------------------------------------------


def test_admissible_uniform(nprng):
    x = parse_type("A:2->B:2")
    lam = float(lambda_recursive(x))
    report = check_admissible(lam * np.eye(4, dtype=complex), x)
    assert report.feasible == "yes"
    assert report.final_distance < DEFAULT_FEAS_TOL
    assert report.iterations >= 1
    w = report.witness
    assert w is not None
    # the witness sits in the affine slice and dominates the input
    assert check_deterministic(w.matrix, x, tol=1e-5).verdict
    gap = np.linalg.eigvalsh(w.matrix - lam * np.eye(4))[0]
    assert gap >= -1e-5


def test_admissible_rejects_double_uniform():
    x = parse_type("A:2->B:2")
    report = check_admissible(np.eye(4, dtype=complex), x, max_iter=3000)
    assert report.feasible == "no_certificate"
    assert report.witness is None
    assert report.final_distance > DEFAULT_FEAS_TOL


def test_admissible_precheck_non_psd():
    x = parse_type("A:2")
    report = check_admissible(-np.eye(2, dtype=complex), x)
    assert report.feasible == "no_certificate"
    assert report.iterations == 0
    assert report.final_distance == float("inf")


def test_max_admissible_scale_uniform():
    x = parse_type("A:2->B:2")
    lam = float(lambda_recursive(x))
    eye = np.eye(4, dtype=complex)
    assert max_admissible_scale(lam * eye, x) == 1.0
    assert max_admissible_scale(2 * lam * eye, x) == 0.5


def test_max_admissible_scale_rank_deficient():
    # a pure state scales up to exactly 1 inside the state slice
    x = parse_type("A:2")
    proj = np.diag([1.0, 0.0]).astype(complex)
    assert max_admissible_scale(proj, x) == pytest.approx(1.0, abs=1e-6)


def test_max_admissible_scale_guards():
    x = parse_type("A:2")
    with pytest.raises(ValueError):
        max_admissible_scale(-np.eye(2, dtype=complex), x)
    with pytest.raises(ValueError):
        max_admissible_scale(np.zeros((2, 2), dtype=complex), x)


# -- sampling and the definitional oracle ----------------------------------


def test_sample_deterministic_reproducible():
    x = parse_type("(A:2->B:2)->C:2")
    a = sample_deterministic(x, seed=7)
    b = sample_deterministic(x, seed=7)
    c = sample_deterministic(x, seed=8)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.allclose(a.matrix, c.matrix)


@pytest.mark.parametrize(
    "text", ["A:2", "A:2->B:2", "A:2->B:3", "(A:2->B:2)->C:2", "A:2->I"]
)
def test_sample_deterministic_members(text):
    x = parse_type(text)
    lam = float(lambda_recursive(x))
    for seed in range(4):
        r = sample_deterministic(x, seed=seed)
        assert check_deterministic(r, x).verdict, (text, seed)
        # strictly positive by construction
        assert np.linalg.eigvalsh(r.matrix)[0] >= 0.05 * lam - 1e-12


def test_sample_deterministic_spread():
    x = parse_type("A:2->B:2")
    with pytest.raises(ValueError):
        sample_deterministic(x, spread=0.0)
    with pytest.raises(ValueError):
        sample_deterministic(x, spread=1.5)
    tight = sample_deterministic(x, seed=3, spread=0.1)
    loose = sample_deterministic(x, seed=3, spread=1.0)
    dev_tight = np.linalg.norm(tight.matrix - 0.5 * np.eye(4))
    dev_loose = np.linalg.norm(loose.matrix - 0.5 * np.eye(4))
    assert dev_tight < dev_loose


def test_oracle_agrees_with_block_checker(nprng):
    x = parse_type("A:2")
    y = parse_type("B:2")
    arrow = parse_type("A:2->B:2")
    cases = [
        choi_from_kraus([np.eye(2, dtype=complex)]).matrix,
        np.eye(4, dtype=complex) / 2,  # trace collapse channel
        sample_deterministic(arrow, seed=5).matrix,
        np.eye(4, dtype=complex) / 4,  # wrong normalization
        choi_from_kraus([np.diag([1.0, 0.5]).astype(complex)]).matrix,  # not TP
        random_herm(nprng, 4),  # generic: almost surely not a member
    ]
    for mat in cases:
        direct = check_deterministic(mat, arrow).verdict
        probed = oracle_deterministic(mat, x, y, samples=10, seed=1)
        assert direct == probed, mat


def test_oracle_rejects_non_psd():
    x = parse_type("A:2")
    y = parse_type("B:2")
    mat = 0.5 * np.eye(4, dtype=complex)
    mat[0, 0] = -0.1
    assert not oracle_deterministic(mat, x, y)


# -- matrix files ----------------------------------------------------------


def test_matrix_json_round_trip(tmp_path, nprng):
    op = HermOp((2, 2), random_herm(nprng, 4))
    path = tmp_path / "op.json"
    save_matrix(str(path), op)
    back = load_matrix(str(path))
    assert back.dims == op.dims
    assert np.allclose(back.matrix, op.matrix)
    obj = matrix_to_json_obj(op)
    assert set(obj) == {"dims", "matrix"}
    again = matrix_from_json_obj(obj)
    assert np.allclose(again.matrix, op.matrix)


def test_matrix_json_errors():
    with pytest.raises(ValueError):
        matrix_from_json_obj({"dims": [2]})
    with pytest.raises(ValueError):
        matrix_from_json_obj({"dims": [2], "matrix": [[[1, 0]]]})
    with pytest.raises(ValueError):
        matrix_from_json_obj(
            {"dims": [2], "matrix": [[[1, 0]], [[0, 0], [1, 0]]]}
        )


def test_random_density_is_density(nprng):
    rho = random_density(3, nprng)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho)[0] >= -1e-12
