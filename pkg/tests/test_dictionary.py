import numpy as np
import pytest

import greedylab as gl
from greedylab.dictionary import NonSpanningDictionaryError


def el(coords, geometry):
    return gl.Element(np.asarray(coords, dtype=float), geometry)


def _elimination_rank(matrix, tol=1e-10):
    # independent row-reduction rank check
    A = np.array(matrix, dtype=float)
    rank = 0
    rows, cols = A.shape
    for col in range(cols):
        pivot = None
        for row in range(rank, rows):
            if abs(A[row, col]) > tol:
                pivot = row
                break
        if pivot is None:
            continue
        A[[rank, pivot]] = A[[pivot, rank]]
        A[rank] = A[rank] / A[rank, col]
        for row in range(rows):
            if row != rank and abs(A[row, col]) > tol:
                A[row] -= A[row, col] * A[rank]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# builders


def test_orthonormal_examples():
    D = gl.build_orthonormal(2)
    assert np.array_equal(D.matrix, np.eye(2))
    assert len(gl.build_orthonormal(1)) == 1
    D3 = gl.build_orthonormal(3)
    assert np.allclose(D3.matrix @ D3.matrix.T, np.eye(3))
    with pytest.raises(ValueError):
        gl.build_orthonormal(0)


def test_random_unit_norms_and_determinism():
    D1 = gl.build_random_unit(2, 2, seed=5)
    norms = np.sqrt((D1.matrix**2).sum(axis=1))
    assert np.abs(norms - 1.0).max() <= 1e-12
    D2 = gl.build_random_unit(2, 2, seed=5)
    assert np.array_equal(D1.matrix, D2.matrix)
    D3 = gl.build_random_unit(2, 2, seed=6)
    assert not np.array_equal(D1.matrix, D3.matrix)


def test_random_unit_spans():
    D = gl.build_random_unit(4, 32, seed=3)
    assert _elimination_rank(D.matrix) == 4


def test_random_unit_lp_normalization():
    g = gl.lp(3, 4)
    D = gl.build_random_unit(4, 8, seed=1, geometry=g)
    norms = (np.abs(D.matrix) ** 3).sum(axis=1) ** (1.0 / 3.0)
    assert np.abs(norms - 1.0).max() <= 1e-12


def test_random_unit_spanning_guard():
    with pytest.raises(ValueError):
        gl.build_random_unit(4, 3, seed=0)
    D = gl.build_random_unit(4, 3, seed=0, spanning=False)
    assert len(D) == 3


def test_union_bases():
    D1 = gl.build_union_bases(2, 1, seed=0)
    assert np.array_equal(D1.matrix, np.eye(2))
    D2 = gl.build_union_bases(2, 2, seed=0)
    assert len(D2) == 4
    # the rotated pair is itself orthonormal
    block = D2.matrix[2:]
    assert np.allclose(block @ block.T, np.eye(2), atol=1e-12)
    assert len(gl.build_union_bases(3, 3, seed=1)) == 9
    with pytest.raises(ValueError):
        gl.build_union_bases(2, 0, seed=0)


def test_union_bases_lp_renormalized():
    g = gl.lp(4, 3)
    D = gl.build_union_bases(3, 2, seed=2, geometry=g)
    norms = (np.abs(D.matrix) ** 4).sum(axis=1) ** 0.25
    assert np.abs(norms - 1.0).max() <= 1e-12


def test_dictionary_rejects_non_unit_atoms():
    with pytest.raises(ValueError):
        gl.Dictionary([[1.0, 1.0]], gl.hilbert(2))


# ---------------------------------------------------------------------------
# selection


def test_select_examples():
    D = gl.build_orthonormal(2)
    r = el([0.6, 0.8], D.geometry)
    sel = gl.select(r, D, 1.0)
    assert (sel.index, sel.dual_value, sel.sup_dual) == (1, 0.8, 0.8)

    tie = gl.select(el([0.5, 0.5], D.geometry), D, 1.0)
    assert tie.index == 0  # lowest index on ties

    weak = gl.select(r, D, 0.7)
    assert weak.index == 0  # 0.6 >= 0.7 * 0.8
    assert weak.dual_value == 0.6


def test_select_sup_matches_exhaustive_scan():
    D = gl.build_random_unit(5, 17, seed=8)
    rng = np.random.default_rng(4)
    for _ in range(20):
        r = el(rng.standard_normal(5), D.geometry)
        sel = gl.select(r, D, 1.0)
        # independent per-row scan; BLAS summation may differ by ~1 ulp
        sup = max(abs(float(D.matrix[i] @ r.coords)) for i in range(len(D)))
        assert sel.sup_dual == pytest.approx(sup, rel=1e-13)
        assert abs(sel.dual_value) == sel.sup_dual


@pytest.mark.parametrize("t", [0.3, 0.7, 1.0])
def test_select_weak_contract(t):
    D = gl.build_random_unit(6, 20, seed=2)
    rng = np.random.default_rng(5)
    for _ in range(50):
        r = el(rng.standard_normal(6), D.geometry)
        sel = gl.select(r, D, t)
        assert abs(sel.dual_value) >= t * sel.sup_dual


def test_select_l2_as_lp_agrees_with_hilbert():
    # F_r(phi) = <r, phi>/||r|| is a positive rescaling of the duals
    n, K = 6, 24
    Dh = gl.build_random_unit(n, K, seed=9)
    Dp = gl.Dictionary(Dh.matrix, gl.lp(2, n))
    rng = np.random.default_rng(6)
    for _ in range(50):
        rv = rng.standard_normal(n)
        sh = gl.select(el(rv, Dh.geometry), Dh, 1.0)
        sp = gl.select(el(rv, Dp.geometry), Dp, 1.0)
        assert sh.index == sp.index


def test_select_lp_duals_are_norming_functionals():
    g = gl.lp(3, 4)
    D = gl.build_random_unit(4, 10, seed=12, geometry=g)
    r = el(np.random.default_rng(0).standard_normal(4), g)
    sel = gl.select(r, D, 1.0)
    expected = gl.norming_functional(r, D.atom(sel.index))
    assert sel.dual_value == pytest.approx(expected, rel=1e-12)


def test_select_zero_residual():
    D = gl.build_orthonormal(2)
    with pytest.raises(ValueError):
        gl.select(el([0.0, 0.0], D.geometry), D, 1.0)


def test_select_non_spanning():
    D = gl.Dictionary([[1.0, 0.0]], gl.hilbert(2))
    r = el([0.0, 1.0], D.geometry)  # orthogonal to the only atom
    with pytest.raises(NonSpanningDictionaryError):
        gl.select(r, D, 1.0)


def test_select_invalid_t():
    D = gl.build_orthonormal(2)
    r = el([1.0, 0.0], D.geometry)
    for t in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            gl.select(r, D, t)


# ---------------------------------------------------------------------------
# serialization


def test_dictionary_json_roundtrip(tmp_path):
    D = gl.build_random_unit(3, 7, seed=13, label="demo")
    obj = D.to_json()
    assert obj["kind"] == "hilbert" and obj["p"] is None and obj["n"] == 3
    D2 = gl.Dictionary.from_json(obj)
    assert np.array_equal(D.matrix, D2.matrix)
    assert D2.label == "demo"

    g = gl.lp(1.5, 3)
    Dp = gl.build_random_unit(3, 5, seed=14, geometry=g, label="lp-demo")
    path = tmp_path / "dict.json"
    Dp.save(path)
    D3 = gl.Dictionary.load(path)
    assert np.array_equal(Dp.matrix, D3.matrix)
    assert D3.geometry == g
