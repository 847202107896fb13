import csv
import io
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symris.geometry import (
    dicke_projector,
    dicke_projector_pdfs,
    distance_to_mms,
    hs_distance,
    histogram,
    mmd_sweep,
    mms,
    pairwise_distances_stream,
    pairwise_moments,
    pairwise_pdf,
    projector_reference,
    variety_contrast,
)
from symris.sampling import MethodParams, RngStream, generate
from symris.symspace import SymState

from conftest import random_state


def states(method, n, anc, m, seed=0):
    return [generate(MethodParams(method, n, anc), RngStream(seed, i)) for i in range(m)]


def test_hs_distance_basics():
    a, b = SymState.dicke(0, 2), SymState.dicke(2, 2)
    assert hs_distance(a, b) == pytest.approx(np.sqrt(2))
    assert hs_distance(a, a) == 0
    with pytest.raises(ValueError):
        hs_distance(np.eye(2), np.eye(3))


@settings(max_examples=60, deadline=None)
@given(
    method=st.sampled_from(["MI", "MII"]),
    n=st.integers(2, 10),
    anc=st.integers(1, 50),
    seed=st.integers(0, 2**32 - 1),
)
def test_squared_purity_identity(method, n, anc, seed):
    rho = generate(MethodParams(method, n, anc), RngStream(seed))
    assert distance_to_mms(rho) ** 2 == pytest.approx(rho.purity() - 1 / (n + 1), abs=1e-12)


def test_mms_distance_of_pure_state():
    # D^2 = 1 - 1/(N+1) for every pure state
    assert distance_to_mms(SymState.dicke(1, 4)) == pytest.approx(np.sqrt(0.8))


@pytest.mark.parametrize("n", [2, 4, 7])
def test_projector_reference(n):
    for a in range(n + 1):
        for b in range(n + 1):
            assert projector_reference(a, b, n) == pytest.approx(hs_distance(mms(n), dicke_projector(a, b, n)), abs=1e-14)


def test_pairwise_stream_matches_bruteforce(rng):
    sts = [random_state(3, rng) for _ in range(37)]
    got = np.sort(np.concatenate(list(pairwise_distances_stream(sts, block=8))))
    ref = np.sort([hs_distance(a, b) for a, b in combinations(sts, 2)])
    assert len(got) == 37 * 36 // 2
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_pairwise_pdf_normalized():
    pdf = pairwise_pdf(states("MI", 4, 12, 300), bins=50)
    assert pdf.total() == pytest.approx(1.0, abs=1e-12)
    assert pdf.n_samples == 300 * 299 // 2
    rows = list(csv.DictReader(io.StringIO(pdf.to_csv())))
    assert list(rows[0]) == ["bin_left", "bin_right", "density"]
    assert len(rows) == 50


def test_pairwise_moments(rng):
    sts = [random_state(2, rng) for _ in range(20)]
    d = np.array([hs_distance(a, b) for a, b in combinations(sts, 2)])
    mean, var, cnt = pairwise_moments(sts)
    assert cnt == 190
    assert mean == pytest.approx(d.mean())
    assert var == pytest.approx(d.var())


def test_histogram_rejects_empty():
    with pytest.raises(ValueError):
        histogram(np.zeros(3), np.arange(4.0))
    with pytest.raises(ValueError):
        pairwise_pdf(states("MI", 2, 1, 1))


def test_mmd_sweep_decreases_with_ancilla():
    sweep = mmd_sweep({a: states("MI", 4, a, 200) for a in (16, 2, 8)})
    assert [p.ancilla for p in sweep] == [2, 8, 16]
    means = [p.mean for p in sweep]
    assert means[0] > means[1] > means[2]
    assert all(p.std > 0 for p in sweep)


def test_projector_panels():
    sts = states("MII", 3, 20, 100)
    panels = dicke_projector_pdfs(sts, bins=20)
    assert len(panels) == 16
    p = panels[(1, 2)]
    direct = [hs_distance(s.matrix, dicke_projector(1, 2, 3)) for s in sts]
    assert p.mean == pytest.approx(np.mean(direct))
    assert p.reference == pytest.approx(np.sqrt(1 + 1 / 4))
    assert p.pdf.total() == pytest.approx(1.0)


def test_vacuum_vs_mms_two_qubits():
    # diag(2/3, -1/3, -1/3)
    assert hs_distance(SymState.dicke(0, 2), mms(2)) == pytest.approx(np.sqrt(2 / 3), abs=1e-15)


def test_metric_axioms(rng):
    sts = [random_state(4, rng) for _ in range(60)]
    idx = rng.integers(0, 60, size=(1000, 3))
    for i, j, k in idx:
        a, b, c = sts[i], sts[j], sts[k]
        assert hs_distance(a, b) == hs_distance(b, a)
        assert hs_distance(a, c) <= hs_distance(a, b) + hs_distance(b, c) + 1e-12


def test_pure_point_and_repeated_state():
    sweep = mmd_sweep({1: states("MII", 4, 1, 20)})
    assert sweep[0].mean ** 2 == pytest.approx(1 - 1 / 5, abs=1e-12)
    rho = states("MI", 4, 3, 1)[0]
    assert mmd_sweep({3: [rho, rho, rho]})[0].std == 0


def test_identical_pair_in_first_bin():
    rho = states("MI", 4, 3, 1)[0]
    pdf = pairwise_pdf([rho, rho], bins=10)
    assert pdf.density[0] > 0 and not pdf.density[1:].any()


def test_variety_contrast_detects_spread():
    wide = states("MI", 4, 3, 400)
    narrow = states("MII", 4, 60, 400)
    res = variety_contrast(wide, narrow)
    assert res.mean_mms[0] > res.mean_mms[1] and res.mean_pvalue < 0.01
    assert res.pair_variance[0] > res.pair_variance[1] and res.variance_pvalue < 0.01
    flipped = variety_contrast(narrow, wide)
    assert flipped.variance_pvalue > 0.99
