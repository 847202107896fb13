import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symris.spectra import TAU_PPT, PartitionFlags, partial_transpose, ppt_flags, pt_spectrum
from symris.symspace import SymState, partial_transpose_full, to_full_space

from conftest import random_state


def full_pt_spectrum(rho: SymState, k: int) -> np.ndarray:
    return np.linalg.eigvalsh(partial_transpose_full(to_full_space(rho), rho.n_qubits, k))


def padded(spec: np.ndarray, size: int) -> np.ndarray:
    return np.sort(np.concatenate([spec, np.zeros(size - len(spec))]))


@pytest.mark.parametrize("n", range(2, 8))
def test_full_space_oracle(n, rng):
    for _ in range(4):
        rho = random_state(n, rng)
        for k in range(1, n // 2 + 1):
            np.testing.assert_allclose(padded(pt_spectrum(rho, k), 2**n), full_pt_spectrum(rho, k), atol=1e-10)


def test_dicke_two_of_four():
    # |D^2_4>: every cut is NPT
    rho = SymState.dicke(2, 4)
    flags = ppt_flags(rho)
    assert flags.all_npt
    for k in (1, 2):
        assert flags.min_eig[k] == pytest.approx(full_pt_spectrum(rho, k)[0], abs=1e-12)
    # closed form for k=1: c(0,2) c(1,1) = sqrt(1/2) sqrt(1/2)
    assert flags.min_eig[1] == pytest.approx(-0.5, abs=1e-12)


def test_mms_is_ppt():
    for n in range(2, 9):
        flags = ppt_flags(SymState.maximally_mixed(n))
        assert flags.all_ppt
        assert min(flags.min_eig.values()) >= 0


def test_product_state_spectrum():
    rho = SymState.dicke(0, 5)
    for k in (1, 2):
        spec = pt_spectrum(rho, k)
        np.testing.assert_allclose(np.sort(spec)[-1], 1)
        np.testing.assert_allclose(np.sort(spec)[:-1], 0, atol=1e-15)


def test_pt_trace_preserved(rng):
    rho = random_state(6, rng)
    for k in (1, 2, 3):
        assert np.trace(partial_transpose(rho, k)).real == pytest.approx(1, abs=1e-14)


class TestFlags:
    def test_threshold(self):
        flags = PartitionFlags(4, {1: -0.5 * TAU_PPT, 2: -2 * TAU_PPT})
        assert flags.ppt == {1: True, 2: False}
        assert flags.ppt_cuts == (1,)
        assert not flags.all_ppt and not flags.all_npt
        assert flags.labels() == {1: "PPT", 2: "NPT"}

    def test_tau_override(self):
        rho = random_state(4, np.random.default_rng(1))
        lam = min(ppt_flags(rho).min_eig.values())
        if lam < 0:
            assert ppt_flags(rho, tau=abs(lam) * 2).all_ppt


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 2**32 - 1))
def test_pt_is_hermitian_and_unit_trace(n, seed):
    rho = random_state(n, np.random.default_rng(seed))
    for k in range(1, n // 2 + 1):
        mt = partial_transpose(rho, k)
        np.testing.assert_allclose(mt, mt.conj().T, atol=1e-15)
        assert np.sum(pt_spectrum(rho, k)) == pytest.approx(1, abs=1e-12)
