import math

import numpy as np
import pytest

from qcorr.channels import KrausChannel, apply_channel, cnot, dephasing
from qcorr.entropy import binary_entropy, quantum_mutual_information
from qcorr.errors import NumericalContractError, UsageError
from qcorr.measurement import classical_mi_for, computational_basis
from qcorr.qmath import I2, DensityOperator, Layout, PureState, density_from_pure, ket, random_density
from qcorr.scenarios import dephased_bell


def bell(ac):
    return density_from_pure(PureState.from_terms({"01": 1, "10": 1}, ac))


def test_zero_dephasing_is_identity(rng, ac):
    rho = random_density(rng, ac)
    assert np.allclose(apply_channel(rho, dephasing(0.0, "A")).matrix, rho.matrix, atol=1e-15)


def test_half_dephasing_of_bell(ac):
    out = apply_channel(bell(ac), dephasing(0.5, "A"))
    expected = (np.outer(ket("01"), ket("01")) + np.outer(ket("10"), ket("10"))) / 2
    assert np.allclose(out.matrix, expected, atol=1e-15)


def test_full_dephasing_of_plus():
    plus = density_from_pure(PureState.from_terms({"0": 1, "1": 1}, Layout.qubits("A")))
    assert np.allclose(apply_channel(plus, dephasing(0.5, "A")).matrix, I2 / 2, atol=1e-15)


def test_dephasing_composition(rng, ac):
    # Z applied an odd number of times across two rounds: p' = 2 p (1 - p)
    for p in (0.1, 0.3, 0.77):
        rho = random_density(rng, ac)
        twice = apply_channel(apply_channel(rho, dephasing(p, "C")), dephasing(p, "C"))
        once = apply_channel(rho, dephasing(2 * p * (1 - p), "C"))
        assert np.max(np.abs(twice.matrix - once.matrix)) < 1e-12


def test_bell_qmi_closed_form_and_monotone():
    grid = np.linspace(0, 1, 21)
    values = [quantum_mutual_information(dephased_bell(p)) for p in grid]
    for p, v in zip(grid, values):
        assert abs(v - (2 - binary_entropy(p))) < 1e-9
    first_half = [v for p, v in zip(grid, values) if p <= 0.5]
    assert all(b <= a + 1e-9 for a, b in zip(first_half, first_half[1:]))


def test_bell_classical_correlations_survive_dephasing():
    z = computational_basis()
    for p in np.linspace(0, 1, 21):
        assert abs(classical_mi_for(dephased_bell(p), z, z) - 1.0) < 1e-9


def test_channel_outputs_are_states(rng, acr):
    for _ in range(20):
        rho = random_density(rng, acr)
        out = apply_channel(rho, dephasing(float(rng.uniform()), "R"))
        assert abs(np.trace(out.matrix) - 1) < 1e-12


def test_dephasing_range():
    with pytest.raises(UsageError):
        dephasing(1.2, "A")
    with pytest.raises(UsageError):
        dephasing(-0.01, "A")


def test_incomplete_kraus_set():
    with pytest.raises(NumericalContractError):
        KrausChannel((I2, I2), ("A",))


def test_channel_unknown_target(ac):
    with pytest.raises(UsageError):
        apply_channel(bell(ac), dephasing(0.2, "B"))


def test_cnot_truth_table(ac):
    u = cnot("A", "C", ac)
    assert np.array_equal(u @ ket("00"), ket("00"))
    assert np.array_equal(u @ ket("01"), ket("01"))
    assert np.array_equal(u @ ket("10"), ket("11"))
    assert np.array_equal(u @ ket("11"), ket("10"))


def test_cnot_is_exactly_unitary(acr):
    for c, t in (("A", "C"), ("C", "R"), ("R", "C"), ("R", "A")):
        u = cnot(c, t, acr)
        assert np.array_equal(u.conj().T @ u, np.eye(8))


def test_cnot_label_errors(ac):
    with pytest.raises(UsageError):
        cnot("A", "A", ac)
    with pytest.raises(UsageError):
        cnot("A", "Q", ac)
