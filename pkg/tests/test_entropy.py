import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcorr.entropy import (
    binary_entropy,
    entropy_balance,
    quantum_mutual_information,
    shannon,
    von_neumann,
)
from qcorr.errors import UsageError
from qcorr.qmath import (
    DensityOperator,
    Layout,
    PureState,
    apply_unitary,
    density_from_pure,
    haar_state,
    haar_unitary,
    partial_trace,
    random_density,
)
from qcorr.scenarios import w_cnot_event

H_TWO_THIRDS = 0.9182958340544896  # -(2/3)log2(2/3) - (1/3)log2(1/3)
H_W_FINAL = 0.5500477595827576  # h(1/2 + sqrt(5)/6)


def test_shannon_fair_coin():
    assert shannon([0.5, 0.5]) == 1.0


def test_shannon_w_joint_distribution():
    p = [5 / 12, 1 / 12, 1 / 12, 5 / 12]
    oracle = -2 * (5 / 12) * math.log2(5 / 12) - 2 * (1 / 12) * math.log2(1 / 12)
    assert shannon(p) == pytest.approx(oracle, abs=1e-14)
    assert shannon(p) == pytest.approx(1.65002, abs=1e-5)


def test_shannon_deterministic():
    assert shannon([1.0, 0.0]) == 0.0


def test_shannon_clamps_rounding_noise():
    assert shannon([1.0 + 5e-13, -5e-13]) == 0.0


@pytest.mark.parametrize("bad", [[0.5, 0.6], [1.2, -0.2], [], [np.nan, 1.0]])
def test_shannon_rejects_invalid(bad):
    with pytest.raises(UsageError):
        shannon(bad)


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(2 / 3) == pytest.approx(0.918296, abs=1e-6)
    assert binary_entropy(2 / 3) == pytest.approx(0.9183, abs=5e-5)
    assert binary_entropy(0.5 + math.sqrt(5) / 6) == pytest.approx(0.550048, abs=1e-6)
    assert binary_entropy(0.5 + math.sqrt(5) / 6) == pytest.approx(0.5500, abs=5e-5)


def test_binary_entropy_symmetry_grid():
    for p in np.linspace(0, 1, 1000):
        assert abs(binary_entropy(p) - binary_entropy(1 - p)) < 1e-12


@given(st.floats(0, 1))
def test_binary_entropy_bounds(p):
    h = binary_entropy(p)
    assert 0.0 <= h <= 1.0


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_binary_entropy_domain(p):
    with pytest.raises(UsageError):
        binary_entropy(p)


def test_von_neumann_pure_and_maximally_mixed():
    q = Layout.qubits("A")
    assert von_neumann(density_from_pure(PureState.from_terms({"0": 1, "1": 1}, q))) == pytest.approx(0, abs=1e-12)
    assert von_neumann(DensityOperator(np.eye(2) / 2, q)) == pytest.approx(1.0, abs=1e-12)


def test_von_neumann_of_c_after_w_event():
    _, after = w_cnot_event()
    rho_c = partial_trace(density_from_pure(after), {"C"})
    assert von_neumann(rho_c) == pytest.approx(H_W_FINAL, abs=1e-12)


def test_von_neumann_unitary_invariance(rng):
    lay = Layout.qubits("A", "C")
    for _ in range(50):
        rho = random_density(rng, lay, env_dim=int(rng.integers(1, 5)))
        u = haar_unitary(rng, 4)
        rotated = DensityOperator(u @ rho.matrix @ u.conj().T, lay)
        assert abs(von_neumann(rho) - von_neumann(rotated)) < 1e-9


def test_subadditivity(rng, ac):
    for _ in range(200):
        rho = random_density(rng, ac, env_dim=int(rng.integers(1, 5)))
        assert quantum_mutual_information(rho) >= -1e-9
        assert quantum_mutual_information(rho) <= 2 + 1e-9


def test_qmi_product_state(rng, ac):
    a = random_density(rng, Layout.qubits("A"))
    c = random_density(rng, Layout.qubits("C"))
    assert quantum_mutual_information(DensityOperator(np.kron(a.matrix, c.matrix), ac)) == pytest.approx(0, abs=1e-12)


def test_qmi_bell(ac):
    bell = density_from_pure(PureState.from_terms({"01": 1, "10": 1}, ac))
    assert quantum_mutual_information(bell) == pytest.approx(2.0, abs=1e-12)


def test_qmi_w_marginal(w_marginals):
    assert quantum_mutual_information(w_marginals[0]) == pytest.approx(H_TWO_THIRDS, abs=1e-12)


def test_qmi_traces_out_extra_subsystems(acr):
    before, _ = w_cnot_event()
    assert quantum_mutual_information(density_from_pure(before), "A", "C") == pytest.approx(H_TWO_THIRDS, abs=1e-12)
    with pytest.raises(UsageError):
        quantum_mutual_information(density_from_pure(before), "A", "A")


def test_balance_identity_event(rng, acr):
    s = haar_state(rng, acr)
    d = entropy_balance(s, s)
    assert d.ds_a == d.ds_c == d.ds_r == d.d_iq == 0.0


def test_balance_w_event():
    d = entropy_balance(*w_cnot_event())
    assert abs(d.ds_a) < 1e-12 and abs(d.ds_r) < 1e-12
    oracle = H_W_FINAL - H_TWO_THIRDS
    assert d.ds_c == pytest.approx(oracle, abs=1e-12)
    assert d.ds_c == pytest.approx(-0.3683, abs=1e-4)
    assert d.d_iq == pytest.approx(oracle, abs=1e-12)


def test_balance_residual_random_unitaries(acr):
    rng = np.random.default_rng(1)
    for _ in range(100):
        s = haar_state(rng, acr)
        after = apply_unitary(s, haar_unitary(rng, 8), acr.labels)
        assert abs(entropy_balance(s, after).residual) < 1e-9


def test_balance_layout_mismatch(acr):
    a = PureState.from_terms({"000": 1}, acr)
    b = PureState.from_terms({"000": 1}, Layout.qubits("A", "R", "C"))
    with pytest.raises(UsageError):
        entropy_balance(a, b)
