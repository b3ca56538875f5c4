import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from qaoa_coloring.graphlib import Graph, complete_graph, conflict_counts, reference_instance
from qaoa_coloring.hamiltonian import ColoringInstance, Encoding, ZPolynomial
from qaoa_coloring.qaoa import (
    CSV_COLUMNS,
    Ansatz,
    GradientMethod,
    OptimizerConfig,
    ParameterSet,
    estimate_expectation,
    exact_expectation,
    gradient,
    optimize,
    prepare_state,
    prob_valid,
    read_run_csv,
)
from qaoa_coloring.simulator import Statevector
from qaoa_coloring.verification import random_zpolynomial

PS = OptimizerConfig(gradient_method=GradientMethod.PARAMETER_SHIFT)
FD = OptimizerConfig(gradient_method=GradientMethod.FINITE_DIFFERENCE)


def reference_a(encoding=Encoding.BINARY):
    g, k = reference_instance("A")
    return ColoringInstance.unit_excitation(g, k, encoding)


def dense_qaoa_state(h: ZPolynomial, theta: ParameterSet) -> np.ndarray:
    """Independent oracle: explicit 2^N x 2^N matrices for every layer."""
    from scipy.linalg import expm

    n = h.num_qubits
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    mixer = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n):
        term = np.array([[1.0 + 0j]])
        for i in range(n):
            term = np.kron(term, x if i == q else np.eye(2))
        mixer += term
    cost = np.diag(h.diagonal().astype(complex))
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for b, g in zip(theta.beta, theta.gamma):
        psi = expm(-1j * g * mixer) @ (expm(-1j * b * cost) @ psi)
    return psi


def fidelity(a, b):
    return abs(np.vdot(a, b)) ** 2


class TestParameterSet:
    def test_vector_round_trip(self):
        theta = ParameterSet((0.1, 0.2), (0.3, 0.4))
        assert theta.to_vector().tolist() == [0.1, 0.2, 0.3, 0.4]
        assert ParameterSet.from_vector(theta.to_vector()) == theta

    def test_rejects_mismatch_and_nan(self):
        with pytest.raises(ValueError):
            ParameterSet((0.1,), (0.2, 0.3))
        with pytest.raises(ValueError):
            ParameterSet((float("nan"),), (0.0,))
        with pytest.raises(ValueError):
            ParameterSet.from_vector([0.1, 0.2, 0.3])

    def test_ansatz_checks_depth(self):
        a = Ansatz(ZPolynomial.z(1, 0), 2)
        with pytest.raises(ValueError):
            exact_expectation(a, ParameterSet.zeros(1))
        with pytest.raises(ValueError):
            Ansatz(ZPolynomial.z(1, 0), 0)


class TestPrepareState:
    def test_zero_angles_give_uniform_state(self):
        a = Ansatz(random_zpolynomial(np.random.default_rng(0), 4, 5), 3)
        s = prepare_state(a, ParameterSet.zeros(3))
        assert np.allclose(s.amplitudes, 0.25)

    def test_gamma_half_pi_is_global_phase(self):
        h = random_zpolynomial(np.random.default_rng(1), 4, 5)
        a = Ansatz(h, 1)
        s = prepare_state(a, ParameterSet((0.0,), (np.pi / 2,)))
        assert fidelity(s.amplitudes, Statevector.plus(4).amplitudes) == pytest.approx(1.0)
        assert exact_expectation(a, ParameterSet((0.0,), (np.pi / 2,))) == pytest.approx(h.constant)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_matches_dense_oracle(self, n, p, seed):
        rng = np.random.default_rng(seed)
        h = random_zpolynomial(rng, n, 6)
        theta = ParameterSet.from_vector(rng.uniform(-np.pi, np.pi, 2 * p))
        a = Ansatz(h, p)
        assert fidelity(prepare_state(a, theta).amplitudes, dense_qaoa_state(h, theta)) == pytest.approx(1.0)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_gate_path_matches_fast_path(self, n, p, seed):
        rng = np.random.default_rng(seed)
        a = Ansatz(random_zpolynomial(rng, n, 6), p)
        theta = ParameterSet.from_vector(rng.uniform(-np.pi, np.pi, 2 * p))
        fast = prepare_state(a, theta).amplitudes
        gates = prepare_state(a, theta, use_gates=True).amplitudes
        assert fidelity(fast, gates) == pytest.approx(1.0, abs=1e-12)

    def test_reference_a_level_depths(self):
        # one cost layer plus the RX layer; the binary level is deeper but narrower
        depths = {enc: Ansatz(reference_a(enc).hamiltonian(), 1).level_circuit(0.1, 0.2).depth() for enc in Encoding}
        assert depths[Encoding.ONEHOT] == 17
        assert depths[Encoding.BINARY] == 33

    def test_circuit_structure(self):
        a = Ansatz(ZPolynomial.z(4, 0, 1, 2, 3), 2)
        c = a.circuit(ParameterSet((0.1, 0.2), (0.3, 0.4)))
        assert c.count("H") == 4 and c.count("RX") == 8 and c.count("CX") == 12 and c.count("RZ") == 2


class TestExactExpectation:
    def test_zero_angles_give_mean_diagonal(self):
        h = random_zpolynomial(np.random.default_rng(2), 5, 6)
        assert exact_expectation(Ansatz(h, 2), ParameterSet.zeros(2)) == pytest.approx(h.diagonal().mean())

    @pytest.mark.parametrize("seed", range(4))
    def test_periodicity(self, seed):
        rng = np.random.default_rng(seed)
        # integer coefficients make the cost phase 2 pi periodic in beta
        h = ZPolynomial(3, {(0,): 1.0, (1, 2): -2.0, (0, 1, 2): 3.0}, 0.5)
        a = Ansatz(h, 2)
        v = rng.uniform(-1, 1, 4)
        e0 = exact_expectation(a, ParameterSet.from_vector(v))
        for i in range(4):
            for shift in (np.pi, 2 * np.pi) if i >= 2 else (2 * np.pi,):
                w = v.copy()
                w[i] += shift
                assert exact_expectation(a, ParameterSet.from_vector(w)) == pytest.approx(e0, abs=1e-10)


def basis_fixture(n):
    """Cost sum(Z_q) with beta = gamma = pi/4 rotates |+> onto a basis state."""
    h = ZPolynomial(n, {(q,): 1.0 for q in range(n)}, 0.25)
    return Ansatz(h, 1), ParameterSet((np.pi / 4,), (np.pi / 4,))


class TestEstimator:
    def test_basis_fixture_is_exact(self):
        a, theta = basis_fixture(4)
        probs = prepare_state(a, theta).probabilities()
        assert probs.max() == pytest.approx(1.0)
        exact = exact_expectation(a, theta)
        for shots in (1, 7, 100):
            assert estimate_expectation(a, theta, shots, seed=shots) == pytest.approx(exact, abs=1e-9)

    def test_large_shot_estimate_within_five_standard_errors(self):
        rng = np.random.default_rng(3)
        a = Ansatz(random_zpolynomial(rng, 6, 8), 2)
        theta = ParameterSet.from_vector(rng.uniform(-1, 1, 4))
        probs = prepare_state(a, theta).probabilities()
        exact = float(probs @ a.diagonal)
        sd = np.sqrt(probs @ (a.diagonal - exact) ** 2)
        shots = 100_000
        assert abs(estimate_expectation(a, theta, shots, seed=11) - exact) < 5 * sd / np.sqrt(shots)

    def test_seed_reproducible(self):
        a, _ = basis_fixture(3)
        theta = ParameterSet((0.3,), (0.2,))
        assert estimate_expectation(a, theta, 50, seed=5) == estimate_expectation(a, theta, 50, seed=5)


class TestGradient:
    def test_constant_cost_has_zero_gradient(self):
        a = Ansatz(ZPolynomial.identity(3, 2.0), 2)
        theta = ParameterSet((0.3, -0.4), (0.7, 1.1))
        assert np.allclose(gradient(a, theta, PS), 0.0, atol=1e-14)
        assert np.allclose(gradient(a, theta, FD), 0.0, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_parameter_shift_matches_finite_difference_two_qubits(self, seed):
        rng = np.random.default_rng(seed)
        a = Ansatz(random_zpolynomial(rng, 2, 3), 1)
        theta = ParameterSet.from_vector(rng.uniform(-np.pi, np.pi, 2))
        assert np.max(np.abs(gradient(a, theta, PS) - gradient(a, theta, FD))) < 1e-5

    def test_vanishes_at_located_minimum(self):
        h = ZPolynomial(2, {(0,): 0.3, (1,): -0.7, (0, 1): 1.1}, 0.2)
        a = Ansatz(h, 1)
        grid = np.linspace(-np.pi, np.pi, 121)
        energies = np.array([[exact_expectation(a, ParameterSet((b,), (g,))) for g in grid] for b in grid])
        i, j = np.unravel_index(energies.argmin(), energies.shape)
        res = minimize(lambda v: exact_expectation(a, ParameterSet.from_vector(v)), [grid[i], grid[j]],
                       method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 5000})
        assert np.linalg.norm(gradient(a, ParameterSet.from_vector(res.x), PS)) <= 1e-4

    @pytest.mark.parametrize("encoding", list(Encoding))
    def test_reference_instance_against_richardson(self, encoding):
        # extrapolated central differences remove the O(h^2) truncation error
        a = Ansatz(reference_a(encoding).hamiltonian(), 2)
        v = np.random.default_rng(4).uniform(-0.5, 0.5, 4)
        ps = gradient(a, ParameterSet.from_vector(v), PS)

        def central(h):
            out = np.zeros_like(v)
            for i in range(v.size):
                e = np.zeros_like(v)
                e[i] = h
                out[i] = (exact_expectation(a, ParameterSet.from_vector(v + e))
                          - exact_expectation(a, ParameterSet.from_vector(v - e))) / (2 * h)
            return out

        richardson = (4 * central(1e-3) - central(2e-3)) / 3
        assert np.max(np.abs(ps - richardson)) < 1e-6

    def test_shot_gradient_is_unbiased(self):
        rng = np.random.default_rng(5)
        a = Ansatz(random_zpolynomial(rng, 3, 4), 1)
        theta = ParameterSet.from_vector(rng.uniform(-1, 1, 2))
        exact = gradient(a, theta, PS)
        cfg = OptimizerConfig(shots=200)
        draws = np.array([gradient(a, theta, cfg, np.random.default_rng(s)) for s in range(400)])
        stderr = draws.std(axis=0, ddof=1) / np.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - exact) < 5 * stderr + 1e-12)


class TestOptimizerConfig:
    def test_defaults(self):
        cfg = OptimizerConfig()
        assert (cfg.learning_rate, cfg.momentum, cfg.stop_gap, cfg.max_iterations) == (0.05, 0.9, 0.75, 500)

    @pytest.mark.parametrize("kwargs", [{"learning_rate": -1}, {"momentum": 1.0}, {"shots": -1},
                                        {"stop_gap": -0.1}, {"max_iterations": -1},
                                        {"shots": 10, "gradient_method": "fd"}])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            OptimizerConfig(**kwargs)


class TestOptimize:
    def test_single_qubit_reaches_ground_state(self):
        a = Ansatz(ZPolynomial.z(1, 0), 1)
        record = optimize(a, OptimizerConfig(max_iterations=200, stop_gap=0.01))
        assert record.final.energy <= -0.99
        assert record.final.iter <= 200

    def test_zero_learning_rate_is_flat(self):
        a = Ansatz(random_zpolynomial(np.random.default_rng(6), 3, 4), 2)
        start = ParameterSet((0.1, 0.2), (0.3, 0.4))
        record = optimize(a, OptimizerConfig(learning_rate=0.0, max_iterations=10, stop_gap=0.0), initial=start)
        assert record.final_parameters == start
        assert np.ptp(record.energies()) == 0.0
        assert len(record.rows) == 11

    def test_reference_a_binary_converges_for_most_seeds(self):
        a = Ansatz(reference_a().hamiltonian(), 6)
        hits = [optimize(a, OptimizerConfig(seed=s), reference_a()).converged for s in range(5)]
        assert sum(hits) >= 3

    def test_seed_determinism(self):
        inst = reference_a()
        a = Ansatz(inst.hamiltonian(), 2)
        cfg = OptimizerConfig(max_iterations=20, shots=50, seed=3)
        r1, r2 = optimize(a, cfg, inst), optimize(a, cfg, inst)
        assert r1.to_csv(include_elapsed=False) == r2.to_csv(include_elapsed=False)
        r3 = optimize(a, OptimizerConfig(max_iterations=20, shots=50, seed=4), inst)
        assert r3.to_csv(include_elapsed=False) != r1.to_csv(include_elapsed=False)

    def test_stops_at_threshold(self):
        inst = reference_a()
        a = Ansatz(inst.hamiltonian(), 6)
        record = optimize(a, OptimizerConfig(seed=0), inst)
        assert record.converged and record.final.gap <= 0.75
        assert all(r.gap > 0.75 for r in record.rows[:-1])
        assert record.iterations_to_threshold == record.final.iter

    def test_csv_round_trip(self, tmp_path):
        inst = reference_a()
        record = optimize(Ansatz(inst.hamiltonian(), 1), OptimizerConfig(max_iterations=5, stop_gap=0.0), inst)
        record.write_csv(tmp_path / "run.csv")
        meta, rows = read_run_csv(tmp_path / "run.csv")
        assert meta["encoding"] == "binary" and meta["num_qubits"] == "8"
        assert [r.energy for r in rows] == [r.energy for r in record.rows]
        header = [ln for ln in (tmp_path / "run.csv").read_text().splitlines() if not ln.startswith("#")][0]
        assert tuple(header.split(",")) == CSV_COLUMNS


class TestProbValid:
    def test_uniform_triangle_k4_binary(self):
        # 4 * 3 * 2 proper colorings of a triangle out of 4^3 codes
        inst = ColoringInstance(complete_graph(3), 4)
        assert prob_valid(Statevector.plus(6), inst) == pytest.approx(24 / 64, abs=1e-12)

    def test_uniform_path_k4_binary(self):
        # a 3-node path has 4 * 3 * 3 proper colorings
        inst = ColoringInstance(Graph(3, ((0, 1), (1, 2))), 4)
        assert prob_valid(Statevector.plus(6), inst) == pytest.approx(36 / 64, abs=1e-12)

    def test_proper_basis_state(self):
        inst = ColoringInstance(complete_graph(3), 4)
        # colors (0, 1, 3) -> codes 00 01 11
        assert prob_valid(Statevector.basis(6, "000111"), inst) == 1.0
        assert prob_valid(Statevector.basis(6, "000011"), inst) == 0.0

    def test_onehot_all_zero_state(self):
        inst = ColoringInstance(complete_graph(3), 3, Encoding.ONEHOT)
        assert prob_valid(Statevector.zero(9), inst) == 0.0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 4), st.sampled_from(list(Encoding)), st.data())
    def test_uniform_matches_counting(self, n, enc, data):
        k = data.draw(st.integers(2, 3))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        edges = data.draw(st.lists(st.sampled_from(pairs), unique=True))
        g = Graph(n, tuple(edges))
        inst = ColoringInstance(g, k, enc)
        proper = np.count_nonzero(conflict_counts(g, k) == 0)
        got = prob_valid(Statevector.plus(inst.num_qubits), inst)
        assert got == pytest.approx(proper / 2**inst.num_qubits, abs=1e-12)

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            prob_valid(Statevector.plus(3), ColoringInstance(complete_graph(3), 4))
