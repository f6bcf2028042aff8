import math

import numpy as np
import pytest

from qemlab import channels as ch
from qemlab.circuits import (
    Circuit,
    Gate,
    apply,
    apply_state,
    attach_noise,
    build_ansatz,
    check_density,
    dual_state,
    expected_errors,
    gate_matrix,
    purity,
    reversed_circuit,
    run,
    spectral_decompose,
    trace_distance,
    zero_state,
    zero_vector,
)
from qemlab.errors import NoiseRateError, RegisterCapError, SizeMismatchError


def embed(u, qubits, n):
    """Reference embedding: first listed qubit is the local MSB."""
    d = 1 << n
    m = np.zeros((d, d), dtype=complex)
    k = len(qubits)
    for i in range(d):
        loc_in = 0
        for pos, q in enumerate(qubits):
            loc_in |= ((i >> q) & 1) << (k - 1 - pos)
        rest = i
        for q in qubits:
            rest &= ~(1 << q)
        for loc_out in range(1 << k):
            j = rest
            for pos, q in enumerate(qubits):
                j |= ((loc_out >> (k - 1 - pos)) & 1) << q
            m[j, i] += u[loc_out, loc_in]
    return m


def random_density(rng, n):
    d = 1 << n
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_circuit(rng, n, depth, noise=None, seed=0):
    edges = [(i, i + 1) for i in range(n - 1)]
    c = Circuit(n)
    for _ in range(depth):
        kind = rng.choice(["rx", "rz", "h", "cz", "cx"])
        if kind in ("cz", "cx") and n >= 2:
            a, b = rng.choice(n, size=2, replace=False)
            c.add(Gate(kind, (int(a), int(b))))
        else:
            q = int(rng.integers(n))
            ang = float(rng.uniform(-np.pi, np.pi))
            c.add(Gate(kind if kind in ("rx", "rz") else "h", (q,),
                       ang if kind in ("rx", "rz") else None))
    if noise is not None:
        c = attach_noise(c, noise, seed=seed)
    return c


class TestGateApplication:
    def test_unitary_embedding_matches_reference(self):
        rng = np.random.default_rng(0)
        for n in (2, 3, 4):
            rho = random_density(rng, n)
            cases = [
                Gate("rx", (0,), 0.7), Gate("rz", (n - 1,), -1.1), Gate("h", (1,)),
                Gate("cx", (0, n - 1)), Gate("cx", (n - 1, 0)), Gate("cz", (1, 0)),
                Gate("cv", (0, 1)), Gate("swap", (0, n - 1)),
            ]
            if n >= 3:
                cases.append(Gate("cswap", (2, 0, 1)))
            for g in cases:
                u = embed(gate_matrix(g), g.qubits, n)
                want = u @ rho @ u.conj().T
                got = apply(Circuit(n, [g]), rho)
                np.testing.assert_allclose(got, want, atol=1e-12)

    def test_statevector_matches_density(self):
        rng = np.random.default_rng(1)
        c = random_circuit(rng, 3, 12)
        psi = apply_state(c, zero_vector(3))
        rho = run(c)
        np.testing.assert_allclose(np.outer(psi, psi.conj()), rho, atol=1e-12)

    def test_x_flips_zero(self):
        c = Circuit(1, [Gate("x", (0,))])
        rho = run(c)
        np.testing.assert_allclose(rho, np.array([[0, 0], [0, 1]], dtype=complex), atol=1e-14)

    def test_empty_circuit_identity(self):
        rng = np.random.default_rng(2)
        rho = random_density(rng, 2)
        np.testing.assert_allclose(apply(Circuit(2), rho), rho, atol=1e-15)

    def test_dim_mismatch(self):
        with pytest.raises(SizeMismatchError):
            apply(Circuit(2), zero_state(3))

    def test_register_cap(self):
        with pytest.raises(RegisterCapError):
            Circuit(11)

    def test_forced_x_error(self):
        c = Circuit(1, [Gate("rz", (0,), 0.0), ch.stochastic_pauli(1.0, (0,), (1.0, 0.0, 0.0))])
        rho = run(c)
        np.testing.assert_allclose(rho, np.array([[0, 0], [0, 1]], dtype=complex), atol=1e-14)

    def test_cswap_truth_table(self):
        g = Gate("cswap", (2, 1, 0))
        u = embed(gate_matrix(g), g.qubits, 3)
        # control off: nothing happens; control on: qubits 0 and 1 swap
        for i in range(8):
            v = np.zeros(8)
            v[i] = 1.0
            out = u @ v
            if (i >> 2) & 1:
                j = (i & 4) | (((i >> 1) & 1)) | ((i & 1) << 1)
            else:
                j = i
            assert abs(out[j] - 1.0) < 1e-12


class TestChannels:
    def test_kraus_completeness(self):
        rng = np.random.default_rng(3)
        cases = [
            ch.stochastic_pauli(0.3, (0,)),
            ch.amplitude_damping(0.2, (0,)),
        ]
        for _ in range(20):
            t1 = rng.uniform(10e-6, 100e-6)
            t2 = rng.uniform(0.1 * t1, 2.0 * t1)
            cases.append(ch.thermal_relaxation(t1, t2, 200e-9, 0))
        for c in cases:
            ops = ch.single_qubit_kraus(c)
            acc = sum(k.conj().T @ k for k in ops)
            np.testing.assert_allclose(acc, np.eye(2), atol=1e-10)

    def test_cptp_preserved_random_circuits(self):
        rng = np.random.default_rng(4)
        kinds = [
            ch.NoiseModel(kind="stochastic_pauli", p1=0.01),
            ch.NoiseModel(kind="global_depolarizing", p1=0.02),
            ch.NoiseModel(kind="local_depolarizing", p1=0.02),
            ch.NoiseModel(kind="amplitude_damping", p1=0.01),
            ch.NoiseModel(kind="thermal_relaxation", p1=0.01, thermal_with_pauli=True),
        ]
        count = 0
        for trial in range(200):
            n = int(rng.integers(1, 5))
            model = kinds[trial % len(kinds)]
            c = random_circuit(rng, n, 8, noise=model, seed=trial)
            rho = run(c)
            check_density(rho)
            count += 1
        assert count == 200

    def test_rate_validation(self):
        with pytest.raises(NoiseRateError):
            ch.stochastic_pauli(1.5, (0,))
        with pytest.raises(NoiseRateError):
            ch.NoiseModel(kind="stochastic_pauli", p1=0.2).amplified(10.0)

    def test_amplify_scales_rates(self):
        m = ch.NoiseModel(kind="stochastic_pauli", p1=2e-6)
        m2 = m.amplified(2.0)
        assert m2.p1 == pytest.approx(4e-6)
        assert m2.p2 == pytest.approx(4e-5)
        assert m.amplified(1.0).p1 == pytest.approx(m.p1)

    def test_amplify_triples_expected_errors(self):
        m = ch.NoiseModel(kind="stochastic_pauli", p1=1e-4)
        params = np.zeros(2 * 3 * 3)
        base = build_ansatz(3, 2, params, [(0, 1), (1, 2)])
        e1 = expected_errors(attach_noise(base, m))
        e3 = expected_errors(attach_noise(base, m.amplified(3.0)))
        assert e3 == pytest.approx(3.0 * e1, rel=1e-12)

    def test_coherent_drift_keeps_purity(self):
        rng = np.random.default_rng(5)
        model = ch.NoiseModel(kind="coherent_drift", p1=0.05)
        c = random_circuit(rng, 3, 10, noise=model, seed=9)
        rho = run(c)
        assert purity(rho) == pytest.approx(1.0, abs=1e-10)


class TestAnsatz:
    def test_gate_counts_8q(self):
        n, layers = 8, 8
        edges = [(i, i + 1) for i in range(7)]
        params = np.zeros(2 * n * (layers + 1))
        c = build_ansatz(n, layers, params, edges)
        counts = c.gate_counts()
        assert counts["1q"] == 144
        assert counts["2q"] == 56

    def test_zero_layers(self):
        c = build_ansatz(3, 0, np.zeros(6), [(0, 1), (1, 2)])
        assert c.gate_counts() == {"1q": 6}

    def test_zero_angles_give_zero_state(self):
        c = build_ansatz(3, 2, np.zeros(18), [(0, 1), (1, 2)])
        rho = run(c)
        np.testing.assert_allclose(rho, zero_state(3), atol=1e-12)

    def test_wrong_param_count(self):
        with pytest.raises(ValueError):
            build_ansatz(3, 2, np.zeros(5), [(0, 1)])

    def test_brickwork_order(self):
        params = np.zeros(2 * 4 * 2)
        c = build_ansatz(4, 1, params, [(0, 1), (1, 2), (2, 3)])
        czs = [g.qubits for g in c.gates() if g.name == "cz"]
        assert czs == [(0, 1), (2, 3), (1, 2)]


class TestReversedAndDual:
    def test_noiseless_reverse_uncomputes(self):
        rng = np.random.default_rng(6)
        c = random_circuit(rng, 3, 15)
        rho = run(c)
        back = apply(reversed_circuit(c), rho)
        np.testing.assert_allclose(back, zero_state(3), atol=1e-10)

    def test_depth_one_rx(self):
        c = Circuit(1, [Gate("rx", (0,), 0.8)])
        r = reversed_circuit(c)
        g = next(r.gates())
        assert g.name == "rx" and g.angle == pytest.approx(-0.8)

    def test_noiseless_dual_equals_state(self):
        rng = np.random.default_rng(7)
        c = random_circuit(rng, 3, 15)
        np.testing.assert_allclose(dual_state(c), run(c), atol=1e-12)

    def test_global_depolarizing_dual_fixed_point(self):
        rng = np.random.default_rng(8)
        model = ch.NoiseModel(kind="global_depolarizing", p1=0.03)
        c = random_circuit(rng, 3, 12, noise=model)
        np.testing.assert_allclose(dual_state(c), run(c), atol=1e-12)

    def test_local_depolarizing_dual_fixed_point(self):
        # 1q depolarizing after 1q gates plus joint 2q depolarizing after cz
        rng = np.random.default_rng(9)
        model = ch.NoiseModel(kind="local_depolarizing", p1=0.02)
        c = random_circuit(rng, 3, 12, noise=model)
        np.testing.assert_allclose(dual_state(c), run(c), atol=1e-12)

    def test_stochastic_pauli_channel_self_dual(self):
        c = ch.stochastic_pauli(0.1, (0, 1))
        assert c.dual() == c

    def test_postselection_identity(self):
        # Tr[rev(U(rho0)) P0] equals Tr[dual_state * state] for noisy circuits
        rng = np.random.default_rng(10)
        for trial in range(6):
            model = ch.NoiseModel(kind=["stochastic_pauli", "amplitude_damping"][trial % 2],
                                  p1=0.02)
            c = random_circuit(rng, 3, 10, noise=model, seed=trial)
            rho = run(c)
            after = apply(reversed_circuit(c), rho)
            lhs = float(np.real(after[0, 0]))
            rhs = float(np.real(np.trace(dual_state(c) @ rho)))
            assert lhs == pytest.approx(rhs, abs=1e-10)


class TestStateHelpers:
    def test_trace_distance_basics(self):
        rng = np.random.default_rng(11)
        rho = random_density(rng, 2)
        assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
        a = zero_state(1)
        b = np.array([[0, 0], [0, 1]], dtype=complex)
        assert trace_distance(a, b) == pytest.approx(1.0)

    def test_spectral_decompose(self):
        psi = np.array([1.0, 1.0, 0.0, 0.0]) / math.sqrt(2.0)
        pure = np.outer(psi, psi)
        p0, v0 = spectral_decompose(pure)[0]
        assert p0 == pytest.approx(1.0)
        assert abs(abs(np.vdot(v0, psi)) - 1.0) < 1e-10
        mixed = np.eye(4, dtype=complex) / 4.0
        probs = [p for p, _ in spectral_decompose(mixed)]
        np.testing.assert_allclose(probs, [0.25] * 4)

    def test_dominant_probability_closed_form(self):
        psi = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
        rho = 0.9 * np.outer(psi, psi.conj()) + 0.1 * np.eye(4) / 4.0
        p0, _ = spectral_decompose(rho)[0]
        assert p0 == pytest.approx(0.925)

    def test_dump_mentions_every_op(self):
        c = Circuit(2, [Gate("rx", (0,), 0.3), ch.stochastic_pauli(0.1, (0,)), Gate("cz", (0, 1))])
        text = c.dump()
        assert text.count("\n") == 2
        assert "stochastic_pauli" in text and "cz" in text
