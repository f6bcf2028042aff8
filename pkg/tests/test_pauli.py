import numpy as np
import pytest

from qemlab.errors import PartitionError, SizeMismatchError
from qemlab.pauli import (
    PauliSum,
    PauliTerm,
    PowerTable,
    SystemPartition,
    build_ising,
    expect_pauli,
    factorize,
    pauli_mul,
    sandwich_pauli,
    sum_mul,
    sum_pow,
    term_matrix,
)

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def random_term(rng, n, unit=False):
    axes = "".join(rng.choice(list("IXYZ")) for _ in range(n))
    coeff = 1.0 if unit else complex(rng.standard_normal(), rng.standard_normal())
    return PauliTerm(axes, coeff)


class TestPauliMul:
    def test_xy_gives_iz(self):
        a = PauliTerm("XI")
        b = PauliTerm("YI")
        c = pauli_mul(a, b)
        assert c.axes == "ZI"
        assert c.coeff == pytest.approx(1j)

    def test_involution(self):
        for axes in ["X", "Y", "Z", "XYZ", "ZZYX"]:
            p = PauliTerm(axes)
            sq = pauli_mul(p, p)
            assert sq.axes == "I" * len(axes)
            assert sq.coeff == pytest.approx(1.0)

    def test_phase_table_closure(self):
        # every single-qubit pair multiplies to phase in {1, i, -1, -i}
        # and matches the dense 2x2 product
        for a in "IXYZ":
            for b in "IXYZ":
                prod = pauli_mul(PauliTerm(a), PauliTerm(b))
                dense = PAULI_1Q[a] @ PAULI_1Q[b]
                assert prod.coeff in (1, 1j, -1, -1j) or abs(abs(prod.coeff) - 1) < 1e-15
                np.testing.assert_allclose(prod.matrix(), dense, atol=1e-15)

    def test_matches_dense_product_random(self):
        rng = np.random.default_rng(7)
        for _ in range(120):
            n = int(rng.integers(1, 5))
            a, b = random_term(rng, n), random_term(rng, n)
            got = pauli_mul(a, b).matrix()
            want = a.matrix() @ b.matrix()
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatchError):
            pauli_mul(PauliTerm("X"), PauliTerm("XX"))


class TestPauliTerm:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PauliTerm("X", float("nan"))

    def test_rejects_bad_letter(self):
        with pytest.raises(ValueError):
            PauliTerm("A")

    def test_matrix_little_endian(self):
        # X on qubit 0 of a 2-qubit register flips the LSB
        m = PauliTerm("XI").matrix()
        want = np.kron(np.eye(2), PAULI_1Q["X"])
        np.testing.assert_allclose(m, want, atol=1e-15)


class TestPauliSum:
    def test_merging(self):
        s = PauliSum(1, [PauliTerm("X", 1.0), PauliTerm("X", 2.0), PauliTerm("Z", -1.0)])
        assert len(s) == 2
        assert s.coefficient("X") == pytest.approx(3.0)

    def test_drop_tol(self):
        s = PauliSum(1, [PauliTerm("X", 1e-15)])
        assert len(s) == 0

    def test_serialize_roundtrip(self):
        h = build_ising([(0, 1)], 2)
        text = h.serialize()
        assert "ZZ" in text
        back = PauliSum.parse(text)
        assert back.coefficient("ZZ") == pytest.approx(-1.0)
        assert back.coefficient("XI") == pytest.approx(-1.0)

    def test_weight(self):
        h = build_ising([(0, 1), (1, 2)], 3)
        assert h.weight() == pytest.approx(5.0)


class TestSumPow:
    def test_power_zero_and_one(self):
        h = build_ising([(0, 1)], 2)
        p0 = sum_pow(h, 0)
        assert len(p0) == 1 and p0.identity_coefficient == pytest.approx(1.0)
        p1 = sum_pow(h, 1)
        assert p1.coefficient("ZZ") == pytest.approx(-1.0)

    def test_two_qubit_ising_square(self):
        # (-ZZ - XI - IX)^2 = 3 I + 2 XX
        h = build_ising([(0, 1)], 2)
        p2 = sum_pow(h, 2)
        assert p2.identity_coefficient == pytest.approx(3.0)
        assert p2.coefficient("XX") == pytest.approx(2.0)
        assert len(p2) == 2

    def test_matches_dense_oracle(self):
        h = build_ising([(0, 1), (1, 2)], 3)
        hm = h.matrix()
        acc = np.eye(8, dtype=complex)
        for k in range(5):
            np.testing.assert_allclose(sum_pow(h, k).matrix(), acc, atol=1e-10)
            acc = acc @ hm

    def test_power_additivity(self):
        h = build_ising([(0, 1), (1, 2), (2, 3)], 4)
        for j, k in [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)]:
            lhs = sum_mul(sum_pow(h, j), sum_pow(h, k))
            rhs = sum_pow(h, j + k)
            for t in rhs:
                assert lhs.coefficient(t.axes) == pytest.approx(t.coeff, abs=1e-10)
            for t in lhs:
                assert rhs.coefficient(t.axes) == pytest.approx(t.coeff, abs=1e-10)

    def test_power_table_consistent(self):
        h = build_ising([(0, 1), (1, 2)], 3)
        table = PowerTable(h)
        for k in range(4):
            direct = sum_pow(h, k)
            cached = table.power(k)
            for t in direct:
                assert cached.coefficient(t.axes) == pytest.approx(t.coeff)


class TestFactorize:
    def test_literal_split(self):
        p = PauliTerm("ZZXX", 2.0)
        part = SystemPartition(((0, 1), (2, 3)))
        subs = factorize(p, part)
        assert [s.axes for s in subs] == ["ZZ", "XX"]
        assert subs[0].coeff == pytest.approx(2.0)
        assert subs[1].coeff == pytest.approx(1.0)

    def test_identity(self):
        p = PauliTerm("IIII")
        subs = factorize(p, SystemPartition(((0, 1), (2, 3))))
        assert all(s.is_identity for s in subs)

    def test_tensor_roundtrip_dense(self):
        rng = np.random.default_rng(11)
        part = SystemPartition(((0, 1, 2, 3), (4, 5, 6, 7)))
        for _ in range(5):
            p = random_term(rng, 8)
            subs = factorize(p, part)
            # contiguous blocks: kron(second, first) reproduces the full matrix
            got = np.kron(subs[1].matrix(), subs[0].matrix())
            np.testing.assert_allclose(got, p.matrix(), atol=1e-12)

    def test_partition_validation(self):
        with pytest.raises(PartitionError):
            SystemPartition(((0, 1), (1, 2)))
        with pytest.raises(PartitionError):
            SystemPartition(((0, 1), (3,)))
        with pytest.raises(PartitionError):
            factorize(PauliTerm("XX"), SystemPartition(((0, 1), (2, 3))))


class TestBuildIsing:
    def test_path_graph_8(self):
        edges = [(i, i + 1) for i in range(7)]
        h = build_ising(edges, 8)
        zz = [t for t in h if set(t.axes) == {"I", "Z"}]
        xs = [t for t in h if set(t.axes) == {"I", "X"}]
        assert len(zz) == 7 and len(xs) == 8
        assert all(t.coeff == pytest.approx(-1.0) for t in h)

    def test_single_site(self):
        h = build_ising([], 1)
        assert len(h) == 1
        assert h.coefficient("X") == pytest.approx(-1.0)

    def test_out_of_range_edge(self):
        with pytest.raises(ValueError):
            build_ising([(0, 5)], 3)


class TestFastExpectations:
    def test_expect_pauli_matches_dense(self):
        rng = np.random.default_rng(3)
        for n in (1, 2, 3, 4):
            d = 1 << n
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            for _ in range(10):
                t = random_term(rng, n, unit=True)
                got = expect_pauli(a, t.axes)
                want = np.trace(a @ term_matrix(t.axes))
                assert got == pytest.approx(want, abs=1e-10)

    def test_sandwich_matches_dense(self):
        rng = np.random.default_rng(5)
        for n in (1, 2, 3):
            d = 1 << n
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            for _ in range(10):
                t = random_term(rng, n, unit=True)
                got = sandwich_pauli(a, t.axes)
                pm = term_matrix(t.axes)
                np.testing.assert_allclose(got, pm @ a @ pm, atol=1e-10)
