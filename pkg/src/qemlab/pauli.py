"""Exact symbolic algebra over n-qubit Pauli strings.

A string is spelled with one letter per qubit, qubit 0 first: "XZI" puts X
on qubit 0 and Z on qubit 1.  Matrix representations are little-endian, so
qubit 0 is the least significant bit of a computational-basis index.

Internally a string is a pair of bit masks (x, z) with the hermitian
convention P = i^{|x & z|} X^x Z^z, which makes every stored string its own
adjoint and keeps products down to integer xors plus a phase exponent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import PartitionError, SizeMismatchError

DROP_TOL = 1e-12

_MAT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _axes_to_masks(axes: str) -> tuple[int, int]:
    x = z = 0
    for q, ch in enumerate(axes):
        if ch == "X":
            x |= 1 << q
        elif ch == "Y":
            x |= 1 << q
            z |= 1 << q
        elif ch == "Z":
            z |= 1 << q
        elif ch != "I":
            raise ValueError(f"bad Pauli letter {ch!r} in {axes!r}")
    return x, z


def _masks_to_axes(x: int, z: int, n: int) -> str:
    out = []
    for q in range(n):
        bx = (x >> q) & 1
        bz = (z >> q) & 1
        out.append("IXZY"[bx + 2 * bz] if bx + 2 * bz != 3 else "Y")
    return "".join(out)


def _mask_mul(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, complex]:
    """Product of hermitian-convention strings; returns (x, z, phase)."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    t = (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (z1 & x2).bit_count()
    ) % 4
    return x3, z3, _I_POW[t]


@dataclass(frozen=True)
class PauliTerm:
    """A single Pauli string with a complex coefficient."""

    axes: str
    coeff: complex = 1.0

    def __post_init__(self) -> None:
        if any(ch not in "IXYZ" for ch in self.axes):
            raise ValueError(f"bad axes string {self.axes!r}")
        c = complex(self.coeff)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "coeff", c)

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def is_identity(self) -> bool:
        return set(self.axes) <= {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, ch in enumerate(self.axes) if ch != "I")

    def matrix(self) -> np.ndarray:
        """Dense matrix, little-endian (qubit 0 is the LSB)."""
        return self.coeff * term_matrix(self.axes)

    def __repr__(self) -> str:
        return f"PauliTerm({self.axes!r}, {self.coeff!r})"


def pauli_mul(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Exact product a * b as a single term."""
    if a.n != b.n:
        raise SizeMismatchError(f"register sizes differ: {a.n} vs {b.n}")
    x1, z1 = _axes_to_masks(a.axes)
    x2, z2 = _axes_to_masks(b.axes)
    x3, z3, phase = _mask_mul(x1, z1, x2, z2)
    return PauliTerm(_masks_to_axes(x3, z3, a.n), a.coeff * b.coeff * phase)


class PauliSum:
    """Canonical merged sum of Pauli strings, keyed on the axes pattern."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Iterable[PauliTerm] = (), drop_tol: float = DROP_TOL):
        self.n = n
        self._terms: dict[tuple[int, int], complex] = {}
        for t in terms:
            if t.n != n:
                raise SizeMismatchError(f"term on {t.n} qubits added to {n}-qubit sum")
            k = _axes_to_masks(t.axes)
            self._terms[k] = self._terms.get(k, 0.0) + t.coeff
        self._drop(drop_tol)

    def _drop(self, tol: float) -> None:
        dead = [k for k, c in self._terms.items() if abs(c) < tol]
        for k in dead:
            del self._terms[k]

    @classmethod
    def _from_masks(cls, n: int, masks: dict[tuple[int, int], complex], drop_tol: float = DROP_TOL) -> "PauliSum":
        s = cls.__new__(cls)
        s.n = n
        s._terms = dict(masks)
        s._drop(drop_tol)
        return s

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        for (x, z) in sorted(self._terms):
            yield PauliTerm(_masks_to_axes(x, z, self.n), self._terms[(x, z)])

    def coefficient(self, axes: str) -> complex:
        return self._terms.get(_axes_to_masks(axes), 0.0)

    @property
    def identity_coefficient(self) -> complex:
        return self._terms.get((0, 0), 0.0)

    def axes_patterns(self) -> list[str]:
        return [_masks_to_axes(x, z, self.n) for (x, z) in sorted(self._terms)]

    def weight(self) -> float:
        """Sum of coefficient magnitudes."""
        return float(sum(abs(c) for c in self._terms.values()))

    def scaled(self, factor: complex) -> "PauliSum":
        return PauliSum._from_masks(self.n, {k: factor * c for k, c in self._terms.items()})

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n != other.n:
            raise SizeMismatchError("cannot add sums on different registers")
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0.0) + c
        return PauliSum._from_masks(self.n, out)

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return sum_mul(self, other)

    def matrix(self) -> np.ndarray:
        d = 1 << self.n
        m = np.zeros((d, d), dtype=complex)
        for t in self:
            m += t.matrix()
        return m

    def serialize(self) -> str:
        """One term per line: `<coeff_re> <coeff_im> <axes>`."""
        lines = []
        for t in self:
            lines.append(f"{t.coeff.real:.17g} {t.coeff.imag:.17g} {t.axes}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str) -> "PauliSum":
        terms = []
        n = None
        for line in text.strip().splitlines():
            re_s, im_s, axes = line.split()
            if n is None:
                n = len(axes)
            terms.append(PauliTerm(axes, complex(float(re_s), float(im_s))))
        if n is None:
            raise ValueError("empty serialization")
        return cls(n, terms)

    def __repr__(self) -> str:
        return f"PauliSum(n={self.n}, terms={len(self)})"


def sum_mul(a: PauliSum, b: PauliSum, drop_tol: float = DROP_TOL) -> PauliSum:
    """Merged product of two sums."""
    if a.n != b.n:
        raise SizeMismatchError("cannot multiply sums on different registers")
    out: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a._terms.items():
        for (x2, z2), c2 in b._terms.items():
            x3, z3, phase = _mask_mul(x1, z1, x2, z2)
            k = (x3, z3)
            out[k] = out.get(k, 0.0) + c1 * c2 * phase
    return PauliSum._from_masks(a.n, out, drop_tol)


def sum_pow(h: PauliSum, k: int, drop_tol: float = DROP_TOL) -> PauliSum:
    """Canonical merged expansion of h**k; k = 0 gives the identity string."""
    if k < 0:
        raise ValueError("power must be non-negative")
    acc = PauliSum(h.n, [PauliTerm("I" * h.n, 1.0)])
    for _ in range(k):
        acc = sum_mul(acc, h, drop_tol)
    return acc


class PowerTable:
    """Caches successive powers of one Hamiltonian."""

    def __init__(self, h: PauliSum, drop_tol: float = DROP_TOL):
        self.h = h
        self.drop_tol = drop_tol
        self._powers: list[PauliSum] = [PauliSum(h.n, [PauliTerm("I" * h.n, 1.0)])]

    def power(self, k: int) -> PauliSum:
        while len(self._powers) <= k:
            self._powers.append(sum_mul(self._powers[-1], self.h, self.drop_tol))
        return self._powers[k]


@dataclass(frozen=True)
class SystemPartition:
    """Ordered disjoint qubit blocks covering the whole register."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        flat = [q for b in self.blocks for q in b]
        if not self.blocks or any(len(b) == 0 for b in self.blocks):
            raise PartitionError("blocks must be non-empty")
        if len(set(flat)) != len(flat):
            raise PartitionError("blocks overlap")
        if set(flat) != set(range(len(flat))):
            raise PartitionError("blocks must cover qubits 0..n-1")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


def factorize(p: PauliTerm, part: SystemPartition) -> list[PauliTerm]:
    """Split a string into per-block substrings.

    The coefficient rides on the first factor; tensoring the factors back
    together (respecting the block qubit order) reproduces the input.
    """
    if part.n != p.n:
        raise PartitionError(f"partition covers {part.n} qubits, term has {p.n}")
    out = []
    for i, block in enumerate(part.blocks):
        sub = "".join(p.axes[q] for q in block)
        out.append(PauliTerm(sub, p.coeff if i == 0 else 1.0))
    return out


def build_ising(edges: Iterable[tuple[int, int]], n: int) -> PauliSum:
    """Transverse-field Ising Hamiltonian: -ZZ on each edge, -X on each site."""
    terms = []
    for (a, b) in edges:
        if not (0 <= a < n and 0 <= b < n) or a == b:
            raise ValueError(f"edge ({a}, {b}) out of range for n={n}")
        axes = "".join("Z" if q in (a, b) else "I" for q in range(n))
        terms.append(PauliTerm(axes, -1.0))
    for q in range(n):
        axes = "".join("X" if j == q else "I" for j in range(n))
        terms.append(PauliTerm(axes, -1.0))
    return PauliSum(n, terms)


def term_matrix(axes: str) -> np.ndarray:
    """Unit-coefficient dense matrix for an axes pattern (little-endian)."""
    m = np.array([[1.0 + 0.0j]])
    for q in range(len(axes) - 1, -1, -1):
        m = np.kron(m, _MAT[axes[q]])
    return m


def bit_parity(v: np.ndarray) -> np.ndarray:
    """Bit parity of each entry of an integer array."""
    v = v.copy()
    out = np.zeros_like(v)
    while np.any(v):
        out ^= v & 1
        v >>= 1
    return out


def expect_pauli(rho: np.ndarray, axes: str) -> complex:
    """Tr[rho P] for a unit-coefficient string, in O(dim) time.

    P|i> = phase * (-1)^{|i & z|} |i ^ x| with phase = i^{#Y}, so the trace
    collapses to a single gather along the matched off-diagonal.
    """
    n = len(axes)
    d = 1 << n
    if rho.shape != (d, d):
        raise SizeMismatchError(f"operator dim {rho.shape} vs {n} qubits")
    x, z = _axes_to_masks(axes)
    ny = (x & z).bit_count()
    idx = np.arange(d)
    signs = 1 - 2 * bit_parity(idx & z)
    phase = _I_POW[ny % 4]
    return complex(phase * np.sum(signs * rho[idx, idx ^ x]))


def sandwich_pauli(a: np.ndarray, axes: str) -> np.ndarray:
    """P a P for a unit-coefficient string, by index gathers."""
    n = len(axes)
    d = 1 << n
    if a.shape != (d, d):
        raise SizeMismatchError(f"operator dim {a.shape} vs {n} qubits")
    x, z = _axes_to_masks(axes)
    idx = np.arange(d)
    signs = (1 - 2 * bit_parity(idx & z)).astype(complex)
    perm = idx ^ x
    # (P A P)_{ij} = i^{2#Y} (-1)^{|(i^x)&z| + |j&z|} A[i^x, j^x]
    out = a[np.ix_(perm, perm)] * np.outer(signs[perm], signs)
    if (x & z).bit_count() % 2:
        out = -out
    return out
