"""Gates, circuits, and dense density-matrix / statevector evolution.

Qubit 0 is the least significant bit of a basis index.  A circuit is a flat
instruction stream mixing gates and channels; a channel always acts right
where it sits in the stream.  The register is capped at 10 qubits because
everything here is dense.

Three derived circuits matter for purification work:

* ``reversed_circuit``: the physical uncomputation.  Gates reversed and
  inverted, each still followed by its own noise.
* ``dual_circuit``: adjoint-Kraus dual of the uncomputation.  Gates return
  to the original order and sense, but each gate is now preceded by the
  dual of its noise.  Running it on |0..0> produces the dual state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .channels import Channel, NoiseModel, single_qubit_kraus
from .errors import RegisterCapError, SizeMismatchError

MAX_QUBITS = 10

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_S = np.diag([1.0, 1.0j]).astype(complex)
_V = 0.5 * np.array([[1.0 + 1.0j, 1.0 - 1.0j], [1.0 - 1.0j, 1.0 + 1.0j]], dtype=complex)

_FIXED_1Q = {"h": _H, "x": _X, "y": _Y, "z": _Z, "s": _S, "sdg": _S.conj().T,
             "v": _V, "vdg": _V.conj().T}
_INVERSE_1Q = {"h": "h", "x": "x", "y": "y", "z": "z", "s": "sdg", "sdg": "s",
               "v": "vdg", "vdg": "v"}


@dataclass(eq=False)
class Gate:
    """One unitary operation.

    name: rx, rz, h, x, y, z, s, sdg, v, vdg, phase, cx, cy, cz, cv, cvdg,
          swap, cswap, cpauli, or u (explicit matrix).
    qubits: acted qubits; the first listed qubit is the most significant
            bit of the local matrix (controls come first).
    angle: rotation angle for rx/rz/phase.
    payload: letters for cpauli, or the explicit matrix for u.
    """

    name: str
    qubits: tuple[int, ...]
    angle: float | None = None
    payload: object = None

    def __post_init__(self) -> None:
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in gate {self.name}")

    def matrix(self) -> np.ndarray:
        return gate_matrix(self)

    def inverse(self) -> "Gate":
        if self.name in _INVERSE_1Q:
            return Gate(_INVERSE_1Q[self.name], self.qubits)
        if self.name in ("rx", "rz", "phase"):
            return Gate(self.name, self.qubits, -self.angle)
        if self.name in ("cx", "cy", "cz", "swap", "cswap"):
            return Gate(self.name, self.qubits)
        if self.name == "cv":
            return Gate("cvdg", self.qubits)
        if self.name == "cvdg":
            return Gate("cv", self.qubits)
        if self.name == "cpauli":
            return Gate("cpauli", self.qubits, payload=self.payload)
        if self.name == "u":
            return Gate("u", self.qubits, payload=np.asarray(self.payload).conj().T)
        raise ValueError(f"cannot invert gate {self.name}")

    def generators(self) -> tuple[str, ...]:
        """Rotation generator letter per qubit, used by drift noise."""
        if self.name == "rx":
            return ("x",)
        if self.name == "rz":
            return ("z",)
        return tuple("z" for _ in self.qubits)


def gate_matrix(g: Gate) -> np.ndarray:
    if g.name in _FIXED_1Q:
        return _FIXED_1Q[g.name]
    if g.name == "rx":
        c, s = math.cos(g.angle / 2.0), math.sin(g.angle / 2.0)
        return np.array([[c, -1.0j * s], [-1.0j * s, c]], dtype=complex)
    if g.name == "rz":
        return np.diag([np.exp(-0.5j * g.angle), np.exp(0.5j * g.angle)]).astype(complex)
    if g.name == "phase":
        return np.diag([1.0, np.exp(1.0j * g.angle)]).astype(complex)
    if g.name == "cz":
        return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    if g.name == "cx":
        return _controlled(_X)
    if g.name == "cy":
        return _controlled(_Y)
    if g.name == "cv":
        return _controlled(_V)
    if g.name == "cvdg":
        return _controlled(_V.conj().T)
    if g.name == "swap":
        m = np.eye(4, dtype=complex)
        m[[1, 2]] = m[[2, 1]]
        return m
    if g.name == "cswap":
        # control is the local MSB: swap |101> and |110>
        m = np.eye(8, dtype=complex)
        m[[5, 6]] = m[[6, 5]]
        return m
    if g.name == "cpauli":
        from .pauli import term_matrix
        sub = term_matrix(str(g.payload)[::-1])  # payload letters listed MSB-first
        return _controlled(sub)
    if g.name == "u":
        return np.asarray(g.payload, dtype=complex)
    raise ValueError(f"unknown gate {g.name}")


def _controlled(u: np.ndarray) -> np.ndarray:
    k = u.shape[0]
    m = np.eye(2 * k, dtype=complex)
    m[k:, k:] = u
    return m


@dataclass
class Circuit:
    """A register size plus a flat stream of gates and channels."""

    n: int
    ops: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.n > MAX_QUBITS:
            raise RegisterCapError(f"{self.n} qubits exceeds the dense cap of {MAX_QUBITS}")

    def add(self, op) -> "Circuit":
        qs = op.qubits
        if any(q < 0 or q >= self.n for q in qs):
            raise ValueError(f"{op} addresses qubits outside 0..{self.n - 1}")
        self.ops.append(op)
        return self

    def gates(self) -> Iterator[Gate]:
        return (op for op in self.ops if isinstance(op, Gate))

    def channels(self) -> Iterator[Channel]:
        return (op for op in self.ops if isinstance(op, Channel))

    def gate_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates():
            key = "2q" if len(g.qubits) == 2 else ("1q" if len(g.qubits) == 1 else f"{len(g.qubits)}q")
            out[key] = out.get(key, 0) + 1
        return out

    def dump(self) -> str:
        """One op per line, for debugging."""
        lines = []
        for op in self.ops:
            if isinstance(op, Gate):
                extra = f" angle={op.angle:.6g}" if op.angle is not None else ""
                if op.name == "cpauli":
                    extra += f" letters={op.payload}"
                lines.append(f"gate {op.name} {list(op.qubits)}{extra}")
            else:
                tag = " dual" if op.dualized else ""
                lines.append(f"channel {op.kind} {list(op.qubits)} {op.params}{tag}")
        return "\n".join(lines)

    def copy(self) -> "Circuit":
        return Circuit(self.n, list(self.ops))


def zero_state(n: int) -> np.ndarray:
    """|0..0><0..0| on n qubits."""
    d = 1 << n
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def zero_vector(n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1.0
    return v


def _left_mul_1q(mat: np.ndarray, u: np.ndarray, q: int, d: int) -> np.ndarray:
    """U acting on the row index's bit q of a (d, m) matrix."""
    m = mat.shape[1]
    l = d >> (q + 1)
    t = mat.reshape(l, 2, (1 << q) * m)
    return np.matmul(u, t).reshape(mat.shape)


def _right_mul_1q(mat: np.ndarray, u: np.ndarray, q: int, d: int) -> np.ndarray:
    """U^dag acting on the column index's bit q of an (m, d) matrix."""
    rows = mat.shape[0]
    l = d >> (q + 1)
    t = mat.reshape(rows * l, 2, 1 << q)
    return np.matmul(u.conj(), t).reshape(mat.shape)


def _apply_1q(rho: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    d = 1 << n
    return _right_mul_1q(_left_mul_1q(rho, u, q, d), u, q, d)


def _grouped_2q(mat: np.ndarray, qa: int, qb: int, d: int, rows: bool):
    """Bit-slice views of (qa, qb) on the row or column index, qa the MSB."""
    hi, lo = (qa, qb) if qa > qb else (qb, qa)
    lh = d >> (hi + 1)
    mid = (1 << hi) >> (lo + 1)
    low = 1 << lo
    if rows:
        t = mat.reshape(lh, 2, mid, 2, low * mat.shape[1])
        def grp(va: int, vb: int):
            bh, bl = (va, vb) if qa > qb else (vb, va)
            return t[:, bh, :, bl]
    else:
        t = mat.reshape(mat.shape[0] * lh, 2, mid, 2, low)
        def grp(va: int, vb: int):
            bh, bl = (va, vb) if qa > qb else (vb, va)
            return t[:, bh, :, bl]
    return grp


def _apply_2q_side(mat: np.ndarray, u: np.ndarray, qa: int, qb: int, d: int,
                   rows: bool) -> np.ndarray:
    grp = _grouped_2q(mat, qa, qb, d, rows)
    blocks = [grp((s >> 1) & 1, s & 1) for s in range(4)]
    news = []
    for so in range(4):
        acc = None
        for si in range(4):
            c = u[so, si]
            if c != 0:
                acc = c * blocks[si] if acc is None else acc + c * blocks[si]
        news.append(acc if acc is not None else np.zeros_like(blocks[0]))
    out = np.empty_like(mat)
    ogrp = _grouped_2q(out, qa, qb, d, rows)
    for so in range(4):
        ogrp((so >> 1) & 1, so & 1)[...] = news[so]
    return out


def _apply_2q(rho: np.ndarray, u: np.ndarray, qa: int, qb: int, n: int) -> np.ndarray:
    d = 1 << n
    out = _apply_2q_side(rho, u, qa, qb, d, rows=True)
    return _apply_2q_side(out, u.conj(), qa, qb, d, rows=False)


def _apply_unitary(rho: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """U rho U^dag with U acting on the listed qubits (first = local MSB)."""
    k = len(qubits)
    if k == 1:
        return _apply_1q(rho, u, qubits[0], n)
    if k == 2:
        return _apply_2q(rho, u, qubits[0], qubits[1], n)
    t = rho.reshape((2,) * (2 * n))
    u_t = u.reshape((2,) * (2 * k))
    row_axes = [n - 1 - q for q in qubits]
    t = np.tensordot(u_t, t, axes=(list(range(k, 2 * k)), row_axes))
    t = np.moveaxis(t, list(range(k)), row_axes)
    col_axes = [2 * n - 1 - q for q in qubits]
    t = np.tensordot(t, u_t.conj(), axes=(col_axes, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), col_axes)
    return t.reshape(rho.shape)


def _apply_kraus_sum(rho: np.ndarray, ops: Sequence[np.ndarray], qubits: Sequence[int],
                     n: int) -> np.ndarray:
    out = np.zeros_like(rho)
    for kmat in ops:
        out += _apply_unitary(rho, kmat, qubits, n)
    return out


def _apply_unitary_state(psi: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    k = len(qubits)
    t = psi.reshape((2,) * n)
    u_t = u.reshape((2,) * (2 * k))
    axes = [n - 1 - q for q in qubits]
    t = np.tensordot(u_t, t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(psi.shape)


def _pauli_mix_1q(rho: np.ndarray, q: int, p: float, px: float, py: float,
                  pz: float, n: int) -> np.ndarray:
    """(1-p) rho + p (px X rho X + py Y rho Y + pz Z rho Z) on one qubit.

    Sign flips and bit flips are cheaper than gate conjugations: Z dresses
    the entries with (-1)^{row bit + col bit}, X reverses both bit axes, and
    Y is the X-flip of the Z-dressed entries.
    """
    d = 1 << n
    l = d >> (q + 1)
    r = 1 << q
    t = rho.reshape(l, 2, r, l, 2, r)
    sign_row = np.array([1.0, -1.0]).reshape(1, 2, 1, 1, 1, 1)
    sign_col = np.array([1.0, -1.0]).reshape(1, 1, 1, 1, 2, 1)
    zz = t * (sign_row * sign_col)
    xx = t[:, ::-1, :, :, ::-1, :]
    yy = zz[:, ::-1, :, :, ::-1, :]
    out = (1.0 - p) * t + (p * px) * xx + (p * py) * yy + (p * pz) * zz
    return out.reshape(d, d)


def _replace_with_mixed(rho: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Tensor I/2^k on the listed qubits against the partial trace of the rest."""
    k = len(qubits)
    d = 1 << n
    mask = 0
    for q in qubits:
        mask |= 1 << q
    idx = np.arange(d)
    # partial trace: sum rho over matched bits of the traced qubits
    keep = idx[(idx & mask) == 0]
    rest = np.zeros((len(keep), len(keep)), dtype=complex)
    offsets = [o for o in range(d) if (o & ~mask) == 0]
    for o in offsets:
        rest += rho[np.ix_(keep | o, keep | o)]
    out = np.zeros_like(rho)
    w = 1.0 / (1 << k)
    for o in offsets:
        out[np.ix_(keep | o, keep | o)] = w * rest
    return out


def apply_channel(rho: np.ndarray, ch: Channel, n: int) -> np.ndarray:
    if ch.kind == "global_depolarizing":
        # scoped to its listed qubits; an empty tuple means the whole register
        p = ch.params[0]
        if ch.qubits and len(ch.qubits) < n:
            return (1.0 - p) * rho + p * _replace_with_mixed(rho, ch.qubits, n)
        d = rho.shape[0]
        tr = np.trace(rho)
        return (1.0 - p) * rho + p * tr * np.eye(d, dtype=complex) / d
    if ch.kind == "local_depolarizing":
        p = ch.params[0]
        return (1.0 - p) * rho + p * _replace_with_mixed(rho, ch.qubits, n)
    if ch.kind == "stochastic_pauli":
        p, px, py, pz = ch.params
        out = rho
        for q in ch.qubits:
            out = _pauli_mix_1q(out, q, p, px, py, pz, n)
        return out
    if ch.kind in ("amplitude_damping", "thermal_relaxation"):
        ops = single_qubit_kraus(ch)
        out = rho
        for q in ch.qubits:
            out = _apply_kraus_sum(out, ops, (q,), n)
        return out
    if ch.kind == "coherent_drift":
        out = rho
        for gen, q, ang in ch.params:
            g = Gate("rx" if gen == "x" else "rz", (q,), -ang if ch.dualized else ang)
            out = _apply_unitary(out, g.matrix(), (q,), n)
        return out
    raise ValueError(f"unknown channel kind {ch.kind}")


def apply(circuit: Circuit, rho: np.ndarray) -> np.ndarray:
    """Run the instruction stream on a density matrix."""
    d = 1 << circuit.n
    if rho.shape != (d, d):
        raise SizeMismatchError(f"state dim {rho.shape} vs {circuit.n}-qubit circuit")
    out = rho.astype(complex, copy=True)
    for op in circuit.ops:
        if isinstance(op, Gate):
            out = _apply_unitary(out, op.matrix(), op.qubits, circuit.n)
        else:
            out = apply_channel(out, op, circuit.n)
    return out


def apply_state(circuit: Circuit, psi: np.ndarray) -> np.ndarray:
    """Run a channel-free circuit on a statevector."""
    d = 1 << circuit.n
    if psi.shape != (d,):
        raise SizeMismatchError(f"vector dim {psi.shape} vs {circuit.n}-qubit circuit")
    out = psi.astype(complex, copy=True)
    for op in circuit.ops:
        if isinstance(op, Channel):
            raise ValueError("statevector path cannot run channels")
        out = _apply_unitary_state(out, op.matrix(), op.qubits, circuit.n)
    return out


def run(circuit: Circuit) -> np.ndarray:
    """Density matrix produced from |0..0>."""
    return apply(circuit, zero_state(circuit.n))


def build_ansatz(n: int, layers: int, params: Sequence[float],
                 edges: Sequence[tuple[int, int]]) -> Circuit:
    """Layered rx/rz ansatz with brickwork cz entanglers.

    Each of ``layers`` blocks applies rx then rz on every qubit followed by
    cz on each edge (even-indexed edges first, then odd); one final rx/rz
    rank closes the circuit.  Expects len(params) == 2 n (layers + 1).
    """
    want = 2 * n * (layers + 1)
    if len(params) != want:
        raise ValueError(f"need {want} parameters, got {len(params)}")
    edges = list(edges)
    order = [e for i, e in enumerate(edges) if i % 2 == 0] + \
            [e for i, e in enumerate(edges) if i % 2 == 1]
    c = Circuit(n)
    k = 0
    for _ in range(layers):
        for q in range(n):
            c.add(Gate("rx", (q,), params[k + q]))
        for q in range(n):
            c.add(Gate("rz", (q,), params[k + n + q]))
        k += 2 * n
        for (a, b) in order:
            c.add(Gate("cz", (a, b)))
    for q in range(n):
        c.add(Gate("rx", (q,), params[k + q]))
    for q in range(n):
        c.add(Gate("rz", (q,), params[k + n + q]))
    return c


def attach_noise(circuit: Circuit, model: NoiseModel, seed: int = 0) -> Circuit:
    """Insert the model's channel(s) after every gate.

    Register-wide channels are pinned to this circuit's qubits so that later
    embedding into a larger register (extra copies, an ancilla) leaves their
    scope unchanged.  Coherent drift is a calibration error, not a Kraus
    process: its sampled rotations ride the circuit as plain gates, so the
    uncomputation block inverts them and the dual state stays equal to the
    state under purely coherent error.
    """
    from dataclasses import replace as _replace
    rng = np.random.default_rng(seed)
    scope = tuple(range(circuit.n))
    out = Circuit(circuit.n)
    for op in circuit.ops:
        out.ops.append(op)
        if isinstance(op, Gate):
            for ch in model.channels_for_gate(op.qubits, op.generators(), rng):
                if ch.kind == "coherent_drift":
                    for gen, q, ang in ch.params:
                        out.ops.append(Gate("rx" if gen == "x" else "rz", (q,), ang))
                elif ch.kind == "global_depolarizing" and not ch.qubits:
                    out.ops.append(_replace(ch, qubits=scope))
                else:
                    out.ops.append(ch)
    return out


def _paired(circuit: Circuit) -> list[tuple[Gate, list[Channel]]]:
    pairs: list[tuple[Gate, list[Channel]]] = []
    for op in circuit.ops:
        if isinstance(op, Gate):
            pairs.append((op, []))
        else:
            if not pairs:
                raise ValueError("channel before any gate cannot be paired")
            pairs[-1][1].append(op)
    return pairs


def reversed_circuit(circuit: Circuit) -> Circuit:
    """Physical uncomputation: inverted gates in reverse order, noise kept."""
    out = Circuit(circuit.n)
    for gate, chans in reversed(_paired(circuit)):
        out.ops.append(gate.inverse())
        out.ops.extend(chans)
    return out


def dual_circuit(circuit: Circuit) -> Circuit:
    """Adjoint-Kraus dual of the uncomputation of ``circuit``.

    Applying this to |0..0><0..0| yields the dual state: original gate order
    and sense, each gate preceded by the dual of its noise.
    """
    out = Circuit(circuit.n)
    for gate, chans in _paired(circuit):
        for ch in chans:
            out.ops.append(ch.dual())
        out.ops.append(gate)
    return out


def dual_state(circuit: Circuit) -> np.ndarray:
    return run(dual_circuit(circuit))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of a - b."""
    if a.shape != b.shape:
        raise SizeMismatchError("operands differ in dimension")
    sv = np.linalg.svd(a - b, compute_uv=False)
    return float(0.5 * np.sum(sv))


def spectral_decompose(rho: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs sorted by descending eigenvalue."""
    vals, vecs = np.linalg.eigh(rho)
    order = np.argsort(vals)[::-1]
    return [(float(vals[i]), vecs[:, i]) for i in order]


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def expected_errors(circuit: Circuit) -> float:
    """Sum of expected error events over all attached channels."""
    return float(sum(ch.expected_errors() for ch in circuit.channels()))


def check_density(rho: np.ndarray, atol_herm: float = 1e-10, atol_tr: float = 1e-10,
                  atol_psd: float = 1e-9) -> None:
    """Raise if rho is not a valid density matrix to tolerance."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > atol_herm:
        raise AssertionError(f"hermiticity violated by {herm:.3e}")
    tr = abs(np.trace(rho) - 1.0)
    if tr > atol_tr:
        raise AssertionError(f"trace deviates by {tr:.3e}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -atol_psd:
        raise AssertionError(f"negative eigenvalue {lam.min():.3e}")
