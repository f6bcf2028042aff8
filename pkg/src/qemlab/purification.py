"""Circuit-level purification estimators and the exact trace oracle.

Everything here evaluates traces of products of noisy states and their dual
states two ways: an exact dense-matrix oracle, and full register-level
simulations of the measurement circuits (ancilla Hadamard tests, mid-circuit
branching, controlled derangements built from explicit gate decompositions).
The two routes agreeing is the correctness contract for this module.

Register layout for multi-copy circuits: copy k occupies qubits
[k*w, (k+1)*w) and the single ancilla is always the top qubit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .channels import NoiseModel
from .circuits import (
    Circuit,
    Gate,
    MAX_QUBITS,
    apply,
    dual_state,
    reversed_circuit,
    run,
)
from .errors import DegenerateNormalizationError, RegisterCapError
from .pauli import PauliSum, PauliTerm


def oracle_trace(factors: Sequence, obs=None) -> complex:
    """Tr[(prod factors) * obs] by dense multiplication.

    Each factor is a matrix or a (matrix, conj) pair; conj=True uses the
    conjugate transpose.  obs may be a PauliTerm, PauliSum, matrix, or None.
    """
    prod = None
    dim = None
    for f in factors:
        mat, conj = (f if isinstance(f, tuple) else (f, False))
        mat = np.asarray(mat, dtype=complex)
        if conj:
            mat = mat.conj().T
        if dim is None:
            dim = mat.shape[0]
            prod = mat
        else:
            if mat.shape[0] != dim:
                raise ValueError("factor dimensions differ")
            prod = prod @ mat
    if prod is None:
        raise ValueError("no factors")
    if obs is None:
        return complex(np.trace(prod))
    if isinstance(obs, PauliTerm):
        om = obs.matrix()
    elif isinstance(obs, PauliSum):
        om = obs.matrix()
    else:
        om = np.asarray(obs, dtype=complex)
    return complex(np.trace(prod @ om))


# ---------------------------------------------------------------------------
# gadget emission


def _offset_ops(circuit: Circuit, offset: int) -> list:
    out = []
    for op in circuit.ops:
        if isinstance(op, Gate):
            out.append(Gate(op.name, tuple(q + offset for q in op.qubits),
                            op.angle, op.payload))
        else:
            out.append(replace(op, qubits=tuple(q + offset for q in op.qubits)))
    return out


class _Builder:
    """Accumulates the full-register instruction stream for one estimator."""

    def __init__(self, total: int, gadget_noise: NoiseModel | None, seed: int = 0):
        if total > MAX_QUBITS:
            raise RegisterCapError(f"{total} qubits exceeds the dense cap of {MAX_QUBITS}")
        self.circ = Circuit(total)
        self.noise = gadget_noise
        self.rng = np.random.default_rng(seed)

    def raw(self, ops) -> None:
        for op in ops:
            self.circ.ops.append(op)

    def gate(self, g: Gate) -> None:
        """A gadget gate, followed by gadget noise when configured."""
        self.circ.add(g)
        if self.noise is not None:
            for ch in self.noise.channels_for_gate(g.qubits, g.generators(), self.rng):
                self.circ.ops.append(ch)

    def hadamard(self, q: int) -> None:
        self.gate(Gate("h", (q,)))

    def x(self, q: int) -> None:
        self.gate(Gate("x", (q,)))

    def controlled_letter(self, anc: int, q: int, letter: str, polarity: int) -> None:
        if letter == "I":
            return
        if polarity == 0:
            self.x(anc)
        self.gate(Gate("cpauli", (anc, q), payload=letter))
        if polarity == 0:
            self.x(anc)

    def controlled_pauli(self, anc: int, term: PauliTerm, offset: int, polarity: int = 1) -> None:
        """Controlled n-qubit Pauli, one 2q gate per support letter."""
        coeff = complex(term.coeff)
        mag = abs(coeff)
        if abs(mag - 1.0) > 1e-12:
            raise ValueError("controlled Pauli requires a unit-modulus coefficient")
        phi = float(np.angle(coeff))
        for q in term.support:
            self.controlled_letter(anc, q + offset, term.axes[q], polarity)
        if abs(phi) > 1e-15:
            # branch phase; the opposite polarity only shifts a global phase
            self.gate(Gate("phase", (anc,), phi if polarity == 1 else -phi))

    def basis_change(self, q: int, letter: str, inverse: bool) -> None:
        if letter == "X":
            self.gate(Gate("h", (q,)))
        elif letter == "Y":
            if inverse:
                self.gate(Gate("sdg", (q,)))
                self.gate(Gate("h", (q,)))
            else:
                self.gate(Gate("h", (q,)))
                self.gate(Gate("s", (q,)))

    def u_obs(self, term: PauliTerm, offset: int, inverse: bool) -> int:
        """Clifford conjugator: U Z_root U^dag equals the observable pattern.

        Emits cnot fan-in from each support qubit into the root plus local
        basis changes; returns the absolute root index.
        """
        support = term.support
        if not support:
            raise ValueError("identity observable needs no conjugator")
        root = support[0] + offset
        fanin = [Gate("cx", (q + offset, root)) for q in support[1:]]
        if inverse:
            for q in support:
                self.basis_change(q + offset, term.axes[q], inverse=True)
            for g in reversed(fanin):
                self.gate(g)
        else:
            for g in fanin:
                self.gate(g)
            for q in support:
                self.basis_change(q + offset, term.axes[q], inverse=False)
        return root

    def cswap(self, anc: int, a: int, b: int) -> None:
        """Exact controlled swap from seven two-qubit gates."""
        self.gate(Gate("cx", (b, a)))
        self.gate(Gate("cv", (anc, b)))
        self.gate(Gate("cx", (anc, a)))
        self.gate(Gate("cvdg", (a, b)))
        self.gate(Gate("cx", (anc, a)))
        self.gate(Gate("cv", (a, b)))
        self.gate(Gate("cx", (b, a)))

    def controlled_shift(self, anc: int, copies: int, width: int) -> None:
        """Controlled cyclic shift moving copy k's contents to copy k+1."""
        for k in range(copies - 2, -1, -1):
            for q in range(width):
                self.cswap(anc, k * width + q, (k + 1) * width + q)


def _anc_xy(rho: np.ndarray, total: int, free_qubits: Sequence[int]) -> complex:
    """<X (x) Pi> + i <Y (x) Pi> with the ancilla on the top qubit.

    Pi projects every register qubit not listed in free_qubits onto |0>.
    """
    d_reg = 1 << (total - 1)
    free = sorted(free_qubits)
    idxs = []
    for combo in range(1 << len(free)):
        r = 0
        for pos, q in enumerate(free):
            if (combo >> pos) & 1:
                r |= 1 << q
        idxs.append(r)
    idxs = np.array(idxs, dtype=int)
    w = np.sum(rho[d_reg + idxs, idxs])
    return complex(2.0 * w)


def _zeros_probability(rho: np.ndarray) -> float:
    return float(np.real(rho[0, 0]))


@dataclass
class DspResult:
    numerator: float
    p0: float
    value: float


def dsp_circuit(circ: Circuit, obs: PauliTerm, out_circuit: Circuit | None = None,
                gadget_noise: NoiseModel | None = None, gadget_seed: int = 0) -> Circuit:
    """The assembled indirect-measurement circuit, ancilla on the top qubit.

    Reading X on the ancilla jointly with all-zeros on the register gives the
    symmetrized numerator for the observable's axes pattern.
    """
    w = circ.n
    if out_circuit is None:
        out_circuit = reversed_circuit(circ)
    anc = w
    b = _Builder(w + 1, gadget_noise, gadget_seed)
    b.hadamard(anc)
    b.raw(_offset_ops(circ, 0))
    root = b.u_obs(obs, 0, inverse=True)
    b.gate(Gate("cz", (anc, root)))
    b.u_obs(obs, 0, inverse=False)
    b.raw(_offset_ops(out_circuit, 0))
    return b.circ


def dsp_expectation(circ: Circuit, obs: PauliTerm, mode: str = "ancilla",
                    gadget_noise: NoiseModel | None = None,
                    out_circuit: Circuit | None = None,
                    gadget_seed: int = 0) -> DspResult:
    """Purified expectation from one compute/uncompute pass.

    numerator estimates Tr[(dual*state + state*dual)/2 * obs]; p0 is the
    all-zeros return probability of the gadget-free pass, Tr[dual * state];
    value is their ratio.
    """
    w = circ.n
    if out_circuit is None:
        out_circuit = reversed_circuit(circ)
    coeff = complex(obs.coeff)

    # gadget-free pass: p0
    bare = Circuit(w, list(circ.ops) + list(out_circuit.ops))
    p0 = _zeros_probability(run(bare))

    if obs.is_identity:
        numerator = float(np.real(coeff)) * p0
    elif mode == "ancilla":
        full = dsp_circuit(circ, obs, out_circuit, gadget_noise, gadget_seed)
        rho = run(full)
        numerator = float((coeff * np.real(_anc_xy(rho, full.n, ()))).real)
    elif mode == "direct":
        b_pre = _Builder(w, gadget_noise, gadget_seed)
        b_pre.raw(_offset_ops(circ, 0))
        root = b_pre.u_obs(obs, 0, inverse=True)
        sigma = run(b_pre.circ)
        nums = []
        for outcome in (0, 1):
            proj = _project_qubit(sigma, root, outcome, w)
            b_post = _Builder(w, gadget_noise, gadget_seed + 1)
            b_post.u_obs(obs, 0, inverse=False)
            b_post.raw(_offset_ops(out_circuit, 0))
            after = apply(b_post.circ, proj)
            nums.append(_zeros_probability(after))
        numerator = float(np.real(coeff)) * (nums[0] - nums[1])
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if p0 < 1e-12:
        raise DegenerateNormalizationError(f"p0 = {p0:.3e} too small to normalize")
    return DspResult(numerator, p0, numerator / p0)


def _project_qubit(rho: np.ndarray, q: int, outcome: int, n: int) -> np.ndarray:
    d = 1 << n
    idx = np.arange(d)
    keep = ((idx >> q) & 1) == outcome
    out = rho.copy()
    out[~keep, :] = 0.0
    out[:, ~keep] = 0.0
    return out


class EsdEvaluator:
    """Copy-based estimator with the shared prefix evaluated once.

    The preparation of all copies and the controlled derangement do not
    depend on the observable, so their simulated state is cached; each
    observable only pays for its own controlled-Pauli tail.
    """

    def __init__(self, circ: Circuit, n_copies: int,
                 gadget_noise: NoiseModel | None = None, gadget_seed: int = 0):
        self.w = circ.n
        self.n_copies = n_copies
        self.total = n_copies * self.w + 1
        self.anc = self.total - 1
        self.noise = gadget_noise
        self.seed = gadget_seed
        b = _Builder(self.total, gadget_noise, gadget_seed)
        for k in range(n_copies):
            b.raw(_offset_ops(circ, k * self.w))
        b.hadamard(self.anc)
        b.controlled_shift(self.anc, n_copies, self.w)
        self._mid = run(b.circ)

    def numerator(self, obs: PauliTerm | None) -> float:
        """<X on the ancilla> with the controlled observable appended."""
        rho = self._mid
        if obs is not None and not obs.is_identity:
            b = _Builder(self.total, self.noise, self.seed + 1)
            b.controlled_pauli(self.anc, PauliTerm(obs.axes, 1.0), 0, polarity=1)
            rho = apply(b.circ, rho)
        free = list(range(self.total - 1))
        return float(np.real(_anc_xy(rho, self.total, free)))

    def expectation(self, obs: PauliTerm) -> float:
        den = self.numerator(None)
        if abs(den) < 1e-12:
            raise DegenerateNormalizationError(f"Tr[rho^n] estimate {den:.3e} too small")
        return float(np.real(obs.coeff)) * self.numerator(obs) / den


def esd_expectation(circ: Circuit, n_copies: int, obs: PauliTerm,
                    gadget_noise: NoiseModel | None = None,
                    gadget_seed: int = 0) -> float:
    """Copy-based purified expectation Tr[rho^n obs] / Tr[rho^n].

    Simulates the ancilla-controlled cyclic derangement over n_copies noisy
    preparations, with each controlled swap expanded into two-qubit gates.
    """
    return EsdEvaluator(circ, n_copies, gadget_noise, gadget_seed).expectation(obs)


def esd_purity(circ: Circuit, n_copies: int = 2,
               gadget_noise: NoiseModel | None = None, gadget_seed: int = 0) -> float:
    """The denominator estimate alone (Tr[rho^n])."""
    return EsdEvaluator(circ, n_copies, gadget_noise, gadget_seed).numerator(None)


def re_purification(circ: Circuit, n: int, obs: PauliTerm,
                    drop_last_uncompute: bool = False,
                    gadget_noise: NoiseModel | None = None,
                    gadget_seed: int = 0) -> complex:
    """Copy-and-uncompute estimator for higher purification degrees.

    With every copy uncomputed the X reading gives the symmetrized degree-2n
    product; dropping one uncompute and combining X - iY lowers the degree
    to 2n - 1 with the state itself on the outside.
    """
    w = circ.n
    total = n * w + 1
    anc = total - 1
    b = _Builder(total, gadget_noise, gadget_seed)
    for k in range(n):
        b.raw(_offset_ops(circ, k * w))
    b.hadamard(anc)
    if not obs.is_identity:
        b.controlled_pauli(anc, PauliTerm(obs.axes, 1.0), 0, polarity=1)
    b.controlled_shift(anc, n, w)
    rev = reversed_circuit(circ)
    drop = (1 % n) if drop_last_uncompute else None
    free: list[int] = []
    for k in range(n):
        if k == drop:
            free.extend(range(k * w, (k + 1) * w))
        else:
            b.raw(_offset_ops(rev, k * w))
    rho = run(b.circ)
    xy = _anc_xy(rho, total, free)
    coeff = complex(obs.coeff)
    if drop_last_uncompute:
        # <X (x) Pi> - i <Y (x) Pi>
        return coeff * complex(np.conj(xy))
    return coeff * complex(xy.real)


# ---------------------------------------------------------------------------
# generalized sandwich-factor circuits


@dataclass(frozen=True)
class GeneralFactor:
    """One sandwich factor: V rho W^dag with rho prepared by a circuit.

    v and w are unit-modulus Pauli terms (None means identity).  The dual
    flavour of the factor is produced by the uncompute block of the same
    circuit, never stored directly.
    """

    circuit: Circuit
    v: PauliTerm | None = None
    w: PauliTerm | None = None

    def state(self) -> np.ndarray:
        return run(self.circuit)

    def dual(self) -> np.ndarray:
        return dual_state(self.circuit)

    def matrix(self, bar: bool, dagger: bool) -> np.ndarray:
        rho = self.dual() if bar else self.state()
        d = rho.shape[0]
        vm = self.v.matrix() if self.v is not None else np.eye(d, dtype=complex)
        wm = self.w.matrix() if self.w is not None else np.eye(d, dtype=complex)
        tau = vm @ rho @ wm.conj().T
        return tau.conj().T if dagger else tau


@dataclass(frozen=True)
class FactorSlot:
    side: str      # "bra", "ket", or "A"
    index: int     # 1-based position within its side
    dagger: bool
    bar: bool


@dataclass(frozen=True)
class CopyPlan:
    in_slot: FactorSlot | None
    out_slot: FactorSlot | None


@dataclass(frozen=True)
class CircuitPlan:
    """Copy layout for one generalized trace evaluation."""

    n: int
    n_prime: int
    with_a: bool
    copies: int
    measurement_combination: str
    slots: tuple[CopyPlan, ...]
    postselect: tuple[bool, ...]

    def factor_sequence(self) -> list[FactorSlot]:
        """Cyclic operator order whose trace (times obs) the plan computes."""
        seq: list[FactorSlot] = []
        c = 0  # copy cursor in chain order
        order = [0] + list(range(self.copies - 1, 0, -1))
        for c in order:
            cp = self.slots[c]
            if cp.in_slot is not None:
                seq.append(cp.in_slot)
            if cp.out_slot is not None:
                seq.append(cp.out_slot)
        return seq


def _bra_bar(n: int, i: int) -> bool:
    return (i % 2 == 0) if n % 2 == 1 else (i % 2 == 1)


def _ket_bar(n: int, i: int, with_a: bool) -> bool:
    odd_positions = (n % 2 == 1) != with_a
    return (i % 2 == 1) if odd_positions else (i % 2 == 0)


def plan_general(n: int, n_prime: int, with_a: bool = False) -> CircuitPlan:
    """Copy count, slot assignment, and postselection mask for Tr[bra A ket O].

    The bra side holds n daggered factors, the ket side n_prime plain ones;
    bars (dual-state factors) land on out slots, plain states on in slots,
    and the optional middle operator takes whichever slot type the parity
    leaves open.  Copies = ceil((n + n' [+1]) / 2).
    """
    if n < 1 or n_prime < 1:
        raise ValueError("factor counts must be at least 1")
    seq: list[FactorSlot] = []
    for i in range(n, 0, -1):
        seq.append(FactorSlot("bra", i, True, _bra_bar(n, i)))
    a_is_out = n % 2 == 1
    if with_a:
        seq.append(FactorSlot("A", 0, False, a_is_out))
    for i in range(1, n_prime + 1):
        seq.append(FactorSlot("ket", i, False, _ket_bar(n, i, with_a)))

    total = n + n_prime + (1 if with_a else 0)
    copies = (total + 1) // 2
    # chain slot order: T0, R0, T_{m-1}, R_{m-1}, ..., T1, R1
    copy_order = [0] + list(range(copies - 1, 0, -1))
    ins: dict[int, FactorSlot] = {}
    outs: dict[int, FactorSlot] = {}
    pos = 0
    for c in copy_order:
        if pos >= len(seq):
            raise AssertionError("ran out of factors while filling in-slots")
        f = seq[pos]
        is_out_type = f.bar or (f.side == "A" and a_is_out)
        if is_out_type:
            raise AssertionError("dual-type factor landed on an in slot")
        ins[c] = f
        pos += 1
        if pos < len(seq):
            f = seq[pos]
            is_out_type = f.bar or (f.side == "A" and a_is_out)
            if is_out_type:
                outs[c] = f
                pos += 1
            # otherwise leave this out slot empty (unpostselected copy)
    if pos != len(seq):
        raise AssertionError("factor sequence not fully consumed")
    slots = tuple(CopyPlan(ins.get(c), outs.get(c)) for c in range(copies))
    postselect = tuple(slots[c].out_slot is not None for c in range(copies))
    return CircuitPlan(n, n_prime, with_a, copies, "X+iY", slots, postselect)


def _resolve(slot: FactorSlot, bra: Sequence[GeneralFactor], ket: Sequence[GeneralFactor],
             a_factor: GeneralFactor | None) -> GeneralFactor:
    if slot.side == "bra":
        return bra[slot.index - 1]
    if slot.side == "ket":
        return ket[slot.index - 1]
    if a_factor is None:
        raise ValueError("plan requires the middle operator factor")
    return a_factor


def _pre_gadget(b: _Builder, anc: int, f: GeneralFactor, offset: int, dagger: bool) -> None:
    w_pol, v_pol = (1, 0) if dagger else (0, 1)
    if f.w is not None:
        b.controlled_pauli(anc, f.w, offset, polarity=w_pol)
    if f.v is not None:
        b.controlled_pauli(anc, f.v, offset, polarity=v_pol)


def _post_gadget(b: _Builder, anc: int, f: GeneralFactor, offset: int, dagger: bool) -> None:
    w_pol, v_pol = (0, 1) if dagger else (1, 0)
    if f.w is not None:
        b.controlled_pauli(anc, _dagger_term(f.w), offset, polarity=w_pol)
    if f.v is not None:
        b.controlled_pauli(anc, _dagger_term(f.v), offset, polarity=v_pol)


def _dagger_term(t: PauliTerm) -> PauliTerm:
    return PauliTerm(t.axes, np.conj(t.coeff))


def execute_plan(plan: CircuitPlan, bra_factors: Sequence[GeneralFactor],
                 ket_factors: Sequence[GeneralFactor], obs: PauliTerm,
                 a_factor: GeneralFactor | None = None,
                 gadget_noise: NoiseModel | None = None,
                 gadget_seed: int = 0) -> complex:
    """Run the planned multi-copy circuit and return <X+iY> over the mask."""
    if len(bra_factors) != plan.n or len(ket_factors) != plan.n_prime:
        raise ValueError("factor list lengths do not match the plan")
    w = bra_factors[0].circuit.n
    total = plan.copies * w + 1
    anc = total - 1
    b = _Builder(total, gadget_noise, gadget_seed)

    # in-state preparations
    for c, cp in enumerate(plan.slots):
        if cp.in_slot is None:
            continue
        f = _resolve(cp.in_slot, bra_factors, ket_factors, a_factor)
        b.raw(_offset_ops(f.circuit, c * w))
    b.hadamard(anc)
    for c, cp in enumerate(plan.slots):
        if cp.in_slot is not None and cp.in_slot.side != "A":
            f = _resolve(cp.in_slot, bra_factors, ket_factors, a_factor)
            _pre_gadget(b, anc, f, c * w, cp.in_slot.dagger)
    if not obs.is_identity:
        b.controlled_pauli(anc, PauliTerm(obs.axes, 1.0), 0, polarity=1)
    b.controlled_shift(anc, plan.copies, w)
    free: list[int] = []
    for c, cp in enumerate(plan.slots):
        if cp.out_slot is None:
            free.extend(range(c * w, (c + 1) * w))
            continue
        if cp.out_slot.side != "A":
            f = _resolve(cp.out_slot, bra_factors, ket_factors, a_factor)
            _post_gadget(b, anc, f, c * w, cp.out_slot.dagger)
        else:
            f = _resolve(cp.out_slot, bra_factors, ket_factors, a_factor)
        b.raw(_offset_ops(reversed_circuit(f.circuit), c * w))
    rho = run(b.circ)
    return complex(obs.coeff) * _anc_xy(rho, total, free)


def planned_oracle(plan: CircuitPlan, bra_factors: Sequence[GeneralFactor],
                   ket_factors: Sequence[GeneralFactor], obs: PauliTerm,
                   a_factor: GeneralFactor | None = None) -> complex:
    """Dense-matrix value of the same trace the planned circuit estimates."""
    mats = []
    for slot in plan.factor_sequence():
        f = _resolve(slot, bra_factors, ket_factors, a_factor)
        if slot.side == "A":
            mats.append(f.dual() if slot.bar else f.state())
        else:
            mats.append(f.matrix(slot.bar, slot.dagger))
    return oracle_trace(mats, obs)
