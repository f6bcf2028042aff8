"""Noise channels and noise models for the density-matrix simulator.

A channel acts on one or two named qubits (or globally) and is applied as a
Kraus sum or, for the mixing channels, as its direct affine form.  Channels
know how to produce their adjoint-Kraus dual, which is what turns a physical
uncomputation block into the operator that prepares the dual state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NoiseRateError

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: X/Y/Z error split of the stochastic Pauli channel.
PAULI_SPLIT = (0.2, 0.2, 0.6)


@dataclass(frozen=True)
class Channel:
    """One noise process attached to a circuit location.

    kind: one of stochastic_pauli, global_depolarizing, local_depolarizing,
          amplitude_damping, thermal_relaxation, coherent_drift.
    qubits: acted-on qubits; empty tuple for a global channel.
    params: kind-specific tuple (kept hashable for reuse bookkeeping).
    dualized: apply the adjoint Kraus set instead of the channel itself.
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple
    dualized: bool = False

    def dual(self) -> "Channel":
        if self.kind in ("stochastic_pauli", "global_depolarizing", "local_depolarizing"):
            return self  # hermitian Kraus sets are self-dual
        return replace(self, dualized=not self.dualized)

    @property
    def rate(self) -> float:
        """Error probability per acted-on qubit (0 for purely coherent kinds)."""
        if self.kind in ("stochastic_pauli", "global_depolarizing",
                         "local_depolarizing", "amplitude_damping"):
            return float(self.params[0])
        if self.kind == "thermal_relaxation":
            t1, t2, tg = self.params
            return 1.0 - math.exp(-tg / t1)
        return 0.0

    def expected_errors(self) -> float:
        """Expected number of error events this channel injects."""
        if self.kind == "global_depolarizing":
            return self.rate
        if self.kind == "local_depolarizing" and len(self.qubits) == 2:
            return self.rate  # single joint event on the pair
        if self.kind == "coherent_drift":
            return 0.0
        return self.rate * max(len(self.qubits), 1)


def stochastic_pauli(p: float, qubits: tuple[int, ...], split=PAULI_SPLIT) -> Channel:
    _check_rate(p)
    return Channel("stochastic_pauli", tuple(qubits), (p,) + tuple(split))


def global_depolarizing(p: float) -> Channel:
    _check_rate(p)
    return Channel("global_depolarizing", (), (p,))


def local_depolarizing(p: float, qubits: tuple[int, ...]) -> Channel:
    _check_rate(p)
    if len(qubits) not in (1, 2):
        raise ValueError("local depolarizing acts on one qubit or one pair")
    return Channel("local_depolarizing", tuple(qubits), (p,))


def amplitude_damping(p: float, qubits: tuple[int, ...]) -> Channel:
    _check_rate(p)
    return Channel("amplitude_damping", tuple(qubits), (p,))


def thermal_relaxation(t1: float, t2: float, gate_time: float, qubit: int) -> Channel:
    if t2 > 2.0 * t1:
        raise ValueError("thermal relaxation requires T2 <= 2 T1")
    return Channel("thermal_relaxation", (qubit,), (float(t1), float(t2), float(gate_time)))


def coherent_drift(rotations: tuple[tuple[str, int, float], ...]) -> Channel:
    """Unitary drift: tuple of (generator in {x, z}, qubit, angle)."""
    qs = tuple(sorted({q for _, q, _ in rotations}))
    return Channel("coherent_drift", qs, tuple(rotations))


def _check_rate(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise NoiseRateError(f"rate {p} outside [0, 1]")


def single_qubit_kraus(ch: Channel) -> list[np.ndarray]:
    """Local 2x2 Kraus set for per-qubit channel kinds."""
    if ch.kind == "stochastic_pauli":
        p, px, py, pz = ch.params
        ops = [
            math.sqrt(1.0 - p) * np.eye(2, dtype=complex),
            math.sqrt(p * px) * _X,
            math.sqrt(p * py) * _Y,
            math.sqrt(p * pz) * _Z,
        ]
    elif ch.kind == "amplitude_damping":
        p = ch.params[0]
        ops = [
            np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - p)]], dtype=complex),
            np.array([[0.0, math.sqrt(p)], [0.0, 0.0]], dtype=complex),
        ]
    elif ch.kind == "thermal_relaxation":
        t1, t2, tg = ch.params
        gamma = 1.0 - math.exp(-tg / t1)
        # pure dephasing on top of the damping, valid for T2 <= 2 T1
        f = math.exp(-tg / t2) / math.exp(-tg / (2.0 * t1))
        lam = max(0.0, 1.0 - f * f)
        ad = [
            np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex),
            np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex),
        ]
        pd = [
            np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - lam)]], dtype=complex),
            np.array([[0.0, 0.0], [0.0, math.sqrt(lam)]], dtype=complex),
        ]
        ops = [a @ b for a in ad for b in pd]
    elif ch.kind == "local_depolarizing" and len(ch.qubits) == 1:
        p = ch.params[0]
        ops = [
            math.sqrt(1.0 - 3.0 * p / 4.0) * np.eye(2, dtype=complex),
            math.sqrt(p / 4.0) * _X,
            math.sqrt(p / 4.0) * _Y,
            math.sqrt(p / 4.0) * _Z,
        ]
    else:
        raise ValueError(f"no single-qubit Kraus form for {ch.kind}")
    if ch.dualized:
        ops = [k.conj().T for k in ops]
    return ops


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate channel assignment.

    kind selects the channel family; p1 applies to single-qubit gates and
    p2 = ratio * p1 to each qubit of a two-qubit gate (or to the pair jointly
    for the local_depolarizing family).  Thermal relaxation attaches only to
    two-qubit gates; its T1/T2 are drawn per attachment from normal
    distributions with a fixed 10 percent relative width, clipped to
    T2 <= 2 T1.  Coherent drift draws a uniform angle in [0, p] per gate
    qubit and appends it as an extra rotation of the gate's own generator.
    """

    kind: str = "stochastic_pauli"
    p1: float = 0.0
    ratio: float = 10.0
    split: tuple[float, float, float] = PAULI_SPLIT
    t1_mean: float = 50e-6
    t2_mean: float = 70e-6
    sigma_frac: float = 0.1
    gate_time: float = 200e-9
    thermal_with_pauli: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("none", "stochastic_pauli", "global_depolarizing",
                             "local_depolarizing", "amplitude_damping",
                             "thermal_relaxation", "coherent_drift"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind not in ("none", "coherent_drift"):
            _check_rate(self.p1)
            _check_rate(self.p2)

    @property
    def p2(self) -> float:
        return self.ratio * self.p1

    def amplified(self, lam: float) -> "NoiseModel":
        """Scale every channel rate by lam (software-level amplification)."""
        if lam < 0:
            raise NoiseRateError("amplification factor must be non-negative")
        scaled = replace(self, p1=lam * self.p1)
        if self.kind == "thermal_relaxation":
            scaled = replace(scaled, gate_time=lam * self.gate_time)
        if scaled.kind not in ("none", "coherent_drift"):
            _check_rate(scaled.p1)
            _check_rate(scaled.p2)
        return scaled

    def channels_for_gate(self, qubits: tuple[int, ...], generators: tuple[str, ...],
                          rng: np.random.Generator) -> list[Channel]:
        """Channels to append after one gate acting on the given qubits."""
        if self.kind == "none":
            return []
        two = len(qubits) >= 2
        p = self.p2 if two else self.p1
        if self.kind == "thermal_relaxation":
            out = []
            if two:
                for q in qubits:
                    t1 = rng.normal(self.t1_mean, self.sigma_frac * self.t1_mean)
                    t2 = rng.normal(self.t2_mean, self.sigma_frac * self.t2_mean)
                    t1 = max(t1, 1e-9)
                    t2 = min(max(t2, 1e-9), 2.0 * t1)
                    out.append(thermal_relaxation(t1, t2, self.gate_time, q))
            if self.thermal_with_pauli and p > 0.0:
                out.append(stochastic_pauli(p, qubits, self.split))
            return out
        if p == 0.0:
            return []
        if self.kind == "stochastic_pauli":
            return [stochastic_pauli(p, qubits, self.split)]
        if self.kind == "global_depolarizing":
            return [global_depolarizing(p)]
        if self.kind == "local_depolarizing":
            return [local_depolarizing(p, qubits)]
        if self.kind == "amplitude_damping":
            return [amplitude_damping(p, qubits)]
        if self.kind == "coherent_drift":
            rots = tuple(
                (generators[i] if i < len(generators) else "z", q, float(rng.uniform(0.0, p)))
                for i, q in enumerate(qubits)
            )
            return [coherent_drift(rots)]
        raise AssertionError(self.kind)


def noiseless() -> NoiseModel:
    return NoiseModel(kind="none", p1=0.0)
