"""Assembly of the generalized-eigenvalue pair (S, H) for the three bases.

Three constructions share one bookkeeping scheme: every matrix element is a
constant plus a sum of coefficient-weighted products of *query values*, a
query being one (prepared state, Pauli observable) pair.  The ledger of
unique queries is what shot-noise perturbation and measurement-cost counting
operate on; assembling from the ledger and assembling exactly are the same
code path, so the infinite-shot limit reproduces the exact matrices by
construction.

Power basis:   identity plus the state times Hamiltonian powers.
Fault basis:   the state at software-amplified noise rates.
Divided basis: per-block states tensored, powers of the Hamiltonian
               reintroducing the cross-block entanglement classically.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channels import NoiseModel
from .circuits import Circuit, attach_noise, dual_state, reversed_circuit, run
from .errors import ConfigError
from .pauli import (
    PauliSum,
    PauliTerm,
    PowerTable,
    SystemPartition,
    expect_pauli,
    factorize,
)
from .purification import dsp_expectation
from .shotnoise import var_dsp, var_pauli_state, var_product_chain

QueryKey = tuple
Term = tuple  # (coeff, (key, key, ...))


@dataclass(frozen=True)
class SubspaceSpec:
    """What to build: basis family, size, and generator data."""

    kind: str
    m: int
    hamiltonian: PauliSum
    lambdas: tuple[float, ...] | None = None
    partition: SystemPartition | None = None
    asymmetric: bool = False
    boundary_state_only: bool = False
    merge_identical_blocks: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("power", "fault", "dc"):
            raise ConfigError(f"unknown subspace kind {self.kind!r}")
        if self.m < 1:
            raise ConfigError("subspace count must be at least 1")
        if self.kind == "fault":
            lams = self.lambda_values
            if any(l < 1.0 for l in lams) or list(lams) != sorted(lams):
                raise ConfigError("amplification factors must be ascending and >= 1")
        if self.kind == "dc":
            if self.partition is None:
                raise ConfigError("divided construction needs a partition")
            if self.partition.n != self.hamiltonian.n:
                raise ConfigError("partition does not cover the Hamiltonian register")

    @property
    def lambda_values(self) -> tuple[float, ...]:
        if self.lambdas is not None:
            return self.lambdas
        return tuple(float(k) for k in range(1, self.m + 1))


@dataclass(frozen=True)
class Query:
    state: tuple
    axes: str
    value: complex
    var: float


@dataclass
class SubspaceMatrices:
    """The pencil, its per-element variances, and the query ledger."""

    kind: str
    m: int
    n: int
    gamma: float
    queries: dict[QueryKey, Query]
    s_terms: dict[tuple[int, int], list[Term]]
    h_terms: dict[tuple[int, int], list[Term]]
    s_const: dict[tuple[int, int], complex]
    h_const: dict[tuple[int, int], complex]
    s: np.ndarray = field(init=False)
    h: np.ndarray = field(init=False)
    var_s: np.ndarray = field(init=False)
    var_h: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.s, self.h = self.assemble()
        self.var_s = self._variances(self.s_terms)
        self.var_h = self._variances(self.h_terms)

    def query_keys(self) -> list[QueryKey]:
        return sorted(self.queries.keys(), key=repr)

    def assemble(self, lookup: Callable[[QueryKey], complex] | None = None
                 ) -> tuple[np.ndarray, np.ndarray]:
        """Build (S, H) from query values; lookup overrides the exact ones."""
        if lookup is None:
            lookup = lambda key: self.queries[key].value
        out = []
        for terms, consts in ((self.s_terms, self.s_const), (self.h_terms, self.h_const)):
            mat = np.zeros((self.m, self.m), dtype=complex)
            for (i, j), entry in terms.items():
                val = consts.get((i, j), 0.0)
                for coeff, keys in entry:
                    prod = coeff
                    for k in keys:
                        prod *= lookup(k)
                    val += prod
                mat[i, j] = val
                if i != j:
                    mat[j, i] = np.conj(val)
            for (i, j), cval in consts.items():
                if (i, j) not in terms:
                    mat[i, j] = cval
                    if i != j:
                        mat[j, i] = np.conj(cval)
            out.append(mat)
        return out[0], out[1]

    def _variances(self, terms: dict[tuple[int, int], list[Term]]) -> np.ndarray:
        var = np.zeros((self.m, self.m))
        for (i, j), entry in terms.items():
            v = 0.0
            for coeff, keys in entry:
                if not keys:
                    continue
                chain = [(float(np.real(self.queries[k].value)), self.queries[k].var)
                         for k in keys]
                v += abs(coeff) ** 2 * var_product_chain(chain)
            var[i, j] = v
            var[j, i] = v
        return var

    def matrix_rows(self) -> list[tuple]:
        """CSV rows: which, i, j, re, im, var."""
        rows = []
        for name, mat, var in (("S", self.s, self.var_s), ("H", self.h, self.var_h)):
            for i in range(self.m):
                for j in range(self.m):
                    rows.append((name, i + 1, j + 1, mat[i, j].real, mat[i, j].imag,
                                 var[i, j]))
        return rows

    def ledger_rows(self, shots_per_query: float | None = None) -> list[tuple]:
        rows = []
        for key in self.query_keys():
            q = self.queries[key]
            rows.append((repr(q.state), q.axes, q.value.real, q.var,
                         shots_per_query if shots_per_query is not None else ""))
        return rows


def _identity_axes(n: int) -> str:
    return "I" * n


class _StateCache:
    """Holds the evaluated states and their products for one builder call."""

    def __init__(self, circ: Circuit, backend: str, asymmetric: bool):
        self.circ = circ
        self.backend = backend
        self.rho = run(circ)
        self.bar = dual_state(circ)
        br = self.bar @ self.rho
        self.sym = br if asymmetric else 0.5 * (br + br.conj().T)

    def dsp(self, axes: str) -> complex:
        if self.backend == "circuit":
            res = dsp_expectation(self.circ, PauliTerm(axes, 1.0), mode="ancilla")
            return complex(res.numerator)
        return expect_pauli(self.sym, axes)


def build_power(spec: SubspaceSpec, ansatz: Circuit, noise: NoiseModel,
                backend: str = "oracle", seed: int = 0,
                with_variances: bool = True) -> SubspaceMatrices:
    """Pencil for the identity-plus-state-times-Hamiltonian-powers basis.

    Bulk elements S_ij = Tr[sym * H^{i+j-4}], H_ij with one more power; the
    first row and column read the plain and dual states against lower powers
    and the corner is free: S_11 = Tr[I], H_11 = Tr[H].
    """
    if spec.kind != "power":
        raise ConfigError("spec kind must be power")
    h = spec.hamiltonian
    n = h.n
    circ = attach_noise(ansatz, noise, seed=seed)
    cache = _StateCache(circ, backend, spec.asymmetric)
    rho, bar = cache.rho, cache.bar
    rb = rho @ bar
    table = PowerTable(h)
    m = spec.m
    queries: dict[QueryKey, Query] = {}

    def dsp_key(axes: str) -> QueryKey:
        key = ("power", "dsp", axes)
        if key not in queries:
            val = cache.dsp(axes)
            var = var_dsp(rho, bar, axes, rb=rb) if with_variances else 0.0
            queries[key] = Query(("power", "dsp"), axes, val, var)
        return key

    def state_key(which: str, axes: str) -> QueryKey:
        key = ("power", which, axes)
        if key not in queries:
            mat = rho if which == "rho" else bar
            val = expect_pauli(mat, axes)
            queries[key] = Query(("power", which), axes, val,
                                 var_pauli_state(float(np.real(val))))
        return key

    s_terms: dict[tuple[int, int], list[Term]] = {}
    h_terms: dict[tuple[int, int], list[Term]] = {}
    s_const: dict[tuple[int, int], complex] = {}
    h_const: dict[tuple[int, int], complex] = {}

    tr_rho = complex(np.trace(rho))
    tr_bar = complex(np.trace(bar))
    avg_tr = tr_rho if spec.boundary_state_only else 0.5 * (tr_rho + tr_bar)

    d = 1 << n
    s_const[(0, 0)] = complex(d)
    h_const[(0, 0)] = h.identity_coefficient * d

    def boundary_entry(power: int) -> tuple[complex, list[Term]]:
        const = 0.0 + 0.0j
        entry: list[Term] = []
        for t in table.power(power):
            if t.is_identity:
                const += t.coeff * avg_tr
            elif spec.boundary_state_only:
                entry.append((t.coeff, (state_key("rho", t.axes),)))
            else:
                entry.append((0.5 * t.coeff, (state_key("rho", t.axes),)))
                entry.append((0.5 * t.coeff, (state_key("dual", t.axes),)))
        return const, entry

    def bulk_entry(power: int) -> list[Term]:
        return [(t.coeff, (dsp_key(t.axes),)) for t in table.power(power)]

    for j in range(1, m):
        cs, es = boundary_entry(j - 1)
        s_const[(0, j)] = cs
        s_terms[(0, j)] = es
        ch, eh = boundary_entry(j)
        h_const[(0, j)] = ch
        h_terms[(0, j)] = eh
    for i in range(1, m):
        for j in range(i, m):
            s_terms[(i, j)] = bulk_entry(i + j - 2)
            h_terms[(i, j)] = bulk_entry(i + j - 1)

    return SubspaceMatrices("power", m, n, h.weight(), queries,
                            s_terms, h_terms, s_const, h_const)


def build_fault(spec: SubspaceSpec, ansatz: Circuit, noise: NoiseModel,
                backend: str = "oracle", seed: int = 0,
                with_variances: bool = True) -> SubspaceMatrices:
    """Pencil for the noise-amplified-state basis.

    Every ordered pair (input amplification, output amplification) is its own
    prepared state; hermiticity comes from averaging the two orders.
    """
    if spec.kind != "fault":
        raise ConfigError("spec kind must be fault")
    h = spec.hamiltonian
    n = h.n
    m = spec.m
    lams = spec.lambda_values
    if len(lams) != m:
        raise ConfigError("need one amplification factor per subspace")
    ident = _identity_axes(n)

    circs = [attach_noise(ansatz, noise.amplified(l), seed=seed) for l in lams]
    rhos = [run(c) for c in circs]
    bars = [dual_state(c) for c in circs]
    rbs: dict[tuple[int, int], np.ndarray] = {}

    queries: dict[QueryKey, Query] = {}

    syms: dict[tuple[int, int], np.ndarray] = {}

    def pair_key(i: int, j: int, axes: str) -> QueryKey:
        key = ("fault", i, j, axes)
        if key not in queries:
            if (i, j) not in rbs:
                rbs[(i, j)] = rhos[i] @ bars[j]
                br = bars[j] @ rhos[i]
                syms[(i, j)] = br if spec.asymmetric else 0.5 * (br + br.conj().T)
            if backend == "circuit":
                res = dsp_expectation(circs[i], PauliTerm(axes, 1.0), mode="ancilla",
                                      out_circuit=reversed_circuit(circs[j]))
                val = complex(res.numerator)
            else:
                val = expect_pauli(syms[(i, j)], axes)
            var = var_dsp(rhos[i], bars[j], axes, rb=rbs[(i, j)]) if with_variances else 0.0
            queries[key] = Query(("fault", i, j), axes, val, var)
        return key

    s_terms: dict[tuple[int, int], list[Term]] = {}
    h_terms: dict[tuple[int, int], list[Term]] = {}

    for i in range(m):
        for j in range(i, m):
            if i == j:
                s_terms[(i, j)] = [(1.0, (pair_key(i, i, ident),))]
                h_terms[(i, j)] = [(t.coeff, (pair_key(i, i, t.axes),)) for t in h]
            else:
                s_terms[(i, j)] = [(0.5, (pair_key(i, j, ident),)),
                                   (0.5, (pair_key(j, i, ident),))]
                entry: list[Term] = []
                for t in h:
                    entry.append((0.5 * t.coeff, (pair_key(i, j, t.axes),)))
                    entry.append((0.5 * t.coeff, (pair_key(j, i, t.axes),)))
                h_terms[(i, j)] = entry

    return SubspaceMatrices("fault", m, n, h.weight(), queries,
                            s_terms, h_terms, {}, {})


def _block_fingerprint(circ: Circuit) -> str:
    return hashlib.sha256(circ.dump().encode()).hexdigest()[:12]


def build_dc(spec: SubspaceSpec, sub_ansatzes: Sequence[Circuit], noise: NoiseModel,
             backend: str = "oracle", seed: int = 0,
             with_variances: bool = True) -> SubspaceMatrices:
    """Pencil for the divided basis: per-block states, classical recombination.

    Hamiltonian powers are factorized across the partition and each global
    term becomes a product of one query per block.  Two blocks that prepare
    bit-identical noisy circuits share their query ledger entries unless the
    spec says otherwise.
    """
    if spec.kind != "dc":
        raise ConfigError("spec kind must be dc")
    part = spec.partition
    h = spec.hamiltonian
    n = h.n
    m = spec.m
    if len(sub_ansatzes) != len(part.blocks):
        raise ConfigError("need one sub-ansatz per partition block")
    for circ, block in zip(sub_ansatzes, part.blocks):
        if circ.n != len(block):
            raise ConfigError("sub-ansatz register does not match its block")

    circs = [attach_noise(c, noise, seed=seed) for c in sub_ansatzes]
    rhos = [run(c) for c in circs]
    bars = [dual_state(c) for c in circs]
    syms = [(b @ r if spec.asymmetric else 0.5 * (b @ r + r @ b))
            for r, b in zip(rhos, bars)]
    rbs = [r @ b for r, b in zip(rhos, bars)]
    if spec.merge_identical_blocks:
        bkeys = [_block_fingerprint(c) for c in circs]
    else:
        bkeys = [str(l) for l in range(len(circs))]

    table = PowerTable(h)
    queries: dict[QueryKey, Query] = {}

    def dsp_key(l: int, axes: str) -> QueryKey:
        key = ("dc", "dsp", bkeys[l], axes)
        if key not in queries:
            if backend == "circuit":
                res = dsp_expectation(circs[l], PauliTerm(axes, 1.0), mode="ancilla")
                val = complex(res.numerator)
            else:
                val = expect_pauli(syms[l], axes)
            var = var_dsp(rhos[l], bars[l], axes, rb=rbs[l]) if with_variances else 0.0
            queries[key] = Query(("dc", "dsp", bkeys[l]), axes, val, var)
        return key

    def state_block_key(which: str, l: int, axes: str) -> QueryKey:
        key = ("dc", which, bkeys[l], axes)
        if key not in queries:
            mat = rhos[l] if which == "rho" else bars[l]
            val = expect_pauli(mat, axes)
            queries[key] = Query(("dc", which, bkeys[l]), axes, val,
                                 var_pauli_state(float(np.real(val))))
        return key

    s_terms: dict[tuple[int, int], list[Term]] = {}
    h_terms: dict[tuple[int, int], list[Term]] = {}
    s_const: dict[tuple[int, int], complex] = {}
    h_const: dict[tuple[int, int], complex] = {}

    d = 1 << n
    s_const[(0, 0)] = complex(d)
    h_const[(0, 0)] = h.identity_coefficient * d
    tr_rhos = [complex(np.trace(r)) for r in rhos]
    tr_bars = [complex(np.trace(b)) for b in bars]

    def bulk_entry(power: int) -> list[Term]:
        entry: list[Term] = []
        for t in table.power(power):
            subs = factorize(t, part)
            keys = tuple(dsp_key(l, subs[l].axes) for l in range(len(part.blocks)))
            entry.append((t.coeff, keys))
        return entry

    def boundary_entry(power: int) -> tuple[complex, list[Term]]:
        const = 0.0 + 0.0j
        entry: list[Term] = []
        for t in table.power(power):
            subs = factorize(t, part)
            if t.is_identity:
                prod_r = np.prod(tr_rhos)
                prod_b = np.prod(tr_bars)
                const += t.coeff * (prod_r if spec.boundary_state_only
                                    else 0.5 * (prod_r + prod_b))
                continue
            live = [l for l in range(len(part.blocks)) if not subs[l].is_identity]
            fold_r = np.prod([tr_rhos[l] for l in range(len(part.blocks)) if l not in live] or [1.0])
            fold_b = np.prod([tr_bars[l] for l in range(len(part.blocks)) if l not in live] or [1.0])
            keys_r = tuple(state_block_key("rho", l, subs[l].axes) for l in live)
            if spec.boundary_state_only:
                entry.append((t.coeff * fold_r, keys_r))
            else:
                keys_b = tuple(state_block_key("dual", l, subs[l].axes) for l in live)
                entry.append((0.5 * t.coeff * fold_r, keys_r))
                entry.append((0.5 * t.coeff * fold_b, keys_b))
        return const, entry

    for j in range(1, m):
        cs, es = boundary_entry(j - 1)
        s_const[(0, j)] = cs
        s_terms[(0, j)] = es
        ch, eh = boundary_entry(j)
        h_const[(0, j)] = ch
        h_terms[(0, j)] = eh
    for i in range(1, m):
        for j in range(i, m):
            s_terms[(i, j)] = bulk_entry(i + j - 2)
            h_terms[(i, j)] = bulk_entry(i + j - 1)

    return SubspaceMatrices("dc", m, n, h.weight(), queries,
                            s_terms, h_terms, s_const, h_const)


def build(spec: SubspaceSpec, ansatz, noise: NoiseModel, backend: str = "oracle",
          seed: int = 0, with_variances: bool = True) -> SubspaceMatrices:
    """Dispatch on the basis family (ansatz: one circuit, or one per block)."""
    if spec.kind == "power":
        return build_power(spec, ansatz, noise, backend, seed, with_variances)
    if spec.kind == "fault":
        return build_fault(spec, ansatz, noise, backend, seed, with_variances)
    return build_dc(spec, ansatz, noise, backend, seed, with_variances)


@dataclass(frozen=True)
class QueryPlan:
    """Measurement bookkeeping for one subspace construction."""

    kind: str
    reuse: bool
    queries: tuple[QueryKey, ...]
    q: int

    def shots_per_query(self, ns: float) -> float:
        if ns < self.q:
            raise ValueError(f"budget {ns} below one shot per query ({self.q})")
        return ns / self.q


def plan_queries(spec: SubspaceSpec, reuse: bool,
                 block_keys: Sequence[str] | None = None) -> QueryPlan:
    """Enumerate the (state, observable) pairs the matrix formulas consume.

    Without reuse every occurrence across every ordered matrix element is
    tallied; with reuse duplicates collapse.  Constants (the corner, identity
    readings of plain states) are never queries.
    """
    h = spec.hamiltonian
    table = PowerTable(h)
    m = spec.m
    ident = _identity_axes(h.n)
    occurrences = 0
    unique: set[QueryKey] = set()

    if spec.kind == "fault":
        axes_list = [ident] + [t.axes for t in h if not t.is_identity]
        for i in range(m):
            for j in range(m):
                for axes in axes_list:
                    occurrences += 1
                    unique.add(("fault", i, j, axes))
    elif spec.kind == "power":
        for i in range(1, m):
            for j in range(1, m):
                for power in (i + j - 2, i + j - 1):
                    for t in table.power(power):
                        occurrences += 1
                        unique.add(("power", "dsp", t.axes))
        # boundary row and column are distinct elements in the ordered tally
        for _side in range(2):
            for j in range(1, m):
                for power in (j - 1, j):
                    for t in table.power(power):
                        if t.is_identity:
                            continue
                        occurrences += 1 if spec.boundary_state_only else 2
                        unique.add(("power", "rho", t.axes))
                        if not spec.boundary_state_only:
                            unique.add(("power", "dual", t.axes))
    else:
        part = spec.partition
        nblocks = len(part.blocks)
        if block_keys is None:
            if spec.merge_identical_blocks and len({len(b) for b in part.blocks}) == 1:
                block_keys = ["shared"] * nblocks
            else:
                block_keys = [str(l) for l in range(nblocks)]
        for i in range(1, m):
            for j in range(1, m):
                for power in (i + j - 2, i + j - 1):
                    for t in table.power(power):
                        subs = factorize(t, part)
                        for l in range(nblocks):
                            occurrences += 1
                            unique.add(("dc", "dsp", block_keys[l], subs[l].axes))
        for _side in range(2):  # boundary row and column
            for j in range(1, m):
                for power in (j - 1, j):
                    for t in table.power(power):
                        if t.is_identity:
                            continue
                        subs = factorize(t, part)
                        for l in range(nblocks):
                            if subs[l].is_identity:
                                continue
                            occurrences += 1 if spec.boundary_state_only else 2
                            unique.add(("dc", "rho", block_keys[l], subs[l].axes))
                            if not spec.boundary_state_only:
                                unique.add(("dc", "dual", block_keys[l], subs[l].axes))

    ordered = tuple(sorted(unique, key=repr))
    q = len(ordered) if reuse else occurrences
    return QueryPlan(spec.kind, reuse, ordered, q)
