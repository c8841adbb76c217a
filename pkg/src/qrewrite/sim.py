"""Exact circuit execution: statevector evolution, measurement branching,
full-unitary construction, and Kraus/Choi channel extraction.

Two independent channel paths are provided: `extract_channel` enumerates
measurement branches, while `channel_of_deferred` builds a single unitary
for circuits whose measurements all sit at the end of the body. Cross
checking the two is part of the verification story.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import (
    Circuit,
    ClassicalCtrl,
    ClassicalXor,
    Gate1,
    Gate2,
    Instruction,
    Measure,
)

SQRT_HALF = math.sqrt(0.5)
PRUNE_EPS = 1e-12  # zero-probability branch threshold
ATOL = 1e-9  # entrywise numerical tolerance


class SimulationError(ValueError):
    """Circuit cannot be executed as requested."""


@dataclass
class Branch:
    """One measurement outcome path: classical assignments, cumulative
    probability, and the renormalized post-measurement state."""

    outcome: dict[int, int]
    probability: float
    state: np.ndarray

    def key(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.outcome.items()))


@dataclass
class Channel:
    """Kraus operators (each 2^n_out x 2^n_in) and the derived Choi matrix."""

    kraus: list[np.ndarray]
    choi: np.ndarray
    n_in: int
    n_out: int


def basis_state(n_wires: int, index: int) -> np.ndarray:
    vec = np.zeros(1 << n_wires, dtype=complex)
    vec[index] = 1.0
    return vec


def _bit(idx: np.ndarray, n: int, wire: int) -> np.ndarray:
    return (idx >> (n - 1 - wire)) & 1


def apply_gate(state: np.ndarray, instr: Instruction) -> np.ndarray:
    """Apply a pure gate (H/X/Z/CNOT/CZ) to a full statevector."""
    n = state.shape[0].bit_length() - 1
    if 1 << n != state.shape[0]:
        raise SimulationError("state dimension is not a power of two")
    idx = np.arange(state.shape[0])
    if isinstance(instr, Gate1):
        mask = 1 << (n - 1 - instr.target)
        bit = _bit(idx, n, instr.target)
        if instr.kind == "X":
            return state[idx ^ mask]
        if instr.kind == "Z":
            return state * (1 - 2 * bit)
        # H: new[i] = (state[i with w=0] + (-1)^bit * state[i with w=1]) / sqrt(2)
        return (state[idx & ~mask] + (1 - 2 * bit) * state[idx | mask]) * SQRT_HALF
    if isinstance(instr, Gate2):
        cbit = _bit(idx, n, instr.control)
        if instr.kind == "CNOT":
            return state[idx ^ (cbit << (n - 1 - instr.target))]
        tbit = _bit(idx, n, instr.target)
        return state * (1 - 2 * (cbit & tbit))
    raise SimulationError(f"not a pure gate instruction: {instr!r}")


def initial_state(c: Circuit, input_state: np.ndarray | None) -> np.ndarray:
    """Joint state over all wires: input register tensored with preparations."""
    inputs = c.effective_inputs
    dim_in = 1 << len(inputs)
    if input_state is None:
        if inputs:
            raise SimulationError("circuit has input wires but no input was given")
        input_state = np.ones(1, dtype=complex)
    vec = np.asarray(input_state, dtype=complex).reshape(-1)
    if vec.shape[0] != dim_in:
        raise SimulationError(
            f"input has dimension {vec.shape[0]}, expected {dim_in}"
        )
    if abs(np.linalg.norm(vec) - 1.0) > ATOL:
        raise SimulationError("input state is not normalized")

    prepped = {w for p in c.preps for w in p.wires}
    for w in range(c.num_qubits):
        if w not in prepped and w not in inputs:
            raise SimulationError(f"wire q{w} has no prep and is not an input")

    n = c.num_qubits
    idx = np.arange(1 << n)
    amp = np.ones(1 << n, dtype=complex)
    if inputs:
        in_index = np.zeros(1 << n, dtype=int)
        for pos, w in enumerate(inputs):
            in_index |= _bit(idx, n, w) << (len(inputs) - 1 - pos)
        amp = vec[in_index]
    for p in c.preps:
        if p.kind == "zero":
            amp = amp * (_bit(idx, n, p.wires[0]) == 0)
        elif p.kind == "plus":
            amp = amp * SQRT_HALF
        else:  # bell pair: (|00> + |11>)/sqrt(2) on the two wires
            a, b = p.wires
            amp = amp * (_bit(idx, n, a) == _bit(idx, n, b)) * SQRT_HALF
    return amp


def run(c: Circuit, input_state: np.ndarray | None = None) -> list[Branch]:
    """Execute the circuit, splitting a branch at every measurement.

    Returns all surviving branches (probability >= 1e-12); their
    probabilities sum to 1 and each state is renormalized.
    """
    n = c.num_qubits
    branches = [Branch({}, 1.0, initial_state(c, input_state))]
    idx = np.arange(1 << n)
    for instr in c.body:
        if isinstance(instr, (Gate1, Gate2)):
            for br in branches:
                br.state = apply_gate(br.state, instr)
        elif isinstance(instr, Measure):
            bit = _bit(idx, n, instr.target)
            new_branches: list[Branch] = []
            for br in branches:
                for value in (0, 1):
                    proj = np.where(bit == value, br.state, 0.0)
                    p_local = float(np.vdot(proj, proj).real)
                    p_total = br.probability * p_local
                    if p_total < PRUNE_EPS:
                        continue
                    outcome = dict(br.outcome)
                    outcome[instr.result] = value
                    new_branches.append(
                        Branch(outcome, p_total, proj / math.sqrt(p_local))
                    )
            branches = new_branches
        elif isinstance(instr, ClassicalCtrl):
            gate_kind = "X" if instr.kind == "CX" else "Z"
            for br in branches:
                if instr.control not in br.outcome:
                    raise SimulationError(
                        f"use of unassigned classical wire c{instr.control}"
                    )
                if br.outcome[instr.control]:
                    br.state = apply_gate(br.state, Gate1(gate_kind, instr.target))
        else:  # ClassicalXor
            for br in branches:
                if instr.a not in br.outcome or instr.b not in br.outcome:
                    raise SimulationError("use of unassigned classical wire in XOR")
                br.outcome[instr.out] = br.outcome[instr.a] ^ br.outcome[instr.b]
    return branches


def build_unitary(c: Circuit) -> np.ndarray:
    """Unitary of a pure-gate circuit, built by applying gates to basis columns."""
    if c.preps:
        raise SimulationError("circuit with preps is not a pure gate circuit")
    return _unitary_of(c.body, c.num_qubits)


def _unitary_of(body: tuple[Instruction, ...], n: int) -> np.ndarray:
    for instr in body:
        if not isinstance(instr, (Gate1, Gate2)):
            raise SimulationError(f"non-unitary instruction {instr!r}")
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        col = basis_state(n, j)
        for instr in body:
            col = apply_gate(col, instr)
        mat[:, j] = col
    return mat


def is_unitary(mat: np.ndarray, tol: float = ATOL) -> bool:
    dim = mat.shape[0]
    return mat.shape == (dim, dim) and bool(
        np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) <= tol
    )


# ----------------------------------------------------------------------
# Channels
# ----------------------------------------------------------------------


def choi_of_kraus(kraus: list[np.ndarray]) -> np.ndarray:
    d = kraus[0].size
    choi = np.zeros((d, d), dtype=complex)
    for k in kraus:
        v = k.reshape(-1)
        choi += np.outer(v, v.conj())
    return choi


def make_channel(kraus: list[np.ndarray], n_in: int, n_out: int) -> Channel:
    """Assemble a channel, pruning negligible Kraus terms and checking
    completeness (sum K^dag K = I) and Choi Hermiticity."""
    kraus = [k for k in kraus if np.linalg.norm(k) > PRUNE_EPS]
    if not kraus:
        raise SimulationError("channel has no Kraus operators")
    dim_in = 1 << n_in
    total = sum(k.conj().T @ k for k in kraus)
    if np.max(np.abs(total - np.eye(dim_in))) > ATOL:
        raise SimulationError("Kraus completeness violated")
    choi = choi_of_kraus(kraus)
    if np.max(np.abs(choi - choi.conj().T)) > ATOL:
        raise SimulationError("Choi matrix is not Hermitian")
    return Channel(kraus, choi, n_in, n_out)


def unitary_channel(mat: np.ndarray) -> Channel:
    n = mat.shape[0].bit_length() - 1
    return make_channel([np.array(mat, dtype=complex)], n, n)


def _restriction_indices(n: int, outs: tuple[int, ...], rest: tuple[int, ...]) -> np.ndarray:
    """index_map[o, d] = full basis index with O-bits o and rest-bits d."""
    fi = np.zeros((1 << len(outs), 1 << len(rest)), dtype=int)
    for o in range(1 << len(outs)):
        base = 0
        for pos, w in enumerate(outs):
            base |= ((o >> (len(outs) - 1 - pos)) & 1) << (n - 1 - w)
        for d in range(1 << len(rest)):
            full = base
            for pos, w in enumerate(rest):
                full |= ((d >> (len(rest) - 1 - pos)) & 1) << (n - 1 - w)
            fi[o, d] = full
    return fi


def extract_channel(c: Circuit) -> Channel:
    """Channel from input wires to output wires by branch enumeration.

    One Kraus operator per (measurement outcome, discard-wire basis index);
    the Choi matrix marginalizes outcome labels, so it fingerprints the
    channel independently of the Kraus decomposition.
    """
    n = c.num_qubits
    inputs = c.effective_inputs
    outs = c.output_wires
    disc = c.discard_wires
    fi = _restriction_indices(n, outs, disc)
    dim_in, dim_out, dim_d = 1 << len(inputs), 1 << len(outs), 1 << len(disc)

    kraus_acc: dict[tuple, np.ndarray] = {}
    for j in range(dim_in):
        for br in run(c, basis_state(len(inputs), j)):
            unnorm = math.sqrt(br.probability) * br.state
            for d in range(dim_d):
                key = (br.key(), d)
                mat = kraus_acc.get(key)
                if mat is None:
                    mat = kraus_acc[key] = np.zeros((dim_out, dim_in), dtype=complex)
                mat[:, j] = mat[:, j] + unnorm[fi[:, d]]
    return make_channel(list(kraus_acc.values()), len(inputs), len(outs))


def channel_of_deferred(c: Circuit) -> Channel:
    """Channel of a circuit whose body is pure gates followed only by
    measurements (the Rule III canonical form), via a single unitary.

    This is an independent code path from `extract_channel`: no branch
    enumeration, one matrix build plus index arithmetic.
    """
    n = c.num_qubits
    split = len(c.body)
    for i, instr in enumerate(c.body):
        if isinstance(instr, Measure):
            split = i
            break
    gates, tail = c.body[:split], c.body[split:]
    measured: list[int] = []
    for instr in tail:
        if not isinstance(instr, Measure):
            raise SimulationError("body is not gates followed by measurements")
        if instr.target in measured:
            raise SimulationError("wire measured twice in deferred form")
        measured.append(instr.target)

    inputs = c.effective_inputs
    outs, disc = c.output_wires, c.discard_wires
    dim_in, dim_out = 1 << len(inputs), 1 << len(outs)
    u = _unitary_of(gates, n)
    v = np.zeros((1 << n, dim_in), dtype=complex)
    for j in range(dim_in):
        v[:, j] = u @ initial_state(c, basis_state(len(inputs), j))

    m_sorted = tuple(sorted(measured))
    free_d = tuple(w for w in disc if w not in m_sorted)
    out_pos = {w: k for k, w in enumerate(outs)}
    kraus: list[np.ndarray] = []
    for b in range(1 << len(m_sorted)):
        bits = {
            w: (b >> (len(m_sorted) - 1 - k)) & 1 for k, w in enumerate(m_sorted)
        }
        for d in range(1 << len(free_d)):
            for pos, w in enumerate(free_d):
                bits[w] = (d >> (len(free_d) - 1 - pos)) & 1
            mat = np.zeros((dim_out, dim_in), dtype=complex)
            for o in range(dim_out):
                consistent = all(
                    ((o >> (len(outs) - 1 - out_pos[w])) & 1) == bits[w]
                    for w in m_sorted
                    if w in out_pos
                )
                if not consistent:
                    continue
                full = 0
                for k, w in enumerate(outs):
                    full |= ((o >> (len(outs) - 1 - k)) & 1) << (n - 1 - w)
                for w in disc:
                    full |= bits[w] << (n - 1 - w)
                mat[o, :] = v[full, :]
            kraus.append(mat)
    return make_channel(kraus, len(inputs), len(outs))


def reduced_density(state: np.ndarray, keep: tuple[int, ...]) -> np.ndarray:
    """Density matrix of the kept wires, tracing out the rest."""
    n = state.shape[0].bit_length() - 1
    rest = tuple(w for w in range(n) if w not in keep)
    t = state.reshape([2] * n if n else [1])
    if n:
        t = t.transpose(keep + rest)
    t = t.reshape(1 << len(keep), -1)
    return t @ t.conj().T


def output_density(c: Circuit, input_state: np.ndarray | None = None) -> np.ndarray:
    """Outcome-marginalized density matrix on the output wires."""
    outs = c.output_wires
    rho = np.zeros((1 << len(outs), 1 << len(outs)), dtype=complex)
    for br in run(c, input_state):
        rho += br.probability * reduced_density(br.state, outs)
    return rho


def fidelity(state: np.ndarray, rho: np.ndarray) -> float:
    return float((state.conj() @ rho @ state).real)
