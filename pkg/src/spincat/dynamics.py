"""Unitary propagation under shearing (S_z^2) and collective S_x rotation pulses.

Pulses act either on the full Dicke space or on the subspace spanned by the
m <-> -m symmetrized basis states, which both generators leave invariant.
Rotations use a per-size cached eigendecomposition of the real-symmetric S_x
matrix, so repeated propagation is exact to rounding with no step-size error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from spincat.spin_core import DickeState, _frozen_array, sx_operator

SYMMETRY_TOL = 1e-8  # max |a_m - a_(-m)| accepted when projecting


@dataclass(frozen=True)
class PulseSequence:
    """Ordered (Q_k, mu_k) pairs: shear by exp(-i Q_k S_z^2), then rotate by exp(-i mu_k S_x)."""

    pulses: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        clean = tuple((float(q), float(mu)) for q, mu in self.pulses)
        if not all(math.isfinite(q) and math.isfinite(mu) for q, mu in clean):
            raise ValueError("pulse parameters must be finite")
        object.__setattr__(self, "pulses", clean)

    @property
    def n_pulses(self) -> int:
        return len(self.pulses)

    def total_q(self) -> float:
        """Accumulated shearing strength over all pulses."""
        return float(sum(q for q, _ in self.pulses))

    def normalized_q(self, n_atoms: int) -> float:
        """Atom-number-normalized shearing budget sqrt(N) * total_q."""
        return math.sqrt(n_atoms) * self.total_q()

    def inverse(self) -> "PulseSequence":
        """Sequence that exactly undoes this one.

        Reverses the pulse order and negates every parameter.  Because each
        step shears before it rotates, undoing the product needs the pairing
        shifted by half a step, so the result carries n+1 steps padded with a
        zero leading shear and a zero trailing rotation.
        """
        if not self.pulses:
            return PulseSequence(())
        qs = [0.0] + [-q for q, _ in reversed(self.pulses)]
        mus = [-mu for _, mu in reversed(self.pulses)] + [0.0]
        return PulseSequence(tuple(zip(qs, mus)))


@dataclass(frozen=True)
class SymmetricState:
    """State in the symmetrized sector: amplitudes over |S, m>_s, m = S - index."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        dim = self.n_atoms // 2 + 1
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (dim,):
            raise ValueError(
                f"symmetric-sector amplitudes must have length {dim}, got {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if not math.isclose(norm, 1.0, rel_tol=0.0, abs_tol=1e-6):
            raise ValueError(f"state is not normalized: |psi| = {norm!r}")
        object.__setattr__(self, "amplitudes", _frozen_array(amps))

    @property
    def m_values(self) -> np.ndarray:
        """m labels in amplitude order: S, S-1, ..., down to 0 (even N) or 1/2 (odd N)."""
        return self.n_atoms / 2.0 - np.arange(self.n_atoms // 2 + 1)


State = Union[DickeState, SymmetricState]


def to_symmetric(state: DickeState, tol: float = SYMMETRY_TOL) -> SymmetricState:
    """Project a mirror-symmetric state onto the symmetrized basis.

    Raises ValueError when max |a_m - a_(-m)| exceeds `tol`; embedding the
    result back with `from_symmetric` reproduces the input to rounding.
    """
    a = state.amplitudes
    defect = float(np.max(np.abs(a - a[::-1])))
    if defect > tol:
        raise ValueError(
            f"state breaks m <-> -m symmetry (defect {defect:g} > tol {tol:g})"
        )
    dim = state.n_atoms // 2 + 1
    idx = np.arange(dim)
    sym = (a[idx] + a[state.n_atoms - idx]) * math.sqrt(0.5)
    if state.n_atoms % 2 == 0:
        sym[-1] = a[dim - 1]  # m = 0 enters unweighted
    return SymmetricState(state.n_atoms, sym)


def from_symmetric(state: SymmetricState) -> DickeState:
    """Embed a symmetric-sector state back into the full Dicke space."""
    n = state.n_atoms
    dim = n // 2 + 1
    idx = np.arange(dim)
    full = np.zeros(n + 1, dtype=complex)
    full[idx] += state.amplitudes * math.sqrt(0.5)
    full[n - idx] += state.amplitudes * math.sqrt(0.5)
    if n % 2 == 0:
        full[dim - 1] = state.amplitudes[-1]
    return DickeState(n, full)


@lru_cache(maxsize=None)
def _embedding_matrix(n_atoms: int) -> np.ndarray:
    """Isometry from the symmetric sector into the full Dicke space."""
    dim = n_atoms // 2 + 1
    e = np.zeros((n_atoms + 1, dim))
    for j in range(dim):
        if n_atoms % 2 == 0 and j == dim - 1:
            e[j, j] = 1.0
        else:
            e[j, j] = math.sqrt(0.5)
            e[n_atoms - j, j] = math.sqrt(0.5)
    return _frozen_array(e, dtype=float)


@lru_cache(maxsize=None)
def _sx_eigensystem(n_atoms: int, symmetric: bool):
    """Cached eigendecomposition of S_x in the requested basis (write-once, read-many)."""
    full = sx_operator(n_atoms).matrix.real
    if symmetric:
        e = _embedding_matrix(n_atoms)
        mat = e.T @ full @ e
    else:
        mat = full
    w, v = np.linalg.eigh(mat)
    return _frozen_array(w, dtype=float), _frozen_array(v.astype(complex))


def _same_kind(state: State, amplitudes: np.ndarray) -> State:
    return type(state)(state.n_atoms, amplitudes)


def propagate_oat(state: State, q: float) -> State:
    """Apply the shearing pulse exp(-i q S_z^2), diagonal in either basis."""
    if not math.isfinite(q):
        raise ValueError("shearing strength must be finite")
    phases = np.exp(-1j * q * state.m_values**2)
    return _same_kind(state, state.amplitudes * phases)


def propagate_rotation(state: State, mu: float) -> State:
    """Apply the collective rotation exp(-i mu S_x)."""
    if not math.isfinite(mu):
        raise ValueError("rotation angle must be finite")
    w, v = _sx_eigensystem(state.n_atoms, isinstance(state, SymmetricState))
    amps = v @ (np.exp(-1j * mu * w) * (v.conj().T @ state.amplitudes))
    return _same_kind(state, amps)


def propagate_sequence(initial: State, seq: PulseSequence) -> State:
    """Run all pulses in order: shear then rotate, step by step."""
    state = initial
    for q, mu in seq.pulses:
        state = propagate_rotation(propagate_oat(state, q), mu)
    return state


def transition_spectrum(n_atoms: int) -> list[tuple[float, float]]:
    """S_z^2 level gaps (m, m^2 - (m-1)^2) between symmetric-sector neighbors.

    The gaps 2m - 1 are pairwise distinct with rational ratios, the
    controllability diagnostic for shear-plus-rotation steering.
    """
    if n_atoms < 2:
        raise ValueError(f"need at least 2 atoms, got {n_atoms}")
    s = n_atoms / 2.0
    m = 1.0 if n_atoms % 2 == 0 else 1.5
    spectrum = []
    while m <= s + 1e-9:
        spectrum.append((m, 2.0 * m - 1.0))
        m += 1.0
    return spectrum
