"""Search for shear/rotate pulse sequences that hit a target cat state.

Minimizes the infidelity of the propagated equatorial coherent state against
the target superposition with bound-constrained limited-memory BFGS, fed by
central finite-difference gradients.  A fixed normalized shearing budget is
enforced exactly through a softmax reparametrization of the shear fractions,
never through penalties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from spincat.dynamics import PulseSequence, propagate_sequence
from spincat.spin_core import CatSpec, DickeState, make_cat, make_css

FD_STEP = 1e-6        # relative central-difference step
FTOL = 1e-12          # objective decrease per step at convergence
GTOL = 1e-9           # projected-gradient norm at convergence
PLATEAU_SPAN = 5      # iterations over which < FTOL total progress means converged


@dataclass(frozen=True)
class FixedBudget:
    """Pin the normalized shearing budget sqrt(N) * sum(Q_k) to `q_tilde`."""

    q_tilde: float

    def __post_init__(self):
        if not (math.isfinite(self.q_tilde) and self.q_tilde > 0.0):
            raise ValueError(f"budget must be positive, got {self.q_tilde!r}")


@dataclass(frozen=True)
class OptimizationProblem:
    """One optimization task: reach the cat `target` from the equatorial CSS.

    mode=None optimizes all 2n pulse parameters freely (Q_k >= 0,
    mu_k in [-pi, pi]); mode=FixedBudget(q) optimizes n-1 softmax shear
    weights plus the n rotation angles.  `initial_sequences` adds warm-start
    restarts on top of the seeded random ones.
    """

    n_atoms: int
    target: CatSpec
    n_pulses: int
    mode: FixedBudget | None = None
    seed: int = 0
    max_iterations: int = 1000
    restarts: int = 8
    initial_sequences: tuple[PulseSequence, ...] = ()

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be positive")
        if self.n_pulses < 0:
            raise ValueError("n_pulses must be nonnegative")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        object.__setattr__(self, "initial_sequences", tuple(self.initial_sequences))


@dataclass(frozen=True)
class OptimizationResult:
    sequence: PulseSequence
    infidelity: float
    iterations: int
    converged: bool
    history: tuple[float, ...]


@lru_cache(maxsize=64)
def _target_state(n_atoms: int, spec: CatSpec) -> DickeState:
    return make_cat(n_atoms, spec)


@lru_cache(maxsize=64)
def _initial_css(n_atoms: int) -> DickeState:
    return make_css(n_atoms, math.pi / 2, 0.0)


def infidelity(n_atoms: int, target: CatSpec, seq: PulseSequence) -> float:
    """1 - |<target cat | sequence applied to the x-axis CSS>|^2."""
    cat = _target_state(n_atoms, target)
    final = propagate_sequence(_initial_css(n_atoms), seq)
    return max(0.0, 1.0 - cat.fidelity(final))


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.append(logits, 0.0)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _n_params(problem: OptimizationProblem) -> int:
    n = problem.n_pulses
    return 2 * n if problem.mode is None else 2 * n - 1


def _bounds(problem: OptimizationProblem):
    n = problem.n_pulses
    if problem.mode is None:
        return [(0.0, None)] * n + [(-math.pi, math.pi)] * n
    return [(None, None)] * (n - 1) + [(-math.pi, math.pi)] * n


def _sequence_from_params(problem: OptimizationProblem, x: np.ndarray) -> PulseSequence:
    n = problem.n_pulses
    if problem.mode is None:
        qs = x[:n]
        mus = x[n:]
    else:
        fractions = _softmax(np.asarray(x[: n - 1], dtype=float))
        qs = problem.mode.q_tilde / math.sqrt(problem.n_atoms) * fractions
        mus = x[n - 1:]
    return PulseSequence(tuple(zip(qs, mus)))


def _params_from_sequence(problem: OptimizationProblem, seq: PulseSequence) -> np.ndarray:
    if seq.n_pulses != problem.n_pulses:
        raise ValueError(
            f"sequence has {seq.n_pulses} pulses, problem wants {problem.n_pulses}"
        )
    qs = np.array([q for q, _ in seq.pulses])
    mus = np.array([mu for _, mu in seq.pulses])
    if problem.mode is None:
        return np.concatenate([qs, mus])
    total = qs.sum()
    if total <= 0.0:
        raise ValueError("budgeted warm start needs a positive total shear")
    # invert the softmax up to its shift gauge; floor keeps log finite
    fractions = np.maximum(qs / total, 1e-300)
    logits = np.log(fractions[:-1]) - math.log(fractions[-1])
    return np.concatenate([logits, mus])


def gradient_fd(problem: OptimizationProblem, seq: PulseSequence,
                step: float = FD_STEP) -> np.ndarray:
    """Central-difference infidelity gradient in the problem's parametrization.

    Length 2n in free mode; 2n-1 in fixed-budget mode (softmax weights plus
    rotation angles).
    """
    x = _params_from_sequence(problem, seq)
    return _gradient_at(problem, x, step)


def _objective(problem: OptimizationProblem, x: np.ndarray) -> float:
    return infidelity(problem.n_atoms, problem.target, _sequence_from_params(problem, x))


def _gradient_at(problem: OptimizationProblem, x: np.ndarray,
                 step: float = FD_STEP) -> np.ndarray:
    grad = np.zeros_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (_objective(problem, xp) - _objective(problem, xm)) / (2.0 * h)
    return grad


def _first_guess(problem: OptimizationProblem) -> np.ndarray:
    """Deterministic seed: all shear up front and a quarter-turn rotation."""
    n = problem.n_pulses
    mus = np.zeros(n)
    mus[0] = math.pi / 2
    if problem.mode is None:
        qs = np.zeros(n)
        qs[0] = 1.0 / math.sqrt(problem.n_atoms)
        return np.concatenate([qs, mus])
    logits = np.zeros(n - 1)
    if n > 1:
        logits[0] = 4.0
    return np.concatenate([logits, mus])


def _random_guess(problem: OptimizationProblem, rng: np.random.Generator) -> np.ndarray:
    n = problem.n_pulses
    weights = rng.dirichlet(np.ones(n))
    mus = rng.uniform(-math.pi, math.pi, size=n)
    if problem.mode is None:
        total = rng.uniform(0.2, 2.0) / math.sqrt(problem.n_atoms)
        return np.concatenate([total * weights, mus])
    fractions = np.maximum(weights, 1e-12)
    logits = np.log(fractions[:-1]) - math.log(fractions[-1])
    return np.concatenate([logits, mus])


def optimize(problem: OptimizationProblem) -> OptimizationResult:
    """Best-of-restarts minimization; deterministic for a fixed problem seed.

    Returns converged=False (never raises) when every restart stops on the
    iteration cap.  The history holds the accepted restart's best infidelity
    per iteration, which is non-increasing by construction.
    """
    if problem.n_pulses == 0:
        eps = infidelity(problem.n_atoms, problem.target, PulseSequence(()))
        return OptimizationResult(
            sequence=PulseSequence(()), infidelity=eps, iterations=0,
            converged=True, history=(eps,),
        )

    starts = [_first_guess(problem)]
    for warm in problem.initial_sequences:
        starts.append(_params_from_sequence(problem, warm))
    child_seeds = np.random.SeedSequence(problem.seed).spawn(problem.restarts)
    for child in child_seeds[1:]:
        starts.append(_random_guess(problem, np.random.default_rng(child)))

    best = None
    for x0 in starts:
        history: list[float] = []
        run_best = math.inf
        plateaued = False

        def objective(x):
            nonlocal run_best
            val = _objective(problem, x)
            run_best = min(run_best, val)
            return val

        def on_iteration(xk):
            nonlocal plateaued
            history.append(run_best)
            if (
                len(history) > PLATEAU_SPAN
                and history[-1 - PLATEAU_SPAN] - history[-1] < FTOL
            ):
                plateaued = True
                raise StopIteration

        res = minimize(
            objective,
            x0,
            jac=lambda x: _gradient_at(problem, x),
            method="L-BFGS-B",
            bounds=_bounds(problem),
            callback=on_iteration,
            options={"maxiter": problem.max_iterations, "ftol": FTOL, "gtol": GTOL},
        )
        seq = _sequence_from_params(problem, res.x)
        eps = infidelity(problem.n_atoms, problem.target, seq)
        history.append(min(run_best, eps))
        candidate = OptimizationResult(
            sequence=seq,
            infidelity=eps,
            iterations=int(res.nit),
            converged=bool(res.status == 0) or plateaued,
            history=tuple(np.minimum.accumulate(history)),
        )
        if best is None or candidate.infidelity < best.infidelity:
            best = candidate
    return best
