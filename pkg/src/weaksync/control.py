"""Riccati-based gain design for the adaptive protocol.

The Riccati equation ``A'P + PA - PBB'P + I = 0`` is solved by Newton-Kleinman
iteration.  Every inner step is a Lyapunov solve done by dense Kronecker
linearization, which is fine for the small state dimensions of agent models.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


class NotStabilizableError(ValueError):
    def __init__(self, witness: complex):
        self.witness = witness
        super().__init__(f"(A, B) is not stabilizable: PBH rank test fails at eigenvalue {_fmt_eig(witness)}")


class NotHurwitzError(ValueError):
    def __init__(self, eigenvalue: complex):
        self.eigenvalue = eigenvalue
        super().__init__(f"matrix is not Hurwitz: eigenvalue {_fmt_eig(eigenvalue)} has nonnegative real part")


class RiccatiConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"Newton-Kleinman did not converge in {iterations} iterations (residual {residual:.3e})")


def _fmt_eig(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


@dataclass(frozen=True)
class AgentModel:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.B, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        b = np.atleast_2d(b)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got shape {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise ValueError(f"B must have {a.shape[0]} rows, got shape {b.shape}")
        if b.shape[1] < 1:
            raise ValueError("B needs at least one column")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("A and B must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


def triple_integrator() -> AgentModel:
    a = np.diag([1.0, 1.0], k=1)
    return AgentModel(a, np.array([[0.0], [0.0], [1.0]]))


class Stabilizability(NamedTuple):
    stabilizable: bool
    witness: complex | None = None

    def __bool__(self) -> bool:
        return self.stabilizable


def stabilizability_check(model: AgentModel, tol: float | None = None) -> Stabilizability:
    """PBH test: ``rank[lambda I - A, B] = n`` at every eigenvalue with Re >= 0."""
    a, b, n = model.A, model.B, model.n
    scale = max(np.linalg.norm(a, 2), np.linalg.norm(b, 2), 1.0)
    if tol is None:
        tol = 1e-9 * scale
    for lam in sorted(np.linalg.eigvals(a), key=lambda z: (-z.real, z.imag)):
        if lam.real < -tol:
            continue
        pbh = np.hstack([lam * np.eye(n) - a, b.astype(complex)])
        sv = np.linalg.svd(pbh, compute_uv=False)
        if np.sum(sv > tol * max(1.0, sv[0])) < n:
            return Stabilizability(False, complex(lam) if lam.imag else complex(lam.real))
    return Stabilizability(True, None)


def solve_lyapunov(F, Q) -> np.ndarray:
    """Solve ``F'X + XF + Q = 0`` for Hurwitz ``F``."""
    f = np.atleast_2d(np.asarray(F, dtype=float))
    q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = f.shape[0]
    if f.shape != (n, n) or q.shape != (n, n):
        raise ValueError(f"shape mismatch: F {f.shape}, Q {q.shape}")
    eig = np.linalg.eigvals(f)
    worst = eig[np.argmax(eig.real)]
    if worst.real >= 0:
        raise NotHurwitzError(worst)
    # column-major vec: vec(F'X) = (I kron F') vec X, vec(XF) = (F' kron I) vec X
    eye = np.eye(n)
    op = np.kron(eye, f.T) + np.kron(f.T, eye)
    x = np.linalg.solve(op, -q.reshape(-1, order="F")).reshape((n, n), order="F")
    return 0.5 * (x + x.T)


def _controllable_basis(a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    n = a.shape[0]
    blocks = [b]
    for _ in range(n - 1):
        blocks.append(a @ blocks[-1])
    ctrb = np.hstack(blocks)
    u, s, _ = np.linalg.svd(ctrb)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return u, rank


def initial_gain(model: AgentModel) -> np.ndarray:
    """Stabilizing gain via Bass's construction on the controllable subspace.

    Solve ``(A + sigma I) Z + Z (A + sigma I)' = 2 B B'`` and take
    ``K0 = B' Z^{-1}``; then ``A - B K0`` has every eigenvalue left of ``-sigma``.
    ``Z`` only exists when ``-(A + sigma I)`` is Hurwitz, so ``sigma`` has to clear
    the fast stable modes too: ``sigma = 1 + max |Re eig(A)|``.
    Uncontrollable modes are left alone; stabilizability makes them stable.
    """
    a, b, n = model.A, model.B, model.n
    u, rank = _controllable_basis(a, b, 1e-10)
    if rank == 0:
        return np.zeros((model.m, n))
    vc = u[:, :rank]
    ac = vc.T @ a @ vc
    bc = vc.T @ b
    sigma = 1.0 + float(np.max(np.abs(np.linalg.eigvals(ac).real)))
    shifted = ac + sigma * np.eye(rank)
    # solve_lyapunov(F, Q) handles F'X + XF + Q = 0; use F = -(A + sigma I)'
    z = solve_lyapunov(-shifted.T, 2.0 * bc @ bc.T)
    kc = bc.T @ np.linalg.inv(z)
    return kc @ vc.T


@dataclass(frozen=True)
class RiccatiSolution:
    P: np.ndarray
    residual_norm: float
    iterations: int = 0


def care_residual(model: AgentModel, p: np.ndarray) -> np.ndarray:
    a, b = model.A, model.B
    return a.T @ p + p @ a - p @ b @ b.T @ p + np.eye(model.n)


def solve_care(model: AgentModel, max_iterations: int = 100, step_tol: float = 1e-12) -> RiccatiSolution:
    """Stabilizing solution of ``A'P + PA - PBB'P + I = 0`` by Newton-Kleinman."""
    stab = stabilizability_check(model)
    if not stab:
        raise NotStabilizableError(stab.witness)
    a, b, n = model.A, model.B, model.n
    k = initial_gain(model)
    p = None
    prev_step = np.inf
    for it in range(1, max_iterations + 1):
        closed = a - b @ k
        p_new = solve_lyapunov(closed, np.eye(n) + k.T @ k)
        p_new = 0.5 * (p_new + p_new.T)
        step = np.inf if p is None else np.linalg.norm(p_new - p)
        p = p_new
        k = b.T @ p
        pnorm = np.linalg.norm(p)
        if step <= step_tol * pnorm:
            break
        # once quadratic convergence has bottomed out at rounding level, steps stop shrinking
        if step <= 1e-8 * pnorm and step >= prev_step:
            log.debug("Newton-Kleinman stopped at rounding floor after %d iterations", it)
            break
        prev_step = step
    else:
        raise RiccatiConvergenceError(max_iterations, float(np.linalg.norm(care_residual(model, p))))
    residual = float(np.linalg.norm(care_residual(model, p)))
    return RiccatiSolution(P=p, residual_norm=residual, iterations=it)


def protocol_gain(sol: RiccatiSolution, model: AgentModel) -> tuple[np.ndarray, np.ndarray]:
    """Feedback row ``K = B'P`` and adaptation weight ``M = PBB'P = K'K``."""
    k = model.B.T @ sol.P
    m = k.T @ k
    return k, 0.5 * (m + m.T)


def is_hurwitz(mat, margin: float = 0.0) -> bool:
    return bool(np.all(np.linalg.eigvals(np.atleast_2d(mat)).real < -margin))


def solve_lyapunov_reference(F, Q) -> np.ndarray:
    """Bartels-Stewart solution from scipy, used as an independent cross-check."""
    f = np.atleast_2d(np.asarray(F, dtype=float))
    return scipy.linalg.solve_continuous_lyapunov(f.T, -np.atleast_2d(np.asarray(Q, dtype=float)))
