"""Independent reference computations used only by the tests."""
import math

import mpmath
import numpy as np


def reachability_sccs(n, edges):
    """SCCs from the transitive closure (Warshall), as a set of frozensets."""
    reach = np.eye(n, dtype=bool)
    for s, t, _ in edges:
        reach[s, t] = True
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    mutual = reach & reach.T
    return {frozenset(np.flatnonzero(mutual[v]).tolist()) for v in range(n)}, reach


def zeta_pairwise(x, adjacency):
    """zeta_i = sum_j a_ij (x_i - x_j), straight from the definition."""
    n = adjacency.shape[0]
    out = np.zeros_like(x)
    for i in range(n):
        for j in range(n):
            out[i] += adjacency[i, j] * (x[i] - x[j])
    return out


def lyapunov_kron_mp(F, Q, dps=40):
    """Solve F'X + XF + Q = 0 from the Kronecker system in extended precision."""
    mpmath.mp.dps = dps
    n = F.shape[0]
    op = mpmath.zeros(n * n, n * n)
    rhs = mpmath.zeros(n * n, 1)
    # unknown X[r, c] at index r*n + c
    for r in range(n):
        for c in range(n):
            row = r * n + c
            rhs[row] = -mpmath.mpf(float(Q[r, c]))
            for k in range(n):
                op[row, k * n + c] += mpmath.mpf(float(F[k, r]))  # (F'X)[r, c]
                op[row, r * n + k] += mpmath.mpf(float(F[k, c]))  # (XF)[r, c]
    sol = mpmath.lu_solve(op, rhs)
    return np.array([[float(sol[r * n + c]) for c in range(n)] for r in range(n)])


def expm_series(A, t, terms=80):
    """Matrix exponential by scaling-and-squaring of a truncated Taylor series."""
    A = np.asarray(A, dtype=float) * t
    norm = np.abs(A).sum(axis=1).max()
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    A = A / 2**s
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def zero_eig_multiplicity(lap, tol=1e-8):
    return int(np.sum(np.abs(np.linalg.eigvals(lap)) < tol))
