"""Pure-Python Dormand-Prince 5(4) integrator for the closed-loop network.

Mirrors ``_dopri_ext.pyx`` step for step; used when the compiled extension is
unavailable or ``WEAKSYNC_PURE_PYTHON`` is set.
"""
import math

import numpy as np
import scipy.sparse

from ._errors import NonFiniteStateError, StepSizeUnderflowError, TooManyStepsError

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFE = 0.9
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
FACC1 = 1 / 0.2
FACC2 = 1 / 10.0
UROUND = 2.220446049250313e-16

BACKEND = "python"


class ClosedLoop:
    """Right-hand side of the stacked closed loop ``(x, rho)``."""

    def __init__(self, indptr, indices, data, n_agents, A, B, K):
        self.N = int(n_agents)
        self.L = scipy.sparse.csr_matrix((data, indices, indptr), shape=(self.N, self.N))
        self.A = np.ascontiguousarray(A, dtype=float)
        self.B = np.ascontiguousarray(B, dtype=float)
        self.K = np.ascontiguousarray(K, dtype=float)
        self.n = self.A.shape[0]
        self.size = self.N * self.n + self.N

    def __call__(self, t, y, out=None):
        N, n = self.N, self.n
        x = y[: N * n].reshape(N, n)
        rho = y[N * n:]
        zeta = self.L @ x
        w = zeta @ self.K.T
        if out is None:
            out = np.empty(self.size)
        out[: N * n] = (x @ self.A.T - rho[:, None] * (w @ self.B.T)).ravel()
        out[N * n:] = np.einsum("ij,ij->i", w, w)
        return out


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / v.size)


def initial_step(f, t0, y0, f0, rtol, atol, hmax):
    sk = atol + rtol * np.abs(y0)
    dnf = _rms(f0 / sk) ** 2
    dny = _rms(y0 / sk) ** 2
    if dnf <= 1e-10 or dny <= 1e-10 or not math.isfinite(dny / dnf):
        h = 1e-6
    else:
        h = math.sqrt(dny / dnf) * 0.01
    h = min(h, hmax)
    f1 = f(t0 + h, y0 + h * f0)
    der2 = _rms((f1 - f0) / sk) / h
    der12 = max(abs(der2), math.sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / der12) ** (1.0 / 5.0)
    return min(100 * h, h1, hmax)


def _first_bad(*arrays):
    for arr in arrays:
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            return int(bad[0])
    return -1


def integrate(rhs: ClosedLoop, y0, t_samples, rtol, atol, hmax, max_steps=10_000_000):
    """Integrate from ``t_samples[0]`` and return states at every sample time.

    Returns ``(Y, stats)`` where ``Y`` has one row per sample.
    """
    # overflow is detected and reported as NonFiniteStateError, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate(rhs, y0, t_samples, rtol, atol, hmax, max_steps)


def _integrate(rhs, y0, t_samples, rtol, atol, hmax, max_steps):
    ts = np.asarray(t_samples, dtype=float)
    y = np.array(y0, dtype=float)
    dim = y.size
    out = np.empty((ts.size, dim))
    out[0] = y
    t = float(ts[0])
    tend = float(ts[-1])
    nfev = 1
    k1 = rhs(t, y)
    if ts.size == 1:
        return out, dict(steps=0, accepted=0, rejected=0, nfev=nfev)
    h = initial_step(rhs, t, y, k1, rtol, atol, hmax)
    nfev += 1
    facold = 1e-4
    reject = False
    naccept = nreject = nstep = 0
    next_sample = 1

    while True:
        if nstep >= max_steps:
            raise TooManyStepsError(t, max_steps)
        if 0.1 * abs(h) <= abs(t) * UROUND:
            raise StepSizeUnderflowError(t, h)
        last = False
        if t + 1.01 * h >= tend:
            h = tend - t
            last = True
        nstep += 1
        k2 = rhs(t + C2 * h, y + h * (A21 * k1))
        k3 = rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = rhs(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        ysti = y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
        k6 = rhs(t + h, ysti)
        y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        k7 = rhs(t + h, y1)
        nfev += 6
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sk = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
        err = _rms(errv / sk)
        if not math.isfinite(err):
            bad = _first_bad(y1, k2, k3, k4, k5, k6, k7)
            if bad >= 0:
                raise NonFiniteStateError(t + h, bad)
            # finite stages but the scaled error overflowed: reject with maximal shrink
            err = math.inf
        fac11 = err ** EXPO1
        fac = fac11 / facold ** BETA
        fac = max(FACC2, min(FACC1, fac / SAFE))
        hnew = h / fac
        if err <= 1.0:
            facold = max(err, 1e-4)
            naccept += 1
            tnew = t + h
            # dense output for samples in (t, tnew]
            if next_sample < ts.size and ts[next_sample] <= tnew + 1e-12 * max(1.0, abs(tnew)):
                ydiff = y1 - y
                bspl = h * k1 - ydiff
                r4 = ydiff - h * k7 - bspl
                r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
                while next_sample < ts.size and ts[next_sample] <= tnew + 1e-12 * max(1.0, abs(tnew)):
                    ts_i = ts[next_sample]
                    if last and next_sample == ts.size - 1:
                        out[next_sample] = y1
                    else:
                        th = (ts_i - t) / h
                        th1 = 1.0 - th
                        out[next_sample] = y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                    next_sample += 1
            k1 = k7
            y = y1
            t = tnew
            if last:
                break
            if abs(hnew) > hmax:
                hnew = hmax
            if reject:
                hnew = min(abs(hnew), abs(h))
            reject = False
        else:
            hnew = h / min(FACC1, fac11 / SAFE)
            reject = True
            if naccept >= 1:
                nreject += 1
        h = hnew
    return out, dict(steps=nstep, accepted=naccept, rejected=nreject, nfev=nfev)
