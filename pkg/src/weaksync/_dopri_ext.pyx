# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrator for the closed-loop network.

Same algorithm as ``_dopri_py``: Hairer's PI step control, FSAL, fourth-order
dense output at sample instants.  The whole integration runs without the GIL.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, isfinite, fmax, fmin, INFINITY

from ._errors import NonFiniteStateError, StepSizeUnderflowError, TooManyStepsError

cnp.import_array()

BACKEND = "cython"

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0, A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double D1 = -12715105075.0 / 11282082432.0
cdef double D3 = 87487479700.0 / 32700410799.0
cdef double D4 = -10690763975.0 / 1880347072.0
cdef double D5 = 701980252875.0 / 199316789632.0
cdef double D6 = -1453857185.0 / 822651844.0
cdef double D7 = 69997945.0 / 29380423.0

cdef double SAFE = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef double FACC1 = 5.0
cdef double FACC2 = 0.1
cdef double UROUND = 2.220446049250313e-16


cdef class ClosedLoop:
    """Right-hand side of the stacked closed loop ``(x, rho)``; L in CSR form."""
    cdef public int N, n, m, size
    cdef const long[::1] indptr
    cdef const long[::1] indices
    cdef const double[::1] data
    cdef const double[:, ::1] A
    cdef const double[:, ::1] B
    cdef const double[:, ::1] K
    cdef double[::1] zbuf
    cdef double[::1] wbuf

    def __init__(self, indptr, indices, data, n_agents, A, B, K):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.A = np.ascontiguousarray(A, dtype=np.float64)
        self.B = np.ascontiguousarray(B, dtype=np.float64)
        self.K = np.ascontiguousarray(K, dtype=np.float64)
        self.N = n_agents
        self.n = self.A.shape[0]
        self.m = self.B.shape[1]
        self.size = self.N * self.n + self.N
        self.zbuf = np.zeros(self.n)
        self.wbuf = np.zeros(self.m)

    cdef void eval(self, double t, double[::1] y, double[::1] out) noexcept nogil:
        cdef int N = self.N, n = self.n, m = self.m
        cdef int i, p, a, b, col
        cdef long q
        cdef double coef, acc, wsq, rho
        cdef int nx = N * n
        for i in range(N):
            for a in range(n):
                self.zbuf[a] = 0.0
            for q in range(self.indptr[i], self.indptr[i + 1]):
                col = <int>self.indices[q]
                coef = self.data[q]
                for a in range(n):
                    self.zbuf[a] += coef * y[col * n + a]
            wsq = 0.0
            for b in range(m):
                acc = 0.0
                for a in range(n):
                    acc += self.K[b, a] * self.zbuf[a]
                self.wbuf[b] = acc
                wsq += acc * acc
            out[nx + i] = wsq
            rho = y[nx + i]
            for a in range(n):
                acc = 0.0
                for p in range(n):
                    acc += self.A[a, p] * y[i * n + p]
                for b in range(m):
                    acc -= rho * self.B[a, b] * self.wbuf[b]
                out[i * n + a] = acc

    def __call__(self, double t, y, out=None):
        cdef double[::1] yv = np.array(y, dtype=np.float64)
        if out is None:
            out = np.empty(self.size)
        cdef double[::1] ov = out
        self.eval(t, yv, ov)
        return out


cdef inline double _rms_scaled(double[::1] v, double[::1] sk, int dim) noexcept nogil:
    cdef double acc = 0.0, r
    cdef int i
    for i in range(dim):
        r = v[i] / sk[i]
        acc += r * r
    return sqrt(acc / dim)


cdef int _first_bad(double[::1] v, int dim) noexcept nogil:
    cdef int i
    for i in range(dim):
        if not isfinite(v[i]):
            return i
    return -1


def integrate(ClosedLoop rhs, y0, t_samples, double rtol, double atol, double hmax, long max_steps=10_000_000):
    """Integrate from ``t_samples[0]`` and return states at every sample time."""
    cdef const double[::1] ts = np.ascontiguousarray(t_samples, dtype=np.float64)
    cdef int dim = rhs.size
    cdef int ns = ts.shape[0]
    result = np.empty((ns, dim))
    cdef double[:, ::1] out = result
    work = np.zeros((12, dim))
    cdef double[::1] y = work[0]
    cdef double[::1] y1 = work[1]
    cdef double[::1] k1 = work[2]
    cdef double[::1] k2 = work[3]
    cdef double[::1] k3 = work[4]
    cdef double[::1] k4 = work[5]
    cdef double[::1] k5 = work[6]
    cdef double[::1] k6 = work[7]
    cdef double[::1] k7 = work[8]
    cdef double[::1] ytmp = work[9]
    cdef double[::1] sk = work[10]
    cdef double[::1] errv = work[11]
    cdef const double[::1] y0v = np.ascontiguousarray(y0, dtype=np.float64)
    cdef int i, j
    cdef double t = ts[0], tend = ts[ns - 1], tnew, h, hnew, err, fac, fac11, facold = 1e-4
    cdef double dnf, dny, der2, der12, h1, th, th1, ydiff, bspl, r4, r5, tol_t
    cdef bint reject = False, last
    cdef long nstep = 0, naccept = 0, nreject = 0, nfev = 0
    cdef int next_sample = 1
    cdef int status = 0  # 1 underflow, 2 non-finite, 3 max steps
    cdef int bad = -1
    cdef double fail_t = 0.0, fail_h = 0.0

    for i in range(dim):
        y[i] = y0v[i]
        out[0, i] = y[i]
    rhs.eval(t, y, k1)
    nfev = 1
    if ns == 1:
        return result, dict(steps=0, accepted=0, rejected=0, nfev=nfev)

    with nogil:
        # initial step (Hairer's heuristic)
        for i in range(dim):
            sk[i] = atol + rtol * fabs(y[i])
        dnf = _rms_scaled(k1, sk, dim)
        dnf = dnf * dnf
        dny = _rms_scaled(y, sk, dim)
        dny = dny * dny
        if dnf <= 1e-10 or dny <= 1e-10 or not isfinite(dny / dnf):
            h = 1e-6
        else:
            h = sqrt(dny / dnf) * 0.01
        h = fmin(h, hmax)
        for i in range(dim):
            ytmp[i] = y[i] + h * k1[i]
        rhs.eval(t + h, ytmp, k2)
        nfev += 1
        for i in range(dim):
            errv[i] = k2[i] - k1[i]
        der2 = _rms_scaled(errv, sk, dim) / h
        der12 = fmax(fabs(der2), sqrt(dnf))
        if der12 <= 1e-15:
            h1 = fmax(1e-6, h * 1e-3)
        else:
            h1 = pow(0.01 / der12, 1.0 / 5.0)
        h = fmin(fmin(100 * h, h1), hmax)

        while True:
            if nstep >= max_steps:
                status = 3
                fail_t = t
                break
            if 0.1 * fabs(h) <= fabs(t) * UROUND:
                status = 1
                fail_t = t
                fail_h = h
                break
            last = False
            if t + 1.01 * h >= tend:
                h = tend - t
                last = True
            nstep += 1
            for i in range(dim):
                ytmp[i] = y[i] + h * (A21 * k1[i])
            rhs.eval(t + C2 * h, ytmp, k2)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            rhs.eval(t + C3 * h, ytmp, k3)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs.eval(t + C4 * h, ytmp, k4)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs.eval(t + C5 * h, ytmp, k5)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            rhs.eval(t + h, ytmp, k6)
            for i in range(dim):
                y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
            rhs.eval(t + h, y1, k7)
            nfev += 6
            for i in range(dim):
                errv[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                sk[i] = atol + rtol * fmax(fabs(y[i]), fabs(y1[i]))
            err = _rms_scaled(errv, sk, dim)
            if not isfinite(err):
                bad = _first_bad(y1, dim)
                if bad < 0:
                    bad = _first_bad(k2, dim)
                if bad < 0:
                    bad = _first_bad(k3, dim)
                if bad < 0:
                    bad = _first_bad(k4, dim)
                if bad < 0:
                    bad = _first_bad(k5, dim)
                if bad < 0:
                    bad = _first_bad(k6, dim)
                if bad < 0:
                    bad = _first_bad(k7, dim)
                if bad >= 0:
                    status = 2
                    fail_t = t + h
                    break
                # finite stages but the scaled error overflowed: reject with maximal shrink
                err = INFINITY
            fac11 = pow(err, EXPO1)
            fac = fac11 / pow(facold, BETA)
            fac = fmax(FACC2, fmin(FACC1, fac / SAFE))
            hnew = h / fac
            if err <= 1.0:
                facold = fmax(err, 1e-4)
                naccept += 1
                tnew = t + h
                tol_t = 1e-12 * fmax(1.0, fabs(tnew))
                while next_sample < ns and ts[next_sample] <= tnew + tol_t:
                    if last and next_sample == ns - 1:
                        for i in range(dim):
                            out[next_sample, i] = y1[i]
                    else:
                        th = (ts[next_sample] - t) / h
                        th1 = 1.0 - th
                        for i in range(dim):
                            ydiff = y1[i] - y[i]
                            bspl = h * k1[i] - ydiff
                            r4 = ydiff - h * k7[i] - bspl
                            r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                            out[next_sample, i] = y[i] + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)))
                    next_sample += 1
                for i in range(dim):
                    k1[i] = k7[i]
                    y[i] = y1[i]
                t = tnew
                if last:
                    break
                if fabs(hnew) > hmax:
                    hnew = hmax
                if reject:
                    hnew = fmin(fabs(hnew), fabs(h))
                reject = False
            else:
                hnew = h / fmin(FACC1, fac11 / SAFE)
                reject = True
                if naccept >= 1:
                    nreject += 1
            h = hnew

    if status == 1:
        raise StepSizeUnderflowError(fail_t, fail_h)
    if status == 2:
        raise NonFiniteStateError(fail_t, bad)
    if status == 3:
        raise TooManyStepsError(fail_t, max_steps)
    return result, dict(steps=nstep, accepted=naccept, rejected=nreject, nfev=nfev)
