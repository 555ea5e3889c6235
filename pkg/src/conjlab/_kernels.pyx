# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) kernels for the built-in models.

Mirrors ``_kernels_py`` exactly: same tableau, same norm-wise error control,
same step-size controller, same dense-output coefficients. Only models whose
A(t) and f are built-ins (``Model.kernel is not None``) can run here.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, tanh, atan, fabs, sqrt, cosh, pow, isfinite
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy, memset

from .errors import NonFiniteState, StepBudgetExceeded, StepSizeUnderflow

cnp.import_array()

BACKEND = "cython"

cdef double HALF_PI = 1.5707963267948966

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double D1 = -12715105075.0 / 11282082432.0, D3 = 87487479700.0 / 32700410799.0
cdef double D4 = -10690763975.0 / 1880347072.0, D5 = 701980252875.0 / 199316789632.0
cdef double D6 = -1453857185.0 / 822651844.0, D7 = 69997945.0 / 29380423.0

cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 5.0

cdef enum:
    K_LIN = 0
    K_ADJ = 1
    K_NL = 2
    K_VAR = 3
    K_WAUG = 4
    K_PIC = 5

cdef enum:
    F_ZERO = 0
    F_JIANG = 1
    F_SIN = 2
    F_TANH = 3
    F_CONST = 4


cdef struct Ctx:
    int kind
    int n
    int N
    int ncols
    double t0
    double d
    double* A0
    double* A1
    double omega
    int const_A
    int fkind
    double coef
    double* vec
    double* shift
    int has_shift
    double* At
    double* fbuf
    double* dfbuf
    double* argbuf
    # dense previous iterate for K_PIC
    int has_phi
    int pm
    double* pgrid
    double* pstates
    double* pcont
    int phint


cdef inline double f_raw(Ctx* c, double t, double y, int i) noexcept nogil:
    cdef int k = c.fkind
    if k == F_JIANG:
        return c.coef * (HALF_PI - atan(t + fabs(y)))
    elif k == F_SIN:
        return c.coef * sin(y)
    elif k == F_TANH:
        return c.coef * tanh(y)
    elif k == F_CONST:
        return c.vec[i]
    return 0.0


cdef inline double df_raw(Ctx* c, double t, double y) noexcept nogil:
    cdef int k = c.fkind
    cdef double u, ch
    if k == F_JIANG:
        u = t + fabs(y)
        if y > 0:
            return -c.coef / (1.0 + u * u)
        elif y < 0:
            return c.coef / (1.0 + u * u)
        return 0.0
    elif k == F_SIN:
        return c.coef * cos(y)
    elif k == F_TANH:
        ch = cosh(y)
        return c.coef / (ch * ch)
    return 0.0


cdef inline void eval_f(Ctx* c, double t, double* y, double* out) noexcept nogil:
    cdef int i
    if c.has_shift:
        for i in range(c.n):
            out[i] = f_raw(c, t, y[i] + c.shift[i], i) - f_raw(c, t, c.shift[i], i)
    else:
        for i in range(c.n):
            out[i] = f_raw(c, t, y[i], i)


cdef inline void eval_df(Ctx* c, double t, double* y, double* out) noexcept nogil:
    cdef int i
    for i in range(c.n):
        if c.has_shift:
            out[i] = df_raw(c, t, y[i] + c.shift[i])
        else:
            out[i] = df_raw(c, t, y[i])


cdef inline double* eval_A(Ctx* c, double t) noexcept nogil:
    cdef int i
    cdef double sw
    if c.const_A:
        return c.A0
    sw = sin(c.omega * t)
    for i in range(c.n * c.n):
        c.At[i] = c.A0[i] + sw * c.A1[i]
    return c.At


cdef int find_interval(double* grid, int m, double s, int hint) noexcept nogil:
    cdef int lo, hi, mid
    if hint >= 0 and hint < m and grid[hint] <= s and s <= grid[hint + 1]:
        return hint
    lo = 0
    hi = m
    # largest k with grid[k] <= s, clamped to [0, m-1]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if grid[mid] <= s:
            lo = mid
        else:
            hi = mid
    if lo > m - 1:
        lo = m - 1
    return lo


cdef void dense_eval_c(double* grid, double* states, double* cont, int m, int N,
                       double s, int k, double* out) noexcept nogil:
    cdef int i
    cdef double h, th, th1
    cdef double* r
    if m == 0:
        memcpy(out, states, N * sizeof(double))
        return
    if s == grid[k]:
        memcpy(out, states + k * N, N * sizeof(double))
        return
    if s == grid[k + 1]:
        memcpy(out, states + (k + 1) * N, N * sizeof(double))
        return
    h = grid[k + 1] - grid[k]
    th = (s - grid[k]) / h
    th1 = 1.0 - th
    r = cont + k * 5 * N
    for i in range(N):
        out[i] = r[i] + th * (r[N + i] + th1 * (r[2 * N + i] + th * (r[3 * N + i] + th1 * r[4 * N + i])))


cdef void rhs(Ctx* c, double s, double* y, double* out) noexcept nogil:
    cdef int n = c.n, i, j, l, k, ncols
    cdef double t = c.t0 + c.d * s
    cdef double d = c.d
    cdef double acc
    cdef double* A = eval_A(c, t)
    if c.kind == K_LIN:
        ncols = c.ncols
        for i in range(n):
            for j in range(ncols):
                acc = 0.0
                for l in range(n):
                    acc += A[i * n + l] * y[l * ncols + j]
                out[i * ncols + j] = d * acc
    elif c.kind == K_ADJ:
        ncols = c.ncols
        for i in range(ncols):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += y[i * n + l] * A[l * n + j]
                out[i * n + j] = -d * acc
    elif c.kind == K_NL:
        eval_f(c, t, y, c.fbuf)
        for i in range(n):
            acc = c.fbuf[i]
            for l in range(n):
                acc += A[i * n + l] * y[l]
            out[i] = d * acc
    elif c.kind == K_VAR:
        eval_f(c, t, y, c.fbuf)
        eval_df(c, t, y, c.dfbuf)
        for i in range(n):
            acc = c.fbuf[i]
            for l in range(n):
                acc += A[i * n + l] * y[l]
            out[i] = d * acc
        for i in range(n):
            for j in range(n):
                acc = c.dfbuf[i] * y[n + i * n + j]
                for l in range(n):
                    acc += A[i * n + l] * y[n + l * n + j]
                out[n + i * n + j] = d * acc
    elif c.kind == K_WAUG:
        eval_f(c, t, y, c.fbuf)
        for i in range(n):
            acc = 0.0
            for l in range(n):
                acc += A[i * n + l] * y[l]
            out[i] = d * (acc + c.fbuf[i])
            acc = 0.0
            for l in range(n):
                acc += A[i * n + l] * y[n + l]
            out[n + i] = d * (acc - c.fbuf[i])
    elif c.kind == K_PIC:
        if c.has_phi:
            k = find_interval(c.pgrid, c.pm, s, c.phint)
            c.phint = k
            dense_eval_c(c.pgrid, c.pstates, c.pcont, c.pm, n, s, k, c.argbuf)
            for i in range(n):
                c.argbuf[i] += y[i]
        else:
            for i in range(n):
                c.argbuf[i] = y[i]
        eval_f(c, t, c.argbuf, c.fbuf)
        for i in range(n):
            acc = 0.0
            for l in range(n):
                acc += A[i * n + l] * y[l]
            out[i] = d * acc
            acc = 0.0
            for l in range(n):
                acc += A[i * n + l] * y[n + l]
            out[n + i] = d * (acc + c.fbuf[i])


cdef inline double norm2(double* v, int N) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(N):
        acc += v[i] * v[i]
    return sqrt(acc)


cdef class _Buf:
    """Growable output storage for grid, states and dense coefficients."""
    cdef double* grid
    cdef double* states
    cdef double* cont
    cdef int cap
    cdef int N
    cdef int m

    def __cinit__(self, int N, int cap):
        self.N = N
        self.cap = cap
        self.m = 0
        self.grid = <double*> malloc((cap + 1) * sizeof(double))
        self.states = <double*> malloc((cap + 1) * N * sizeof(double))
        self.cont = <double*> malloc(cap * 5 * N * sizeof(double))
        if not self.grid or not self.states or not self.cont:
            raise MemoryError()

    cdef int grow(self) except -1:
        cdef int cap = self.cap * 2
        cdef double* g = <double*> realloc(self.grid, (cap + 1) * sizeof(double))
        if not g:
            raise MemoryError()
        self.grid = g
        g = <double*> realloc(self.states, (cap + 1) * self.N * sizeof(double))
        if not g:
            raise MemoryError()
        self.states = g
        g = <double*> realloc(self.cont, cap * 5 * self.N * sizeof(double))
        if not g:
            raise MemoryError()
        self.cont = g
        self.cap = cap
        return 0

    def __dealloc__(self):
        free(self.grid)
        free(self.states)
        free(self.cont)


def solve(int kind, model, double t0, y0, double t1, double rtol, double atol,
          double h_init, double h_max, long max_steps, phi=None, mesh=None):
    """Integrate a built-in model; signature matches ``_kernels_py.solve``."""
    kd = model.kernel
    if kd is None:
        raise TypeError("compiled kernel needs a built-in model")
    cdef cnp.ndarray[double, ndim=1, mode="c"] y0a = np.ascontiguousarray(np.asarray(y0, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=2, mode="c"] A0 = np.ascontiguousarray(kd.A0, dtype=float)
    cdef cnp.ndarray[double, ndim=2, mode="c"] A1 = np.ascontiguousarray(kd.A1, dtype=float)
    cdef cnp.ndarray[double, ndim=1, mode="c"] vec = np.ascontiguousarray(kd.vec, dtype=float)
    cdef cnp.ndarray[double, ndim=1, mode="c"] shift = np.ascontiguousarray(kd.shift, dtype=float)
    cdef cnp.ndarray[double, ndim=1, mode="c"] pg
    cdef cnp.ndarray[double, ndim=2, mode="c"] ps
    cdef cnp.ndarray[double, ndim=3, mode="c"] pc
    cdef cnp.ndarray[double, ndim=1, mode="c"] meshA
    cdef int n = kd.n
    cdef int N = y0a.shape[0]
    cdef Ctx c
    cdef double span = fabs(t1 - t0)
    cdef int use_mesh = mesh is not None
    cdef long nsteps = 0
    cdef double* meshp = NULL

    c.kind = kind
    c.n = n
    c.N = N
    c.ncols = N // n
    c.t0 = t0
    c.d = 1.0 if t1 >= t0 else -1.0
    c.A0 = &A0[0, 0]
    c.A1 = &A1[0, 0]
    c.omega = kd.omega
    c.const_A = 1 if (kd.omega == 0.0 or not np.any(kd.A1)) else 0
    c.fkind = kd.fkind
    c.coef = kd.coef
    c.vec = &vec[0]
    c.shift = &shift[0]
    c.has_shift = 1 if kd.has_shift else 0
    c.has_phi = 0
    c.phint = -1
    c.pm = 0
    if kind == K_PIC and phi is not None:
        pg = np.ascontiguousarray(phi[0], dtype=float)
        ps = np.ascontiguousarray(phi[1], dtype=float)
        pc = np.ascontiguousarray(phi[2], dtype=float).reshape(-1, 5, n)
        c.has_phi = 1
        c.pm = pg.shape[0] - 1
        c.pgrid = &pg[0]
        c.pstates = &ps[0, 0]
        c.pcont = &pc[0, 0, 0] if c.pm > 0 else NULL
    if use_mesh:
        meshA = np.ascontiguousarray(mesh, dtype=float)
        nsteps = meshA.shape[0] - 1
        meshp = &meshA[0]

    cdef double* work = <double*> malloc((10 * N + 4 * n * n + 3 * n + 8) * sizeof(double))
    if not work:
        raise MemoryError()
    cdef double* y = work
    cdef double* y1 = work + N
    cdef double* k1 = work + 2 * N
    cdef double* k2 = work + 3 * N
    cdef double* k3 = work + 4 * N
    cdef double* k4 = work + 5 * N
    cdef double* k5 = work + 6 * N
    cdef double* k6 = work + 7 * N
    cdef double* k7 = work + 8 * N
    cdef double* yt = work + 9 * N
    c.At = work + 10 * N
    c.fbuf = c.At + n * n
    c.dfbuf = c.fbuf + n
    c.argbuf = c.dfbuf + n

    cdef _Buf buf = _Buf(N, 64 if not use_mesh else max(1, nsteps))
    cdef long nfev = 0, nrej = 0, steps = 0
    cdef double maxerr = 0.0, s = 0.0, h = 0.0, s1, err, sk, fac, ny, ny1
    cdef int last, last_rejected = 0, status = 0, i
    cdef double* r
    cdef double* tmp

    memcpy(y, &y0a[0], N * sizeof(double))
    buf.grid[0] = 0.0
    memcpy(buf.states, y, N * sizeof(double))
    try:
        if span > 0.0:
            with nogil:
                rhs(&c, 0.0, y, k1)
                nfev += 1
                if not use_mesh:
                    h = h_init
                    if h_max < h:
                        h = h_max
                    if span < h:
                        h = span
                while True:
                    if use_mesh:
                        if steps >= nsteps:
                            break
                        s = meshp[steps]
                        h = meshp[steps + 1] - s
                        last = 1 if steps + 1 == nsteps else 0
                    else:
                        if s >= span:
                            break
                        if steps >= max_steps:
                            status = 1
                            break
                        last = 0
                        if s + 1.01 * h >= span:
                            h = span - s
                            last = 1
                    steps += 1
                    for i in range(N):
                        yt[i] = y[i] + h * (A21 * k1[i])
                    rhs(&c, s + C2 * h, yt, k2)
                    for i in range(N):
                        yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
                    rhs(&c, s + C3 * h, yt, k3)
                    for i in range(N):
                        yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                    rhs(&c, s + C4 * h, yt, k4)
                    for i in range(N):
                        yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                    rhs(&c, s + C5 * h, yt, k5)
                    for i in range(N):
                        yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
                    rhs(&c, s + h, yt, k6)
                    for i in range(N):
                        y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
                    s1 = span if last else s + h
                    rhs(&c, s1, y1, k7)
                    nfev += 6
                    for i in range(N):
                        yt[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                    ny = norm2(y, N)
                    ny1 = norm2(y1, N)
                    sk = atol + rtol * (ny if ny > ny1 else ny1)
                    err = norm2(yt, N) / sk
                    if not isfinite(err):
                        status = 2
                        break
                    if use_mesh or err <= 1.0:
                        if use_mesh and err > maxerr:
                            maxerr = err
                        if buf.m >= buf.cap:
                            with gil:
                                buf.grow()
                        r = buf.cont + buf.m * 5 * N
                        for i in range(N):
                            r[i] = y[i]
                            r[N + i] = y1[i] - y[i]
                            r[2 * N + i] = h * k1[i] - r[N + i]
                            r[3 * N + i] = r[N + i] - h * k7[i] - r[2 * N + i]
                            r[4 * N + i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                        buf.m += 1
                        tmp = y
                        y = y1
                        y1 = tmp
                        tmp = k1
                        k1 = k7
                        k7 = tmp
                        s = s1
                        buf.grid[buf.m] = s
                        memcpy(buf.states + buf.m * N, y, N * sizeof(double))
                        if not use_mesh:
                            if err == 0.0:
                                fac = FAC_MAX
                            else:
                                fac = SAFETY * pow(err, -0.2)
                                if fac < FAC_MIN:
                                    fac = FAC_MIN
                                if fac > FAC_MAX:
                                    fac = FAC_MAX
                            if last_rejected and fac > 1.0:
                                fac = 1.0
                            h = h * fac
                            if h > h_max:
                                h = h_max
                            last_rejected = 0
                    else:
                        nrej += 1
                        last_rejected = 1
                        fac = SAFETY * pow(err, -0.2)
                        if fac < FAC_MIN:
                            fac = FAC_MIN
                        h = h * fac
                        if h <= 1e-14 * (fabs(s) if fabs(s) > 1.0 else 1.0):
                            status = 3
                            break
        if status == 1:
            raise StepBudgetExceeded(f"step budget {max_steps} exhausted at s={s:.6g} of {span:.6g}")
        if status == 2:
            raise NonFiniteState(f"non-finite state near s={s:.6g}")
        if status == 3:
            raise StepSizeUnderflow(f"step size underflow at s={s:.6g}")
        m = buf.m
        grid = np.empty(m + 1)
        states = np.empty((m + 1, N))
        cont = np.empty((m, 5, N))
        if m + 1 > 0:
            memcpy(cnp.PyArray_DATA(grid), buf.grid, (m + 1) * sizeof(double))
            memcpy(cnp.PyArray_DATA(states), buf.states, (m + 1) * N * sizeof(double))
        if m > 0:
            memcpy(cnp.PyArray_DATA(cont), buf.cont, m * 5 * N * sizeof(double))
        return grid, states, cont, dict(nfev=nfev, naccept=m, nreject=nrej, maxerr=maxerr)
    finally:
        free(work)


def dense_eval(sgrid, states, cont, double s, int hint=-1):
    cdef cnp.ndarray[double, ndim=1, mode="c"] g = np.ascontiguousarray(sgrid, dtype=float)
    cdef cnp.ndarray[double, ndim=2, mode="c"] st = np.ascontiguousarray(states, dtype=float)
    cdef int m = g.shape[0] - 1
    cdef int N = st.shape[1]
    cdef cnp.ndarray[double, ndim=3, mode="c"] cc
    out = np.empty(N)
    if m == 0:
        return st[0].copy()
    cc = np.ascontiguousarray(cont, dtype=float)
    cdef int k = find_interval(&g[0], m, s, hint)
    dense_eval_c(&g[0], &st[0, 0], &cc[0, 0, 0], m, N, s, k, <double*> cnp.PyArray_DATA(out))
    return out
