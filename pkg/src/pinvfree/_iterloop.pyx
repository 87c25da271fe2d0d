# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled iteration loop shared by every sampler kind.

The wrapper (solver module) pregenerates uniform/normal variate blocks with
a fixed per-iteration layout and calls run() chunk by chunk; all index
selection, update arithmetic, residual maintenance, metric checks, and
trace recording happen here. The pure-Python fallback mirrors this file
statement for statement, so both backends draw identical sample paths.
"""

import numpy as np

from libc.math cimport isfinite
from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC
from scipy.linalg.cython_blas cimport dgemv


cdef double _now() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return ts.tv_sec + ts.tv_nsec * 1e-9


# kind codes (fixed across backends)
cdef enum:
    KIND_RK = 0
    KIND_RGS = 1
    KIND_DSGS = 2
    KIND_RBK = 3
    KIND_RBCD = 4
    KIND_BGK = 5
    KIND_BGLS = 6
    KIND_SGC = 7

# run() statuses
cdef enum:
    ST_CONTINUE = 0
    ST_CONVERGED = 1
    ST_DIVERGED = 3


cdef inline long _categorical(double[::1] cum, long size, double u) noexcept nogil:
    # first index with cum[idx] > u, clipped into the support
    cdef long lo = 0, hi = size, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if u < cum[mid]:
            hi = mid
        else:
            lo = mid + 1
    if lo >= size:
        lo = size - 1
    return lo


cdef class CLoop:
    cdef long kind, m, n, block
    cdef double[:, ::1] a, at, gram
    cdef double[::1] b, x, x_prev, r, r_prev
    cdef double alpha, omega, frob_sq, trace_a
    cdef double[::1] cum, entry_vals, row_sq, col_sq
    cdef long[::1] entry_rows, entry_cols
    cdef long metric_code, maintain_mode
    cdef double[::1] x_ref, r_star
    cdef double inv_denom, tol, div_limit
    cdef long check_every, trace_every, recompute_every
    cdef long[::1] trace_ks
    cdef double[::1] trace_vals, trace_times
    cdef double[:, ::1] trace_xs
    cdef bint collect_x, have_gram, r_fresh
    cdef public long k, trace_count
    cdef public double last_metric
    cdef double t0
    # scratch
    cdef double[::1] buf_n, buf_m, rr, ys
    cdef long[::1] perm, subset, subset_js

    def __init__(self, long kind, double[:, ::1] a, double[:, ::1] at,
                 double[::1] b, double alpha, double omega, long block,
                 double frob_sq, double trace_a,
                 double[::1] cum, long[::1] entry_rows, long[::1] entry_cols,
                 double[::1] entry_vals, double[::1] row_sq, double[::1] col_sq,
                 double[:, ::1] gram, long metric_code, double[::1] x_ref,
                 double[::1] r_star, double inv_denom, double tol,
                 double div_limit, long check_every, long trace_every,
                 long recompute_every, double[::1] x, double[::1] x_prev,
                 double[::1] r, double[::1] r_prev, long maintain_mode,
                 long[::1] trace_ks, double[::1] trace_vals,
                 double[::1] trace_times, double[:, ::1] trace_xs,
                 bint collect_x):
        self.kind = kind
        self.a = a
        self.at = at
        self.b = b
        self.alpha = alpha
        self.omega = omega
        self.block = block
        self.frob_sq = frob_sq
        self.trace_a = trace_a
        self.cum = cum
        self.entry_rows = entry_rows
        self.entry_cols = entry_cols
        self.entry_vals = entry_vals
        self.row_sq = row_sq
        self.col_sq = col_sq
        self.gram = gram
        self.have_gram = gram.shape[0] > 0
        self.metric_code = metric_code
        self.x_ref = x_ref
        self.r_star = r_star
        self.inv_denom = inv_denom
        self.tol = tol
        self.div_limit = div_limit
        self.check_every = check_every
        self.trace_every = trace_every
        self.recompute_every = recompute_every
        self.x = x
        self.x_prev = x_prev
        self.r = r
        self.r_prev = r_prev
        self.maintain_mode = maintain_mode
        self.trace_ks = trace_ks
        self.trace_vals = trace_vals
        self.trace_times = trace_times
        self.trace_xs = trace_xs
        self.collect_x = collect_x
        self.m = a.shape[0]
        self.n = a.shape[1]
        self.k = 0
        self.trace_count = 0
        self.last_metric = 0.0
        self.r_fresh = False
        self.t0 = 0.0
        self.buf_n = np.zeros(self.n)
        self.buf_m = np.zeros(self.m)
        self.rr = np.zeros(max(self.block, 1))
        self.ys = np.zeros(max(self.block, 1))
        self.perm = np.arange(max(self.m, self.n), dtype=np.int64)
        self.subset = np.zeros(max(self.block, 1), dtype=np.int64)
        self.subset_js = np.zeros(max(self.block, 1), dtype=np.int64)

    def start(self):
        self.t0 = _now()

    cdef void _record(self, double metric) noexcept nogil:
        cdef long idx = self.trace_count
        cdef long i
        self.trace_ks[idx] = self.k
        self.trace_vals[idx] = metric
        self.trace_times[idx] = _now() - self.t0
        if self.collect_x:
            for i in range(self.n):
                self.trace_xs[idx, i] = self.x[i]
        self.trace_count = idx + 1

    cdef double _metric(self) noexcept nogil:
        cdef double acc = 0.0, d
        cdef long i
        if self.metric_code == 0:
            for i in range(self.n):
                d = self.x[i] - self.x_ref[i]
                acc += d * d
        else:
            for i in range(self.m):
                d = self.r[i] - self.r_star[i]
                acc += d * d
        return acc * self.inv_denom

    cdef void _residual_into(self, double[::1] xs, double[::1] out) noexcept nogil:
        # out = A xs - b; the row-major array is its transpose in BLAS terms
        cdef int mm = <int>self.m, nn = <int>self.n, one = 1
        cdef double dpos = 1.0, dneg = -1.0
        cdef char tt = b'T'
        cdef long j
        for j in range(self.m):
            out[j] = self.b[j]
        dgemv(&tt, &nn, &mm, &dpos, &self.a[0, 0], &nn,
              &xs[0], &one, &dneg, &out[0], &one)

    cdef void _fresh_r(self) noexcept nogil:
        self._residual_into(self.x, self.r)

    cdef void _refresh_residuals(self) noexcept nogil:
        # drift guard for maintained mirrors: rebuild r and r_prev exactly
        self._fresh_r()
        self._residual_into(self.x_prev, self.r_prev)

    cdef void _apply_x(self, double[::1] d, double scale) noexcept nogil:
        # x <- x - scale*d + omega*(x - x_prev), saving the old x
        cdef long i
        cdef double old
        for i in range(self.n):
            old = self.x[i]
            self.x[i] = old - scale * d[i] + self.omega * (old - self.x_prev[i])
            self.x_prev[i] = old

    cdef void _apply_x_sparse1(self, long coord, double step) noexcept nogil:
        # single-coordinate direction fused with the dense momentum term
        cdef long i
        cdef double old
        for i in range(self.n):
            old = self.x[i]
            if i == coord:
                self.x[i] = old - step + self.omega * (old - self.x_prev[i])
            else:
                self.x[i] = old + self.omega * (old - self.x_prev[i])
            self.x_prev[i] = old

    cdef void _apply_r(self, double[::1] ad, double scale) noexcept nogil:
        # mirror of _apply_x in residual space: r changes by A(x_new - x_old)
        cdef long j
        cdef double old
        for j in range(self.m):
            old = self.r[j]
            self.r[j] = old - scale * ad[j] + self.omega * (old - self.r_prev[j])
            self.r_prev[j] = old

    cdef void _draw_subset(self, double[:, ::1] uniforms, long it,
                           long count, long p) noexcept nogil:
        # partial Fisher-Yates on a persistent permutation, undone afterwards
        cdef long i, j, tmp, key, pos
        for i in range(p):
            j = i + <long>(uniforms[it, i] * (count - i))
            if j >= count:
                j = count - 1
            self.subset_js[i] = j
            tmp = self.perm[i]
            self.perm[i] = self.perm[j]
            self.perm[j] = tmp
            self.subset[i] = self.perm[i]
        for i in range(p - 1, -1, -1):
            j = self.subset_js[i]
            tmp = self.perm[i]
            self.perm[i] = self.perm[j]
            self.perm[j] = tmp
        # insertion sort: block updates sum rows in ascending order
        for i in range(1, p):
            key = self.subset[i]
            pos = i - 1
            while pos >= 0 and self.subset[pos] > key:
                self.subset[pos + 1] = self.subset[pos]
                pos -= 1
            self.subset[pos + 1] = key

    cdef void _step_rk(self, double u) noexcept nogil:
        cdef long j = _categorical(self.cum, self.m, u)
        cdef double res
        cdef long i
        if self.maintain_mode == 1:
            res = self.r[j]
        else:
            res = 0.0
            for i in range(self.n):
                res += self.a[j, i] * self.x[i]
            res -= self.b[j]
        cdef double s = self.alpha * res / self.row_sq[j]
        cdef double old
        for i in range(self.n):
            old = self.x[i]
            self.x[i] = old - s * self.a[j, i] + self.omega * (old - self.x_prev[i])
            self.x_prev[i] = old
        if self.maintain_mode == 1:
            self._apply_r(self.gram[j], s)

    cdef void _step_rgs(self, double u) noexcept nogil:
        cdef long i = _categorical(self.cum, self.n, u)
        cdef double c = 0.0
        cdef long t
        for t in range(self.m):
            c += self.at[i, t] * self.r[t]
        cdef double step = self.alpha * c / self.col_sq[i]
        self._apply_x_sparse1(i, step)
        self._apply_r(self.at[i], step)

    cdef void _step_dsgs(self, double u) noexcept nogil:
        cdef long idx = _categorical(self.cum, self.entry_vals.shape[0], u)
        cdef long irow = self.entry_rows[idx]
        cdef long jcol = self.entry_cols[idx]
        cdef double res
        cdef long i
        if self.maintain_mode == 1:
            res = self.r[irow]
        else:
            res = 0.0
            for i in range(self.n):
                res += self.a[irow, i] * self.x[i]
            res -= self.b[irow]
        cdef double step = self.alpha * res / self.entry_vals[idx]
        self._apply_x_sparse1(jcol, step)
        if self.maintain_mode == 1:
            self._apply_r(self.at[jcol], step)

    cdef void _step_rbk(self, double[:, ::1] uniforms, long it) noexcept nogil:
        cdef long p = self.block
        cdef long t, i, row
        cdef double coef = self.alpha * self.m / (p * self.frob_sq)
        cdef double w, acc
        self._draw_subset(uniforms, it, self.m, p)
        for t in range(p):
            row = self.subset[t]
            if self.maintain_mode == 1:
                self.rr[t] = self.r[row]
            else:
                acc = 0.0
                for i in range(self.n):
                    acc += self.a[row, i] * self.x[i]
                self.rr[t] = acc - self.b[row]
        for i in range(self.n):
            self.buf_n[i] = 0.0
        for t in range(p):
            row = self.subset[t]
            w = self.rr[t]
            for i in range(self.n):
                self.buf_n[i] += w * self.a[row, i]
        self._apply_x(self.buf_n, coef)
        if self.maintain_mode == 1:
            for i in range(self.m):
                self.buf_m[i] = 0.0
            for t in range(p):
                row = self.subset[t]
                w = self.rr[t]
                for i in range(self.m):
                    self.buf_m[i] += w * self.gram[row, i]
            self._apply_r(self.buf_m, coef)

    cdef void _step_rbcd(self, double[:, ::1] uniforms, long it) noexcept nogil:
        cdef long s = self.block
        cdef long t, u_i, col
        cdef double coef = self.alpha * self.n / (s * self.frob_sq)
        cdef double acc, step
        self._draw_subset(uniforms, it, self.n, s)
        for t in range(s):
            col = self.subset[t]
            acc = 0.0
            for u_i in range(self.m):
                acc += self.at[col, u_i] * self.r[u_i]
            self.rr[t] = acc
        # sparse multi-coordinate direction plus dense momentum
        for t in range(self.n):
            self.buf_n[t] = 0.0
        for t in range(s):
            self.buf_n[self.subset[t]] = self.rr[t]
        self._apply_x(self.buf_n, coef)
        for u_i in range(self.m):
            self.buf_m[u_i] = 0.0
        for t in range(s):
            col = self.subset[t]
            step = self.rr[t]
            for u_i in range(self.m):
                self.buf_m[u_i] += step * self.at[col, u_i]
        self._apply_r(self.buf_m, coef)

    cdef void _step_bgk(self, double[:, ::1] normals, long it) noexcept nogil:
        # S is the m x p row-major block at normals[it]; direction A'SS'r
        cdef long p = self.block
        cdef double coef = self.alpha / (p * self.frob_sq)
        cdef int mm = <int>self.m, nn = <int>self.n, pp = <int>p, one = 1
        cdef double d1 = 1.0, d0 = 0.0
        cdef char tn = b'N', tt = b'T'
        if not self.r_fresh:
            self._fresh_r()
        dgemv(&tn, &pp, &mm, &d1, &normals[it, 0], &pp,
              &self.r[0], &one, &d0, &self.ys[0], &one)
        dgemv(&tt, &pp, &mm, &d1, &normals[it, 0], &pp,
              &self.ys[0], &one, &d0, &self.buf_m[0], &one)
        dgemv(&tn, &nn, &mm, &d1, &self.a[0, 0], &nn,
              &self.buf_m[0], &one, &d0, &self.buf_n[0], &one)
        self._apply_x(self.buf_n, coef)
        self.r_fresh = False

    cdef void _step_bgls(self, double[:, ::1] normals, long it) noexcept nogil:
        # T is the n x s row-major block at normals[it]; direction TT'A'r
        cdef long s = self.block
        cdef double coef = self.alpha / (s * self.frob_sq)
        cdef int mm = <int>self.m, nn = <int>self.n, ss = <int>s, one = 1
        cdef double d1 = 1.0, d0 = 0.0
        cdef char tn = b'N', tt = b'T'
        if not self.r_fresh:
            self._fresh_r()
        dgemv(&tn, &nn, &mm, &d1, &self.a[0, 0], &nn,
              &self.r[0], &one, &d0, &self.buf_n[0], &one)
        dgemv(&tn, &ss, &nn, &d1, &normals[it, 0], &ss,
              &self.buf_n[0], &one, &d0, &self.ys[0], &one)
        dgemv(&tt, &ss, &nn, &d1, &normals[it, 0], &ss,
              &self.ys[0], &one, &d0, &self.buf_n[0], &one)
        self._apply_x(self.buf_n, coef)
        self.r_fresh = False

    cdef void _step_sgc(self, double u, double[:, ::1] normals, long it) noexcept nogil:
        cdef long idx = _categorical(self.cum, self.entry_vals.shape[0], u)
        cdef long icoord = self.entry_rows[idx]
        cdef long jrow = self.entry_cols[idx]
        cdef double quad = 0.0, wj
        cdef long t, i
        for t in range(self.m):
            wj = 0.0
            for i in range(self.n):
                wj += self.a[t, i] * normals[it, i]
            quad += normals[it, t] * wj
        cdef double res = self.r[jrow]
        cdef double step = self.alpha * (quad / self.trace_a) * res / self.entry_vals[idx]
        self._apply_x_sparse1(icoord, step)
        self._apply_r(self.at[icoord], step)

    def run(self, double[:, ::1] uniforms, double[:, ::1] normals,
            long count, bint final_chunk):
        cdef long it, kk
        cdef double metric
        cdef bint need_metric, recorded
        cdef long status = ST_CONTINUE
        with nogil:
            for it in range(count):
                if self.kind == KIND_RK:
                    self._step_rk(uniforms[it, 0])
                elif self.kind == KIND_RGS:
                    self._step_rgs(uniforms[it, 0])
                elif self.kind == KIND_DSGS:
                    self._step_dsgs(uniforms[it, 0])
                elif self.kind == KIND_RBK:
                    self._step_rbk(uniforms, it)
                elif self.kind == KIND_RBCD:
                    self._step_rbcd(uniforms, it)
                elif self.kind == KIND_BGK:
                    self._step_bgk(normals, it)
                elif self.kind == KIND_BGLS:
                    self._step_bgls(normals, it)
                else:
                    self._step_sgc(uniforms[it, 0], normals, it)
                self.k += 1
                kk = self.k
                if self.maintain_mode == 1 and self.recompute_every > 0 \
                        and kk % self.recompute_every == 0:
                    self._refresh_residuals()
                need_metric = (kk % self.check_every == 0) \
                    or (kk % self.trace_every == 0) \
                    or (final_chunk and it == count - 1)
                if not need_metric:
                    continue
                if self.metric_code == 1 and self.maintain_mode == 2 \
                        and not self.r_fresh:
                    self._fresh_r()
                    self.r_fresh = True
                metric = self._metric()
                self.last_metric = metric
                recorded = False
                if kk % self.trace_every == 0:
                    self._record(metric)
                    recorded = True
                if metric <= self.tol:
                    if not recorded:
                        self._record(metric)
                    status = ST_CONVERGED
                    break
                if metric > self.div_limit or not isfinite(metric):
                    if not recorded:
                        self._record(metric)
                    status = ST_DIVERGED
                    break
                if final_chunk and it == count - 1 and not recorded:
                    self._record(metric)
        return status
