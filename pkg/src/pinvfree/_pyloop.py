"""Pure-Python twin of the compiled iteration loop.

Same constructor signature, same chunked variate consumption, same index
selection and update ordering as the extension class, so a run with either
backend follows the same sample path. NumPy expressions here parenthesize
the way the C loops associate; residual values can still differ from the
compiled backend at the level of float rounding, which is why backend
parity is asserted to tolerances, not bitwise.
"""

from __future__ import annotations

import time

import numpy as np

ST_CONTINUE = 0
ST_CONVERGED = 1
ST_DIVERGED = 3

KIND_RK, KIND_RGS, KIND_DSGS, KIND_RBK = 0, 1, 2, 3
KIND_RBCD, KIND_BGK, KIND_BGLS, KIND_SGC = 4, 5, 6, 7


def _categorical(cum, u):
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(cum) - 1)


def _subset(count, p, uniforms):
    # partial Fisher-Yates, matching the compiled loop's integer arithmetic
    perm = np.arange(count, dtype=np.int64)
    for i in range(p):
        j = i + int(uniforms[i] * (count - i))
        if j >= count:
            j = count - 1
        perm[i], perm[j] = perm[j], perm[i]
    out = perm[:p].copy()
    out.sort()
    return out


class PyLoop:
    def __init__(self, kind, a, at, b, alpha, omega, block, frob_sq, trace_a,
                 cum, entry_rows, entry_cols, entry_vals, row_sq, col_sq,
                 gram, metric_code, x_ref, r_star, inv_denom, tol, div_limit,
                 check_every, trace_every, recompute_every, x, x_prev, r,
                 r_prev, maintain_mode, trace_ks, trace_vals, trace_times,
                 trace_xs, collect_x):
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
        self.m, self.n = a.shape
        self.k = 0
        self.trace_count = 0
        self.last_metric = 0.0
        self.r_fresh = False
        self.t0 = 0.0

    def start(self):
        self.t0 = time.perf_counter()

    def _record(self, metric):
        idx = self.trace_count
        self.trace_ks[idx] = self.k
        self.trace_vals[idx] = metric
        self.trace_times[idx] = time.perf_counter() - self.t0
        if self.collect_x:
            self.trace_xs[idx, :] = self.x
        self.trace_count = idx + 1

    def _metric(self):
        if self.metric_code == 0:
            diff = self.x - self.x_ref
        else:
            diff = self.r - self.r_star
        return float(diff @ diff) * self.inv_denom

    def _fresh_r(self):
        self.r[:] = self.a @ self.x - self.b

    def _refresh_residuals(self):
        self._fresh_r()
        self.r_prev[:] = self.a @ self.x_prev - self.b

    def _apply_x(self, d, scale):
        new = self.x - scale * d + self.omega * (self.x - self.x_prev)
        self.x_prev[:] = self.x
        self.x[:] = new

    def _apply_r(self, ad, scale):
        new = self.r - scale * ad + self.omega * (self.r - self.r_prev)
        self.r_prev[:] = self.r
        self.r[:] = new

    def _step_rk(self, u):
        j = _categorical(self.cum, u)
        if self.maintain_mode == 1:
            res = self.r[j]
        else:
            res = float(self.a[j] @ self.x) - self.b[j]
        s = self.alpha * res / self.row_sq[j]
        self._apply_x(self.a[j], s)
        if self.maintain_mode == 1:
            self._apply_r(self.gram[j], s)

    def _step_rgs(self, u):
        i = _categorical(self.cum, u)
        c = float(self.at[i] @ self.r)
        step = self.alpha * c / self.col_sq[i]
        d = np.zeros(self.n)
        d[i] = 1.0
        self._apply_x(d, step)
        self._apply_r(self.at[i], step)

    def _step_dsgs(self, u):
        idx = _categorical(self.cum, u)
        irow, jcol = self.entry_rows[idx], self.entry_cols[idx]
        if self.maintain_mode == 1:
            res = self.r[irow]
        else:
            res = float(self.a[irow] @ self.x) - self.b[irow]
        step = self.alpha * res / self.entry_vals[idx]
        d = np.zeros(self.n)
        d[jcol] = 1.0
        self._apply_x(d, step)
        if self.maintain_mode == 1:
            self._apply_r(self.at[jcol], step)

    def _step_rbk(self, uniforms):
        p = self.block
        coef = self.alpha * self.m / (p * self.frob_sq)
        rows = _subset(self.m, p, uniforms)
        if self.maintain_mode == 1:
            rr = self.r[rows].copy()
        else:
            rr = self.a[rows] @ self.x - self.b[rows]
        self._apply_x(self.a[rows].T @ rr, coef)
        if self.maintain_mode == 1:
            self._apply_r(self.gram[rows].T @ rr, coef)

    def _step_rbcd(self, uniforms):
        s = self.block
        coef = self.alpha * self.n / (s * self.frob_sq)
        cols = _subset(self.n, s, uniforms)
        rr = self.at[cols] @ self.r
        d = np.zeros(self.n)
        d[cols] = rr
        self._apply_x(d, coef)
        self._apply_r(self.at[cols].T @ rr, coef)

    def _step_bgk(self, normals):
        p = self.block
        coef = self.alpha / (p * self.frob_sq)
        if not self.r_fresh:
            self._fresh_r()
        s_mat = normals[: self.m * p].reshape(self.m, p)
        self._apply_x(self.at @ (s_mat @ (s_mat.T @ self.r)), coef)
        self.r_fresh = False

    def _step_bgls(self, normals):
        s = self.block
        coef = self.alpha / (s * self.frob_sq)
        if not self.r_fresh:
            self._fresh_r()
        t_mat = normals[: self.n * s].reshape(self.n, s)
        self._apply_x(t_mat @ (t_mat.T @ (self.at @ self.r)), coef)
        self.r_fresh = False

    def _step_sgc(self, u, normals):
        idx = _categorical(self.cum, u)
        icoord, jrow = self.entry_rows[idx], self.entry_cols[idx]
        eta = normals[: self.n]
        quad = float(eta @ (self.a @ eta))
        res = self.r[jrow]
        step = self.alpha * (quad / self.trace_a) * res / self.entry_vals[idx]
        d = np.zeros(self.n)
        d[icoord] = 1.0
        self._apply_x(d, step)
        self._apply_r(self.at[icoord], step)

    def run(self, uniforms, normals, count, final_chunk):
        for it in range(count):
            kind = self.kind
            if kind == KIND_RK:
                self._step_rk(uniforms[it, 0])
            elif kind == KIND_RGS:
                self._step_rgs(uniforms[it, 0])
            elif kind == KIND_DSGS:
                self._step_dsgs(uniforms[it, 0])
            elif kind == KIND_RBK:
                self._step_rbk(uniforms[it])
            elif kind == KIND_RBCD:
                self._step_rbcd(uniforms[it])
            elif kind == KIND_BGK:
                self._step_bgk(normals[it])
            elif kind == KIND_BGLS:
                self._step_bgls(normals[it])
            else:
                self._step_sgc(uniforms[it, 0], normals[it])
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
                return ST_CONVERGED
            if metric > self.div_limit or not np.isfinite(metric):
                if not recorded:
                    self._record(metric)
                return ST_DIVERGED
            if final_chunk and it == count - 1 and not recorded:
                self._record(metric)
        return ST_CONTINUE
