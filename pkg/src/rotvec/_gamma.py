"""Single-pass sums behind the finite-horizon map Gamma_k.

Along the oriented line ``p(s) = base + tau * s * vel`` (``0 <= s <= k``) with
values ``g = a + b f(p)``, conjugated source ``u = 1 - g / w`` and kernel
``M = diag(1/w) (b df) diag(w)``, let ``C_i(s)`` be the running integral of
``sigma(I_i M I_i)`` and ``E_i = exp(-tau C_i / q)``.  The pass returns the
Simpson integrals

    S1_i = int E_0 g_i,   S4_i = int E_0 A_i,   S5 = int E_0,   S3_i = int E_i A_i

with ``A_i = sigma(I_i u)``, plus the end values ``C_i(k)`` and the largest
``|C_i| / q`` met (for the overflow guard).  Everything else in Gamma_k is a
combination of these numbers.
"""
import math

import numpy as np

from ._accel import jit
from ._models import model_df_block, model_f_block
from .algebra import kernel_traces, signed_sums
from .quadrature import cumulative_simpson

CHUNK = 1 << 15


BLOCK = 2048


@jit
def gamma_sums_loop(mp, a, b, base, vel, w, tau, k, n_intervals):
    q = base.shape[0]
    h = k / n_intervals
    B = BLOCK
    xt = np.empty((q, B + 1))
    ft = np.empty((q, B + 1))
    jt = np.empty((q, q, B + 1))
    A = np.empty((q + 1, B + 1))
    K = np.empty((q + 1, B + 1))
    C = np.empty((q + 1, B + 1))
    rows = np.empty((q, B + 1))
    cols = np.empty((q, B + 1))
    wt = np.empty(B + 1)
    S1 = np.zeros(q)
    S4 = np.zeros(q)
    S3 = np.zeros(q)
    S5 = 0.0
    carry = np.zeros(q + 1)
    worst = 0.0
    start = 0
    while start < n_intervals:
        stop = min(start + B, n_intervals)
        m = stop - start + 1
        for i in range(q):
            for j in range(m):
                xt[i, j] = base[i] + (tau * (start + j) * h) * vel[i]
        model_f_block(mp, xt, ft, m)
        model_df_block(mp, xt, jt, m)
        for j in range(m):
            A[0, j] = 0.0
            K[0, j] = 0.0
        for r in range(q):
            for j in range(m):
                ft[r, j] = a + b * ft[r, j]
                A[r + 1, j] = 1.0 - ft[r, j] / w[r]
                A[0, j] += A[r + 1, j]
                rows[r, j] = 0.0
                cols[r, j] = 0.0
        for r in range(q):
            for c in range(q):
                ratio = b * w[c] / w[r]
                for j in range(m):
                    v = ratio * jt[r, c, j]
                    K[0, j] += v
                    rows[r, j] += v
                    cols[c, j] += v
        for r in range(q):
            for j in range(m):
                diag = b * jt[r, r, j]
                A[r + 1, j] = A[0, j] - 2.0 * A[r + 1, j]
                K[r + 1, j] = K[0, j] - 2.0 * (rows[r, j] + cols[r, j] - 2.0 * diag)
        # running Simpson integral of each kernel trace
        for i in range(q + 1):
            C[i, 0] = carry[i]
            for j in range(0, m - 2, 2):
                C[i, j + 1] = C[i, j] + h / 12.0 * (5.0 * K[i, j] + 8.0 * K[i, j + 1] - K[i, j + 2])
                C[i, j + 2] = C[i, j] + h / 3.0 * (K[i, j] + 4.0 * K[i, j + 1] + K[i, j + 2])
            carry[i] = C[i, m - 1]
            for j in range(m):
                worst = max(worst, abs(C[i, j]) / q)
                C[i, j] = math.exp(-tau * C[i, j] / q)
        for j in range(m):
            wt[j] = 4.0 if (start + j) % 2 == 1 else 2.0
        if start == 0:
            wt[0] = 1.0
        else:
            wt[0] = 0.0
        if stop == n_intervals:
            wt[m - 1] = 1.0
        for j in range(m):
            S5 += wt[j] * C[0, j]
        for r in range(q):
            s1 = 0.0
            s4 = 0.0
            s3 = 0.0
            for j in range(m):
                e0 = wt[j] * C[0, j]
                s1 += e0 * ft[r, j]
                s4 += e0 * A[r + 1, j]
                s3 += wt[j] * C[r + 1, j] * A[r + 1, j]
            S1[r] += s1
            S4[r] += s4
            S3[r] += s3
        start = stop
    f = h / 3.0
    return S1 * f, S4 * f, S5 * f, S3 * f, carry, worst


def gamma_sums_np(line, tau, k, n_intervals):
    """Chunked numpy version of :func:`gamma_sums_loop` for any field."""
    q = line.dim
    h = k / n_intervals
    S1 = np.zeros(q)
    S4 = np.zeros(q)
    S3 = np.zeros(q)
    S5 = 0.0
    carry = np.zeros(q + 1)
    worst = 0.0
    start = 0
    while start < n_intervals:
        stop = min(start + CHUNK, n_intervals)
        idx = np.arange(start, stop + 1)
        s = idx * h
        pts = line.base + (tau * s)[:, None] * line.vel
        g = line.a + line.b * line.field.evaluate(pts)
        u = 1.0 - g / line.weights
        M = line.b * line.field.jacobian(pts)
        M = M * (line.weights[None, None, :] / line.weights[None, :, None])
        A = signed_sums(u)
        K = kernel_traces(M)
        C = carry + cumulative_simpson(K, h, use_numba=False)
        worst = max(worst, float(np.max(np.abs(C))) / q)
        wts = np.where(idx % 2 == 1, 4.0, 2.0)
        wts[idx == 0] = 1.0
        wts[idx == n_intervals] = 1.0
        if start > 0:
            wts[0] = 0.0  # counted at the end of the previous chunk
        E = np.exp(-tau * C / q)
        S5 += float(np.sum(wts * E[:, 0]))
        S1 += np.sum((wts * E[:, 0])[:, None] * g, axis=0)
        S4 += np.sum((wts * E[:, 0])[:, None] * A[:, 1:], axis=0)
        S3 += np.sum(wts[:, None] * E[:, 1:] * A[:, 1:], axis=0)
        carry = C[-1]
        start = stop
    f = h / 3.0
    return S1 * f, S4 * f, S5 * f, S3 * f, carry.copy(), worst
