"""Pointwise kernels for the shipped models.

A model is packed into a flat float array ``mp = [model_id, n, params...]`` so
compiled right-hand sides can dispatch without Python objects.  Parameter
layouts:

* constant: ``omega[0..n)``
* circle / torus-product: ``c[0..n), eps[0..n)`` (circle is the n = 1 case)
* winfree-type: ``kappa, omega[0..n)`` with ``P = 1 + cos 2 pi x``,
  ``R = -sin 2 pi x``
"""
import math

import numpy as np

from ._accel import jit

CONSTANT = 0
CIRCLE = 1
TORUS = 2
WINFREE = 3

TWO_PI = 2.0 * math.pi


@jit
def model_f(mp, x):
    out = np.empty(int(mp[1]))
    model_f_into(mp, x, out)
    return out


@jit
def model_df(mp, x):
    n = int(mp[1])
    out = np.empty((n, n))
    model_df_into(mp, x, out)
    return out


@jit
def model_f_into(mp, x, out):
    mid = int(mp[0])
    n = int(mp[1])
    if mid == CONSTANT:
        for i in range(n):
            out[i] = mp[2 + i]
    elif mid == CIRCLE or mid == TORUS:
        for i in range(n):
            out[i] = mp[2 + i] + mp[2 + n + i] * math.sin(TWO_PI * x[i])
    else:
        kappa = mp[2]
        total = 0.0
        for j in range(n):
            total += 1.0 + math.cos(TWO_PI * x[j])
        for i in range(n):
            out[i] = mp[3 + i] - (kappa / n) * total * math.sin(TWO_PI * x[i])


@jit
def model_df_into(mp, x, out):
    mid = int(mp[0])
    n = int(mp[1])
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
    if mid == CIRCLE or mid == TORUS:
        for i in range(n):
            out[i, i] = TWO_PI * mp[2 + n + i] * math.cos(TWO_PI * x[i])
    elif mid == WINFREE:
        kappa = mp[2]
        total = 0.0
        for j in range(n):
            total += 1.0 + math.cos(TWO_PI * x[j])
        for i in range(n):
            r = -math.sin(TWO_PI * x[i])
            dr = -TWO_PI * math.cos(TWO_PI * x[i])
            for j in range(n):
                dp = -TWO_PI * math.sin(TWO_PI * x[j])
                out[i, j] = (kappa / n) * r * dp
            out[i, i] += (kappa / n) * dr * total


@jit
def model_f_batch(mp, xs):
    m = xs.shape[0]
    n = int(mp[1])
    out = np.empty((m, n))
    for k in range(m):
        out[k] = model_f(mp, xs[k])
    return out


@jit
def model_df_batch(mp, xs):
    m = xs.shape[0]
    n = int(mp[1])
    out = np.empty((m, n, n))
    for k in range(m):
        out[k] = model_df(mp, xs[k])
    return out


# numpy implementations, vectorized over a leading batch axis


def model_f_np(mp, xs):
    mid = int(mp[0])
    n = int(mp[1])
    xs = np.asarray(xs, dtype=float)
    if mid == CONSTANT:
        return np.broadcast_to(mp[2:2 + n], xs.shape).copy()
    if mid in (CIRCLE, TORUS):
        return mp[2:2 + n] + mp[2 + n:2 + 2 * n] * np.sin(TWO_PI * xs)
    kappa = mp[2]
    total = np.sum(1.0 + np.cos(TWO_PI * xs), axis=-1, keepdims=True)
    return mp[3:3 + n] - (kappa / n) * total * np.sin(TWO_PI * xs)


def model_df_np(mp, xs):
    mid = int(mp[0])
    n = int(mp[1])
    xs = np.asarray(xs, dtype=float)
    out = np.zeros(xs.shape + (n,))
    if mid == CONSTANT:
        return out
    idx = np.arange(n)
    if mid in (CIRCLE, TORUS):
        out[..., idx, idx] = TWO_PI * mp[2 + n:2 + 2 * n] * np.cos(TWO_PI * xs)
        return out
    kappa = mp[2]
    r = -np.sin(TWO_PI * xs)
    dr = -TWO_PI * np.cos(TWO_PI * xs)
    dp = -TWO_PI * np.sin(TWO_PI * xs)
    total = np.sum(1.0 + np.cos(TWO_PI * xs), axis=-1)
    out[...] = (kappa / n) * r[..., :, None] * dp[..., None, :]
    out[..., idx, idx] += (kappa / n) * dr * total[..., None]
    return out


# block evaluation, component-major: xt[i, k] is coordinate i of node k.
# The inner loops run over nodes so the transcendental calls vectorize.


@jit
def model_f_block(mp, xt, out, m):
    mid = int(mp[0])
    n = int(mp[1])
    if mid == CONSTANT:
        for i in range(n):
            v = mp[2 + i]
            for k in range(m):
                out[i, k] = v
    elif mid == CIRCLE or mid == TORUS:
        for i in range(n):
            c = mp[2 + i]
            e = mp[2 + n + i]
            for k in range(m):
                out[i, k] = c + e * math.sin(TWO_PI * xt[i, k])
    else:
        kappa = mp[2]
        total = np.zeros(m)
        for j in range(n):
            for k in range(m):
                total[k] += 1.0 + math.cos(TWO_PI * xt[j, k])
        for i in range(n):
            om = mp[3 + i]
            for k in range(m):
                out[i, k] = om - (kappa / n) * total[k] * math.sin(TWO_PI * xt[i, k])


@jit
def model_df_block(mp, xt, out, m):
    mid = int(mp[0])
    n = int(mp[1])
    for i in range(n):
        for j in range(n):
            for k in range(m):
                out[i, j, k] = 0.0
    if mid == CIRCLE or mid == TORUS:
        for i in range(n):
            e = TWO_PI * mp[2 + n + i]
            for k in range(m):
                out[i, i, k] = e * math.cos(TWO_PI * xt[i, k])
    elif mid == WINFREE:
        kappa = mp[2]
        total = np.zeros(m)
        sn = np.empty((n, m))
        cs = np.empty((n, m))
        for j in range(n):
            for k in range(m):
                sn[j, k] = math.sin(TWO_PI * xt[j, k])
                cs[j, k] = math.cos(TWO_PI * xt[j, k])
                total[k] += 1.0 + cs[j, k]
        scale = kappa / n
        for i in range(n):
            for j in range(n):
                for k in range(m):
                    # R(x_i) P'(x_j) with R = -sin, P' = -2 pi sin
                    out[i, j, k] = scale * TWO_PI * sn[i, k] * sn[j, k]
            for k in range(m):
                out[i, i, k] += -scale * TWO_PI * cs[i, k] * total[k]
