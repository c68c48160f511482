"""Right-hand sides for the compiled integrator, with flat parameter layouts.

flow:      ``[zeta_kind, zeta_width, n, zeta_vec[n], model...]``
psi:       ``[i, q, a, b, conjugate, base[q], vel[q], rate[q], w[q], model...]``
riccati:   ``[q, ka, kb, kh, A freqs[ka], A cos[q ka], A sin[q ka], B ... (q^2 kb), H ... (q^3 kh)]``
riccati-psi: ``[i, riccati...]``
"""
import math

import numpy as np

from ._accel import jit
from ._models import model_df, model_f

ZETA_NONE = 0
ZETA_CONSTANT = 1
ZETA_GAUSSIAN = 2
ZETA_EXPDECAY = 3
ZETA_LORENTZ = 4
ZETA_SINE = 5

ZETA_KINDS = {
    "zero": ZETA_NONE,
    "constant": ZETA_CONSTANT,
    "gaussian": ZETA_GAUSSIAN,
    "exp-decay": ZETA_EXPDECAY,
    "lorentzian": ZETA_LORENTZ,
    "sine": ZETA_SINE,
}


@jit
def zeta_profile(kind, width, t):
    """Scalar envelope of the built-in perturbations."""
    if kind == ZETA_NONE:
        return 0.0
    if kind == ZETA_CONSTANT:
        return 1.0
    u = t / width
    if kind == ZETA_GAUSSIAN:
        return math.exp(-u * u)
    if kind == ZETA_EXPDECAY:
        return math.exp(-abs(u))
    if kind == ZETA_LORENTZ:
        return 1.0 / (1.0 + u * u)
    return math.sin(2.0 * math.pi * u)


@jit
def flow_rhs(t, y, p):
    kind = int(p[0])
    n = int(p[2])
    out = model_f(p[3 + n:], y)
    if kind != ZETA_NONE:
        env = zeta_profile(kind, p[1], t)
        for j in range(n):
            out[j] += env * p[3 + j]
    return out


def pack_flow(mp, zeta_kind=ZETA_NONE, width=1.0, vec=None):
    n = int(mp[1])
    v = np.zeros(n) if vec is None else np.asarray(vec, dtype=float).reshape(n)
    return np.concatenate([[zeta_kind, width, n], v, mp]).astype(float)


@jit
def psi_rhs(t, y, p):
    i = int(p[0])
    q = int(p[1])
    a = p[2]
    b = p[3]
    conj = p[4] != 0.0
    o = 5
    base = p[o:o + q]
    vel = p[o + q:o + 2 * q]
    rate = p[o + 2 * q:o + 3 * q]
    w = p[o + 3 * q:o + 4 * q]
    mp = p[o + 4 * q:]
    x = base + t * vel
    f = model_f(mp, x)
    J = model_df(mp, x)
    src = 0.0
    ker = 0.0
    for r in range(q):
        sr = -1.0 if r == i - 1 else 1.0
        u = rate[r] - (a + b * f[r])
        if conj:
            u = u / w[r]
        src += sr * u
        for c in range(q):
            sc = -1.0 if c == i - 1 else 1.0
            m = b * J[r, c]
            if conj:
                m = m * w[c] / w[r]
            ker += sr * sc * m
    out = np.empty(1)
    out[0] = src + ker * y[0] / q
    return out


def pack_psi(mp, i, a, b, base, vel, rate, w=None):
    q = int(mp[1])
    conj = 0.0 if w is None else 1.0
    w = np.ones(q) if w is None else np.asarray(w, dtype=float)
    return np.concatenate([
        [i, q, a, b, conj],
        np.asarray(base, dtype=float).reshape(q),
        np.asarray(vel, dtype=float).reshape(q),
        np.asarray(rate, dtype=float).reshape(q),
        w.reshape(q),
        mp,
    ]).astype(float)


@jit
def trig_eval(t, p, A, B, H, with_h):
    # each coefficient entry is sum_k c_k cos(w_k t) + s_k sin(w_k t)
    q = int(p[0])
    ka = int(p[1])
    kb = int(p[2])
    kh = int(p[3])
    o = 4
    cs = np.empty(max(ka, kb, kh))
    sn = np.empty(max(ka, kb, kh))
    for k in range(ka):
        cs[k] = math.cos(p[o + k] * t)
        sn[k] = math.sin(p[o + k] * t)
    o += ka
    na = q * ka
    for r in range(q):
        val = 0.0
        for k in range(ka):
            idx = o + r * ka + k
            val += p[idx] * cs[k] + p[idx + na] * sn[k]
        A[r] = val
    o += 2 * na
    for k in range(kb):
        cs[k] = math.cos(p[o + k] * t)
        sn[k] = math.sin(p[o + k] * t)
    o += kb
    nb = q * q * kb
    for r in range(q):
        for c in range(q):
            val = 0.0
            for k in range(kb):
                idx = o + (r * q + c) * kb + k
                val += p[idx] * cs[k] + p[idx + nb] * sn[k]
            B[r, c] = val
    if not with_h:
        return
    o += 2 * nb
    for k in range(kh):
        cs[k] = math.cos(p[o + k] * t)
        sn[k] = math.sin(p[o + k] * t)
    o += kh
    nh = q * q * q * kh
    for r in range(q):
        for a in range(q):
            for c in range(q):
                val = 0.0
                for k in range(kh):
                    idx = o + ((r * q + a) * q + c) * kh + k
                    val += p[idx] * cs[k] + p[idx + nh] * sn[k]
                H[r, a, c] = val


@jit
def riccati_trig_rhs(t, y, p):
    q = int(p[0])
    A = np.empty(q)
    B = np.empty((q, q))
    H = np.empty((q, q, q))
    trig_eval(t, p, A, B, H, True)
    out = A.copy()
    for r in range(q):
        for c in range(q):
            out[r] += B[r, c] * y[c]
            for a in range(q):
                out[r] += H[r, a, c] * y[a] * y[c]
    return out


@jit
def riccati_psi_rhs(t, y, p):
    # p = [i, trig coefficients...]; psi' = sigma(I_i A) + sigma(I_i B I_i) psi / q
    i = int(p[0])
    c = p[1:]
    q = int(c[0])
    A = np.empty(q)
    B = np.empty((q, q))
    H = np.empty((1, 1, 1))
    trig_eval(t, c, A, B, H, False)
    src = 0.0
    ker = 0.0
    for r in range(q):
        sr = -1.0 if r == i - 1 else 1.0
        src += sr * A[r]
        for k in range(q):
            sk = -1.0 if k == i - 1 else 1.0
            ker += sr * sk * B[r, k]
    out = np.empty(1)
    out[0] = src + ker * y[0] / q
    return out


FLOW = 0
PSI = 1
RICCATI = 2
RICCATI_PSI = 3
KINDS = {"flow": FLOW, "psi": PSI, "riccati": RICCATI, "riccati-psi": RICCATI_PSI}


@jit
def rhs_by_kind(kind, t, y, p):
    if kind == FLOW:
        return flow_rhs(t, y, p)
    if kind == PSI:
        return psi_rhs(t, y, p)
    if kind == RICCATI:
        return riccati_trig_rhs(t, y, p)
    return riccati_psi_rhs(t, y, p)
