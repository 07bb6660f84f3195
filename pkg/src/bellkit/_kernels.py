"""Hot numeric kernels behind the angle optimizer.

Everything here works on a flat parameter vector (see ``pack_params``) so the
inner loops stay free of Python objects.  Each kernel exists twice:

* a numba ``@njit`` build (default), and
* a pure numpy/Python build, selected by setting ``BELLKIT_NO_NUMBA=1`` in
  the environment (or used automatically when numba is unavailable).

Both builds are importable side by side (``*_numba`` / ``*_numpy``) so tests
and ``benchmarks/bench_kernels.py`` can compare them; the unsuffixed names
are the selected path.

Parameter vector layout (all float64):
    P[0] = |f|^2
    P[1] = interference coefficient 2*|f|*cos(f_phase)*coherence
    P[2] = norm = 1/(1+|f|^2)
    P[3], P[4] = arm-1 eps_par, eps_perp
    P[5], P[6] = arm-2 eps_par, eps_perp
    P[7], P[8] = arm-1, arm-2 detector efficiency
    P[9]  = mode: 0.0 heralded (polariser-removed coincidences), 1.0 strict (true singles)
    P[10] = scale applied to the two subtracted terms (1.0 normally; 1+b with
            background fraction b)
"""

from __future__ import annotations

import os
import warnings

import numpy as np

NPARAMS = 11

_env = os.environ.get("BELLKIT_NO_NUMBA", "").strip().lower()
_DISABLED_BY_ENV = _env not in ("", "0", "false", "no")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

NUMBA_ENABLED = NUMBA_AVAILABLE and not _DISABLED_BY_ENV


def pack_params(f_mag, f_phase, coherence, e1_par, e1_perp, e2_par, e2_perp,
                eta1, eta2, strict, den_scale=1.0):
    P = np.empty(NPARAMS, dtype=np.float64)
    P[0] = f_mag * f_mag
    P[1] = 2.0 * f_mag * np.cos(f_phase) * coherence
    P[2] = 1.0 / (1.0 + P[0])
    P[3], P[4] = e1_par, e1_perp
    P[5], P[6] = e2_par, e2_perp
    P[7], P[8] = eta1, eta2
    P[9] = 1.0 if strict else 0.0
    P[10] = den_scale
    return P


def cc_pair(t1, t2, P):
    """Coincidence probability table; broadcasts over array angles."""
    s1, c1 = np.sin(t1), np.cos(t1)
    s2, c2 = np.sin(t2), np.cos(t2)
    f2, cross = P[0], P[1]
    x = s1 * c1 * s2 * c2
    w_pp = s1 * s1 * s2 * s2 + f2 * c1 * c1 * c2 * c2 + cross * x
    w_px = s1 * s1 * c2 * c2 + f2 * c1 * c1 * s2 * s2 - cross * x
    w_xp = c1 * c1 * s2 * s2 + f2 * s1 * s1 * c2 * c2 - cross * x
    w_xx = c1 * c1 * c2 * c2 + f2 * s1 * s1 * s2 * s2 + cross * x
    t = (P[3] * P[5] * w_pp + P[3] * P[6] * w_px
         + P[4] * P[5] * w_xp + P[4] * P[6] * w_xx)
    return P[7] * P[8] * t * P[2]


def den_term(t, P, arm):
    """Subtracted term of the CH sum for one arm; broadcasts over angles.

    Heralded mode: coincidence with the other polariser removed (eta1*eta2);
    strict mode: bare singles probability (one eta only).
    """
    s, c = np.sin(t), np.cos(t)
    f2 = P[0]
    if arm == 1:
        e_par, e_perp, eta_self, eta_other = P[3], P[4], P[7], P[8]
    else:
        e_par, e_perp, eta_self, eta_other = P[5], P[6], P[8], P[7]
    m = (e_par * (s * s + f2 * c * c) + e_perp * (c * c + f2 * s * s)) * P[2]
    eta = eta_self if P[9] == 1.0 else eta_self * eta_other
    return P[10] * eta * m


def _ch_impl(t1, t2, t1p, t2p, P):
    # Self-contained scalar CH so the jitted build has no call dependencies;
    # kept in lockstep with cc_pair/den_term by the kernel consistency tests.
    f2 = P[0]
    cross = P[1]
    norm = P[2]
    e1p = P[3]
    e1x = P[4]
    e2p = P[5]
    e2x = P[6]
    eta1 = P[7]
    eta2 = P[8]
    strict = P[9]
    den_scale = P[10]

    cc = 0.0
    for idx in range(4):
        if idx == 0:
            a, b, sign = t1, t2, 1.0
        elif idx == 1:
            a, b, sign = t1, t2p, -1.0
        elif idx == 2:
            a, b, sign = t1p, t2, 1.0
        else:
            a, b, sign = t1p, t2p, 1.0
        sa = np.sin(a)
        ca = np.cos(a)
        sb = np.sin(b)
        cb = np.cos(b)
        x = sa * ca * sb * cb
        w_pp = sa * sa * sb * sb + f2 * ca * ca * cb * cb + cross * x
        w_px = sa * sa * cb * cb + f2 * ca * ca * sb * sb - cross * x
        w_xp = ca * ca * sb * sb + f2 * sa * sa * cb * cb - cross * x
        w_xx = ca * ca * cb * cb + f2 * sa * sa * sb * sb + cross * x
        t = e1p * e2p * w_pp + e1p * e2x * w_px + e1x * e2p * w_xp + e1x * e2x * w_xx
        cc += sign * eta1 * eta2 * t * norm

    s = np.sin(t1p)
    c = np.cos(t1p)
    m1 = (e1p * (s * s + f2 * c * c) + e1x * (c * c + f2 * s * s)) * norm
    s = np.sin(t2)
    c = np.cos(t2)
    m2 = (e2p * (s * s + f2 * c * c) + e2x * (c * c + f2 * s * s)) * norm
    if strict == 1.0:
        den = eta1 * m1 + eta2 * m2
    else:
        den = eta1 * eta2 * (m1 + m2)
    return cc - den_scale * den


def _make_ratio(ch_fn):
    # Positive-over-negative-terms ratio; denominator is strictly positive
    # for |f| > 0 with eps_par > 0.
    def ratio(t1, t2, t1p, t2p, P):
        ch = ch_fn(t1, t2, t1p, t2p, P)
        f2 = P[0]
        s = np.sin(t1p)
        c = np.cos(t1p)
        m1 = (P[3] * (s * s + f2 * c * c) + P[4] * (c * c + f2 * s * s)) * P[2]
        s = np.sin(t2)
        c = np.cos(t2)
        m2 = (P[5] * (s * s + f2 * c * c) + P[6] * (c * c + f2 * s * s)) * P[2]
        if P[9] == 1.0:
            den = P[7] * m1 + P[8] * m2
        else:
            den = P[7] * P[8] * (m1 + m2)
        den *= P[10]
        return ch / den + 1.0

    return ratio


def _grid_reduce_loops(cc, d1, d2):
    """For each (j, l): best i of cc[i,j]-cc[i,l] and best k of
    cc[k,j]+cc[k,l]-d1[k].  First index wins ties, matching numpy argmax."""
    n = cc.shape[0]
    G = np.empty((n, n))
    AI = np.empty((n, n), dtype=np.int64)
    BK = np.empty((n, n), dtype=np.int64)
    for j in range(n):
        for l in range(n):
            best_a = cc[0, j] - cc[0, l]
            ia = 0
            best_b = cc[0, j] + cc[0, l] - d1[0]
            kb = 0
            for i in range(1, n):
                va = cc[i, j] - cc[i, l]
                if va > best_a:
                    best_a = va
                    ia = i
                vb = cc[i, j] + cc[i, l] - d1[i]
                if vb > best_b:
                    best_b = vb
                    kb = i
            G[j, l] = best_a + best_b - d2[j]
            AI[j, l] = ia
            BK[j, l] = kb
    return G, AI, BK


def _grid_reduce_numpy(cc, d1, d2):
    diff = cc[:, :, None] - cc[:, None, :]
    AI = diff.argmax(axis=0)
    A = diff.max(axis=0)
    summ = cc[:, :, None] + cc[:, None, :] - d1[:, None, None]
    BK = summ.argmax(axis=0)
    B = summ.max(axis=0)
    G = A + B - d2[:, None]
    return G, AI.astype(np.int64), BK.astype(np.int64)


def _grid_reduce_ratio_loops(cc, d1, d2):
    """Ratio analogue of _grid_reduce_loops: best (i, k) of
    (cc[i,j]-cc[i,l]+cc[k,j]+cc[k,l]) / (d1[k]+d2[j])."""
    n = cc.shape[0]
    G = np.empty((n, n))
    AI = np.empty((n, n), dtype=np.int64)
    BK = np.empty((n, n), dtype=np.int64)
    for j in range(n):
        for l in range(n):
            best_a = cc[0, j] - cc[0, l]
            ia = 0
            for i in range(1, n):
                va = cc[i, j] - cc[i, l]
                if va > best_a:
                    best_a = va
                    ia = i
            best_r = -1e300
            kb = 0
            for k in range(n):
                num = best_a + cc[k, j] + cc[k, l]
                den = d1[k] + d2[j]
                r = num / den
                if r > best_r:
                    best_r = r
                    kb = k
            G[j, l] = best_r
            AI[j, l] = ia
            BK[j, l] = kb
    return G, AI, BK


def _grid_reduce_ratio_numpy(cc, d1, d2):
    diff = cc[:, :, None] - cc[:, None, :]
    AI = diff.argmax(axis=0)
    A = diff.max(axis=0)
    num = A[None, :, :] + cc[:, :, None] + cc[:, None, :]
    den = d1[:, None, None] + d2[None, :, None]
    r = num / den
    BK = r.argmax(axis=0)
    G = r.max(axis=0)
    return G, AI.astype(np.int64), BK.astype(np.int64)


def _make_nelder_mead(fn):
    """Nelder-Mead maximiser over the four analyser angles.

    Standard reflection/expansion/contraction/shrink coefficients; stops when
    the simplex infinity-diameter drops below ``xatol`` or after ``maxfev``
    objective evaluations.  Angles are unconstrained reals (the objective is
    pi-periodic), so no bound handling is needed.
    """

    def nelder_mead(x0, P, step, xatol, maxfev):
        ndim = 4
        npts = 5
        sim = np.empty((npts, ndim))
        fval = np.empty(npts)
        for i in range(npts):
            for d in range(ndim):
                sim[i, d] = x0[d]
            if i > 0:
                sim[i, i - 1] += step
        nfev = 0
        for i in range(npts):
            fval[i] = -fn(sim[i, 0], sim[i, 1], sim[i, 2], sim[i, 3], P)
            nfev += 1

        converged = False
        while nfev < maxfev:
            order = np.argsort(fval)
            sim = sim[order]
            fval = fval[order]

            diam = 0.0
            for i in range(1, npts):
                for d in range(ndim):
                    delta = abs(sim[i, d] - sim[0, d])
                    if delta > diam:
                        diam = delta
            if diam < xatol:
                converged = True
                break

            centroid = np.zeros(ndim)
            for i in range(npts - 1):
                for d in range(ndim):
                    centroid[d] += sim[i, d]
            for d in range(ndim):
                centroid[d] /= (npts - 1)

            xr = centroid + 1.0 * (centroid - sim[-1])
            fr = -fn(xr[0], xr[1], xr[2], xr[3], P)
            nfev += 1
            if fr < fval[0]:
                xe = centroid + 2.0 * (centroid - sim[-1])
                fe = -fn(xe[0], xe[1], xe[2], xe[3], P)
                nfev += 1
                if fe < fr:
                    sim[-1] = xe
                    fval[-1] = fe
                else:
                    sim[-1] = xr
                    fval[-1] = fr
            elif fr < fval[-2]:
                sim[-1] = xr
                fval[-1] = fr
            else:
                if fr < fval[-1]:
                    xc = centroid + 0.5 * (xr - centroid)
                else:
                    xc = centroid + 0.5 * (sim[-1] - centroid)
                fc = -fn(xc[0], xc[1], xc[2], xc[3], P)
                nfev += 1
                if fc < min(fr, fval[-1]):
                    sim[-1] = xc
                    fval[-1] = fc
                else:
                    for i in range(1, npts):
                        sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                        fval[i] = -fn(sim[i, 0], sim[i, 1], sim[i, 2], sim[i, 3], P)
                        nfev += 1

        best = int(np.argmin(fval))
        return sim[best].copy(), -fval[best], nfev, converged

    return nelder_mead


# --- pure numpy / Python build ------------------------------------------------

ch_eval_numpy = _ch_impl
ratio_eval_numpy = _make_ratio(_ch_impl)
grid_reduce_numpy = _grid_reduce_numpy
grid_reduce_ratio_numpy = _grid_reduce_ratio_numpy
nelder_mead_numpy = _make_nelder_mead(ch_eval_numpy)
nelder_mead_ratio_numpy = _make_nelder_mead(ratio_eval_numpy)

# --- numba build ---------------------------------------------------------------

if NUMBA_AVAILABLE:
    ch_eval_numba = njit(cache=True)(_ch_impl)
    grid_reduce_numba = njit(cache=True)(_grid_reduce_loops)
    grid_reduce_ratio_numba = njit(cache=True)(_grid_reduce_ratio_loops)
    with warnings.catch_warnings():
        # closures over jitted callees are compiled fresh per process
        warnings.simplefilter("ignore")
        ratio_eval_numba = njit(cache=True)(_make_ratio(ch_eval_numba))
        nelder_mead_numba = njit(cache=True)(_make_nelder_mead(ch_eval_numba))
        nelder_mead_ratio_numba = njit(cache=True)(_make_nelder_mead(ratio_eval_numba))

if NUMBA_ENABLED:
    ch_eval = ch_eval_numba
    ratio_eval = ratio_eval_numba
    grid_reduce = grid_reduce_numba
    grid_reduce_ratio = grid_reduce_ratio_numba
    nelder_mead = nelder_mead_numba
    nelder_mead_ratio = nelder_mead_ratio_numba
else:
    ch_eval = ch_eval_numpy
    ratio_eval = ratio_eval_numpy
    grid_reduce = grid_reduce_numpy
    grid_reduce_ratio = grid_reduce_ratio_numpy
    nelder_mead = nelder_mead_numpy
    nelder_mead_ratio = nelder_mead_ratio_numpy


def grid_tables(thetas, P):
    """Coincidence and subtracted-term tables on a shared angle grid."""
    cc = cc_pair(thetas[:, None], thetas[None, :], P)
    d1 = den_term(thetas, P, 1)
    d2 = den_term(thetas, P, 2)
    return cc, d1, d2


def topk_cells(thetas, P, k, objective="ch"):
    """Best k coarse-grid settings, ranked by CH (or the ratio).

    Returns (values, quads) with quads[i] = (t1, t2, t1p, t2p) in radians.
    The full 4-angle grid is scanned exactly via the pairwise decomposition;
    ties resolve to the smallest flat (j, l) index.
    """
    cc, d1, d2 = grid_tables(thetas, P)
    if objective == "ch":
        G, AI, BK = grid_reduce(cc, d1, d2)
    elif objective == "ratio":
        G, AI, BK = grid_reduce_ratio(cc, d1, d2)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    flat = np.argsort(-G, axis=None, kind="stable")[:k]
    n = len(thetas)
    values = np.empty(len(flat))
    quads = np.empty((len(flat), 4))
    for m, idx in enumerate(flat):
        j, l = divmod(int(idx), n)
        i = int(AI[j, l])
        kk = int(BK[j, l])
        values[m] = G[j, l]
        quads[m] = (thetas[i], thetas[j], thetas[kk], thetas[l])
    return values, quads
