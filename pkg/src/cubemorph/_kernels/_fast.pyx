# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: initializedcheck=False
# cython: cdivision=True
"""Compiled learning-engine hot loop.

Line-by-line port of ``cubemorph._kernels.pure.run_chain``; both backends
consume the SplitMix64 stream in the same order and evaluate the same
float expressions, so traces are bit-identical across them. Any change
here must be mirrored in the pure kernel (and vice versa).
"""

from libc.math cimport exp as c_exp

import numpy as np

BACKEND_NAME = "fast"

ctypedef unsigned long long u64

cdef double _INV_2_53 = 1.0 / 9007199254740992.0
cdef double _EXP_CLAMP = 700.0


cdef inline u64 _next_u64(u64* state) noexcept nogil:
    cdef u64 z
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 _randbelow(u64* state, u64 n) noexcept nogil:
    cdef u64 threshold = (0 - n) % n
    cdef u64 r
    while True:
        r = _next_u64(state)
        if r >= threshold:
            return r % n


def run_chain(
    long long[:, ::1] positions,
    long long[::1] lo,
    long long[::1] hi,
    int dim,
    long long[:, ::1] deltas,
    int[::1] dist,
    double tau,
    object rng_state,
    long long n_steps,
    bint stop_on_converge,
    int[::1] agents_out,
    long long[::1] dest_out,
    int[::1] nfwd_out,
    int[::1] nrev_out,
    unsigned char[::1] acc_out,
    double[::1] alpha_out,
    double[::1] pot_out,
):
    """Advance the chain by up to n_steps; see the pure kernel docstring."""
    cdef int n = positions.shape[0]
    cdef long long lox = lo[0], loy = lo[1], loz = lo[2]
    cdef long long hix = hi[0], hiy = hi[1], hiz = hi[2]
    cdef long long ny = hiy - loy + 1
    cdef long long nz = hiz - loz + 1
    cdef long long sx = ny * nz
    cdef long long sy = nz
    cdef long long n_cells = (hix - lox + 1) * sx
    cdef long long min_z = 1 if dim == 3 else loz
    cdef int n_deltas = deltas.shape[0]

    px_arr = np.empty(n, dtype=np.int64)
    py_arr = np.empty(n, dtype=np.int64)
    pz_arr = np.empty(n, dtype=np.int64)
    occ_arr = np.full(n_cells, -1, dtype=np.int32)
    reached_arr = np.zeros(n, dtype=np.uint8)
    stack_arr = np.empty(n, dtype=np.int32)
    cand_arr = np.empty(n_deltas, dtype=np.int64)
    cdef long long[::1] px = px_arr
    cdef long long[::1] py = py_arr
    cdef long long[::1] pz = pz_arr
    cdef int[::1] occ = occ_arr
    cdef unsigned char[::1] reached = reached_arr
    cdef int[::1] stack = stack_arr
    cdef long long[::1] cand = cand_arr

    cdef int i, k, m, o, ax, nf, nr, j_idx, d_new, d_old, sp
    cdef long long x, y, z, a, b, c, kx, ky, kz
    cdef long long destx, desty, destz, oidx, didx, idx, t, dx, dy, dz
    cdef bint mobile, rev_mobile, ok, accepted
    cdef double pot, q_fwd, q_rev, ratio, delta, arg, alpha, u
    cdef int on_target
    cdef long long converged_at
    cdef u64 state = <u64>(<object>rng_state)

    for i in range(n):
        px[i] = positions[i, 0]
        py[i] = positions[i, 1]
        pz[i] = positions[i, 2]
        occ[(px[i] - lox) * sx + (py[i] - loy) * sy + (pz[i] - loz)] = i

    pot = 0.0
    on_target = 0
    for i in range(n):
        d_new = dist[(px[i] - lox) * sx + (py[i] - loy) * sy + (pz[i] - loz)]
        pot += 1.0 / (d_new + 1)
        if d_new == 0:
            on_target += 1

    converged_at = -1
    if on_target == n:
        converged_at = 0
        if stop_on_converge:
            return 0, 0, int(state), pot

    t = 0
    while t < n_steps:
        k = <int>_randbelow(&state, <u64>n)
        kx = px[k]
        ky = py[k]
        kz = pz[k]

        mobile = True
        if dim == 3:
            for i in range(n):
                reached[i] = 0
            sp = 0
            for m in range(n):
                if m != k and pz[m] == 1:
                    reached[m] = 1
                    stack[sp] = m
                    sp += 1
            while sp > 0:
                sp -= 1
                m = stack[sp]
                for ax in range(6):
                    if ax == 0:
                        x = px[m] - 1; y = py[m]; z = pz[m]
                    elif ax == 1:
                        x = px[m]; y = py[m] - 1; z = pz[m]
                    elif ax == 2:
                        x = px[m]; y = py[m]; z = pz[m] - 1
                    elif ax == 3:
                        x = px[m]; y = py[m]; z = pz[m] + 1
                    elif ax == 4:
                        x = px[m]; y = py[m] + 1; z = pz[m]
                    else:
                        x = px[m] + 1; y = py[m]; z = pz[m]
                    if x < lox or x > hix or y < loy or y > hiy or z < loz or z > hiz:
                        continue
                    o = occ[(x - lox) * sx + (y - loy) * sy + (z - loz)]
                    if o >= 0 and o != k and reached[o] == 0:
                        reached[o] = 1
                        stack[sp] = o
                        sp += 1
            for ax in range(6):
                if ax == 0:
                    x = kx - 1; y = ky; z = kz
                elif ax == 1:
                    x = kx; y = ky - 1; z = kz
                elif ax == 2:
                    x = kx; y = ky; z = kz - 1
                elif ax == 3:
                    x = kx; y = ky; z = kz + 1
                elif ax == 4:
                    x = kx; y = ky + 1; z = kz
                else:
                    x = kx + 1; y = ky; z = kz
                if x < lox or x > hix or y < loy or y > hiy or z < loz or z > hiz:
                    continue
                o = occ[(x - lox) * sx + (y - loy) * sy + (z - loz)]
                if o >= 0 and reached[o] == 0:
                    mobile = False
                    break

        nf = 0
        if mobile:
            for j_idx in range(n_deltas):
                x = kx + deltas[j_idx, 0]
                y = ky + deltas[j_idx, 1]
                z = kz + deltas[j_idx, 2]
                if x < lox or x > hix or y < loy or y > hiy or z < min_z or z > hiz:
                    continue
                idx = (x - lox) * sx + (y - loy) * sy + (z - loz)
                if occ[idx] != -1:
                    continue
                if dim == 3 and z != 1:
                    ok = False
                    for ax in range(6):
                        if ax == 0:
                            a = x - 1; b = y; c = z
                        elif ax == 1:
                            a = x; b = y - 1; c = z
                        elif ax == 2:
                            a = x; b = y; c = z - 1
                        elif ax == 3:
                            a = x; b = y; c = z + 1
                        elif ax == 4:
                            a = x; b = y + 1; c = z
                        else:
                            a = x + 1; b = y; c = z
                        if a < lox or a > hix or b < loy or b > hiy or c < loz or c > hiz:
                            continue
                        o = occ[(a - lox) * sx + (b - loy) * sy + (c - loz)]
                        if o >= 0 and o != k and reached[o] == 1:
                            ok = True
                            break
                    if not ok:
                        continue
                cand[nf] = idx
                nf += 1

        if nf == 0:
            agents_out[t] = k
            dest_out[t] = -1
            nfwd_out[t] = 0
            nrev_out[t] = 0
            acc_out[t] = 0
            alpha_out[t] = 0.0
            pot_out[t] = pot
            t += 1
            continue

        j_idx = <int>_randbelow(&state, <u64>nf)
        didx = cand[j_idx]
        destx = didx / sx + lox
        desty = (didx % sx) / sy + loy
        destz = (didx % sx) % sy + loz
        oidx = (kx - lox) * sx + (ky - loy) * sy + (kz - loz)

        occ[oidx] = -1
        occ[didx] = k
        px[k] = destx
        py[k] = desty
        pz[k] = destz

        nr = 0
        rev_mobile = True
        if dim == 3:
            for ax in range(6):
                if ax == 0:
                    x = destx - 1; y = desty; z = destz
                elif ax == 1:
                    x = destx; y = desty - 1; z = destz
                elif ax == 2:
                    x = destx; y = desty; z = destz - 1
                elif ax == 3:
                    x = destx; y = desty; z = destz + 1
                elif ax == 4:
                    x = destx; y = desty + 1; z = destz
                else:
                    x = destx + 1; y = desty; z = destz
                if x < lox or x > hix or y < loy or y > hiy or z < loz or z > hiz:
                    continue
                o = occ[(x - lox) * sx + (y - loy) * sy + (z - loz)]
                if o >= 0 and reached[o] == 0:
                    rev_mobile = False
                    break
        if rev_mobile:
            for j_idx in range(n_deltas):
                x = destx + deltas[j_idx, 0]
                y = desty + deltas[j_idx, 1]
                z = destz + deltas[j_idx, 2]
                if x < lox or x > hix or y < loy or y > hiy or z < min_z or z > hiz:
                    continue
                idx = (x - lox) * sx + (y - loy) * sy + (z - loz)
                if occ[idx] != -1:
                    continue
                if dim == 3 and z != 1:
                    ok = False
                    for ax in range(6):
                        if ax == 0:
                            a = x - 1; b = y; c = z
                        elif ax == 1:
                            a = x; b = y - 1; c = z
                        elif ax == 2:
                            a = x; b = y; c = z - 1
                        elif ax == 3:
                            a = x; b = y; c = z + 1
                        elif ax == 4:
                            a = x; b = y + 1; c = z
                        else:
                            a = x + 1; b = y; c = z
                        if a < lox or a > hix or b < loy or b > hiy or c < loz or c > hiz:
                            continue
                        o = occ[(a - lox) * sx + (b - loy) * sy + (c - loz)]
                        if o >= 0 and o != k and reached[o] == 1:
                            ok = True
                            break
                    if not ok:
                        continue
                nr += 1

        if nr == 0:
            raise RuntimeError("reversibility violated: reverse move set is empty")

        q_fwd = 1.0 / nf
        q_rev = 1.0 / nr
        ratio = q_rev / q_fwd
        delta = 1.0 / (dist[didx] + 1) - 1.0 / (dist[oidx] + 1)
        arg = delta / tau
        if arg > _EXP_CLAMP:
            arg = _EXP_CLAMP
        elif arg < -_EXP_CLAMP:
            arg = -_EXP_CLAMP
        alpha = ratio * c_exp(arg)
        if alpha > 1.0:
            alpha = 1.0

        u = <double>(_next_u64(&state) >> 11) * _INV_2_53
        accepted = u < alpha

        if accepted:
            d_new = dist[didx]
            d_old = dist[oidx]
            if d_new == 0:
                on_target += 1
            if d_old == 0:
                on_target -= 1
            pot = 0.0
            for i in range(n):
                pot += 1.0 / (dist[(px[i] - lox) * sx + (py[i] - loy) * sy + (pz[i] - loz)] + 1)
        else:
            occ[didx] = -1
            occ[oidx] = k
            px[k] = kx
            py[k] = ky
            pz[k] = kz

        agents_out[t] = k
        dest_out[t] = didx
        nfwd_out[t] = nf
        nrev_out[t] = nr
        acc_out[t] = 1 if accepted else 0
        alpha_out[t] = alpha
        pot_out[t] = pot
        t += 1

        if accepted and on_target == n and converged_at < 0:
            converged_at = t
            if stop_on_converge:
                break

    for i in range(n):
        positions[i, 0] = px[i]
        positions[i, 1] = py[i]
        positions[i, 2] = pz[i]
    return int(t), int(converged_at), int(state), pot
