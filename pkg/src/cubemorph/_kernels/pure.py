"""Pure-Python learning-engine hot loop.

This module and the compiled twin (``_fast.pyx``) implement one algorithm
and must stay in lockstep: same RNG consumption order, same candidate
ordering, same float expressions. A trace produced by either backend from
the same seed is bit-identical.

Per-step contract (one RNG stream, SplitMix64):
  1. draw the acting agent k uniformly;
  2. build k's allowed motion destinations in delta-table order;
  3. if there are none the step is a self-loop and draws nothing further;
  4. draw a destination index uniformly;
  5. count the reverse move set at the destination;
  6. alpha = min(1, (q_rev/q_fwd) * exp(clamp(delta/tau, +-700)));
  7. draw u and accept iff u < alpha (u is drawn even when alpha == 1).

Geometry is padded to three coordinates; 2D runs use a single z = 0 layer
and a delta table with dz = 0, so one code path serves both dimensions.
The z-ground logic only activates when dim == 3.
"""

from __future__ import annotations

import math

BACKEND_NAME = "pure"

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0
_EXP_CLAMP = 700.0


def run_chain(
    positions,      # int64 (N,3) ndarray, updated in place
    lo,             # int64 (3,)
    hi,             # int64 (3,)
    dim,            # 2 or 3
    deltas,         # int64 (K,3), lexicographic
    dist,           # int32 flat field over the padded box
    tau,            # float > 0
    rng_state,      # uint64 SplitMix64 state (consumed and returned)
    n_steps,        # number of steps to attempt in this call
    stop_on_converge,  # bool: stop once every agent is on a target cell
    agents_out,     # int32 (n_steps,)
    dest_out,       # int64 (n_steps,) flat cell index, -1 for self-loop
    nfwd_out,       # int32 (n_steps,)
    nrev_out,       # int32 (n_steps,)
    acc_out,        # uint8 (n_steps,)
    alpha_out,      # float64 (n_steps,)
    pot_out,        # float64 (n_steps,)
):
    """Advance the chain by up to n_steps.

    Returns (steps_done, converged_at, rng_state, potential) where
    converged_at is the step count within this call at which the potential
    first reached N (-1 if it never did).
    """
    n = positions.shape[0]
    lox, loy, loz = int(lo[0]), int(lo[1]), int(lo[2])
    hix, hiy, hiz = int(hi[0]), int(hi[1]), int(hi[2])
    ny = hiy - loy + 1
    nz = hiz - loz + 1
    sx = ny * nz
    sy = nz
    n_cells = (hix - lox + 1) * sx
    min_z = 1 if dim == 3 else loz

    px = [int(positions[i, 0]) for i in range(n)]
    py = [int(positions[i, 1]) for i in range(n)]
    pz = [int(positions[i, 2]) for i in range(n)]
    dlist = [(int(deltas[j, 0]), int(deltas[j, 1]), int(deltas[j, 2])) for j in range(deltas.shape[0])]
    dist_l = dist.tolist()

    occ = [-1] * n_cells
    for i in range(n):
        occ[(px[i] - lox) * sx + (py[i] - loy) * sy + (pz[i] - loz)] = i

    state = int(rng_state)
    exp = math.exp

    def next_u64():
        nonlocal state
        state = (state + _GAMMA) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randbelow(m):
        threshold = ((1 << 64) - m) % m
        while True:
            r = next_u64()
            if r >= threshold:
                return r % m

    # Current potential and on-target count; both maintained exactly as the
    # compiled kernel does (full re-sum on acceptance, in agent-id order).
    pot = 0.0
    on_target = 0
    for i in range(n):
        d = dist_l[(px[i] - lox) * sx + (py[i] - loy) * sy + (pz[i] - loz)]
        pot += 1.0 / (d + 1)
        if d == 0:
            on_target += 1

    converged_at = -1
    if on_target == n:
        converged_at = 0
        if stop_on_converge:
            return 0, 0, state, pot

    cand = [0] * len(dlist)

    t = 0
    while t < n_steps:
        k = randbelow(n)
        kx, ky, kz = px[k], py[k], pz[k]

        mobile = True
        reached = None
        if dim == 3:
            # Ground-contact flags for every agent except k: flood from the
            # layer-1 agents along axis adjacency.
            reached = [False] * n
            stack = []
            for m in range(n):
                if m != k and pz[m] == 1:
                    reached[m] = True
                    stack.append(m)
            while stack:
                m = stack.pop()
                mx, my, mz = px[m], py[m], pz[m]
                for ax in range(6):
                    if ax == 0:
                        x, y, z = mx - 1, my, mz
                    elif ax == 1:
                        x, y, z = mx, my - 1, mz
                    elif ax == 2:
                        x, y, z = mx, my, mz - 1
                    elif ax == 3:
                        x, y, z = mx, my, mz + 1
                    elif ax == 4:
                        x, y, z = mx, my + 1, mz
                    else:
                        x, y, z = mx + 1, my, mz
                    if x < lox or x > hix or y < loy or y > hiy or z < loz or z > hiz:
                        continue
                    o = occ[(x - lox) * sx + (y - loy) * sy + (z - loz)]
                    if o >= 0 and o != k and not reached[o]:
                        reached[o] = True
                        stack.append(o)
            # Every neighbor of k must keep ground contact without k.
            for ax in range(6):
                if ax == 0:
                    x, y, z = kx - 1, ky, kz
                elif ax == 1:
                    x, y, z = kx, ky - 1, kz
                elif ax == 2:
                    x, y, z = kx, ky, kz - 1
                elif ax == 3:
                    x, y, z = kx, ky, kz + 1
                elif ax == 4:
                    x, y, z = kx, ky + 1, kz
                else:
                    x, y, z = kx + 1, ky, kz
                if x < lox or x > hix or y < loy or y > hiy or z < loz or z > hiz:
                    continue
                o = occ[(x - lox) * sx + (y - loy) * sy + (z - loz)]
                if o >= 0 and not reached[o]:
                    mobile = False
                    break

        nf = 0
        if mobile:
            for dx, dy, dz in dlist:
                x = kx + dx
                y = ky + dy
                z = kz + dz
                if x < lox or x > hix or y < loy or y > hiy or z < min_z or z > hiz:
                    continue
                idx = (x - lox) * sx + (y - loy) * sy + (z - loz)
                if occ[idx] != -1:
                    continue
                if dim == 3 and z != 1:
                    ok = False
                    for ax in range(6):
                        if ax == 0:
                            a, b, c = x - 1, y, z
                        elif ax == 1:
                            a, b, c = x, y - 1, z
                        elif ax == 2:
                            a, b, c = x, y, z - 1
                        elif ax == 3:
                            a, b, c = x, y, z + 1
                        elif ax == 4:
                            a, b, c = x, y + 1, z
                        else:
                            a, b, c = x + 1, y, z
                        if a < lox or a > hix or b < loy or b > hiy or c < loz or c > hiz:
                            continue
                        o = occ[(a - lox) * sx + (b - loy) * sy + (c - loz)]
                        if o >= 0 and o != k and reached[o]:
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

        j = randbelow(nf)
        didx = cand[j]
        dxq, rem = divmod(didx, sx)
        dyq, dzq = divmod(rem, sy)
        destx = dxq + lox
        desty = dyq + loy
        destz = dzq + loz
        oidx = (kx - lox) * sx + (ky - loy) * sy + (kz - loz)

        # Tentatively move k, then count the reverse move set from there.
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
                    x, y, z = destx - 1, desty, destz
                elif ax == 1:
                    x, y, z = destx, desty - 1, destz
                elif ax == 2:
                    x, y, z = destx, desty, destz - 1
                elif ax == 3:
                    x, y, z = destx, desty, destz + 1
                elif ax == 4:
                    x, y, z = destx, desty + 1, destz
                else:
                    x, y, z = destx + 1, desty, destz
                if x < lox or x > hix or y < loy or y > hiy or z < loz or z > hiz:
                    continue
                o = occ[(x - lox) * sx + (y - loy) * sy + (z - loz)]
                if o >= 0 and not reached[o]:
                    rev_mobile = False
                    break
        if rev_mobile:
            for dx, dy, dz in dlist:
                x = destx + dx
                y = desty + dy
                z = destz + dz
                if x < lox or x > hix or y < loy or y > hiy or z < min_z or z > hiz:
                    continue
                idx = (x - lox) * sx + (y - loy) * sy + (z - loz)
                if occ[idx] != -1:
                    continue
                if dim == 3 and z != 1:
                    ok = False
                    for ax in range(6):
                        if ax == 0:
                            a, b, c = x - 1, y, z
                        elif ax == 1:
                            a, b, c = x, y - 1, z
                        elif ax == 2:
                            a, b, c = x, y, z - 1
                        elif ax == 3:
                            a, b, c = x, y, z + 1
                        elif ax == 4:
                            a, b, c = x, y + 1, z
                        else:
                            a, b, c = x + 1, y, z
                        if a < lox or a > hix or b < loy or b > hiy or c < loz or c > hiz:
                            continue
                        o = occ[(a - lox) * sx + (b - loy) * sy + (c - loz)]
                        if o >= 0 and o != k and reached[o]:
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
        delta = 1.0 / (dist_l[didx] + 1) - 1.0 / (dist_l[oidx] + 1)
        arg = delta / tau
        if arg > _EXP_CLAMP:
            arg = _EXP_CLAMP
        elif arg < -_EXP_CLAMP:
            arg = -_EXP_CLAMP
        alpha = ratio * exp(arg)
        if alpha > 1.0:
            alpha = 1.0

        u = (next_u64() >> 11) * _INV_2_53
        accepted = u < alpha

        if accepted:
            d_new = dist_l[didx]
            d_old = dist_l[oidx]
            if d_new == 0:
                on_target += 1
            if d_old == 0:
                on_target -= 1
            pot = 0.0
            for i in range(n):
                pot += 1.0 / (dist_l[(px[i] - lox) * sx + (py[i] - loy) * sy + (pz[i] - loz)] + 1)
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
    return t, converged_at, state, pot
