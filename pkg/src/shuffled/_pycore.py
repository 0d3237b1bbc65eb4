"""Pure-Python twin of the compiled ``_core`` kernels.

Same signatures, same operation order, so results match the extension bit
for bit.  Used when the extension is not built.
"""
import math

GAUSSIAN = 0
MULTINOMIAL = 1


def _term(count, prob):
    if count == 0.0:
        return 0.0
    if prob <= 0.0:
        return -math.inf
    return count * math.log(prob)


def _swap_h(kind, data, scale, psi, perm, i, j):
    a = psi[perm[i]]
    b = psi[perm[j]]
    xi = data[i]
    xj = data[j]
    if kind == GAUSSIAN:
        d = xi - a
        h = d * d
        d = xj - b
        h = h + d * d
        d = xi - b
        h = h - d * d
        d = xj - a
        h = h - d * d
        return h / scale
    if xi == xj:
        return 0.0
    old = _term(xi, a) + _term(xj, b)
    new = _term(xi, b) + _term(xj, a)
    if old == -math.inf:
        return math.inf
    return new - old


def _mh(kind, data, scale, psi, perm, inv, i, j, z):
    h = _swap_h(kind, data, scale, psi, perm, i, j)
    if -z <= h:
        perm[i], perm[j] = perm[j], perm[i]
        inv[perm[i]] = i
        inv[perm[j]] = j
        return True
    return False


def saem_chain(kind, data, scale, stat, psi, theta, perm, inv, I, J, Z, steps, c, iter0):
    data = [float(v) for v in data]
    stat_l = [float(v) for v in stat]
    psi_l = [float(v) for v in psi]
    theta_l = [float(v) for v in theta]
    perm_l = [int(v) for v in perm]
    inv_l = [int(v) for v in inv]
    I = [int(v) for v in I]
    J = [int(v) for v in J]
    Z = [float(v) for v in Z]
    propose = len(I) > 0
    p = len(psi_l)
    rng_p = range(p)
    accepted = 0
    for k in range(steps):
        if propose and _mh(kind, data, scale, psi_l, perm_l, inv_l, I[k], J[k], Z[k]):
            accepted += 1
        g = 1.0 / (float(iter0 + k) + c)
        gc = 1.0 - g
        for l in rng_p:
            psi_l[l] = gc * psi_l[l] + g * stat_l[inv_l[l]]
        for l in rng_p:
            theta_l[l] = gc * theta_l[l] + g * psi_l[perm_l[l]]
    psi[:] = psi_l
    theta[:] = theta_l
    perm[:] = perm_l
    inv[:] = inv_l
    return accepted


def mh_trace(kind, data, scale, psi, perm, inv, I, J, Z, out):
    data = [float(v) for v in data]
    psi_l = [float(v) for v in psi]
    perm_l = [int(v) for v in perm]
    inv_l = [int(v) for v in inv]
    accepted = 0
    rows = []
    for i, j, z in zip(I.tolist(), J.tolist(), Z.tolist()):
        if _mh(kind, data, scale, psi_l, perm_l, inv_l, i, j, z):
            accepted += 1
        rows.append(list(perm_l))
    if rows:
        out[:] = rows
    perm[:] = perm_l
    inv[:] = inv_l
    return accepted
