"""Pure-Python slot loops; reference implementation of ``_ckernels.pyx``.

Both modules must perform the same floating-point operations in the same
order so that traces agree across backends. Inputs are copied to lists
because element access on numpy arrays is slow from Python.
"""


def _best_response(phi, q, alpha, cm):
    # returns (price, demand before noise); demand is exactly 0 when the market shuts
    cost = q + cm
    if phi - alpha * cost <= 0.0:
        return phi / alpha, 0.0
    p = (phi + alpha * cost) / (2.0 * alpha)
    if p < 0.0:
        p = 0.0
    d = phi - alpha * p
    return p, d if d > 0.0 else 0.0


def policy_one_loop(phi_idx, rep_idx, support, qstar, h, alpha, cs, cm, pi, mean_phi,
                    Q, P, D, um, us, phi_bar, f, um_bar, um_bar_eq21, us_bar):
    phi_idx = phi_idx.tolist()
    rep_idx = rep_idx.tolist()
    support = support.tolist()
    qstar = qstar.tolist()
    h = h.tolist()
    T = len(phi_idx)
    cols = [[0.0] * T for _ in range(10)]
    oQ, oP, oD, oum, ous, opb, of, oumb, oume, ousb = cols
    pb = 0.0
    umb = 0.0
    ume = 0.0
    usb = 0.0
    for t in range(T):
        i = phi_idx[t]
        j = rep_idx[t]
        phi = support[i]
        pb = pb + (support[j] - pb) / (t + 1)
        ft = mean_phi - pb
        if ft < 0.0:
            ft = 0.0
        q = qstar[j] + pi * ft
        p, d = _best_response(phi, q, alpha, cm)
        u_m = d * (p - q - cm)
        u_s = d * (q - cs)
        clair = h[i][j] - pi * ft
        if clair < 0.0:
            clair = 0.0
        clair = clair * clair
        umb = umb + (u_m - umb) / (t + 1)
        ume = ume + (clair - ume) / (t + 1)
        usb = usb + (u_s - usb) / (t + 1)
        oQ[t] = q
        oP[t] = p
        oD[t] = d
        oum[t] = u_m
        ous[t] = u_s
        opb[t] = pb
        of[t] = ft
        oumb[t] = umb
        oume[t] = ume
        ousb[t] = usb
    for out, col in zip((Q, P, D, um, us, phi_bar, f, um_bar, um_bar_eq21, us_bar), cols):
        out[:] = col


def policy_two_loop(phi_idx, rep_idx, noise, support, qstar, target, alpha, cs, cm, pi,
                    mean_phi, Q, P, D, um, us, phi_bar, f, um_bar, us_bar, d_bar, counts):
    phi_idx = phi_idx.tolist()
    rep_idx = rep_idx.tolist()
    noise = noise.tolist()
    support = support.tolist()
    qstar = qstar.tolist()
    target = target.tolist()
    T = len(phi_idx)
    L = len(support)
    n = [int(c) for c in counts]
    dbar = list(target)
    cols = [[0.0] * T for _ in range(9)]
    oQ, oP, oD, oum, ous, opb, of, oumb, ousb = cols
    trace = [None] * T
    pb = 0.0
    umb = 0.0
    usb = 0.0
    for t in range(T):
        i = phi_idx[t]
        j = rep_idx[t]
        phi = support[i]
        pb = pb + (support[j] - pb) / (t + 1)
        ft = mean_phi - pb
        if ft < 0.0:
            ft = 0.0
        q = qstar[j] + 2.0 * pi * (dbar[j] - target[j])
        p, base = _best_response(phi, q, alpha, cm)
        if base > 0.0:
            d = base + noise[t]
            if d < 0.0:
                d = 0.0
        else:
            d = 0.0
        u_m = d * (p - q - cm)
        u_s = d * (q - cs)
        n[j] += 1
        dbar[j] = dbar[j] + (d - dbar[j]) / n[j]
        umb = umb + (u_m - umb) / (t + 1)
        usb = usb + (u_s - usb) / (t + 1)
        oQ[t] = q
        oP[t] = p
        oD[t] = d
        oum[t] = u_m
        ous[t] = u_s
        opb[t] = pb
        of[t] = ft
        oumb[t] = umb
        ousb[t] = usb
        trace[t] = tuple(dbar)
    for out, col in zip((Q, P, D, um, us, phi_bar, f, um_bar, us_bar), cols):
        out[:] = col
    if T:
        d_bar[:, :] = trace
    counts[:] = n
