"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function; used when the compiled
extension is unavailable or ``PKMOPT_PURE_PYTHON`` is set. Batch solvers
take a ``(N, d)`` pose array and return per-pose arrays; ``ok`` is 0 where
the pose is degenerate (zero-length leg).
"""
import math

import numpy as np

PARALLEL_EPS = 1e-12
DEGENERATE_EPS = 1e-12


def segment_distance(p0, p1, q0, q1):
    """Minimum distance between closed segments p0-p1 and q0-q1."""
    d1 = [p1[i] - p0[i] for i in range(3)]
    d2 = [q1[i] - q0[i] for i in range(3)]
    r = [p0[i] - q0[i] for i in range(3)]
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    if a <= PARALLEL_EPS and e <= PARALLEL_EPS:
        s = t = 0.0
    elif a <= PARALLEL_EPS:
        s = 0.0
        t = min(max(f / e, 0.0), 1.0)
    else:
        c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
        if e <= PARALLEL_EPS:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - b * b
            if denom > PARALLEL_EPS * a * e:
                s = min(max((b * f - c * e) / denom, 0.0), 1.0)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
    dx = [r[i] + d1[i] * s - d2[i] * t for i in range(3)]
    return math.sqrt(dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2])


def _segment_distance_batch(p0, p1, q0, q1):
    # vectorised twin of segment_distance; arrays of shape (N, 3)
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > PARALLEL_EPS * a * e,
                     np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t = (b * s + f) / e
        low = t < 0.0
        high = t > 1.0
        s = np.where(low, np.clip(-c / a, 0.0, 1.0), s)
        s = np.where(high, np.clip((b - c) / a, 0.0, 1.0), s)
        t = np.clip(t, 0.0, 1.0)
    out = np.empty(len(a))
    generic = (a > PARALLEL_EPS) & (e > PARALLEL_EPS)
    diff = r + d1 * s[:, None] - d2 * t[:, None]
    out[generic] = np.sqrt(np.einsum("ij,ij->i", diff[generic], diff[generic]))
    for i in np.flatnonzero(~generic):
        out[i] = segment_distance(p0[i], p1[i], q0[i], q1[i])
    return out


def inv_cond_2x2(m00, m01, m10, m11):
    """sigma_min / sigma_max of a 2x2 matrix.

    With p = |(a+d, c-b)| and q = |(a-d, b+c)| the singular values are
    (p +- q) / 2, so the ratio is 4|det| / (p + q)^2.
    """
    s = math.hypot(m00 + m11, m10 - m01) + math.hypot(m00 - m11, m01 + m10)
    if s == 0.0:
        return 0.0
    return min(4.0 * abs(m00 * m11 - m01 * m10) / (s * s), 1.0)


def _inv_cond_2x2_batch(m00, m01, m10, m11):
    s = np.hypot(m00 + m11, m10 - m01) + np.hypot(m00 - m11, m01 + m10)
    det = np.abs(m00 * m11 - m01 * m10)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(s > 0.0, 4.0 * det / (s * s), 0.0)
    return np.minimum(q, 1.0)


def inv_cond(matrix):
    """sigma_min / sigma_max for a square matrix (0 for the zero matrix)."""
    m = np.asarray(matrix, dtype=float)
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


# -- lambda -----------------------------------------------------------------

def lambda_batch(l1, l2, thetas):
    thetas = np.asarray(thetas, dtype=float)
    rho = np.sqrt(np.maximum(l1 * l1 + l2 * l2 - 2.0 * l1 * l2 * np.cos(thetas), 0.0))
    ok = rho > DEGENERATE_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        j = np.where(ok, l1 * l2 * np.sin(thetas) / rho, 0.0)
    return rho, j, ok.astype(np.uint8)


# -- 2UPS-1U ------------------------------------------------------------------

def _ups_geometry(params):
    a1, phi1, h1, b1, psi1, h2, a2, phi2, h3, b2, psi2, h4, t = params
    base = np.array([
        [a1 * math.cos(phi1), a1 * math.sin(phi1), h1],
        [a2 * math.cos(phi2), a2 * math.sin(phi2), h2],
    ])
    # platform anchors relative to the U-joint centre [0, 0, t]
    plat = np.array([
        [b1 * math.cos(psi1), b1 * math.sin(psi1), h3],
        [b2 * math.cos(psi2), b2 * math.sin(psi2), h4],
    ])
    return base, plat, float(t)


def _rot_uv(alpha, beta):
    # Rx(alpha) @ Ry(beta), stacked over poses: shape (N, 3, 3)
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    r = np.empty(alpha.shape + (3, 3))
    r[..., 0, 0] = cb
    r[..., 0, 1] = 0.0
    r[..., 0, 2] = sb
    r[..., 1, 0] = sa * sb
    r[..., 1, 1] = ca
    r[..., 1, 2] = -sa * cb
    r[..., 2, 0] = -ca * sb
    r[..., 2, 1] = sa
    r[..., 2, 2] = ca * cb
    return r


def _ups_world(base, plat, t, alpha, beta):
    rot = _rot_uv(alpha, beta)
    world = np.einsum("nij,lj->nli", rot, plat)
    world[..., 2] += t
    legs = world - base[None, :, :]
    return rot, world, legs


def _ups_rho(base, plat, t, alpha, beta):
    legs = _ups_world(base, plat, t, alpha, beta)[2]
    return np.sqrt(np.einsum("nli,nli->nl", legs, legs))


def ups_batch(params, poses, step):
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    base, plat, t = _ups_geometry(params)
    alpha = poses[:, 0].copy()
    beta = poses[:, 1].copy()
    rot, world, legs = _ups_world(base, plat, t, alpha, beta)
    rho = np.sqrt(np.einsum("nli,nli->nl", legs, legs))
    ok = np.all(rho > DEGENERATE_EPS, axis=1)

    h2 = 2.0 * step
    da = (_ups_rho(base, plat, t, alpha + step, beta)
          - _ups_rho(base, plat, t, alpha - step, beta)) / h2
    db = (_ups_rho(base, plat, t, alpha, beta + step)
          - _ups_rho(base, plat, t, alpha, beta - step)) / h2
    # J[:, leg, axis]
    det = da[:, 0] * db[:, 1] - db[:, 0] * da[:, 1]
    quality = _inv_cond_2x2_batch(da[:, 0], db[:, 0], da[:, 1], db[:, 1])

    # spherical-joint cone: leg axis vs. home leg direction carried by the platform
    home = plat.copy()
    home[:, 2] += t
    home_dirs = home - base
    axes = np.einsum("nij,lj->nli", rot, home_dirs)
    cross = np.cross(legs, axes)
    sin_part = np.sqrt(np.einsum("nli,nli->nl", cross, cross))
    cos_part = np.einsum("nli,nli->nl", legs, axes)
    cones = np.arctan2(sin_part, cos_part)

    passive = np.column_stack([cones[:, 0], cones[:, 1], alpha, beta])
    clearance = _segment_distance_batch(
        np.broadcast_to(base[0], legs[:, 0].shape).copy(), world[:, 0],
        np.broadcast_to(base[1], legs[:, 1].shape).copy(), world[:, 1])
    return det, quality, rho, passive, clearance, ok.astype(np.uint8)


# -- 3-RPR --------------------------------------------------------------------

def rpr_batch(params, poses, platform_angles, platform_radius):
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    r1 = params[0]
    thetas = np.asarray(params[1:4], dtype=float)
    base = np.column_stack([r1 * np.cos(thetas), r1 * np.sin(thetas)])
    pa = np.asarray(platform_angles, dtype=float)
    x, y, phi = poses[:, 0], poses[:, 1], poses[:, 2]
    ang = phi[:, None] + pa[None, :]
    rx = platform_radius * np.cos(ang)
    ry = platform_radius * np.sin(ang)
    ux = x[:, None] + rx - base[None, :, 0]
    uy = y[:, None] + ry - base[None, :, 1]
    rho = np.sqrt(ux * ux + uy * uy)
    ok = np.all(rho > DEGENERATE_EPS, axis=1)

    # velocity loop A [xdot, ydot, L*phidot] = B rhodot, B = diag(rho)
    a = np.empty((len(x), 3, 3))
    a[:, :, 0] = ux
    a[:, :, 1] = uy
    a[:, :, 2] = (rx * uy - ry * ux) / platform_radius
    det = np.linalg.det(a)
    # kappa^-1(A^-1 B) == kappa^-1(B^-1 A): rows of A scaled by 1/rho
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = a / rho[:, :, None]
    quality = np.zeros(len(x))
    good = ok & np.all(np.isfinite(unit), axis=(1, 2))
    if np.any(good):
        s = np.linalg.svd(unit[good], compute_uv=False)
        with np.errstate(divide="ignore", invalid="ignore"):
            quality[good] = np.where(s[:, 0] > 0.0, s[:, -1] / s[:, 0], 0.0)
    base_ang = np.arctan2(uy, ux)
    plat_ang = np.angle(np.exp(1j * (base_ang - phi[:, None])))
    passive = np.concatenate([base_ang, plat_ang], axis=1)
    return det, quality, rho, passive, ok.astype(np.uint8)


# -- reductions -----------------------------------------------------------------

def ordered_sum(values):
    """Left-to-right floating sum (cumsum is strictly sequential)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def bracket_sweep(rho, rewards, lowers, stroke, rel_tol):
    """Best bracket ``[lower, stroke*lower]`` over candidate lowers.

    Returns ``(best_sum, best_index)``; ties keep the first (smallest) lower.
    """
    rho = np.asarray(rho, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    leg_lo = rho.min(axis=1)
    leg_hi = rho.max(axis=1)
    best_sum = -math.inf
    best_idx = -1
    for k, lower in enumerate(lowers):
        upper = stroke * lower
        tol = rel_tol * upper
        inside = (leg_lo >= lower - tol) & (leg_hi <= upper + tol)
        e = ordered_sum(rewards[inside])
        if e > best_sum:
            best_sum = e
            best_idx = k
    return best_sum, best_idx
