# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, atan2, fabs, fmin, fmax, hypot, INFINITY, M_PI

cnp.import_array()

cdef double PARALLEL_EPS = 1e-12
cdef double DEGENERATE_EPS = 1e-12


cdef inline double _clamp01(double x) nogil:
    return fmin(fmax(x, 0.0), 1.0)


cdef double _segdist(const double* p0, const double* p1,
                     const double* q0, const double* q1) nogil:
    cdef double d1[3]
    cdef double d2[3]
    cdef double r[3]
    cdef double a, e, f, c, b, denom, s, t, dx, acc = 0.0
    cdef int i
    for i in range(3):
        d1[i] = p1[i] - p0[i]
        d2[i] = q1[i] - q0[i]
        r[i] = p0[i] - q0[i]
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    if a <= PARALLEL_EPS and e <= PARALLEL_EPS:
        s = 0.0
        t = 0.0
    elif a <= PARALLEL_EPS:
        s = 0.0
        t = _clamp01(f / e)
    else:
        c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
        if e <= PARALLEL_EPS:
            t = 0.0
            s = _clamp01(-c / a)
        else:
            b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
            denom = a * e - b * b
            if denom > PARALLEL_EPS * a * e:
                s = _clamp01((b * f - c * e) / denom)
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = _clamp01((b - c) / a)
    for i in range(3):
        dx = r[i] + d1[i] * s - d2[i] * t
        acc += dx * dx
    return sqrt(acc)


def segment_distance(p0, p1, q0, q1):
    cdef double a[3]
    cdef double b[3]
    cdef double c[3]
    cdef double d[3]
    cdef int i
    for i in range(3):
        a[i] = p0[i]
        b[i] = p1[i]
        c[i] = q0[i]
        d[i] = q1[i]
    return _segdist(a, b, c, d)


cdef inline double _icond2(double m00, double m01, double m10, double m11) nogil:
    # sigma_max = (p + q) / 2 and sigma_min = |det| / sigma_max; no cancellation near 1
    cdef double p = hypot(m00 + m11, m10 - m01)
    cdef double q = hypot(m00 - m11, m01 + m10)
    cdef double s = p + q
    if s == 0.0:
        return 0.0
    return fmin(4.0 * fabs(m00 * m11 - m01 * m10) / (s * s), 1.0)


def inv_cond_2x2(double m00, double m01, double m10, double m11):
    return _icond2(m00, m01, m10, m11)


cdef double _icond3(double* m) nogil:
    # one-sided Jacobi on the columns of a row-major 3x3 matrix (destroys m)
    cdef int sweep, i, j, k
    cdef double alpha, beta, gamma, zeta, t, c, s, xi, xj
    cdef double n0, n1, n2, smax, smin
    cdef int rotated
    for sweep in range(60):
        rotated = 0
        for i in range(2):
            for j in range(i + 1, 3):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(3):
                    alpha += m[3 * k + i] * m[3 * k + i]
                    beta += m[3 * k + j] * m[3 * k + j]
                    gamma += m[3 * k + i] * m[3 * k + j]
                if gamma == 0.0 or fabs(gamma) <= 1e-15 * sqrt(alpha * beta):
                    continue
                rotated = 1
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = c * t
                for k in range(3):
                    xi = m[3 * k + i]
                    xj = m[3 * k + j]
                    m[3 * k + i] = c * xi - s * xj
                    m[3 * k + j] = s * xi + c * xj
        if not rotated:
            break
    n0 = sqrt(m[0] * m[0] + m[3] * m[3] + m[6] * m[6])
    n1 = sqrt(m[1] * m[1] + m[4] * m[4] + m[7] * m[7])
    n2 = sqrt(m[2] * m[2] + m[5] * m[5] + m[8] * m[8])
    smax = fmax(n0, fmax(n1, n2))
    smin = fmin(n0, fmin(n1, n2))
    if smax == 0.0:
        return 0.0
    return smin / smax


def inv_cond(matrix):
    m = np.asarray(matrix, dtype=float)
    if m.shape == (2, 2):
        return _icond2(m[0, 0], m[0, 1], m[1, 0], m[1, 1])
    cdef double buf[9]
    cdef int i, j
    if m.shape == (3, 3):
        for i in range(3):
            for j in range(3):
                buf[3 * i + j] = m[i, j]
        return _icond3(buf)
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s.min() / s.max())


# -- lambda -----------------------------------------------------------------

def lambda_batch(double l1, double l2, thetas):
    cdef double[::1] th = np.ascontiguousarray(thetas, dtype=np.float64)
    cdef Py_ssize_t n = th.shape[0], i
    rho_a = np.empty(n)
    j_a = np.empty(n)
    ok_a = np.empty(n, dtype=np.uint8)
    cdef double[::1] rho = rho_a
    cdef double[::1] jv = j_a
    cdef unsigned char[::1] ok = ok_a
    cdef double r2
    with nogil:
        for i in range(n):
            r2 = l1 * l1 + l2 * l2 - 2.0 * l1 * l2 * cos(th[i])
            rho[i] = sqrt(fmax(r2, 0.0))
            if rho[i] > DEGENERATE_EPS:
                ok[i] = 1
                jv[i] = l1 * l2 * sin(th[i]) / rho[i]
            else:
                ok[i] = 0
                jv[i] = 0.0
    return rho_a, j_a, ok_a


# -- 2UPS-1U ------------------------------------------------------------------

cdef struct UpsGeom:
    double base[6]
    double plat[6]
    double home[6]
    double t


cdef inline void _rot(double alpha, double beta, double* r) noexcept nogil:
    cdef double ca = cos(alpha), sa = sin(alpha), cb = cos(beta), sb = sin(beta)
    r[0] = cb
    r[1] = 0.0
    r[2] = sb
    r[3] = sa * sb
    r[4] = ca
    r[5] = -sa * cb
    r[6] = -ca * sb
    r[7] = sa
    r[8] = ca * cb


cdef inline void _ups_legs(UpsGeom* g, double alpha, double beta,
                           double* rot, double* world, double* legs) noexcept nogil:
    cdef int l, i
    _rot(alpha, beta, rot)
    for l in range(2):
        for i in range(3):
            world[3 * l + i] = (rot[3 * i] * g.plat[3 * l]
                                + rot[3 * i + 1] * g.plat[3 * l + 1]
                                + rot[3 * i + 2] * g.plat[3 * l + 2])
        world[3 * l + 2] += g.t
        for i in range(3):
            legs[3 * l + i] = world[3 * l + i] - g.base[3 * l + i]


cdef inline void _ups_rho(UpsGeom* g, double alpha, double beta, double* rho) noexcept nogil:
    cdef double rot[9]
    cdef double world[6]
    cdef double legs[6]
    _ups_legs(g, alpha, beta, rot, world, legs)
    rho[0] = sqrt(legs[0] * legs[0] + legs[1] * legs[1] + legs[2] * legs[2])
    rho[1] = sqrt(legs[3] * legs[3] + legs[4] * legs[4] + legs[5] * legs[5])


def ups_batch(params, poses, double step):
    cdef double[:, ::1] q = np.ascontiguousarray(np.atleast_2d(poses), dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0], p
    cdef UpsGeom g
    a1, phi1, h1, b1, psi1, h2, a2, phi2, h3, b2, psi2, h4, t = [float(v) for v in params]
    g.base[0] = a1 * cos(phi1)
    g.base[1] = a1 * sin(phi1)
    g.base[2] = h1
    g.base[3] = a2 * cos(phi2)
    g.base[4] = a2 * sin(phi2)
    g.base[5] = h2
    g.plat[0] = b1 * cos(psi1)
    g.plat[1] = b1 * sin(psi1)
    g.plat[2] = h3
    g.plat[3] = b2 * cos(psi2)
    g.plat[4] = b2 * sin(psi2)
    g.plat[5] = h4
    g.t = t
    cdef int l, i
    for l in range(2):
        for i in range(3):
            g.home[3 * l + i] = g.plat[3 * l + i] - g.base[3 * l + i]
        g.home[3 * l + 2] += g.t

    det_a = np.empty(n)
    qual_a = np.empty(n)
    rho_a = np.empty((n, 2))
    pas_a = np.empty((n, 4))
    clr_a = np.empty(n)
    ok_a = np.empty(n, dtype=np.uint8)
    cdef double[::1] det = det_a
    cdef double[::1] qual = qual_a
    cdef double[:, ::1] rho = rho_a
    cdef double[:, ::1] pas = pas_a
    cdef double[::1] clr = clr_a
    cdef unsigned char[::1] ok = ok_a

    cdef double rot[9]
    cdef double world[6]
    cdef double legs[6]
    cdef double rp[2]
    cdef double rm[2]
    cdef double da[2]
    cdef double db[2]
    cdef double axis[3]
    cdef double cx, cy, cz, sp, cp, alpha, beta, h2s = 2.0 * step
    with nogil:
        for p in range(n):
            alpha = q[p, 0]
            beta = q[p, 1]
            _ups_legs(&g, alpha, beta, rot, world, legs)
            for l in range(2):
                rho[p, l] = sqrt(legs[3 * l] * legs[3 * l]
                                 + legs[3 * l + 1] * legs[3 * l + 1]
                                 + legs[3 * l + 2] * legs[3 * l + 2])
            ok[p] = 1 if (rho[p, 0] > DEGENERATE_EPS and rho[p, 1] > DEGENERATE_EPS) else 0

            _ups_rho(&g, alpha + step, beta, rp)
            _ups_rho(&g, alpha - step, beta, rm)
            da[0] = (rp[0] - rm[0]) / h2s
            da[1] = (rp[1] - rm[1]) / h2s
            _ups_rho(&g, alpha, beta + step, rp)
            _ups_rho(&g, alpha, beta - step, rm)
            db[0] = (rp[0] - rm[0]) / h2s
            db[1] = (rp[1] - rm[1]) / h2s
            det[p] = da[0] * db[1] - db[0] * da[1]
            qual[p] = _icond2(da[0], db[0], da[1], db[1])

            for l in range(2):
                for i in range(3):
                    axis[i] = (rot[3 * i] * g.home[3 * l]
                               + rot[3 * i + 1] * g.home[3 * l + 1]
                               + rot[3 * i + 2] * g.home[3 * l + 2])
                cx = legs[3 * l + 1] * axis[2] - legs[3 * l + 2] * axis[1]
                cy = legs[3 * l + 2] * axis[0] - legs[3 * l] * axis[2]
                cz = legs[3 * l] * axis[1] - legs[3 * l + 1] * axis[0]
                sp = sqrt(cx * cx + cy * cy + cz * cz)
                cp = legs[3 * l] * axis[0] + legs[3 * l + 1] * axis[1] + legs[3 * l + 2] * axis[2]
                pas[p, l] = atan2(sp, cp)
            pas[p, 2] = alpha
            pas[p, 3] = beta
            clr[p] = _segdist(&g.base[0], &world[0], &g.base[3], &world[3])
    return det_a, qual_a, rho_a, pas_a, clr_a, ok_a


# -- 3-RPR --------------------------------------------------------------------

cdef inline double _wrap(double a) nogil:
    while a > M_PI:
        a -= 2.0 * M_PI
    while a <= -M_PI:
        a += 2.0 * M_PI
    return a


def rpr_batch(params, poses, platform_angles, double platform_radius):
    cdef double[:, ::1] q = np.ascontiguousarray(np.atleast_2d(poses), dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0], p
    cdef double r1 = float(params[0])
    cdef double bx[3]
    cdef double by[3]
    cdef double pa[3]
    cdef int i
    for i in range(3):
        bx[i] = r1 * cos(float(params[1 + i]))
        by[i] = r1 * sin(float(params[1 + i]))
        pa[i] = float(platform_angles[i])

    det_a = np.empty(n)
    qual_a = np.empty(n)
    rho_a = np.empty((n, 3))
    pas_a = np.empty((n, 6))
    ok_a = np.empty(n, dtype=np.uint8)
    cdef double[::1] det = det_a
    cdef double[::1] qual = qual_a
    cdef double[:, ::1] rho = rho_a
    cdef double[:, ::1] pas = pas_a
    cdef unsigned char[::1] ok = ok_a

    cdef double a[9]
    cdef double u[9]
    cdef double x, y, phi, rx, ry, ux, uy, ang
    cdef int good
    with nogil:
        for p in range(n):
            x = q[p, 0]
            y = q[p, 1]
            phi = q[p, 2]
            good = 1
            for i in range(3):
                ang = phi + pa[i]
                rx = platform_radius * cos(ang)
                ry = platform_radius * sin(ang)
                ux = x + rx - bx[i]
                uy = y + ry - by[i]
                rho[p, i] = sqrt(ux * ux + uy * uy)
                if not rho[p, i] > DEGENERATE_EPS:
                    good = 0
                a[3 * i] = ux
                a[3 * i + 1] = uy
                a[3 * i + 2] = (rx * uy - ry * ux) / platform_radius
                pas[p, i] = atan2(uy, ux)
                pas[p, 3 + i] = _wrap(pas[p, i] - phi)
            ok[p] = good
            det[p] = (a[0] * (a[4] * a[8] - a[5] * a[7])
                      - a[1] * (a[3] * a[8] - a[5] * a[6])
                      + a[2] * (a[3] * a[7] - a[4] * a[6]))
            if good:
                # kappa^-1(A^-1 B) == kappa^-1(B^-1 A): rows of A scaled by 1/rho
                for i in range(3):
                    u[3 * i] = a[3 * i] / rho[p, i]
                    u[3 * i + 1] = a[3 * i + 1] / rho[p, i]
                    u[3 * i + 2] = a[3 * i + 2] / rho[p, i]
                qual[p] = _icond3(u)
            else:
                qual[p] = 0.0
    return det_a, qual_a, rho_a, pas_a, ok_a


# -- reductions -----------------------------------------------------------------

def ordered_sum(values):
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(v.shape[0]):
        acc += v[i]
    return acc


def bracket_sweep(rho, rewards, lowers, double stroke, double rel_tol):
    cdef double[:, ::1] r = np.ascontiguousarray(rho, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(lowers, dtype=np.float64)
    cdef Py_ssize_t m = r.shape[0], legs = r.shape[1], k, i, l
    cdef double best = -INFINITY, e, lower, upper, tol, leg_lo, leg_hi
    cdef Py_ssize_t best_idx = -1
    leg_lo_a = np.empty(m)
    leg_hi_a = np.empty(m)
    cdef double[::1] llo = leg_lo_a
    cdef double[::1] lhi = leg_hi_a
    with nogil:
        for i in range(m):
            leg_lo = r[i, 0]
            leg_hi = r[i, 0]
            for l in range(1, legs):
                leg_lo = fmin(leg_lo, r[i, l])
                leg_hi = fmax(leg_hi, r[i, l])
            llo[i] = leg_lo
            lhi[i] = leg_hi
        for k in range(lo.shape[0]):
            lower = lo[k]
            upper = stroke * lower
            tol = rel_tol * upper
            e = 0.0
            for i in range(m):
                if llo[i] >= lower - tol and lhi[i] <= upper + tol:
                    e += w[i]
            if e > best:
                best = e
                best_idx = k
    return best, best_idx
