# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of vinesim._kernels_py.

Every function mirrors the pure-Python implementation operation for
operation (same formulas, same evaluation order, no fast-math, no FP
contraction) so both backends produce bit-identical doubles. Edit the two
files together; tests/test_parity.py enforces exact agreement.
"""

from libc.math cimport acos, atan2, cos, sin, sqrt

cdef double PI = 3.141592653589793
cdef double _ARC_T_PEAK = 2.3311223704144224
cdef double _ARC_REACH = 0.7246113537767085
cdef double _ARC_Z_MIN = 0.3108422633548356

ARC_T_PEAK = _ARC_T_PEAK
ARC_REACH = _ARC_REACH
ARC_Z_MIN = _ARC_Z_MIN

COMPILED = True


def quat_to_arc(double w, double x, double y, double z, double s):
    cdef double u = 1.0 - 2.0 * (x * x + y * y)
    if u > 1.0:
        u = 1.0
    elif u < -1.0:
        u = -1.0
    cdef double t = acos(u)
    if t == 0.0:
        return 0.0, 0.0
    cdef double phi = atan2(x * w + y * z, x * z - y * w)
    if phi >= PI:
        phi = -PI
    return t / s, phi


def arc_to_quat(double kappa, double phi, double s):
    cdef double h = 0.5 * kappa * s
    cdef double sh = sin(h)
    return cos(h), sh * sin(phi), -sh * cos(phi), 0.0


def arc_to_tip(double kappa, double phi, double s):
    if kappa == 0.0:
        return 0.0, 0.0
    cdef double st = sin(0.5 * kappa * s)
    cdef double m = 2.0 * (st * st) / kappa
    return m * cos(phi), -m * sin(phi)


def tip_to_arc(double x, double y, double s):
    cdef double r = sqrt(x * x + y * y)
    if r == 0.0:
        return 0.0, 0.0
    cdef double rho = r / s
    if rho > _ARC_REACH * (1.0 + 1e-12):
        raise ValueError("tip offset outside reachable workspace")
    cdef double phi = atan2(-y, x)
    if phi >= PI:
        phi = -PI
    cdef double lo = 0.0
    cdef double hi = _ARC_T_PEAK
    cdef double mid, st, g
    cdef int i
    for i in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        st = sin(0.5 * mid)
        g = 2.0 * (st * st) / mid
        if g < rho:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return 0.5 * (lo + hi) / s, phi


def arc_t_for_z(double z_ratio):
    if z_ratio >= 1.0:
        return 0.0
    if z_ratio <= _ARC_Z_MIN:
        return _ARC_T_PEAK
    cdef double lo = 0.0
    cdef double hi = _ARC_T_PEAK
    cdef double mid
    cdef int i
    for i in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sin(mid) / mid > z_ratio:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return 0.5 * (lo + hi)


def arc_pose_at(double kappa, double phi, double ell):
    if kappa == 0.0:
        return 0.0, 0.0, ell, 1.0, 0.0, 0.0, 0.0
    cdef double t = kappa * ell
    cdef double st = sin(0.5 * t)
    cdef double m = 2.0 * (st * st) / kappa
    cdef double cp = cos(phi)
    cdef double sp = sin(phi)
    cdef double h = 0.5 * t
    cdef double sh = sin(h)
    return m * cp, -m * sp, sin(t) / kappa, cos(h), sh * sp, sh * cp, 0.0


def quat_mul(double aw, double ax, double ay, double az,
             double bw, double bx, double by, double bz):
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_rot(double qw, double qx, double qy, double qz,
             double vx, double vy, double vz):
    cdef double tx = 2.0 * (qy * vz - qz * vy)
    cdef double ty = 2.0 * (qz * vx - qx * vz)
    cdef double tz = 2.0 * (qx * vy - qy * vx)
    return (
        vx + qw * tx + qy * tz - qz * ty,
        vy + qw * ty + qz * tx - qx * tz,
        vz + qw * tz + qx * ty - qy * tx,
    )


def quat_rot_inv(double qw, double qx, double qy, double qz,
                 double vx, double vy, double vz):
    cdef double tx = 2.0 * (-qy * vz + qz * vy)
    cdef double ty = 2.0 * (-qz * vx + qx * vz)
    cdef double tz = 2.0 * (-qx * vy + qy * vx)
    return (
        vx + qw * tx - qy * tz + qz * ty,
        vy + qw * ty - qz * tx + qx * tz,
        vz + qw * tz - qx * ty + qy * tx,
    )


def superpose_tip(double p1, double p2, double p3,
                  double psi1, double psi2, double psi3, double c):
    cdef double x = c * (p1 * cos(psi1) + p2 * cos(psi2) + p3 * cos(psi3))
    cdef double y = c * (p1 * sin(psi1) + p2 * sin(psi2) + p3 * sin(psi3))
    return x, y


def pressures_at(double x, double y, double psi1, double psi2, double psi3,
                 double c, double p3):
    cdef double d21 = sin(psi2 - psi1)
    cdef double d12 = sin(psi1 - psi2)
    cdef double p1 = sin(psi3 - psi2) / d21 * p3 + (x * sin(psi2) - y * cos(psi2)) / (c * d21)
    cdef double p2 = sin(psi3 - psi1) / d12 * p3 + (x * sin(psi1) - y * cos(psi1)) / (c * d12)
    return p1, p2


def solve_pressures_bisect(double x, double y, double psi1, double psi2,
                           double psi3, double c, int max_iter):
    cdef double d21 = sin(psi2 - psi1)
    cdef double d12 = sin(psi1 - psi2)
    cdef double b1 = (x * sin(psi2) - y * cos(psi2)) / (c * d21)
    cdef double b2 = (x * sin(psi1) - y * cos(psi1)) / (c * d12)
    cdef double n1 = sin(psi3 - psi2)
    cdef double n2 = sin(psi1 - psi3)
    cdef double n3 = d21
    cdef double r1 = n1 / n3
    cdef double r2 = n2 / n3
    if r1 <= 0.0 or r2 <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    cdef double a1 = -b1 / r1
    cdef double a2 = -b2 / r2
    cdef double lo = a1
    if a2 < lo:
        lo = a2
    if 0.0 < lo:
        lo = 0.0
    cdef double hi = a1
    if a2 > hi:
        hi = a2
    if 0.0 > hi:
        hi = 0.0
    lo = lo - 1.0
    hi = hi + 1.0
    cdef double mid, q1, q2, fm
    cdef int i
    for i in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        q1 = b1 + mid * r1
        q2 = b2 + mid * r2
        fm = q1
        if q2 < fm:
            fm = q2
        if mid < fm:
            fm = mid
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12:
            break
    cdef double p3 = 0.5 * (lo + hi)
    cdef double p1 = b1 + p3 * r1
    cdef double p2 = b2 + p3 * r2
    if p1 < 0.0:
        p1 = 0.0
    if p2 < 0.0:
        p2 = 0.0
    if p3 < 0.0:
        p3 = 0.0
    return p1, p2, p3, 1.0
