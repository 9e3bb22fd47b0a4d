"""Pure-Python scalar kernels for the hot per-tick math.

vinesim._speedups is a compiled twin of this module. Both are written as
the same sequence of floating-point operations so results are bit-identical
on a given libm; replay logs therefore do not depend on which backend was
active. Keep the two files in lockstep when editing formulas.

Conventions used throughout:
  - an arc is (kappa, phi, s): curvature 1/m, bending-plane angle rad in
    [-pi, pi), arc length m; kappa = 0 means straight with phi = 0
  - quaternions are (w, x, y, z), unit norm
  - the planar tip offset of an arc is (m*cos(phi), -m*sin(phi)) with
    m = (1 - cos(kappa*s))/kappa, evaluated as 2*sin^2(kappa*s/2)/kappa
    for accuracy near zero
"""

from math import acos, atan2, cos, pi, sin, sqrt

# argmax of (1 - cos t)/t on (0, pi), i.e. the root of tan(t/2) = t.
# The planar tip offset is injective in kappa only up to this bend angle;
# beyond it a second, larger curvature produces the same offset.
ARC_T_PEAK = 2.3311223704144224
# value of (1 - cos t)/t at the peak: max tip offset per unit arc length
ARC_REACH = 0.7246113537767085
# value of sin(t)/t at the peak: min forward tip extent per unit arc length
ARC_Z_MIN = 0.3108422633548356

COMPILED = False


def quat_to_arc(w, x, y, z, s):
    """Decompose a unit joystick quaternion into (kappa, phi) for length s."""
    u = 1.0 - 2.0 * (x * x + y * y)
    if u > 1.0:
        u = 1.0
    elif u < -1.0:
        u = -1.0
    t = acos(u)
    if t == 0.0:
        return 0.0, 0.0
    phi = atan2(x * w + y * z, x * z - y * w)
    if phi >= pi:
        phi = -pi
    return t / s, phi


def arc_to_quat(kappa, phi, s):
    """Inverse of quat_to_arc: the joystick quaternion for a bend (kappa, phi)."""
    h = 0.5 * kappa * s
    sh = sin(h)
    return cos(h), sh * sin(phi), -sh * cos(phi), 0.0


def arc_to_tip(kappa, phi, s):
    """Planar tip offset (x, y) of an arc relative to its base frame."""
    if kappa == 0.0:
        return 0.0, 0.0
    st = sin(0.5 * kappa * s)
    m = 2.0 * (st * st) / kappa
    return m * cos(phi), -m * sin(phi)


def tip_to_arc(x, y, s):
    """Arc (kappa, phi) whose tip offset is (x, y), for arc length s.

    Solves (1 - cos(kappa*s))/kappa = |tip| by bisection on the injective
    branch kappa*s in (0, ARC_T_PEAK]; returns the smallest curvature that
    reaches the offset. Raises ValueError when |tip| exceeds ARC_REACH*s.
    """
    r = sqrt(x * x + y * y)
    if r == 0.0:
        return 0.0, 0.0
    rho = r / s
    if rho > ARC_REACH * (1.0 + 1e-12):
        raise ValueError("tip offset outside reachable workspace")
    phi = atan2(-y, x)
    if phi >= pi:
        phi = -pi
    lo = 0.0
    hi = ARC_T_PEAK
    for _ in range(200):
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


def arc_t_for_z(z_ratio):
    """Bend angle t whose forward tip extent sin(t)/t equals z_ratio.

    Used to pin the tip onto a frontal obstacle: larger bends pull the tip
    back toward the base. Clamped to [0, ARC_T_PEAK]; sin(t)/t is strictly
    decreasing there, so bisection applies.
    """
    if z_ratio >= 1.0:
        return 0.0
    if z_ratio <= ARC_Z_MIN:
        return ARC_T_PEAK
    lo = 0.0
    hi = ARC_T_PEAK
    for _ in range(200):
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


def arc_pose_at(kappa, phi, ell):
    """Pose (px, py, pz, qw, qx, qy, qz) at arc length ell, in the arc's base frame."""
    if kappa == 0.0:
        return 0.0, 0.0, ell, 1.0, 0.0, 0.0, 0.0
    t = kappa * ell
    st = sin(0.5 * t)
    m = 2.0 * (st * st) / kappa
    cp = cos(phi)
    sp = sin(phi)
    h = 0.5 * t
    sh = sin(h)
    return m * cp, -m * sp, sin(t) / kappa, cos(h), sh * sp, sh * cp, 0.0


def quat_mul(aw, ax, ay, az, bw, bx, by, bz):
    """Hamilton product a*b."""
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_rot(qw, qx, qy, qz, vx, vy, vz):
    """Rotate vector v by unit quaternion q."""
    # t = 2 q_vec x v; v' = v + w t + q_vec x t
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    return (
        vx + qw * tx + qy * tz - qz * ty,
        vy + qw * ty + qz * tx - qx * tz,
        vz + qw * tz + qx * ty - qy * tx,
    )


def quat_rot_inv(qw, qx, qy, qz, vx, vy, vz):
    """Rotate vector v by the conjugate of unit quaternion q."""
    tx = 2.0 * (-qy * vz + qz * vy)
    ty = 2.0 * (-qz * vx + qx * vz)
    tz = 2.0 * (-qx * vy + qy * vx)
    return (
        vx + qw * tx - qy * tz + qz * ty,
        vy + qw * ty - qz * tx + qx * tz,
        vz + qw * tz - qx * ty + qy * tx,
    )


def superpose_tip(p1, p2, p3, psi1, psi2, psi3, c):
    """Planar tip displacement from three actuator pressures."""
    x = c * (p1 * cos(psi1) + p2 * cos(psi2) + p3 * cos(psi3))
    y = c * (p1 * sin(psi1) + p2 * sin(psi2) + p3 * sin(psi3))
    return x, y


def pressures_at(x, y, psi1, psi2, psi3, c, p3):
    """p1, p2 reproducing tip (x, y) for a given p3 (exact 2x2 solve)."""
    d21 = sin(psi2 - psi1)
    d12 = sin(psi1 - psi2)
    p1 = sin(psi3 - psi2) / d21 * p3 + (x * sin(psi2) - y * cos(psi2)) / (c * d21)
    p2 = sin(psi3 - psi1) / d12 * p3 + (x * sin(psi1) - y * cos(psi1)) / (c * d12)
    return p1, p2


def solve_pressures_bisect(x, y, psi1, psi2, psi3, c, max_iter):
    """Nonnegative pressures with min component ~0 reaching tip (x, y).

    Walks the one-dimensional solution family parameterized by p3 and
    bisects on the feasibility margin min(p1, p2, p3), which is monotone
    in p3 whenever the actuator angles span the circle (all three null
    components share a sign). Returns (p1, p2, p3, ok): ok is 0.0 when
    the layout's null direction has mixed signs and bisection does not
    apply (caller falls back to candidate enumeration).
    """
    d21 = sin(psi2 - psi1)
    d12 = sin(psi1 - psi2)
    b1 = (x * sin(psi2) - y * cos(psi2)) / (c * d21)
    b2 = (x * sin(psi1) - y * cos(psi1)) / (c * d12)
    n1 = sin(psi3 - psi2)
    n2 = sin(psi1 - psi3)
    n3 = d21
    r1 = n1 / n3
    r2 = n2 / n3
    if r1 <= 0.0 or r2 <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    a1 = -b1 / r1
    a2 = -b2 / r2
    lo = a1
    if a2 < lo:
        lo = a2
    if 0.0 < lo:
        lo = 0.0
    hi = a1
    if a2 > hi:
        hi = a2
    if 0.0 > hi:
        hi = 0.0
    lo = lo - 1.0
    hi = hi + 1.0
    for _ in range(max_iter):
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
    p3 = 0.5 * (lo + hi)
    p1 = b1 + p3 * r1
    p2 = b2 + p3 * r2
    if p1 < 0.0:
        p1 = 0.0
    if p2 < 0.0:
        p2 = 0.0
    if p3 < 0.0:
        p3 = 0.0
    return p1, p2, p3, 1.0
