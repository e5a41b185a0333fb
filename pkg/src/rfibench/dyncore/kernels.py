"""Compiled inner loops for the desk-scale task models.

Everything here works on plain float arrays so it can run under numba.
The policy-rate kernels (``*_period``) simulate one control period: the
velocity PID runs every ``n_fb`` physics steps and a fresh random
generalized force row is applied at every physics step.
"""

import numpy as np
from numba import njit

SHARPNESS = 1e3


@njit(cache=True)
def arm_angles(q, offset):
    n = q.shape[0]
    phi = np.empty(n)
    acc = offset
    for i in range(n):
        acc += q[i]
        phi[i] = acc
    return phi


@njit(cache=True)
def arm_points(q, lengths, offset):
    n = q.shape[0]
    phi = arm_angles(q, offset)
    pts = np.empty((n, 2))
    x = 0.0
    y = 0.0
    for i in range(n):
        x += lengths[i] * np.cos(phi[i])
        y += lengths[i] * np.sin(phi[i])
        pts[i, 0] = x
        pts[i, 1] = y
    return pts


@njit(cache=True)
def arm_point_jacobians(q, lengths, offset):
    """``J[i, :, k]`` = d(distal point of link i)/d(q_k)."""
    n = q.shape[0]
    phi = arm_angles(q, offset)
    jac = np.zeros((n, 2, n))
    for i in range(n):
        for j in range(i + 1):
            dx = -lengths[j] * np.sin(phi[j])
            dy = lengths[j] * np.cos(phi[j])
            for k in range(j + 1):
                jac[i, 0, k] += dx
                jac[i, 1, k] += dy
    return jac


@njit(cache=True)
def arm_mass_matrix(q, lengths, masses, armature, offset):
    n = q.shape[0]
    jac = arm_point_jacobians(q, lengths, offset)
    m = np.zeros((n, n))
    for i in range(n):
        for a in range(n):
            for b in range(n):
                m[a, b] += masses[i] * (jac[i, 0, a] * jac[i, 0, b] + jac[i, 1, a] * jac[i, 1, b])
    for a in range(n):
        m[a, a] += armature[a]
    return m


@njit(cache=True)
def arm_gravity(q, lengths, masses, gravity, offset):
    """Generalized gravity load dU/dq for gravity along -y."""
    n = q.shape[0]
    jac = arm_point_jacobians(q, lengths, offset)
    g = np.zeros(n)
    for i in range(n):
        for k in range(n):
            g[k] += masses[i] * gravity * jac[i, 1, k]
    return g


@njit(cache=True)
def arm_coriolis(q, v, lengths, masses, offset):
    n = q.shape[0]
    phi = arm_angles(q, offset)
    jac = arm_point_jacobians(q, lengths, offset)
    phid = np.empty(n)
    acc = 0.0
    for j in range(n):
        acc += v[j]
        phid[j] = acc
    c = np.zeros(n)
    ax = 0.0
    ay = 0.0
    for i in range(n):
        w2 = phid[i] * phid[i]
        ax -= lengths[i] * w2 * np.cos(phi[i])
        ay -= lengths[i] * w2 * np.sin(phi[i])
        for k in range(n):
            c[k] += masses[i] * (jac[i, 0, k] * ax + jac[i, 1, k] * ay)
    return c


@njit(cache=True)
def dissipation(v, damping, dry, sharpness):
    """Viscous plus smoothed dry friction force and its secant coefficient."""
    n = v.shape[0]
    force = np.empty(n)
    coeff = np.empty(n)
    for i in range(n):
        x = sharpness * v[i]
        f = damping[i] * v[i] + dry[i] * np.tanh(x)
        force[i] = f
        if abs(x) < 1e-9:
            coeff[i] = damping[i] + dry[i] * sharpness
        else:
            coeff[i] = f / v[i]
    return force, coeff


@njit(cache=True)
def implicit_accel(m, rhs, coeff, dt):
    """Acceleration with the dissipative terms taken linearly-implicitly."""
    a = m.copy()
    for i in range(m.shape[0]):
        a[i, i] += dt * coeff[i]
    return np.linalg.solve(a, rhs)


@njit(cache=True)
def pid_torque(err, integ, prev, first, gains, fb_dt, tau_limit):
    """Velocity PID; updates ``integ``/``prev``/``first`` in place."""
    n = err.shape[0]
    tau = np.empty(n)
    for j in range(n):
        if first[j]:
            prev[j] = err[j]
            first[j] = False
        integ[j] += err[j] * fb_dt
        ki = gains[j, 1]
        if ki > 0.0:
            lim = tau_limit[j] / ki
            if integ[j] > lim:
                integ[j] = lim
            elif integ[j] < -lim:
                integ[j] = -lim
        deriv = (err[j] - prev[j]) / fb_dt
        prev[j] = err[j]
        tau[j] = gains[j, 0] * err[j] + ki * integ[j] + gains[j, 2] * deriv
    return tau


@njit(cache=True)
def shape_torque(tau, tau_limit, deadband):
    n = tau.shape[0]
    out = np.empty(n)
    for j in range(n):
        t = tau[j]
        if t > tau_limit[j]:
            t = tau_limit[j]
        elif t < -tau_limit[j]:
            t = -tau_limit[j]
        if deadband > 0.0:
            if abs(t) <= deadband:
                t = 0.0
            elif t > 0.0:
                t -= deadband
            else:
                t += deadband
        out[j] = t
    return out


@njit(cache=True)
def clamp_limits(q, v, q_lo, q_hi):
    hit = False
    for j in range(q.shape[0]):
        if q[j] <= q_lo[j]:
            q[j] = q_lo[j]
            v[j] = 0.0
            hit = True
        elif q[j] >= q_hi[j]:
            q[j] = q_hi[j]
            v[j] = 0.0
            hit = True
    return hit


@njit(cache=True)
def first_nonfinite(x):
    for i in range(x.shape[0]):
        if not np.isfinite(x[i]):
            return i
    return -1


@njit(cache=True)
def puck_step(pos, vel, yaw, omega, force, torque, mass, radius, mu, g_t, normal_acc, dt):
    """Coulomb sliding of a disc on a plane, semi-implicit.

    Returns new ``(pos, vel, yaw, omega)``. A resting disc stays at rest while
    the tangential load is inside the friction cone; a sliding disc that would
    pass through zero velocity within the step sticks instead.
    """
    normal = mass * normal_acc
    if normal < 0.0:
        normal = 0.0
    fmax = mu * normal
    fx = force[0] + mass * g_t[0]
    fy = force[1] + mass * g_t[1]
    speed = np.sqrt(vel[0] * vel[0] + vel[1] * vel[1])
    new_vel = np.zeros(2)
    if speed == 0.0:
        fmag = np.sqrt(fx * fx + fy * fy)
        if fmag > fmax:
            scale = (fmag - fmax) / fmag
            new_vel[0] = fx * scale / mass * dt
            new_vel[1] = fy * scale / mass * dt
    else:
        ax = (fx - fmax * vel[0] / speed) / mass
        ay = (fy - fmax * vel[1] / speed) / mass
        nx = vel[0] + ax * dt
        ny = vel[1] + ay * dt
        if nx * vel[0] + ny * vel[1] > 0.0:
            new_vel[0] = nx
            new_vel[1] = ny
    inertia = 0.5 * mass * radius * radius
    tmax = fmax * 2.0 * radius / 3.0
    new_omega = 0.0
    if omega == 0.0:
        if abs(torque) > tmax:
            new_omega = (torque - np.sign(torque) * tmax) / inertia * dt
    else:
        w = omega + (torque - np.sign(omega) * tmax) / inertia * dt
        if w * omega > 0.0:
            new_omega = w
    new_pos = np.empty(2)
    new_pos[0] = pos[0] + new_vel[0] * dt
    new_pos[1] = pos[1] + new_vel[1] * dt
    return new_pos, new_vel, yaw + new_omega * dt, new_omega


@njit(cache=True)
def disc_contact(p_a, v_a, r_a, p_b, v_b, r_b, stiffness, damping):
    """Penalty normal force pushing disc b away from disc a (zero if apart)."""
    dx = p_b[0] - p_a[0]
    dy = p_b[1] - p_a[1]
    dist = np.sqrt(dx * dx + dy * dy)
    f = np.zeros(2)
    pen = r_a + r_b - dist
    if pen <= 0.0 or dist < 1e-12:
        return f
    nx = dx / dist
    ny = dy / dist
    vn = (v_b[0] - v_a[0]) * nx + (v_b[1] - v_a[1]) * ny
    mag = stiffness * pen - damping * vn
    if mag < 0.0:
        mag = 0.0
    f[0] = mag * nx
    f[1] = mag * ny
    return f


@njit(cache=True)
def arm_period(
    q, v, target, integ, prev, first,
    lengths, masses, armature, damping, dry, gains, gravity, comp_masses,
    tau_limit, q_lo, q_hi, rfi, n_fb, dt, deadband, offset,
):
    """One control period of a planar arm (gravity along -y if non-zero)."""
    n = q.shape[0]
    q = q.copy()
    v = v.copy()
    hit = False
    tau = np.zeros(n)
    fb_dt = n_fb * dt
    bad = -1
    for s in range(rfi.shape[0]):
        if s % n_fb == 0:
            err = target - v
            tau = pid_torque(err, integ, prev, first, gains, fb_dt, tau_limit)
            if gravity != 0.0:
                tau += arm_gravity(q, lengths, comp_masses, gravity, offset)
            tau = shape_torque(tau, tau_limit, deadband)
        m = arm_mass_matrix(q, lengths, masses, armature, offset)
        c = arm_coriolis(q, v, lengths, masses, offset)
        if gravity != 0.0:
            c += arm_gravity(q, lengths, masses, gravity, offset)
        fd, coeff = dissipation(v, damping, dry, SHARPNESS)
        rhs = tau + rfi[s] - c - fd
        acc = implicit_accel(m, rhs, coeff, dt)
        v = v + acc * dt
        q = q + v * dt
        if clamp_limits(q, v, q_lo, q_hi):
            hit = True
        bad = first_nonfinite(v)
        if bad < 0:
            bad = first_nonfinite(q)
        if bad >= 0:
            break
    return q, v, hit, bad


@njit(cache=True)
def push_period(
    q, v, puck, target, integ, prev, first,
    lengths, masses, armature, damping, dry, gains,
    tau_limit, q_lo, q_hi, rfi, n_fb, dt, deadband, offset,
    tip_radius, puck_mass, puck_radius, mu, gravity, stiffness, contact_damping, drag,
):
    """One control period of a horizontal arm pushing a disc.

    ``puck`` holds ``(x, y, yaw, vx, vy, omega)``; ``rfi`` has one column per
    arm joint followed by the three puck DoFs.
    """
    n = q.shape[0]
    q = q.copy()
    v = v.copy()
    ppos = puck[0:2].copy()
    pvel = puck[3:5].copy()
    yaw = puck[2]
    omega = puck[5]
    hit = False
    tau = np.zeros(n)
    fb_dt = n_fb * dt
    zero2 = np.zeros(2)
    bad = -1
    for s in range(rfi.shape[0]):
        if s % n_fb == 0:
            err = target - v
            tau = pid_torque(err, integ, prev, first, gains, fb_dt, tau_limit)
            tau = shape_torque(tau, tau_limit, deadband)
        pts = arm_points(q, lengths, offset)
        jac = arm_point_jacobians(q, lengths, offset)
        p_ee = pts[n - 1]
        v_ee = np.zeros(2)
        for k in range(n):
            v_ee[0] += jac[n - 1, 0, k] * v[k]
            v_ee[1] += jac[n - 1, 1, k] * v[k]
        f = disc_contact(p_ee, v_ee, tip_radius, ppos, pvel, puck_radius, stiffness, contact_damping)
        m = arm_mass_matrix(q, lengths, masses, armature, offset)
        c = arm_coriolis(q, v, lengths, masses, offset)
        fd, coeff = dissipation(v, damping, dry, SHARPNESS)
        rhs = tau - c - fd
        for k in range(n):
            rhs[k] += rfi[s, k] - (jac[n - 1, 0, k] * f[0] + jac[n - 1, 1, k] * f[1])
        acc = implicit_accel(m, rhs, coeff, dt)
        v = v + acc * dt
        q = q + v * dt
        if clamp_limits(q, v, q_lo, q_hi):
            hit = True
        force = np.empty(2)
        force[0] = f[0] + rfi[s, n] - drag * pvel[0]
        force[1] = f[1] + rfi[s, n + 1] - drag * pvel[1]
        ppos, pvel, yaw, omega = puck_step(
            ppos, pvel, yaw, omega, force, rfi[s, n + 2],
            puck_mass, puck_radius, mu, zero2, gravity, dt,
        )
        bad = first_nonfinite(v)
        if bad < 0:
            bad = first_nonfinite(q)
        if bad < 0 and not (np.isfinite(ppos[0]) and np.isfinite(ppos[1]) and np.isfinite(yaw)):
            bad = n
        if bad >= 0:
            break
    out = np.empty(6)
    out[0] = ppos[0]
    out[1] = ppos[1]
    out[2] = yaw
    out[3] = pvel[0]
    out[4] = pvel[1]
    out[5] = omega
    return q, v, out, hit, bad


@njit(cache=True)
def plate_gravity(q, gravity):
    """Tangential gravity (plate frame) and normal acceleration on the plate."""
    ca = np.cos(q[0])
    sa = np.sin(q[0])
    cb = np.cos(q[1])
    sb = np.sin(q[1])
    g_t = np.empty(2)
    g_t[0] = gravity * sb * ca
    g_t[1] = -gravity * sa
    return g_t, gravity * ca * cb


@njit(cache=True)
def plate_inertia(masses, lengths, armature):
    n = masses.shape[0]
    m = np.zeros((n, n))
    for j in range(n):
        m[j, j] = masses[j] * lengths[j] * lengths[j] + armature[j]
    return m


@njit(cache=True)
def slide_period(
    q, v, puck, target, integ, prev, first,
    lengths, masses, armature, damping, dry, gains,
    tau_limit, q_lo, q_hi, rfi, n_fb, dt, deadband,
    puck_mass, puck_radius, mu, gravity, drag,
):
    """One control period of the two-joint tilting plate carrying a disc."""
    n = q.shape[0]
    q = q.copy()
    v = v.copy()
    ppos = puck[0:2].copy()
    pvel = puck[3:5].copy()
    yaw = puck[2]
    omega = puck[5]
    hit = False
    tau = np.zeros(n)
    fb_dt = n_fb * dt
    m = plate_inertia(masses, lengths, armature)
    bad = -1
    for s in range(rfi.shape[0]):
        if s % n_fb == 0:
            err = target - v
            tau = pid_torque(err, integ, prev, first, gains, fb_dt, tau_limit)
            tau = shape_torque(tau, tau_limit, deadband)
        fd, coeff = dissipation(v, damping, dry, SHARPNESS)
        rhs = tau - fd
        for k in range(n):
            rhs[k] += rfi[s, k]
        acc = implicit_accel(m, rhs, coeff, dt)
        v = v + acc * dt
        q = q + v * dt
        if clamp_limits(q, v, q_lo, q_hi):
            hit = True
        g_t, g_n = plate_gravity(q, gravity)
        force = np.empty(2)
        force[0] = rfi[s, n] - drag * pvel[0]
        force[1] = rfi[s, n + 1] - drag * pvel[1]
        ppos, pvel, yaw, omega = puck_step(
            ppos, pvel, yaw, omega, force, rfi[s, n + 2],
            puck_mass, puck_radius, mu, g_t, g_n, dt,
        )
        bad = first_nonfinite(v)
        if bad < 0:
            bad = first_nonfinite(q)
        if bad < 0 and not (np.isfinite(ppos[0]) and np.isfinite(ppos[1]) and np.isfinite(yaw)):
            bad = n
        if bad >= 0:
            break
    out = np.empty(6)
    out[0] = ppos[0]
    out[1] = ppos[1]
    out[2] = yaw
    out[3] = pvel[0]
    out[4] = pvel[1]
    out[5] = omega
    return q, v, out, hit, bad
