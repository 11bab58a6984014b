"""Independent reference computations used only by the tests.

Each oracle avoids the package code path it checks: it goes through scipy's
general-purpose integrators instead of the package's quadrature and closed
forms.
"""
import numpy as np
from scipy.integrate import quad, solve_ivp


def amplitude_ode(traj, omegas, g, m, n, rtol=1e-12, atol=1e-14):
    """eps Q1_mn(T) and its derivative from the order-split amplitude equation.

    With the comoving coordinate ``q = x - x1`` and ``eps dy/dt = -dx1/dt``,
    the first-order amplitude obeys

        (eps Q1)'' + w_n^2 (eps Q1) = 2 w_n g_mn (2 i w_m x1' - x1'') e^{-i w_m t}

    starting from rest. Real and imaginary parts are integrated with RK45/DOP853.
    """
    wm, wn, gmn = omegas[m - 1], omegas[n - 1], g[m - 1, n - 1]
    T = traj.duration

    def rhs(t, y):
        q = y[0] + 1j * y[1]
        v1 = float(traj.velocity(1, t))
        a1 = float(traj.acceleration(1, t))
        force = 2.0 * wn * gmn * (2j * wm * v1 - a1) * np.exp(-1j * wm * t)
        acc = force - wn * wn * q
        return [y[2], y[3], acc.real, acc.imag]

    sol = solve_ivp(rhs, (0.0, T), [0.0, 0.0, 0.0, 0.0], method="DOP853", rtol=rtol, atol=atol)
    y = sol.y[:, -1]
    return y[0] + 1j * y[1], y[2] + 1j * y[3]


def amplitude_system(traj, omegas, g, m, rtol=1e-11, atol=1e-13):
    """Row m of Q(T) and dQ/dt(T) from the full truncated amplitude system.

    No order splitting: with the comoving coordinate ``q = x - x1`` the
    amplitudes obey

        Q_mn'' + w_n^2 Q_mn = 2 w_n sum_p (2 q' Q_mp' + q'' Q_mp) g_pn,  q' = -x1'

    from Q_mn(0) = delta_mn, Q_mn'(0) = -i w_m delta_mn.
    """
    N = len(omegas)
    w = np.asarray(omegas, dtype=float)
    T = traj.duration

    def rhs(t, y):
        z = np.ascontiguousarray(y).view(complex)
        q, qd = z[:N], z[N:]
        v1 = float(traj.velocity(1, t))
        a1 = float(traj.acceleration(1, t))
        acc = 2.0 * w * ((-2.0 * v1 * qd - a1 * q) @ g) - w * w * q
        return np.concatenate([qd, acc]).view(float)

    z0 = np.zeros(2 * N, dtype=complex)
    z0[m - 1] = 1.0
    z0[N + m - 1] = -1j * w[m - 1]
    sol = solve_ivp(rhs, (0.0, T), z0.view(float), method="DOP853", rtol=rtol, atol=atol)
    z = sol.y[:, -1].copy().view(complex)
    return z[:N], z[N:]


def dyson_entry(traj, omegas, coupling, m, n, sign, wall):
    """One first-order integral ``coupling_mn int e^{-i (w_m -/+ w_n) t} x_j'(t) dt`` by adaptive quad."""
    w = omegas[m - 1] - sign * omegas[n - 1]
    T = traj.duration
    limit = int(max(200, 4 * abs(w) * T))
    re = quad(lambda t: np.cos(w * t) * float(traj.velocity(wall, t)), 0.0, T, limit=limit, epsabs=1e-14, epsrel=1e-12)[0]
    im = quad(lambda t: -np.sin(w * t) * float(traj.velocity(wall, t)), 0.0, T, limit=limit, epsabs=1e-14, epsrel=1e-12)[0]
    return coupling[m - 1, n - 1] * (re + 1j * im)


def kg_coupling(x1, x2, m, n, wall, kind):
    """Wall-displacement coupling by direct integration of analytic mode derivatives.

    Modes are ``sin(w (x2 - x)) / sqrt(m pi)`` with ``w = m pi / (x2 - x1)``.
    ``kind`` 'a' gives (d phi_m / d x_j, phi_n), 'b' gives -(d phi_m / d x_j, phi_n^*);
    the time dependence ``e^{-i w t}`` is applied analytically at t = 0.
    """
    L = x2 - x1
    wm, wn = m * np.pi / L, n * np.pi / L
    Nm, Nn = 1 / np.sqrt(m * np.pi), 1 / np.sqrt(n * np.pi)

    # d/dx_j of N_m e^{-i w t} sin(w (x2 - x)) at t = 0, and of its time derivative
    def dw(j):
        return wm / L if j == 1 else -wm / L

    def d_phi(x, j):
        # N_m does not depend on L; only the argument w_m (x2 - x) moves with the walls
        darg = dw(j) * (x2 - x) + (wm if j == 2 else 0.0)
        val = Nm * np.cos(wm * (x2 - x)) * darg
        # d/dx_j of e^{-i w t} is -i t dw e^{-i w t}, whose t-derivative at 0 is -i dw
        dval_t = -1j * wm * val - 1j * dw(j) * Nm * np.sin(wm * (x2 - x))
        return val, dval_t

    def phi_n(x, conj):
        val = Nn * np.sin(wn * (x2 - x))
        dt = (1j if conj else -1j) * wn * val
        return val, dt

    def integrand(x, part):
        f, ft = d_phi(x, wall)
        gv, gt = phi_n(x, kind == "b")
        # (f, g) = -i int (f dt g* - g* dt f)
        val = -1j * (f * np.conj(gt) - np.conj(gv) * ft)
        return val.real if part == 0 else val.imag

    re = quad(integrand, x1, x2, args=(0,), limit=400, epsabs=1e-13)[0]
    im = quad(integrand, x1, x2, args=(1,), limit=400, epsabs=1e-13)[0]
    val = re + 1j * im
    return val if kind == "a" else -val
