"""Independent brute-force oracles used to freeze expected values.

Nothing here calls the closed forms under test: trajectories come from
fine-step velocity-Verlet integration of the piecewise-constant forces,
actions from trapezoid integration of the Lagrangian along those paths, and
sphere averages from Monte-Carlo sampling of uniform directions.
"""
from __future__ import annotations

import numpy as np

from nanoramsey.params import branch_force


def _force_of_time(params, seq, initial_spin):
    e1, e2, e3 = seq.effective_times()
    s = int(initial_spin)
    f1 = branch_force(params, s)
    f2 = branch_force(params, -s)

    def force(t):
        if t < e1 or t >= e2:
            return f1
        return f2

    return force, e3


def integrate_trajectory(params, seq, initial_spin, x0=0.0, p0=0.0, n_steps=200_000):
    """Velocity-Verlet integration; returns (t, x, v) arrays including endpoints.

    Steps are aligned so that the flip times fall exactly on grid points,
    which keeps the integration exact for piecewise-constant forces up to
    rounding (the force is constant inside every step).
    """
    force, t_end = _force_of_time(params, seq, initial_spin)
    e1, e2, _ = seq.effective_times()
    edges = [0.0, e1, e2, t_end]
    m = params.mass
    ts = [0.0]
    xs = [float(x0)]
    vs = [float(p0) / m]
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(round(n_steps * (b - a) / t_end)))
        dt = (b - a) / n
        f = force(0.5 * (a + b)) / m
        for k in range(n):
            t = a + k * dt
            x_new = xs[-1] + vs[-1] * dt + 0.5 * f * dt * dt
            v_new = vs[-1] + f * dt
            ts.append(t + dt)
            xs.append(x_new)
            vs.append(v_new)
    return np.asarray(ts), np.asarray(xs), np.asarray(vs)


def numeric_action(params, seq, initial_spin, x0=0.0, p0=0.0, n_steps=400_000):
    """Trapezoid integral of L = m v^2/2 + F x along the integrated path (J s).

    Integrated segment by segment so the force discontinuities at the flips
    never enter a trapezoid panel.
    """
    e1, e2, e3 = seq.effective_times()
    edges = [0.0, e1, e2, e3]
    s = int(initial_spin)
    m = params.mass
    ts, xs, vs = integrate_trajectory(params, seq, initial_spin, x0, p0, n_steps)
    # boundary slack well above time-grid rounding, well below the step size
    slack = 1e-9 * e3
    total = 0.0
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        f = branch_force(params, s if k != 1 else -s)
        sel = (ts >= a - slack) & (ts <= b + slack)
        lagr = 0.5 * m * vs[sel] ** 2 + f * xs[sel]
        total += float(np.trapezoid(lagr, ts[sel]))
    return total


def numeric_separation_integral(params, seq, n_steps=400_000):
    """Trapezoid integral of x_plus - x_minus over the flight (m s)."""
    tp, xp, _ = integrate_trajectory(params, seq, +1, n_steps=n_steps)
    tm, xm, _ = integrate_trajectory(params, seq, -1, n_steps=n_steps)
    assert np.allclose(tp, tm)
    return float(np.trapezoid(xp - xm, tp))


def mc_sphere_kick_average(k, delta_x, n_samples, seed):
    """Monte-Carlo estimate of 1 - <cos(k dx n_x)> over uniform sphere directions.

    Directions are drawn as normalized 3-d Gaussians; also returns the
    imaginary part <sin(k dx n_x)>, which must vanish by symmetry.
    """
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(n_samples, 3))
    n_x = vecs[:, 0] / np.linalg.norm(vecs, axis=1)
    phase = k * delta_x * n_x
    return 1.0 - float(np.mean(np.cos(phase))), float(np.mean(np.sin(phase)))
