"""Adaptive ODE integrators used by the density-matrix propagator.

Two interchangeable engines drive matrix-valued linear ODEs dY/dt = f(t, Y):

* ``rk45`` — an embedded Dormand–Prince 5(4) pair with PI step-size control,
  implemented directly on the matrix state. Steps are clipped to land exactly
  on every sample time, so sampled states carry no interpolation error.
* ``adams`` — variable-order Adams (SciPy's ZVODE wrapper), far cheaper per
  unit time for the larger systems; sampled states come from the solver's
  own dense output.

Both honor per-component error control with scale atol + rtol·|y|.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import ode as _scipy_ode


class IntegrationError(RuntimeError):
    """Adaptive integration failed (step-size underflow or solver abort)."""


#: Dormand–Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
#: Fifth-order weights (the FSAL row) and the embedded error weights b5 − b4.
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0


def _error_norm(diff, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((np.abs(diff) / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((np.abs(y0) / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate_rk45(rhs, y0, t0, sample_times, rtol, atol, on_sample):
    """Propagate dY/dt = rhs(t, Y) and call on_sample(t, Y) at each sample.

    The state may be any complex ndarray shape. Raises IntegrationError on
    step-size underflow.
    """
    y = np.array(y0, dtype=np.complex128, copy=True)
    t = float(t0)
    t_end = float(sample_times[-1])
    h_floor = max(1e-12, 1e-14 * max(abs(t_end), 1.0))

    f = rhs(t, y)
    h = _initial_step(rhs, t, y, f, rtol, atol)
    err_prev = 1.0
    k = [None] * 7
    sample_iter = iter(sample_times)
    next_sample = next(sample_iter)
    while next_sample <= t0:
        on_sample(next_sample, y)
        next_sample = next(sample_iter, None)
        if next_sample is None:
            return

    while True:
        h = min(h, next_sample - t)
        if h < h_floor:
            raise IntegrationError(
                f"step size underflow at t={t:.6g} (h={h:.3e}); "
                "the problem may be stiffer than the rk45 method supports"
            )
        k[0] = f
        for stage in range(1, 7):
            incr = sum(a * k[j] for j, a in enumerate(_DP_A[stage]) if a != 0.0)
            k[stage] = rhs(t + _DP_C[stage] * h, y + h * incr)
        y_new = y + h * sum(b * k[j] for j, b in enumerate(_DP_B) if b != 0.0)
        err_vec = h * sum(e * k[j] for j, e in enumerate(_DP_E) if e != 0.0)
        err = _error_norm(err_vec, y, y_new, rtol, atol)

        if err <= 1.0:
            t = t + h
            y = y_new
            f = k[6]  # FSAL: the last stage already evaluated rhs(t + h, y_new)
            factor = _SAFETY * err ** -_PI_ALPHA * err_prev ** _PI_BETA if err > 0 else _MAX_FACTOR
            err_prev = max(err, 1e-10)
            h = h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if t >= next_sample - 1e-14 * max(1.0, abs(next_sample)):
                changed = on_sample(next_sample, y)
                if changed is not None:
                    y = changed
                    f = rhs(t, y)
                next_sample = next(sample_iter, None)
                if next_sample is None:
                    return
        else:
            h = h * min(1.0, max(_MIN_FACTOR, _SAFETY * err ** -0.2))
            err_prev = 1.0


def integrate_adams(rhs, y0, t0, sample_times, rtol, atol, on_sample):
    """Variable-order Adams integration via ZVODE with dense sample output."""
    shape = np.shape(y0)

    def rhs_flat(t, y_flat):
        return rhs(t, y_flat.reshape(shape)).ravel()

    solver = _scipy_ode(rhs_flat)
    solver.set_integrator("zvode", method="adams", rtol=rtol, atol=atol,
                          nsteps=100_000_000)
    solver.set_initial_value(np.asarray(y0, dtype=np.complex128).ravel(), t0)
    for t_sample in sample_times:
        if t_sample <= t0:
            on_sample(t_sample, np.array(y0, dtype=np.complex128))
            continue
        y = solver.integrate(t_sample)
        if not solver.successful():
            raise IntegrationError(
                f"adams (zvode) solver failed while integrating to t={t_sample:.6g}"
            )
        on_sample(t_sample, y.reshape(shape))


INTEGRATORS = {"rk45": integrate_rk45, "adams": integrate_adams}
