"""Hot simulation kernels, written once for both backends.

Every function here is wrapped by :data:`hybridavg._backend.jit`, which is
``numba.njit(cache=True, nogil=True)`` on the numba backend and a no-op on the
pure numpy backend.  The code therefore has to stay inside the subset of
Python that numba compiles: scalar math, fixed-dtype numpy arrays, no Python
objects.  Both backends execute the exact same statements in the same order,
so results agree bitwise.

Contents:

* a Philox4x32-10 counter-based RNG (keyed streams, no overflow outside
  64-bit lanes, hence warning-free on plain numpy scalars);
* Dormand-Prince 5(4) and classic RK4 steppers for the joint
  (state, cumulative hazard) pair;
* the hybrid path kernel: ODE flow with jump times found by inverting the
  cumulative hazard at Exp(1) thresholds, localized by bisection in time;
* the birth-death SSA kernel for the averaged chain.

Kernels never allocate output arrays.  Callers run a counting pass
(``record=0``), size the buffers, then a recording pass (``record=1``); both
passes consume the identical random stream, so the recorded path equals the
counted one.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import jit

# kernel status codes
OK = 0
GROW_TABLE = 1
NONFINITE = 2
MAX_STEPS_EXCEEDED = 3
BUFFER_OVERFLOW = 4
BAD_RATES = 5

# built-in rate-family codes
KIND_MONOD = 0
KIND_CONST_MU = 1

# adaptive / fixed stepper codes
METHOD_RK45 = 0
METHOD_RK4 = 1

# Philox4x32-10 multipliers and Weyl key increments; all RNG constants are
# np.uint64 so that ops stay in uint64 lanes on both backends.
_M32 = np.uint64(0xFFFFFFFF)
_PH_M0 = np.uint64(0xD2511F53)
_PH_M1 = np.uint64(0xCD9E8D57)
_PH_W0 = np.uint64(0x9E3779B9)
_PH_W1 = np.uint64(0xBB67AE85)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_INV_2_53 = 2.0 ** -53


@jit
def rng_new(seed):
    """Fresh RNG state for one stream: 64-bit block counter + 64-bit key."""
    st = np.zeros(8, dtype=np.uint64)
    st[4] = seed & _M32
    st[5] = (seed >> _S32) & _M32
    return st


@jit
def _philox_block(st):
    c0 = st[0]
    c1 = st[1]
    c2 = st[2]
    c3 = st[3]
    k0 = st[4]
    k1 = st[5]
    for _ in range(10):
        p0 = c0 * _PH_M0
        p1 = c2 * _PH_M1
        hi0 = p0 >> _S32
        lo0 = p0 & _M32
        hi1 = p1 >> _S32
        lo1 = p1 & _M32
        c0 = (hi1 ^ c1 ^ k0) & _M32
        c1 = lo1
        c2 = (hi0 ^ c3 ^ k1) & _M32
        c3 = lo0
        k0 = (k0 + _PH_W0) & _M32
        k1 = (k1 + _PH_W1) & _M32
    # bump the 128-bit counter (64 bits used; words 2,3 stay zero)
    nc = (st[0] + _U1) & _M32
    st[0] = nc
    if nc == _U0:
        st[1] = (st[1] + _U1) & _M32
    return c0, c1, c2, c3


@jit
def _rng_next64(st):
    if st[7] != _U0:
        st[7] = _U0
        return st[6]
    o0, o1, o2, o3 = _philox_block(st)
    st[6] = o2 | (o3 << _S32)
    st[7] = _U1
    return o0 | (o1 << _S32)


@jit
def rng_uniform(st):
    """Uniform double in (0, 1] from 53 random bits."""
    bits = _rng_next64(st)
    return ((bits >> _S11) + _U1) * _INV_2_53


@jit
def rng_exponential(st):
    """Standard Exp(1) variate."""
    return -math.log(rng_uniform(st))


# --- built-in rate family -------------------------------------------------
#
# Parameter vector P (float64[8]): inflow concentration, dilution rate,
# volume, prey-side conversion, predator-side conversion, predator death
# ratio, consumption plateau, consumption half-saturation.


@jit
def mu_value(kind, P, x):
    if kind == KIND_CONST_MU:
        return P[6]
    if x <= 0.0:
        return 0.0
    return P[6] * x / (P[7] + x)


@jit
def drift_value(kind, P, x, nf):
    return P[1] * (P[0] - x) - (P[3] / P[2]) * mu_value(kind, P, x) * nf


@jit
def birth_value(kind, P, x, nf):
    return P[4] * mu_value(kind, P, x) * nf


@jit
def death_value(kind, P, x, nf):
    return P[5] * P[1] * nf


@jit
def _pair_rhs(kind, P, nf, inv_eps, x):
    """Time derivatives of (x, cumulative hazard) for frozen jump count."""
    m = mu_value(kind, P, x)
    fx = (P[1] * (P[0] - x) - (P[3] / P[2]) * m * nf) * inv_eps
    fl = P[4] * m * nf + P[5] * P[1] * nf
    return fx, fl


@jit
def _pair_step(kind, P, nf, inv_eps, x, lam, h, method, rtol, atol):
    """One explicit step of size h on (x, hazard).

    Returns (x1, lam1, errnorm); errnorm is the scaled embedded-pair error
    for the adaptive method and 0 for fixed RK4.  The hazard derivative only
    depends on x, so stages share the x evaluations.
    """
    k1x, k1l = _pair_rhs(kind, P, nf, inv_eps, x)
    if method == METHOD_RK4:
        k2x, k2l = _pair_rhs(kind, P, nf, inv_eps, x + 0.5 * h * k1x)
        k3x, k3l = _pair_rhs(kind, P, nf, inv_eps, x + 0.5 * h * k2x)
        k4x, k4l = _pair_rhs(kind, P, nf, inv_eps, x + h * k3x)
        x1 = x + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        lam1 = lam + h * (k1l + 2.0 * k2l + 2.0 * k3l + k4l) / 6.0
        return x1, lam1, 0.0

    # Dormand-Prince 5(4)
    k2x, k2l = _pair_rhs(kind, P, nf, inv_eps, x + h * (0.2 * k1x))
    k3x, k3l = _pair_rhs(kind, P, nf, inv_eps, x + h * (3.0 / 40.0 * k1x + 9.0 / 40.0 * k2x))
    k4x, k4l = _pair_rhs(
        kind, P, nf, inv_eps,
        x + h * (44.0 / 45.0 * k1x - 56.0 / 15.0 * k2x + 32.0 / 9.0 * k3x),
    )
    k5x, k5l = _pair_rhs(
        kind, P, nf, inv_eps,
        x + h * (19372.0 / 6561.0 * k1x - 25360.0 / 2187.0 * k2x
                 + 64448.0 / 6561.0 * k3x - 212.0 / 729.0 * k4x),
    )
    k6x, k6l = _pair_rhs(
        kind, P, nf, inv_eps,
        x + h * (9017.0 / 3168.0 * k1x - 355.0 / 33.0 * k2x + 46732.0 / 5247.0 * k3x
                 + 49.0 / 176.0 * k4x - 5103.0 / 18656.0 * k5x),
    )
    x1 = x + h * (35.0 / 384.0 * k1x + 500.0 / 1113.0 * k3x + 125.0 / 192.0 * k4x
                  - 2187.0 / 6784.0 * k5x + 11.0 / 84.0 * k6x)
    lam1 = lam + h * (35.0 / 384.0 * k1l + 500.0 / 1113.0 * k3l + 125.0 / 192.0 * k4l
                      - 2187.0 / 6784.0 * k5l + 11.0 / 84.0 * k6l)
    k7x, k7l = _pair_rhs(kind, P, nf, inv_eps, x1)

    ex = h * (71.0 / 57600.0 * k1x - 71.0 / 16695.0 * k3x + 71.0 / 1920.0 * k4x
              - 17253.0 / 339200.0 * k5x + 22.0 / 525.0 * k6x - 1.0 / 40.0 * k7x)
    el = h * (71.0 / 57600.0 * k1l - 71.0 / 16695.0 * k3l + 71.0 / 1920.0 * k4l
              - 17253.0 / 339200.0 * k5l + 22.0 / 525.0 * k6l - 1.0 / 40.0 * k7l)
    scx = atol + rtol * max(abs(x), abs(x1))
    scl = atol + rtol * max(abs(lam), abs(lam1))
    errnorm = math.sqrt(0.5 * ((ex / scx) ** 2 + (el / scl) ** 2))
    return x1, lam1, errnorm


@jit
def hybrid_kernel(kind, P, eps, x0, n0, t_end, seed,
                  method, dt0, rtol, atol, hazard_tol, max_steps,
                  stop_at_absorption, record,
                  samp_t, samp_x, samp_n, ev_t, ev_kind, ev_nafter):
    """Simulate one hybrid path on [0, t_end].

    Between jumps the pair (x, Lambda) is integrated with the step size
    capped at eps*dt0; a jump fires at the first time Lambda reaches an
    Exp(1) threshold, located by bisection on the step until the hazard
    mismatch is below hazard_tol.  The jump is a birth with probability
    b/(b+d) at the jump state.  After n hits 0 the flow continues jump-free
    unless stop_at_absorption is set.

    Returns (status, nsamp, nev, t, x, n, absorbed_at); counts are exact
    also when record == 0.
    """
    rng = rng_new(seed)
    inv_eps = 1.0 / eps
    hmax = eps * dt0
    t = 0.0
    x = x0
    n = n0
    absorbed_at = math.nan
    status = OK
    steps = 0
    nev = 0

    nsamp = 1
    if record == 1:
        if samp_t.shape[0] < 1:
            return BUFFER_OVERFLOW, 0, 0, t, x, n, absorbed_at
        samp_t[0] = t
        samp_x[0] = x
        samp_n[0] = n

    if n == 0:
        absorbed_at = 0.0
        if stop_at_absorption == 1:
            return status, nsamp, nev, t, x, n, absorbed_at

    while t < t_end:
        nf = float(n)
        if n > 0:
            threshold = rng_exponential(rng)
        else:
            threshold = math.inf
        lam = 0.0
        h = hmax
        jumped = False

        while t < t_end:
            steps += 1
            if steps > max_steps:
                return MAX_STEPS_EXCEEDED, nsamp, nev, t, x, n, absorbed_at
            is_last = False
            hstep = h
            if hstep >= t_end - t:
                hstep = t_end - t
                is_last = True
            x1, lam1, errnorm = _pair_step(kind, P, nf, inv_eps, x, lam,
                                           hstep, method, rtol, atol)
            if not (math.isfinite(x1) and math.isfinite(lam1)):
                h = hstep * 0.2
                if h < 1e-14 * max(1.0, abs(t)):
                    return NONFINITE, nsamp, nev, t, x, n, absorbed_at
                continue
            if method == METHOD_RK45 and errnorm > 1.0:
                fac = 0.9 * errnorm ** -0.2
                if fac < 0.2:
                    fac = 0.2
                h = hstep * fac
                if h < 1e-14 * max(1.0, abs(t)):
                    return NONFINITE, nsamp, nev, t, x, n, absorbed_at
                continue

            if lam1 >= threshold:
                # hazard threshold crossed inside (t, t+hstep]: bisect on the
                # substep size; the hazard is nondecreasing in time.
                lo = 0.0
                hi = hstep
                xj = x1
                sj = hstep
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    xm, lm, _e = _pair_step(kind, P, nf, inv_eps, x, lam,
                                            mid, method, rtol, atol)
                    if abs(lm - threshold) <= hazard_tol:
                        xj = xm
                        sj = mid
                        break
                    if lm < threshold:
                        lo = mid
                    else:
                        hi = mid
                        xj = xm
                        sj = mid
                t = t + sj
                x = xj
                bj = birth_value(kind, P, x, nf)
                dj = death_value(kind, P, x, nf)
                u = rng_uniform(rng)
                if u * (bj + dj) < bj:
                    n += 1
                    ek = 1
                else:
                    n -= 1
                    ek = -1
                nev += 1
                if record == 1:
                    if nev > ev_t.shape[0]:
                        return BUFFER_OVERFLOW, nsamp, nev, t, x, n, absorbed_at
                    ev_t[nev - 1] = t
                    ev_kind[nev - 1] = ek
                    ev_nafter[nev - 1] = n
                nsamp += 1
                if record == 1:
                    if nsamp > samp_t.shape[0]:
                        return BUFFER_OVERFLOW, nsamp, nev, t, x, n, absorbed_at
                    samp_t[nsamp - 1] = t
                    samp_x[nsamp - 1] = x
                    samp_n[nsamp - 1] = n
                if n == 0:
                    absorbed_at = t
                    if stop_at_absorption == 1:
                        return status, nsamp, nev, t, x, n, absorbed_at
                jumped = True
                break

            # step accepted without a jump
            if is_last:
                t = t_end
            else:
                t = t + hstep
            x = x1
            lam = lam1
            nsamp += 1
            if record == 1:
                if nsamp > samp_t.shape[0]:
                    return BUFFER_OVERFLOW, nsamp, nev, t, x, n, absorbed_at
                samp_t[nsamp - 1] = t
                samp_x[nsamp - 1] = x
                samp_n[nsamp - 1] = n
            if method == METHOD_RK45:
                if errnorm < 1e-300:
                    fac = 5.0
                else:
                    fac = 0.9 * errnorm ** -0.2
                    if fac > 5.0:
                        fac = 5.0
                    elif fac < 0.2:
                        fac = 0.2
                h = hstep * fac
                if h > hmax:
                    h = hmax

        if not jumped:
            break

    return status, nsamp, nev, t, x, n, absorbed_at


@jit
def ssa_kernel(bbar, dbar, n0, t_end, seed, max_events, record, ev_t, ev_n):
    """Exact simulation of the tabulated birth-death chain.

    From state n the holding time is Exp(bbar[n] + dbar[n]) and the move is a
    birth with probability bbar[n]/(bbar[n]+dbar[n]).  Stops at absorption
    (n == 0), at t_end, or with GROW_TABLE when n would step past the table.

    Returns (status, nev, t, n, absorbed_at).
    """
    rng = rng_new(seed)
    t = 0.0
    n = n0
    nev = 0
    absorbed_at = math.nan
    ncap = bbar.shape[0] - 1

    if n == 0:
        absorbed_at = 0.0
        return OK, nev, t, n, absorbed_at

    while True:
        if n >= ncap:
            return GROW_TABLE, nev, t, n, absorbed_at
        bn = bbar[n]
        dn = dbar[n]
        lam = bn + dn
        if not (lam > 0.0) or not math.isfinite(lam):
            return BAD_RATES, nev, t, n, absorbed_at
        dt = rng_exponential(rng) / lam
        if t + dt > t_end:
            t = t_end
            return OK, nev, t, n, absorbed_at
        t = t + dt
        u = rng_uniform(rng)
        if u * lam < bn:
            n += 1
        else:
            n -= 1
        nev += 1
        if record == 1:
            if nev > ev_t.shape[0]:
                return BUFFER_OVERFLOW, nev, t, n, absorbed_at
            ev_t[nev - 1] = t
            ev_n[nev - 1] = n
        if n == 0:
            absorbed_at = t
            return OK, nev, t, n, absorbed_at
        if nev >= max_events:
            return MAX_STEPS_EXCEEDED, nev, t, n, absorbed_at
