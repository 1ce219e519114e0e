"""Batched cable-length kernels.

Both paths take a stack of absolute parameter rows laid out as::

    [a_1..a_6, d_1..d_6, alpha_1..alpha_6, theta_off_1..theta_off_6,
     anchor_x, anchor_y, anchor_z, cable_offset]

and a stack of joint configurations, and return ``out[k, i]`` = cable
length of parameter row ``k`` at configuration ``i``. Each entry is computed
with the same sequence of scalar operations regardless of batch shape, so a
single row evaluated alone gives the same bits as inside a larger batch.
"""
import numpy as np

from . import _accel

N_FULL = 28
_A, _D, _ALPHA, _THETA, _ANCHOR, _OFFSET = 0, 6, 12, 18, 24, 27


@_accel.njit(cache=True)
def _cable_lengths_jit(params, qs):
    k_rows = params.shape[0]
    m = qs.shape[0]
    out = np.empty((k_rows, m))
    for k in range(k_rows):
        p = params[k]
        ca_ = np.empty(6)
        sa_ = np.empty(6)
        for j in range(6):
            ca_[j] = np.cos(p[12 + j])
            sa_[j] = np.sin(p[12 + j])
        for i in range(m):
            r00, r01, r02 = 1.0, 0.0, 0.0
            r10, r11, r12 = 0.0, 1.0, 0.0
            r20, r21, r22 = 0.0, 0.0, 1.0
            px, py, pz = 0.0, 0.0, 0.0
            for j in range(6):
                th = qs[i, j] + p[18 + j]
                ct = np.cos(th)
                st = np.sin(th)
                ca = ca_[j]
                sa = sa_[j]
                a = p[j]
                d = p[6 + j]
                # link rotation columns and translation
                k00, k01, k02 = ct, -st * ca, st * sa
                k10, k11, k12 = st, ct * ca, -ct * sa
                k21, k22 = sa, ca
                tx, ty, tz = a * ct, a * st, d
                px, py, pz = (
                    r00 * tx + r01 * ty + r02 * tz + px,
                    r10 * tx + r11 * ty + r12 * tz + py,
                    r20 * tx + r21 * ty + r22 * tz + pz,
                )
                r00, r01, r02 = (
                    r00 * k00 + r01 * k10,
                    r00 * k01 + r01 * k11 + r02 * k21,
                    r00 * k02 + r01 * k12 + r02 * k22,
                )
                r10, r11, r12 = (
                    r10 * k00 + r11 * k10,
                    r10 * k01 + r11 * k11 + r12 * k21,
                    r10 * k02 + r11 * k12 + r12 * k22,
                )
                r20, r21, r22 = (
                    r20 * k00 + r21 * k10,
                    r20 * k01 + r21 * k11 + r22 * k21,
                    r20 * k02 + r21 * k12 + r22 * k22,
                )
            dx = px - p[24]
            dy = py - p[25]
            dz = pz - p[26]
            out[k, i] = np.sqrt(dx * dx + dy * dy + dz * dz) + p[27]
    return out


def _cable_lengths_numpy(params, qs):
    p = params[:, None, :]
    shape = (params.shape[0], qs.shape[0])
    one = np.ones(shape)
    zero = np.zeros(shape)
    r00, r01, r02 = one, zero, zero
    r10, r11, r12 = zero, one, zero
    r20, r21, r22 = zero, zero, one
    px, py, pz = zero, zero, zero
    for j in range(6):
        th = qs[None, :, j] + p[..., _THETA + j]
        ct = np.cos(th)
        st = np.sin(th)
        ca = np.cos(p[..., _ALPHA + j])
        sa = np.sin(p[..., _ALPHA + j])
        a = p[..., _A + j]
        d = p[..., _D + j]
        k00, k01, k02 = ct, -st * ca, st * sa
        k10, k11, k12 = st, ct * ca, -ct * sa
        k21, k22 = sa, ca
        tx, ty, tz = a * ct, a * st, d
        px, py, pz = (
            r00 * tx + r01 * ty + r02 * tz + px,
            r10 * tx + r11 * ty + r12 * tz + py,
            r20 * tx + r21 * ty + r22 * tz + pz,
        )
        r00, r01, r02 = (
            r00 * k00 + r01 * k10,
            r00 * k01 + r01 * k11 + r02 * k21,
            r00 * k02 + r01 * k12 + r02 * k22,
        )
        r10, r11, r12 = (
            r10 * k00 + r11 * k10,
            r10 * k01 + r11 * k11 + r12 * k21,
            r10 * k02 + r11 * k12 + r12 * k22,
        )
        r20, r21, r22 = (
            r20 * k00 + r21 * k10,
            r20 * k01 + r21 * k11 + r22 * k21,
            r20 * k02 + r21 * k12 + r22 * k22,
        )
    dx = px - p[..., _ANCHOR]
    dy = py - p[..., _ANCHOR + 1]
    dz = pz - p[..., _ANCHOR + 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz) + p[..., _OFFSET]


def cable_lengths(params, qs, backend=None):
    """Cable lengths for every (parameter row, configuration) pair.

    ``backend`` is ``"numba"``, ``"numpy"`` or ``None`` for the process
    default (see ``cablecal._accel``).
    """
    params = np.ascontiguousarray(np.atleast_2d(params), dtype=np.float64)
    qs = np.ascontiguousarray(np.atleast_2d(qs), dtype=np.float64)
    if params.shape[1] != N_FULL:
        raise ValueError(f"parameter rows must have {N_FULL} entries, got {params.shape[1]}")
    if qs.shape[1] != 6:
        raise ValueError(f"joint configurations must have 6 entries, got {qs.shape[1]}")
    backend = backend or _accel.BACKEND
    if backend == "numba":
        if not _accel.HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return _cable_lengths_jit(params, qs)
    if backend == "numpy":
        return _cable_lengths_numpy(params, qs)
    raise ValueError(f"unknown backend {backend!r}")
