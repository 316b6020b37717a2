"""Accelerated numeric kernels with a pure-numpy fallback.

The modal summation dominates runtime when simulating fields on full grids.
The kernels below are compiled with numba unless the environment variable
``ROOMFIELD_NO_NUMBA`` is set to a non-empty value, in which case the numpy
implementations are used. Both paths produce identical results (same
operation order per output element is not guaranteed, but both are exact to
normal floating round-off and are covered by the same tests).
"""

import os

import numpy as np

USE_NUMBA = not os.environ.get("ROOMFIELD_NO_NUMBA")


def _mode_shapes_numpy(n_idx, dims, points):
    # psi[m, p] = cos(n_x pi x / l_x) cos(n_y pi y / l_y) cos(n_z pi z / l_z)
    arg = np.pi * n_idx[:, None, :] * points[None, :, :] / dims[None, None, :]
    return np.cos(arg).prod(axis=2)


def _modal_field_numpy(weights, psi_w):
    # field[k, p] = sum_m weights[k, m] * psi_w[m, p]
    return weights @ psi_w


if USE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def _mode_shapes_nb(n_idx, dims, points):
        n_modes = n_idx.shape[0]
        n_pts = points.shape[0]
        out = np.empty((n_modes, n_pts))
        for m in prange(n_modes):
            for p in range(n_pts):
                v = 1.0
                for d in range(3):
                    v *= np.cos(np.pi * n_idx[m, d] * points[p, d] / dims[d])
                out[m, p] = v
        return out

    @njit(cache=True, parallel=True)
    def _modal_field_nb(w_re, w_im, psi_w_t):
        # psi transposed to (points, modes) keeps both inner reads
        # contiguous; weights split into real/imag halves the multiplies
        n_freq = w_re.shape[0]
        n_pts, n_modes = psi_w_t.shape
        out = np.empty((n_freq, n_pts), dtype=np.complex128)
        for p in prange(n_pts):
            for k in range(n_freq):
                acc_re = 0.0
                acc_im = 0.0
                for m in range(n_modes):
                    acc_re += w_re[k, m] * psi_w_t[p, m]
                    acc_im += w_im[k, m] * psi_w_t[p, m]
                out[k, p] = complex(acc_re, acc_im)
        return out

    def mode_shapes_kernel(n_idx, dims, points):
        return _mode_shapes_nb(
            np.ascontiguousarray(n_idx, dtype=np.float64),
            np.ascontiguousarray(dims, dtype=np.float64),
            np.ascontiguousarray(points, dtype=np.float64),
        )

    def modal_field_kernel(weights, psi_w):
        weights = np.asarray(weights, dtype=np.complex128)
        return _modal_field_nb(
            np.ascontiguousarray(weights.real),
            np.ascontiguousarray(weights.imag),
            np.ascontiguousarray(np.asarray(psi_w, dtype=np.float64).T),
        )

else:
    def mode_shapes_kernel(n_idx, dims, points):
        return _mode_shapes_numpy(
            np.asarray(n_idx, dtype=np.float64),
            np.asarray(dims, dtype=np.float64),
            np.asarray(points, dtype=np.float64),
        )

    def modal_field_kernel(weights, psi_w):
        return _modal_field_numpy(
            np.asarray(weights, dtype=np.complex128),
            np.asarray(psi_w, dtype=np.float64),
        )
