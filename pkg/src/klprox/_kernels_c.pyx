# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise penalty kernels; mirror of ``_kernels_np``.

Semantics (branch formulas, tie-breaking) are kept identical to the numpy
backend so either may be selected at import time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport copysign, fabs, fmax, fmin, INFINITY

cnp.import_array()

__all__ = [
    "soft_threshold",
    "soft_threshold_per_element",
    "scad_penalty",
    "mcp_penalty",
    "scad_prox",
    "mcp_prox",
    "scad_derivative",
    "mcp_derivative",
]


cdef inline double _sign(double x) nogil:
    if x > 0.0:
        return 1.0
    elif x < 0.0:
        return -1.0
    return 0.0


cdef inline double _clip(double x, double lo, double hi) nogil:
    return fmin(fmax(x, lo), hi)


cdef inline double _soft(double z, double tau) nogil:
    # branch-free form keeps the loop vectorizable
    return copysign(fmax(fabs(z) - tau, 0.0), z)


cdef inline double _scad_val(double a, double lam, double theta) nogil:
    # a >= 0
    if a <= lam:
        return lam * a
    if a <= theta * lam:
        return (-a * a + 2.0 * theta * lam * a - lam * lam) / (2.0 * (theta - 1.0))
    return 0.5 * (theta + 1.0) * lam * lam


cdef inline double _mcp_val(double a, double lam, double theta) nogil:
    if a <= theta * lam:
        return lam * a - a * a / (2.0 * theta)
    return 0.5 * theta * lam * lam


cdef inline double _scad_prox1(double z, double t, double lam, double theta) nogil:
    cdef double a = fabs(z)
    cdef double denom = theta - 1.0 - t
    cdef double cand[5]
    cdef double best_u, best_phi, phi, u
    cdef int i

    cand[0] = _clip(a - t * lam, 0.0, lam)
    if denom > 0.0:
        cand[1] = _clip((a * (theta - 1.0) - t * theta * lam) / denom, lam, theta * lam)
    else:
        cand[1] = lam
    cand[2] = fmax(a, theta * lam)
    cand[3] = lam
    cand[4] = theta * lam

    best_u = 0.0
    best_phi = INFINITY
    for i in range(5):
        u = cand[i]
        phi = t * _scad_val(u, lam, theta) + 0.5 * (u - a) * (u - a)
        if phi < best_phi or (phi == best_phi and u < best_u):
            best_phi = phi
            best_u = u
    return _sign(z) * best_u


cdef inline double _mcp_prox1(double z, double t, double lam, double theta) nogil:
    cdef double a = fabs(z)
    cdef double denom = theta - t
    cdef double cand[4]
    cdef double best_u, best_phi, phi, u
    cdef int i

    if denom > 0.0:
        cand[0] = _clip(theta * (a - t * lam) / denom, 0.0, theta * lam)
    else:
        cand[0] = 0.0
    cand[1] = fmax(a, theta * lam)
    cand[2] = 0.0
    cand[3] = theta * lam

    best_u = 0.0
    best_phi = INFINITY
    for i in range(4):
        u = cand[i]
        phi = t * _mcp_val(u, lam, theta) + 0.5 * (u - a) * (u - a)
        if phi < best_phi or (phi == best_phi and u < best_u):
            best_phi = phi
            best_u = u
    return _sign(z) * best_u


def soft_threshold(z, tau):
    """Elementwise sign(z) * max(|z| - tau, 0); prox of tau*|.|."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double tt = tau
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            ou[i] = _soft(zu[i], tt)
    return out


def soft_threshold_per_element(z, tau):
    """Soft threshold with a per-element threshold array."""
    arr_obj = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray arr = arr_obj
    # broadcast_to yields a read-only view; astype forces a writable copy
    cdef cnp.ndarray tarr = np.broadcast_to(tau, arr_obj.shape).astype(np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] tu = tarr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            ou[i] = _soft(zu[i], tu[i])
    return out


def scad_penalty(z, lam, theta):
    """Elementwise SCAD penalty value (quadratic spline, flat beyond theta*lam)."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double l = lam, th = theta
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            ou[i] = _scad_val(fabs(zu[i]), l, th)
    return out


def mcp_penalty(z, lam, theta):
    """Elementwise MCP penalty value (quadratic up to theta*lam, then flat)."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double l = lam, th = theta
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            ou[i] = _mcp_val(fabs(zu[i]), l, th)
    return out


def scad_derivative(z, lam, theta):
    """Elementwise derivative of the SCAD penalty; 0 at exact zeros."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double l = lam, th = theta, slope
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            # the three branches collapse to a clip of the middle slope
            slope = _clip((th * l - fabs(zu[i])) / (th - 1.0), 0.0, l)
            ou[i] = copysign(slope, zu[i]) if zu[i] != 0.0 else 0.0
    return out


def mcp_derivative(z, lam, theta):
    """Elementwise derivative of the MCP penalty; 0 at exact zeros."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double l = lam, th = theta, slope
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            slope = fmax(l - fabs(zu[i]) / th, 0.0)
            ou[i] = copysign(slope, zu[i]) if zu[i] != 0.0 else 0.0
    return out


def scad_prox(z, step, lam, theta):
    """Elementwise global minimizer of step*scad(u) + (u-z)^2/2."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double t = step, l = lam, th = theta
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            ou[i] = _scad_prox1(zu[i], t, l, th)
    return out


def mcp_prox(z, step, lam, theta):
    """Elementwise global minimizer of step*mcp(u) + (u-z)^2/2."""
    cdef cnp.ndarray arr = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] zu = arr.ravel()
    cdef double[::1] ou = out.ravel()
    cdef double t = step, l = lam, th = theta
    cdef Py_ssize_t i, n = zu.shape[0]
    with nogil:
        for i in range(n):
            ou[i] = _mcp_prox1(zu[i], t, l, th)
    return out
