"""Exact complex hyperbolic geometry of the unit ball.

The metric is normalized so that holomorphic sectional curvature is -4,
sectional curvatures lie in [-4, -1] and Ric = -2(n+1) g:

    h_{j kbar}(z) = [ (1 - |z|^2) delta_{jk} + conj(z_j) z_k ] / (4 (1 - |z|^2)^2).

Points are complex n-vectors with |z| < 1.  The distance to the divisor
B_0 = {z_1 = 0} is arccosh(sqrt(u)) with u = 1 + |z_1|^2 / (1 - |z|^2); the
geodesic-shooting oracle here verifies that closed form independently by
integrating the Levi-Civita geodesic flow of the metric itself
(Gamma^i_{jk} = (delta^i_j conj(z_k) + delta^i_k conj(z_j)) / (1 - |z|^2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .errors import BoundaryPoint, NoConvergence, RadiusTooSmall

__all__ = [
    "ball_metric",
    "real_metric",
    "distance_to_divisor",
    "geodesic_distance_oracle",
    "divisor_distance_oracle",
    "ricci_metric_fd",
    "CutoffSpec",
    "cutoff",
    "cutoff_radial_profile",
    "cutoff_derivative_bounds",
    "divisor_stabilizer_move",
    "mobius_subball",
    "sample_interior_points",
]

_BOUNDARY_TOL = 1e-12


def _check_interior(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.linalg.norm(z) >= 1.0 - _BOUNDARY_TOL:
        raise BoundaryPoint(f"|z| = {np.linalg.norm(z)} too close to the unit sphere")
    return z


def ball_metric(z) -> np.ndarray:
    """Hermitian metric matrix h_{j kbar}(z); positive definite."""
    z = _check_interior(z)
    s = float(np.vdot(z, z).real)
    n = len(z)
    h = (1.0 - s) * np.eye(n, dtype=complex) + np.outer(np.conj(z), z)
    return h / (4.0 * (1.0 - s) ** 2)


def real_metric(z) -> np.ndarray:
    """Riemannian metric on R^{2n} (interleaved coordinates Re z_1, Im z_1, ...).

    Normalized so that g(u, v) = 4 Re sum h_{jk} u_j conj(v_k); radial real
    lines then have the curvature -1 profile 1/(1 - r^2)^2 and the distance
    0 -> (r, 0, ...) is arctanh(r).
    """
    h = ball_metric(z)
    n = h.shape[0]
    A, B = np.real(h), np.imag(h)
    G = np.zeros((2 * n, 2 * n))
    G[0::2, 0::2] = A
    G[1::2, 1::2] = A
    G[1::2, 0::2] = -B
    G[0::2, 1::2] = B
    return 4.0 * G


def distance_to_divisor(z) -> float:
    """Geodesic distance to B_0 = {z_1 = 0}: arccosh(sqrt(u)) with
    u = 1 + |z_1|^2 / (1 - |z|^2)."""
    z = _check_interior(z)
    s = float(np.vdot(z, z).real)
    u = 1.0 + abs(z[0]) ** 2 / (1.0 - s)
    return math.acosh(math.sqrt(u))


def _geodesic_rhs(t, y, n):
    z = y[:n] + 1j * y[n:2 * n]
    zdot = y[2 * n:3 * n] + 1j * y[3 * n:]
    s = float(np.vdot(z, z).real)
    acc = -2.0 * zdot * np.vdot(z, zdot) / (1.0 - s)  # vdot conjugates first arg
    return np.concatenate([y[2 * n:], np.real(acc), np.imag(acc)])


def _integrate_geodesic(p: np.ndarray, v0: np.ndarray, rtol: float = 1e-12):
    n = len(p)
    y0 = np.concatenate([np.real(p), np.imag(p), np.real(v0), np.imag(v0)])
    sol = solve_ivp(_geodesic_rhs, (0.0, 1.0), y0, args=(n,), method="DOP853",
                    rtol=rtol, atol=rtol)
    if not sol.success:
        raise NoConvergence(f"geodesic integration failed: {sol.message}")
    yf = sol.y[:, -1]
    zf = yf[:n] + 1j * yf[n:2 * n]
    vf = yf[2 * n:3 * n] + 1j * yf[3 * n:]
    return zf, vf


def _speed(p: np.ndarray, v: np.ndarray) -> float:
    # |v|_g^2 = 4 Re sum h_{jk} v_j conj(v_k); the conjugate sits on the
    # second index (the other pairing differs through Im h and is not the
    # conserved energy of the geodesic flow)
    h = ball_metric(p)
    return math.sqrt(4.0 * float(np.real(v @ h @ np.conj(v))))


def geodesic_distance_oracle(p, q, tol: float = 1e-9) -> float:
    """Distance by shooting on the geodesic equation of ball_metric.

    The initial velocity is solved by least squares on the time-1 endpoint
    mismatch; the returned distance is the (constant) speed of the geodesic.
    Independent of any closed-form distance formula.
    """
    p = _check_interior(p)
    q = _check_interior(q)
    n = len(p)
    if len(q) != n:
        raise ValueError("points live in different dimensions")
    if np.allclose(p, q, atol=1e-15):
        return 0.0

    def residual(v_flat):
        v0 = v_flat[:n] + 1j * v_flat[n:]
        zf, _ = _integrate_geodesic(p, v0)
        return np.concatenate([np.real(zf - q), np.imag(zf - q)])

    x0 = np.concatenate([np.real(q - p), np.imag(q - p)])
    res = least_squares(residual, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14,
                        diff_step=1e-7)
    if np.linalg.norm(res.fun) > max(tol, 1e-8):
        raise NoConvergence(
            f"shooting residual {np.linalg.norm(res.fun):.3e} above tolerance"
        )
    v0 = res.x[:n] + 1j * res.x[n:]
    return _speed(p, v0)


def divisor_distance_oracle(p, tol: float = 1e-9) -> float:
    """Distance to B_0 by free-endpoint shooting: the geodesic must land on
    {z_1 = 0} and hit it metrically orthogonally.  Cross-validates
    :func:`distance_to_divisor` without using its formula."""
    p = _check_interior(p)
    n = len(p)
    if abs(p[0]) < 1e-15:
        return 0.0

    def residual(v_flat):
        v0 = v_flat[:n] + 1j * v_flat[n:]
        zf, vf = _integrate_geodesic(p, v0)
        h = ball_metric(zf)
        # orthogonality to T B_0: sum_j h_{jk} v_j = 0 for k >= 2
        c = vf @ h
        return np.concatenate([
            [np.real(zf[0]), np.imag(zf[0])],
            np.real(c[1:]), np.imag(c[1:]),
        ])

    guess = p.copy()
    guess[0] = 0.0
    x0 = np.concatenate([np.real(guess - p), np.imag(guess - p)])
    res = least_squares(residual, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14,
                        diff_step=1e-7)
    if np.linalg.norm(res.fun) > max(tol, 1e-8):
        raise NoConvergence(
            f"divisor shooting residual {np.linalg.norm(res.fun):.3e} above tolerance"
        )
    v0 = res.x[:n] + 1j * res.x[n:]
    return _speed(p, v0)


def ricci_metric_fd(z, step: float = 1e-4) -> np.ndarray:
    """Ricci form coefficients -(1/2) d_j d_kbar log det h via central finite
    differences in the 2n real coordinates; for the ball this equals
    -2(n+1) h to O(step^2)."""
    z = _check_interior(z)
    n = len(z)

    def phi(x):
        w = x[0::2] + 1j * x[1::2]
        sign, logdet = np.linalg.slogdet(ball_metric(w))
        return float(logdet)

    x0 = np.empty(2 * n)
    x0[0::2], x0[1::2] = np.real(z), np.imag(z)
    m = 2 * n
    hess = np.zeros((m, m))
    f0 = phi(x0)
    for a in range(m):
        for b in range(a, m):
            ea, eb = np.eye(m)[a] * step, np.eye(m)[b] * step
            if a == b:
                val = (phi(x0 + ea) - 2.0 * f0 + phi(x0 - ea)) / step ** 2
            else:
                val = (phi(x0 + ea + eb) - phi(x0 + ea - eb)
                       - phi(x0 - ea + eb) + phi(x0 - ea - eb)) / (4.0 * step ** 2)
            hess[a, b] = hess[b, a] = val
    # d_j d_kbar = (1/4)[(dx_j dx_k + dy_j dy_k) + i (dx_j dy_k - dy_j dx_k)]
    hxx = hess[0::2, 0::2]
    hyy = hess[1::2, 1::2]
    hxy = hess[0::2, 1::2]
    ddbar = 0.25 * ((hxx + hyy) + 1j * (hxy - hxy.T))
    return -0.5 * ddbar


# ---------------------------------------------------------------------------
# Collar cut-off functions
# ---------------------------------------------------------------------------


def _bump(x):
    """exp(-1/x) for x > 0, else 0 (C-infinity glue)."""
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def outer_profile(s) -> np.ndarray:
    """Smooth nonincreasing xi: 1 on (-inf, 1], 0 on [3/2, inf), exponential
    bump partition in between."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    up = _bump(1.5 - s)
    down = _bump(s - 1.0)
    with np.errstate(invalid="ignore"):
        val = np.where(s <= 1.0, 1.0, np.where(s >= 1.5, 0.0, up / (up + down)))
    return val


@dataclass(frozen=True)
class CutoffSpec:
    """Collar cut-off chi_R = xi(2 log u / R); R >= 6 guarantees chi = 1 for
    d <= R/4 and chi = 0 for d >= R/2."""

    R: float
    max_order: int = 2

    def __post_init__(self):
        if self.R < 6.0:
            raise RadiusTooSmall(f"collar radius must be >= 6, got {self.R}")


def cutoff(spec: CutoffSpec, z) -> float:
    """chi_R at a ball point."""
    z = _check_interior(z)
    s = float(np.vdot(z, z).real)
    u = 1.0 + abs(z[0]) ** 2 / (1.0 - s)
    return float(outer_profile(2.0 * math.log(u) / spec.R)[0])


def cutoff_radial_profile(spec: CutoffSpec, t) -> np.ndarray:
    """chi_R as a function of the distance t to the divisor (u = cosh^2 t)."""
    t = np.asarray(t, dtype=float)
    return outer_profile(4.0 * np.log(np.cosh(t)) / spec.R)


def cutoff_profile_csv(spec: CutoffSpec, fh, points: int = 512) -> None:
    """Radial cut-off profile with derivative columns t,chi,chi_k1,...,chi_kK."""
    t = np.linspace(0.0, 0.75 * spec.R, points)
    cols = [cutoff_radial_profile(spec, t)]
    dt = t[1] - t[0]
    for _ in range(spec.max_order):
        cols.append(np.gradient(cols[-1], dt))
    fh.write("t," + ",".join(["chi"] + [f"chi_k{k}" for k in range(1, spec.max_order + 1)])
             + "\n")
    for row in zip(t, *cols):
        fh.write(",".join("%.17g" % v for v in row) + "\n")


def cutoff_derivative_bounds(spec: CutoffSpec, k: int, grid: int = 20001) -> float:
    """Empirical sup of |d^k chi_R / d t^k| along the radial direction.

    chi_R depends on the point only through the radial coordinate, so the
    radial profile carries all of the derivative content; successive central
    differences on a fine t-grid estimate the k-th derivative.  The quantity
    scales like 1/R^k across collar radii.
    """
    if not (0 <= k <= spec.max_order):
        raise ValueError(f"derivative order {k} outside [0, {spec.max_order}]")
    t = np.linspace(0.0, 0.75 * spec.R, grid)
    vals = cutoff_radial_profile(spec, t)
    dt = t[1] - t[0]
    for _ in range(k):
        vals = np.gradient(vals, dt)
    return float(np.max(np.abs(vals)))


# ---------------------------------------------------------------------------
# Divisor-stabilizer moves
# ---------------------------------------------------------------------------


def mobius_subball(w, a):
    """Standard ball automorphism phi_a of the sub-ball, phi_a(a) = 0."""
    w = np.asarray(w, dtype=complex)
    a = np.asarray(a, dtype=complex)
    na2 = float(np.vdot(a, a).real)
    if na2 >= 1.0:
        raise BoundaryPoint("Mobius parameter outside the sub-ball")
    if na2 == 0.0:
        return -w
    wa = complex(np.vdot(a, w))  # <w, a> = sum w_i conj(a_i)
    pa = (wa / na2) * a
    qa = w - pa
    s = math.sqrt(1.0 - na2)
    return (a - pa - s * qa) / (1.0 - wa)


def divisor_stabilizer_move(z, theta: float = 0.0, a=None, unitary=None) -> np.ndarray:
    """Isometry of the ball preserving B_0: rotate z_1, apply a Mobius map of
    the last n-1 coordinates and rescale z_1 by the matching holomorphic
    factor sqrt(1 - |a|^2) / (1 - <w, a>)."""
    z = _check_interior(z)
    n = len(z)
    w = z[1:]
    out = np.empty(n, dtype=complex)
    z1 = np.exp(1j * theta) * z[0]
    if a is not None:
        a = np.asarray(a, dtype=complex)
        na2 = float(np.vdot(a, a).real)
        wa = complex(np.vdot(a, w))
        z1 = z1 * math.sqrt(1.0 - na2) / (1.0 - wa)
        w = mobius_subball(w, a)
    if unitary is not None:
        w = np.asarray(unitary, dtype=complex) @ w
    out[0] = z1
    out[1:] = w
    return out


def sample_interior_points(n: int, count: int, seed: int, rmax: float = 0.8) -> np.ndarray:
    """Deterministic batch of interior points, radius <= rmax."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    radii = rmax * rng.uniform(0.1, 1.0, (count, 1)) ** (1.0 / (2 * n))
    return pts / norms * radii
