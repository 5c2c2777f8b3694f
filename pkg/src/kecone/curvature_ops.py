"""Curvature quantities derived from a metric profile, and the full curvature
operator at a point.

In the adapted orthonormal frame (xi, J xi, e_1, J e_1, ..., e_{n-1}, J e_{n-1})
with xi radial, the invariant curvature tensor at distance t from the divisor
is determined by three numbers:

* K_disk(t): sectional curvature of the radial complex disk (the A1 direction),
* K_tr(t) = -f''/f: sectional curvature of every mixed plane, radial x
  horizontal (the A2 directions) -- also the totally real plane curvature,
* m(t) = (f'^2 + 1)/f^2: the multiplier of the constant-HSC(-4) model tensor
  on the horizontal subbundle (the A3 block).

It is assembled here in complex notation as

    R_{i jbar k lbar} = -[ p (gD gD)_sym + q (gD gH + gH gD)_sym + r (gH gH)_sym ]

with p = -K_disk/4, q = -K_tr, r = m, and gD, gH the projections onto the disk
and horizontal directions.  The Einstein identity Ric = -2(n+1) g is exactly
the pair of trace conditions 2p + (n-1)q = n+1 (the K_disk definition) and
q + n r = n+1 (the profile equation itself).  The quadratic form is scalar on
decomposable elements of A1 and A2 while the Kahler symmetry forces the
accompanying off-diagonal couplings (e.g. between the disk plane and the
horizontal Kahler directions); those are what make the ball case reproduce
constant holomorphic sectional curvature -4 on every J-plane.

One consequence worth knowing: for c < 1 the J-plane spanned by the diagonal
direction (xi + e)/sqrt(2) has holomorphic sectional curvature
(K_disk - 4m + 8 K_tr)/4, which lies strictly above -4 (it tends to -3 for
n = 2 in the product limit).  Holomorphic sectional curvatures of the pure
disk and horizontal planes stay <= -4, but the mixed ones do not.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange
from .ke_profile import MetricProfile
from . import tensor_lab as tl

__all__ = [
    "CurvatureProfile",
    "PointCurvatureOperator",
    "ExtremizeResult",
    "curvature_profile",
    "assemble_point_operator",
    "ball_reference_operator",
    "extremize_sectional",
    "holomorphic_sectional_range",
]


@dataclass
class CurvatureProfile:
    """Pointwise curvature functions of the distance t."""

    profile: MetricProfile
    t: np.ndarray
    K_tr: np.ndarray
    K_disk: np.ndarray
    lam: np.ndarray
    m: np.ndarray
    mu_mixed: np.ndarray

    def at(self, t: float):
        """(K_tr, K_disk, lam, m, mu) evaluated off-grid."""
        f, fp, fpp = self.profile.evaluate(t)
        return _pointwise(self.profile.params.n, f, fp, fpp)

    def to_csv(self, fh) -> None:
        fh.write("t,Ktr,Kdisk,lambda,m,mu\n")
        for row in zip(self.t, self.K_tr, self.K_disk, self.lam, self.m, self.mu_mixed):
            fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n" % row)


def _pointwise(n, f, fp, fpp):
    K_tr = -fpp / f
    K_disk = -2.0 * (n + 1.0) - 2.0 * (n - 1.0) * K_tr
    lam = fp / f  # outward-growth sign convention; only lam^2 enters curvature
    m = (fp ** 2 + 1.0) / f ** 2
    return K_tr, K_disk, lam, m, K_tr


def curvature_profile(profile: MetricProfile) -> CurvatureProfile:
    """Derive all per-t curvature quantities from the solved profile."""
    K_tr, K_disk, lam, m, mu = _pointwise(profile.params.n, profile.f, profile.fp, profile.fpp)
    return CurvatureProfile(profile=profile, t=profile.t.copy(),
                            K_tr=K_tr, K_disk=K_disk, lam=lam, m=m, mu_mixed=mu)


@dataclass
class PointCurvatureOperator:
    """Full curvature operator on Lambda^2 R^{2n} at distance t, in the adapted
    orthonormal frame; the metric there is the identity."""

    n: int
    t: float
    k_disk: float   # A1 quadratic-form value (disk-plane curvature)
    mu: float       # A2 quadratic-form value (mixed-plane curvature)
    m: float        # A3 multiplier of the constant-HSC(-4) model tensor
    tensor: tl.RiemannTensor

    @property
    def metric(self) -> np.ndarray:
        return np.eye(2 * self.n)

    def sectional(self, v: np.ndarray, w: np.ndarray) -> float:
        return self.tensor.sectional(v, w)

    def ricci_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.tensor.ricci())

    def to_hermitian(self) -> tl.HermitianCurvature:
        return tl.hermitian_from_riemann(self.tensor)

    def horizontal_block(self) -> tl.RiemannTensor:
        """Restriction of the tensor to the horizontal subspace (A3 block)."""
        R = self.tensor.coeff[2:, 2:, 2:, 2:]
        return tl.RiemannTensor(R.copy(), 2 * (self.n - 1))


def _assemble(n: int, k_disk: float, k_tr: float, m: float) -> tl.RiemannTensor:
    gD = np.zeros((n, n), dtype=complex)
    gD[0, 0] = 1.0
    gH = np.eye(n, dtype=complex) - gD
    p = -k_disk / 4.0
    q = -k_tr
    r = m
    coeff = -(
        p * tl.hermitian_metric_product(gD, gD)
        + q * (tl.hermitian_metric_product(gD, gH) + tl.hermitian_metric_product(gH, gD))
        + r * tl.hermitian_metric_product(gH, gH)
    )
    return tl.riemann_from_hermitian(tl.HermitianCurvature(coeff, n))


def assemble_point_operator(cprof: CurvatureProfile, t: float) -> PointCurvatureOperator:
    """Curvature operator at distance t from the divisor."""
    if not (0.0 <= t <= cprof.profile.t_max):
        raise OutOfRange(f"t={t} outside [0, {cprof.profile.t_max}]")
    n = cprof.profile.params.n
    K_tr, K_disk, _lam, m, mu = cprof.at(t)
    return PointCurvatureOperator(
        n=n, t=float(t), k_disk=float(K_disk), mu=float(mu), m=float(m),
        tensor=_assemble(n, float(K_disk), float(K_tr), float(m)),
    )


def ball_reference_operator(n: int, t: float = 0.0) -> PointCurvatureOperator:
    """Operator of the ball metric (c = 1): constant blocks (-4, -1, 1)."""
    return PointCurvatureOperator(n=n, t=float(t), k_disk=-4.0, mu=-1.0, m=1.0,
                                  tensor=tl.constant_hsc_tensor(n, -4.0))


# ---------------------------------------------------------------------------
# Plane extremization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtremizeResult:
    min_K: float
    max_K: float
    argmax_plane: tuple  # (v, w) orthonormal spanning vectors
    argmin_plane: tuple

    def __iter__(self):
        return iter((self.min_K, self.max_K, self.argmax_plane))

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "sectional_extrema",
            "min_K": self.min_K,
            "max_K": self.max_K,
            "argmax_plane": {"v": list(self.argmax_plane[0]), "w": list(self.argmax_plane[1])},
            "argmin_plane": {"v": list(self.argmin_plane[0]), "w": list(self.argmin_plane[1])},
        }

    def dump_json(self, fh) -> None:
        json.dump(self.to_json_dict(), fh)


def _orthonormalize(V, W):
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    W = W - np.einsum("pa,pa->p", W, V, optimize=True)[:, None] * V
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    return V, W


def _plane_batch(R, V, W):
    return np.einsum("abcd,pa,pb,pc,pd->p", R, V, W, W, V, optimize=True)


def _refine_planes(R, V, W, sign, max_iter=300, gtol=1e-9):
    """Batched projected-gradient ascent (sign=+1) or descent (-1) of the
    sectional curvature over orthonormal pairs."""
    V, W = _orthonormalize(V.copy(), W.copy())
    lr = np.full(len(V), 0.1)
    K = _plane_batch(R, V, W)
    stalled = 0
    for _ in range(max_iter):
        gV = 2.0 * np.einsum("abcd,pb,pc,pd->pa", R, W, W, V, optimize=True)
        gW = 2.0 * np.einsum("abcd,pa,pb,pd->pc", R, V, W, V, optimize=True)
        # remove in-plane components (they do not move the plane)
        for G in (gV, gW):
            G -= np.einsum("pa,pa->p", G, V)[:, None] * V
            G -= np.einsum("pa,pa->p", G, W)[:, None] * W
        gnorm = np.sqrt(np.einsum("pa,pa->p", gV, gV) + np.einsum("pa,pa->p", gW, gW))
        if np.max(gnorm) <= gtol:
            break
        Vn, Wn = _orthonormalize(V + sign * lr[:, None] * gV, W + sign * lr[:, None] * gW)
        Kn = _plane_batch(R, Vn, Wn)
        improved = sign * (Kn - K) >= 0
        gain = float(np.max(sign * (Kn - K), initial=0.0, where=improved))
        V[improved], W[improved], K[improved] = Vn[improved], Wn[improved], Kn[improved]
        lr[~improved] *= 0.5
        lr[improved] *= 1.1
        # stop once no plane moves beyond round-off for a few iterations
        stalled = stalled + 1 if gain < 1e-13 else 0
        if stalled >= 3:
            break
    return V, W, K


def _candidate_planes(n):
    """Closed-form extremal candidates: disk plane, totally real planes,
    horizontal holomorphic and (n >= 3) horizontal real planes, mixed planes."""
    m = 2 * n
    e = np.eye(m)
    cands = [
        (e[0], e[1]),   # disk plane (xi, J xi)
        (e[0], e[2]),   # totally real (radial, horizontal-real)
        (e[1], e[2]),   # mixed (J xi, horizontal)
        (e[2], e[3]),   # horizontal holomorphic
    ]
    if n >= 3:
        cands.append((e[2], e[4]))  # horizontal totally real
    return cands


def extremize_sectional(op: PointCurvatureOperator, samples: int, seed: int) -> ExtremizeResult:
    """Extremize sectional curvature over 2-planes: random starts refined by
    projected gradient, seeded with the closed-form candidate planes."""
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    m = 2 * op.n
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((samples, m))
    W = rng.standard_normal((samples, m))
    for v, w in _candidate_planes(op.n):
        V = np.vstack([V, v])
        W = np.vstack([W, w])
    R = op.tensor.coeff
    Vx, Wx, Kx = _refine_planes(R, V, W, +1.0)
    Vm, Wm, Km = _refine_planes(R, V, W, -1.0)
    imax = int(np.argmax(Kx))
    imin = int(np.argmin(Km))
    return ExtremizeResult(
        min_K=float(Km[imin]), max_K=float(Kx[imax]),
        argmax_plane=(Vx[imax].copy(), Wx[imax].copy()),
        argmin_plane=(Vm[imin].copy(), Wm[imin].copy()),
    )


def _hsc_batch(R, V):
    J = tl.standard_complex_structure(V.shape[1])
    JV = V @ J.T
    num = np.einsum("abcd,pa,pb,pc,pd->p", R, V, JV, JV, V, optimize=True)
    return num / np.einsum("pa,pa->p", V, V, optimize=True) ** 2


def holomorphic_sectional_range(op: PointCurvatureOperator, samples: int, seed: int):
    """Extremize curvature over J-invariant planes span(v, Jv) only."""
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    m = 2 * op.n
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((samples, m))
    e = np.eye(m)
    mix = (e[0] + e[2]) / np.sqrt(2.0)
    V = np.vstack([V, e[0], e[2], mix])
    J = tl.standard_complex_structure(m)
    R = op.tensor.coeff

    def refine(sign):
        X = V / np.linalg.norm(V, axis=1, keepdims=True)
        lr = np.full(len(X), 0.1)
        H = _hsc_batch(R, X)
        stalled = 0
        for _ in range(300):
            JX = X @ J.T
            # gradient of R(v, Jv, Jv, v) on the unit sphere, slot by slot
            gA = np.einsum("abcd,pb,pc,pd->pa", R, JX, JX, X, optimize=True)
            gD = np.einsum("abcd,pa,pb,pc->pd", R, X, JX, JX, optimize=True)
            gB = np.einsum("abcd,pa,pc,pd->pb", R, X, JX, X, optimize=True) @ J
            gC = np.einsum("abcd,pa,pb,pd->pc", R, X, JX, X, optimize=True) @ J
            g = gA + gB + gC + gD - 4.0 * H[:, None] * X
            g -= np.einsum("pa,pa->p", g, X)[:, None] * X
            if np.max(np.linalg.norm(g, axis=1)) <= 1e-9:
                break
            Xn = X + sign * lr[:, None] * g
            Xn /= np.linalg.norm(Xn, axis=1, keepdims=True)
            Hn = _hsc_batch(R, Xn)
            improved = sign * (Hn - H) >= 0
            gain = float(np.max(sign * (Hn - H), initial=0.0, where=improved))
            X[improved], H[improved] = Xn[improved], Hn[improved]
            lr[~improved] *= 0.5
            lr[improved] *= 1.1
            stalled = stalled + 1 if gain < 1e-13 else 0
            if stalled >= 3:
                break
        return H

    Hmax = refine(+1.0)
    Hmin = refine(-1.0)
    return float(np.min(Hmin)), float(np.max(Hmax))
